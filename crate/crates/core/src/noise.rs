//! The noise semigroup `N_t`, its convolution form with `mu_eta^d`, and the
//! time averages `H_T` and `J_P`.

use serde::Serialize;

use crate::convolution::{apply_multiplier, convolve};
use crate::error::{invalid, Result};
use crate::field::OperatorField;
use crate::group::RadialSpec;
use crate::kernels::{averaged_eta_kernel, eta_kernel, rho, MultiplierProfile};
use crate::quadrature::gauss_kronrod;

/// `e^{-t j}`.
pub fn noise_symbol(spec: impl Into<RadialSpec>, t: f64) -> Result<MultiplierProfile> {
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be nonnegative, got {t}")));
    }
    Ok(MultiplierProfile::from_fn(spec, |j| (-t * j as f64).exp()))
}

pub fn noise_operator(f: &OperatorField, t: f64) -> Result<OperatorField> {
    apply_multiplier(&noise_symbol(*f.spec(), t)?, f)
}

/// `(1 - (m+1) eta / m)^j`, the symbol of `mu_eta^d`.
pub fn eta_symbol(spec: impl Into<RadialSpec>, eta: f64) -> Result<MultiplierProfile> {
    let spec = spec.into();
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1), got {eta}")));
    }
    let base = 1.0 - (spec.m() + 1) as f64 * eta / spec.m() as f64;
    Ok(MultiplierProfile::from_fn(spec, |j| base.powi(j as i32)))
}

/// `f * mu_eta^d` by convolution.
pub fn eta_noise(f: &OperatorField, eta: f64) -> Result<OperatorField> {
    convolve(&eta_kernel(*f.spec(), eta)?, f)
}

/// The same operator through its symbol.
pub fn eta_noise_multiplier(f: &OperatorField, eta: f64) -> Result<OperatorField> {
    apply_multiplier(&eta_symbol(*f.spec(), eta)?, f)
}

/// `(1 - e^{-T j}) / (T j)`, with value 1 at `j = 0`.
pub fn ergodic_h_value(big_t: f64, j: usize) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let x = big_t * j as f64;
    -(-x).exp_m1() / x
}

pub fn ergodic_h_symbol(spec: impl Into<RadialSpec>, big_t: f64) -> Result<MultiplierProfile> {
    if !(big_t > 0.0) {
        return Err(invalid("T", format!("must be positive, got {big_t}")));
    }
    Ok(MultiplierProfile::from_fn(spec, |j| ergodic_h_value(big_t, j)))
}

/// `H_T f = T^{-1} int_0^T N_t f dt`.
pub fn ergodic_h(f: &OperatorField, big_t: f64) -> Result<OperatorField> {
    apply_multiplier(&ergodic_h_symbol(*f.spec(), big_t)?, f)
}

/// `rho / (P (j+1)) (1 - (1 - P/rho)^{j+1})`.
pub fn ergodic_j_value(rho: f64, p: f64, j: usize) -> f64 {
    let q = 1.0 - p / rho;
    let e = (j + 1) as f64;
    // 1 - q^{j+1} without cancellation for q near 1
    let one_minus = if q > 0.0 { -(e * q.ln()).exp_m1() } else { 1.0 };
    rho / (p * e) * one_minus
}

fn check_p_range(spec: RadialSpec, p: f64) -> Result<f64> {
    let rho = rho(spec);
    if !(p > 0.0 && p <= rho) {
        return Err(invalid("P", format!("must lie in (0, {rho}], got {p}")));
    }
    Ok(rho)
}

pub fn ergodic_j_symbol(spec: impl Into<RadialSpec>, p: f64) -> Result<MultiplierProfile> {
    let spec = spec.into();
    let rho = check_p_range(spec, p)?;
    Ok(MultiplierProfile::from_fn(spec, |j| ergodic_j_value(rho, p, j)))
}

/// `J_P f = P^{-1} int_0^P (f * mu_eta^d) d eta`, closed-form symbol.
pub fn ergodic_j(f: &OperatorField, p: f64) -> Result<OperatorField> {
    apply_multiplier(&ergodic_j_symbol(*f.spec(), p)?, f)
}

/// `J_P` by convolution with the averaged kernel.
pub fn ergodic_j_kernel(f: &OperatorField, p: f64) -> Result<OperatorField> {
    convolve(&averaged_eta_kernel(*f.spec(), p)?, f)
}

/// Where the density part is cut off when `P = rho` and `T_star` is infinite.
pub const NU_TRUNCATION: f64 = 60.0;

/// The mixing measure with `J_P = int H_T d nu_P(T)`: density
/// `(rho/P) T e^{-T}` on `(0, T_star)` and an atom at `T_star = -ln(1 - P/rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NuPMeasure {
    pub p: f64,
    pub rho: f64,
    pub t_star: f64,
    pub atom_mass: f64,
}

impl NuPMeasure {
    pub fn new(spec: impl Into<RadialSpec>, p: f64) -> Result<Self> {
        let rho = check_p_range(spec.into(), p)?;
        let q = 1.0 - p / rho;
        let (t_star, atom_mass) = if q <= 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            let t_star = -(-p / rho).ln_1p();
            (t_star, (rho / p - 1.0) * t_star)
        };
        Ok(NuPMeasure { p, rho, t_star, atom_mass })
    }

    pub fn density(&self, big_t: f64) -> f64 {
        if big_t <= 0.0 || big_t >= self.t_star {
            0.0
        } else {
            self.rho / self.p * big_t * (-big_t).exp()
        }
    }

    fn upper(&self) -> f64 {
        self.t_star.min(NU_TRUNCATION)
    }

    /// `int g d nu_P`, density part by adaptive quadrature.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let continuous = gauss_kronrod(|t| self.density(t) * g(t), 0.0, self.upper(), 1e-13).value;
        let atom = if self.atom_mass > 0.0 { self.atom_mass * g(self.t_star) } else { 0.0 };
        continuous + atom
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NuIdentityReport {
    pub m: usize,
    pub p: f64,
    pub j_max: usize,
    pub mass: f64,
    pub max_abs_error: f64,
    pub pass: bool,
}

/// Compare the `J_P` symbol with `int (1 - e^{-Tj})/(Tj) d nu_P(T)` for `j <= j_max`.
pub fn verify_nu_identity(spec: impl Into<RadialSpec>, p: f64, j_max: usize) -> Result<NuIdentityReport> {
    let spec = spec.into();
    let nu = NuPMeasure::new(spec, p)?;
    let mass = nu.mass();
    let mut max_abs_error = 0.0f64;
    for j in 0..=j_max {
        let mixed = nu.integrate(|t| ergodic_h_value(t, j));
        let closed = ergodic_j_value(nu.rho, p, j);
        max_abs_error = max_abs_error.max((mixed - closed).abs());
    }
    Ok(NuIdentityReport {
        m: spec.m(),
        p,
        j_max,
        mass,
        max_abs_error,
        pass: (mass - 1.0).abs() <= 1e-9 && max_abs_error <= 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::tests::random_field;
    use crate::group::GroupSpec;
    use crate::matrix::identity;

    fn rel(a: &OperatorField, b: &OperatorField) -> f64 {
        a.sub(b).unwrap().l2_norm() / b.l2_norm().max(1e-300)
    }

    #[test]
    fn semigroup_and_limits() {
        let spec = GroupSpec::new(2, 4).unwrap();
        let f = random_field(spec, 2, 31);
        assert!(rel(&noise_operator(&f, 0.0).unwrap(), &f) < 1e-12);
        let twice = noise_operator(&noise_operator(&f, 1.0).unwrap(), 1.0).unwrap();
        assert!(rel(&twice, &noise_operator(&f, 2.0).unwrap()) < 1e-10);
        let far = noise_operator(&f, 80.0).unwrap();
        let mean = eta_noise_multiplier(&f, 2.0 / 3.0).unwrap();
        assert!(rel(&far, &mean) < 1e-10);
        assert!(noise_operator(&f, -1.0).is_err());
    }

    #[test]
    fn eta_routes_agree() {
        for (m, d) in [(1, 6), (2, 4)] {
            let spec = GroupSpec::new(m, d).unwrap();
            let f = random_field(spec, 2, 7);
            for eta in [0.1, 0.3, m as f64 / (m + 1) as f64, 0.9] {
                let a = eta_noise(&f, eta).unwrap();
                let b = eta_noise_multiplier(&f, eta).unwrap();
                assert!(rel(&a, &b) < 1e-10, "m={m} eta={eta}");
            }
            let small = eta_noise(&f, 1e-9).unwrap();
            assert!(rel(&small, &f) < 1e-7);
        }
    }

    #[test]
    fn h_symbol_against_trapezoid() {
        let big_t = 2.0;
        let nodes = 200;
        for j in 0..=6 {
            let h = big_t / nodes as f64;
            let mut acc = 0.0;
            for i in 0..=nodes {
                let w = if i == 0 || i == nodes { 0.5 } else { 1.0 };
                acc += w * (-(i as f64 * h) * j as f64).exp();
            }
            let trap = acc * h / big_t;
            assert!((trap - ergodic_h_value(big_t, j)).abs() < 1e-4 * (j * j).max(1) as f64);
        }
        assert!((ergodic_h_value(1e-12, 3) - 1.0).abs() < 1e-11);
        assert!(ergodic_h_symbol(RadialSpec::new(1, 3).unwrap(), 0.0).is_err());
    }

    #[test]
    fn h_field_matches_time_average() {
        // Gauss-Kronrod in t of the noise multiplier, compared entrywise
        let spec = GroupSpec::new(1, 4).unwrap();
        let big_t = 2.0;
        let sym = ergodic_h_symbol(spec, big_t).unwrap();
        for j in 0..=4 {
            let avg = gauss_kronrod(|t| (-t * j as f64).exp(), 0.0, big_t, 1e-14).value / big_t;
            assert!((avg - sym.at(j)).abs() < 1e-12);
        }
    }

    #[test]
    fn j_routes_agree_and_unital() {
        for (m, d) in [(1, 5), (2, 3)] {
            let spec = GroupSpec::new(m, d).unwrap();
            let f = random_field(spec, 2, 3);
            for p in [0.05, 0.25, m as f64 / (m + 1) as f64] {
                assert!(rel(&ergodic_j(&f, p).unwrap(), &ergodic_j_kernel(&f, p).unwrap()) < 1e-9);
            }
            let c = OperatorField::constant(spec, &identity(2));
            assert!(rel(&ergodic_j(&c, 0.3).unwrap(), &c) < 1e-12);
        }
        assert!(ergodic_j_symbol(RadialSpec::new(1, 3).unwrap(), 0.6).is_err());
        assert_eq!(ergodic_j_value(0.5, 0.2, 0), 1.0);
    }

    #[test]
    fn nu_measure() {
        for m in [1, 2] {
            let spec = RadialSpec::new(m, 4).unwrap();
            let rho = m as f64 / (m + 1) as f64;
            for p in [0.1, 0.25, 0.3, rho] {
                let report = verify_nu_identity(spec, p, 32).unwrap();
                assert!((report.mass - 1.0).abs() <= 1e-9, "m={m} P={p} mass={}", report.mass);
                assert!(report.max_abs_error <= 1e-6, "m={m} P={p} err={}", report.max_abs_error);
                assert!(report.pass);
            }
        }
        let nu = NuPMeasure::new(RadialSpec::new(1, 2).unwrap(), 0.5).unwrap();
        assert!(nu.t_star.is_infinite() && nu.atom_mass == 0.0);
        let nu = NuPMeasure::new(RadialSpec::new(1, 2).unwrap(), 0.25).unwrap();
        assert!((nu.t_star - 2f64.ln()).abs() < 1e-15);
        assert!((nu.atom_mass - 2f64.ln()).abs() < 1e-15);
    }
}
