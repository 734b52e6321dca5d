//! Trace-preserving actions of Z_{m+1}^d on matrix algebras by commuting
//! unitaries, their ergodic sphere averages, and transference to fields.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::convolution::sphere_means;
use crate::error::{check_range, invalid, Error, Result};
use crate::field::{check_memory, OperatorField};
use crate::group::{GroupPoint, GroupSpec};
use crate::matrix::{self, haar_unitary, identity, CMatrix};
use crate::norms::{linf_col_norm, linf_norm_field, linf_norm_positive, PositiveSequence};

/// `u -> Ad(U^u)` with `U^u = U_1^{u_1} ... U_d^{u_d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutingUnitaryAction {
    spec: GroupSpec,
    n: usize,
    unitaries: Vec<CMatrix>,
    /// `powers[i][j] = U_i^j` for `j <= m`.
    powers: Vec<Vec<CMatrix>>,
}

fn power_table(u: &CMatrix, m: usize) -> Vec<CMatrix> {
    let mut out = vec![identity(u.nrows())];
    for j in 1..=m {
        let next = &out[j - 1] * u;
        out.push(next);
    }
    out
}

fn check_square(x: &CMatrix, n: usize) -> Result<()> {
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::Shape {
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", x.nrows(), x.ncols()),
        });
    }
    Ok(())
}

/// Sum in a fixed binary tree so parallel and serial runs agree bit for bit.
fn pairwise_sum(mut xs: Vec<CMatrix>, n: usize) -> CMatrix {
    if xs.is_empty() {
        return matrix::zeros(n);
    }
    while xs.len() > 1 {
        xs = xs
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => a + b,
                [a] => a.clone(),
                _ => unreachable!(),
            })
            .collect();
    }
    xs.pop().expect("nonempty")
}

impl CommutingUnitaryAction {
    /// `U_i = V D_i V*` with `V` Haar and `D_i` diagonal of `(m+1)`-th roots of unity.
    pub fn random(spec: GroupSpec, n: usize, seed: u64) -> Result<Self> {
        check_range("n", n as i64, 1, i64::MAX)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = haar_unitary(n, &mut rng);
        let roots = spec.roots_of_unity();
        let unitaries = (0..spec.d())
            .map(|_| {
                let diag: Vec<Complex64> = (0..n).map(|_| roots[rng.random_range(0..=spec.m())]).collect();
                let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
                &v * d * v.adjoint()
            })
            .collect();
        Self::build(spec, n, unitaries)
    }

    /// Every `U_i = I`.
    pub fn trivial(spec: GroupSpec, n: usize) -> Self {
        Self::build(spec, n, vec![identity(n); spec.d()]).expect("identity is admissible")
    }

    /// Checks unitarity, pairwise commutation and `U_i^{m+1} = I`.
    pub fn from_unitaries(spec: GroupSpec, unitaries: Vec<CMatrix>) -> Result<Self> {
        if unitaries.len() != spec.d() {
            return Err(Error::Shape {
                expected: format!("{} unitaries", spec.d()),
                found: unitaries.len().to_string(),
            });
        }
        let n = unitaries.first().map_or(1, |u| u.nrows());
        let id = identity(n);
        for u in &unitaries {
            check_square(u, n)?;
            if (u.adjoint() * u - &id).norm() > 1e-10 {
                return Err(invalid("unitaries", "not unitary"));
            }
        }
        for (i, a) in unitaries.iter().enumerate() {
            for b in &unitaries[i + 1..] {
                if (a * b - b * a).norm() > 1e-12 {
                    return Err(Error::NonCommuting);
                }
            }
        }
        let action = Self::build(spec, n, unitaries)?;
        for (table, u) in action.powers.iter().zip(&action.unitaries) {
            if (&table[spec.m()] * u - &id).norm() > 1e-10 {
                return Err(invalid("unitaries", format!("order does not divide {}", spec.radix())));
            }
        }
        Ok(action)
    }

    fn build(spec: GroupSpec, n: usize, unitaries: Vec<CMatrix>) -> Result<Self> {
        check_memory(&spec, n)?;
        let powers = unitaries.iter().map(|u| power_table(u, spec.m())).collect();
        Ok(CommutingUnitaryAction { spec, n, unitaries, powers })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    /// `U^u` for the point with mixed-radix index `index`.
    pub fn unitary_at(&self, index: usize) -> CMatrix {
        let point = self.spec.point_at(index);
        let mut out = identity(self.n);
        for (i, &c) in point.coords().iter().enumerate() {
            if c != 0 {
                out = out * &self.powers[i][c as usize];
            }
        }
        out
    }

    pub fn unitary(&self, u: &GroupPoint) -> CMatrix {
        self.unitary_at(self.spec.index_of(u))
    }

    /// `alpha_u(x) = U^u x (U^u)*`.
    pub fn act(&self, u: &GroupPoint, x: &CMatrix) -> Result<CMatrix> {
        self.act_index(self.spec.index_of(u), x)
    }

    pub fn act_index(&self, index: usize, x: &CMatrix) -> Result<CMatrix> {
        check_square(x, self.n)?;
        let w = self.unitary_at(index);
        Ok(&w * x * w.adjoint())
    }

    /// `M_k x`, the average of `alpha_u x` over the sphere `|u| = k`.
    pub fn ergodic_mk(&self, x: &CMatrix, k: usize) -> Result<CMatrix> {
        check_range("k", k as i64, 0, self.spec.d() as i64)?;
        check_square(x, self.n)?;
        let points = self.spec.sphere_indices(k)?;
        let terms: Vec<CMatrix> = points
            .par_iter()
            .map(|&u| {
                let w = self.unitary_at(u);
                &w * x * w.adjoint()
            })
            .collect();
        let count = points.len() as f64;
        Ok(pairwise_sum(terms, self.n) / Complex64::new(count, 0.0))
    }

    /// `(M_1 x, ..., M_d x)`.
    pub fn ergodic_family(&self, x: &CMatrix) -> Result<Vec<CMatrix>> {
        (1..=self.spec.d()).map(|k| self.ergodic_mk(x, k)).collect()
    }
}

/// `L_1, ..., L_d` as maps, composed one generator at a time.
#[derive(Debug, Clone)]
pub struct CommutingAutomorphismFamily {
    spec: GroupSpec,
    generators: Vec<CMatrix>,
}

impl CommutingAutomorphismFamily {
    pub fn from_action(action: &CommutingUnitaryAction) -> Self {
        CommutingAutomorphismFamily {
            spec: action.spec,
            generators: action.unitaries.clone(),
        }
    }

    /// `L_i x = U_i x U_i*`.
    pub fn apply(&self, i: usize, x: &CMatrix) -> CMatrix {
        let u = &self.generators[i];
        u * x * u.adjoint()
    }

    /// `L^n x = L_1^{n_1} ... L_d^{n_d} x`.
    pub fn apply_multi(&self, exponents: &[u32], x: &CMatrix) -> CMatrix {
        let mut out = x.clone();
        for (i, &e) in exponents.iter().enumerate().rev() {
            for _ in 0..e {
                out = self.apply(i, &out);
            }
        }
        out
    }

    /// `N_k x`, the average of `L^n x` over `|n| = k`.
    pub fn multi_average_nk(&self, x: &CMatrix, k: usize) -> Result<CMatrix> {
        check_range("k", k as i64, 0, self.spec.d() as i64)?;
        let n = self.generators.first().map_or(x.nrows(), |g| g.nrows());
        check_square(x, n)?;
        let terms: Vec<CMatrix> = self
            .spec
            .enumerate_sphere(k)?
            .map(|p| self.apply_multi(p.coords(), x))
            .collect();
        let count = terms.len() as f64;
        Ok(pairwise_sum(terms, n) / Complex64::new(count, 0.0))
    }
}

/// `f(s) = alpha_{-s} x`.
pub fn transfer_field(action: &CommutingUnitaryAction, x: &CMatrix) -> Result<OperatorField> {
    check_square(x, action.n)?;
    let spec = action.spec;
    let values: Vec<CMatrix> = (0..spec.size())
        .into_par_iter()
        .map(|s| action.act_index(spec.neg_index(s), x).expect("shape checked"))
        .collect();
    Ok(OperatorField::from_fn(spec, action.n, |s| values[s].clone()))
}

/// `max_{s,k} |alpha_{-s}(M_k x) - (T_k f)(s)| / |x|` in Frobenius norm.
pub fn intertwining_error(action: &CommutingUnitaryAction, x: &CMatrix) -> Result<f64> {
    let f = transfer_field(action, x)?;
    let means = sphere_means(&f);
    let spec = action.spec;
    let scale = matrix::frobenius_norm(x).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for (k, tk) in means.iter().enumerate() {
        let mk = action.ergodic_mk(x, k)?;
        for s in 0..spec.size() {
            let lhs = action.act_index(spec.neg_index(s), &mk)?;
            worst = worst.max((lhs - tk.get(s)).norm() / scale);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferenceReport {
    pub p: f64,
    /// `||(M_k x)_k||_{L_p(l_inf)}`.
    pub lhs: f64,
    /// `||(T_k f)_k||_{L_p(l_inf)}` over the group with the counting trace.
    pub rhs: f64,
    /// `|G|^{-1/p}`.
    pub factor: f64,
    pub pass: bool,
    /// A solver stopped short of its gap target; `pass` is then not a verdict.
    pub inconclusive: bool,
}

pub const TRANSFERENCE_SLACK: f64 = 1e-6;

/// Compare `||(M_k x)||` with `|G|^{-1/p} ||(T_k f)||` for positive `x`.
pub fn transference_audit(action: &CommutingUnitaryAction, x: &CMatrix, p: f64) -> Result<TransferenceReport> {
    if !(p > 1.0) {
        return Err(invalid("p", format!("must lie in (1, inf], got {p}")));
    }
    check_square(x, action.n)?;
    if !matrix::is_psd(x, 1e-10) {
        return Err(invalid("x", "must be positive semidefinite"));
    }
    let seq = PositiveSequence::with_tolerance(action.ergodic_family(x)?, 1e-9)?;
    let lhs = linf_norm_positive(&seq, p)?;
    let f = transfer_field(action, x)?;
    let means = sphere_means(&f);
    let rhs = linf_norm_field(&means[1..], p)?;
    let size = action.spec.size() as f64;
    let factor = if p.is_infinite() { 1.0 } else { size.powf(-1.0 / p) };
    Ok(TransferenceReport {
        p,
        lhs: lhs.primal_value,
        rhs: rhs.primal_value,
        factor,
        pass: lhs.primal_value <= factor * rhs.primal_value + TRANSFERENCE_SLACK,
        inconclusive: !(lhs.converged && rhs.converged),
    })
}

/// Smallest eigenvalue of `M_k(x* x) - M_k(x)* M_k(x)`.
pub fn kadison_schwarz_gap(action: &CommutingUnitaryAction, x: &CMatrix, k: usize) -> Result<f64> {
    let mx = action.ergodic_mk(x, k)?;
    let mxx = action.ergodic_mk(&(x.adjoint() * x), k)?;
    Ok(matrix::min_eigenvalue(&matrix::hermitian_part(&(mxx - mx.adjoint() * &mx))))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnAuditReport {
    pub p: f64,
    /// `||(M_k x)_k||_{L_p(l_inf^c)}`.
    pub column_norm: f64,
    pub x_norm: f64,
    pub ratio: f64,
    /// `|column_norm^2 - ||(M_k(x)* M_k(x))||_{p/2}|`.
    pub consistency_gap: f64,
    /// `max_k ||y_k||_inf` for `M_k x = y_k b^{1/2}`.
    pub max_factor_norm: f64,
    /// `max_k |y_k b^{1/2} - M_k x|_F / |x|_F`.
    pub factor_residual: f64,
    pub factorization_pass: bool,
    pub converged: bool,
}

/// Column-norm constant of `(M_k x)_k` and the factorization through the
/// `l_inf` witness of `(M_k(x* x))_k`.
pub fn column_norm_audit(action: &CommutingUnitaryAction, x: &CMatrix, p: f64) -> Result<ColumnAuditReport> {
    if !(p > 2.0) {
        return Err(invalid("p", format!("must exceed 2, got {p}")));
    }
    let mk = action.ergodic_family(x)?;
    let column = linf_col_norm(&mk, p)?;
    let x_norm = matrix::schatten_norm(x, p)?;

    let squares: Vec<CMatrix> = mk.iter().map(|y| matrix::hermitian_part(&(y.adjoint() * y))).collect();
    let direct = linf_norm_positive(&PositiveSequence::with_tolerance(squares, 1e-9)?, p / 2.0)?;

    let xx = x.adjoint() * x;
    let upper: Vec<CMatrix> = (1..=action.spec.d())
        .map(|k| action.ergodic_mk(&xx, k).map(|y| matrix::hermitian_part(&y)))
        .collect::<Result<_>>()?;
    let cert = linf_norm_positive(&PositiveSequence::with_tolerance(upper, 1e-9)?, p / 2.0)?;
    let b = matrix::hermitian_part(&cert.witness_a);
    let top = matrix::max_eigenvalue(&b).max(f64::MIN_POSITIVE);
    let cut = 1e-12 * top;
    let root = matrix::hermitian_apply(&b, |v| v.max(0.0).sqrt());
    let root_pinv = matrix::hermitian_apply(&b, |v| if v > cut { v.sqrt().recip() } else { 0.0 });
    let scale = matrix::frobenius_norm(x).max(f64::MIN_POSITIVE);
    let mut max_factor_norm = 0.0f64;
    let mut factor_residual = 0.0f64;
    for y in &mk {
        let factor = y * &root_pinv;
        let top_sv = matrix::singular_values(&factor).into_iter().fold(0.0, f64::max);
        max_factor_norm = max_factor_norm.max(top_sv);
        factor_residual = factor_residual.max((&factor * &root - y).norm() / scale);
    }
    Ok(ColumnAuditReport {
        p,
        column_norm: column.value,
        x_norm,
        ratio: if x_norm > 0.0 { column.value / x_norm } else { 0.0 },
        consistency_gap: (column.value.powi(2) - direct.primal_value).abs(),
        max_factor_norm,
        factor_residual,
        factorization_pass: max_factor_norm <= 1.0 + 1e-6 && factor_residual <= 1e-8,
        converged: column.squared.converged && cert.converged,
    })
}
