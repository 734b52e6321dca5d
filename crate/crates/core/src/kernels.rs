//! Radial kernels on Z_{m+1}^d: functions of the Hamming weight only.
//!
//! A kernel is stored by its per-point values `c_0..c_d` (the value at `u`
//! is `c_{|u|}`). Convolution of two radial kernels goes through the
//! intersection numbers of the Hamming scheme, and Fourier symbols through
//! Krawtchouk polynomials, so neither needs the group to be materialized.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, invalid, Error, Result};
use crate::group::RadialSpec;
use crate::quadrature;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialKernel {
    spec: RadialSpec,
    weights: Vec<f64>,
}

impl RadialKernel {
    pub fn new(spec: impl Into<RadialSpec>, weights: Vec<f64>) -> Result<Self> {
        let spec = spec.into();
        if weights.len() != spec.d() + 1 {
            return Err(Error::Shape {
                expected: format!("{} weight coefficients", spec.d() + 1),
                found: weights.len().to_string(),
            });
        }
        Ok(RadialKernel { spec, weights })
    }

    /// The unit mass at the origin.
    pub fn delta(spec: impl Into<RadialSpec>) -> Self {
        let spec = spec.into();
        let mut weights = vec![0.0; spec.d() + 1];
        weights[0] = 1.0;
        RadialKernel { spec, weights }
    }

    pub fn spec(&self) -> &RadialSpec {
        &self.spec
    }

    /// Per-point value on the sphere of weight `k`.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total mass carried by each sphere, `c_k * |{|u| = k}|`.
    pub fn shell_masses(&self) -> Vec<f64> {
        self.weights
            .iter()
            .enumerate()
            .map(|(k, &c)| if c == 0.0 { 0.0 } else { c * self.spec.sphere_size_f64(k) })
            .collect()
    }

    pub fn mass(&self) -> f64 {
        self.shell_masses().iter().sum()
    }

    pub fn is_probability(&self) -> bool {
        self.weights.iter().all(|&c| c >= 0.0) && (self.mass() - 1.0).abs() <= 1e-12
    }

    /// Weights of Hamming-weight support.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(k, _)| k)
    }

    fn same_spec(&self, other: &RadialKernel) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> RadialKernel {
        RadialKernel {
            spec: self.spec,
            weights: self.weights.iter().map(|w| w * c).collect(),
        }
    }

    pub fn add(&self, other: &RadialKernel) -> Result<RadialKernel> {
        self.same_spec(other)?;
        Ok(RadialKernel {
            spec: self.spec,
            weights: self.weights.iter().zip(&other.weights).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Fourier symbol of a radial kernel as a function of the frequency weight:
/// `values[j] = sum_u g(u) xi^{-S·u}` for any `S` with `|S| = j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierProfile {
    spec: RadialSpec,
    values: Vec<f64>,
}

impl MultiplierProfile {
    pub fn new(spec: impl Into<RadialSpec>, values: Vec<f64>) -> Result<Self> {
        let spec = spec.into();
        if values.len() != spec.d() + 1 {
            return Err(Error::Shape {
                expected: format!("{} symbol values", spec.d() + 1),
                found: values.len().to_string(),
            });
        }
        Ok(MultiplierProfile { spec, values })
    }

    pub fn from_fn(spec: impl Into<RadialSpec>, f: impl Fn(usize) -> f64) -> Self {
        let spec = spec.into();
        MultiplierProfile {
            spec,
            values: (0..=spec.d()).map(f).collect(),
        }
    }

    pub fn spec(&self) -> &RadialSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn product(&self, other: &MultiplierProfile) -> Result<MultiplierProfile> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        Ok(MultiplierProfile {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }
}

pub fn sphere_kernel(spec: impl Into<RadialSpec>, k: usize) -> Result<RadialKernel> {
    let spec = spec.into();
    check_range("k", k as i64, 0, spec.d() as i64)?;
    let mut weights = vec![0.0; spec.d() + 1];
    weights[k] = 1.0 / spec.sphere_size_f64(k);
    Ok(RadialKernel { spec, weights })
}

/// The product measure `mu_eta^d(u) = (eta/m)^{|u|} (1-eta)^{d-|u|}`.
pub fn eta_kernel(spec: impl Into<RadialSpec>, eta: f64) -> Result<RadialKernel> {
    let spec = spec.into();
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1), got {eta}")));
    }
    let m = spec.m() as f64;
    let d = spec.d();
    let weights = (0..=d)
        .map(|k| (eta / m).powi(k as i32) * (1.0 - eta).powi((d - k) as i32))
        .collect();
    Ok(RadialKernel { spec, weights })
}

/// `(K+1)^{-1} sum_{k <= K} sigma_k`.
pub fn smoothed_local_kernel(spec: impl Into<RadialSpec>, big_k: usize) -> Result<RadialKernel> {
    let spec = spec.into();
    check_range("K", big_k as i64, 0, spec.d() as i64)?;
    let mut weights = vec![0.0; spec.d() + 1];
    for (k, w) in weights.iter_mut().enumerate().take(big_k + 1) {
        *w = 1.0 / (spec.sphere_size_f64(k) * (big_k + 1) as f64);
    }
    Ok(RadialKernel { spec, weights })
}

/// `(K+1)^{-1} sum_{k <= K} sigma_{d-k}`.
pub fn smoothed_distant_kernel(spec: impl Into<RadialSpec>, big_k: usize) -> Result<RadialKernel> {
    let spec = spec.into();
    check_range("K", big_k as i64, 0, spec.d() as i64)?;
    let d = spec.d();
    let mut weights = vec![0.0; d + 1];
    for k in 0..=big_k {
        weights[d - k] = 1.0 / (spec.sphere_size_f64(d - k) * (big_k + 1) as f64);
    }
    Ok(RadialKernel { spec, weights })
}

/// `m / (m+1)`, the endpoint where the symbol of `mu_eta` vanishes.
pub fn rho(spec: impl Into<RadialSpec>) -> f64 {
    let spec = spec.into();
    spec.m() as f64 / (spec.m() + 1) as f64
}

/// Above this dimension the averaged kernel uses adaptive quadrature
/// instead of exact rational integration.
pub const EXACT_AVERAGE_MAX_D: usize = 64;

/// Kernel of `J_P`: `(1/P) int_0^P mu_eta^d d eta`.
pub fn averaged_eta_kernel(spec: impl Into<RadialSpec>, p: f64) -> Result<RadialKernel> {
    let spec = spec.into();
    let rho = rho(spec);
    if !(p > 0.0 && p <= rho) {
        return Err(invalid("P", format!("must lie in (0, {rho}], got {p}")));
    }
    let weights = if spec.d() <= EXACT_AVERAGE_MAX_D {
        averaged_weights_exact(spec, p)
    } else {
        averaged_weights_quadrature(spec, p)
    };
    Ok(RadialKernel { spec, weights })
}

/// Binomial expansion of `(1-eta)^{d-k}` integrated term by term in exact
/// rational arithmetic; `P` is a dyadic rational so nothing is rounded
/// before the final conversion.
fn averaged_weights_exact(spec: RadialSpec, p: f64) -> Vec<f64> {
    let d = spec.d();
    let p_rat = BigRational::from_float(p).expect("finite P");
    let m_rat = BigRational::from_integer(BigInt::from(spec.m()));
    let mut p_pow = vec![BigRational::one()];
    for _ in 0..=d + 1 {
        let next = p_pow.last().unwrap() * &p_rat;
        p_pow.push(next);
    }
    let binom = pascal_rows(d);
    (0..=d)
        .map(|k| {
            let mut acc = BigRational::zero();
            for i in 0..=d - k {
                let e = k + i + 1;
                let term = BigRational::new(BigInt::from(binom[d - k][i].clone()), BigInt::from(e))
                    * &p_pow[e];
                if i % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            let mut m_pow = BigRational::one();
            for _ in 0..k {
                m_pow *= &m_rat;
            }
            let value = acc / (m_pow * &p_rat);
            rational_to_f64(&value)
        })
        .collect()
}

fn averaged_weights_quadrature(spec: RadialSpec, p: f64) -> Vec<f64> {
    let d = spec.d();
    let m = spec.m() as f64;
    (0..=d)
        .map(|k| {
            // relative accuracy: scale the tolerance by the integrand's size
            let integrand = |eta: f64| (eta / m).powi(k as i32) * (1.0 - eta).powi((d - k) as i32);
            let peak = (k as f64 / d as f64).min(p);
            let scale = integrand(peak).max(integrand(p)).max(integrand(0.0)).max(f64::MIN_POSITIVE);
            quadrature::adaptive_simpson(integrand, 0.0, p, 1e-13 * scale * p) / p
        })
        .collect()
}

pub(crate) fn rational_to_f64(x: &BigRational) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // fall back to a shifted quotient for extreme exponents
    let num = x.numer().abs();
    let den = x.denom().abs();
    let shift = num.bits() as i64 - den.bits() as i64;
    let scaled = if shift > 0 {
        BigRational::new(num, den << (shift as usize))
    } else {
        BigRational::new(num << ((-shift) as usize), den)
    };
    let v = scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift as i32);
    if x.is_negative() {
        -v
    } else {
        v
    }
}

fn pascal_rows(d: usize) -> Vec<Vec<BigUint>> {
    let mut rows: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
    for n in 1..=d {
        let prev = &rows[n - 1];
        let mut row = vec![BigUint::one(); n + 1];
        for i in 1..n {
            row[i] = &prev[i - 1] + &prev[i];
        }
        rows.push(row);
    }
    rows
}

fn powers(base: usize, max: usize) -> Vec<BigUint> {
    let mut out = vec![BigUint::one()];
    for _ in 0..max {
        let next = out.last().unwrap() * BigUint::from(base);
        out.push(next);
    }
    out
}

/// Hamming-scheme intersection numbers: `p[k][a][b]` counts the `v` with
/// `|v| = a` and `|u - v| = b` for any fixed `u` of weight `k`.
#[derive(Debug, Clone)]
pub struct IntersectionTable {
    spec: RadialSpec,
    exact: Vec<BigUint>,
    approx: Vec<f64>,
}

impl IntersectionTable {
    /// Coefficient extraction from `(1 + m x y)^{d-k} (x + y + (m-1) x y)^k`;
    /// `O(d^4)` big-integer operations, independent of the group order.
    pub fn new(spec: impl Into<RadialSpec>) -> Self {
        let spec = spec.into();
        let d = spec.d();
        let m = spec.m();
        let binom = pascal_rows(d);
        let m_pow = powers(m, d);
        let mm1_pow = powers(m - 1, d);
        let dim = d + 1;
        let mut exact = vec![BigUint::zero(); dim * dim * dim];
        for k in 0..=d {
            for i in 0..=d - k {
                let outer = &binom[d - k][i] * &m_pow[i];
                for c in 0..=k {
                    let with_c = &outer * &binom[k][c] * &mm1_pow[c];
                    if with_c.is_zero() {
                        continue;
                    }
                    for a1 in 0..=k - c {
                        let b1 = k - c - a1;
                        let coeff = &with_c * &binom[k - c][a1];
                        let a = i + a1 + c;
                        let b = i + b1 + c;
                        exact[(k * dim + a) * dim + b] += coeff;
                    }
                }
            }
        }
        let approx = exact.iter().map(|v| v.to_f64().unwrap_or(f64::INFINITY)).collect();
        IntersectionTable { spec, exact, approx }
    }

    pub fn spec(&self) -> &RadialSpec {
        &self.spec
    }

    pub fn get(&self, k: usize, a: usize, b: usize) -> &BigUint {
        let dim = self.spec.d() + 1;
        &self.exact[(k * dim + a) * dim + b]
    }

    pub fn get_f64(&self, k: usize, a: usize, b: usize) -> f64 {
        let dim = self.spec.d() + 1;
        self.approx[(k * dim + a) * dim + b]
    }

    /// `(g * h)_k = sum_{a,b} g_a h_b p[k][a][b]`.
    pub fn convolve(&self, g: &RadialKernel, h: &RadialKernel) -> Result<RadialKernel> {
        if g.spec != self.spec || h.spec != self.spec {
            return Err(Error::SpecMismatch);
        }
        let d = self.spec.d();
        let ga: Vec<usize> = g.support().collect();
        let hb: Vec<usize> = h.support().collect();
        let weights = (0..=d)
            .map(|k| {
                let mut acc = 0.0;
                for &a in &ga {
                    for &b in &hb {
                        let count = self.get_f64(k, a, b);
                        if count != 0.0 {
                            acc += g.weights[a] * h.weights[b] * count;
                        }
                    }
                }
                acc
            })
            .collect();
        Ok(RadialKernel { spec: self.spec, weights })
    }

    /// The same convolution in exact rational arithmetic.
    pub fn convolve_exact(&self, g: &[BigRational], h: &[BigRational]) -> Result<Vec<BigRational>> {
        let d = self.spec.d();
        if g.len() != d + 1 || h.len() != d + 1 {
            return Err(Error::Shape {
                expected: format!("{} weight coefficients", d + 1),
                found: format!("{} and {}", g.len(), h.len()),
            });
        }
        Ok((0..=d)
            .map(|k| {
                let mut acc = BigRational::zero();
                for a in 0..=d {
                    if g[a].is_zero() {
                        continue;
                    }
                    for b in 0..=d {
                        let count = self.get(k, a, b);
                        if h[b].is_zero() || count.is_zero() {
                            continue;
                        }
                        let c = BigRational::from_integer(BigInt::from(count.clone()));
                        acc += &g[a] * &h[b] * c;
                    }
                }
                acc
            })
            .collect())
    }
}

pub fn intersection_table(spec: impl Into<RadialSpec>) -> IntersectionTable {
    IntersectionTable::new(spec)
}

pub fn radial_convolve(g: &RadialKernel, h: &RadialKernel) -> Result<RadialKernel> {
    g.same_spec(h)?;
    IntersectionTable::new(g.spec).convolve(g, h)
}

/// Normalized Krawtchouk values `kappa_k(j) = K_k(j) / |{|u| = k}|`, where
/// `K_k(j)` is the character sum over the `k`-sphere at a frequency of weight
/// `j`: the coefficient of `z^k` in `(1 + m z)^{d-j} (1 - z)^j`.
#[derive(Debug, Clone)]
pub struct KrawtchoukTable {
    spec: RadialSpec,
    normalized: Vec<f64>,
}

impl KrawtchoukTable {
    pub fn new(spec: impl Into<RadialSpec>) -> Self {
        let spec = spec.into();
        let d = spec.d();
        let m = spec.m();
        let binom = pascal_rows(d);
        let m_pow = powers(m, d);
        let sizes: Vec<BigUint> = (0..=d).map(|k| &binom[d][k] * &m_pow[k]).collect();
        let mut normalized = vec![0.0; (d + 1) * (d + 1)];
        for j in 0..=d {
            // (1 + m z)^{d-j} times (1 - z)^j, exact
            let left: Vec<BigInt> = (0..=d - j)
                .map(|i| BigInt::from(&binom[d - j][i] * &m_pow[i]))
                .collect();
            let right: Vec<BigInt> = (0..=j)
                .map(|i| {
                    let b = BigInt::from(binom[j][i].clone());
                    if i % 2 == 0 {
                        b
                    } else {
                        -b
                    }
                })
                .collect();
            let mut poly = vec![BigInt::zero(); d + 1];
            for (i, l) in left.iter().enumerate() {
                for (r_i, r) in right.iter().enumerate() {
                    poly[i + r_i] += l * r;
                }
            }
            for k in 0..=d {
                let ratio = BigRational::new(poly[k].clone(), BigInt::from(sizes[k].clone()));
                normalized[k * (d + 1) + j] = rational_to_f64(&ratio);
            }
        }
        KrawtchoukTable { spec, normalized }
    }

    pub fn spec(&self) -> &RadialSpec {
        &self.spec
    }

    /// Symbol of `sigma_k` at frequency weight `j`.
    pub fn sphere_symbol(&self, k: usize, j: usize) -> f64 {
        self.normalized[k * (self.spec.d() + 1) + j]
    }

    pub fn sphere_profile(&self, k: usize) -> MultiplierProfile {
        MultiplierProfile::from_fn(self.spec, |j| self.sphere_symbol(k, j))
    }

    pub fn profile(&self, g: &RadialKernel) -> Result<MultiplierProfile> {
        if g.spec != self.spec {
            return Err(Error::SpecMismatch);
        }
        let masses = g.shell_masses();
        Ok(MultiplierProfile::from_fn(self.spec, |j| {
            masses
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(k, &w)| w * self.sphere_symbol(k, j))
                .sum()
        }))
    }
}

pub fn multiplier_profile(g: &RadialKernel) -> MultiplierProfile {
    KrawtchoukTable::new(g.spec).profile(g).expect("same spec")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub dominates: bool,
    /// Smallest `C` with `g <= C h` pointwise (infinite when none exists).
    pub min_ratio: f64,
}

pub fn domination_report(g: &RadialKernel, h: &RadialKernel) -> Result<DominationReport> {
    g.same_spec(h)?;
    let mut ratio = 0.0f64;
    for (&gk, &hk) in g.weights.iter().zip(&h.weights) {
        if gk > 0.0 {
            ratio = if hk > 0.0 { ratio.max(gk / hk) } else { f64::INFINITY };
        }
    }
    Ok(DominationReport {
        dominates: ratio.is_finite(),
        min_ratio: ratio,
    })
}

/// 64 log-spaced points in `(10^-3 rho, rho]`.
pub fn default_p_grid(spec: impl Into<RadialSpec>) -> Vec<f64> {
    let rho = rho(spec);
    let n = 64;
    (1..=n)
        .map(|i| {
            if i == n {
                rho
            } else {
                rho * 10f64.powf(-3.0 * (1.0 - i as f64 / n as f64))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationSearch {
    pub p_star: f64,
    pub c_star: f64,
}

/// Minimize over the grid the constant with which the averaged kernel of
/// `J_P` dominates the local smoothed kernel of order `K`.
pub fn best_domination_search(spec: impl Into<RadialSpec>, big_k: usize, p_grid: &[f64]) -> Result<DominationSearch> {
    let spec = spec.into();
    if p_grid.is_empty() {
        return Err(Error::Empty("P grid"));
    }
    let rho = rho(spec);
    if let Some(&bad) = p_grid.iter().find(|&&p| !(p > 0.0 && p <= rho)) {
        return Err(invalid("P grid", format!("{bad} outside (0, {rho}]")));
    }
    let local = smoothed_local_kernel(spec, big_k)?;
    let mut best = DominationSearch {
        p_star: p_grid[0],
        c_star: f64::INFINITY,
    };
    for &p in p_grid {
        let report = domination_report(&local, &averaged_eta_kernel(spec, p)?)?;
        if report.min_ratio < best.c_star {
            best = DominationSearch {
                p_star: p,
                c_star: report.min_ratio,
            };
        }
    }
    Ok(best)
}

/// The distant comparison kernels for a given `L`: the left side
/// `(floor(L/m)+1)^{-1} sum_{l <= L/m} sigma_{d-l}` and the right side
/// `(L+1)^{-1} sum_{l <= L} sigma_l * sigma_d`.
pub fn distant_comparison_kernels(
    table: &IntersectionTable,
    l_max: usize,
) -> Result<(RadialKernel, RadialKernel)> {
    let spec = *table.spec();
    let d = spec.d();
    check_range("L", l_max as i64, 0, d as i64)?;
    let steps = l_max / spec.m();
    let left = smoothed_distant_kernel(spec, steps)?;
    let sigma_d = sphere_kernel(spec, d)?;
    let mut right = RadialKernel::new(spec, vec![0.0; d + 1])?;
    for l in 0..=l_max {
        let conv = table.convolve(&sphere_kernel(spec, l)?, &sigma_d)?;
        right = right.add(&conv)?;
    }
    Ok((left, right.scaled(1.0 / (l_max + 1) as f64)))
}

/// Smallest `C_m` in the distant-kernel domination for one `L`.
pub fn distant_domination(table: &IntersectionTable, l_max: usize) -> Result<DominationReport> {
    let (left, right) = distant_comparison_kernels(table, l_max)?;
    domination_report(&left, &right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use num_traits::FromPrimitive;

    fn spec(m: usize, d: usize) -> RadialSpec {
        RadialSpec::new(m, d).unwrap()
    }

    fn group(m: usize, d: usize) -> GroupSpec {
        GroupSpec::new(m, d).unwrap()
    }

    // O((m+1)^{2d}) enumeration of the intersection numbers.
    fn brute_intersections(s: GroupSpec) -> Vec<u64> {
        let dim = s.d() + 1;
        let mut out = vec![0u64; dim * dim * dim];
        let mut seen = vec![false; dim];
        for u in 0..s.size() {
            let k = s.weight_of_index(u);
            if seen[k] {
                continue;
            }
            seen[k] = true;
            for v in 0..s.size() {
                let a = s.weight_of_index(v);
                let b = s.weight_of_index(s.sub_index(u, v));
                out[(k * dim + a) * dim + b] += 1;
            }
        }
        out
    }

    #[test]
    fn intersection_numbers_match_enumeration() {
        for (m, d) in [(1, 2), (1, 4), (2, 3), (2, 4), (3, 3)] {
            let table = intersection_table(spec(m, d));
            let brute = brute_intersections(group(m, d));
            let dim = d + 1;
            for k in 0..=d {
                for a in 0..=d {
                    for b in 0..=d {
                        assert_eq!(
                            table.get(k, a, b).to_u64().unwrap(),
                            brute[(k * dim + a) * dim + b],
                            "m={m} d={d} k={k} a={a} b={b}"
                        );
                    }
                }
            }
        }
        let t = intersection_table(spec(1, 2));
        assert_eq!(t.get(2, 1, 1).to_u64(), Some(2));
    }

    #[test]
    fn intersection_row_sums_and_origin() {
        let s = spec(2, 6);
        let t = intersection_table(s);
        for k in 0..=6 {
            for b in 0..=6 {
                let expect = if b == k { 1 } else { 0 };
                assert_eq!(t.get(k, 0, b).to_u64(), Some(expect));
            }
            for a in 0..=6 {
                let row: BigUint = (0..=6).map(|b| t.get(k, a, b).clone()).sum();
                assert_eq!(row.to_u128(), Some(s.sphere_size(a).unwrap()));
            }
        }
        // triple counting: |S_k| p[k][a][b] = |S_a| p[a][k][b']... symmetric form
        for k in 0..=6 {
            for a in 0..=6 {
                for b in 0..=6 {
                    let lhs = t.get(k, a, b) * BigUint::from(s.sphere_size(k).unwrap());
                    let rhs = t.get(a, k, b) * BigUint::from(s.sphere_size(a).unwrap());
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn sphere_and_eta_kernels() {
        let s = spec(1, 3);
        assert_eq!(sphere_kernel(s, 0).unwrap().weights(), &[1.0, 0.0, 0.0, 0.0]);
        assert!((sphere_kernel(s, 2).unwrap().weight(2) - 1.0 / 3.0).abs() < 1e-16);
        for k in 0..=3 {
            assert!((sphere_kernel(s, k).unwrap().mass() - 1.0).abs() < 1e-15);
        }
        assert!(sphere_kernel(s, 4).is_err());

        let e = eta_kernel(spec(1, 2), 0.5).unwrap();
        assert_eq!(e.weights(), &[0.25, 0.25, 0.25]);
        assert!((e.mass() - 1.0).abs() < 1e-15);
        for eta in [0.05, 0.3, 0.9] {
            assert!((eta_kernel(spec(3, 5), eta).unwrap().mass() - 1.0).abs() < 1e-12);
        }
        assert!(eta_kernel(s, 0.0).is_err());
        assert!(eta_kernel(s, 1.0).is_err());
    }

    #[test]
    fn smoothed_kernels() {
        let s = spec(1, 2);
        assert_eq!(smoothed_local_kernel(s, 0).unwrap(), RadialKernel::delta(s));
        assert_eq!(smoothed_local_kernel(s, 1).unwrap().weights(), &[0.5, 0.25, 0.0]);
        assert_eq!(smoothed_distant_kernel(s, 0).unwrap(), sphere_kernel(s, 2).unwrap());
        assert_eq!(smoothed_distant_kernel(s, 1).unwrap().weights(), &[0.0, 0.25, 0.5]);
        let s = spec(2, 7);
        for k in 0..=7 {
            assert!((smoothed_local_kernel(s, k).unwrap().mass() - 1.0).abs() < 1e-14);
            assert!((smoothed_distant_kernel(s, k).unwrap().mass() - 1.0).abs() < 1e-14);
        }
        assert!(smoothed_local_kernel(s, 8).is_err());
    }

    #[test]
    fn sphere_convolution_example() {
        let s = spec(1, 2);
        let sigma1 = sphere_kernel(s, 1).unwrap();
        let c = radial_convolve(&sigma1, &sigma1).unwrap();
        assert!((c.weight(0) - 0.5).abs() < 1e-15);
        assert!(c.weight(1).abs() < 1e-15);
        assert!((c.weight(2) - 0.5).abs() < 1e-15);
        let g = eta_kernel(spec(2, 4), 0.3).unwrap();
        let id = RadialKernel::delta(*g.spec());
        let out = radial_convolve(&g, &id).unwrap();
        for k in 0..=4 {
            assert!((out.weight(k) - g.weight(k)).abs() < 1e-15);
        }
        assert!(radial_convolve(&g, &sigma1).is_err());
    }

    #[test]
    fn exact_convolution_matches_pointwise_sum() {
        // rational pointwise convolution over the whole group
        for (m, d) in [(1, 4), (2, 3), (3, 2)] {
            let s = group(m, d);
            let g: Vec<BigRational> = (0..=d).map(|k| BigRational::new((k as i64 + 1).into(), 7.into())).collect();
            let h: Vec<BigRational> = (0..=d).map(|k| BigRational::new(((k * k) as i64 + 2).into(), 5.into())).collect();
            let t = intersection_table(s);
            let fast = t.convolve_exact(&g, &h).unwrap();
            let w = s.weight_table();
            for u in 0..s.size() {
                let mut acc = BigRational::zero();
                for v in 0..s.size() {
                    acc += &g[w[v]] * &h[w[s.sub_index(u, v)]];
                }
                assert_eq!(acc, fast[w[u]]);
            }
        }
    }

    #[test]
    fn profiles_of_basic_kernels() {
        let s = spec(1, 4);
        let delta = multiplier_profile(&RadialKernel::delta(s));
        assert!(delta.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let sigma1 = multiplier_profile(&sphere_kernel(s, 1).unwrap());
        for j in 0..=4 {
            let expect = (4.0 - 2.0 * j as f64) / 4.0;
            assert!((sigma1.at(j) - expect).abs() < 1e-15);
        }
        assert!((sigma1.at(1) - 0.5).abs() < 1e-15);
        for (m, d) in [(1, 8), (2, 5), (3, 4)] {
            let s = spec(m, d);
            for eta in [0.1, 0.3, 0.6] {
                let prof = multiplier_profile(&eta_kernel(s, eta).unwrap());
                let base = 1.0 - (m + 1) as f64 * eta / m as f64;
                for j in 0..=d {
                    assert!((prof.at(j) - base.powi(j as i32)).abs() < 1e-13);
                }
            }
        }
    }

    // Direct character sums at sampled frequencies; also checks that the
    // symbol does not depend on the chosen representative.
    #[test]
    fn profile_matches_character_sums() {
        use num_complex::Complex64;
        let s = group(2, 4);
        let g = RadialKernel::new(s, vec![0.3, -0.1, 0.05, 0.2, 0.01]).unwrap();
        let prof = multiplier_profile(&g);
        let w = s.weight_table();
        let roots = s.roots_of_unity();
        for freq in 0..s.size() {
            let sp = s.point_at(freq);
            let mut acc = Complex64::new(0.0, 0.0);
            for u in 0..s.size() {
                let e = s.pairing(&sp, &s.point_at(u));
                acc += roots[e].conj() * g.weight(w[u]);
            }
            assert!((acc.re - prof.at(w[freq])).abs() < 1e-12);
            assert!(acc.im.abs() < 1e-12);
        }
    }

    #[test]
    fn krawtchouk_reciprocity() {
        let s = spec(2, 9);
        let t = KrawtchoukTable::new(s);
        for k in 0..=9 {
            for j in 0..=9 {
                assert!((t.sphere_symbol(k, j) - t.sphere_symbol(j, k)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn averaged_kernel_values() {
        let s = spec(1, 1);
        let k = averaged_eta_kernel(s, 0.5).unwrap();
        assert!((k.weight(0) - 0.75).abs() < 1e-15);
        assert!((k.weight(1) - 0.25).abs() < 1e-15);
        for (m, d) in [(1, 8), (2, 5), (1, 40)] {
            let s = spec(m, d);
            let rho = rho(s);
            for p in [0.01, 0.2, rho] {
                let k = averaged_eta_kernel(s, p).unwrap();
                assert!((k.mass() - 1.0).abs() < 1e-9);
                let prof = multiplier_profile(&k);
                for j in 0..=d {
                    let closed = rho / (p * (j + 1) as f64) * (1.0 - (1.0 - p / rho).powi(j as i32 + 1));
                    assert!((prof.at(j) - closed).abs() < 1e-9, "m={m} d={d} P={p} j={j}");
                }
            }
        }
        assert!(averaged_eta_kernel(s, 0.6).is_err());
        assert!(averaged_eta_kernel(s, 0.0).is_err());
    }

    #[test]
    fn exact_and_quadrature_averages_agree() {
        let s = spec(2, 20);
        for p in [0.05, 0.4, 2.0 / 3.0] {
            let exact = averaged_weights_exact(s, p);
            let quad = averaged_weights_quadrature(s, p);
            for (a, b) in exact.iter().zip(&quad) {
                assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300) + 1e-300, "{a} vs {b}");
            }
        }
        let big = averaged_eta_kernel(spec(1, 80), 0.3).unwrap();
        assert!((big.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn domination_examples() {
        let s = spec(1, 2);
        let e = eta_kernel(s, 0.5).unwrap();
        assert_eq!(domination_report(&e, &e).unwrap().min_ratio, 1.0);
        let r = domination_report(&RadialKernel::delta(s), &e).unwrap();
        assert!((r.min_ratio - 4.0).abs() < 1e-15);
        let r = domination_report(&sphere_kernel(s, 1).unwrap(), &e).unwrap();
        assert!((r.min_ratio - 2.0).abs() < 1e-15);
        let r = domination_report(&e, &RadialKernel::delta(s)).unwrap();
        assert!(!r.dominates && r.min_ratio.is_infinite());
    }

    #[test]
    fn domination_search_basics() {
        let s = spec(1, 6);
        let grid = default_p_grid(s);
        assert_eq!(grid.len(), 64);
        assert!(grid[0] > 1e-3 * 0.5 && *grid.last().unwrap() == 0.5);
        let zero = best_domination_search(s, 0, &grid).unwrap();
        let expect = grid
            .iter()
            .map(|&p| 1.0 / averaged_eta_kernel(s, p).unwrap().weight(0))
            .fold(f64::INFINITY, f64::min);
        assert!((zero.c_star - expect).abs() < 1e-12);
        assert!(grid.iter().all(|&p| zero.c_star <= 1.0 / (1.0 - p).powi(6)));
        for k in 0..=6 {
            assert!(best_domination_search(s, k, &grid).unwrap().c_star >= 1.0);
        }
        assert!(best_domination_search(s, 1, &[]).is_err());
        assert!(best_domination_search(s, 1, &[0.7]).is_err());
    }

    #[test]
    fn distant_comparison_is_finite() {
        for (m, d) in [(1, 6), (2, 6), (1, 9)] {
            let s = spec(m, d);
            let t = intersection_table(s);
            let l_top = m * d / (m + 1);
            for l in 0..=l_top {
                let (left, right) = distant_comparison_kernels(&t, l).unwrap();
                assert!((left.mass() - 1.0).abs() < 1e-12);
                assert!((right.mass() - 1.0).abs() < 1e-12);
                assert!(distant_domination(&t, l).unwrap().dominates);
            }
        }
    }

    #[test]
    fn rational_conversion_extremes() {
        let tiny = BigRational::new(BigInt::one(), BigInt::one() << 1100);
        assert_eq!(rational_to_f64(&tiny), 0.0);
        let third = BigRational::new(BigInt::from_i64(1).unwrap(), BigInt::from_i64(3).unwrap());
        assert!((rational_to_f64(&third) - 1.0 / 3.0).abs() < 1e-17);
    }
}
