//! Cesàro coefficients `A_n^alpha` of complex order and the companion
//! falling factorials `B_k^t`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_range, invalid, Result};

/// Deliberate corruption of one recurrence step, for exercising the audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecurrenceFault {
    pub step: usize,
    pub factor: f64,
}

impl Default for RecurrenceFault {
    fn default() -> Self {
        RecurrenceFault { step: 2, factor: 1.001 }
    }
}

/// `A_0^alpha .. A_N^alpha` from `A_n = A_{n-1} (alpha + n) / n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CesaroTable {
    alpha: Complex64,
    values: Vec<Complex64>,
}

impl CesaroTable {
    pub fn new(alpha: Complex64, n_max: usize) -> Self {
        Self::build(alpha, n_max, None)
    }

    pub fn real(alpha: f64, n_max: usize) -> Self {
        Self::new(Complex64::new(alpha, 0.0), n_max)
    }

    pub fn with_fault(alpha: Complex64, n_max: usize, fault: RecurrenceFault) -> Self {
        Self::build(alpha, n_max, Some(fault))
    }

    pub(crate) fn build(alpha: Complex64, n_max: usize, fault: Option<RecurrenceFault>) -> Self {
        let mut values = Vec::with_capacity(n_max + 1);
        values.push(Complex64::new(1.0, 0.0));
        for n in 1..=n_max {
            let mut factor = (alpha + n as f64) / n as f64;
            if let Some(f) = fault {
                if f.step == n {
                    factor *= f.factor;
                }
            }
            values.push(values[n - 1] * factor);
        }
        CesaroTable { alpha, values }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, n: usize) -> Complex64 {
        self.values[n]
    }

    /// `A_n` with `A_n = 0` for negative `n`.
    pub fn at(&self, n: i64) -> Complex64 {
        if n < 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[n as usize]
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// `(alpha+1)(alpha+2)...(alpha+n) / n!`, straight from the product.
pub fn cesaro_product(alpha: Complex64, n: usize) -> Complex64 {
    let mut num = Complex64::new(1.0, 0.0);
    let mut den = 1.0;
    for i in 1..=n {
        num *= alpha + i as f64;
        den *= i as f64;
    }
    num / den
}

/// `k (k-1) ... (k-t+1)`, zero when `t > k`.
pub fn falling_factorial(k: usize, t: usize) -> f64 {
    if t > k {
        return 0.0;
    }
    (0..t).map(|i| (k - i) as f64).product()
}

/// `(n+1)^{-alpha-1}` on the principal branch.
pub fn cesaro_scale(alpha: Complex64, n: usize) -> Complex64 {
    ((-alpha - 1.0) * ((n + 1) as f64).ln()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CesaroBoundEstimates {
    /// `max_n A_n^beta / (n+1)^beta`.
    pub upper: f64,
    /// `max_n (n+1)^beta / A_n^beta`.
    pub lower: f64,
    /// `max_n |A_n^{beta+i gamma}| / |A_n^beta|`.
    pub complex: f64,
    /// `max_n |(1+n)^beta A_n^{-beta+i gamma}| / e^{3 gamma^2}`, integer `beta` only.
    pub negative: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CesaroBoundAudit {
    pub beta: f64,
    pub gamma: f64,
    pub n_max: usize,
    pub estimates: CesaroBoundEstimates,
    /// The same estimates with `2 n_max`.
    pub doubled: CesaroBoundEstimates,
    pub finite: bool,
}

fn bound_estimates(beta: f64, gamma: f64, n_max: usize) -> CesaroBoundEstimates {
    let real = CesaroTable::real(beta, n_max);
    let complex = CesaroTable::new(Complex64::new(beta, gamma), n_max);
    let integer_beta = beta >= 0.0 && beta.fract() == 0.0;
    let negative = integer_beta.then(|| CesaroTable::new(Complex64::new(-beta, gamma), n_max));
    let mut est = CesaroBoundEstimates {
        upper: 0.0,
        lower: 0.0,
        complex: 0.0,
        negative: negative.as_ref().map(|_| 0.0),
    };
    let damp = (3.0 * gamma * gamma).exp();
    for n in 0..=n_max {
        let a = real.get(n).re;
        let pow = ((n + 1) as f64).powf(beta);
        est.upper = est.upper.max(a / pow);
        est.lower = est.lower.max(pow / a);
        est.complex = est.complex.max(complex.get(n).norm() / a.abs());
        if let (Some(neg), Some(v)) = (&negative, est.negative.as_mut()) {
            *v = v.max(pow * neg.get(n).norm() / damp);
        }
    }
    est
}

/// Empirical constants in the two-sided growth bounds for `A_n^beta` and
/// the complex-order comparisons.
pub fn cesaro_bound_audit(beta: f64, gamma: f64, n_max: usize) -> Result<CesaroBoundAudit> {
    if !(beta > -1.0) || !beta.is_finite() {
        return Err(invalid("beta", format!("must exceed -1, got {beta}")));
    }
    if !gamma.is_finite() {
        return Err(invalid("gamma", "must be finite"));
    }
    check_range("N", n_max as i64, 0, 10_000)?;
    let estimates = bound_estimates(beta, gamma, n_max);
    let doubled = bound_estimates(beta, gamma, 2 * n_max);
    let finite = [estimates.upper, estimates.lower, estimates.complex, estimates.negative.unwrap_or(0.0)]
        .iter()
        .all(|v| v.is_finite());
    Ok(CesaroBoundAudit {
        beta,
        gamma,
        n_max,
        estimates,
        doubled,
        finite,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioAudit {
    pub t: usize,
    pub n_max: usize,
    /// `max (1+n)^{t+1} / B_n^{t+1}` over `t+1 <= n <= n_max`.
    pub max_ratio_1: f64,
    pub argmax_1: usize,
    /// `max B_n^{t+1} / (1+n)^{t+1}`.
    pub max_ratio_2: f64,
}

/// The range starts at `n = t + 1` since `B_t^{t+1} = 0`.
pub fn ratio_audit(t: usize, n_max: usize) -> Result<RatioAudit> {
    if t < 1 {
        return Err(invalid("t", "must be at least 1"));
    }
    check_range("n_max", n_max as i64, t as i64 + 1, i64::MAX)?;
    let mut audit = RatioAudit {
        t,
        n_max,
        max_ratio_1: 0.0,
        argmax_1: t + 1,
        max_ratio_2: 0.0,
    };
    for n in t + 1..=n_max {
        let log_b: f64 = (0..=t).map(|i| ((n - i) as f64).ln()).sum();
        let log_pow = (t + 1) as f64 * ((n + 1) as f64).ln();
        let r1 = (log_pow - log_b).exp();
        if r1 > audit.max_ratio_1 {
            audit.max_ratio_1 = r1;
            audit.argmax_1 = n;
        }
        audit.max_ratio_2 = audit.max_ratio_2.max((log_b - log_pow).exp());
    }
    Ok(audit)
}
