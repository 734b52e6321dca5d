//! Vector-valued noncommutative norms: `L_p(l_inf)` for positive sequences
//! with primal and dual certificates, `L_p(l_1)`, the column variant and
//! the weak-type norm for commuting data.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::field::OperatorField;
use crate::matrix::{self, CMatrix};

/// Entries `x_1..x_N`, Hermitian positive semidefinite of a common size.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveSequence {
    entries: Vec<CMatrix>,
}

impl PositiveSequence {
    /// Entries must be PSD up to `1e-12` relative to their size.
    pub fn new(entries: Vec<CMatrix>) -> Result<Self> {
        Self::with_tolerance(entries, 1e-12)
    }

    /// Takes Hermitian parts and accepts eigenvalues down to `-tol * ||x||`.
    pub fn with_tolerance(entries: Vec<CMatrix>, tol: f64) -> Result<Self> {
        let n = entries.first().ok_or(Error::Empty("sequence"))?.nrows();
        let mut out = Vec::with_capacity(entries.len());
        for x in entries {
            if x.nrows() != n || x.ncols() != n {
                return Err(Error::Shape {
                    expected: format!("{n}x{n}"),
                    found: format!("{}x{}", x.nrows(), x.ncols()),
                });
            }
            let scale = 1.0 + matrix::frobenius_norm(&x);
            if !matrix::is_hermitian(&x, tol * scale) {
                return Err(invalid("sequence", "entry is not Hermitian"));
            }
            let h = matrix::hermitian_part(&x);
            if matrix::min_eigenvalue(&h) < -tol * scale {
                return Err(invalid("sequence", "entry is not positive semidefinite"));
            }
            out.push(h);
        }
        Ok(PositiveSequence { entries: out })
    }

    pub fn entries(&self) -> &[CMatrix] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entries[0].nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop once `gap <= target_rel_gap * primal`.
    pub target_rel_gap: f64,
    /// Gap at which a result counts as converged.
    pub accept_rel_gap: f64,
    /// Cap on Newton steps.
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            target_rel_gap: 1e-10,
            accept_rel_gap: 1e-4,
            max_iterations: 100_000,
        }
    }
}

fn serialize_matrix<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    rows.serialize(s)
}

fn serialize_matrices<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
    struct Wrap<'a>(&'a CMatrix);
    impl Serialize for Wrap<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            serialize_matrix(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(ms.len()))?;
    for m in ms {
        seq.serialize_element(&Wrap(m))?;
    }
    seq.end()
}

/// Primal upper bound `||a||_p` with `a >= x_n`, dual lower bound
/// `sum tau(x_n y_n)` with `y_n >= 0` and `||sum y_n||_{p'} <= 1`.
#[derive(Debug, Clone, Serialize)]
pub struct MaxNormCertificate {
    pub p: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(serialize_with = "serialize_matrix")]
    pub witness_a: CMatrix,
    #[serde(serialize_with = "serialize_matrices")]
    pub witness_y: Vec<CMatrix>,
}

impl MaxNormCertificate {
    pub fn relative_gap(&self) -> f64 {
        if self.primal_value == 0.0 {
            0.0
        } else {
            self.gap / self.primal_value
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

fn zero_certificate(xs: &PositiveSequence, p: f64) -> MaxNormCertificate {
    let n = xs.dim();
    MaxNormCertificate {
        p,
        primal_value: 0.0,
        dual_value: 0.0,
        gap: 0.0,
        iterations: 0,
        converged: true,
        witness_a: matrix::zeros(n),
        witness_y: vec![matrix::zeros(n); xs.len()],
    }
}

/// `p = inf`: `a = max_n lambda_max(x_n) I`, matched by a rank-one `y`.
fn linf_closed_form(xs: &PositiveSequence) -> MaxNormCertificate {
    let n = xs.dim();
    let (best, value, vector) = xs
        .entries()
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let (vals, vecs) = matrix::eigh(x);
            (k, vals[n - 1], vecs.column(n - 1).into_owned())
        })
        .fold((0, f64::NEG_INFINITY, DVector::zeros(n)), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    let value = value.max(0.0);
    let mut witness_y = vec![matrix::zeros(n); xs.len()];
    witness_y[best] = &vector * vector.adjoint();
    MaxNormCertificate {
        p: f64::INFINITY,
        primal_value: value,
        dual_value: value,
        gap: 0.0,
        iterations: 0,
        converged: true,
        witness_a: matrix::identity(n) * Complex64::new(value, 0.0),
        witness_y,
    }
}

/// Orthonormal basis of the real space of Hermitian `n x n` matrices for
/// the pairing `Re tr(a b)`.
fn hermitian_basis(n: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut e = matrix::zeros(n);
        e[(i, i)] = Complex64::new(1.0, 0.0);
        basis.push(e);
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut e = matrix::zeros(n);
            e[(i, j)] = Complex64::new(s, 0.0);
            e[(j, i)] = Complex64::new(s, 0.0);
            basis.push(e);
            let mut e = matrix::zeros(n);
            e[(i, j)] = Complex64::new(0.0, s);
            e[(j, i)] = Complex64::new(0.0, -s);
            basis.push(e);
        }
    }
    basis
}

fn coordinates(h: &CMatrix, basis: &[CMatrix]) -> DVector<f64> {
    DVector::from_iterator(basis.len(), basis.iter().map(|e| matrix::trace_product_re(h, e)))
}

fn from_coordinates(c: &DVector<f64>, basis: &[CMatrix]) -> CMatrix {
    let n = basis[0].nrows();
    let mut out = matrix::zeros(n);
    for (v, e) in c.iter().zip(basis) {
        out += e * Complex64::new(*v, 0.0);
    }
    out
}

struct Slacks {
    log_det: f64,
    inverses: Vec<CMatrix>,
}

/// `sum log det(a - x_n)` and the inverses, or `None` outside the domain.
fn slacks(a: &CMatrix, xs: &[CMatrix]) -> Option<Slacks> {
    let mut log_det = 0.0;
    let mut inverses = Vec::with_capacity(xs.len());
    for x in xs {
        let (ld, inv) = matrix::logdet_and_inverse(&(a - x))?;
        log_det += ld;
        inverses.push(inv);
    }
    Some(Slacks { log_det, inverses })
}

struct Objective {
    value: f64,
    gradient: CMatrix,
    /// Hessian in basis coordinates.
    hessian: DMatrix<f64>,
}

/// `||a||_p` for `a > 0` with gradient and Hessian.
fn schatten_objective(a: &CMatrix, p: f64, basis: &[CMatrix], with_hessian: bool) -> Objective {
    let n = a.nrows();
    let (lambda, v) = matrix::eigh(a);
    let top = lambda[n - 1];
    let r: Vec<f64> = lambda.iter().map(|&l| (l / top).max(0.0)).collect();
    let rp1: Vec<f64> = r.iter().map(|&x| x.powf(p - 1.0)).collect();
    let s: f64 = r.iter().map(|&x| x.powf(p)).sum();
    let value = top * s.powf(1.0 / p);
    let coef = s.powf(1.0 / p - 1.0);
    let gradient = matrix::from_spectrum(&rp1.iter().map(|x| x * coef).collect::<Vec<_>>(), &v);
    let dim = basis.len();
    let mut hessian = DMatrix::zeros(dim, dim);
    if with_hessian && p != 1.0 {
        let vh = v.adjoint();
        let rotated: Vec<CMatrix> = basis.iter().map(|e| &vh * e * &v).collect();
        let mut f1 = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let (ri, rj) = (r[i], r[j]);
                f1[(i, j)] = if (ri - rj).abs() > 1e-8 * ri.max(rj) {
                    (rp1[i] - rp1[j]) / (ri - rj)
                } else {
                    (p - 1.0) * (0.5 * (ri + rj)).powf(p - 2.0)
                };
            }
        }
        let e: Vec<f64> = rotated
            .iter()
            .map(|m| (0..n).map(|i| rp1[i] * m[(i, i)].re).sum())
            .collect();
        let rank_one = (1.0 - p) * s.powf(1.0 / p - 2.0);
        for k in 0..dim {
            for l in k..dim {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += f1[(i, j)] * (rotated[k][(i, j)] * rotated[l][(j, i)]).re;
                    }
                }
                let h = (coef * acc + rank_one * e[k] * e[l]) / top;
                hessian[(k, l)] = h;
                hessian[(l, k)] = h;
            }
        }
    }
    Objective { value, gradient, hessian }
}

fn barrier_value(a: &CMatrix, xs: &[CMatrix], t: f64, p: f64, basis: &[CMatrix]) -> Option<f64> {
    let sl = slacks(a, xs)?;
    Some(t * schatten_objective(a, p, basis, false).value - sl.log_det)
}

struct DualPoint {
    value: f64,
    ys: Vec<CMatrix>,
}

/// Scale the barrier inverses onto the dual feasible set.
fn dual_from_inverses(xs: &[CMatrix], inverses: &[CMatrix], p: f64) -> DualPoint {
    let n = xs[0].nrows();
    let mut total = matrix::zeros(n);
    for w in inverses {
        total += w;
    }
    let q = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    let norm = matrix::schatten_norm_hermitian(&total, q);
    let ys: Vec<CMatrix> = inverses.iter().map(|w| w * Complex64::new(1.0 / norm, 0.0)).collect();
    let value = xs.iter().zip(&ys).map(|(x, y)| matrix::trace_product_re(x, y)).sum();
    DualPoint { value, ys }
}

/// Barrier path-following for `min ||a||_p` subject to `a >= x_n`, on data
/// scaled so that `max lambda_max(x_n) = 1`.
fn barrier_solve(xs: &[CMatrix], p: f64, options: &SolverOptions) -> (CMatrix, DualPoint, usize) {
    let n = xs[0].nrows();
    let basis = hermitian_basis(n);
    let count = xs.len() as f64 * n as f64;
    let mut a = matrix::identity(n) * Complex64::new(2.0, 0.0);
    let mut t = count / schatten_objective(&a, p, &basis, false).value;
    let mut iterations = 0;
    // the primal keeps improving along the path after rounding in the
    // slacks has spoiled the dual, so the two are tracked separately
    let mut best_primal: Option<(CMatrix, f64)> = None;
    let mut best_dual: Option<DualPoint> = None;
    let mut best_gap = f64::INFINITY;

    loop {
        // centering
        for _ in 0..100 {
            if iterations >= options.max_iterations {
                break;
            }
            iterations += 1;
            let sl = slacks(&a, xs).expect("iterate stays strictly feasible");
            let obj = schatten_objective(&a, p, &basis, true);
            let mut grad_m = &obj.gradient * Complex64::new(t, 0.0);
            for w in &sl.inverses {
                grad_m -= w;
            }
            let grad = coordinates(&grad_m, &basis);
            let dim = basis.len();
            let mut hess = obj.hessian * t;
            for w in &sl.inverses {
                let products: Vec<CMatrix> = basis.iter().map(|e| w * e * w).collect();
                for k in 0..dim {
                    for l in k..dim {
                        let h = matrix::trace_product_re(&products[k], &basis[l]);
                        hess[(k, l)] += h;
                        if l != k {
                            hess[(l, k)] += h;
                        }
                    }
                }
            }
            let step = match hess.clone().cholesky() {
                Some(c) => c.solve(&(-&grad)),
                None => {
                    let ridge = 1e-12 * hess.diagonal().amax();
                    let shifted = hess + DMatrix::identity(dim, dim) * ridge;
                    match shifted.cholesky() {
                        Some(c) => c.solve(&(-&grad)),
                        None => break,
                    }
                }
            };
            let decrement = -grad.dot(&step);
            if !(decrement > 1e-14) {
                break;
            }
            let direction = from_coordinates(&step, &basis);
            let f0 = t * obj.value - sl.log_det;
            let mut moved = false;
            // inside the quadratic region take the full step: at large t the
            // barrier value is too big for Armijo to resolve the decrease
            if decrement < 0.0625 {
                let trial = &a + &direction;
                if slacks(&trial, xs).is_some() {
                    a = matrix::hermitian_part(&trial);
                    moved = true;
                }
            }
            let mut s = 1.0;
            while !moved && s > 1e-16 {
                let trial = &a + &direction * Complex64::new(s, 0.0);
                if let Some(f1) = barrier_value(&trial, xs, t, p, &basis) {
                    if f1 <= f0 - 0.25 * s * decrement {
                        a = matrix::hermitian_part(&trial);
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved || decrement < 1e-11 {
                break;
            }
        }

        let sl = slacks(&a, xs).expect("iterate stays strictly feasible");
        let primal = schatten_objective(&a, p, &basis, false).value;
        let dual = dual_from_inverses(xs, &sl.inverses, p);
        if best_primal.as_ref().is_none_or(|b| primal < b.1) {
            best_primal = Some((a.clone(), primal));
        }
        if best_dual.as_ref().is_none_or(|b| dual.value > b.value) {
            best_dual = Some(dual);
        }
        let gap = best_primal.as_ref().map_or(f64::INFINITY, |b| b.1) - best_dual.as_ref().map_or(0.0, |b| b.value);
        let improved = gap < 0.5 * best_gap;
        best_gap = best_gap.min(gap);
        if gap <= options.target_rel_gap * primal
            || iterations >= options.max_iterations
            || (!improved && t > 1e6 * count)
            || t > 1e13 * count
        {
            break;
        }
        t *= 10.0;
    }
    let (a, _) = best_primal.expect("at least one outer step");
    let dual = best_dual.expect("at least one outer step");
    (a, dual, iterations)
}

fn check_solver_p(p: f64) -> Result<()> {
    matrix::check_p(p, 1.0)
}

/// `||(x_n)||_{L_p(l_inf)} = inf { ||a||_p : a >= x_n for all n }`.
pub fn linf_norm_positive(xs: &PositiveSequence, p: f64) -> Result<MaxNormCertificate> {
    linf_norm_positive_with(xs, p, &SolverOptions::default())
}

pub fn linf_norm_positive_with(xs: &PositiveSequence, p: f64, options: &SolverOptions) -> Result<MaxNormCertificate> {
    check_solver_p(p)?;
    if p.is_infinite() {
        return Ok(linf_closed_form(xs));
    }
    let scale = xs
        .entries()
        .iter()
        .map(matrix::max_eigenvalue)
        .fold(0.0f64, f64::max);
    if scale <= 1e-300 {
        return Ok(zero_certificate(xs, p));
    }
    let scaled: Vec<CMatrix> = xs
        .entries()
        .iter()
        .map(|x| x * Complex64::new(1.0 / scale, 0.0))
        .collect();
    let (a, dual, iterations) = barrier_solve(&scaled, p, options);
    let basis = hermitian_basis(xs.dim());
    let primal = schatten_objective(&a, p, &basis, false).value * scale;
    let dual_value = dual.value * scale;
    let gap = primal - dual_value;
    Ok(MaxNormCertificate {
        p,
        primal_value: primal,
        dual_value,
        gap,
        iterations,
        converged: gap <= options.accept_rel_gap * primal,
        witness_a: a * Complex64::new(scale, 0.0),
        witness_y: dual.ys,
    })
}

/// Field-level norm: the sequence `(f_k)` decouples into one problem per
/// group point; values combine in `l_p` over the points.
#[derive(Debug, Clone, Serialize)]
pub struct FieldMaxNorm {
    pub p: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub max_iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub witness_a: OperatorField,
}

pub fn linf_norm_field(fields: &[OperatorField], p: f64) -> Result<FieldMaxNorm> {
    linf_norm_field_with(fields, p, &SolverOptions::default())
}

pub fn linf_norm_field_with(fields: &[OperatorField], p: f64, options: &SolverOptions) -> Result<FieldMaxNorm> {
    check_solver_p(p)?;
    let first = fields.first().ok_or(Error::Empty("field sequence"))?;
    for f in fields {
        first.same_shape(f)?;
    }
    let spec = *first.spec();
    let certs: Vec<MaxNormCertificate> = (0..spec.size())
        .into_par_iter()
        .map(|s| {
            let entries: Vec<CMatrix> = fields.iter().map(|f| f.get(s)).collect();
            let seq = PositiveSequence::with_tolerance(entries, 1e-9)?;
            linf_norm_positive_with(&seq, p, options)
        })
        .collect::<Result<_>>()?;
    let primals: Vec<f64> = certs.iter().map(|c| c.primal_value).collect();
    let duals: Vec<f64> = certs.iter().map(|c| c.dual_value.max(0.0)).collect();
    let primal = matrix::lp_of(&primals, p);
    let dual = matrix::lp_of(&duals, p);
    let mut witness_a = OperatorField::zeros(spec, first.n());
    for (s, c) in certs.iter().enumerate() {
        witness_a.set(s, &c.witness_a);
    }
    Ok(FieldMaxNorm {
        p,
        primal_value: primal,
        dual_value: dual,
        gap: primal - dual,
        max_iterations: certs.iter().map(|c| c.iterations).max().unwrap_or(0),
        converged: primal - dual <= options.accept_rel_gap * primal,
        witness_a,
    })
}

/// `||(x_n)||_{L_p(l_1)} = ||sum x_n||_p` for positive sequences.
pub fn l1_norm_positive(xs: &PositiveSequence, p: f64) -> Result<f64> {
    matrix::check_p(p, 1.0)?;
    let mut total = matrix::zeros(xs.dim());
    for x in xs.entries() {
        total += x;
    }
    Ok(matrix::schatten_norm_hermitian(&total, p))
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnNorm {
    pub value: f64,
    pub lower_bound: f64,
    pub squared: MaxNormCertificate,
}

/// `||(x_n)||_{L_p(l_inf^c)} = ||(x_n^* x_n)||_{L_{p/2}(l_inf)}^{1/2}`.
pub fn linf_col_norm(xs: &[CMatrix], p: f64) -> Result<ColumnNorm> {
    if p.is_nan() || p < 2.0 {
        return Err(invalid("p", format!("column norm needs p >= 2, got {p}")));
    }
    let squares: Vec<CMatrix> = xs.iter().map(|x| matrix::hermitian_part(&(x.adjoint() * x))).collect();
    let seq = PositiveSequence::with_tolerance(squares, 1e-9)?;
    let cert = linf_norm_positive(&seq, p / 2.0)?;
    Ok(ColumnNorm {
        value: cert.primal_value.max(0.0).sqrt(),
        lower_bound: cert.dual_value.max(0.0).sqrt(),
        squared: cert,
    })
}

/// `sup_j g_(j) * #{g >= g_(j)}^{1/p}` for nonnegative values `g`.
pub fn weak_norm_of_values(values: &[f64], p: f64) -> f64 {
    let mut sorted: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if p.is_infinite() {
        return sorted.first().copied().unwrap_or(0.0);
    }
    let mut best = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let level = sorted[i];
        if level == 0.0 {
            break;
        }
        let mut j = i;
        while j < sorted.len() && sorted[j] == level {
            j += 1;
        }
        best = best.max(level * (j as f64).powf(1.0 / p));
        i = j;
    }
    best
}

/// Weak-type maximal norm of simultaneously diagonal fields: the optimal
/// projection is a spectral projection of the pointwise supremum.
pub fn weak_linf_norm_diag(fields: &[OperatorField], p: f64) -> Result<f64> {
    matrix::check_p(p, 1.0)?;
    let first = fields.first().ok_or(Error::Empty("field sequence"))?;
    for f in fields {
        first.same_shape(f)?;
        if !f.is_diagonal(1e-12) {
            return Err(Error::NonCommuting);
        }
    }
    let n = first.n();
    let size = first.spec().size();
    let mut sup = vec![0.0f64; size * n];
    for f in fields {
        for s in 0..size {
            let b = f.block(s);
            for i in 0..n {
                let v = b[i * n + i].norm();
                let slot = &mut sup[s * n + i];
                *slot = slot.max(v);
            }
        }
    }
    Ok(weak_norm_of_values(&sup, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearDominationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub factor: f64,
    pub pass: bool,
}

/// `||sup_n sum_k z_nk x_k||_p <= (sup_n sum_k z_nk) ||sup_k x_k||_p`.
pub fn linear_domination_check(xs: &PositiveSequence, z: &[Vec<f64>], p: f64) -> Result<LinearDominationCheck> {
    if z.is_empty() {
        return Err(Error::Empty("weight matrix"));
    }
    if let Some(row) = z.iter().find(|row| row.len() != xs.len()) {
        return Err(Error::Shape {
            expected: format!("rows of length {}", xs.len()),
            found: row.len().to_string(),
        });
    }
    if z.iter().flatten().any(|&w| !(w >= 0.0)) {
        return Err(invalid("z", "weights must be nonnegative"));
    }
    let combos: Vec<CMatrix> = z
        .iter()
        .map(|row| {
            let mut acc = matrix::zeros(xs.dim());
            for (w, x) in row.iter().zip(xs.entries()) {
                acc += x * Complex64::new(*w, 0.0);
            }
            acc
        })
        .collect();
    let lhs = linf_norm_positive(&PositiveSequence::with_tolerance(combos, 1e-9)?, p)?.primal_value;
    let base = linf_norm_positive(xs, p)?.primal_value;
    let factor = z.iter().map(|row| row.iter().sum::<f64>()).fold(0.0, f64::max);
    let rhs = factor * base;
    Ok(LinearDominationCheck {
        lhs,
        rhs,
        factor,
        pass: lhs <= rhs + 1e-6 * rhs.max(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperEstimate {
    pub value: f64,
    pub upper_bound_only: bool,
}

/// Triangle-inequality bound for arbitrary sequences through the split
/// `x = x1 - x2 + i(x3 - x4)` into positive parts.
pub fn linf_norm_upper_bound(xs: &[CMatrix], p: f64) -> Result<UpperEstimate> {
    let n = xs.first().ok_or(Error::Empty("sequence"))?.nrows();
    let mut parts: [Vec<CMatrix>; 4] = Default::default();
    for x in xs {
        if x.nrows() != n || x.ncols() != n {
            return Err(Error::Shape {
                expected: format!("{n}x{n}"),
                found: format!("{}x{}", x.nrows(), x.ncols()),
            });
        }
        let re = matrix::hermitian_part(x);
        let im = (x - x.adjoint()) * Complex64::new(0.0, -0.5);
        parts[0].push(matrix::positive_part(&re));
        parts[1].push(matrix::negative_part(&re));
        parts[2].push(matrix::positive_part(&im));
        parts[3].push(matrix::negative_part(&im));
    }
    let mut value = 0.0;
    for part in parts {
        value += linf_norm_positive(&PositiveSequence::with_tolerance(part, 1e-9)?, p)?.primal_value;
    }
    Ok(UpperEstimate {
        value,
        upper_bound_only: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> CMatrix {
        let n = values.len();
        CMatrix::from_fn(n, n, |i, j| Complex64::new(if i == j { values[i] } else { 0.0 }, 0.0))
    }

    fn projection(theta: f64) -> CMatrix {
        let (s, c) = theta.sin_cos();
        CMatrix::from_fn(2, 2, |i, j| {
            let v = [c, s];
            Complex64::new(v[i] * v[j], 0.0)
        })
    }

    fn check_certificate(cert: &MaxNormCertificate, xs: &PositiveSequence) {
        assert!(cert.dual_value <= cert.primal_value + 1e-9 * cert.primal_value.max(1.0));
        for x in xs.entries() {
            assert!(matrix::min_eigenvalue(&(&cert.witness_a - x)) >= -1e-9);
        }
        let mut total = matrix::zeros(xs.dim());
        for y in &cert.witness_y {
            assert!(matrix::min_eigenvalue(y) >= -1e-12);
            total += y;
        }
        let q = if cert.p == 1.0 {
            f64::INFINITY
        } else if cert.p.is_infinite() {
            1.0
        } else {
            cert.p / (cert.p - 1.0)
        };
        assert!(matrix::schatten_norm_hermitian(&total, q) <= 1.0 + 1e-9);
        let pairing: f64 = xs.entries().iter().zip(&cert.witness_y).map(|(x, y)| matrix::trace_product_re(x, y)).sum();
        assert!((pairing - cert.dual_value).abs() <= 1e-9 * cert.dual_value.max(1.0));
    }

    #[test]
    fn commuting_projections() {
        let xs = PositiveSequence::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap();
        let cert = linf_norm_positive(&xs, 1.0).unwrap();
        assert!((cert.primal_value - 2.0).abs() < 1e-8);
        check_certificate(&cert, &xs);
        for p in [1.5, 2.0, 3.0] {
            let cert = linf_norm_positive(&xs, p).unwrap();
            assert!((cert.primal_value - 2f64.powf(1.0 / p)).abs() < 1e-8 * cert.primal_value);
            check_certificate(&cert, &xs);
        }
    }

    #[test]
    fn single_entry_gives_its_norm() {
        let p1 = projection(0.3);
        let xs = PositiveSequence::new(vec![p1.clone()]).unwrap();
        for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
            let cert = linf_norm_positive(&xs, p).unwrap();
            assert!((cert.primal_value - 1.0).abs() < 1e-8, "p={p}");
            assert!(cert.converged);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = matrix::random_psd(3, &mut rng);
        let xs = PositiveSequence::new(vec![x.clone()]).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let cert = linf_norm_positive(&xs, p).unwrap();
            let exact = matrix::schatten_norm_hermitian(&x, p);
            assert!((cert.primal_value - exact).abs() < 1e-8 * exact);
        }
    }

    #[test]
    fn random_instances_have_small_gaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=4 {
            for count in [1, 3, 8] {
                let entries: Vec<CMatrix> = (0..count).map(|_| matrix::random_psd(n, &mut rng)).collect();
                let xs = PositiveSequence::new(entries).unwrap();
                for p in [1.0, 1.5, 2.0, 3.0, 4.0] {
                    let cert = linf_norm_positive(&xs, p).unwrap();
                    assert!(cert.relative_gap() <= 1e-4, "n={n} N={count} p={p} gap={}", cert.relative_gap());
                    check_certificate(&cert, &xs);
                }
            }
        }
    }

    #[test]
    fn commutative_reduction_matches_entrywise_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        use rand::Rng;
        for n in 1..=4 {
            let entries: Vec<Vec<f64>> = (0..5).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
            let maxima: Vec<f64> = (0..n).map(|i| entries.iter().map(|e| e[i]).fold(0.0, f64::max)).collect();
            let xs = PositiveSequence::new(entries.iter().map(|e| diag(e)).collect()).unwrap();
            for p in [1.0, 1.5, 2.0, 3.0, 4.0, f64::INFINITY] {
                let exact = matrix::lp_of(&maxima, p);
                let cert = linf_norm_positive(&xs, p).unwrap();
                assert!((cert.primal_value - exact).abs() <= 1e-8 * exact, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn large_p_approaches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let xs = PositiveSequence::new((0..4).map(|_| matrix::random_psd(3, &mut rng)).collect()).unwrap();
        let inf = linf_norm_positive(&xs, f64::INFINITY).unwrap();
        check_certificate(&inf, &xs);
        let big = linf_norm_positive(&xs, 1e3).unwrap();
        assert!((big.primal_value - inf.primal_value).abs() <= 0.01 * inf.primal_value);
    }

    #[test]
    fn homogeneity_and_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let entries: Vec<CMatrix> = (0..3).map(|_| matrix::random_psd(2, &mut rng)).collect();
        let xs = PositiveSequence::new(entries.clone()).unwrap();
        let scaled = PositiveSequence::new(entries.iter().map(|x| x * Complex64::new(3.5, 0.0)).collect()).unwrap();
        let a = linf_norm_positive(&xs, 2.0).unwrap().primal_value;
        let b = linf_norm_positive(&scaled, 2.0).unwrap().primal_value;
        assert!((b - 3.5 * a).abs() <= 1e-8 * b);
        let zero = PositiveSequence::new(vec![matrix::zeros(2); 2]).unwrap();
        assert_eq!(linf_norm_positive(&zero, 2.0).unwrap().primal_value, 0.0);
        assert!(linf_norm_positive(&xs, 0.5).is_err());
        assert!(PositiveSequence::new(vec![diag(&[1.0, -1.0])]).is_err());
    }

    #[test]
    fn l1_and_pairing() {
        let xs = PositiveSequence::new(vec![diag(&[1.0, 0.0, 0.0]), diag(&[0.0, 1.0, 0.0]), diag(&[0.0, 0.0, 1.0])]).unwrap();
        assert!((l1_norm_positive(&xs, 1.0).unwrap() - 3.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let x: Vec<CMatrix> = (0..3).map(|_| matrix::random_psd(2, &mut rng)).collect();
            let y: Vec<CMatrix> = (0..3).map(|_| matrix::random_psd(2, &mut rng)).collect();
            let pairing: f64 = x.iter().zip(&y).map(|(a, b)| matrix::trace_product_re(a, b)).sum();
            for p in [1.5, 2.0, 3.0] {
                let lx = linf_norm_positive(&PositiveSequence::new(x.clone()).unwrap(), p).unwrap().primal_value;
                let ly = l1_norm_positive(&PositiveSequence::new(y.clone()).unwrap(), p / (p - 1.0)).unwrap();
                assert!(pairing <= lx * ly * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn column_norm_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let x = matrix::ginibre(3, &mut rng);
        let c = linf_col_norm(&[x.clone()], 2.0).unwrap();
        assert!((c.value - matrix::frobenius_norm(&x)).abs() < 1e-8 * c.value);
        let us: Vec<CMatrix> = (0..3).map(|_| matrix::haar_unitary(3, &mut rng)).collect();
        assert!((linf_col_norm(&us, f64::INFINITY).unwrap().value - 1.0).abs() < 1e-12);
        assert!(linf_col_norm(&us, 1.5).is_err());
    }

    #[test]
    fn weak_norm_examples() {
        let spec = GroupSpec::new(1, 3).unwrap();
        let indicator = OperatorField::scalar(spec, &[1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((weak_linf_norm_diag(&[indicator.clone()], 1.0).unwrap() - 4.0).abs() < 1e-15);
        let doubled = indicator.scaled(Complex64::new(2.0, 0.0));
        assert!((weak_linf_norm_diag(&[doubled], 1.0).unwrap() - 8.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dense = OperatorField::from_fn(spec, 2, |_| matrix::ginibre(2, &mut rng));
        assert_eq!(weak_linf_norm_diag(&[dense], 1.0), Err(Error::NonCommuting));
        assert!((weak_norm_of_values(&[3.0, 1.0, 1.0], 1.0) - 3.0).abs() < 1e-15);
        assert!((weak_norm_of_values(&[3.0, 2.0, 2.0], 1.0) - 6.0).abs() < 1e-15);
    }

    #[test]
    fn linear_domination() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let xs = PositiveSequence::new((0..3).map(|_| matrix::random_psd(2, &mut rng)).collect()).unwrap();
        let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let r = linear_domination_check(&xs, &id, 2.0).unwrap();
        assert!(r.pass && (r.lhs - r.rhs).abs() <= 1e-7 * r.rhs);
        let avg = vec![vec![0.5, 0.5, 0.0], vec![0.2, 0.3, 0.5], vec![1.0 / 3.0; 3]];
        assert!(linear_domination_check(&xs, &avg, 1.5).unwrap().pass);
        let two = vec![vec![1.0, 1.0, 0.0], vec![0.0, 2.0, 0.0]];
        let r = linear_domination_check(&xs, &two, 3.0).unwrap();
        assert!(r.pass && r.factor == 2.0);
        assert!(linear_domination_check(&xs, &[vec![-1.0, 0.0, 0.0]], 2.0).is_err());
    }

    #[test]
    fn upper_bound_for_general_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let xs: Vec<CMatrix> = (0..3).map(|_| matrix::ginibre(2, &mut rng)).collect();
        let est = linf_norm_upper_bound(&xs, 2.0).unwrap();
        assert!(est.upper_bound_only);
        for x in &xs {
            assert!(est.value >= matrix::schatten_norm(x, 2.0).unwrap() * (1.0 - 1e-9));
        }
        let positive: Vec<CMatrix> = (0..3).map(|_| matrix::random_psd(2, &mut rng)).collect();
        let exact = linf_norm_positive(&PositiveSequence::new(positive.clone()).unwrap(), 2.0).unwrap();
        let est = linf_norm_upper_bound(&positive, 2.0).unwrap();
        assert!((est.value - exact.primal_value).abs() <= 1e-8 * exact.primal_value);
    }

    #[test]
    fn field_norm_decouples() {
        let spec = GroupSpec::new(1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let fields: Vec<OperatorField> = (0..3)
            .map(|_| OperatorField::from_fn(spec, 2, |_| matrix::random_psd(2, &mut rng)))
            .collect();
        let p = 2.0;
        let whole = linf_norm_field(&fields, p).unwrap();
        let mut per_point = Vec::new();
        for s in 0..spec.size() {
            let seq = PositiveSequence::new(fields.iter().map(|f| f.get(s)).collect()).unwrap();
            per_point.push(linf_norm_positive(&seq, p).unwrap().primal_value);
        }
        let expect = matrix::lp_of(&per_point, p);
        assert!((whole.primal_value - expect).abs() <= 1e-12 * expect);
        assert!(whole.dual_value <= whole.primal_value && whole.converged);
        let inf = linf_norm_field(&fields, f64::INFINITY).unwrap();
        let direct = fields.iter().map(|f| crate::field::field_norm(f, f64::INFINITY).unwrap()).fold(0.0, f64::max);
        assert!((inf.primal_value - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn certificate_json() {
        let xs = PositiveSequence::new(vec![projection(0.0), projection(0.7)]).unwrap();
        let cert = linf_norm_positive(&xs, 2.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&cert.to_json()).unwrap();
        assert_eq!(v["witness_y"].as_array().unwrap().len(), 2);
        assert!(v["gap"].as_f64().unwrap() >= -1e-9);
    }
}
