//! The sphere-mean families `T_k`, their smoothed and Cesàro averages, the
//! summation identities between them, and the square functions.
//!
//! Every family works either on an [`OperatorField`] or, in kernel-only mode,
//! on the radial symbols themselves ([`SymbolVector`]), which lets `d` go far
//! beyond what a field can hold.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cesaro::{cesaro_scale, falling_factorial, CesaroTable, RecurrenceFault};
use crate::convolution::sphere_means;
use crate::error::{invalid, Error, Result};
use crate::field::OperatorField;
use crate::group::RadialSpec;
use crate::kernels::KrawtchoukTable;
use crate::matrix::{psd_sqrt, CMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// What the families are built from: anything that can form complex linear
/// combinations and measure distances.
pub trait FamilyElement: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    /// `self += c * x`.
    fn add_scaled(&mut self, c: Complex64, x: &Self);
    fn norm(&self) -> f64;

    fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.zero_like();
        out.add_scaled(c, self);
        out
    }

    fn distance(&self, other: &Self) -> f64 {
        let mut diff = self.clone();
        diff.add_scaled(-ONE, other);
        diff.norm()
    }
}

impl FamilyElement for OperatorField {
    fn zero_like(&self) -> Self {
        OperatorField::zeros(*self.spec(), self.n())
    }

    fn add_scaled(&mut self, c: Complex64, x: &Self) {
        self.axpy(c, x).expect("family members share one shape");
    }

    fn norm(&self) -> f64 {
        self.l2_norm()
    }
}

/// Radial symbol values indexed by frequency weight `j = 0..=d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolVector(pub Vec<Complex64>);

impl SymbolVector {
    pub fn values(&self) -> &[Complex64] {
        &self.0
    }
}

impl FamilyElement for SymbolVector {
    fn zero_like(&self) -> Self {
        SymbolVector(vec![ZERO; self.0.len()])
    }

    fn add_scaled(&mut self, c: Complex64, x: &Self) {
        for (a, b) in self.0.iter_mut().zip(&x.0) {
            *a += c * b;
        }
    }

    /// Sup over weights, the `L_2 -> L_2` norm of the multiplier.
    fn norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }
}

/// Local families run over `k`, distant ones over `d - k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Local,
    Distant,
}

impl Mode {
    /// `floor(md/(m+1))` or `floor(d/(m+1))`.
    pub fn n_max(self, spec: impl Into<RadialSpec>) -> usize {
        let spec = spec.into();
        let (m, d) = (spec.m(), spec.d());
        match self {
            Mode::Local => m * d / (m + 1),
            Mode::Distant => d / (m + 1),
        }
    }

    fn sphere(self, d: usize, k: usize) -> usize {
        match self {
            Mode::Local => k,
            Mode::Distant => d - k,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Mode::Local),
            "distant" => Ok(Mode::Distant),
            other => Err(invalid("mode", format!("expected local or distant, got {other:?}"))),
        }
    }
}

/// `T_0 f, ..., T_d f`, computed once and shared by every derived family.
#[derive(Debug, Clone)]
pub struct SphereFamily<E> {
    spec: RadialSpec,
    means: Vec<E>,
}

impl SphereFamily<OperatorField> {
    pub fn from_field(f: &OperatorField) -> Self {
        SphereFamily {
            spec: (*f.spec()).into(),
            means: sphere_means(f),
        }
    }
}

impl SphereFamily<SymbolVector> {
    /// Kernel-only mode: `T_k` as the symbol `K_k(j)/|S_k|`.
    pub fn symbols(spec: impl Into<RadialSpec>) -> Self {
        let spec = spec.into();
        let table = KrawtchoukTable::new(spec);
        let d = spec.d();
        let means = (0..=d)
            .into_par_iter()
            .map(|k| SymbolVector((0..=d).map(|j| Complex64::new(table.sphere_symbol(k, j), 0.0)).collect()))
            .collect();
        SphereFamily { spec, means }
    }
}

impl<E: FamilyElement> SphereFamily<E> {
    pub fn spec(&self) -> RadialSpec {
        self.spec
    }

    pub fn d(&self) -> usize {
        self.spec.d()
    }

    /// `T_k`, `k = 0..=d`.
    pub fn get(&self, k: usize) -> &E {
        &self.means[k]
    }

    pub fn means(&self) -> &[E] {
        &self.means
    }

    /// `T_0 f = f`.
    pub fn base(&self) -> &E {
        &self.means[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FamilyLabel {
    T,
    #[serde(rename = "T_M")]
    SmoothedLocal,
    #[serde(rename = "T_D")]
    SmoothedDistant,
    S,
    U,
    M,
    N,
    H,
    J,
    #[serde(rename = "noise")]
    Noise,
}

impl FamilyLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyLabel::T => "T",
            FamilyLabel::SmoothedLocal => "T_M",
            FamilyLabel::SmoothedDistant => "T_D",
            FamilyLabel::S => "S",
            FamilyLabel::U => "U",
            FamilyLabel::M => "M",
            FamilyLabel::N => "N",
            FamilyLabel::H => "H",
            FamilyLabel::J => "J",
            FamilyLabel::Noise => "noise",
        }
    }
}

/// An indexed family `F_first, ..., F_{first + len - 1}`.
#[derive(Debug, Clone)]
pub struct OperatorFamily<E> {
    label: FamilyLabel,
    first: usize,
    entries: Vec<E>,
}

impl<E: FamilyElement> OperatorFamily<E> {
    pub fn new(label: FamilyLabel, first: usize, entries: Vec<E>) -> Self {
        OperatorFamily { label, first, entries }
    }

    pub fn label(&self) -> FamilyLabel {
        self.label
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.entries.len()
    }

    pub fn get(&self, n: usize) -> Option<&E> {
        n.checked_sub(self.first).and_then(|i| self.entries.get(i))
    }

    pub fn entries(&self) -> &[E] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<E> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `(T_k f)_{k=1..d}`.
pub fn family_t<E: FamilyElement>(sphere: &SphereFamily<E>) -> OperatorFamily<E> {
    OperatorFamily::new(FamilyLabel::T, 1, sphere.means[1..].to_vec())
}

/// `T_K^M f` or `T_K^D f` for `K = 0..=n_max(mode)`, as running averages.
pub fn family_smoothed<E: FamilyElement>(sphere: &SphereFamily<E>, mode: Mode) -> OperatorFamily<E> {
    let d = sphere.d();
    let mut sum = sphere.base().zero_like();
    let mut entries = Vec::new();
    for k in 0..=mode.n_max(sphere.spec) {
        sum.add_scaled(ONE, sphere.get(mode.sphere(d, k)));
        entries.push(sum.scaled(Complex64::new(1.0 / (k + 1) as f64, 0.0)));
    }
    let label = match mode {
        Mode::Local => FamilyLabel::SmoothedLocal,
        Mode::Distant => FamilyLabel::SmoothedDistant,
    };
    OperatorFamily::new(label, 0, entries)
}

/// `sum_{k<=n} c_{n-k} T_{k}` (or `T_{d-k}`) for `n = 0..=n_max`.
fn weighted_sums<E: FamilyElement>(sphere: &SphereFamily<E>, coeffs: &CesaroTable, mode: Mode, n_max: usize) -> Vec<E> {
    let d = sphere.d();
    (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let mut acc = sphere.base().zero_like();
            for k in 0..=n {
                acc.add_scaled(coeffs.get(n - k), sphere.get(mode.sphere(d, k)));
            }
            acc
        })
        .collect()
}

fn check_n_max(spec: RadialSpec, mode: Mode, n_max: usize) -> Result<()> {
    let hi = mode.n_max(spec);
    if n_max > hi {
        return Err(Error::Range {
            what: "n",
            value: n_max as i64,
            lo: 0,
            hi: hi as i64,
        });
    }
    Ok(())
}

/// `S_n^alpha` (local) or `U_n^alpha` (distant) for `n = 0..=n_max`.
pub fn cesaro_sums<E: FamilyElement>(
    sphere: &SphereFamily<E>,
    alpha: Complex64,
    mode: Mode,
    n_max: usize,
) -> Result<OperatorFamily<E>> {
    check_n_max(sphere.spec, mode, n_max)?;
    let table = CesaroTable::new(alpha, n_max);
    let label = match mode {
        Mode::Local => FamilyLabel::S,
        Mode::Distant => FamilyLabel::U,
    };
    Ok(OperatorFamily::new(label, 0, weighted_sums(sphere, &table, mode, n_max)))
}

/// `M_n^alpha = (n+1)^{-alpha-1} S_n^alpha` or `N_n^alpha` likewise from `U`,
/// over the full admissible range.
pub fn cesaro_family<E: FamilyElement>(sphere: &SphereFamily<E>, alpha: Complex64, mode: Mode) -> OperatorFamily<E> {
    let n_max = mode.n_max(sphere.spec);
    let sums = cesaro_sums(sphere, alpha, mode, n_max).expect("full range is admissible");
    let entries = sums
        .into_entries()
        .into_iter()
        .enumerate()
        .map(|(n, s)| s.scaled(cesaro_scale(alpha, n)))
        .collect();
    let label = match mode {
        Mode::Local => FamilyLabel::M,
        Mode::Distant => FamilyLabel::N,
    };
    OperatorFamily::new(label, 0, entries)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub mode: Mode,
    pub max_discrepancy: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityAuditReport {
    pub m: usize,
    pub d: usize,
    pub t: usize,
    pub beta: f64,
    pub n_max: usize,
    pub tolerance: f64,
    pub checks: Vec<IdentityCheck>,
    /// The shifted summation with the boundary term at `S_M^{-t-1+l}`;
    /// reported only, it does not hold in general.
    pub informational: Vec<IdentityCheck>,
    pub pass: bool,
}

impl IdentityAuditReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.checks.iter().fold(0.0, |acc, c| acc.max(c.max_discrepancy))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const IDENTITY_TOLERANCE: f64 = 1e-8;

/// Running maximum of `|L - R| / max(|L|, |R|, |f|)`.
struct Discrepancy {
    scale: f64,
    max: f64,
}

impl Discrepancy {
    fn new(scale: f64) -> Self {
        Discrepancy { scale, max: 0.0 }
    }

    fn record<E: FamilyElement>(&mut self, lhs: &E, rhs: &E) {
        let denom = lhs.norm().max(rhs.norm()).max(self.scale).max(f64::MIN_POSITIVE);
        self.max = self.max.max(lhs.distance(rhs) / denom);
    }
}

struct AuditTables<E> {
    fault: Option<RecurrenceFault>,
    sphere: SphereFamily<E>,
    mode: Mode,
    n_max: usize,
}

impl<E: FamilyElement> AuditTables<E> {
    fn coeffs(&self, alpha: Complex64) -> CesaroTable {
        CesaroTable::build(alpha, self.n_max, self.fault)
    }

    fn sums(&self, alpha: Complex64) -> Vec<E> {
        weighted_sums(&self.sphere, &self.coeffs(alpha), self.mode, self.n_max)
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn audit_mode<E: FamilyElement>(tables: &AuditTables<E>, t: usize, beta: f64) -> (Vec<IdentityCheck>, IdentityCheck) {
    let n_max = tables.n_max;
    let mode = tables.mode;
    let scale = tables.sphere.base().norm();
    let t_f = t as f64;
    let s_t = tables.sums(real(-t_f));
    let s_t1 = tables.sums(real(-t_f - 1.0));
    let delta = |s: &[E], k: usize| -> E {
        let mut out = s[k].clone();
        if k > 0 {
            out.add_scaled(-ONE, &s[k - 1]);
        }
        out
    };

    let mut a = Discrepancy::new(scale);
    for k in 0..=n_max {
        a.record(&delta(&s_t, k), &s_t1[k]);
    }

    let mut b = Discrepancy::new(scale);
    for n in t..=n_max {
        let lhs = s_t[n].scaled(real(falling_factorial(n, t + 1)));
        let mut rhs = s_t[n].zero_like();
        for k in t..=n {
            rhs.add_scaled(real(falling_factorial(k, t + 1)), &delta(&s_t, k));
        }
        for k in t..n {
            rhs.add_scaled(real((t + 1) as f64 * falling_factorial(k, t)), &s_t[k]);
        }
        b.record(&lhs, &rhs);
    }

    let mut c = Discrepancy::new(scale);
    let s_complex = tables.sums(Complex64::new(-t_f, beta));
    let a_ib = tables.coeffs(Complex64::new(0.0, beta));
    for n in 0..=n_max {
        let mut rhs = s_complex[n].zero_like();
        for k in 0..=n {
            rhs.add_scaled(a_ib.get(n - k), &s_t1[k]);
        }
        c.record(&s_complex[n], &rhs);
    }

    let mut d = Discrepancy::new(scale);
    let mut printed = Discrepancy::new(scale);
    for l in 0..t {
        let l_f = l as f64;
        let lower = tables.sums(real(-t_f - 1.0 + l_f));
        let upper = tables.sums(real(-t_f + l_f));
        let a_l = tables.coeffs(Complex64::new(-l_f, beta));
        let a_l1 = tables.coeffs(Complex64::new(-l_f - 1.0, beta));
        for n in 0..=n_max {
            for cut in 0..=n {
                let mut lhs = lower[0].zero_like();
                for k in 0..=cut {
                    lhs.add_scaled(a_l.get(n - k), &lower[k]);
                }
                let mut tail = lower[0].zero_like();
                for k in 0..cut {
                    tail.add_scaled(a_l1.get(n - k), &upper[k]);
                }
                let mut rhs = tail.clone();
                rhs.add_scaled(a_l.get(n - cut), &upper[cut]);
                d.record(&lhs, &rhs);
                let mut as_printed = tail;
                as_printed.add_scaled(a_l.get(n - cut), &lower[cut]);
                printed.record(&lhs, &as_printed);
            }
        }
    }

    let check = |identity: &str, disc: Discrepancy| IdentityCheck {
        identity: identity.to_string(),
        mode,
        max_discrepancy: disc.max,
        pass: disc.max <= IDENTITY_TOLERANCE,
    };
    (
        vec![
            check("difference", a),
            check("summation_by_parts", b),
            check("complex_order", c),
            check("shifted_summation", d),
        ],
        check("shifted_summation_printed", printed),
    )
}

/// Evaluate both sides of the four summation identities for `n <= n_max`,
/// in the local and the distant arrangement. A `fault` corrupts one step of
/// every coefficient recurrence.
pub fn identity_audit<E: FamilyElement>(
    sphere: &SphereFamily<E>,
    t: usize,
    beta: f64,
    n_max: Option<usize>,
    fault: Option<RecurrenceFault>,
) -> Result<IdentityAuditReport> {
    if t < 1 {
        return Err(invalid("t", "must be a positive integer"));
    }
    if !beta.is_finite() {
        return Err(invalid("beta", "must be finite"));
    }
    let spec = sphere.spec;
    let mut checks = Vec::new();
    let mut informational = Vec::new();
    let mut used = 0;
    for mode in [Mode::Local, Mode::Distant] {
        let cap = mode.n_max(spec);
        let n = n_max.map_or(cap, |n| n.min(cap));
        used = used.max(n);
        let tables = AuditTables {
            fault,
            sphere: sphere.clone(),
            mode,
            n_max: n,
        };
        let (c, info) = audit_mode(&tables, t, beta);
        checks.extend(c);
        informational.push(info);
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(IdentityAuditReport {
        m: spec.m(),
        d: spec.d(),
        t,
        beta,
        n_max: used,
        tolerance: IDENTITY_TOLERANCE,
        checks,
        informational,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationReport {
    /// `M_n^{-1} = T_n`.
    pub m_minus_one: f64,
    /// `M_n^0 = T_n^M`.
    pub m_zero: f64,
    /// `N_n^{-1} = T_{d-n}`.
    pub n_minus_one: f64,
    /// `N_n^0 = T_n^D`.
    pub n_zero: f64,
}

impl IdentificationReport {
    pub fn max(&self) -> f64 {
        self.m_minus_one.max(self.m_zero).max(self.n_minus_one).max(self.n_zero)
    }
}

/// How far the Cesàro families at orders `-1` and `0` sit from the sphere
/// means and their smoothed averages.
pub fn identifications<E: FamilyElement>(sphere: &SphereFamily<E>) -> IdentificationReport {
    let d = sphere.d();
    let worst = |a: &OperatorFamily<E>, b: &dyn Fn(usize) -> E| {
        a.entries()
            .iter()
            .enumerate()
            .fold(0.0f64, |acc, (n, x)| acc.max(x.distance(&b(n))))
    };
    let local_avg = family_smoothed(sphere, Mode::Local);
    let distant_avg = family_smoothed(sphere, Mode::Distant);
    IdentificationReport {
        m_minus_one: worst(&cesaro_family(sphere, real(-1.0), Mode::Local), &|n| sphere.get(n).clone()),
        m_zero: worst(&cesaro_family(sphere, real(0.0), Mode::Local), &|n| local_avg.entries()[n].clone()),
        n_minus_one: worst(&cesaro_family(sphere, real(-1.0), Mode::Distant), &|n| {
            sphere.get(d - n).clone()
        }),
        n_zero: worst(&cesaro_family(sphere, real(0.0), Mode::Distant), &|n| {
            distant_avg.entries()[n].clone()
        }),
    }
}

fn square_weight(k: usize, t: usize) -> f64 {
    ((k + 1) as f64).powi(2 * t as i32 - 1)
}

/// `(sum_k (k+1)^{2t-1} |S_k^{-t-1} f|^2)^{1/2}` pointwise, with `U` in place
/// of `S` in distant mode.
pub fn square_function(sphere: &SphereFamily<OperatorField>, t: usize, mode: Mode) -> Result<OperatorField> {
    if t < 1 {
        return Err(invalid("t", "must be a positive integer"));
    }
    let n_max = mode.n_max(sphere.spec);
    let sums = cesaro_sums(sphere, real(-(t as f64) - 1.0), mode, n_max)?.into_entries();
    let base = sphere.base();
    let (spec, n) = (*base.spec(), base.n());
    let values: Vec<CMatrix> = (0..spec.size())
        .into_par_iter()
        .map(|s| {
            let mut acc = CMatrix::zeros(n, n);
            for (k, field) in sums.iter().enumerate() {
                let x = field.get(s);
                acc += x.adjoint() * &x * real(square_weight(k, t));
            }
            psd_sqrt(&acc)
        })
        .collect();
    Ok(OperatorField::from_fn(spec, n, |s| values[s].clone()))
}

/// `sup_j sum_k (k+1)^{2t-1} |m_k(j)|^2` where `m_k` is the symbol of
/// `S_k^{-t-1}` (or `U_k^{-t-1}`): the squared `L_2` bound of the square function.
pub fn l2_multiplier_bound(spec: impl Into<RadialSpec>, t: usize, mode: Mode) -> Result<f64> {
    if t < 1 {
        return Err(invalid("t", "must be a positive integer"));
    }
    let sphere = SphereFamily::symbols(spec);
    let n_max = mode.n_max(sphere.spec);
    let sums = cesaro_sums(&sphere, real(-(t as f64) - 1.0), mode, n_max)?.into_entries();
    let d = sphere.d();
    Ok((0..=d)
        .map(|j| {
            sums.iter()
                .enumerate()
                .map(|(k, m)| square_weight(k, t) * m.values()[j].norm_sqr())
                .sum::<f64>()
        })
        .fold(0.0, f64::max))
}
