//! Experiment drivers behind the command-line tool: the verification suite,
//! dimension sweeps, the weak-type witness and the domination sweeps, all
//! reported as CSV rows with provenance.

use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::actions::{intertwining_error, kadison_schwarz_gap, transference_audit, CommutingUnitaryAction};
use crate::cesaro::RecurrenceFault;
use crate::convolution::sphere_means;
use crate::error::{invalid, Error, Result};
use crate::families::{family_smoothed, identifications, identity_audit, l2_multiplier_bound, Mode, SphereFamily};
use crate::field::{check_memory, field_norm, OperatorField};
use crate::fourier::{forward_transform, inverse_transform};
use crate::group::{GroupSpec, RadialSpec};
use crate::kernels::{best_domination_search, default_p_grid, distant_domination, intersection_table, rho};
use crate::matrix::{ginibre, identity, random_psd, CMatrix};
use crate::noise::{ergodic_j, ergodic_j_kernel, eta_noise, eta_noise_multiplier, noise_operator, verify_nu_identity};
use crate::norms::{linf_norm_field_with, weak_linf_norm_diag, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    /// `delta_0 I`.
    Delta,
    /// `I` on the unit sphere `|s| = 1`, zero elsewhere.
    SphereIndicator,
    /// `G(s)* G(s)` with seeded Ginibre `G(s)`.
    RandomPsd,
    /// `I` everywhere.
    Constant,
}

impl TestFamily {
    pub const ALL: [TestFamily; 4] = [
        TestFamily::Delta,
        TestFamily::SphereIndicator,
        TestFamily::RandomPsd,
        TestFamily::Constant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TestFamily::Delta => "delta",
            TestFamily::SphereIndicator => "sphere_indicator",
            TestFamily::RandomPsd => "random_psd",
            TestFamily::Constant => "constant",
        }
    }

    pub fn field(self, spec: GroupSpec, n: usize, seed: u64) -> Result<OperatorField> {
        check_memory(&spec, n)?;
        let id = identity(n);
        let zero = CMatrix::zeros(n, n);
        Ok(match self {
            TestFamily::Delta => OperatorField::delta(spec, &id),
            TestFamily::SphereIndicator => {
                let weights = spec.weight_table();
                OperatorField::from_fn(spec, n, |s| if weights[s] == 1 { id.clone() } else { zero.clone() })
            }
            TestFamily::RandomPsd => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                OperatorField::from_fn(spec, n, |_| random_psd(n, &mut rng))
            }
            TestFamily::Constant => OperatorField::constant(spec, &id),
        })
    }
}

impl std::fmt::Display for TestFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| invalid("family", format!("unknown test family {s:?}")))
    }
}

/// Deliberate defects for checking that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// One step of every Cesàro recurrence in the identity audit is scaled.
    CesaroRecurrence,
}

impl FromStr for Fault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cesaro_recurrence" => Ok(Fault::CesaroRecurrence),
            other => Err(invalid("fault", format!("unknown fault {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: usize,
    pub d_min: usize,
    pub d_max: usize,
    pub n: usize,
    pub p_list: Vec<f64>,
    pub t_list: Vec<usize>,
    pub seed: u64,
    pub families: Vec<TestFamily>,
    pub solver: SolverOptions,
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            m: 1,
            d_min: 6,
            d_max: 6,
            n: 2,
            p_list: vec![2.0],
            t_list: vec![1, 2, 3],
            seed: 42,
            families: TestFamily::ALL.to_vec(),
            solver: SolverOptions::default(),
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(invalid("m", "must be at least 1"));
        }
        if self.d_min < 1 || self.d_min > self.d_max {
            return Err(invalid("d range", format!("empty range {}..={}", self.d_min, self.d_max)));
        }
        if self.n < 1 {
            return Err(invalid("n", "must be at least 1"));
        }
        if self.p_list.is_empty() {
            return Err(invalid("p", "no exponents given"));
        }
        if let Some(p) = self.p_list.iter().find(|p| !(**p >= 1.0)) {
            return Err(invalid("p", format!("exponents must be >= 1, got {p}")));
        }
        if self.t_list.iter().any(|&t| t < 1) {
            return Err(invalid("t", "orders must be positive integers"));
        }
        if self.families.is_empty() {
            return Err(invalid("family", "no test families given"));
        }
        Ok(())
    }

    pub fn d_range(&self) -> std::ops::RangeInclusive<usize> {
        self.d_min..=self.d_max
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON, output path excluded.
    pub fn config_hash(&self) -> String {
        let mut key = self.clone();
        key.out = None;
        let json = serde_json::to_string(&key).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

/// One measured number before provenance is attached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub m: usize,
    pub d: usize,
    pub n: usize,
    pub p: f64,
    pub family: String,
    pub quantity: String,
    pub value: f64,
    /// Relative duality gap; zero for exact quantities.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub m: usize,
    pub d: usize,
    pub n: usize,
    pub p: String,
    pub family: String,
    pub quantity: String,
    pub value: f64,
    pub gap: f64,
    pub seed: u64,
    pub build_id: String,
    pub config_hash: String,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "m",
    "d",
    "n",
    "p",
    "family",
    "quantity",
    "value",
    "gap",
    "seed",
    "build_id",
    "config_hash",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub build_id: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config: &ExperimentConfig, build_id: impl Into<String>) -> Self {
        Provenance {
            build_id: build_id.into(),
            config_hash: config.config_hash(),
            seed: config.seed,
        }
    }

    pub fn row(&self, m: &Measurement) -> CsvRow {
        CsvRow {
            m: m.m,
            d: m.d,
            n: m.n,
            p: format_p(m.p),
            family: m.family.clone(),
            quantity: m.quantity.clone(),
            value: m.value,
            gap: m.gap,
            seed: self.seed,
            build_id: self.build_id.clone(),
            config_hash: self.config_hash.clone(),
        }
    }
}

fn format_p(p: f64) -> String {
    if p.is_infinite() {
        "inf".to_string()
    } else {
        p.to_string()
    }
}

pub fn write_csv<W: Write>(writer: W, measurements: &[Measurement], provenance: &Provenance) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| invalid("csv", e.to_string());
    if measurements.is_empty() {
        out.write_record(CSV_COLUMNS).map_err(io)?;
    }
    for m in measurements {
        out.serialize(provenance.row(m)).map_err(io)?;
    }
    out.flush().map_err(|e| invalid("csv", e.to_string()))
}

fn group_or_skip(m: usize, d: usize, n: usize) -> Option<GroupSpec> {
    let spec = GroupSpec::new(m, d).ok()?;
    check_memory(&spec, n).ok()?;
    Some(spec)
}

fn skipped(config: &ExperimentConfig, d: usize, family: &str) -> Measurement {
    Measurement {
        m: config.m,
        d,
        n: config.n,
        p: 0.0,
        family: family.to_string(),
        quantity: "skipped_memory_guard".to_string(),
        value: 0.0,
        gap: 0.0,
    }
}

/// `E_p(d) = ||(F_k f)_k||_{L_p(l_inf)} / ||f||_p` for the sphere means and
/// both smoothed families, plus the kernel-level square-function bound.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<Measurement>> {
    config.validate()?;
    let mut out = Vec::new();
    for d in config.d_range() {
        let Some(spec) = group_or_skip(config.m, d, config.n) else {
            out.push(skipped(config, d, "all"));
            continue;
        };
        for &family in &config.families {
            let f = family.field(spec, config.n, config.seed)?;
            let sphere = SphereFamily::from_field(&f);
            let sequences = [
                ("E_T", sphere.means()[1..].to_vec()),
                ("E_TM", family_smoothed(&sphere, Mode::Local).into_entries()),
                ("E_TD", family_smoothed(&sphere, Mode::Distant).into_entries()),
            ];
            for &p in &config.p_list {
                let norm = field_norm(&f, p)?;
                for (quantity, seq) in &sequences {
                    let cert = linf_norm_field_with(seq, p, &config.solver)?;
                    out.push(Measurement {
                        m: config.m,
                        d,
                        n: config.n,
                        p,
                        family: family.to_string(),
                        quantity: quantity.to_string(),
                        value: cert.primal_value / norm,
                        gap: if cert.primal_value > 0.0 { cert.gap / cert.primal_value } else { 0.0 },
                    });
                }
            }
        }
        for &t in &config.t_list {
            for (mode, name) in [(Mode::Local, "l2_bound_local"), (Mode::Distant, "l2_bound_distant")] {
                out.push(Measurement {
                    m: config.m,
                    d,
                    n: config.n,
                    p: 2.0,
                    family: "kernel".to_string(),
                    quantity: format!("{name}_t{t}"),
                    value: l2_multiplier_bound(spec, t, mode)?,
                    gap: 0.0,
                });
            }
        }
    }
    Ok(out)
}

/// `W(d) = ||sup_k sigma_k * delta_0||_{L_{1,inf}}` for scalar fields, with
/// `k = 0..=d`, and `W(d) / sqrt(d)`.
pub fn run_weak11(config: &ExperimentConfig) -> Result<Vec<Measurement>> {
    config.validate()?;
    let mut out = Vec::new();
    for d in config.d_range() {
        let Some(spec) = group_or_skip(config.m, d, 1) else {
            out.push(skipped(config, d, "delta"));
            continue;
        };
        let w = weak11_value(spec)?;
        for (quantity, value) in [("W", w), ("W_over_sqrt_d", w / (d as f64).sqrt())] {
            out.push(Measurement {
                m: config.m,
                d,
                n: 1,
                p: 1.0,
                family: "delta".to_string(),
                quantity: quantity.to_string(),
                value,
                gap: 0.0,
            });
        }
    }
    Ok(out)
}

pub fn weak11_value(spec: GroupSpec) -> Result<f64> {
    let delta = OperatorField::delta(spec, &identity(1));
    weak_linf_norm_diag(&sphere_means(&delta), 1.0)
}

/// Per `d`: the best `J_P` domination constant of every local smoothed
/// kernel, and the distant comparison constant for every `L`.
pub fn run_domination(config: &ExperimentConfig) -> Result<Vec<Measurement>> {
    config.validate()?;
    let mut out = Vec::new();
    for d in config.d_range() {
        let spec = RadialSpec::new(config.m, d)?;
        let grid = default_p_grid(spec);
        let row = |quantity: String, value: f64| Measurement {
            m: config.m,
            d,
            n: config.n,
            p: 0.0,
            family: "kernel".to_string(),
            quantity,
            value,
            gap: 0.0,
        };
        let mut local_max = 0.0f64;
        for big_k in 0..=Mode::Local.n_max(spec) {
            let search = best_domination_search(spec, big_k, &grid)?;
            local_max = local_max.max(search.c_star);
            out.push(row(format!("C_local[K={big_k}]"), search.c_star));
            out.push(row(format!("P_star[K={big_k}]"), search.p_star));
        }
        out.push(row("C_local_max".to_string(), local_max));
        let table = intersection_table(spec);
        let mut distant_max = 0.0f64;
        for l in 0..=Mode::Local.n_max(spec) {
            let report = distant_domination(&table, l)?;
            distant_max = distant_max.max(report.min_ratio);
            out.push(row(format!("C_distant[L={l}]"), report.min_ratio));
        }
        out.push(row("C_distant_max".to_string(), distant_max));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub m: usize,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub config_hash: String,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Suite {
    checks: Vec<CheckResult>,
}

impl Suite {
    /// Passes when `discrepancy <= tolerance`.
    fn at_most(&mut self, name: impl Into<String>, discrepancy: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.into(),
            discrepancy,
            tolerance,
            pass: discrepancy <= tolerance,
            warning: None,
        });
    }
}

fn rel(a: &OperatorField, b: &OperatorField) -> Result<f64> {
    Ok(a.sub(b)?.l2_norm() / b.l2_norm().max(f64::MIN_POSITIVE))
}

/// The invariant suite at `m`, `d = d_max`, `n`, `seed`.
pub fn run_verify(config: &ExperimentConfig, fault: Option<Fault>) -> Result<VerifyReport> {
    config.validate()?;
    let (m, d, n, seed) = (config.m, config.d_max, config.n, config.seed);
    let spec = GroupSpec::new(m, d)?;
    check_memory(&spec, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = OperatorField::from_fn(spec, n, |_| ginibre(n, &mut rng));
    let mut suite = Suite { checks: Vec::new() };

    let hat = forward_transform(&f);
    suite.at_most("fourier_roundtrip", rel(&inverse_transform(&hat), &f)?, 1e-10);
    suite.at_most("parseval", (hat.l2_norm() - f.l2_norm()).abs() / f.l2_norm(), 1e-10);

    let rho_m = rho(spec);
    let mut eta_err = 0.0f64;
    for eta in [0.1, 0.3, rho_m] {
        eta_err = eta_err.max(rel(&eta_noise(&f, eta)?, &eta_noise_multiplier(&f, eta)?)?);
    }
    suite.at_most("eta_noise_routes", eta_err, 1e-10);
    let twice = noise_operator(&noise_operator(&f, 1.0)?, 1.0)?;
    suite.at_most("noise_semigroup", rel(&twice, &noise_operator(&f, 2.0)?)?, 1e-10);
    let mut j_err = 0.0f64;
    for p in [0.1, 0.25, rho_m] {
        j_err = j_err.max(rel(&ergodic_j(&f, p)?, &ergodic_j_kernel(&f, p)?)?);
    }
    suite.at_most("averaged_noise_routes", j_err, 1e-9);
    for p in [0.1, 0.25, rho_m] {
        let report = verify_nu_identity(spec, p, 32)?;
        suite.at_most(format!("nu_mass[P={p}]"), (report.mass - 1.0).abs(), 1e-9);
        suite.at_most(format!("nu_identity[P={p}]"), report.max_abs_error, 1e-6);
    }

    let sphere = SphereFamily::from_field(&f);
    let recurrence_fault = match fault {
        Some(Fault::CesaroRecurrence) => Some(RecurrenceFault::default()),
        None => None,
    };
    for &t in &config.t_list {
        for beta in [0.0, 0.7, -0.7] {
            let report = identity_audit(&sphere, t, beta, None, recurrence_fault)?;
            for c in &report.checks {
                let mode = match c.mode {
                    Mode::Local => "local",
                    Mode::Distant => "distant",
                };
                suite.at_most(
                    format!("identity_{}[{mode},t={t},beta={beta}]", c.identity),
                    c.max_discrepancy,
                    report.tolerance,
                );
            }
        }
    }
    suite.at_most("identifications", identifications(&sphere).max() / f.l2_norm(), 1e-12);

    let psd = OperatorField::from_fn(spec, n, |_| random_psd(n, &mut rng));
    let mut young = 0.0f64;
    for mean in sphere_means(&psd) {
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            young = young.max(field_norm(&mean, p)? / field_norm(&psd, p)? - 1.0);
        }
    }
    suite.at_most("young", young, 1e-10);

    let action = CommutingUnitaryAction::random(spec, n, seed)?;
    let x = random_psd(n, &mut rng);
    suite.at_most("intertwining", intertwining_error(&action, &x)?, 1e-10);
    for p in [1.5, 2.0, 4.0] {
        let report = transference_audit(&action, &x, p)?;
        suite.checks.push(CheckResult {
            name: format!("transference[p={p}]"),
            discrepancy: (report.lhs - report.factor * report.rhs).max(0.0),
            tolerance: crate::actions::TRANSFERENCE_SLACK,
            pass: report.pass || report.inconclusive,
            warning: report.inconclusive.then(|| "solver did not reach its gap target".to_string()),
        });
    }
    let mut ks = f64::INFINITY;
    for trial in 0..20u64 {
        let a = CommutingUnitaryAction::random(spec, n, seed.wrapping_add(trial))?;
        let y = ginibre(n, &mut rng);
        ks = ks.min(kadison_schwarz_gap(&a, &y, rng.random_range(0..=d))?);
    }
    suite.at_most("kadison_schwarz", (-ks).max(0.0), 1e-10);

    let bound = l2_multiplier_bound(spec, 1, Mode::Local)?;
    suite.checks.push(CheckResult {
        name: "l2_multiplier_bound[t=1]".to_string(),
        discrepancy: bound,
        tolerance: f64::INFINITY,
        pass: bound.is_finite(),
        warning: None,
    });

    let pass = suite.checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        m,
        d,
        n,
        seed,
        config_hash: config.config_hash(),
        checks: suite.checks,
        pass,
    })
}
