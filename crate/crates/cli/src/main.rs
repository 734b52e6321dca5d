use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hamming_maximal::experiments::{
    run_domination, run_sweep, run_verify, run_weak11, write_csv, ExperimentConfig, Fault, Measurement, Provenance,
    TestFamily,
};

const BUILD_ID: &str = env!("HAMMING_BUILD_ID");

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "hamming-maximal", version, about = "Spherical maximal means on Z_{m+1}^d: audits and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suite and print a JSON report.
    Verify(Options),
    /// Empirical maximal constants across dimensions, as CSV.
    Sweep(Options),
    /// The scalar weak-(1,1) value of the maximal function of a point mass.
    Weak11(Options),
    /// Kernel domination constants for the smoothed families.
    Domination(Options),
}

#[derive(Args, Clone, Default)]
struct Options {
    /// JSON or TOML file with an experiment configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d_min: Option<usize>,
    #[arg(long)]
    d_max: Option<usize>,
    /// Matrix dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Exponent, repeatable; `inf` allowed.
    #[arg(long = "p")]
    p: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Test family, repeatable: delta, sphere_indicator, random_psd, constant.
    #[arg(long = "family")]
    family: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Deliberately corrupt a computation (for testing the checks).
    #[arg(long, hide = true)]
    fault_inject: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(String),
}

impl From<hamming_maximal::Error> for Failure {
    fn from(e: hamming_maximal::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let parsed = if is_toml {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn resolve(options: &Options) -> Result<ExperimentConfig, Failure> {
    let mut config = match &options.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = options.m {
        config.m = m;
    }
    match (options.d_min, options.d_max) {
        (Some(lo), Some(hi)) => {
            config.d_min = lo;
            config.d_max = hi;
        }
        (Some(lo), None) => {
            config.d_min = lo;
            config.d_max = config.d_max.max(lo);
        }
        (None, Some(hi)) => {
            config.d_max = hi;
            config.d_min = config.d_min.min(hi);
        }
        (None, None) => {}
    }
    if let Some(n) = options.n {
        config.n = n;
    }
    if !options.p.is_empty() {
        config.p_list = options.p.clone();
    }
    if let Some(seed) = options.seed {
        config.seed = seed;
    }
    if !options.family.is_empty() {
        config.families = options
            .family
            .iter()
            .map(|f| f.parse::<TestFamily>())
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(out) = &options.out {
        config.out = Some(out.display().to_string());
    }
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(config)
}

fn sink(config: &ExperimentConfig) -> Result<Box<dyn Write>, Failure> {
    Ok(match &config.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_csv(config: &ExperimentConfig, rows: &[Measurement]) -> Result<(), Failure> {
    write_csv(sink(config)?, rows, &Provenance::new(config, BUILD_ID))?;
    Ok(())
}

fn run(command: Command) -> Result<bool, Failure> {
    let options = match &command {
        Command::Verify(o) | Command::Sweep(o) | Command::Weak11(o) | Command::Domination(o) => o.clone(),
    };
    let fault = options
        .fault_inject
        .as_deref()
        .map(str::parse::<Fault>)
        .transpose()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let config = resolve(&options)?;
    match command {
        Command::Verify(_) => {
            let report = run_verify(&config, fault)?;
            let mut out = sink(&config)?;
            writeln!(out, "{}", report.to_json())?;
            out.flush()?;
            for c in report.failures() {
                eprintln!("FAIL {}: {:e} > {:e}", c.name, c.discrepancy, c.tolerance);
            }
            Ok(report.pass)
        }
        Command::Sweep(_) => {
            let rows = run_sweep(&config)?;
            emit_csv(&config, &rows)?;
            Ok(rows.iter().all(|r| r.value.is_finite()))
        }
        Command::Weak11(_) => {
            let rows = run_weak11(&config)?;
            emit_csv(&config, &rows)?;
            Ok(rows.iter().all(|r| r.value.is_finite()))
        }
        Command::Domination(_) => {
            let rows = run_domination(&config)?;
            emit_csv(&config, &rows)?;
            let finite = rows.iter().all(|r| r.value.is_finite());
            if !finite {
                eprintln!("FAIL some domination constant is infinite");
            }
            Ok(finite)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
    }
}
