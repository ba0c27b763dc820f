//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or usage, 2 numerical, 3 I/O,
//! 4 candidate rejected by `verify`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mixwass::config::RunConfigFile;
use mixwass::extraction::AtomicMeasure;
use mixwass::gaussmoments::{moments_of_measure, MeasureSpec};
use mixwass::hierarchy::{run, verify_mixture, Certificate, HierarchyReport, DEFAULT_VERIFY_DEGREES};
use mixwass::relaxation::Metric;
use mixwass::{Error, Result};

const EXIT_REJECTED: u8 = 4;

#[derive(Parser)]
#[command(name = "mixwass", version, about = "Wasserstein distance to Gaussian mixtures via moment relaxations")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Highest relaxation order.
    #[arg(long, global = true)]
    order_max: Option<usize>,
    #[arg(long, global = true, value_enum)]
    metric: Option<MetricArg>,
    /// Solver tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Relative singular-value threshold for numerical rank.
    #[arg(long, global = true)]
    eps_rank: Option<f64>,
    /// Values above this certify "not a mixture".
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for report.json and trace.csv.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    W2,
    W1,
}

#[derive(Subcommand)]
enum Command {
    /// Print the moments of a measure as a JSON array.
    Moments {
        /// Measure spec: a JSON file or inline JSON. Defaults to the config's measure.
        #[arg(long)]
        measure: Option<String>,
        #[arg(long, default_value_t = 4)]
        degree: usize,
    },
    /// Run the hierarchy and report the relaxation values.
    Distance,
    /// Run the hierarchy and print any extracted mixture.
    Identify,
    /// Check a candidate mixture against the moments of a measure.
    Verify {
        /// Measure spec (file or inline JSON). Defaults to the config's measure.
        #[arg(long)]
        measure: Option<String>,
        /// Candidate file: an atomic measure `{"atoms": .., "weights": ..}`
        /// or a report written by `identify`.
        #[arg(long)]
        candidate: PathBuf,
        /// Relaxation order `n`; checked degrees start at `n + 2`.
        #[arg(long)]
        order: Option<usize>,
        /// Number of checked degrees `J`.
        #[arg(long)]
        extra: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Moments { measure, degree } => {
            let spec = measure_arg(cli, measure.as_deref())?;
            let moments = moments_of_measure(&spec, *degree)?;
            println!("{}", serde_json::to_string(moments.as_slice())?);
            Ok(0)
        }
        Command::Distance => {
            let report = run_config(cli)?;
            print_summary(&report);
            Ok(0)
        }
        Command::Identify => {
            let report = run_config(cli)?;
            print_summary(&report);
            if let Certificate::MixtureCandidate {
                measure,
                verification,
                outside,
                ..
            } = &report.certificate
            {
                println!("{:>4} {:>24} {:>24} {:>24}", "k", "m", "sigma", "weight");
                for (k, (&(m, s), w)) in measure.atoms.iter().zip(&measure.weights).enumerate() {
                    let flag = if outside.contains(&k) { "  outside S" } else { "" };
                    println!("{k:>4} {m:>24.16e} {s:>24.16e} {w:>24.16e}{flag}");
                }
                println!("{:>6} {:>24}", "degree", "residual");
                for (j, r) in verification.degrees.iter().zip(&verification.residuals) {
                    println!("{j:>6} {r:>24.16e}");
                }
                println!(
                    "verified up to degree {}: {}",
                    verification.degrees.last().copied().unwrap_or(0),
                    verification.verified
                );
            }
            Ok(0)
        }
        Command::Verify {
            measure,
            candidate,
            order,
            extra,
        } => {
            let spec = measure_arg(cli, measure.as_deref())?;
            let (atoms, found_n, found_j) = read_candidate(candidate)?;
            let n = order.or(found_n).ok_or_else(|| {
                Error::Usage("--order is required for a bare atomic measure".into())
            })?;
            let j = extra.or(found_j).unwrap_or(DEFAULT_VERIFY_DEGREES);
            let result = verify_mixture(&spec, &atoms, n, j)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
            Ok(if result.verified { 0 } else { EXIT_REJECTED })
        }
    }
}

fn load_config(cli: &Cli) -> Result<Option<RunConfigFile>> {
    cli.config.as_deref().map(RunConfigFile::load).transpose()
}

fn measure_arg(cli: &Cli, arg: Option<&str>) -> Result<MeasureSpec> {
    let spec = match arg {
        Some(text) if text.trim_start().starts_with('{') => {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("measure: {e}")))?
        }
        Some(path) => {
            let path = Path::new(path);
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut spec: MeasureSpec = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if let Some(dir) = path.parent() {
                spec.resolve_paths(dir);
            }
            spec
        }
        None => match load_config(cli)? {
            Some(cfg) => cfg.measure,
            None => return Err(Error::Usage("give --measure or --config".into())),
        },
    };
    spec.validate()?;
    Ok(spec)
}

fn run_config(cli: &Cli) -> Result<HierarchyReport> {
    let file = load_config(cli)?.ok_or_else(|| Error::Usage("--config is required".into()))?;
    let mut cfg = file.hierarchy()?;
    if let Some(n) = cli.order_max {
        cfg.n_max = n;
    }
    if let Some(m) = cli.metric {
        cfg.metric = match m {
            MetricArg::W2 => Metric::W2,
            MetricArg::W1 => Metric::W1,
        };
    }
    if let Some(t) = cli.tol {
        cfg.solver.tol = t;
    }
    if let Some(e) = cli.eps_rank {
        cfg.eps_rank = e;
    }
    if let Some(e) = cli.epsilon {
        cfg.epsilon = e;
    }
    if let Some(s) = cli.seed {
        cfg.solver.seed = s;
    }
    let report = run(&cfg)?;
    let out = cli.out.clone().or(file.output).unwrap_or_else(|| PathBuf::from("."));
    write_outputs(&out, &report)?;
    Ok(report)
}

fn write_outputs(dir: &Path, report: &HierarchyReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = dir.join("report.json");
    fs::write(&json, to_json(report)?).map_err(|e| Error::io(&json, e))?;
    let csv = dir.join("trace.csv");
    fs::write(&csv, report.csv()).map_err(|e| Error::io(&csv, e))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn print_summary(report: &HierarchyReport) {
    print!("{}", report.csv());
    match &report.certificate {
        Certificate::NotMixture { n, tau } => {
            println!("certificate: not-mixture at order {n}, tau = {tau:.16e}")
        }
        Certificate::MixtureCandidate { n, measure, .. } => {
            println!("certificate: mixture-candidate at order {n} with {} atoms", measure.len())
        }
        Certificate::Inconclusive { reason } => println!("certificate: inconclusive ({reason})"),
    }
}

/// Atoms plus the order and depth recorded in a report, when present.
fn read_candidate(path: &Path) -> Result<(AtomicMeasure, Option<usize>, Option<usize>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if let Ok(measure) = serde_json::from_str::<AtomicMeasure>(&text) {
        let measure = AtomicMeasure::new(measure.atoms, measure.weights)?;
        return Ok((measure, None, None));
    }
    let report: HierarchyReport = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: not a candidate or report: {e}", path.display())))?;
    match report.certificate {
        Certificate::MixtureCandidate {
            n,
            measure,
            verification,
            ..
        } => Ok((measure, Some(n), Some(verification.degrees.len()))),
        _ => Err(Error::Config(format!(
            "{}: report carries no mixture candidate",
            path.display()
        ))),
    }
}
