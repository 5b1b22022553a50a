use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stfeedback::config::parse_sim_config;
use stfeedback::dispersion::{check_goc, rank_one_set, statistical_set, DispersionSet, GOC_TOL};
use stfeedback::matkit::{Rng, C64};
use stfeedback::plot::{render_svg, PlotOptions};
use stfeedback::report::{parse_csv, to_csv};
use stfeedback::simengine::run_table;
use stfeedback::verify::{self, PropertyResult};
use stfeedback::Error;

const SEED_VAR: &str = "STFEEDBACK_SEED";

#[derive(Parser)]
#[command(
    name = "stfeedback",
    version,
    about = "Space-time codes with quantized feedback"
)]
struct Cli {
    /// Seed override; falls back to the STFEEDBACK_SEED environment variable.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write the MI curves as CSV.
    Simulate {
        config: PathBuf,
        /// Output CSV (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run property suites and report PASS/FAIL per property.
    Verify {
        /// Suite name, or `all`.
        suite: String,
        /// Extra dispersion-set file to check for orthogonality.
        #[arg(long)]
        set: Option<PathBuf>,
    },
    /// Build a dispersion set and write it in text form.
    Construct {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        nc: usize,
        #[arg(long)]
        nt: usize,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Rank-one: transmit along basis vector e_MODE (1-based).
        #[arg(long, conflicts_with = "direction")]
        mode: Option<usize>,
        /// Rank-one: real beam direction, comma separated; normalized.
        #[arg(long)]
        direction: Option<String>,
        /// Statistical: diagonal power profile, comma separated; rescaled to
        /// trace Nt*Nc/K.
        #[arg(long)]
        lambda: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Render a simulate CSV as an SVG line chart.
    Plot {
        csv: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        xmin: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        xmax: Option<f64>,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    RankOne,
    Statistical,
}

/// Failure carrying its process exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: 2,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Infeasible(_)) {
            3
        } else {
            2
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Failure::usage(format!("{SEED_VAR} must be an unsigned integer, got `{v}`"))
        }),
        Err(_) => Ok(None),
    }
}

fn parse_list(name: &str, v: &str) -> Result<Vec<f64>, Failure> {
    v.split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            Failure::usage(format!(
                "--{name} expects comma-separated numbers, got `{v}`"
            ))
        })
}

fn simulate(config: &Path, output: Option<&Path>, flag_seed: Option<u64>) -> Outcome {
    let mut cfg = parse_sim_config(&read(config)?, env_seed()?.unwrap_or(0))?;
    if let Some(s) = flag_seed {
        cfg.seed = s;
    }
    let table = run_table(&cfg)?;
    for w in &table.warnings {
        eprintln!("warning: {w}");
    }
    let csv = to_csv(&table.curve_points());
    match output {
        Some(p) => write(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_cmd(suite: &str, set: Option<&Path>, seed: u64) -> Outcome {
    let mut results: Vec<PropertyResult> = verify::run(suite, seed)?;
    if let Some(path) = set {
        let fixture = DispersionSet::from_text(&read(path)?)?;
        let label = path
            .file_stem()
            .map_or("set".into(), |s| s.to_string_lossy().into_owned());
        results.extend(verify::goc_properties(
            &label,
            &fixture,
            &mut Rng::new(seed, 0),
        )?);
    }
    let mut out = std::io::stdout().lock();
    for r in &results {
        let _ = writeln!(out, "{r}");
    }
    let passed = results.iter().filter(|r| r.pass).count();
    let _ = writeln!(out, "{passed}/{} properties passed", results.len());
    Ok(if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[allow(clippy::too_many_arguments)]
fn construct(
    k: usize,
    nc: usize,
    nt: usize,
    kind: Kind,
    mode: Option<usize>,
    direction: Option<&str>,
    lambda: Option<&str>,
    output: &Path,
    seed: u64,
) -> Outcome {
    if k > 2 * nc {
        return Err(Failure {
            code: 3,
            msg: format!("infeasible: K = {k} violates K <= 2Nc (2Nc = {})", 2 * nc),
        });
    }
    let set = match kind {
        Kind::RankOne => {
            if lambda.is_some() {
                return Err(Failure::usage("--lambda applies to --kind statistical"));
            }
            let u: Vec<f64> = match (mode, direction) {
                (_, Some(d)) => parse_list("direction", d)?,
                (m, None) => {
                    let m = m.unwrap_or(1);
                    if m == 0 || m > nt {
                        return Err(Failure::usage(format!("--mode must be in 1..={nt}")));
                    }
                    (0..nt)
                        .map(|i| if i + 1 == m { 1.0 } else { 0.0 })
                        .collect()
                }
            };
            if u.len() != nt {
                return Err(Failure::usage(format!(
                    "--direction needs {nt} entries, got {}",
                    u.len()
                )));
            }
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Failure::usage(
                    "--direction must be a non-zero finite vector",
                ));
            }
            let u: Vec<C64> = u.iter().map(|x| C64::new(x / norm, 0.0)).collect();
            rank_one_set(&u, k, nc)?
        }
        Kind::Statistical => {
            if mode.is_some() || direction.is_some() {
                return Err(Failure::usage(
                    "--mode/--direction apply to --kind rank-one",
                ));
            }
            let raw = match lambda {
                Some(l) => parse_list("lambda", l)?,
                None => vec![1.0; nt],
            };
            if raw.len() != nt {
                return Err(Failure::usage(format!(
                    "--lambda needs {nt} entries, got {}",
                    raw.len()
                )));
            }
            let sum: f64 = raw.iter().sum();
            if raw.iter().any(|x| !x.is_finite() || *x < 0.0) || sum <= 0.0 {
                return Err(Failure::usage(
                    "--lambda entries must be non-negative with a positive sum",
                ));
            }
            let target = (nt * nc) as f64 / k.max(1) as f64;
            let lam: Vec<f64> = raw.iter().map(|x| x / sum * target).collect();
            statistical_set(&lam, k, nc, &mut Rng::new(seed, 0))?
        }
    };
    write(output, &set.to_text())?;
    let report = check_goc(&set, GOC_TOL);
    println!("matrices: {}", set.k());
    println!("goc_residual: {:e}", report.worst);
    println!("total_power: {}", set.total_power());
    Ok(ExitCode::SUCCESS)
}

fn plot(csv: &Path, output: &Path, opts: PlotOptions) -> Outcome {
    let points = parse_csv(&read(csv)?)?;
    write(output, &render_svg(&points, &opts)?)?;
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Outcome {
    let seed = || -> Result<u64, Failure> {
        Ok(match cli.seed {
            Some(s) => s,
            None => env_seed()?.unwrap_or(verify::DEFAULT_SEED),
        })
    };
    match &cli.command {
        Command::Simulate { config, output } => simulate(config, output.as_deref(), cli.seed),
        Command::Verify { suite, set } => verify_cmd(suite, set.as_deref(), seed()?),
        Command::Construct {
            k,
            nc,
            nt,
            kind,
            mode,
            direction,
            lambda,
            output,
        } => construct(
            *k,
            *nc,
            *nt,
            *kind,
            *mode,
            direction.as_deref(),
            lambda.as_deref(),
            output,
            seed()?,
        ),
        Command::Plot {
            csv,
            output,
            xmin,
            xmax,
            title,
        } => plot(
            csv,
            output,
            PlotOptions {
                xmin: *xmin,
                xmax: *xmax,
                title: title.clone(),
            },
        ),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("stfeedback: {}", f.msg.lines().next().unwrap_or(""));
            ExitCode::from(f.code)
        }
    }
}
