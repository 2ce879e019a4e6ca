//! Command line front end: moment verification, simulation, bias,
//! convergence, benchmark and stopping-time experiments, all emitting
//! deterministic CSV controlled by `--seed`.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use orthosde::mc::{
    bench, convergence_study, run_mc, stopping_time_experiment, trial_values, McConfig,
    DEFAULT_CI_MULTIPLIER, T9_CI_MULTIPLIER,
};
use orthosde::moments::{fourth_moment_bias, verify_moment_conditions, MomentReport};
use orthosde::numeric::CompensatedSum;
use orthosde::orthogonal::{is_odd_ordered, phi_bitmask, phi_gray};
use orthosde::sde::ModelKind;
use orthosde::{GeneratorSpec, SchemeKind, SdeModel, TestFunction};

#[derive(Parser)]
#[command(
    name = "orthosde",
    version,
    about = "Weak Euler-Maruyama schemes driven by orthogonal-system increments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check moment conditions (or enumeration order with --odd-ordered).
    Verify(VerifyArgs),
    /// Estimate E[f(X_T)] and report the running mean against trial count.
    Simulate(SimulateArgs),
    /// Compare the analytic fourth-moment gap with a Monte Carlo estimate.
    Bias(BiasArgs),
    /// Fit the weak-error decay rate over a grid of step counts.
    Convergence(ConvergenceArgs),
    /// Time every scheme/dimension combination on one estimation task.
    Bench(BenchArgs),
    /// Count trials until the running mean settles near its known target.
    Stopping(StoppingArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Write the CSV to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a matplotlib script as <out>.py (requires --out).
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Scheme to check, or "all".
    #[arg(long, default_value = "all")]
    scheme: String,
    /// State dimension for the moment check.
    #[arg(long, default_value_t = 8)]
    d: usize,
    /// Level; defaults to the smallest level admitting d coordinates,
    /// or to 12 under --odd-ordered.
    #[arg(long = "K")]
    k: Option<u32>,
    /// Check that the index enumeration is odd ordered for every level
    /// up to --K instead of checking moment conditions.
    #[arg(long)]
    odd_ordered: bool,
    /// Write the CSV to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scheme: String,
    /// Model: case1, case2, brownian or ou.
    #[arg(long, default_value = "case1")]
    model: String,
    #[arg(long)]
    d: usize,
    #[arg(long = "K")]
    k: Option<u32>,
    /// Number of time steps.
    #[arg(long, default_value_t = 32)]
    n: u64,
    /// Terminal time.
    #[arg(long = "T", default_value_t = 1.0)]
    t: f64,
    /// Number of Monte Carlo trials.
    #[arg(long, default_value_t = 65536)]
    m: u64,
    #[arg(long, env = "ORTHOSDE_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Reversion rate of the ou model.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BiasArgs {
    #[arg(long)]
    scheme: String,
    #[arg(long)]
    d: usize,
    #[arg(long = "K")]
    k: Option<u32>,
    /// Number of time steps.
    #[arg(long, default_value_t = 16)]
    n: u64,
    /// Terminal time.
    #[arg(long = "T", default_value_t = 1.0)]
    t: f64,
    /// Number of Monte Carlo trials.
    #[arg(long, default_value_t = 1_000_000)]
    m: u64,
    #[arg(long, env = "ORTHOSDE_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Use the 2.262 confidence multiplier instead of 1.96.
    #[arg(long)]
    paper_ci: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long)]
    scheme: String,
    /// Model with a closed-form reference: brownian or ou.
    #[arg(long, default_value = "ou")]
    model: String,
    #[arg(long)]
    d: usize,
    #[arg(long = "K")]
    k: Option<u32>,
    /// Comma-separated grid of step counts.
    #[arg(long, value_delimiter = ',', default_values_t = [4u64, 8, 16, 32])]
    n: Vec<u64>,
    /// Terminal time.
    #[arg(long = "T", default_value_t = 1.0)]
    t: f64,
    /// Number of Monte Carlo trials per grid point.
    #[arg(long, default_value_t = 100_000)]
    m: u64,
    #[arg(long, env = "ORTHOSDE_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Reversion rate of the ou model.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Use the 2.262 confidence multiplier instead of 1.96.
    #[arg(long)]
    paper_ci: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated schemes to time.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "gaussian,haar,walsh-gray,walsh-bitmask"
    )]
    scheme: Vec<String>,
    /// Comma-separated dimensions to time.
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    /// Model: case1, case2, brownian or ou.
    #[arg(long, default_value = "case1")]
    model: String,
    /// Number of time steps.
    #[arg(long, default_value_t = 16)]
    n: u64,
    /// Terminal time.
    #[arg(long = "T", default_value_t = 1.0)]
    t: f64,
    /// Number of Monte Carlo trials per row.
    #[arg(long, default_value_t = 10_000)]
    m: u64,
    #[arg(long, env = "ORTHOSDE_SEED", default_value_t = 42)]
    seed: u64,
    /// Reversion rate of the ou model.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct StoppingArgs {
    #[arg(long)]
    scheme: String,
    #[arg(long)]
    d: usize,
    #[arg(long = "K")]
    k: Option<u32>,
    /// Number of time steps.
    #[arg(long, default_value_t = 16)]
    n: u64,
    /// Terminal time.
    #[arg(long = "T", default_value_t = 1.0)]
    t: f64,
    /// Stop once the running mean is within epsilon of its target.
    #[arg(long)]
    epsilon: f64,
    /// Independent repeats to average over.
    #[arg(long, default_value_t = 10)]
    repeats: u32,
    /// Abort a repeat after this many trials.
    #[arg(long = "trial-cap", default_value_t = 100_000_000)]
    trial_cap: u64,
    #[arg(long, env = "ORTHOSDE_SEED", default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

enum CliError {
    Core(orthosde::Error),
    Usage(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<orthosde::Error> for CliError {
    fn from(err: orthosde::Error) -> Self {
        CliError::Core(err)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(err) => err.fmt(f),
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Io { path, source } => {
                write!(f, "cannot write {}: {source}", path.display())
            }
        }
    }
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(orthosde::Error::Domain(_) | orthosde::Error::Capacity(_)) => {
                ExitCode::from(2)
            }
            CliError::Usage(_) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(args) => cmd_verify(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bias(args) => cmd_bias(args),
        Command::Convergence(args) => cmd_convergence(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Stopping(args) => cmd_stopping(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn parse_schemes(name: &str) -> Result<Vec<SchemeKind>, CliError> {
    if name == "all" {
        Ok(SchemeKind::ALL.to_vec())
    } else {
        Ok(vec![SchemeKind::parse(name)?])
    }
}

fn default_functional(kind: ModelKind) -> TestFunction {
    match kind {
        ModelKind::MeanRepulsion | ModelKind::NeighborDiffusion | ModelKind::Custom => {
            TestFunction::CosSum
        }
        ModelKind::Brownian => TestFunction::ScaledSquareNorm,
        ModelKind::OrnsteinUhlenbeck { .. } => TestFunction::SquareNorm,
    }
}

fn ci_multiplier(paper_ci: bool) -> f64 {
    if paper_ci {
        T9_CI_MULTIPLIER
    } else {
        DEFAULT_CI_MULTIPLIER
    }
}

struct PlotSpec {
    x: &'static str,
    y: &'static str,
    logx: bool,
    logy: bool,
}

fn write_output(output: &OutputArgs, csv: &str, plot: &PlotSpec) -> Result<(), CliError> {
    validate_output(output)?;
    match &output.out {
        Some(path) => {
            fs::write(path, csv).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            if output.plot {
                let mut sidecar = path.clone().into_os_string();
                sidecar.push(".py");
                let sidecar = PathBuf::from(sidecar);
                let script = plot_script(path, plot);
                fs::write(&sidecar, script).map_err(|source| CliError::Io {
                    path: sidecar.clone(),
                    source,
                })?;
            }
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn validate_output(output: &OutputArgs) -> Result<(), CliError> {
    if output.plot && output.out.is_none() {
        return Err(CliError::Usage("--plot requires --out".to_string()));
    }
    Ok(())
}

fn plot_script(csv_path: &std::path::Path, plot: &PlotSpec) -> String {
    let csv_name = csv_path
        .file_name()
        .map(|name| name.to_string_lossy().into_owned())
        .unwrap_or_else(|| csv_path.display().to_string());
    let mut scales = String::new();
    if plot.logx {
        scales.push_str("ax.set_xscale(\"log\", base=2)\n");
    }
    if plot.logy {
        scales.push_str("ax.set_yscale(\"log\")\n");
    }
    format!(
        r##"#!/usr/bin/env python3
"""Plot {y} against {x} from {csv_name} (run from the CSV's directory)."""
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

CSV = "{csv_name}"

with open(CSV) as fh:
    reader = csv.DictReader(line for line in fh if not line.startswith("#"))
    rows = list(reader)

groups = defaultdict(list)
for row in rows:
    groups[row.get("scheme", "")].append((float(row["{x}"]), float(row["{y}"])))

fig, ax = plt.subplots()
for label in sorted(groups):
    xs, ys = zip(*sorted(groups[label]))
    ax.plot(xs, ys, marker="o", label=label or None)
{scales}ax.set_xlabel("{x}")
ax.set_ylabel("{y}")
if all(groups):
    ax.legend()
fig.savefig(CSV + ".png", dpi=150)
print("wrote", CSV + ".png")
"##,
        x = plot.x,
        y = plot.y,
    )
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, CliError> {
    let mut csv = String::from("# schema=orthosde.verify.v1\n");
    writeln!(csv, "{}", MomentReport::CSV_HEADER).unwrap();
    let mut all_pass = true;
    if args.odd_ordered {
        let kinds = match args.scheme.as_str() {
            "all" | "walsh-gray" => vec![SchemeKind::WalshGray],
            "walsh-bitmask" => vec![SchemeKind::WalshBitmask],
            other => {
                return Err(CliError::Usage(format!(
                    "--odd-ordered applies to walsh-gray or walsh-bitmask, not '{other}'"
                )))
            }
        };
        let k_max = args.k.unwrap_or(12);
        for kind in kinds {
            for k in 1..=k_max {
                let ordered = match kind {
                    SchemeKind::WalshGray => is_odd_ordered(|j| phi_gray(j, k), k)?,
                    _ => is_odd_ordered(|j| phi_bitmask(j, k), k)?,
                };
                all_pass &= ordered;
                writeln!(
                    csv,
                    "{},,{},odd_ordered,{}",
                    kind.name(),
                    k,
                    u32::from(!ordered)
                )
                .unwrap();
            }
        }
    } else {
        for kind in parse_schemes(&args.scheme)? {
            let spec = GeneratorSpec::new(kind, args.d, args.k, 1.0)?;
            let report = verify_moment_conditions(spec)?;
            all_pass &= report.pass;
            for row in report.csv_rows() {
                writeln!(csv, "{row}").unwrap();
            }
        }
    }
    let output = OutputArgs {
        out: args.out,
        plot: false,
    };
    write_output(
        &output,
        &csv,
        &PlotSpec {
            x: "K",
            y: "violation",
            logx: false,
            logy: false,
        },
    )?;
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, CliError> {
    validate_output(&args.output)?;
    let kind = SchemeKind::parse(&args.scheme)?;
    let model = SdeModel::parse(&args.model, args.d, args.rate)?;
    let f = default_functional(model.kind());
    let spec = GeneratorSpec::new(kind, args.d, args.k, args.t / args.n as f64)?;
    let cfg = McConfig::new(args.m, args.seed).with_threads(args.threads);
    let (values, _) = trial_values(&model, f, spec, args.n, args.t, &cfg)?;

    let mut csv = String::from("# schema=orthosde.simulate.v1\n");
    writeln!(
        csv,
        "# params: scheme={} model={} functional={} d={} K={} n={} T={} m={} seed={}",
        kind.name(),
        model.name(),
        f.name(),
        args.d,
        spec.k(),
        args.n,
        args.t,
        args.m,
        args.seed
    )
    .unwrap();
    writeln!(csv, "trials,running_mean").unwrap();
    let stride = (args.m / 1024).max(1);
    let mut acc = CompensatedSum::new();
    for (i, value) in values.iter().enumerate() {
        acc.add(*value);
        let count = i as u64 + 1;
        if count.is_multiple_of(stride) || count == args.m {
            writeln!(csv, "{},{}", count, acc.value() / count as f64).unwrap();
        }
    }
    write_output(
        &args.output,
        &csv,
        &PlotSpec {
            x: "trials",
            y: "running_mean",
            logx: false,
            logy: false,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bias(args: BiasArgs) -> Result<ExitCode, CliError> {
    validate_output(&args.output)?;
    let kind = SchemeKind::parse(&args.scheme)?;
    let model = SdeModel::brownian(args.d)?;
    let analytic = fourth_moment_bias(kind, args.d, args.k, args.t, args.n)?;
    let reference = model
        .reference_expectation(TestFunction::FourthNorm, args.t)
        .expect("fourth moment of driftless motion from the origin is closed form");
    let spec = GeneratorSpec::new(kind, args.d, args.k, args.t / args.n as f64)?;
    let cfg = McConfig::new(args.m, args.seed)
        .with_threads(args.threads)
        .with_ci_multiplier(ci_multiplier(args.paper_ci));
    let result = run_mc(&model, TestFunction::FourthNorm, spec, args.n, args.t, &cfg)?;

    let mut csv = String::from("# schema=orthosde.bias.v1\n");
    writeln!(
        csv,
        "# params: functional=fourth-norm model=brownian seed={} ci={}",
        args.seed, cfg.ci_multiplier
    )
    .unwrap();
    writeln!(
        csv,
        "scheme,d,K,n,T,m,analytic_bias,estimated_bias,ci_low,ci_high"
    )
    .unwrap();
    writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{}",
        kind.name(),
        args.d,
        spec.k(),
        args.n,
        args.t,
        args.m,
        analytic.value,
        reference - result.mean,
        reference - result.ci_high,
        reference - result.ci_low
    )
    .unwrap();
    write_output(
        &args.output,
        &csv,
        &PlotSpec {
            x: "n",
            y: "estimated_bias",
            logx: false,
            logy: false,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_convergence(args: ConvergenceArgs) -> Result<ExitCode, CliError> {
    validate_output(&args.output)?;
    let kind = SchemeKind::parse(&args.scheme)?;
    let model = SdeModel::parse(&args.model, args.d, args.rate)?;
    let f = default_functional(model.kind());
    let spec = GeneratorSpec::new(kind, args.d, args.k, 1.0)?;
    let cfg = McConfig::new(args.m, args.seed)
        .with_threads(args.threads)
        .with_ci_multiplier(ci_multiplier(args.paper_ci));
    let study = convergence_study(&model, f, spec, args.t, &args.n, &cfg)?;

    let mut csv = String::from("# schema=orthosde.convergence.v1\n");
    writeln!(
        csv,
        "# params: scheme={} model={} functional={} d={} K={} T={} m={} seed={} ci={}",
        kind.name(),
        model.name(),
        f.name(),
        args.d,
        spec.k(),
        args.t,
        args.m,
        args.seed,
        cfg.ci_multiplier
    )
    .unwrap();
    writeln!(csv, "n,reference,mean,abs_error,ci_low,ci_high").unwrap();
    for point in &study.points {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            point.n,
            study.reference,
            point.result.mean,
            point.abs_error,
            point.result.ci_low,
            point.result.ci_high
        )
        .unwrap();
    }
    writeln!(csv, "# slope={}", study.slope).unwrap();
    write_output(
        &args.output,
        &csv,
        &PlotSpec {
            x: "n",
            y: "abs_error",
            logx: true,
            logy: true,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, CliError> {
    validate_output(&args.output)?;
    if args.d.is_empty() {
        return Err(CliError::Usage(
            "--d requires at least one dimension".to_string(),
        ));
    }
    let mut kinds = Vec::new();
    for name in &args.scheme {
        kinds.push(SchemeKind::parse(name)?);
    }
    let sample = SdeModel::parse(&args.model, 1, args.rate)?;
    let f = default_functional(sample.kind());
    let cfg = McConfig::new(args.m, args.seed);
    let rows = bench(
        &kinds,
        &args.d,
        |d| SdeModel::parse(&args.model, d, args.rate),
        f,
        args.n,
        args.t,
        &cfg,
    )?;

    let mut csv = String::from("# schema=orthosde.bench.v1\n");
    writeln!(
        csv,
        "# params: model={} functional={} n={} T={} m={} seed={}",
        args.model,
        f.name(),
        args.n,
        args.t,
        args.m,
        args.seed
    )
    .unwrap();
    writeln!(
        csv,
        "scheme,d,wall_seconds,uniform_draws,variance,stddev_per_second"
    )
    .unwrap();
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            row.scheme.name(),
            row.d,
            row.result.wall_seconds,
            row.result.uniform_draws,
            row.result.variance,
            row.result.variance.sqrt() / row.result.wall_seconds
        )
        .unwrap();
    }
    write_output(
        &args.output,
        &csv,
        &PlotSpec {
            x: "d",
            y: "stddev_per_second",
            logx: true,
            logy: true,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_stopping(args: StoppingArgs) -> Result<ExitCode, CliError> {
    validate_output(&args.output)?;
    let kind = SchemeKind::parse(&args.scheme)?;
    let spec = GeneratorSpec::new(kind, args.d, args.k, args.t / args.n as f64)?;
    let result = stopping_time_experiment(
        spec,
        args.n,
        args.t,
        args.epsilon,
        args.repeats,
        args.trial_cap,
        args.seed,
    )?;

    let mut csv = String::from("# schema=orthosde.stopping.v1\n");
    writeln!(
        csv,
        "# params: scheme={} d={} K={} n={} T={} epsilon={} repeats={} trial_cap={} seed={}",
        kind.name(),
        args.d,
        spec.k(),
        args.n,
        args.t,
        args.epsilon,
        args.repeats,
        args.trial_cap,
        args.seed
    )
    .unwrap();
    writeln!(csv, "repeat,trials,wall_seconds,hit").unwrap();
    for (i, repeat) in result.repeats.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{}",
            i + 1,
            repeat.trials,
            repeat.wall_seconds,
            u32::from(repeat.hit)
        )
        .unwrap();
    }
    writeln!(csv, "# mean_trials={}", result.mean_trials).unwrap();
    writeln!(csv, "# mean_wall_seconds={}", result.mean_wall_seconds).unwrap();
    write_output(
        &args.output,
        &csv,
        &PlotSpec {
            x: "repeat",
            y: "wall_seconds",
            logx: false,
            logy: false,
        },
    )?;
    Ok(ExitCode::SUCCESS)
}
