//! Monte Carlo harness.
//!
//! Trial `t` always consumes its own word stream derived from
//! `(seed, t)`, and per-trial results are reduced with a fixed-shape
//! pairwise tree, so a run's mean, variance and confidence interval are
//! bit-identical for any thread count. Draw counters are summed exactly,
//! which makes the cost of a scheme (words per step) observable rather
//! than inferred.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generators::{DrawCount, GeneratorSpec, SchemeKind};
use crate::numeric::{pairwise_sum_by, CompensatedSum};
use crate::sde::{SdeModel, Simulator, TestFunction};
use crate::source::{derive_seed, UniformSource};

/// Two-sided 95% multiplier under a normal approximation.
pub const DEFAULT_CI_MULTIPLIER: f64 = 1.96;

/// Student-t multiplier with 9 degrees of freedom at 95%, for runs meant
/// to be compared against small-repeat tabulations.
pub const T9_CI_MULTIPLIER: f64 = 2.262;

/// Trials processed between stopping-rule checks.
pub const STOPPING_BATCH: u64 = 1024;

/// Default cap on trials per stopping repeat.
pub const DEFAULT_TRIAL_CAP: u64 = 100_000_000;

#[derive(Clone, Copy, Debug)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub threads: usize,
    pub ci_multiplier: f64,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            threads: 1,
            ci_multiplier: DEFAULT_CI_MULTIPLIER,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_ci_multiplier(mut self, ci_multiplier: f64) -> Self {
        self.ci_multiplier = ci_multiplier;
        self
    }
}

/// Summary of one Monte Carlo run.
#[derive(Clone, Copy, Debug)]
pub struct McResult {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    /// Total uniform words drawn across all trials, exact.
    pub uniform_draws: u64,
    pub wall_seconds: f64,
}

fn check_config(cfg: &McConfig) -> Result<()> {
    if cfg.trials < 2 {
        return Err(Error::domain("need at least two trials for a variance"));
    }
    if cfg.threads == 0 {
        return Err(Error::domain("need at least one thread"));
    }
    if !cfg.ci_multiplier.is_finite() || cfg.ci_multiplier <= 0.0 {
        return Err(Error::domain("confidence multiplier must be positive"));
    }
    Ok(())
}

/// Runs every trial and returns `(f(X_T) per trial, total draws)`. Values
/// are indexed by trial, independent of scheduling; a failed trial is
/// recorded as NaN.
pub fn trial_values(
    model: &SdeModel,
    f: TestFunction,
    spec: GeneratorSpec,
    n: u64,
    t: f64,
    cfg: &McConfig,
) -> Result<(Vec<f64>, u64)> {
    check_config(cfg)?;
    Simulator::new(model, spec, n, t)?;
    let run_trial = |sim: &mut Simulator, trial: usize| -> (f64, u64) {
        let mut source = UniformSource::new(cfg.seed, trial as u64);
        let value = match sim.terminal(&mut source) {
            Ok(x) => f.eval(x),
            Err(_) => f64::NAN,
        };
        (value, source.draw_count())
    };
    let trials = cfg.trials as usize;
    let pairs: Vec<(f64, u64)> = if cfg.threads == 1 {
        let mut sim = Simulator::new(model, spec, n, t)?;
        (0..trials).map(|i| run_trial(&mut sim, i)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::domain(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map_init(
                    || Simulator::new(model, spec, n, t).expect("configuration was validated"),
                    |sim, i| run_trial(sim, i),
                )
                .collect()
        })
    };
    let mut draws = 0u64;
    for (i, &(value, d)) in pairs.iter().enumerate() {
        draws += d;
        if !value.is_finite() {
            return Err(Error::NonFiniteTrial { trial: i as u64 });
        }
    }
    Ok((pairs.into_iter().map(|(v, _)| v).collect(), draws))
}

/// Estimates `E[f(X_T)]` by simple Monte Carlo over `cfg.trials` paths.
pub fn run_mc(
    model: &SdeModel,
    f: TestFunction,
    spec: GeneratorSpec,
    n: u64,
    t: f64,
    cfg: &McConfig,
) -> Result<McResult> {
    let start = Instant::now();
    let (values, uniform_draws) = trial_values(model, f, spec, n, t, cfg)?;
    let m = values.len() as f64;
    let mean = pairwise_sum_by(&values, |v| *v) / m;
    let variance = pairwise_sum_by(&values, |v| (*v - mean) * (*v - mean)) / (m - 1.0);
    let half = cfg.ci_multiplier * (variance / m).sqrt();
    Ok(McResult {
        mean,
        variance,
        ci_low: mean - half,
        ci_high: mean + half,
        trials: cfg.trials,
        uniform_draws,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// One grid point of a weak-error study.
#[derive(Clone, Copy, Debug)]
pub struct ConvergencePoint {
    pub n: u64,
    pub abs_error: f64,
    pub result: McResult,
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub reference: f64,
    pub points: Vec<ConvergencePoint>,
    /// Least-squares slope of `log |error|` against `log n`; NaN with
    /// fewer than two points.
    pub slope: f64,
}

/// Runs the same estimator across a grid of step counts and fits the
/// weak-error rate against the model's closed-form reference.
pub fn convergence_study(
    model: &SdeModel,
    f: TestFunction,
    spec: GeneratorSpec,
    t: f64,
    n_grid: &[u64],
    cfg: &McConfig,
) -> Result<ConvergenceStudy> {
    if n_grid.is_empty() {
        return Err(Error::domain("need at least one step count"));
    }
    let reference = model.reference_expectation(f, t).ok_or_else(|| {
        Error::domain(format!(
            "no closed-form reference for model '{}' with {}",
            model.name(),
            f.name()
        ))
    })?;
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let spec_n = spec.with_dt(t / n as f64)?;
        let result = run_mc(model, f, spec_n, n, t, cfg)?;
        points.push(ConvergencePoint {
            n,
            abs_error: (result.mean - reference).abs(),
            result,
        });
    }
    let slope = fit_log_slope(&points);
    Ok(ConvergenceStudy {
        reference,
        points,
        slope,
    })
}

fn fit_log_slope(points: &[ConvergencePoint]) -> f64 {
    if points.len() < 2 {
        return f64::NAN;
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|p| ((p.n as f64).ln(), p.abs_error.max(1e-300).ln()))
        .collect();
    let count = logs.len() as f64;
    let mean_x = logs.iter().map(|(x, _)| x).sum::<f64>() / count;
    let mean_y = logs.iter().map(|(_, y)| y).sum::<f64>() / count;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mean_x) * (x - mean_x)).sum();
    sxy / sxx
}

/// One repeat of the stopping experiment.
#[derive(Clone, Copy, Debug)]
pub struct StoppingRepeat {
    pub trials: u64,
    pub wall_seconds: f64,
    /// False when the trial cap was hit before the tolerance.
    pub hit: bool,
}

#[derive(Clone, Debug)]
pub struct StoppingResult {
    pub epsilon: f64,
    pub reference: f64,
    pub repeats: Vec<StoppingRepeat>,
    pub mean_trials: f64,
    pub mean_wall_seconds: f64,
}

/// Measures how many Brownian trials the running mean of `|X_T|^2 / d`
/// needs before it stays within `epsilon` of its expectation `T`,
/// checking after every [`STOPPING_BATCH`] trials. Each repeat uses a
/// seed derived from `(seed, repeat)`.
pub fn stopping_time_experiment(
    spec: GeneratorSpec,
    n: u64,
    t: f64,
    epsilon: f64,
    repeats: u32,
    trial_cap: u64,
    seed: u64,
) -> Result<StoppingResult> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::domain(format!(
            "tolerance must be positive, got {epsilon}"
        )));
    }
    if repeats == 0 {
        return Err(Error::domain("need at least one repeat"));
    }
    if trial_cap == 0 {
        return Err(Error::domain("trial cap must be positive"));
    }
    let model = SdeModel::brownian(spec.d())?;
    let reference = t;
    let f = TestFunction::ScaledSquareNorm;
    let mut results = Vec::with_capacity(repeats as usize);
    for repeat in 0..repeats {
        let repeat_seed = derive_seed(seed, repeat as u64);
        let mut sim = Simulator::new(&model, spec, n, t)?;
        let start = Instant::now();
        let mut acc = CompensatedSum::new();
        let mut trials = 0u64;
        let mut hit = false;
        while trials < trial_cap {
            let batch = STOPPING_BATCH.min(trial_cap - trials);
            for _ in 0..batch {
                let mut source = UniformSource::new(repeat_seed, trials);
                let x = sim.terminal(&mut source)?;
                acc.add(f.eval(x));
                trials += 1;
            }
            if (acc.value() / trials as f64 - reference).abs() < epsilon {
                hit = true;
                break;
            }
        }
        results.push(StoppingRepeat {
            trials,
            wall_seconds: start.elapsed().as_secs_f64(),
            hit,
        });
    }
    let count = results.len() as f64;
    let mean_trials = results.iter().map(|r| r.trials as f64).sum::<f64>() / count;
    let mean_wall = results.iter().map(|r| r.wall_seconds).sum::<f64>() / count;
    Ok(StoppingResult {
        epsilon,
        reference,
        repeats: results,
        mean_trials,
        mean_wall_seconds: mean_wall,
    })
}

/// One row of a scheme cost comparison.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub scheme: SchemeKind,
    pub d: usize,
    pub k: u32,
    pub draws_per_step: DrawCount,
    pub result: McResult,
}

/// Times every `(d, scheme)` combination on the same estimation task.
pub fn bench(
    kinds: &[SchemeKind],
    d_grid: &[usize],
    model_for: impl Fn(usize) -> Result<SdeModel>,
    f: TestFunction,
    n: u64,
    t: f64,
    cfg: &McConfig,
) -> Result<Vec<BenchRow>> {
    if kinds.is_empty() || d_grid.is_empty() {
        return Err(Error::domain("need at least one scheme and one dimension"));
    }
    let mut rows = Vec::with_capacity(kinds.len() * d_grid.len());
    for &d in d_grid {
        let model = model_for(d)?;
        for &kind in kinds {
            let spec = GeneratorSpec::new(kind, d, None, t / n as f64)?;
            let gen = crate::generators::IncrementGenerator::new(spec)?;
            let result = run_mc(&model, f, spec, n, t, cfg)?;
            rows.push(BenchRow {
                scheme: kind,
                d,
                k: spec.k(),
                draws_per_step: gen.draws_per_step(),
                result,
            });
        }
    }
    Ok(rows)
}
