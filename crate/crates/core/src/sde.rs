//! Euler-Maruyama engine.
//!
//! The scheme approximates `dX_t = b(X_t) dt + sigma(X_t) dW_t` on `[0, T]`
//! by
//!
//! ```text
//!   X_l = X_{l-1} + sigma(X_{l-1}) dZ_l + b(X_{l-1}) T/n,
//! ```
//!
//! where the increment `dZ_l` comes from any [`IncrementGenerator`]. The
//! built-in models keep the diffusion in applied form `(x, dz) -> sigma(x) dz`
//! so a step costs `O(d)` even when the coefficient matrix is structured.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::generators::{GeneratorSpec, IncrementGenerator};
use crate::source::UniformSource;

/// Scalar functionals evaluated at the terminal state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFunction {
    /// `cos(x_1 + ... + x_d)`.
    CosSum,
    /// `|x|^2`.
    SquareNorm,
    /// `|x|^2 / d`.
    ScaledSquareNorm,
    /// `|x|^4`.
    FourthNorm,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::CosSum => x.iter().sum::<f64>().cos(),
            TestFunction::SquareNorm => x.iter().map(|v| v * v).sum(),
            TestFunction::ScaledSquareNorm => x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64,
            TestFunction::FourthNorm => {
                let sq: f64 = x.iter().map(|v| v * v).sum();
                sq * sq
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::CosSum => "cos-sum",
            TestFunction::SquareNorm => "square-norm",
            TestFunction::ScaledSquareNorm => "scaled-square-norm",
            TestFunction::FourthNorm => "fourth-norm",
        }
    }
}

/// Drift callback `(x, out)` writing `b(x)` into `out`.
pub type DriftFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Diffusion callback `(x, dz, out)` writing `sigma(x) dz` into `out`.
pub type DiffusionFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Drift coefficient `b(x)`, written into a caller buffer.
#[derive(Clone)]
pub enum Drift {
    Zero,
    /// `b_i(x) = x_i - mean(x)`.
    DeviationFromMean,
    /// `b(x) = c x`.
    Linear(f64),
    Custom(DriftFn),
}

/// Diffusion in applied form: `(x, dz) -> sigma(x) dz`.
#[derive(Clone)]
pub enum Diffusion {
    Identity,
    /// Row `i` of `sigma(x)` is `(x_{i-1}, x_i, x_{i+1})` on the band
    /// `j in {i-1, i, i+1}`, out-of-range entries dropped.
    TridiagonalNeighbors,
    Custom(DiffusionFn),
}

/// Identifies models with known reference expectations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    MeanRepulsion,
    NeighborDiffusion,
    Brownian,
    OrnsteinUhlenbeck { rate: f64 },
    Custom,
}

/// A d-dimensional SDE: initial state plus coefficient functions.
#[derive(Clone)]
pub struct SdeModel {
    kind: ModelKind,
    name: String,
    d: usize,
    x0: Vec<f64>,
    drift: Drift,
    diffusion: Diffusion,
}

impl SdeModel {
    pub fn custom(
        name: impl Into<String>,
        x0: Vec<f64>,
        drift: Drift,
        diffusion: Diffusion,
    ) -> Result<Self> {
        Self::build(ModelKind::Custom, name.into(), x0, drift, diffusion)
    }

    fn build(
        kind: ModelKind,
        name: String,
        x0: Vec<f64>,
        drift: Drift,
        diffusion: Diffusion,
    ) -> Result<Self> {
        if x0.is_empty() {
            return Err(Error::domain("initial state must be non-empty"));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("initial state must be finite"));
        }
        Ok(Self {
            d: x0.len(),
            kind,
            name,
            x0,
            drift,
            diffusion,
        })
    }

    /// Components repel their mean, `b_i(x) = x_i - mean(x)`, with unit
    /// diffusion and `x0 = (1, ..., 1)`. CLI name `case1`.
    pub fn mean_repulsion(d: usize) -> Result<Self> {
        Self::build(
            ModelKind::MeanRepulsion,
            "case1".into(),
            vec![1.0; d.max(1)],
            Drift::DeviationFromMean,
            Diffusion::Identity,
        )
    }

    /// Driftless model whose diffusion couples each component to its
    /// neighbors, `x0 = (1, ..., 1)`. CLI name `case2`.
    pub fn neighbor_diffusion(d: usize) -> Result<Self> {
        Self::build(
            ModelKind::NeighborDiffusion,
            "case2".into(),
            vec![1.0; d.max(1)],
            Drift::Zero,
            Diffusion::TridiagonalNeighbors,
        )
    }

    /// Standard d-dimensional Brownian motion from the origin.
    pub fn brownian(d: usize) -> Result<Self> {
        Self::build(
            ModelKind::Brownian,
            "brownian".into(),
            vec![0.0; d.max(1)],
            Drift::Zero,
            Diffusion::Identity,
        )
    }

    /// Ornstein-Uhlenbeck relaxation `dX = -rate X dt + dW` from
    /// `x0 = (1, ..., 1)`.
    pub fn ornstein_uhlenbeck(d: usize, rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::domain(format!("rate must be positive, got {rate}")));
        }
        Self::build(
            ModelKind::OrnsteinUhlenbeck { rate },
            "ou".into(),
            vec![1.0; d.max(1)],
            Drift::Linear(-rate),
            Diffusion::Identity,
        )
    }

    /// Looks up a built-in model by its CLI name.
    pub fn parse(name: &str, d: usize, rate: f64) -> Result<Self> {
        match name {
            "case1" => Self::mean_repulsion(d),
            "case2" => Self::neighbor_diffusion(d),
            "brownian" => Self::brownian(d),
            "ou" => Self::ornstein_uhlenbeck(d, rate),
            other => Err(Error::domain(format!(
                "unknown model '{other}' (expected case1, case2, brownian or ou)"
            ))),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn is_driftless_identity(&self) -> bool {
        matches!(self.drift, Drift::Zero) && matches!(self.diffusion, Diffusion::Identity)
    }

    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.drift {
            Drift::Zero => out.fill(0.0),
            Drift::DeviationFromMean => {
                let mean = x.iter().sum::<f64>() / x.len() as f64;
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = v - mean;
                }
            }
            Drift::Linear(c) => {
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = c * v;
                }
            }
            Drift::Custom(f) => f(x, out),
        }
    }

    pub fn diffusion_apply(&self, x: &[f64], dz: &[f64], out: &mut [f64]) {
        match &self.diffusion {
            Diffusion::Identity => out.copy_from_slice(dz),
            Diffusion::TridiagonalNeighbors => {
                let d = x.len();
                for i in 0..d {
                    let mut acc = x[i] * dz[i];
                    if i > 0 {
                        acc += x[i - 1] * dz[i - 1];
                    }
                    if i + 1 < d {
                        acc += x[i + 1] * dz[i + 1];
                    }
                    out[i] = acc;
                }
            }
            Diffusion::Custom(f) => f(x, dz, out),
        }
    }

    /// Closed-form `E[f(X_T)]` where one is known.
    pub fn reference_expectation(&self, f: TestFunction, t: f64) -> Option<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return None;
        }
        let d = self.d as f64;
        let x0_sq: f64 = self.x0.iter().map(|v| v * v).sum();
        match (self.kind, f) {
            (ModelKind::Brownian, TestFunction::SquareNorm) => Some(x0_sq + d * t),
            (ModelKind::Brownian, TestFunction::ScaledSquareNorm) => Some((x0_sq + d * t) / d),
            (ModelKind::Brownian, TestFunction::FourthNorm) => {
                if x0_sq == 0.0 {
                    Some((d * d + 2.0 * d) * t * t)
                } else {
                    None
                }
            }
            (ModelKind::OrnsteinUhlenbeck { rate }, TestFunction::SquareNorm) => {
                let decay = (-2.0 * rate * t).exp();
                Some(x0_sq * decay + d * (1.0 - decay) / (2.0 * rate))
            }
            (ModelKind::OrnsteinUhlenbeck { rate }, TestFunction::ScaledSquareNorm) => {
                let decay = (-2.0 * rate * t).exp();
                Some((x0_sq * decay + d * (1.0 - decay) / (2.0 * rate)) / d)
            }
            _ => None,
        }
    }
}

/// State of one Euler path.
#[derive(Clone, Debug, PartialEq)]
pub struct EmState {
    pub x: Vec<f64>,
    pub step_index: u64,
}

impl EmState {
    pub fn initial(model: &SdeModel) -> Self {
        Self {
            x: model.x0().to_vec(),
            step_index: 0,
        }
    }
}

/// One Euler step `x + sigma(x) dz + b(x) dt`.
pub fn em_step(model: &SdeModel, state: &EmState, dz: &[f64], dt: f64) -> Result<EmState> {
    let d = model.d();
    if state.x.len() != d || dz.len() != d {
        return Err(Error::domain(format!(
            "state/increment length must be d={d}, got {} and {}",
            state.x.len(),
            dz.len()
        )));
    }
    if !dt.is_finite() || dt < 0.0 {
        return Err(Error::domain(format!(
            "step size must be finite and >= 0, got {dt}"
        )));
    }
    let mut drift = vec![0.0; d];
    let mut diff = vec![0.0; d];
    model.drift_into(&state.x, &mut drift);
    model.diffusion_apply(&state.x, dz, &mut diff);
    let step_index = state.step_index + 1;
    let mut x = vec![0.0; d];
    for i in 0..d {
        x[i] = state.x[i] + diff[i] + drift[i] * dt;
        if !x[i].is_finite() {
            return Err(Error::NonFiniteState { step: step_index });
        }
    }
    Ok(EmState { x, step_index })
}

/// Repeatedly runs terminal-value simulations without reallocating.
pub struct Simulator {
    model: SdeModel,
    generator: IncrementGenerator,
    n: u64,
    dt: f64,
    x: Vec<f64>,
    dz: Vec<f64>,
    drift: Vec<f64>,
    diff: Vec<f64>,
}

impl Simulator {
    /// Requires `spec.d = model.d` and `spec.dt = T/n`.
    pub fn new(model: &SdeModel, spec: GeneratorSpec, n: u64, t: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("need at least one time step"));
        }
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::domain(format!("horizon must be positive, got {t}")));
        }
        if spec.d() != model.d() {
            return Err(Error::domain(format!(
                "generator dimension {} does not match model dimension {}",
                spec.d(),
                model.d()
            )));
        }
        let dt = t / n as f64;
        if (spec.dt() - dt).abs() > 1e-12 * dt {
            return Err(Error::domain(format!(
                "generator step {} does not equal T/n = {dt}",
                spec.dt()
            )));
        }
        let d = model.d();
        Ok(Self {
            model: model.clone(),
            generator: IncrementGenerator::new(spec)?,
            n,
            dt,
            x: vec![0.0; d],
            dz: vec![0.0; d],
            drift: vec![0.0; d],
            diff: vec![0.0; d],
        })
    }

    pub fn model(&self) -> &SdeModel {
        &self.model
    }

    pub fn generator(&self) -> &IncrementGenerator {
        &self.generator
    }

    pub fn steps(&self) -> u64 {
        self.n
    }

    /// Runs one path from `x0` and returns the terminal state.
    pub fn terminal(&mut self, source: &mut UniformSource) -> Result<&[f64]> {
        self.x.copy_from_slice(self.model.x0());
        for step in 1..=self.n {
            self.generator.sample_into(source, &mut self.dz)?;
            self.model.drift_into(&self.x, &mut self.drift);
            self.model
                .diffusion_apply(&self.x, &self.dz, &mut self.diff);
            let mut finite = true;
            for i in 0..self.x.len() {
                self.x[i] = self.x[i] + self.diff[i] + self.drift[i] * self.dt;
                finite &= self.x[i].is_finite();
            }
            if !finite {
                return Err(Error::NonFiniteState { step });
            }
        }
        Ok(&self.x)
    }
}

/// Single-shot convenience wrapper around [`Simulator`].
pub fn simulate_terminal(
    model: &SdeModel,
    spec: GeneratorSpec,
    n: u64,
    t: f64,
    source: &mut UniformSource,
) -> Result<Vec<f64>> {
    let mut sim = Simulator::new(model, spec, n, t)?;
    sim.terminal(source)?;
    Ok(sim.x)
}
