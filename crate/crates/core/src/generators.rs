//! Increment generators for the Euler scheme.
//!
//! A generator turns uniform words into one d-dimensional increment `dZ`
//! per time step, scaled so that `E[dZ] = 0`, `E[dZ dZ^T] = dt I` and all
//! third mixed moments vanish. Four schemes are provided:
//!
//! * `gaussian`: i.i.d. normals via the polar method, the classical Euler
//!   driver and the baseline the mimicking schemes are measured against;
//! * `haar`: one uniform point on `{1, ..., 2^K}` picks a scaled Haar
//!   function, giving an increment with at most one nonzero coordinate;
//! * `walsh-gray`: the K low bits of one word act as signs, coordinate `j`
//!   takes the Walsh product over the odd-ordered subset `phi_gray(j)`;
//! * `walsh-bitmask`: same signs, subsets in cardinality-then-value order.
//!
//! The three mimicking schemes consume exactly one 64-bit word per step
//! regardless of the dimension, which is their whole point.

use crate::error::{Error, Result};
use crate::numeric::sqrt_pow2;
use crate::orthogonal::gray::bitmask_order_masks;
use crate::orthogonal::walsh::MAX_K;
use crate::source::UniformSource;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Gaussian,
    Haar,
    WalshGray,
    WalshBitmask,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Gaussian,
        SchemeKind::Haar,
        SchemeKind::WalshGray,
        SchemeKind::WalshBitmask,
    ];

    pub const MIMICKING: [SchemeKind; 3] = [
        SchemeKind::Haar,
        SchemeKind::WalshGray,
        SchemeKind::WalshBitmask,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Gaussian => "gaussian",
            SchemeKind::Haar => "haar",
            SchemeKind::WalshGray => "walsh-gray",
            SchemeKind::WalshBitmask => "walsh-bitmask",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(SchemeKind::Gaussian),
            "haar" => Ok(SchemeKind::Haar),
            "walsh-gray" => Ok(SchemeKind::WalshGray),
            "walsh-bitmask" => Ok(SchemeKind::WalshBitmask),
            other => Err(Error::domain(format!(
                "unknown scheme '{other}' (expected gaussian, haar, walsh-gray or walsh-bitmask)"
            ))),
        }
    }

    /// Whether the scheme draws a single word per step and matches moments
    /// exactly, as opposed to sampling true Gaussians.
    pub fn is_mimicking(&self) -> bool {
        !matches!(self, SchemeKind::Gaussian)
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Smallest level `K` whose `2^(K-1)` orthogonal functions cover dimension
/// `d`.
pub fn default_k(d: usize) -> u32 {
    if d <= 1 {
        1
    } else {
        64 - (d as u64 - 1).leading_zeros() + 1
    }
}

/// Validated description of one increment generator: scheme, dimension,
/// level and step size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorSpec {
    kind: SchemeKind,
    d: usize,
    k: u32,
    dt: f64,
}

impl GeneratorSpec {
    /// `k = None` selects [`default_k`]. Mimicking schemes require
    /// `d <= 2^(K-1)`; the Gaussian scheme ignores the level.
    pub fn new(kind: SchemeKind, d: usize, k: Option<u32>, dt: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("dimension must be positive"));
        }
        let k = k.unwrap_or_else(|| default_k(d));
        if k == 0 || k > MAX_K {
            return Err(Error::domain(format!("K must be in 1..={MAX_K}, got {k}")));
        }
        if kind.is_mimicking() && (d as u64) > 1 << (k - 1) {
            return Err(Error::domain(format!(
                "{} with K={k} covers at most {} dimensions, got d={d}",
                kind.name(),
                1u64 << (k - 1)
            )));
        }
        if !dt.is_finite() || dt < 0.0 {
            return Err(Error::domain(format!(
                "step size must be finite and >= 0, got {dt}"
            )));
        }
        Ok(Self { kind, d, k, dt })
    }

    pub fn gaussian(d: usize, dt: f64) -> Result<Self> {
        Self::new(SchemeKind::Gaussian, d, None, dt)
    }

    pub fn haar(d: usize, k: Option<u32>, dt: f64) -> Result<Self> {
        Self::new(SchemeKind::Haar, d, k, dt)
    }

    pub fn walsh_gray(d: usize, k: Option<u32>, dt: f64) -> Result<Self> {
        Self::new(SchemeKind::WalshGray, d, k, dt)
    }

    pub fn walsh_bitmask(d: usize, k: Option<u32>, dt: f64) -> Result<Self> {
        Self::new(SchemeKind::WalshBitmask, d, k, dt)
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(self.kind, self.d, Some(self.k), dt)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// One d-dimensional increment.
#[derive(Clone, Debug, PartialEq)]
pub struct Increment(Vec<f64>);

impl Increment {
    pub fn from_vec(values: Vec<f64>) -> Self {
        Increment(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Uniform words consumed per time step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DrawCount {
    Fixed(u64),
    Variable { lower_bound: u64 },
}

/// Samples increments for one [`GeneratorSpec`].
#[derive(Clone, Debug)]
pub struct IncrementGenerator {
    spec: GeneratorSpec,
    sqrt_dt: f64,
    haar_peak: f64,
    word_mask: u64,
    bit_masks: Vec<u64>,
}

impl IncrementGenerator {
    pub fn new(spec: GeneratorSpec) -> Result<Self> {
        let bit_masks = match spec.kind() {
            SchemeKind::WalshBitmask => bitmask_order_masks(spec.k(), spec.d())?,
            _ => Vec::new(),
        };
        Ok(Self {
            spec,
            sqrt_dt: spec.dt().sqrt(),
            haar_peak: sqrt_pow2(spec.k() - 1) * spec.dt().sqrt(),
            word_mask: (1 << spec.k()) - 1,
            bit_masks,
        })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    /// Words per step: one for the mimicking schemes, at least
    /// `2 ceil(d/2)` for the Gaussian scheme.
    pub fn draws_per_step(&self) -> DrawCount {
        match self.spec.kind() {
            SchemeKind::Gaussian => DrawCount::Variable {
                lower_bound: 2 * (self.spec.d() as u64).div_ceil(2),
            },
            _ => DrawCount::Fixed(1),
        }
    }

    /// Draws one increment into `out`, which must have length `d`.
    pub fn sample_into(&self, source: &mut UniformSource, out: &mut [f64]) -> Result<()> {
        self.check_len(out)?;
        match self.spec.kind() {
            SchemeKind::Gaussian => {
                self.fill_gaussian(source, out);
                Ok(())
            }
            _ => {
                let word = source.next_word();
                self.fill_mimicking(word, out);
                Ok(())
            }
        }
    }

    pub fn sample(&self, source: &mut UniformSource) -> Result<Increment> {
        let mut out = vec![0.0; self.spec.d()];
        self.sample_into(source, &mut out)?;
        Ok(Increment(out))
    }

    /// Deterministic image of one word under a mimicking scheme. The word's
    /// low K bits select the atom, so iterating words `0..2^K` enumerates
    /// the increment's whole distribution with equal weights.
    pub fn fill_from_word(&self, word: u64, out: &mut [f64]) -> Result<()> {
        self.check_len(out)?;
        if !self.spec.kind().is_mimicking() {
            return Err(Error::domain(
                "the gaussian scheme has no single-word atoms",
            ));
        }
        self.fill_mimicking(word, out);
        Ok(())
    }

    fn check_len(&self, out: &[f64]) -> Result<()> {
        if out.len() != self.spec.d() {
            return Err(Error::domain(format!(
                "output buffer has length {}, expected d={}",
                out.len(),
                self.spec.d()
            )));
        }
        Ok(())
    }

    fn fill_mimicking(&self, word: u64, out: &mut [f64]) {
        match self.spec.kind() {
            SchemeKind::Haar => {
                let u = (word & self.word_mask) + 1;
                out.fill(0.0);
                let j = (u + 1) >> 1;
                if j <= self.spec.d() as u64 {
                    out[(j - 1) as usize] = if u & 1 == 1 {
                        self.haar_peak
                    } else {
                        -self.haar_peak
                    };
                }
            }
            SchemeKind::WalshGray => {
                let bits = word & self.word_mask;
                let b0 = (bits & 1) as u32;
                let mut parity = b0;
                out[0] = self.signed(parity);
                for j in 2..=self.spec.d() as u64 {
                    let toggle = (j - 1).trailing_zeros() + 1;
                    parity ^= b0 ^ ((bits >> toggle) & 1) as u32;
                    out[(j - 1) as usize] = self.signed(parity);
                }
            }
            SchemeKind::WalshBitmask => {
                let bits = word & self.word_mask;
                for (slot, &mask) in out.iter_mut().zip(&self.bit_masks) {
                    *slot = self.signed((mask & bits).count_ones() % 2);
                }
            }
            SchemeKind::Gaussian => unreachable!("callers reject the gaussian scheme"),
        }
    }

    fn signed(&self, parity: u32) -> f64 {
        if parity & 1 == 1 {
            -self.sqrt_dt
        } else {
            self.sqrt_dt
        }
    }

    fn fill_gaussian(&self, source: &mut UniformSource, out: &mut [f64]) {
        let d = self.spec.d();
        let mut i = 0;
        while i < d {
            let (a, b) = polar_pair(source);
            out[i] = a * self.sqrt_dt;
            if i + 1 < d {
                out[i + 1] = b * self.sqrt_dt;
            }
            i += 2;
        }
    }
}

/// One pair of independent standard normals by the polar method.
fn polar_pair(source: &mut UniformSource) -> (f64, f64) {
    loop {
        let u = 2.0 * source.next_unit() - 1.0;
        let v = 2.0 * source.next_unit() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let scale = (-2.0 * s.ln() / s).sqrt();
            return (u * scale, v * scale);
        }
    }
}
