//! Exact moment oracles for increment generators.
//!
//! A mimicking increment is a function of one uniform word, so its whole
//! distribution is the list of `2^K` equally likely atoms. That makes the
//! moment conditions checkable exactly: enumerate the atoms, average, and
//! compare against the targets `0`, `dt I`, `0`. The same enumeration,
//! iterated over all steps, gives exact terminal expectations for small
//! driftless models, which serves as an independent route to the
//! fourth-moment gap formulas.

use crate::error::{Error, Result};
use crate::generators::{GeneratorSpec, Increment, IncrementGenerator, SchemeKind};
use crate::numeric::{pow2, CompensatedSum};
use crate::sde::{SdeModel, TestFunction};

/// Absolute violation above which a moment check fails.
pub const MOMENT_TOLERANCE: f64 = 1e-12;

/// Largest level whose `2^K` atoms are enumerated.
pub const MAX_ENUMERATION_K: u32 = 20;

/// Largest dimension for which the third-moment table (one accumulator per
/// `i <= j <= l`) is allocated.
pub const MAX_VERIFY_D: usize = 256;

/// Outcome of checking the three moment conditions of one generator.
#[derive(Clone, Debug)]
pub struct MomentReport {
    pub scheme: SchemeKind,
    pub d: usize,
    pub k: u32,
    pub dt: f64,
    /// Largest `|E[dZ_i]|`.
    pub max_first: f64,
    /// Largest `|E[dZ_i dZ_j] - dt delta_ij|`.
    pub max_second: f64,
    /// Largest `|E[dZ_i dZ_j dZ_l]|`.
    pub max_third: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl MomentReport {
    pub fn max_violation(&self) -> f64 {
        self.max_first.max(self.max_second).max(self.max_third)
    }

    pub const CSV_HEADER: &'static str = "scheme,d,K,condition,violation";

    /// One `scheme,d,K,condition,violation` line per moment condition.
    pub fn csv_rows(&self) -> Vec<String> {
        [
            ("first_moment", self.max_first),
            ("second_moment", self.max_second),
            ("third_moment", self.max_third),
        ]
        .iter()
        .map(|(condition, violation)| {
            format!(
                "{},{},{},{condition},{violation}",
                self.scheme.name(),
                self.d,
                self.k
            )
        })
        .collect()
    }
}

fn require_enumerable(spec: &GeneratorSpec) -> Result<()> {
    if !spec.kind().is_mimicking() {
        return Err(Error::domain(
            "atom enumeration needs a mimicking scheme; the gaussian increment has a continuous law",
        ));
    }
    if spec.k() > MAX_ENUMERATION_K {
        return Err(Error::capacity(format!(
            "enumeration visits 2^K atoms; K={} exceeds {MAX_ENUMERATION_K}",
            spec.k()
        )));
    }
    Ok(())
}

/// Calls `f` once per atom of the increment distribution, each carrying
/// probability `2^-K`.
pub fn for_each_atom(spec: GeneratorSpec, mut f: impl FnMut(&[f64])) -> Result<()> {
    require_enumerable(&spec)?;
    let gen = IncrementGenerator::new(spec)?;
    let mut buf = vec![0.0; spec.d()];
    for word in 0..1u64 << spec.k() {
        gen.fill_from_word(word, &mut buf)?;
        f(&buf);
    }
    Ok(())
}

/// Materializes the atom list as `(value, probability)` pairs, one per
/// word; repeated values (such as the Haar zero atom) stay repeated.
pub fn enumerate_atoms(spec: GeneratorSpec) -> Result<Vec<(Increment, f64)>> {
    require_enumerable(&spec)?;
    if (1u64 << spec.k()) * spec.d() as u64 > 1 << 24 {
        return Err(Error::capacity(format!(
            "atom list of 2^{} x {} values is too large to materialize",
            spec.k(),
            spec.d()
        )));
    }
    let prob = pow2(-(spec.k() as i32));
    let gen = IncrementGenerator::new(spec)?;
    let mut atoms = Vec::with_capacity(1 << spec.k());
    let mut buf = vec![0.0; spec.d()];
    for word in 0..1u64 << spec.k() {
        gen.fill_from_word(word, &mut buf)?;
        atoms.push((Increment::from_vec(buf.clone()), prob));
    }
    Ok(atoms)
}

/// Checks the three moment conditions. Mimicking schemes are verified by
/// exhaustive atom enumeration; the gaussian scheme satisfies them by
/// construction and reports zero violations.
pub fn verify_moment_conditions(spec: GeneratorSpec) -> Result<MomentReport> {
    let (max_first, max_second, max_third) = match spec.kind() {
        SchemeKind::Gaussian => (0.0, 0.0, 0.0),
        _ => enumerate_violations(spec)?,
    };
    let max = max_first.max(max_second).max(max_third);
    Ok(MomentReport {
        scheme: spec.kind(),
        d: spec.d(),
        k: spec.k(),
        dt: spec.dt(),
        max_first,
        max_second,
        max_third,
        tolerance: MOMENT_TOLERANCE,
        pass: max <= MOMENT_TOLERANCE,
    })
}

fn enumerate_violations(spec: GeneratorSpec) -> Result<(f64, f64, f64)> {
    if spec.d() > MAX_VERIFY_D {
        return Err(Error::capacity(format!(
            "third-moment verification allocates O(d^3) accumulators; d={} exceeds {MAX_VERIFY_D}",
            spec.d()
        )));
    }
    let d = spec.d();
    let n_pairs = d * (d + 1) / 2;
    let n_triples = d * (d + 1) * (d + 2) / 6;
    let mut first = vec![CompensatedSum::new(); d];
    let mut second = vec![CompensatedSum::new(); n_pairs];
    let mut third = vec![CompensatedSum::new(); n_triples];
    for_each_atom(spec, |z| {
        let mut pair = 0;
        let mut triple = 0;
        for i in 0..d {
            first[i].add(z[i]);
            for j in i..d {
                let zij = z[i] * z[j];
                second[pair].add(zij);
                pair += 1;
                for &zl in &z[j..d] {
                    third[triple].add(zij * zl);
                    triple += 1;
                }
            }
        }
    })?;
    let scale = pow2(-(spec.k() as i32));
    let max_first = first
        .iter()
        .map(|s| (s.value() * scale).abs())
        .fold(0.0, f64::max);
    let mut max_second = 0.0f64;
    let mut pair = 0;
    for i in 0..d {
        for j in i..d {
            let target = if i == j { spec.dt() } else { 0.0 };
            max_second = max_second.max((second[pair].value() * scale - target).abs());
            pair += 1;
        }
    }
    let max_third = third
        .iter()
        .map(|s| (s.value() * scale).abs())
        .fold(0.0, f64::max);
    Ok((max_first, max_second, max_third))
}

/// `E[|dZ|^(2p)]` in closed form: the increment's radial moment of order
/// `2p` for one step of size `dt`.
pub fn closed_form_m2p(spec: GeneratorSpec, p: u32) -> Result<f64> {
    let d = spec.d() as f64;
    let dtp = spec.dt().powi(p as i32);
    Ok(match spec.kind() {
        SchemeKind::Haar => {
            if p == 0 {
                1.0
            } else {
                d * pow2(((spec.k() - 1) * (p - 1)) as i32) * dtp
            }
        }
        SchemeKind::WalshGray | SchemeKind::WalshBitmask => d.powi(p as i32) * dtp,
        SchemeKind::Gaussian => chi_square_moment(spec.d(), p) * dtp,
    })
}

/// `E[(chi^2_d)^p] = d (d+2) ... (d+2p-2)`.
pub fn chi_square_moment(d: usize, p: u32) -> f64 {
    (0..p).map(|i| d as f64 + 2.0 * i as f64).product()
}

/// Exact gap `E_gaussian[|X_T|^4] - E_scheme[|X_T|^4]` for unit-diffusion
/// driftless paths from the origin over `n` steps of horizon `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasFormula {
    pub scheme: SchemeKind,
    pub d: usize,
    pub k: u32,
    pub t: f64,
    pub n: u64,
    /// Reference minus scheme; positive when the scheme underestimates.
    pub value: f64,
}

/// Closed form for the fourth-moment gap: `(2d + d(d - 2^(K-1))) T^2 / n`
/// for the Haar scheme, `2d T^2 / n` for both Walsh schemes and `0` for
/// the Gaussian scheme.
pub fn fourth_moment_bias(
    kind: SchemeKind,
    d: usize,
    k: Option<u32>,
    t: f64,
    n: u64,
) -> Result<BiasFormula> {
    let spec = GeneratorSpec::new(kind, d, k, 0.0)?;
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::domain(format!("horizon must be positive, got {t}")));
    }
    if n == 0 {
        return Err(Error::domain("need at least one time step"));
    }
    let df = d as f64;
    let per_step = t * t / n as f64;
    let value = match kind {
        SchemeKind::Gaussian => 0.0,
        SchemeKind::Haar => (2.0 * df + df * (df - pow2(spec.k() as i32 - 1))) * per_step,
        SchemeKind::WalshGray | SchemeKind::WalshBitmask => 2.0 * df * per_step,
    };
    Ok(BiasFormula {
        scheme: kind,
        d,
        k: spec.k(),
        t,
        n,
        value,
    })
}

/// Exact `E[f(X_T)]` for a driftless unit-diffusion model under a
/// mimicking scheme, by summing over all `(2^K)^n` step combinations.
/// Requires `K * n <= 24`.
pub fn exact_terminal_expectation(
    model: &SdeModel,
    f: TestFunction,
    spec: GeneratorSpec,
    n: u64,
) -> Result<f64> {
    require_enumerable(&spec)?;
    if !model.is_driftless_identity() {
        return Err(Error::domain(
            "exact enumeration supports driftless unit-diffusion models only",
        ));
    }
    if spec.d() != model.d() {
        return Err(Error::domain(format!(
            "generator dimension {} does not match model dimension {}",
            spec.d(),
            model.d()
        )));
    }
    if n == 0 {
        return Err(Error::domain("need at least one time step"));
    }
    let total_bits = spec.k() as u64 * n;
    if total_bits > 24 {
        return Err(Error::capacity(format!(
            "exact expectation sums (2^K)^n terms; K*n = {total_bits} exceeds 24 bits"
        )));
    }
    let d = spec.d();
    let atom_count = 1usize << spec.k();
    let gen = IncrementGenerator::new(spec)?;
    let mut atoms = vec![0.0; atom_count * d];
    for word in 0..atom_count {
        let row = &mut atoms[word * d..(word + 1) * d];
        gen.fill_from_word(word as u64, row)?;
    }
    let mut bufs: Vec<Vec<f64>> = vec![vec![0.0; d]; n as usize + 1];
    bufs[0].copy_from_slice(model.x0());
    let mut acc = CompensatedSum::new();
    walk_steps(0, n as usize, &atoms, d, &mut bufs, f, &mut acc);
    Ok(acc.value() * pow2(-(total_bits as i32)))
}

fn walk_steps(
    level: usize,
    n: usize,
    atoms: &[f64],
    d: usize,
    bufs: &mut [Vec<f64>],
    f: TestFunction,
    acc: &mut CompensatedSum,
) {
    if level == n {
        acc.add(f.eval(&bufs[level]));
        return;
    }
    let atom_count = atoms.len() / d;
    for a in 0..atom_count {
        {
            let (head, tail) = bufs.split_at_mut(level + 1);
            let cur = &head[level];
            let next = &mut tail[0];
            for i in 0..d {
                next[i] = cur[i] + atoms[a * d + i];
            }
        }
        walk_steps(level + 1, n, atoms, d, bufs, f, acc);
    }
}
