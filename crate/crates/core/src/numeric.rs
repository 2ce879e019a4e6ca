//! Small numeric utilities: compensated summation, deterministic pairwise
//! reduction, exact powers of two and binomial coefficients.

/// Neumaier-compensated accumulator. Unlike plain Kahan summation the
/// compensation also survives terms larger than the running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

const PAIRWISE_LEAF: usize = 64;

/// Sums `f(x)` over a slice in a fixed order that does not depend on how the
/// slice was produced, so multithreaded callers can collect per-item values
/// and still reduce deterministically.
pub fn pairwise_sum_by<T>(items: &[T], f: impl Fn(&T) -> f64 + Copy) -> f64 {
    if items.len() <= PAIRWISE_LEAF {
        let mut acc = CompensatedSum::new();
        for item in items {
            acc.add(f(item));
        }
        acc.value()
    } else {
        let (lo, hi) = items.split_at(items.len() / 2);
        pairwise_sum_by(lo, f) + pairwise_sum_by(hi, f)
    }
}

pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values, |v| *v)
}

/// `2^e` computed exactly for any exponent representable in f64.
pub fn pow2(e: i32) -> f64 {
    f64::powi(2.0, e)
}

/// `2^(e/2)` with the integer part of the exponent handled exactly.
pub fn sqrt_pow2(e: u32) -> f64 {
    if e.is_multiple_of(2) {
        pow2((e / 2) as i32)
    } else {
        pow2((e / 2) as i32) * std::f64::consts::SQRT_2
    }
}

/// Binomial coefficient `C(n, k)` for arguments small enough to fit u64.
pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    acc as u64
}
