//! Estimates with error bars, and the seeded parallel Monte Carlo driver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{UnitCoord, PRECISION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    MonteCarlo,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    /// Standard error of `value`. Quadrature results carry 0; a Monte Carlo
    /// run over a constant integrand also ends up with 0.
    pub stderr: f64,
    pub samples: u64,
    pub kind: EstimateKind,
}

impl DensityEstimate {
    pub fn exact(value: f64) -> Self {
        DensityEstimate { value, stderr: 0.0, samples: 0, kind: EstimateKind::Quadrature }
    }

    pub fn quadrature(value: f64, nodes: u64) -> Self {
        DensityEstimate { value, stderr: 0.0, samples: nodes, kind: EstimateKind::Quadrature }
    }

    pub fn scaled(self, factor: f64) -> Self {
        DensityEstimate { value: self.value * factor, stderr: self.stderr * factor.abs(), ..self }
    }

    /// Whether `target` lies within `z` standard errors plus `slack`.
    pub fn agrees_with(&self, target: f64, z: f64, slack: f64) -> bool {
        (self.value - target).abs() <= z * self.stderr + slack
    }
}

/// Monte Carlo work is cut into this many chunks whatever the thread count,
/// so results do not depend on how rayon schedules them.
pub const CHUNKS: u64 = 64;

/// Generator for chunk `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform lattice point of [0,1).
pub fn uniform_coord<R: Rng + ?Sized>(rng: &mut R) -> UnitCoord {
    UnitCoord::from_numerator(rng.gen::<u64>() >> (64 - PRECISION)).expect("below one")
}

/// Uniform lattice point of `[lo, hi)` given as numerators.
pub fn uniform_between<R: Rng + ?Sized>(rng: &mut R, lo: u64, hi: u64) -> UnitCoord {
    debug_assert!(lo < hi);
    UnitCoord::from_numerator(rng.gen_range(lo..hi)).expect("inside [0,1]")
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(self, other: Moments) -> Moments {
        Moments { n: self.n + other.n, sum: self.sum + other.sum, sum_sq: self.sum_sq + other.sum_sq }
    }

    fn estimate(self) -> DensityEstimate {
        if self.n == 0 {
            return DensityEstimate { value: 0.0, stderr: 0.0, samples: 0, kind: EstimateKind::MonteCarlo };
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 { ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        DensityEstimate { value: mean, stderr: (var / n).sqrt(), samples: self.n, kind: EstimateKind::MonteCarlo }
    }
}

/// Mean of `sample(rng)` over `budget` draws, split over [`CHUNKS`] seeded
/// streams and merged in chunk order.
pub fn monte_carlo<F>(budget: u64, seed: u64, sample: F) -> DensityEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let per = budget / CHUNKS;
    let extra = budget % CHUNKS;
    let parts: Vec<Moments> = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream_rng(seed, chunk);
            let n = per + u64::from(chunk < extra);
            let mut m = Moments::default();
            for _ in 0..n {
                m.push(sample(&mut rng));
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments::default(), Moments::merge).estimate()
}

/// Derives an independent seed for a named sub-computation.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, folded into the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed.rotate_left(17) ^ h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_merges_all_samples() {
        let f = |rng: &mut ChaCha8Rng| rng.gen::<f64>();
        let a = monte_carlo(10_001, 7, f);
        let b = monte_carlo(10_001, 7, f);
        assert_eq!(a, b);
        assert_eq!(a.samples, 10_001);
        assert!(a.agrees_with(0.5, 4.0, 0.0));
    }

    #[test]
    fn constant_integrand_has_zero_error() {
        let e = monte_carlo(100, 1, |_| 0.25);
        assert_eq!(e.value, 0.25);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn seeds_separate() {
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
        assert_ne!(derive_seed(1, "a"), derive_seed(2, "a"));
    }
}
