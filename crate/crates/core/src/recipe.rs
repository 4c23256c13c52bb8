//! Measure preserving maps `[0,1] -> [0,1]^n` by binary digit interleaving.
//!
//! For finite `n`, coordinate `i` receives digits `i, i+n, i+2n, ...` of `x`.
//! For `n = ∞`, digit positions are handed out along Cantor diagonals of
//! (coordinate, digit index) pairs: `(1,1), (1,2), (2,1), (1,3), (2,2), ...`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{monte_carlo, uniform_coord, DensityEstimate};
use crate::geometry::{UnitCoord, PRECISION};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecipeError {
    #[error("coordinate {coord} needs more than the {bits} bits its lane carries")]
    PrecisionExceeded { coord: usize, bits: u32 },
    #[error("expected {expected} coordinates, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("arity must be at least 1")]
    ZeroArity,
    #[error("threshold {index} is finer than the {bits}-bit lane of its coordinate")]
    ThresholdTooFine { index: usize, bits: u32 },
    #[error("exact counting supports at most {max} lattice bits, got {got}")]
    LatticeTooLarge { max: u32, got: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arity {
    Finite(u32),
    Infinite,
}

impl Arity {
    fn check(self) -> Result<(), RecipeError> {
        match self {
            Arity::Finite(0) => Err(RecipeError::ZeroArity),
            _ => Ok(()),
        }
    }
}

/// The interleaving recipe. `precision` is the number of leading digits of
/// the input that get distributed; `depth` is how many coordinates of `r_∞`
/// are materialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recipe {
    precision: u32,
    depth: usize,
}

impl Default for Recipe {
    fn default() -> Self {
        Recipe { precision: PRECISION, depth: 30 }
    }
}

/// Images `(r_n(x))_i`, 1-based through [`CoordVector::coord`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordVector {
    arity: Arity,
    coords: Vec<UnitCoord>,
}

impl CoordVector {
    pub fn new(arity: Arity, coords: Vec<UnitCoord>) -> Self {
        CoordVector { arity, coords }
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    /// `(x)_i` for `i >= 1`; coordinates past the materialized prefix of an
    /// infinite vector read as 0 (their digits lie beyond the lattice).
    pub fn coord(&self, i: usize) -> UnitCoord {
        assert!(i >= 1, "coordinates are 1-based");
        self.coords.get(i - 1).copied().unwrap_or(UnitCoord::ZERO)
    }

    pub fn coords(&self) -> &[UnitCoord] {
        &self.coords
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.to_f64()).collect()
    }
}

/// Digit position of digit `d` of coordinate `c` under the diagonal order.
fn diagonal_position(c: u64, d: u64) -> u64 {
    let t = c + d - 1;
    t * (t - 1) / 2 + c
}

impl Recipe {
    pub fn new(precision: u32, depth: usize) -> Self {
        assert!((1..=PRECISION).contains(&precision), "precision must lie in 1..=53");
        assert!(depth >= 1, "depth must be positive");
        Recipe { precision, depth }
    }

    pub fn with_precision(precision: u32) -> Self {
        Recipe::new(precision, 30)
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of input digits that coordinate `i` receives.
    pub fn lane_bits(&self, arity: Arity, i: usize) -> u32 {
        assert!(i >= 1);
        let p = u64::from(self.precision);
        match arity {
            Arity::Finite(n) => {
                let (n, i) = (u64::from(n), i as u64);
                if i > n || i > p {
                    0
                } else {
                    ((p - i) / n + 1) as u32
                }
            }
            Arity::Infinite => {
                let c = i as u64;
                let mut d = 0;
                while diagonal_position(c, d + 1) <= p {
                    d += 1;
                }
                d as u32
            }
        }
    }

    /// Input digit position feeding digit `d` of coordinate `i`.
    fn source_digit(&self, arity: Arity, i: usize, d: u32) -> u64 {
        match arity {
            Arity::Finite(n) => i as u64 + u64::from(d - 1) * u64::from(n),
            Arity::Infinite => diagonal_position(i as u64, u64::from(d)),
        }
    }

    /// Assigned part of coordinate `i`: the digits it receives, as a numerator.
    fn lane(&self, arity: Arity, x: UnitCoord, i: usize) -> (u64, u32) {
        let bits = self.lane_bits(arity, i);
        let mut num = 0u64;
        for d in 1..=bits {
            if x.digit(self.source_digit(arity, i, d) as u32) {
                num |= 1 << (PRECISION - d);
            }
        }
        (num, bits)
    }

    /// Coordinate `i` of `r_n(x)` alone.
    pub fn coordinate(&self, arity: Arity, x: UnitCoord, i: usize) -> UnitCoord {
        UnitCoord::from_numerator(self.lane(arity, x, i).0).expect("below one")
    }

    /// `r_n(x)`. Infinite arity materializes the first `depth` coordinates.
    /// Digits of `x` beyond `precision` are ignored.
    pub fn apply(&self, arity: Arity, x: UnitCoord) -> CoordVector {
        let count = match arity {
            Arity::Finite(n) => n as usize,
            Arity::Infinite => self.depth,
        };
        self.apply_prefix(arity, x, count)
    }

    /// First `count` coordinates of `r_n(x)`.
    pub fn apply_prefix(&self, arity: Arity, x: UnitCoord, count: usize) -> CoordVector {
        arity.check().expect("arity must be positive");
        let coords = (1..=count).map(|i| self.coordinate(arity, x, i)).collect();
        CoordVector { arity, coords }
    }

    /// The first `count` coordinates with every digit that the lattice does
    /// not determine filled in from `rng`. For uniform `x` the result is
    /// distributed as `r_n` of a uniform point of the continuum.
    pub fn apply_completed<R: Rng + ?Sized>(&self, arity: Arity, x: UnitCoord, count: usize, rng: &mut R) -> Vec<f64> {
        (1..=count)
            .map(|i| {
                let (num, bits) = self.lane(arity, x, i);
                let free = PRECISION - bits.min(PRECISION);
                let low = if free == 0 { 0 } else { rng.gen::<u64>() >> (64 - free) };
                (num | low) as f64 / (1u64 << PRECISION) as f64
            })
            .collect()
    }

    /// `r_n^{-1}(v)` for finite `n`.
    pub fn invert(&self, n: u32, v: &CoordVector) -> Result<UnitCoord, RecipeError> {
        if n == 0 {
            return Err(RecipeError::ZeroArity);
        }
        let arity = Arity::Finite(n);
        if v.coords.len() != n as usize {
            return Err(RecipeError::WrongLength { expected: n as usize, got: v.coords.len() });
        }
        let mut num = 0u64;
        for (idx, &c) in v.coords.iter().enumerate() {
            let i = idx + 1;
            let bits = self.lane_bits(arity, i);
            let fits = !c.is_one() && (c.numerator() == 0 || c.trailing_zero_bits() >= PRECISION - bits);
            if !fits {
                return Err(RecipeError::PrecisionExceeded { coord: i, bits });
            }
            for d in 1..=bits {
                if c.digit(d) {
                    num |= 1 << (PRECISION as u64 - self.source_digit(arity, i, d));
                }
            }
        }
        Ok(UnitCoord::from_numerator(num).expect("below one"))
    }

    /// Monte Carlo estimate of `λ{x : (r_n(x))_i ≤ a_i for i ≤ k}`, whose
    /// target is `∏ a_i`. Undetermined digits are completed at random so the
    /// estimate has no lattice bias.
    pub fn verify_property(&self, arity: Arity, thresholds: &[f64], samples: u64, seed: u64) -> DensityEstimate {
        let k = thresholds.len();
        monte_carlo(samples, seed, |rng| {
            let x = uniform_coord(rng);
            let coords = self.apply_completed(arity, x, k, rng);
            let inside = coords.iter().zip(thresholds).all(|(c, a)| c <= a);
            f64::from(u8::from(inside))
        })
    }
}

/// Exact measure counter for a finite-arity recipe over its full input
/// lattice. Each lattice point `x` stands for the cell `[x, x + 2^{-p})`,
/// whose image is the box `∏ [v_i, v_i + 2^{-m_i})`; that box lies inside
/// `{≤ a}` exactly when every `v_i < a_i`.
#[derive(Debug, Clone)]
pub struct CountTable {
    lane_bits: Vec<u32>,
    /// Exclusive prefix sums over an array of shape `(2^{m_i} + 1)_i`.
    prefix: Vec<u64>,
    precision: u32,
}

/// Largest lattice the exact counter will enumerate.
pub const MAX_COUNT_BITS: u32 = 24;

impl CountTable {
    pub fn build(recipe: &Recipe, n: u32) -> Result<Self, RecipeError> {
        if n == 0 {
            return Err(RecipeError::ZeroArity);
        }
        let p = recipe.precision();
        if p > MAX_COUNT_BITS {
            return Err(RecipeError::LatticeTooLarge { max: MAX_COUNT_BITS, got: p });
        }
        let arity = Arity::Finite(n);
        let lane_bits: Vec<u32> = (1..=n as usize).map(|i| recipe.lane_bits(arity, i)).collect();
        let dims: Vec<usize> = lane_bits.iter().map(|&m| (1usize << m) + 1).collect();
        let strides = strides(&dims);
        let mut table = vec![0u64; dims.iter().product()];
        for raw in 0..(1u64 << p) {
            let x = UnitCoord::from_ratio(raw, p).expect("lattice point");
            let v = recipe.apply(arity, x);
            // Shift by one so that index u+1 accumulates points with v < u+1.
            let mut idx = 0;
            for (i, c) in v.coords().iter().enumerate() {
                let cell = (c.numerator() >> (PRECISION - lane_bits[i])) as usize;
                idx += (cell + 1) * strides[i];
            }
            table[idx] += 1;
        }
        for (axis, &stride) in strides.iter().enumerate() {
            for idx in 0..table.len() {
                if (idx / stride) % dims[axis] != 0 {
                    table[idx] += table[idx - stride];
                }
            }
        }
        Ok(CountTable { lane_bits, prefix: table, precision: p })
    }

    pub fn lane_bits(&self) -> &[u32] {
        &self.lane_bits
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Number of lattice cells mapped inside `{(r_n(x))_i ≤ a_i, i ≤ k}`.
    /// Thresholds must be multiples of their lane resolution; missing
    /// trailing thresholds mean "unconstrained".
    pub fn count_below(&self, thresholds: &[UnitCoord]) -> Result<u64, RecipeError> {
        if thresholds.len() > self.lane_bits.len() {
            return Err(RecipeError::WrongLength { expected: self.lane_bits.len(), got: thresholds.len() });
        }
        let dims: Vec<usize> = self.lane_bits.iter().map(|&m| (1usize << m) + 1).collect();
        let strides = strides(&dims);
        let mut idx = 0;
        for (i, &m) in self.lane_bits.iter().enumerate() {
            let cells = match thresholds.get(i) {
                Some(a) => {
                    let shift = PRECISION - m;
                    if a.numerator() & ((1u64 << shift) - 1) != 0 {
                        return Err(RecipeError::ThresholdTooFine { index: i + 1, bits: m });
                    }
                    (a.numerator() >> shift) as usize
                }
                None => 1usize << m,
            };
            idx += cells * strides[i];
        }
        Ok(self.prefix[idx])
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    strides
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> UnitCoord {
        UnitCoord::from_f64(x).unwrap()
    }

    #[test]
    fn apply_examples() {
        let r = Recipe::default();
        assert_eq!(r.apply(Arity::Finite(1), c(0.3125)).coords(), &[c(0.3125)]);
        assert_eq!(r.apply(Arity::Finite(2), c(0.75)).coords(), &[c(0.5), c(0.5)]);
        assert_eq!(r.apply(Arity::Finite(2), c(0.625)).coords(), &[c(0.75), c(0.0)]);
    }

    #[test]
    fn invert_examples() {
        let r = Recipe::default();
        let v = CoordVector::new(Arity::Finite(2), vec![c(0.5), c(0.5)]);
        assert_eq!(r.invert(2, &v).unwrap(), c(0.75));
        let v = CoordVector::new(Arity::Finite(1), vec![c(0.3125)]);
        assert_eq!(r.invert(1, &v).unwrap(), c(0.3125));
        let v = CoordVector::new(Arity::Finite(2), vec![c(0.75), c(0.0)]);
        assert_eq!(r.invert(2, &v).unwrap(), c(0.625));
    }

    #[test]
    fn invert_rejects_fine_coordinates() {
        let r = Recipe::with_precision(16);
        let fine = UnitCoord::from_ratio(1, 9).unwrap();
        let v = CoordVector::new(Arity::Finite(2), vec![fine, c(0.0)]);
        assert_eq!(r.invert(2, &v), Err(RecipeError::PrecisionExceeded { coord: 1, bits: 8 }));
        let v = CoordVector::new(Arity::Finite(2), vec![UnitCoord::ONE, c(0.0)]);
        assert!(r.invert(2, &v).is_err());
    }

    #[test]
    fn diagonal_order() {
        // Digits 1..6 of x go to (1,1), (1,2), (2,1), (1,3), (2,2), (3,1).
        let r = Recipe::default();
        let x = UnitCoord::from_ratio(0b101101, 6).unwrap();
        let v = r.apply_prefix(Arity::Infinite, x, 3);
        assert_eq!(v.coord(1), UnitCoord::from_ratio(0b101, 3).unwrap());
        assert_eq!(v.coord(2), UnitCoord::from_ratio(0b10, 2).unwrap());
        assert_eq!(v.coord(3), UnitCoord::from_ratio(0b1, 1).unwrap());
        assert_eq!(r.lane_bits(Arity::Infinite, 1), 10);
    }

    #[test]
    fn lane_bits_cover_precision() {
        let r = Recipe::with_precision(16);
        for n in 1..=5 {
            let total: u32 = (1..=n as usize).map(|i| r.lane_bits(Arity::Finite(n), i)).sum();
            assert_eq!(total, 16);
        }
    }

    #[test]
    fn full_threshold_is_full_measure() {
        let r = Recipe::default();
        let e = r.verify_property(Arity::Finite(3), &[1.0], 1000, 3);
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn count_table_small() {
        let r = Recipe::with_precision(4);
        let t = CountTable::build(&r, 2).unwrap();
        assert_eq!(t.lane_bits(), &[2, 2]);
        let q = |a: u64, b: u64| t.count_below(&[UnitCoord::from_ratio(a, 2).unwrap(), UnitCoord::from_ratio(b, 2).unwrap()]).unwrap();
        for a in 0..=4 {
            for b in 0..=4 {
                assert_eq!(q(a, b), a * b);
            }
        }
        assert!(t.count_below(&[UnitCoord::from_ratio(1, 3).unwrap()]).is_err());
    }
}
