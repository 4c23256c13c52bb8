//! Dyadic coordinates on [0,1] and the level decomposition
//! [0,1/2), [1/2,3/4), [3/4,7/8), ...
//!
//! A [`UnitCoord`] is an integer numerator over `2^PRECISION`, so every level
//! computation here is exact.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of fractional bits carried by a [`UnitCoord`].
pub const PRECISION: u32 = 53;

/// Numerator of the value 1.
pub const ONE: u64 = 1 << PRECISION;

/// Deepest level present on the lattice: `1 - 2^{-53}` sits alone in it.
pub const MAX_LEVEL: u32 = PRECISION + 1;

const FRACTION_MASK: u64 = ONE - 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("the point 1 lies in no level interval")]
    NoLevel,
    #[error("value {0} is outside [0,1]")]
    OutOfRange(f64),
    #[error("value {0} is not a multiple of 2^-{PRECISION}")]
    NotDyadic(f64),
    #[error("level must be at least 1 and at most {MAX_LEVEL}, got {0}")]
    BadLevel(u32),
    #[error("relative position must lie in [0,1)")]
    RelOutOfRange,
    #[error("relative position has more than {available} significant bits at level {level}")]
    RelTooPrecise { level: u32, available: u32 },
}

/// A point of [0,1] stored as `num / 2^53`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct UnitCoord(u64);

impl UnitCoord {
    pub const ZERO: UnitCoord = UnitCoord(0);
    pub const ONE: UnitCoord = UnitCoord(ONE);
    pub const HALF: UnitCoord = UnitCoord(ONE / 2);

    pub fn from_numerator(num: u64) -> Result<Self, GeometryError> {
        if num > ONE {
            return Err(GeometryError::OutOfRange(num as f64 / ONE as f64));
        }
        Ok(UnitCoord(num))
    }

    /// Numerator `num` over `2^bits`, for `bits <= 53`.
    pub fn from_ratio(num: u64, bits: u32) -> Result<Self, GeometryError> {
        assert!(bits <= PRECISION, "denominator 2^{bits} exceeds the lattice");
        let scaled = num
            .checked_shl(PRECISION - bits)
            .filter(|s| s >> (PRECISION - bits) == num)
            .ok_or(GeometryError::OutOfRange(f64::INFINITY))?;
        Self::from_numerator(scaled)
    }

    /// Exact conversion; fails unless `x` is a lattice point of [0,1].
    pub fn from_f64(x: f64) -> Result<Self, GeometryError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(GeometryError::OutOfRange(x));
        }
        let scaled = x * ONE as f64;
        if scaled.fract() != 0.0 {
            return Err(GeometryError::NotDyadic(x));
        }
        Ok(UnitCoord(scaled as u64))
    }

    /// Nearest lattice point, clamped into [0,1].
    pub fn nearest(x: f64) -> Self {
        if x.is_nan() || x <= 0.0 {
            return UnitCoord(0);
        }
        if x >= 1.0 {
            return UnitCoord(ONE);
        }
        UnitCoord(((x * ONE as f64).round() as u64).min(ONE))
    }

    pub fn numerator(self) -> u64 {
        self.0
    }

    /// Exact: numerators fit in the f64 mantissa.
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / ONE as f64
    }

    pub fn is_one(self) -> bool {
        self.0 == ONE
    }

    /// `1 - self`, exact.
    pub fn complement(self) -> Self {
        UnitCoord(ONE - self.0)
    }

    /// Number of trailing zero bits of the 53-bit fraction (53 for zero).
    pub fn trailing_zero_bits(self) -> u32 {
        if self.0 & FRACTION_MASK == 0 {
            PRECISION
        } else {
            self.0.trailing_zeros()
        }
    }

    /// Binary digit `i` (1-based) after the point. Digits past 53 are zero.
    pub fn digit(self, i: u32) -> bool {
        debug_assert!(i >= 1);
        if i > PRECISION || self.is_one() {
            return false;
        }
        (self.0 >> (PRECISION - i)) & 1 == 1
    }
}

impl fmt::Debug for UnitCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UnitCoord({})", self.to_f64())
    }
}

impl fmt::Display for UnitCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Level index and relative position inside that level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelPos {
    level: u32,
    rel: UnitCoord,
}

impl LevelPos {
    /// Validates that `rel` survives the rescaling into level `level` without
    /// losing bits, so that the round trip through [`reconstruct`] is exact.
    pub fn new(level: u32, rel: UnitCoord) -> Result<Self, GeometryError> {
        if level == 0 || level > MAX_LEVEL {
            return Err(GeometryError::BadLevel(level));
        }
        if rel.is_one() {
            return Err(GeometryError::RelOutOfRange);
        }
        if rel.numerator() != 0 && rel.trailing_zero_bits() < level {
            return Err(GeometryError::RelTooPrecise { level, available: PRECISION.saturating_sub(level) });
        }
        Ok(LevelPos { level, rel })
    }

    /// Rounds a real relative position down onto the level's sub-lattice.
    pub fn nearest(level: u32, rel: f64) -> Result<Self, GeometryError> {
        if level == 0 || level > MAX_LEVEL {
            return Err(GeometryError::BadLevel(level));
        }
        if !(0.0..1.0).contains(&rel) {
            return Err(GeometryError::RelOutOfRange);
        }
        let num = UnitCoord::nearest(rel).numerator().min(ONE - 1);
        let num = (num >> level) << level;
        Ok(LevelPos { level, rel: UnitCoord(num) })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn rel(&self) -> UnitCoord {
        self.rel
    }
}

/// `(⟨x⟩, ⟨x⟩_rel)`: for `x ∈ [1-2^{-k}, 1-2^{-(k+1)})` the level is `k+1` and
/// the relative position is `(x - (1-2^{-k}))·2^{k+1}`.
pub fn level_of(x: UnitCoord) -> Result<LevelPos, GeometryError> {
    if x.is_one() {
        return Err(GeometryError::NoLevel);
    }
    // Leading ones of the 53-bit fraction count the completed levels.
    let ones = (x.0 << (64 - PRECISION)).leading_ones();
    let level = ones + 1;
    let rel = (x.0 << level) & FRACTION_MASK;
    Ok(LevelPos { level, rel: UnitCoord(rel) })
}

/// `1 - 2^{1-level} + rel·2^{-level}`.
pub fn reconstruct(p: LevelPos) -> UnitCoord {
    let start = ONE - (ONE >> (p.level - 1));
    UnitCoord(start + (p.rel.0 >> p.level))
}

/// Whether a measure refers to the unit interval or to a part of measure 1/27.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Unit,
    Part,
}

/// Measure of level `k`: `2^{-k}` on the unit interval, `2^{-k}/27` inside a
/// part of the hypercubical graphon.
pub fn level_measure(k: u32, scale: Scale) -> f64 {
    assert!(k >= 1, "levels start at 1");
    let unit = (-(k as f64)).exp2();
    match scale {
        Scale::Unit => unit,
        Scale::Part => unit / 27.0,
    }
}

/// Left endpoint `1 - 2^{1-k}` of level `k`.
pub fn level_start(k: u32) -> UnitCoord {
    assert!((1..=MAX_LEVEL).contains(&k));
    UnitCoord(ONE - (ONE >> (k - 1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> UnitCoord {
        UnitCoord::from_f64(x).unwrap()
    }

    #[test]
    fn level_examples() {
        let p = level_of(c(0.0)).unwrap();
        assert_eq!((p.level(), p.rel()), (1, c(0.0)));
        let p = level_of(c(0.875)).unwrap();
        assert_eq!((p.level(), p.rel()), (4, c(0.0)));
        // 0.6 is not dyadic; its nearest lattice point still lands in level 2
        // with relative position 0.4 up to lattice resolution.
        let p = level_of(UnitCoord::nearest(0.6)).unwrap();
        assert_eq!(p.level(), 2);
        assert!((p.rel().to_f64() - 0.4).abs() < 1e-15);
        assert_eq!(level_of(UnitCoord::ONE), Err(GeometryError::NoLevel));
    }

    #[test]
    fn reconstruct_examples() {
        assert_eq!(reconstruct(LevelPos::new(1, c(0.0)).unwrap()), c(0.0));
        // 1 - 1/4 + 0.5/8
        assert_eq!(reconstruct(LevelPos::new(3, c(0.5)).unwrap()), c(0.8125));
        assert_eq!(reconstruct(LevelPos::new(4, c(0.0)).unwrap()), c(0.875));
        let x = reconstruct(LevelPos::nearest(2, 0.4).unwrap());
        assert!((x.to_f64() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn level_pos_rejects_lost_bits() {
        let fine = UnitCoord::from_numerator(1).unwrap();
        assert!(matches!(LevelPos::new(2, fine), Err(GeometryError::RelTooPrecise { .. })));
        assert_eq!(LevelPos::new(0, c(0.0)), Err(GeometryError::BadLevel(0)));
        assert_eq!(LevelPos::new(2, UnitCoord::ONE), Err(GeometryError::RelOutOfRange));
    }

    #[test]
    fn measures() {
        assert_eq!(level_measure(1, Scale::Unit), 0.5);
        assert_eq!(level_measure(3, Scale::Part), 1.0 / 216.0);
        let total: f64 = (1..=60).map(|k| level_measure(k, Scale::Unit)).sum();
        assert_eq!(total, 1.0 - (-60f64).exp2());
    }

    #[test]
    fn deepest_levels() {
        let x = UnitCoord::from_numerator(ONE - 1).unwrap();
        let p = level_of(x).unwrap();
        assert_eq!(p.level(), MAX_LEVEL);
        assert_eq!(reconstruct(p), x);
    }

    #[test]
    fn from_f64_rejects_non_lattice() {
        assert!(matches!(UnitCoord::from_f64(1e-300), Err(GeometryError::NotDyadic(_))));
        assert!(matches!(UnitCoord::from_f64(1.5), Err(GeometryError::OutOfRange(_))));
        assert_eq!(UnitCoord::from_ratio(3, 2).unwrap(), c(0.75));
    }
}
