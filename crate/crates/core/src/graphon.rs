//! Evaluable graphons: the primitive kernels, part layouts and block
//! assemblies of primitives.

use std::any::Any;
use std::fmt;

use thiserror::Error;

use crate::geometry::{level_of, level_start, UnitCoord, ONE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphonError {
    #[error("block matrix is not symmetric at ({0}, {1})")]
    InvalidStep(usize, usize),
    #[error("block value {0} is outside [0,1]")]
    ValueOutOfRange(f64),
    #[error("measures must be positive and sum to 1")]
    BadMeasures,
    #[error("measure {0} is not a ratio with denominator at most {MAX_DENOMINATOR}")]
    NotRational(f64),
    #[error("expected degrees must be pairwise distinct")]
    DuplicateDegree,
    #[error("duplicate part name {0:?}")]
    DuplicatePart(String),
    #[error("unknown part {0:?}")]
    UnknownPart(String),
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// A symmetric measurable kernel `[0,1]^2 -> [0,1]` that can be evaluated
/// pointwise. Implementations must be safe to call from many threads.
pub trait Graphon: Send + Sync {
    fn eval(&self, x: UnitCoord, y: UnitCoord) -> f64;

    fn name(&self) -> String;

    fn layout(&self) -> Option<&PartitionedLayout> {
        None
    }

    /// Evaluation at scaled positions `s` in part `xp` and `t` in part `yp`.
    fn eval_parts(&self, xp: usize, s: UnitCoord, yp: usize, t: UnitCoord) -> f64 {
        let layout = self.layout().expect("eval_parts needs a partitioned graphon");
        self.eval(layout.embed(xp, s), layout.embed(yp, t))
    }

    /// A partition of [0,1] into intervals on whose products the kernel is
    /// constant, when one exists with few cells.
    fn cells(&self) -> Option<Vec<Cell>> {
        None
    }

    /// Value of the kernel on `xp × yp` when it is constant there.
    fn block_constant(&self, _xp: usize, _yp: usize) -> Option<f64> {
        None
    }

    fn as_any(&self) -> &dyn Any;
}

/// Interval of a cell partition: its measure and a lattice point inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub width: f64,
    pub probe: UnitCoord,
}

/// Deepest level kept by the checker cell partitions; the remainder of
/// measure `2^{-40}` forms one tail cell.
pub const CHECKER_CELL_DEPTH: u32 = 40;

fn level_cells(depth: u32) -> Vec<Cell> {
    let mut cells: Vec<Cell> =
        (1..=depth).map(|k| Cell { width: (-(k as f64)).exp2(), probe: level_start(k) }).collect();
    cells.push(Cell { width: (-(depth as f64)).exp2(), probe: level_start(depth + 1) });
    cells
}

fn level_index(x: UnitCoord) -> Option<u32> {
    level_of(x).ok().map(|p| p.level())
}

/// The constant graphon `p`.
#[derive(Debug, Clone, Copy)]
pub struct Constant(f64);

impl Constant {
    pub fn new(p: f64) -> Result<Self, GraphonError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphonError::ValueOutOfRange(p));
        }
        Ok(Constant(p))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl Graphon for Constant {
    fn eval(&self, _: UnitCoord, _: UnitCoord) -> f64 {
        self.0
    }
    fn name(&self) -> String {
        format!("constant({})", self.0)
    }
    fn cells(&self) -> Option<Vec<Cell>> {
        Some(vec![Cell { width: 1.0, probe: UnitCoord::ZERO }])
    }
    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// `W(x,y) = 1` iff `x + y ≥ 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfGraphon;

pub fn half_graphon() -> HalfGraphon {
    HalfGraphon
}

impl HalfGraphon {
    pub fn value(x: UnitCoord, y: UnitCoord) -> f64 {
        f64::from(u8::from(x.numerator() + y.numerator() >= ONE))
    }
}

impl Graphon for HalfGraphon {
    fn eval(&self, x: UnitCoord, y: UnitCoord) -> f64 {
        HalfGraphon::value(x, y)
    }
    fn name(&self) -> String {
        "half".into()
    }
    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// `κ(x,y) = 1` iff `⟨x⟩ = ⟨y⟩`. The point 1 belongs to no level and is
/// adjacent to nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiagonalChecker;

pub fn diagonal_checker() -> DiagonalChecker {
    DiagonalChecker
}

impl DiagonalChecker {
    pub fn value(x: UnitCoord, y: UnitCoord) -> f64 {
        match (level_index(x), level_index(y)) {
            (Some(a), Some(b)) if a == b => 1.0,
            _ => 0.0,
        }
    }
}

impl Graphon for DiagonalChecker {
    fn eval(&self, x: UnitCoord, y: UnitCoord) -> f64 {
        DiagonalChecker::value(x, y)
    }
    fn name(&self) -> String {
        "checker".into()
    }
    fn cells(&self) -> Option<Vec<Cell>> {
        Some(level_cells(CHECKER_CELL_DEPTH))
    }
    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// `1` iff `⟨x⟩ = ⟨y⟩ + 1`. Not symmetric, so it is a directed block kernel
/// and only enters a graphon through a [`BlockGraphon`], which mirrors it.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShiftedChecker;

pub fn shifted_checker() -> ShiftedChecker {
    ShiftedChecker
}

impl ShiftedChecker {
    pub fn value(x: UnitCoord, y: UnitCoord) -> f64 {
        match (level_index(x), level_index(y)) {
            (Some(a), Some(b)) if a == b + 1 => 1.0,
            _ => 0.0,
        }
    }

    pub fn cells() -> Vec<Cell> {
        level_cells(CHECKER_CELL_DEPTH)
    }
}

/// A kernel on one ordered pair of parts, in scaled coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockKernel {
    Zero,
    Constant(f64),
    Half,
    Checker,
    /// `⟨s⟩ = ⟨t⟩ + 1`.
    Shifted,
    /// `⟨t⟩ = ⟨s⟩ + 1`.
    ShiftedTranspose,
}

impl BlockKernel {
    pub fn eval(&self, s: UnitCoord, t: UnitCoord) -> f64 {
        match self {
            BlockKernel::Zero => 0.0,
            BlockKernel::Constant(p) => *p,
            BlockKernel::Half => HalfGraphon::value(s, t),
            BlockKernel::Checker => DiagonalChecker::value(s, t),
            BlockKernel::Shifted => ShiftedChecker::value(s, t),
            BlockKernel::ShiftedTranspose => ShiftedChecker::value(t, s),
        }
    }

    /// The kernel of the reversed pair.
    pub fn transpose(&self) -> BlockKernel {
        match self {
            BlockKernel::Shifted => BlockKernel::ShiftedTranspose,
            BlockKernel::ShiftedTranspose => BlockKernel::Shifted,
            other => other.clone(),
        }
    }

    fn is_symmetric(&self) -> bool {
        !matches!(self, BlockKernel::Shifted | BlockKernel::ShiftedTranspose)
    }

    fn constant(&self) -> Option<f64> {
        match self {
            BlockKernel::Zero => Some(0.0),
            BlockKernel::Constant(p) => Some(*p),
            _ => None,
        }
    }
}

impl fmt::Display for BlockKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockKernel::Zero => write!(f, "zero"),
            BlockKernel::Constant(p) => write!(f, "constant {p}"),
            BlockKernel::Half => write!(f, "half"),
            BlockKernel::Checker => write!(f, "checker"),
            BlockKernel::Shifted => write!(f, "shifted-checker"),
            BlockKernel::ShiftedTranspose => write!(f, "shifted-checker-transpose"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub name: String,
    /// Measure is `weight / denominator` of the layout.
    pub weight: u64,
    pub degree: Option<f64>,
}

/// Largest common denominator accepted for part measures.
pub const MAX_DENOMINATOR: u64 = 1 << 10;

/// Parts laid out consecutively in declaration order. Measures are
/// rationals over a shared denominator so part membership of lattice points
/// is decided exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedLayout {
    parts: Vec<Part>,
    denominator: u64,
    cumulative: Vec<u64>,
}

impl PartitionedLayout {
    pub fn new(parts: Vec<Part>, denominator: u64) -> Result<Self, GraphonError> {
        if denominator == 0 || denominator > MAX_DENOMINATOR || parts.is_empty() {
            return Err(GraphonError::BadMeasures);
        }
        if parts.iter().any(|p| p.weight == 0) || parts.iter().map(|p| p.weight).sum::<u64>() != denominator {
            return Err(GraphonError::BadMeasures);
        }
        for (i, p) in parts.iter().enumerate() {
            if parts[..i].iter().any(|q| q.name == p.name) {
                return Err(GraphonError::DuplicatePart(p.name.clone()));
            }
            if let Some(d) = p.degree {
                if parts[..i].iter().any(|q| q.degree == Some(d)) {
                    return Err(GraphonError::DuplicateDegree);
                }
            }
        }
        let mut cumulative = vec![0];
        for p in &parts {
            cumulative.push(cumulative.last().unwrap() + p.weight);
        }
        Ok(PartitionedLayout { parts, denominator, cumulative })
    }

    /// Builds a layout from real measures, recovering a common denominator.
    pub fn from_measures(names: &[&str], measures: &[f64], degrees: Option<&[f64]>) -> Result<Self, GraphonError> {
        if names.len() != measures.len() || degrees.is_some_and(|d| d.len() != names.len()) {
            return Err(GraphonError::Shape("names, measures and degrees differ in length".into()));
        }
        if measures.iter().any(|&m| m <= 0.0 || !m.is_finite()) {
            return Err(GraphonError::BadMeasures);
        }
        let denominator = (1..=MAX_DENOMINATOR)
            .find(|&d| measures.iter().all(|&m| ((m * d as f64) - (m * d as f64).round()).abs() < 1e-9))
            .ok_or_else(|| GraphonError::NotRational(measures[0]))?;
        let parts = names
            .iter()
            .zip(measures)
            .enumerate()
            .map(|(i, (n, &m))| Part {
                name: n.to_string(),
                weight: (m * denominator as f64).round() as u64,
                degree: degrees.map(|d| d[i]),
            })
            .collect();
        PartitionedLayout::new(parts, denominator)
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GraphonError> {
        self.parts.iter().position(|p| p.name == name).ok_or_else(|| GraphonError::UnknownPart(name.to_string()))
    }

    pub fn measure(&self, i: usize) -> f64 {
        self.parts[i].weight as f64 / self.denominator as f64
    }

    /// `[lo, hi)` as lattice numerators: the lattice points lying in part `i`.
    pub fn lattice_range(&self, i: usize) -> (u64, u64) {
        let bound = |c: u64| -> u64 {
            let scaled = u128::from(c) * u128::from(ONE);
            scaled.div_ceil(u128::from(self.denominator)) as u64
        };
        (bound(self.cumulative[i]), bound(self.cumulative[i + 1]))
    }

    /// Real endpoints of part `i`.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        let d = self.denominator as f64;
        (self.cumulative[i] as f64 / d, self.cumulative[i + 1] as f64 / d)
    }

    /// Part containing `x` and the scaled position `η(x) ∈ [0,1]`. The point
    /// 1 belongs to the last part at scaled position 1.
    pub fn locate(&self, x: UnitCoord) -> (usize, UnitCoord) {
        let scaled = u128::from(x.numerator()) * u128::from(self.denominator);
        let one = u128::from(ONE);
        let mut i = self.cumulative.partition_point(|&c| u128::from(c) * one <= scaled) - 1;
        i = i.min(self.parts.len() - 1);
        let offset = scaled - u128::from(self.cumulative[i]) * one;
        let t = (offset / u128::from(self.parts[i].weight)) as u64;
        (i, UnitCoord::from_numerator(t.min(ONE)).expect("inside [0,1]"))
    }

    /// `η^{-1}`: the lattice point of part `i` at scaled position `t`,
    /// rounded down.
    pub fn embed(&self, i: usize, t: UnitCoord) -> UnitCoord {
        let num = u128::from(self.cumulative[i]) * u128::from(ONE) + u128::from(t.numerator()) * u128::from(self.parts[i].weight);
        let x = (num / u128::from(self.denominator)) as u64;
        let (lo, hi) = self.lattice_range(i);
        UnitCoord::from_numerator(x.clamp(lo, hi.saturating_sub(1).max(lo))).expect("inside [0,1]")
    }
}

/// Partitioned graphon assembled from [`BlockKernel`]s on part pairs.
#[derive(Debug, Clone)]
pub struct BlockGraphon {
    layout: PartitionedLayout,
    /// `kernels[i][j]` acts on `(s in part i, t in part j)`; kept consistent
    /// with `kernels[j][i]` by transposition.
    kernels: Vec<Vec<BlockKernel>>,
    name: String,
}

impl BlockGraphon {
    /// All blocks start at zero.
    pub fn new(layout: PartitionedLayout, name: impl Into<String>) -> Self {
        let n = layout.len();
        BlockGraphon { layout, kernels: vec![vec![BlockKernel::Zero; n]; n], name: name.into() }
    }

    /// Sets the kernel of `(i, j)` and its transpose on `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, kernel: BlockKernel) -> Result<(), GraphonError> {
        if let BlockKernel::Constant(p) = kernel {
            if !(0.0..=1.0).contains(&p) {
                return Err(GraphonError::ValueOutOfRange(p));
            }
        }
        if i == j && !kernel.is_symmetric() {
            return Err(GraphonError::InvalidStep(i, j));
        }
        self.kernels[j][i] = kernel.transpose();
        self.kernels[i][j] = kernel;
        Ok(())
    }

    pub fn kernel(&self, i: usize, j: usize) -> &BlockKernel {
        &self.kernels[i][j]
    }
}

impl Graphon for BlockGraphon {
    fn eval(&self, x: UnitCoord, y: UnitCoord) -> f64 {
        let (i, s) = self.layout.locate(x);
        let (j, t) = self.layout.locate(y);
        self.eval_parts(i, s, j, t)
    }

    fn eval_parts(&self, xp: usize, s: UnitCoord, yp: usize, t: UnitCoord) -> f64 {
        if xp <= yp {
            self.kernels[xp][yp].eval(s, t)
        } else {
            self.kernels[yp][xp].eval(t, s)
        }
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn layout(&self) -> Option<&PartitionedLayout> {
        Some(&self.layout)
    }

    fn cells(&self) -> Option<Vec<Cell>> {
        let all_constant = self.kernels.iter().flatten().all(|k| k.constant().is_some());
        all_constant.then(|| {
            (0..self.layout.len())
                .map(|i| Cell { width: self.layout.measure(i), probe: UnitCoord::from_numerator(self.layout.lattice_range(i).0).unwrap() })
                .collect()
        })
    }

    fn block_constant(&self, xp: usize, yp: usize) -> Option<f64> {
        self.kernels[xp][yp].constant()
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Piecewise constant graphon with the given symmetric block matrix.
pub fn step_graphon(blocks: &[Vec<f64>], widths: &[f64]) -> Result<BlockGraphon, GraphonError> {
    let n = widths.len();
    if blocks.len() != n || blocks.iter().any(|r| r.len() != n) {
        return Err(GraphonError::Shape(format!("{n} widths but a {}-row block matrix", blocks.len())));
    }
    for (i, row) in blocks.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != blocks[j][i] {
                return Err(GraphonError::InvalidStep(i, j));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(GraphonError::ValueOutOfRange(v));
            }
        }
    }
    let names: Vec<String> = (0..n).map(|i| format!("P{i}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let layout = PartitionedLayout::from_measures(&name_refs, widths, None)?;
    let mut g = BlockGraphon::new(layout, "step");
    for (i, row) in blocks.iter().enumerate() {
        for (j, &v) in row.iter().enumerate().skip(i) {
            g.set(i, j, BlockKernel::Constant(v))?;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> UnitCoord {
        UnitCoord::nearest(x)
    }

    #[test]
    fn primitive_examples() {
        assert_eq!(Constant::new(0.3).unwrap().eval(c(0.1), c(0.9)), 0.3);
        assert_eq!(half_graphon().eval(c(0.3), c(0.8)), 1.0);
        assert_eq!(half_graphon().eval(c(0.5), c(0.5)), 1.0);
        assert_eq!(half_graphon().eval(c(0.2), c(0.3)), 0.0);
        assert_eq!(diagonal_checker().eval(c(0.2), c(0.6)), 0.0);
        assert_eq!(diagonal_checker().eval(c(0.51), c(0.74)), 1.0);
        assert_eq!(diagonal_checker().eval(c(0.1), c(0.9)), 0.0);
        assert_eq!(ShiftedChecker::value(c(0.6), c(0.2)), 1.0);
        assert_eq!(ShiftedChecker::value(c(0.2), c(0.3)), 0.0);
        assert_eq!(diagonal_checker().eval(UnitCoord::ONE, UnitCoord::ONE), 0.0);
    }

    #[test]
    fn checker_cell_masses() {
        let cells = diagonal_checker().cells().unwrap();
        let total: f64 = cells.iter().map(|c| c.width).sum();
        assert!((total - 1.0).abs() < 1e-15);
        let diag: f64 = cells.iter().map(|c| c.width * c.width).sum();
        assert!((diag - 1.0 / 3.0).abs() < 1e-12);
        let shifted: f64 = cells
            .iter()
            .flat_map(|a| cells.iter().map(move |b| a.width * b.width * ShiftedChecker::value(a.probe, b.probe)))
            .sum();
        assert!((shifted - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn step_validation() {
        assert!(matches!(step_graphon(&[vec![0.0, 1.0], vec![0.5, 0.0]], &[0.5, 0.5]), Err(GraphonError::InvalidStep(0, 1))));
        assert!(step_graphon(&[vec![0.2]], &[1.0]).is_ok());
        assert!(matches!(step_graphon(&[vec![0.2]], &[0.9]), Err(GraphonError::BadMeasures)));
    }

    #[test]
    fn layout_locates_and_embeds() {
        let l = PartitionedLayout::from_measures(&["a", "b", "c"], &[1.0 / 27.0, 11.0 / 27.0, 15.0 / 27.0], None).unwrap();
        assert_eq!(l.locate(UnitCoord::ZERO), (0, UnitCoord::ZERO));
        let (i, t) = l.locate(c(0.3));
        assert_eq!(i, 1);
        assert!((t.to_f64() - (0.3 - 1.0 / 27.0) * 27.0 / 11.0).abs() < 1e-12);
        assert_eq!(l.locate(UnitCoord::ONE).0, 2);
        for i in 0..3 {
            let (lo, hi) = l.lattice_range(i);
            assert_eq!(l.locate(UnitCoord::from_numerator(lo).unwrap()).0, i);
            assert_eq!(l.locate(UnitCoord::from_numerator(hi - 1).unwrap()).0, i);
            let x = l.embed(i, c(0.25));
            assert_eq!(l.locate(x).0, i);
        }
    }

    #[test]
    fn layout_rejects_bad_input() {
        assert!(matches!(
            PartitionedLayout::from_measures(&["a", "b"], &[0.5, 0.5], Some(&[0.1, 0.1])),
            Err(GraphonError::DuplicateDegree)
        ));
        assert!(matches!(PartitionedLayout::from_measures(&["a", "a"], &[0.5, 0.5], None), Err(GraphonError::DuplicatePart(_))));
        assert!(PartitionedLayout::from_measures(&["a"], &[std::f64::consts::FRAC_1_PI], None).is_err());
    }

    #[test]
    fn block_graphon_mirrors_directed_kernels() {
        let l = PartitionedLayout::from_measures(&["a", "b"], &[0.5, 0.5], None).unwrap();
        let mut g = BlockGraphon::new(l, "t");
        g.set(0, 1, BlockKernel::Shifted).unwrap();
        assert!(g.set(0, 0, BlockKernel::Shifted).is_err());
        for (x, y) in [(0.3, 0.55), (0.3, 0.9), (0.45, 0.6), (0.1, 0.7)] {
            assert_eq!(g.eval(c(x), c(y)), g.eval(c(y), c(x)));
        }
        // Scaled 0.6 (level 2) in a against scaled 0.1 (level 1) in b.
        assert_eq!(g.eval(c(0.3), c(0.55)), 1.0);
    }
}
