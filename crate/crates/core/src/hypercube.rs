//! The hypercubical graphon: fourteen parts glued from checker, triangular,
//! coordinate-order and constant kernels, with closed-form degree profiles.

use std::any::Any;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{level_of, level_start, LevelPos, UnitCoord, ONE, PRECISION};
use crate::graphon::{Graphon, Part, PartitionedLayout};
use crate::recipe::{Arity, Recipe};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HypercubeError {
    #[error("truncation depth must be at least 1")]
    BadTruncation,
    #[error("unknown part {0:?}")]
    UnknownPart(String),
    #[error("part {0} has no level structure")]
    NoLevels(HyperPart),
    #[error("the point 1 lies in no level")]
    NoLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HyperPart {
    A0,
    A1,
    A2,
    A3,
    B1,
    B2,
    B3,
    B4,
    B5,
    C,
    D,
    E1,
    E2,
    F,
}

use HyperPart::*;

impl HyperPart {
    pub const ALL: [HyperPart; 14] = [A0, A1, A2, A3, B1, B2, B3, B4, B5, C, D, E1, E2, F];

    /// Parts whose relative degrees enter the `E₁` row.
    pub const DEGREE_UNIFIED: [HyperPart; 11] = [A0, A1, A2, A3, B1, B2, B3, B4, B5, C, D];

    /// Parts whose relative degrees enter the `E₂` row.
    pub const COORDINATE_PARTS: [HyperPart; 4] = [B1, B2, B4, B5];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> HyperPart {
        HyperPart::ALL[i]
    }

    pub fn name(self) -> &'static str {
        ["A0", "A1", "A2", "A3", "B1", "B2", "B3", "B4", "B5", "C", "D", "E1", "E2", "F"][self.index()]
    }

    /// Numerator of the part measure over 27.
    pub fn weight(self) -> u64 {
        match self {
            E1 => 11,
            E2 => 4,
            _ => 1,
        }
    }

    pub fn measure(self) -> f64 {
        self.weight() as f64 / 27.0
    }

    /// Whether the part is cut into levels of measure `2^{-k}/27`.
    pub fn has_levels(self) -> bool {
        matches!(self, A1 | A2 | A3 | B1 | B2 | B3 | B4 | B5)
    }

    /// Constant value of the `F` row on this part, in tenths.
    fn pseudorandom_tenths(self) -> Option<u32> {
        match self {
            A1 => Some(1),
            A2 => Some(2),
            A3 => Some(3),
            B1 => Some(4),
            B2 => Some(5),
            B3 => Some(6),
            B4 => Some(7),
            B5 => Some(8),
            C => Some(9),
            _ => None,
        }
    }
}

impl fmt::Display for HyperPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HyperPart {
    type Err = HypercubeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().trim_end_matches('⊞');
        HyperPart::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(key))
            .ok_or_else(|| HypercubeError::UnknownPart(s.to_string()))
    }
}

/// Table 1 degree of a part, for the parts where it is a known constant.
pub fn table_degree(part: HyperPart) -> Option<f64> {
    match part {
        A0 | A1 | A2 | A3 | B1 | B2 | B3 | B4 | B5 | C => Some((110 + part.index() as u32) as f64 / 270.0),
        D => Some(40.0 / 270.0),
        F => Some(45.0 / 270.0),
        E1 | E2 => None,
    }
}

/// Mean degree of `E₁`: `206/693`.
pub const E1_DEGREE: f64 = 206.0 / 693.0;
/// Mean degree of `E₂`: `5/216`.
pub const E2_DEGREE: f64 = 5.0 / 216.0;

/// Sum over `Y ∈ {A₀..C, D}` of `deg_Y y`, averaged over `y` in each part.
/// These are the closed forms behind [`E1_DEGREE`].
fn mean_unified_sum(part: HyperPart) -> f64 {
    match part {
        A0 | A3 => 1.0,
        A1 => 3.5,
        A2 | B3 => 1.5,
        B1 => 139.0 / 42.0,
        B2 => 2.0,
        B4 | B5 => 61.0 / 42.0,
        C => 5.0,
        _ => 0.0,
    }
}

/// A deliberate corruption of one kernel pair, used as a negative control
/// for the verification battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// `1 - W` on the pair.
    Complement(HyperPart, HyperPart),
    /// `0` on the pair.
    Zero(HyperPart, HyperPart),
}

impl Mutation {
    /// The negative control for a pair: the complement, or zero on the
    /// constant-1/2 block where the complement would change nothing.
    pub fn control(x: HyperPart, y: HyperPart) -> Mutation {
        if matches!((x, y), (F, B2) | (B2, F)) {
            Mutation::Zero(x, y)
        } else {
            Mutation::Complement(x, y)
        }
    }

    pub fn pair(self) -> (HyperPart, HyperPart) {
        match self {
            Mutation::Complement(x, y) | Mutation::Zero(x, y) => (x, y),
        }
    }

    fn touches(self, x: HyperPart, y: HyperPart) -> bool {
        let (a, b) = self.pair();
        (a, b) == (x, y) || (a, b) == (y, x)
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mutation::Complement(x, y) => write!(f, "complement {x}x{y}"),
            Mutation::Zero(x, y) => write!(f, "zero {x}x{y}"),
        }
    }
}

/// Relative degrees of one vertex into every part, and its degree.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeProfile {
    pub part: HyperPart,
    pub t: UnitCoord,
    pub relative: [f64; 14],
    pub total: f64,
    /// Bound on what truncating infinite level sums may have dropped.
    pub tail: f64,
}

impl DegreeProfile {
    pub fn relative_to(&self, part: HyperPart) -> f64 {
        self.relative[part.index()]
    }
}

#[derive(Debug, Clone)]
pub struct HypercubeGraphon {
    layout: PartitionedLayout,
    recipe: Recipe,
    truncation: u32,
    mutation: Option<Mutation>,
}

/// Default depth for infinite level sums.
pub const DEFAULT_TRUNCATION: u32 = 30;

fn level(t: UnitCoord) -> Option<LevelPos> {
    level_of(t).ok()
}

fn indicator(b: bool) -> f64 {
    f64::from(u8::from(b))
}

/// `P(U_1 ⋯ U_k ≥ ρ)` for independent uniforms:
/// `1 - ρ Σ_{m<k} ln(1/ρ)^m / m!`.
pub fn product_tail(k: u32, rho: f64) -> f64 {
    if rho <= 0.0 {
        return 1.0;
    }
    if rho >= 1.0 {
        return 0.0;
    }
    let l = -rho.ln();
    let mut term = 1.0;
    let mut sum = 0.0;
    for m in 0..k {
        if m > 0 {
            term *= l / m as f64;
        }
        sum += term;
    }
    (1.0 - rho * sum).clamp(0.0, 1.0)
}

/// Running products `P_j = ∏_{i≤j} a_i` and `Q_j = ∏_{i≤j} (1-a_i)`,
/// 1-based with `P_0 = Q_0 = 1`.
fn running_products(a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![1.0];
    let mut q = vec![1.0];
    for &x in a {
        p.push(p.last().unwrap() * x);
        q.push(q.last().unwrap() * (1.0 - x));
    }
    (p, q)
}

impl HypercubeGraphon {
    pub fn build(recipe: Recipe, truncation: u32) -> Result<Self, HypercubeError> {
        if truncation == 0 {
            return Err(HypercubeError::BadTruncation);
        }
        let parts = HyperPart::ALL
            .iter()
            .map(|p| Part { name: p.name().to_string(), weight: p.weight(), degree: table_degree(*p) })
            .collect();
        let layout = PartitionedLayout::new(parts, 27).expect("static layout is valid");
        Ok(HypercubeGraphon { layout, recipe, truncation, mutation: None })
    }

    pub fn with_mutation(mut self, mutation: Mutation) -> Self {
        self.mutation = Some(mutation);
        self
    }

    pub fn mutation(&self) -> Option<Mutation> {
        self.mutation
    }

    pub fn recipe(&self) -> &Recipe {
        &self.recipe
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    /// `r_k(⟨t⟩_rel)` for a vertex of a coordinate part at level `k`.
    pub fn level_coords(&self, pos: LevelPos) -> Vec<f64> {
        self.recipe.apply(Arity::Finite(pos.level()), pos.rel()).to_f64()
    }

    /// Materialized prefix of `r_∞(t)` for a vertex of `D`.
    pub fn infinite_coords(&self, t: UnitCoord) -> Vec<f64> {
        self.recipe.apply(Arity::Infinite, t).to_f64()
    }

    fn infinite_coord(&self, t: UnitCoord, i: u32) -> UnitCoord {
        if i as usize > self.recipe.depth() {
            return UnitCoord::ZERO;
        }
        self.recipe.coordinate(Arity::Infinite, t, i as usize)
    }

    /// `W^{X×Y}(s,t)` including any mutation.
    pub fn eval_pair_kernel(&self, x: HyperPart, s: UnitCoord, y: HyperPart, t: UnitCoord) -> f64 {
        let w = self.pair_kernel(x, s, y, t);
        match self.mutation {
            Some(m) if m.touches(x, y) => match m {
                Mutation::Complement(..) => 1.0 - w,
                Mutation::Zero(..) => 0.0,
            },
            _ => w,
        }
    }

    /// The unmutated kernel, oriented so that `s` lies in `x`.
    pub fn pair_kernel(&self, x: HyperPart, s: UnitCoord, y: HyperPart, t: UnitCoord) -> f64 {
        match self.oriented_kernel(x, s, y, t) {
            Some(v) => v,
            None => self.oriented_kernel(y, t, x, s).unwrap_or(0.0),
        }
    }

    /// Kernels as listed in the construction; `None` when `(x, y)` is not a
    /// listed orientation.
    fn oriented_kernel(&self, x: HyperPart, s: UnitCoord, y: HyperPart, t: UnitCoord) -> Option<f64> {
        let v = match (x, y) {
            (A0, A1) => indicator(t.numerator() < UnitCoord::HALF.numerator()),
            (A1, A1 | A2 | B1 | B2 | B3 | B4 | B5) | (A2, A3 | B2) => checker(s, t),
            (A1, A3) => match (level(s), level(t)) {
                (Some(a), Some(b)) => indicator(a.level() == b.level() + 1),
                _ => 0.0,
            },
            (C, A0 | A1 | A2 | A3 | B2 | B3 | B4 | B5 | C) => indicator(s.numerator() + t.numerator() >= ONE),
            (C, B1) => self.triangular_first_coordinate(s, t),
            (B1, B1) => self.order_kernel(s, t),
            (B1, B2 | B3 | B4 | B5) => self.coordinate_kernel(s, y, t),
            (D, B1 | B2 | B4 | B5) => self.infinite_kernel(s, y, t),
            (E1, A0 | A1 | A2 | A3 | B1 | B2 | B3 | B4 | B5 | C) => 1.0 - self.unified_sum(y, t) / 11.0,
            (E2, D) => 1.0 - self.coordinate_sum(t) / 4.0,
            (F, other) => other.pseudorandom_tenths()? as f64 / 10.0,
            _ => return None,
        };
        Some(v)
    }

    /// `C×B₁`: `1 - 2^{1-k} + a_1 2^{-k} + s ≥ 1` with `k = ⟨t⟩` and
    /// `a_1 = (r_k(⟨t⟩_rel))_1`, compared exactly.
    fn triangular_first_coordinate(&self, s: UnitCoord, t: UnitCoord) -> f64 {
        let Some(pos) = level(t) else { return 0.0 };
        let k = pos.level();
        let a1 = self.recipe.coordinate(Arity::Finite(k), pos.rel(), 1).numerator();
        // Multiply through by 2^{53+k}: a_1 + s·2^k ≥ 2^{54}.
        let lhs = u128::from(a1) + (u128::from(s.numerator()) << k);
        indicator(lhs >= 1u128 << (PRECISION + 1))
    }

    /// `B₁×B₁`: the level-aware coordinatewise order. Vertices on one level
    /// are adjacent when comparable in either direction.
    fn order_kernel(&self, s: UnitCoord, t: UnitCoord) -> f64 {
        let (Some(ps), Some(pt)) = (level(s), level(t)) else { return 0.0 };
        let (ks, kt) = (ps.level(), pt.level());
        let m = ks.min(kt);
        let cs = self.recipe.apply_prefix(Arity::Finite(ks), ps.rel(), m as usize);
        let ct = self.recipe.apply_prefix(Arity::Finite(kt), pt.rel(), m as usize);
        let below = cs.coords().iter().zip(ct.coords()).all(|(a, b)| a <= b);
        let above = cs.coords().iter().zip(ct.coords()).all(|(a, b)| a >= b);
        indicator(match ks.cmp(&kt) {
            std::cmp::Ordering::Less => below,
            std::cmp::Ordering::Greater => above,
            std::cmp::Ordering::Equal => below || above,
        })
    }

    /// `B₁×{B₂..B₅}`: thresholds on `⟨t⟩_rel` read off the coordinates of `s`.
    fn coordinate_kernel(&self, s: UnitCoord, y: HyperPart, t: UnitCoord) -> f64 {
        let (Some(ps), Some(pt)) = (level(s), level(t)) else { return 0.0 };
        let (ks, kt) = (ps.level(), pt.level());
        if ks < kt {
            return 0.0;
        }
        let rho = pt.rel();
        match y {
            B3 => 1.0,
            B2 => indicator(rho <= self.recipe.coordinate(Arity::Finite(ks), ps.rel(), kt as usize)),
            B4 | B5 => {
                let c = self.recipe.apply_prefix(Arity::Finite(ks), ps.rel(), kt as usize).to_f64();
                let prod: f64 = if y == B4 { c.iter().product() } else { c.iter().map(|v| 1.0 - v).product() };
                indicator(rho.to_f64() <= prod)
            }
            _ => unreachable!(),
        }
    }

    /// `D×{B₁,B₂,B₄,B₅}`: thresholds from the infinite recipe image of `s`.
    fn infinite_kernel(&self, s: UnitCoord, y: HyperPart, t: UnitCoord) -> f64 {
        let Some(pt) = level(t) else { return 0.0 };
        let (kt, rho) = (pt.level(), pt.rel());
        match y {
            // Read as the coordinates of `t` lying below those of `s`; the
            // literal `⟨t⟩_rel ≤ (r_∞(s))_i` would give degree `min a_i`
            // instead of the product every later use relies on.
            B1 => {
                let ct = self.recipe.apply(Arity::Finite(kt), rho);
                indicator((1..=kt).all(|i| ct.coord(i as usize) <= self.infinite_coord(s, i)))
            }
            B2 => indicator(rho <= self.infinite_coord(s, kt)),
            B4 | B5 => {
                let mut prod = 1.0;
                for i in 1..=kt {
                    let c = self.infinite_coord(s, i).to_f64();
                    prod *= if y == B4 { c } else { 1.0 - c };
                }
                indicator(rho.to_f64() <= prod)
            }
            _ => unreachable!(),
        }
    }

    /// `Σ_{Y ∈ A₀..C, D} deg_Y` for a vertex of `part` at `t`.
    pub fn unified_sum(&self, part: HyperPart, t: UnitCoord) -> f64 {
        let rel = self.base_profile(part, t);
        HyperPart::DEGREE_UNIFIED.iter().map(|p| rel[p.index()]).sum()
    }

    /// `Σ_{Y ∈ B₁,B₂,B₄,B₅} deg_Y` for a vertex of `D` at `t`.
    pub fn coordinate_sum(&self, t: UnitCoord) -> f64 {
        let rel = self.base_profile(D, t);
        HyperPart::COORDINATE_PARTS.iter().map(|p| rel[p.index()]).sum()
    }

    /// Relative degrees into every part except the `E` parts, from the
    /// closed forms of each kernel. The `E` rows are filled in by
    /// [`HypercubeGraphon::profile`].
    fn base_profile(&self, part: HyperPart, t: UnitCoord) -> [f64; 14] {
        let mut rel = [0.0; 14];
        let tf = t.to_f64();
        let pos = if part.has_levels() { level(t) } else { None };
        let (k, half_k) = match pos {
            Some(p) => (p.level(), (-(p.level() as f64)).exp2()),
            None => (0, 0.0),
        };
        if let Some(tenths) = part.pseudorandom_tenths() {
            rel[F.index()] = tenths as f64 / 10.0;
        }
        if part.has_levels() && pos.is_none() {
            return rel;
        }
        match part {
            A0 => {
                rel[A1.index()] = 0.5;
                rel[C.index()] = tf;
            }
            A1 => {
                rel[A0.index()] = indicator(k == 1);
                for p in [A1, A2, B1, B2, B3, B4, B5] {
                    rel[p.index()] = half_k;
                }
                rel[A3.index()] = if k >= 2 { 2.0 * half_k } else { 0.0 };
                rel[C.index()] = tf;
            }
            A2 => {
                for p in [A1, A3, B2] {
                    rel[p.index()] = half_k;
                }
                rel[C.index()] = tf;
            }
            A3 => {
                rel[A1.index()] = half_k / 2.0;
                rel[A2.index()] = half_k;
                rel[C.index()] = tf;
            }
            B1 => {
                let a = self.level_coords(pos.unwrap());
                let (p, q) = running_products(&a);
                let mut order = 0.0;
                let mut coord = 0.0;
                let mut prod = 0.0;
                let mut coprod = 0.0;
                for j in 1..=k as usize {
                    let w = (-(j as f64)).exp2();
                    order += w * p[j];
                    coord += w * a[j - 1];
                    prod += w * p[j];
                    coprod += w * q[j];
                }
                let qk = q[k as usize];
                rel[A1.index()] = half_k;
                rel[B1.index()] = order + 2.0 * half_k * qk;
                rel[B2.index()] = coord;
                rel[B3.index()] = 1.0 - half_k;
                rel[B4.index()] = prod;
                rel[B5.index()] = coprod;
                rel[C.index()] = 1.0 - 2.0 * half_k + a[0] * half_k;
                rel[D.index()] = qk;
            }
            B2 => {
                let rho = pos.unwrap().rel().to_f64();
                rel[A1.index()] = half_k;
                rel[A2.index()] = half_k;
                rel[B1.index()] = 2.0 * half_k * (1.0 - rho);
                rel[C.index()] = tf;
                rel[D.index()] = 1.0 - rho;
            }
            B3 => {
                rel[A1.index()] = half_k;
                rel[B1.index()] = 2.0 * half_k;
                rel[C.index()] = tf;
            }
            B4 | B5 => {
                let g = product_tail(k, pos.unwrap().rel().to_f64());
                rel[A1.index()] = half_k;
                rel[B1.index()] = 2.0 * half_k * g;
                rel[C.index()] = tf;
                rel[D.index()] = g;
            }
            C => {
                for p in [A0, A1, A2, A3, B1, B2, B3, B4, B5, C] {
                    rel[p.index()] = tf;
                }
            }
            D => {
                let a: Vec<f64> =
                    (1..=self.truncation).map(|i| self.infinite_coord(t, i).to_f64()).collect();
                let (p, q) = running_products(&a);
                for j in 1..=self.truncation as usize {
                    let w = (-(j as f64)).exp2();
                    rel[B1.index()] += w * p[j];
                    rel[B2.index()] += w * a[j - 1];
                    rel[B4.index()] += w * p[j];
                    rel[B5.index()] += w * q[j];
                }
            }
            E1 => {
                for p in [A0, A1, A2, A3, B1, B2, B3, B4, B5, C] {
                    rel[p.index()] = 1.0 - mean_unified_sum(p) / 11.0;
                }
            }
            E2 => {
                // Mean of the coordinate sum over D is 1/3 + 1/2 + 1/3 + 1/3.
                rel[D.index()] = 1.0 - 1.5 / 4.0;
            }
            F => {
                for p in [A1, A2, A3, B1, B2, B3, B4, B5, C] {
                    rel[p.index()] = p.pseudorandom_tenths().unwrap() as f64 / 10.0;
                }
            }
        }
        rel
    }

    /// Closed-form relative degrees of the vertex at scaled position `t` of
    /// `part`, and its degree. Always describes the unmutated graphon.
    pub fn profile(&self, part: HyperPart, t: UnitCoord) -> DegreeProfile {
        let mut relative = self.base_profile(part, t);
        match part {
            A0 | A1 | A2 | A3 | B1 | B2 | B3 | B4 | B5 | C => {
                let s: f64 = HyperPart::DEGREE_UNIFIED.iter().map(|p| relative[p.index()]).sum();
                relative[E1.index()] = 1.0 - s / 11.0;
            }
            D => {
                let s: f64 = HyperPart::COORDINATE_PARTS.iter().map(|p| relative[p.index()]).sum();
                relative[E2.index()] = 1.0 - s / 4.0;
            }
            _ => {}
        }
        let total = HyperPart::ALL.iter().map(|p| p.measure() * relative[p.index()]).sum();
        let tail = if part == D { (-(self.truncation as f64)).exp2() } else { 0.0 };
        DegreeProfile { part, t, relative, total, tail }
    }

    /// Degree of the vertex at scaled position `t` of `part`.
    pub fn degree(&self, part: HyperPart, t: UnitCoord) -> f64 {
        self.profile(part, t).total
    }

    /// The level of a vertex of a levelled part. For `A₃` levels are indexed
    /// by the relative degree into `A₂`, which with this layout is `⟨t⟩`.
    pub fn level_membership(&self, part: HyperPart, t: UnitCoord) -> Result<u32, HypercubeError> {
        if !part.has_levels() {
            return Err(HypercubeError::NoLevels(part));
        }
        level(t).map(|p| p.level()).ok_or(HypercubeError::NoLevel)
    }

    /// Closed-form `deg_{Y_j}` of a vertex: its relative degree into level
    /// `j` of part `y`. Covers the level-structured pairs the battery and
    /// the typical-space module use; `None` elsewhere.
    pub fn level_relative_degree(&self, x: HyperPart, t: UnitCoord, y: HyperPart, j: u32) -> Option<f64> {
        if !y.has_levels() || j == 0 {
            return None;
        }
        match (x, y) {
            (D, B1 | B2 | B3 | B4 | B5) => {
                if y == B3 {
                    return Some(0.0);
                }
                let a: Vec<f64> = (1..=j).map(|i| self.infinite_coord(t, i).to_f64()).collect();
                let (p, q) = running_products(&a);
                Some(match y {
                    B1 | B4 => p[j as usize],
                    B2 => a[j as usize - 1],
                    _ => q[j as usize],
                })
            }
            (B1, B1 | B2 | B3 | B4 | B5) => {
                let pos = level(t)?;
                let k = pos.level();
                let a = self.level_coords(pos);
                let (p, q) = running_products(&a);
                let (ju, ku) = (j as usize, k as usize);
                Some(match y {
                    B1 if j < k => p[ju],
                    B1 if j > k => q[ku],
                    B1 => p[ku] + q[ku],
                    _ if j > k => 0.0,
                    B2 => a[ju - 1],
                    B3 => 1.0,
                    B4 => p[ju],
                    _ => q[ju],
                })
            }
            (B2, B1) => {
                let pos = level(t)?;
                Some(if j >= pos.level() { 1.0 - pos.rel().to_f64() } else { 0.0 })
            }
            (B3 | B4 | B5, B1) => {
                let pos = level(t)?;
                if j < pos.level() {
                    return Some(0.0);
                }
                Some(if x == B3 { 1.0 } else { product_tail(pos.level(), pos.rel().to_f64()) })
            }
            (A1 | A2 | B1 | B2 | B3 | B4 | B5, A1) | (A1, A2 | B1 | B2 | B3 | B4 | B5) | (A2, A3 | B2) | (A3 | B2, A2) => {
                Some(indicator(level(t)?.level() == j))
            }
            (A3, A1) => Some(indicator(level(t)?.level() + 1 == j)),
            (A1, A3) => Some(indicator(level(t)?.level() == j + 1)),
            _ => None,
        }
    }

    /// Scaled position in part `y` at level `j` with relative position
    /// `m / 2^{53-j}`.
    pub fn level_point(j: u32, m: u64) -> UnitCoord {
        let start = level_start(j).numerator();
        UnitCoord::from_numerator(start + m).expect("inside the level")
    }

    /// Relative degree into level `j` of `y` measured directly from the
    /// kernel, for kernels that are 1 below a threshold in `⟨t⟩_rel` and 0
    /// above. Binary search over the lattice of the level; the result is
    /// within `2^{j-53}` of the continuum threshold.
    pub fn bisect_level_degree(&self, x: HyperPart, s: UnitCoord, y: HyperPart, j: u32) -> f64 {
        assert!((1..PRECISION).contains(&j));
        let cells = 1u64 << (PRECISION - j);
        let on = |m: u64| self.eval_pair_kernel(x, s, y, Self::level_point(j, m)) > 0.5;
        if !on(0) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0u64, cells);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if on(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if hi == cells {
            return 1.0;
        }
        lo as f64 / cells as f64
    }
}

fn checker(s: UnitCoord, t: UnitCoord) -> f64 {
    match (level(s), level(t)) {
        (Some(a), Some(b)) => indicator(a.level() == b.level()),
        _ => 0.0,
    }
}

impl Graphon for HypercubeGraphon {
    fn eval(&self, x: UnitCoord, y: UnitCoord) -> f64 {
        let (i, s) = self.layout.locate(x);
        let (j, t) = self.layout.locate(y);
        self.eval_parts(i, s, j, t)
    }

    fn eval_parts(&self, xp: usize, s: UnitCoord, yp: usize, t: UnitCoord) -> f64 {
        self.eval_pair_kernel(HyperPart::from_index(xp), s, HyperPart::from_index(yp), t)
    }

    fn name(&self) -> String {
        format!("hypercubical(recipe=interleave, L={})", self.truncation)
    }

    fn layout(&self) -> Option<&PartitionedLayout> {
        Some(&self.layout)
    }

    fn block_constant(&self, xp: usize, yp: usize) -> Option<f64> {
        let (x, y) = (HyperPart::from_index(xp), HyperPart::from_index(yp));
        let base = if x == F {
            Some(y.pseudorandom_tenths().map_or(0.0, |v| v as f64 / 10.0))
        } else if y == F {
            Some(x.pseudorandom_tenths().map_or(0.0, |v| v as f64 / 10.0))
        } else if is_zero_block(x, y) {
            Some(0.0)
        } else {
            None
        }?;
        match self.mutation {
            Some(m) if m.touches(x, y) => match m {
                Mutation::Complement(..) => Some(1.0 - base),
                Mutation::Zero(..) => Some(0.0),
            },
            _ => Some(base),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Whether no kernel is listed for the pair in either orientation.
pub fn is_zero_block(x: HyperPart, y: HyperPart) -> bool {
    !(is_listed(x, y) || is_listed(y, x))
}

fn is_listed(x: HyperPart, y: HyperPart) -> bool {
    matches!(
        (x, y),
        (A0, A1)
            | (A1, A1 | A2 | A3 | B1 | B2 | B3 | B4 | B5)
            | (A2, A3 | B2)
            | (C, A0 | A1 | A2 | A3 | B1 | B2 | B3 | B4 | B5 | C)
            | (B1, B1 | B2 | B3 | B4 | B5)
            | (D, B1 | B2 | B4 | B5)
            | (E1, A0 | A1 | A2 | A3 | B1 | B2 | B3 | B4 | B5 | C)
            | (E2, D)
    ) || (x == F && y.pseudorandom_tenths().is_some())
}

/// Unordered part pairs on which the graphon vanishes identically.
pub fn zero_blocks() -> Vec<(HyperPart, HyperPart)> {
    let mut out = Vec::new();
    for (i, &x) in HyperPart::ALL.iter().enumerate() {
        for &y in &HyperPart::ALL[i..] {
            if is_zero_block(x, y) {
                out.push((x, y));
            }
        }
    }
    out
}
