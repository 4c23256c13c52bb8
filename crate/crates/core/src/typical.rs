//! Neighbourhood functions `f_x = W(x, ·)`, their L¹ and similarity
//! distances, and the coordinate picture of the part `D` of the
//! hypercubical graphon.
//!
//! For two vertices of `D` every inner integral `∫ W(z,y) f_x(y) dy` has a
//! closed form in the coordinate signatures, so distances there are exact
//! up to level truncation, except for two strata (deep `B₁` levels and `D`
//! itself) whose outer integral is Monte Carlo.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{monte_carlo, uniform_coord, DensityEstimate, EstimateKind};
use crate::geometry::{UnitCoord, PRECISION};
use crate::graphon::Graphon;
use crate::hypercube::{product_tail, HyperPart, HypercubeGraphon};
use crate::recipe::Arity;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypicalError {
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("depth must be between 1 and {max}, got {got}")]
    BadDepth { max: u32, got: u32 },
    #[error("anchors must lie in the same graphon")]
    Mismatch,
}

/// `y ↦ W(x, y)` for a fixed anchor `x`.
#[derive(Clone, Copy)]
pub struct VertexFunction<'a> {
    pub graphon: &'a dyn Graphon,
    pub anchor: UnitCoord,
}

impl<'a> VertexFunction<'a> {
    pub fn new(graphon: &'a dyn Graphon, anchor: UnitCoord) -> Self {
        VertexFunction { graphon, anchor }
    }

    pub fn eval(&self, y: UnitCoord) -> f64 {
        self.graphon.eval(self.anchor, y)
    }
}

/// Midpoints of a uniform grid of `n` cells, as lattice points.
fn midpoints(n: u64) -> impl Iterator<Item = UnitCoord> {
    let step = (1u64 << PRECISION) / n;
    (0..n).map(move |i| UnitCoord::from_numerator(i * step + step / 2).expect("below one"))
}

/// Grid used by the generic distance routines.
pub const GENERIC_GRID: u64 = 1 << 12;

/// `‖f_x − f_x'‖₁` by a midpoint rule on `GENERIC_GRID` points.
pub fn l1_distance(f: &VertexFunction, g: &VertexFunction) -> f64 {
    midpoints(GENERIC_GRID).map(|y| (f.eval(y) - g.eval(y)).abs()).sum::<f64>() / GENERIC_GRID as f64
}

/// `d_W(f_x, f_x') = ∫ |∫ W(z,y)(f_x(y) − f_x'(y)) dy| dz`, Monte Carlo over
/// `z` with a midpoint rule for the inner integral.
pub fn similarity_distance(f: &VertexFunction, g: &VertexFunction, budget: u64, seed: u64) -> DensityEstimate {
    let w = f.graphon;
    let grid: Vec<UnitCoord> = midpoints(1 << 10).collect();
    let diff: Vec<f64> = grid.iter().map(|&y| f.eval(y) - g.eval(y)).collect();
    let outer = (budget / grid.len() as u64).max(64);
    monte_carlo(outer, seed, |rng| {
        let z = uniform_coord(rng);
        (grid.iter().zip(&diff).map(|(&y, d)| w.eval(z, y) * d).sum::<f64>() / grid.len() as f64).abs()
    })
}

/// `(deg_{B₂,i} x)_{i ≤ depth}` for a vertex of `D` at scaled position `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordSignature {
    pub coords: Vec<f64>,
}

pub fn coord_signature(g: &HypercubeGraphon, t: UnitCoord, depth: u32) -> Result<CoordSignature, TypicalError> {
    if depth == 0 || depth > g.truncation() {
        return Err(TypicalError::BadDepth { max: g.truncation(), got: depth });
    }
    let coords =
        (1..=depth).map(|i| g.level_relative_degree(HyperPart::D, t, HyperPart::B2, i).expect("D has coordinates")).collect();
    Ok(CoordSignature { coords })
}

/// Sanity link between the signature and the recipe: the signature is the
/// prefix of `r_∞(t)`.
pub fn signature_matches_recipe(g: &HypercubeGraphon, t: UnitCoord, sig: &CoordSignature) -> bool {
    let image = g.recipe().apply(Arity::Infinite, t).to_f64();
    sig.coords.iter().enumerate().all(|(i, &c)| c == image.get(i).copied().unwrap_or(0.0))
}

/// Absolute measure of level `k` of a part of measure `1/27`.
fn lam(k: u32) -> f64 {
    (-(k as f64)).exp2() / 27.0
}

/// Running products of a signature, `P_0 = Q_0 = 1`.
#[derive(Debug, Clone)]
struct Anchor {
    a: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    /// Relative degree into `E₂`: `1 − Σ_{B₁,B₂,B₄,B₅} deg / 4`.
    e2: f64,
}

impl Anchor {
    fn new(coords: &[f64]) -> Self {
        let mut p = vec![1.0];
        let mut q = vec![1.0];
        for &c in coords {
            p.push(p.last().unwrap() * c);
            q.push(q.last().unwrap() * (1.0 - c));
        }
        let s: f64 = (1..=coords.len()).map(|i| (-(i as f64)).exp2() * (2.0 * p[i] + coords[i - 1] + q[i])).sum();
        Anchor { a: coords.to_vec(), p, q, e2: 1.0 - s / 4.0 }
    }

    fn depth(&self) -> u32 {
        self.a.len() as u32
    }

    /// `a_k` with 1-based `k`.
    fn at(&self, k: u32) -> f64 {
        self.a[k as usize - 1]
    }

    /// `Σ_{j ≥ k} λ_j ∏_{k<i≤j} a_i`: the measure of `B₁` levels at least
    /// `k` whose coordinates past `k` lie below the anchor's.
    fn tail_mass(&self, k: u32) -> f64 {
        let mut run = 1.0;
        let mut sum = 0.0;
        for j in k..=self.depth() {
            if j > k {
                run *= self.at(j);
            }
            sum += lam(j) * run;
        }
        sum
    }
}

/// `∫₀^p P(U₁⋯U_k ≥ ρ) dρ`.
fn integrated_product_tail(k: u32, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    let p = p.min(1.0);
    let l = -p.ln();
    // I(m) = ∫₀^p ρ ln(1/ρ)^m dρ = p² l^m / 2 + (m/2) I(m−1).
    let mut i_m = p * p / 2.0;
    let mut fact = 1.0;
    let mut sum = i_m;
    for m in 1..k {
        i_m = p * p * l.powi(m as i32) / 2.0 + m as f64 / 2.0 * i_m;
        fact *= m as f64;
        sum += i_m / fact;
    }
    p - sum
}

/// `λ{c ∈ ∏[0, a_i] : ∏ (1 − c_i) ≥ ρ}` by inclusion–exclusion over the
/// lower faces of the box `∏[1 − a_i, 1]`.
fn complement_product_mass(a: &[f64], rho: f64) -> f64 {
    let k = a.len() as u32;
    let b: Vec<f64> = a.iter().map(|x| 1.0 - x).collect();
    let mut total = 0.0;
    for mask in 0u32..(1 << k) {
        let mut scale = 1.0;
        for (i, bi) in b.iter().enumerate() {
            if mask >> i & 1 == 1 {
                scale *= bi;
            }
        }
        if scale == 0.0 {
            continue;
        }
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * scale * product_tail(k, rho / scale);
    }
    total.max(0.0)
}

/// Closed-form inner integrals `G_x(z) = ∫ W(z,y) f_x(y) dy` for `x ∈ D`,
/// by the part of `z`.
impl Anchor {
    fn a1(&self, k: u32) -> f64 {
        lam(k) * (2.0 * self.p[k as usize] + self.at(k) + self.q[k as usize])
    }

    fn a2(&self, k: u32) -> f64 {
        lam(k) * self.at(k)
    }

    fn b3(&self, k: u32) -> f64 {
        (k..=self.depth()).map(|j| lam(j) * self.p[j as usize]).sum()
    }

    fn f(&self) -> f64 {
        (1..=self.depth() as usize)
            .map(|i| (-(i as f64)).exp2() * (1.1 * self.p[i] + 0.5 * self.a[i - 1] + 0.8 * self.q[i]))
            .sum::<f64>()
            / 27.0
    }

    fn e1(&self) -> f64 {
        let mut total = 0.0;
        for j in 1..=self.depth() {
            let h = (-(j as f64)).exp2();
            let ju = j as usize;
            // B₂ level j: unified sum (2h + 2) − (h + 1)ρ.
            let a = self.at(j);
            let b2 = a - ((2.0 * h + 2.0) * a - (h + 1.0) * a * a / 2.0) / 11.0;
            // B₄, B₅ level j: unified sum h + (2h + 1)G(ρ) + 1 − 2h + ρh.
            let tail_side = |p: f64| p - (h * p + (2.0 * h + 1.0) * integrated_product_tail(j, p) + (1.0 - 2.0 * h) * p + h * p * p / 2.0) / 11.0;
            let b4 = tail_side(self.p[ju]);
            let b5 = tail_side(self.q[ju]);
            // B₁ level j: the unified sum is multilinear in the coordinates,
            // so its mean over the box below the anchor is explicit.
            let vol = self.p[ju];
            let mut mean_p = vec![1.0];
            let mut mean_q = vec![1.0];
            for i in 1..=ju {
                mean_p.push(mean_p[i - 1] * self.a[i - 1] / 2.0);
                mean_q.push(mean_q[i - 1] * (1.0 - self.a[i - 1] / 2.0));
            }
            let weighted = |v: &[f64]| (1..=ju).map(|m| (-(m as f64)).exp2() * v[m]).sum::<f64>();
            let mean_s = h
                + weighted(&mean_p)
                + 2.0 * h * mean_q[ju]
                + (1..=ju).map(|m| (-(m as f64)).exp2() * self.a[m - 1] / 2.0).sum::<f64>()
                + (1.0 - h)
                + weighted(&mean_p)
                + weighted(&mean_q)
                + (1.0 - 2.0 * h + self.a[0] / 2.0 * h)
                + mean_q[ju];
            let b1 = vol * (1.0 - mean_s / 11.0);
            total += lam(j) * (b1 + b2 + b4 + b5);
        }
        total
    }

    /// `z ∈ C` at scaled position `s`: `W = 1` on level `j` above
    /// `τ_j = 2 − s 2^j`.
    fn c(&self, s: f64) -> f64 {
        let mut total = 0.0;
        for j in 1..=self.depth() {
            let tau = (2.0 - s * (j as f64).exp2()).clamp(0.0, 1.0);
            let ju = j as usize;
            let above = |v: f64| (v - tau).max(0.0);
            let rest = if self.a[0] > 0.0 { self.p[ju] / self.a[0] } else { (2..=ju).map(|i| self.a[i - 1]).product() };
            total += lam(j) * (above(self.at(j)) + above(self.p[ju]) + above(self.q[ju]) + above(self.a[0]) * rest);
        }
        total
    }

    /// `z ∈ D` with signature `b`.
    fn d(&self, b: &Anchor) -> f64 {
        let mut total = 0.0;
        let mut box_min = 1.0;
        for j in 1..=self.depth() {
            let ju = j as usize;
            box_min *= b.at(j).min(self.at(j));
            total += lam(j) * (b.at(j).min(self.at(j)) + b.p[ju].min(self.p[ju]) + b.q[ju].min(self.q[ju]) + box_min);
        }
        total + 4.0 / 27.0 * b.e2 * self.e2
    }

    /// `z ∈ B₁` at level `k = c.len()` with coordinates `c`.
    fn b1(&self, c: &[f64]) -> f64 {
        let k = c.len() as u32;
        let (mut pc, mut qc) = (1.0, 1.0);
        let mut below = 1.0;
        let mut above = 1.0;
        let mut total = 0.0;
        for j in 1..=self.depth() {
            let ju = j as usize;
            if j <= k {
                let cj = c[ju - 1];
                pc *= cj;
                qc *= 1.0 - cj;
                below *= cj.min(self.at(j));
                above *= (self.at(j) - cj).max(0.0);
                total += lam(j) * (cj.min(self.at(j)) + pc.min(self.p[ju]) + qc.min(self.q[ju]));
                total += lam(j) * if j < k { below } else { below + above };
            } else {
                above *= self.at(j);
                total += lam(j) * above;
            }
        }
        total
    }

    /// `z ∈ B₂` at level `k`, relative position `rho`.
    fn b2(&self, k: u32, rho: f64) -> f64 {
        let ak = self.at(k);
        if ak <= rho {
            return 0.0;
        }
        (ak - rho) * self.p[k as usize - 1] * self.tail_mass(k)
    }

    fn b4(&self, k: u32, rho: f64) -> f64 {
        let pk = self.p[k as usize];
        if pk <= 0.0 {
            return 0.0;
        }
        pk * product_tail(k, rho / pk) * self.tail_mass(k)
    }

    fn b5(&self, k: u32, rho: f64) -> f64 {
        complement_product_mass(&self.a[..k as usize], rho) * self.tail_mass(k)
    }

    /// `G_x(z)` for `z` at scaled position `s` of `part`, any part.
    #[cfg(test)]
    fn inner(&self, g: &HypercubeGraphon, part: HyperPart, s: UnitCoord) -> f64 {
        use HyperPart::*;
        let pos = crate::geometry::level_of(s).ok();
        let (k, rho) = pos.map_or((0, 0.0), |p| (p.level().min(self.depth()), p.rel().to_f64()));
        match part {
            A1 => self.a1(k),
            A2 => self.a2(k),
            B3 => self.b3(k),
            F => self.f(),
            E1 => self.e1(),
            C => self.c(s.to_f64()),
            B2 => self.b2(k, rho),
            B4 => self.b4(k, rho),
            B5 => self.b5(k, rho),
            B1 => {
                let c: Vec<f64> = (1..=k).map(|i| g.level_relative_degree(B1, s, B2, i).expect("B1 has coordinates")).collect();
                self.b1(&c)
            }
            D => self.d(&Anchor::new(&coord_signature(g, s, self.depth()).expect("valid depth").coords)),
            A0 | A3 | E2 => 0.0,
        }
    }

    fn l1(&self, o: &Anchor) -> f64 {
        let mut total = 0.0;
        let mut box_min = 1.0;
        for j in 1..=self.depth() {
            let ju = j as usize;
            box_min *= self.at(j).min(o.at(j));
            let b1 = self.p[ju] + o.p[ju] - 2.0 * box_min;
            total += lam(j) * ((self.at(j) - o.at(j)).abs() + (self.p[ju] - o.p[ju]).abs() + (self.q[ju] - o.q[ju]).abs() + b1);
        }
        total + 4.0 / 27.0 * (self.e2 - o.e2).abs()
    }
}

/// Levels integrated for `z` in `B₁`, `B₂` and `B₄`.
const OUTER_LEVELS: u32 = 20;
/// Levels integrated for `z` in `B₅`, whose inner integral costs `2^k`.
const OUTER_LEVELS_B5: u32 = 10;
/// Midpoints per level for one-dimensional strata.
const OUTER_GRID: usize = 1024;
const OUTER_GRID_B5: usize = 256;
const OUTER_GRID_C: usize = 1 << 14;

/// The distances of two `D` vertices and the bounds that sandwich them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sandwich {
    /// `Σ λ(B₂,ᵢ) |Δᵢ|`.
    pub lower: f64,
    pub l1: f64,
    /// `(14/27) Σ 2^{-i} |Δᵢ|`.
    pub upper: f64,
    /// `(1/27) Σ 4^{-i} |Δᵢ|`, the bound as usually stated.
    pub dw_lower: f64,
    /// `Σ λ(A₂,ᵢ) λ(B₂,ᵢ) |Δᵢ| = (1/729) Σ 4^{-i} |Δᵢ|`, what the
    /// `A₂,ᵢ × B₂,ᵢ` blocks actually give.
    pub dw_lower_blocks: f64,
    pub dw: f64,
    pub dw_stderr: f64,
    /// Bound on what level truncation may have dropped.
    pub tail: f64,
}

/// Slack allowed in every comparison on top of the truncation tail.
pub const SANDWICH_SLACK: f64 = 1e-6;

impl Sandwich {
    /// `lower ≤ l1 ≤ upper` and `d_W ≤ l1`, each within slack plus tail and,
    /// for `d_W`, four standard errors.
    pub fn l1_chain_holds(&self) -> bool {
        let slack = SANDWICH_SLACK + self.tail;
        self.lower <= self.l1 + slack && self.l1 <= self.upper + slack && self.dw <= self.l1 + slack + 4.0 * self.dw_stderr
    }

    fn below_dw(&self, bound: f64) -> bool {
        bound <= self.dw + SANDWICH_SLACK + self.tail + 4.0 * self.dw_stderr
    }

    /// `dw_lower ≤ d_W` within slack, tail and four standard errors.
    pub fn dw_lower_holds(&self) -> bool {
        self.below_dw(self.dw_lower)
    }

    pub fn dw_lower_blocks_holds(&self) -> bool {
        self.below_dw(self.dw_lower_blocks)
    }

    pub fn holds(&self) -> bool {
        self.l1_chain_holds() && self.dw_lower_holds()
    }
}

/// L¹ distance of the neighbourhoods of two `D` vertices (scaled positions
/// `t`, `t'`), exact up to `2^{-L}`.
pub fn d_pair_l1(g: &HypercubeGraphon, t: UnitCoord, t2: UnitCoord) -> f64 {
    let l = g.truncation();
    let x = Anchor::new(&coord_signature(g, t, l).expect("valid depth").coords);
    let y = Anchor::new(&coord_signature(g, t2, l).expect("valid depth").coords);
    x.l1(&y)
}

/// `d_W` of two `D` vertices: exact level sums where the inner integral is
/// constant on levels, midpoint rules on one-dimensional strata, and Monte
/// Carlo with `budget` samples each for `B₁` levels from 3 on and for `D`.
fn d_pair_similarity(x: &Anchor, y: &Anchor, budget: u64, seed: u64) -> (DensityEstimate, f64) {
    let depth = x.depth();
    let diff = |gx: f64, gy: f64| (gx - gy).abs();
    let mut exact = 0.0;
    for k in 1..=depth {
        exact += lam(k) * (diff(x.a1(k), y.a1(k)) + diff(x.a2(k), y.a2(k)) + diff(x.b3(k), y.b3(k)));
    }
    exact += diff(x.f(), y.f()) * HyperPart::F.measure() + diff(x.e1(), y.e1()) * HyperPart::E1.measure();
    let c: f64 = (0..OUTER_GRID_C)
        .map(|i| {
            let s = (i as f64 + 0.5) / OUTER_GRID_C as f64;
            diff(x.c(s), y.c(s))
        })
        .sum::<f64>()
        / OUTER_GRID_C as f64;
    exact += c / 27.0;
    let mid = |i: usize, n: usize| (i as f64 + 0.5) / n as f64;
    for k in 1..=OUTER_LEVELS.min(depth) {
        let mut s = 0.0;
        for i in 0..OUTER_GRID {
            let rho = mid(i, OUTER_GRID);
            s += diff(x.b2(k, rho), y.b2(k, rho)) + diff(x.b4(k, rho), y.b4(k, rho));
        }
        exact += lam(k) * s / OUTER_GRID as f64;
    }
    for k in 1..=OUTER_LEVELS_B5.min(depth) {
        let s: f64 = (0..OUTER_GRID_B5).map(|i| {
            let rho = mid(i, OUTER_GRID_B5);
            diff(x.b5(k, rho), y.b5(k, rho))
        }).sum();
        exact += lam(k) * s / OUTER_GRID_B5 as f64;
    }
    // B₁ levels 1 and 2 on grids.
    let n1 = OUTER_GRID;
    exact += lam(1) * (0..n1).map(|i| diff(x.b1(&[mid(i, n1)]), y.b1(&[mid(i, n1)]))).sum::<f64>() / n1 as f64;
    let n2 = 64;
    let mut s2 = 0.0;
    for i in 0..n2 {
        for j in 0..n2 {
            let c = [mid(i, n2), mid(j, n2)];
            s2 += diff(x.b1(&c), y.b1(&c));
        }
    }
    exact += lam(2) * s2 / (n2 * n2) as f64;

    // Deep B₁ levels: level k ≥ 3 drawn with probability ∝ 2^{-k}.
    let deep_levels = OUTER_LEVELS.min(depth);
    let deep_mass: f64 = (3..=deep_levels).map(lam).sum();
    let deep = monte_carlo(budget, seed, |rng| {
        let u: f64 = rng.gen::<f64>() * deep_mass;
        let mut acc = 0.0;
        let mut k = deep_levels;
        for j in 3..=deep_levels {
            acc += lam(j);
            if u < acc {
                k = j;
                break;
            }
        }
        let c: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        diff(x.b1(&c), y.b1(&c))
    })
    .scaled(deep_mass);
    let d_part = monte_carlo(budget, seed ^ 0x5eed, |rng| {
        let b = Anchor::new(&(0..depth).map(|_| rng.gen::<f64>()).collect::<Vec<_>>());
        diff(x.d(&b), y.d(&b))
    })
    .scaled(1.0 / 27.0);

    let value = exact + deep.value + d_part.value;
    let stderr = (deep.stderr.powi(2) + d_part.stderr.powi(2)).sqrt();
    // Every inner integral for z at level k of B₂, B₄, B₅ is at most the
    // mass of B₁ levels ≥ k, 2^{1-k}/27; anything else is at most 8/27.
    let level_tail = |from: u32| -> f64 { (from + 1..=60).map(|k| lam(k) * 2.0 * (-(k as f64)).exp2() * 2.0).sum() };
    let tail = level_tail(OUTER_LEVELS) * 2.0 + level_tail(OUTER_LEVELS_B5) + lam(OUTER_LEVELS) * 8.0 / 27.0 * 2.0
        + (-(depth as f64)).exp2();
    let samples = 2 * budget;
    (DensityEstimate { value, stderr, samples, kind: EstimateKind::MonteCarlo }, tail)
}

/// The full sandwich for two `D` vertices at scaled positions `t`, `t2`.
pub fn sandwich_check(g: &HypercubeGraphon, t: UnitCoord, t2: UnitCoord, budget: u64, seed: u64) -> Sandwich {
    let l = g.truncation();
    let sx = coord_signature(g, t, l).expect("valid depth");
    let sy = coord_signature(g, t2, l).expect("valid depth");
    let (x, y) = (Anchor::new(&sx.coords), Anchor::new(&sy.coords));
    let mut lower = 0.0;
    let mut upper = 0.0;
    let mut dw_lower = 0.0;
    for i in 1..=l {
        let d = (x.at(i) - y.at(i)).abs();
        lower += lam(i) * d;
        upper += 14.0 / 27.0 * (-(i as f64)).exp2() * d;
        dw_lower += (-(2.0 * i as f64)).exp2() * d / 27.0;
    }
    let (dw, tail) = d_pair_similarity(&x, &y, budget, seed);
    Sandwich { lower, l1: x.l1(&y), upper, dw_lower, dw_lower_blocks: dw_lower / 27.0, dw: dw.value, dw_stderr: dw.stderr, tail }
}

/// CSV rows `pair,lower,l1,upper,dw_lower,dw_lower_blocks,dw,dw_stderr,tail`.
pub fn sandwich_csv(rows: &[Sandwich]) -> String {
    let mut out = String::from("pair,lower,l1,upper,dw_lower,dw_lower_blocks,dw,dw_stderr,tail\n");
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!(
            "{i},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}\n",
            r.lower, r.l1, r.upper, r.dw_lower, r.dw_lower_blocks, r.dw, r.dw_stderr, r.tail
        ));
    }
    out
}

/// Greedy covering count of `samples` neighbourhood functions at L¹ radius
/// `eps`: each sampled `f_x` joins the first centre within `eps` or becomes
/// a centre. An estimate of the number of neighbourhood classes, not a
/// certified regularity bound.
pub fn epsilon_classes(w: &dyn Graphon, eps: f64, samples: usize, seed: u64) -> Result<usize, TypicalError> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(TypicalError::BadEpsilon(eps));
    }
    let grid: Vec<UnitCoord> = midpoints(1 << 10).collect();
    let mut rng = crate::estimate::stream_rng(seed, 0);
    let mut centres: Vec<Vec<f64>> = Vec::new();
    for _ in 0..samples {
        let x = uniform_coord(&mut rng);
        let f: Vec<f64> = grid.iter().map(|&y| w.eval(x, y)).collect();
        let near = centres.iter().any(|c| c.iter().zip(&f).map(|(a, b)| (a - b).abs()).sum::<f64>() / grid.len() as f64 <= eps);
        if !near {
            centres.push(f);
        }
    }
    Ok(centres.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::{step_graphon, Constant};
    use crate::hypercube::DEFAULT_TRUNCATION;
    use crate::recipe::Recipe;

    fn g() -> HypercubeGraphon {
        HypercubeGraphon::build(Recipe::default(), DEFAULT_TRUNCATION).unwrap()
    }

    #[test]
    fn integrated_tail_matches_quadrature() {
        for k in 1..5 {
            for p in [0.1, 0.5, 0.9, 1.0] {
                let n = 100_000;
                let q: f64 = (0..n).map(|i| product_tail(k, (i as f64 + 0.5) / n as f64 * p)).sum::<f64>() * p / n as f64;
                assert!((integrated_product_tail(k, p) - q).abs() < 1e-6, "k={k} p={p}");
            }
        }
    }

    #[test]
    fn complement_product_mass_small_cases() {
        // One coordinate: λ{c ≤ a : 1 − c ≥ ρ} = min(a, 1 − ρ).
        assert!((complement_product_mass(&[0.7], 0.5) - 0.5).abs() < 1e-12);
        assert!((complement_product_mass(&[0.3], 0.5) - 0.3).abs() < 1e-12);
        // Two coordinates, against a fine grid.
        let (a, rho) = ([0.6, 0.8], 0.3);
        let n = 2000;
        let mut count = 0.0;
        for i in 0..n {
            for j in 0..n {
                let c1 = (i as f64 + 0.5) / n as f64 * a[0];
                let c2 = (j as f64 + 0.5) / n as f64 * a[1];
                if (1.0 - c1) * (1.0 - c2) >= rho {
                    count += 1.0;
                }
            }
        }
        let grid = count / (n * n) as f64 * a[0] * a[1];
        assert!((complement_product_mass(&a, rho) - grid).abs() < 1e-3);
    }

    #[test]
    fn identical_anchors_have_zero_distances() {
        let w = g();
        let t = UnitCoord::nearest(0.41);
        let s = sandwich_check(&w, t, t, 1000, 1);
        assert_eq!((s.lower, s.l1, s.upper, s.dw_lower, s.dw), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn closed_form_l1_matches_kernel_grid() {
        let w = g();
        let layout = w.layout().unwrap();
        let (t, t2) = (UnitCoord::nearest(0.3), UnitCoord::nearest(0.77));
        let f = VertexFunction::new(&w, layout.embed(HyperPart::D.index(), t));
        let f2 = VertexFunction::new(&w, layout.embed(HyperPart::D.index(), t2));
        // Level-aware reference: integrate each coordinate part level by level.
        let mut reference = 0.0;
        for part in [HyperPart::B1, HyperPart::B2, HyperPart::B4, HyperPart::B5] {
            for j in 1..=20u32 {
                let n = 1u64 << 12;
                let cells = 1u64 << (PRECISION - j);
                let s: f64 = (0..n)
                    .map(|i| {
                        let y = layout.embed(part.index(), HypercubeGraphon::level_point(j, i * (cells / n) + cells / n / 2));
                        (f.eval(y) - f2.eval(y)).abs()
                    })
                    .sum();
                reference += lam(j) * s / n as f64;
            }
        }
        let e2 = layout.embed(HyperPart::E2.index(), UnitCoord::HALF);
        reference += 4.0 / 27.0 * (f.eval(e2) - f2.eval(e2)).abs();
        let exact = d_pair_l1(&w, t, t2);
        assert!((exact - reference).abs() < 1e-3, "{exact} vs {reference}");
    }

    #[test]
    fn inner_integrals_match_kernel_sums() {
        // G_x(z) against a direct midpoint integral of W(z,·) f_x over the
        // coordinate parts and E₂, for z in several parts.
        let w = g();
        let layout = w.layout().unwrap();
        let t = UnitCoord::nearest(0.6180339887);
        let x = Anchor::new(&coord_signature(&w, t, w.truncation()).unwrap().coords);
        let fx = VertexFunction::new(&w, layout.embed(HyperPart::D.index(), t));
        let direct = |z: UnitCoord| {
            let mut total = 0.0;
            for part in [HyperPart::B1, HyperPart::B2, HyperPart::B4, HyperPart::B5] {
                for j in 1..=16u32 {
                    let n = 1u64 << 11;
                    let cells = 1u64 << (PRECISION - j);
                    let s: f64 = (0..n)
                        .map(|i| {
                            let y = layout.embed(part.index(), HypercubeGraphon::level_point(j, i * (cells / n) + cells / n / 2));
                            w.eval(z, y) * fx.eval(y)
                        })
                        .sum();
                    total += lam(j) * s / n as f64;
                }
            }
            let e2 = layout.embed(HyperPart::E2.index(), UnitCoord::HALF);
            total + 4.0 / 27.0 * w.eval(z, e2) * fx.eval(e2)
        };
        let at = |p: HyperPart, s: UnitCoord| layout.embed(p.index(), s);
        let cases: Vec<(f64, f64)> = vec![
            (x.a1(2), direct(at(HyperPart::A1, HypercubeGraphon::level_point(2, 77 << 40)))),
            (x.a2(1), direct(at(HyperPart::A2, HypercubeGraphon::level_point(1, 5 << 40)))),
            (x.b3(2), direct(at(HyperPart::B3, HypercubeGraphon::level_point(2, 5 << 40)))),
            (x.f(), direct(at(HyperPart::F, UnitCoord::HALF))),
            (x.e1(), direct(at(HyperPart::E1, UnitCoord::HALF))),
            (x.c(0.8), direct(at(HyperPart::C, UnitCoord::nearest(0.8)))),
            (x.b2(2, 0.3), direct(at(HyperPart::B2, HypercubeGraphon::level_point(2, (0.3 * (1u64 << 51) as f64) as u64)))),
            (x.b4(1, 0.2), direct(at(HyperPart::B4, HypercubeGraphon::level_point(1, (0.2 * (1u64 << 52) as f64) as u64)))),
            (x.b5(2, 0.4), direct(at(HyperPart::B5, HypercubeGraphon::level_point(2, (0.4 * (1u64 << 51) as f64) as u64)))),
        ];
        // The reference grid resolves only the leading bits of each B₁
        // coordinate on deep levels, which limits its accuracy.
        for (i, (closed, grid)) in cases.iter().enumerate() {
            assert!((closed - grid).abs() < 5e-4, "case {i}: {closed} vs {grid}");
        }
        // z ∈ B₁ and z ∈ D through their signatures.
        let zb = at(HyperPart::B1, HypercubeGraphon::level_point(2, 123_456_789_012 << 10));
        let sb = layout.locate(zb).1;
        let cb: Vec<f64> = (1..=2).map(|i| w.level_relative_degree(HyperPart::B1, sb, HyperPart::B2, i).unwrap()).collect();
        let (closed, grid) = (x.b1(&cb), direct(zb));
        assert!((closed - grid).abs() < 5e-4, "B1: {closed} vs {grid}");
        // Signatures are taken at the located position: embedding rounds.
        let zd = at(HyperPart::D, UnitCoord::nearest(0.3141));
        let bd = Anchor::new(&coord_signature(&w, layout.locate(zd).1, w.truncation()).unwrap().coords);
        let (closed, grid) = (x.d(&bd), direct(zd));
        assert!((closed - grid).abs() < 5e-4, "D: {closed} vs {grid}");
    }

    /// `∫ W(z,y) (f(y) − f2(y)) dy` over the coordinate parts and `E₂`,
    /// level by level on midpoint grids.
    fn direct_inner(w: &HypercubeGraphon, f: &VertexFunction, f2: &VertexFunction, z: UnitCoord, levels: u32, n: u64) -> f64 {
        let layout = w.layout().unwrap();
        let mut total = 0.0;
        for part in [HyperPart::B1, HyperPart::B2, HyperPart::B4, HyperPart::B5] {
            for j in 1..=levels {
                let cells = 1u64 << (PRECISION - j);
                let s: f64 = (0..n)
                    .map(|i| {
                        let y = layout.embed(part.index(), HypercubeGraphon::level_point(j, i * (cells / n) + cells / n / 2));
                        w.eval(z, y) * (f.eval(y) - f2.eval(y))
                    })
                    .sum();
                total += lam(j) * s / n as f64;
            }
        }
        let e2 = layout.embed(HyperPart::E2.index(), UnitCoord::HALF);
        total + 4.0 / 27.0 * w.eval(z, e2) * (f.eval(e2) - f2.eval(e2))
    }

    #[test]
    fn stratified_similarity_agrees_with_direct_integration() {
        let w = g();
        let layout = w.layout().unwrap();
        let (t, t2) = (UnitCoord::nearest(0.2718), UnitCoord::nearest(0.8451));
        let s = sandwich_check(&w, t, t2, 20_000, 3);
        let f = VertexFunction::new(&w, layout.embed(HyperPart::D.index(), t));
        let f2 = VertexFunction::new(&w, layout.embed(HyperPart::D.index(), t2));
        let mc = monte_carlo(400, 3, |rng| direct_inner(&w, &f, &f2, uniform_coord(rng), 12, 1 << 10).abs());
        assert!((s.dw - mc.value).abs() < 0.1 * mc.value + 4.0 * mc.stderr, "{} vs {} ± {}", s.dw, mc.value, mc.stderr);
    }

    #[test]
    fn inner_integrals_at_random_points_of_every_part() {
        let w = g();
        let layout = w.layout().unwrap();
        let (t, t2) = (UnitCoord::nearest(0.2718), UnitCoord::nearest(0.8451));
        let l = w.truncation();
        let x = Anchor::new(&coord_signature(&w, t, l).unwrap().coords);
        let y = Anchor::new(&coord_signature(&w, t2, l).unwrap().coords);
        let f = VertexFunction::new(&w, layout.embed(HyperPart::D.index(), t));
        let f2 = VertexFunction::new(&w, layout.embed(HyperPart::D.index(), t2));
        let mut rng = crate::estimate::stream_rng(1, 0);
        for part in HyperPart::ALL {
            for _ in 0..3 {
                let z = layout.embed(part.index(), uniform_coord(&mut rng));
                let s = layout.locate(z).1;
                let closed = x.inner(&w, part, s) - y.inner(&w, part, s);
                let direct = direct_inner(&w, &f, &f2, z, 12, 1 << 10);
                assert!((closed - direct).abs() < 5e-4, "{part}: {closed} vs {direct}");
            }
        }
    }

    #[test]
    fn epsilon_classes_examples() {
        let c = Constant::new(0.4).unwrap();
        assert_eq!(epsilon_classes(&c, 0.01, 50, 1).unwrap(), 1);
        let two = step_graphon(&[vec![0.9, 0.1], vec![0.1, 0.9]], &[0.5, 0.5]).unwrap();
        assert_eq!(epsilon_classes(&two, 0.1, 50, 1).unwrap(), 2);
        assert!(epsilon_classes(&c, 0.0, 5, 1).is_err());
    }
}
