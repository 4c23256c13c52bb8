//! The forced-property battery for the hypercubical graphon: every
//! structural consequence of the forcing constraints that can be checked
//! numerically, as a named list of [`CheckReport`]s.
//!
//! Items that evaluate the kernel pick up a [`Mutation`], so a corrupted
//! kernel pair makes the battery fail. Closed-form degree profiles always
//! describe the intended graphon and serve as the reference values.
//!
//! [`Mutation`]: crate::hypercube::Mutation

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::density::{density, density_quadrature, GraphSpec, PairState};
use crate::dsl::{CheckReport, EvalOptions, Target};
use crate::estimate::{derive_seed, monte_carlo, stream_rng, uniform_coord, DensityEstimate};
use crate::geometry::{level_of, UnitCoord, ONE, PRECISION};
use crate::graphon::Graphon;
use crate::hypercube::{is_zero_block, table_degree, HyperPart, HypercubeGraphon, E1_DEGREE, E2_DEGREE};
use crate::recipe::{CountTable, Recipe};

use HyperPart::*;

/// Tolerance for deterministic items.
pub const EXACT_TOL: f64 = 1e-9;
/// Tolerance for the degree table, which sums a truncated series.
pub const TABLE_TOL: f64 = 1e-6;
/// Points per kernel audit.
const AUDIT_POINTS: u64 = 4096;
/// Points per zero-block check.
const ZERO_POINTS: u64 = 10_000;
/// Vertices per pointwise degree check.
const VERTICES: u64 = 100;
/// Deepest level drawn by level-stratified sampling.
const SAMPLED_LEVELS: u32 = 12;
/// Levels summed when a degree is measured by probing one point per level.
const PROBE_DEPTH: u32 = 50;
/// Lattice bits of the recipe used by the exact projection count.
pub const PROJECTION_BITS: u32 = 16;

type Item<'a> = (String, Box<dyn Fn() -> CheckReport + Send + Sync + 'a>);

/// Runs every item whose name passes `select`, concurrently, and returns
/// the reports sorted by name.
pub fn verify_selected(g: &HypercubeGraphon, opts: &EvalOptions, select: &dyn Fn(&str) -> bool) -> Vec<CheckReport> {
    let items: Vec<Item> = items(g, opts).into_iter().filter(|(name, _)| select(name)).collect();
    let mut reports: Vec<CheckReport> = items.par_iter().map(|(_, run)| run()).collect();
    reports.sort_by(|a, b| a.name.cmp(&b.name));
    reports
}

/// The full battery.
pub fn verify_forced_properties(g: &HypercubeGraphon, opts: &EvalOptions) -> Vec<CheckReport> {
    verify_selected(g, opts, &|_| true)
}

/// Names of all battery items, sorted.
pub fn item_names(g: &HypercubeGraphon) -> Vec<String> {
    let mut names: Vec<String> = items(g, &EvalOptions::default()).into_iter().map(|(n, _)| n).collect();
    names.sort();
    names
}

fn items<'a>(g: &'a HypercubeGraphon, opts: &'a EvalOptions) -> Vec<Item<'a>> {
    let mut out: Vec<Item<'a>> = Vec::new();
    let mut add = |name: String, f: Box<dyn Fn() -> CheckReport + Send + Sync + 'a>| out.push((name, f));
    let o = *opts;

    for (i, &x) in HyperPart::ALL.iter().enumerate() {
        for &y in &HyperPart::ALL[i..] {
            let name = format!("{x}x{y}");
            if is_zero_block(x, y) {
                let n = format!("zero-block/{name}");
                add(n.clone(), Box::new(move || zero_block(g, &n, x, y, o.seed)));
            } else {
                let n = format!("audit/{name}");
                add(n.clone(), Box::new(move || audit(g, &n, x, y, o.seed)));
            }
        }
    }
    for y in [A0, A1, A2, A3, B1, B2, B3, B4, B5, C] {
        let n = format!("table3/F-{y}");
        add(n.clone(), Box::new(move || table3(g, &n, y)));
    }
    for part in HyperPart::ALL {
        if table_degree(part).is_some() {
            let n = format!("table1/{part}");
            add(n.clone(), Box::new(move || table1(g, &n, part)));
        }
        let n = format!("degree/{part}");
        add(n.clone(), Box::new(move || mean_degree(g, &n, part, &o)));
    }
    for part in [A0, A1, A2, A3, B1, B2, B3, B4, B5, C, D] {
        let n = format!("degree-unification/{part}");
        add(n.clone(), Box::new(move || unification(g, &n, part, o.seed)));
    }
    add("e1-bound".into(), Box::new(move || e_bound(g, "e1-bound", E1, &o)));
    add("e2-bound".into(), Box::new(move || e_bound(g, "e2-bound", E2, &o)));
    add("e1-pinned".into(), Box::new(move || e_pinned(g, "e1-pinned", E1, &o)));
    add("e2-pinned".into(), Box::new(move || e_pinned(g, "e2-pinned", E2, &o)));
    add("checker/K2".into(), Box::new(move || checker(g, "checker/K2", CheckerGraph::Edge, &o)));
    add("checker/K3".into(), Box::new(move || checker(g, "checker/K3", CheckerGraph::Triangle, &o)));
    add("checker/induced-P3".into(), Box::new(move || checker(g, "checker/induced-P3", CheckerGraph::Cherry, &o)));
    add("shift".into(), Box::new(move || shift(g, o.seed)));
    add("first-level".into(), Box::new(move || first_level(g, o.seed)));
    add("level-alignment".into(), Box::new(move || level_alignment(g, o.seed)));
    add("stairs".into(), Box::new(move || stairs(g, o.seed)));
    add("coordinate-01".into(), Box::new(move || coordinate_01(g, o.seed)));
    add("initial-coordinate".into(), Box::new(move || initial_coordinate(g, o.seed)));
    for k in 1..=3u32 {
        for k0 in 1..=k {
            for (rho, label) in [(0.25, "1/4"), (0.75, "3/4")] {
                let n = format!("distribution/B2-level{k0}-in-B1-level{k}/rho={label}");
                add(n.clone(), Box::new(move || distribution_b1(g, &n, k, k0, rho, &o)));
            }
        }
        for (rho, label) in [(0.25, "1/4"), (0.75, "3/4")] {
            let n = format!("distribution/B2-level{k}-in-D/rho={label}");
            add(n.clone(), Box::new(move || distribution_d(g, &n, k, rho, &o)));
        }
        let n = format!("infinite/level{k}");
        add(n.clone(), Box::new(move || infinite(g, &n, k, &o)));
        let n = format!("projection/arity{k}");
        add(n.clone(), Box::new(move || projection(g, &n, k)));
    }
    for i in 1..=5u32 {
        let n = format!("product/level{i}");
        add(n.clone(), Box::new(move || product(g, &n, i, o.seed)));
    }
    add("cauchy-schwarz/E1".into(), Box::new(move || cauchy_schwarz(g, "cauchy-schwarz/E1", E1, o.seed)));
    add("cauchy-schwarz/E2".into(), Box::new(move || cauchy_schwarz(g, "cauchy-schwarz/E2", E2, o.seed)));
    out
}

fn rng_for(seed: u64, name: &str) -> ChaCha8Rng {
    stream_rng(derive_seed(seed, name), 0)
}

/// Deterministic check: `value` must be within `tol` of `target`.
fn exact(name: &str, value: f64, target: f64, tol: f64, points: u64) -> CheckReport {
    let est = DensityEstimate { samples: points, ..DensityEstimate::exact(value) };
    CheckReport::new(name, est, Target::Exact { value: target }, tol)
}

/// Count of failed points; the item passes when there are none.
fn violations(name: &str, bad: u64, points: u64, first: Option<String>) -> CheckReport {
    let r = exact(name, bad as f64, 0.0, 0.0, points);
    match first {
        Some(d) => r.with_detail(format!("first violation: {d}")),
        None => r,
    }
}

/// A scaled point of `part`. Levelled parts are drawn uniformly half of
/// the time and from a uniformly chosen level otherwise, so that deeper
/// levels are represented.
fn sample_point(rng: &mut ChaCha8Rng, part: HyperPart) -> UnitCoord {
    if part.has_levels() && rng.gen::<bool>() {
        let k = rng.gen_range(1..=SAMPLED_LEVELS);
        level_sample(rng, k)
    } else {
        uniform_coord(rng)
    }
}

fn level_sample(rng: &mut ChaCha8Rng, k: u32) -> UnitCoord {
    HypercubeGraphon::level_point(k, rng.gen_range(0..1u64 << (PRECISION - k)))
}

fn level(t: UnitCoord) -> u32 {
    level_of(t).map(|p| p.level()).unwrap_or(0)
}

fn rel(t: UnitCoord) -> f64 {
    level_of(t).map(|p| p.rel().to_f64()).unwrap_or(0.0)
}

fn indicator(b: bool) -> f64 {
    f64::from(u8::from(b))
}

/// `deg_{B₂,j}` of a vertex of `B₁` or `D` from the closed form.
fn coordinate(g: &HypercubeGraphon, x: HyperPart, t: UnitCoord, j: u32) -> f64 {
    g.level_relative_degree(x, t, B2, j).unwrap_or(0.0)
}

/// The value a forcing argument pins `W` to at `(s ∈ x, t ∈ y)`, expressed
/// through degrees and levels. `None` for pairs no rule covers.
fn forced_value(g: &HypercubeGraphon, x: HyperPart, s: UnitCoord, y: HyperPart, t: UnitCoord) -> Option<f64> {
    let deg_c = |p: HyperPart, u: UnitCoord| g.profile(p, u).relative_to(C);
    Some(match (x, y) {
        (A0, A1) => g.profile(A1, t).relative_to(A0),
        (A1, A1 | A2 | B1 | B2 | B3 | B4 | B5) | (A2, A3 | B2) => indicator(level(s) == level(t)),
        (A1, A3) => indicator(level(s) == level(t) + 1),
        (C, _) if y != D && !matches!(y, E1 | E2 | F) => indicator(deg_c(C, s) + deg_c(y, t) >= 1.0),
        (B1, B1) => {
            let (ks, kt) = (level(s), level(t));
            let m = ks.min(kt);
            let below = (1..=m).all(|i| coordinate(g, B1, s, i) <= coordinate(g, B1, t, i));
            let above = (1..=m).all(|i| coordinate(g, B1, s, i) >= coordinate(g, B1, t, i));
            indicator(match ks.cmp(&kt) {
                std::cmp::Ordering::Less => below,
                std::cmp::Ordering::Greater => above,
                std::cmp::Ordering::Equal => below || above,
            })
        }
        (B1, B2 | B3 | B4 | B5) => {
            let (ks, kt) = (level(s), level(t));
            if kt > ks {
                0.0
            } else {
                let threshold = g.level_relative_degree(B1, s, y, kt)?;
                if y == B3 {
                    threshold
                } else {
                    indicator(rel(t) <= threshold)
                }
            }
        }
        (D, B1) => {
            let kt = level(t);
            indicator((1..=kt).all(|i| coordinate(g, B1, t, i) <= coordinate(g, D, s, i)))
        }
        (D, B2 | B4 | B5) => indicator(rel(t) <= g.level_relative_degree(D, s, y, level(t))?),
        (E1, _) => {
            let p = g.profile(y, t);
            1.0 - HyperPart::DEGREE_UNIFIED.iter().map(|&q| p.relative_to(q)).sum::<f64>() / 11.0
        }
        (E2, D) => {
            let p = g.profile(D, t);
            1.0 - HyperPart::COORDINATE_PARTS.iter().map(|&q| p.relative_to(q)).sum::<f64>() / 4.0
        }
        (F, _) => g.profile(F, s).relative_to(y),
        _ => return None,
    })
}

fn audit(g: &HypercubeGraphon, name: &str, x: HyperPart, y: HyperPart, seed: u64) -> CheckReport {
    let mut rng = rng_for(seed, name);
    // Orient the pair the way the rules are written.
    let probe = |a: HyperPart, b: HyperPart| forced_value(g, a, UnitCoord::HALF, b, UnitCoord::HALF).is_some();
    let (x, y) = if probe(x, y) { (x, y) } else { (y, x) };
    let mut bad = 0;
    let mut first = None;
    for _ in 0..AUDIT_POINTS {
        let s = sample_point(&mut rng, x);
        let t = sample_point(&mut rng, y);
        let w = g.eval_parts(x.index(), s, y.index(), t);
        let want = forced_value(g, x, s, y, t);
        let ok = want.is_some_and(|v| (w - v).abs() <= 1e-12);
        if !ok {
            bad += 1;
            if first.is_none() {
                first = Some(format!("W({x}:{s}, {y}:{t}) = {w}, forced {want:?}"));
            }
        }
    }
    violations(name, bad, AUDIT_POINTS, first)
}

fn zero_block(g: &HypercubeGraphon, name: &str, x: HyperPart, y: HyperPart, seed: u64) -> CheckReport {
    let mut rng = rng_for(seed, name);
    let mut max: f64 = 0.0;
    for _ in 0..ZERO_POINTS {
        let s = sample_point(&mut rng, x);
        let t = sample_point(&mut rng, y);
        max = max.max(g.eval_parts(x.index(), s, y.index(), t).abs());
    }
    exact(name, max, 0.0, 0.0, ZERO_POINTS)
}

fn table3(g: &HypercubeGraphon, name: &str, y: HyperPart) -> CheckReport {
    let h = GraphSpec::complete(2).with_labels(vec![F.name().into(), y.name().into()]).expect("two labels");
    let target = g.profile(F, UnitCoord::HALF).relative_to(y);
    match density_quadrature(&h, g) {
        Ok(est) => CheckReport::new(name, est, Target::Exact { value: target }, 0.0),
        Err(e) => exact(name, f64::NAN, target, 0.0, 0).with_detail(e.to_string()),
    }
}

/// Degrees of ten probe vertices against the degree table.
fn table1(g: &HypercubeGraphon, name: &str, part: HyperPart) -> CheckReport {
    let target = table_degree(part).expect("tabulated part");
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let t = UnitCoord::nearest((i as f64 + 0.5) / 10.0);
        worst = worst.max((g.degree(part, t) - target).abs());
    }
    exact(name, target + worst, target, TABLE_TOL, 10)
}

/// Mean degree of `part` measured from kernel evaluations.
fn degree_estimate(g: &HypercubeGraphon, label: &str, part: HyperPart, opts: &EvalOptions) -> DensityEstimate {
    let layout = g.layout().expect("partitioned");
    let (lo, hi) = layout.lattice_range(part.index());
    monte_carlo(opts.budget, derive_seed(opts.seed, label), |rng| {
        let x = UnitCoord::from_numerator(rng.gen_range(lo..hi)).expect("inside");
        g.eval(x, uniform_coord(rng))
    })
}

fn mean_target(part: HyperPart) -> f64 {
    match part {
        E1 => E1_DEGREE,
        E2 => E2_DEGREE,
        p => table_degree(p).expect("tabulated part"),
    }
}

fn mean_degree(g: &HypercubeGraphon, name: &str, part: HyperPart, opts: &EvalOptions) -> CheckReport {
    let est = degree_estimate(g, name, part, opts);
    CheckReport::new(name, est, Target::Exact { value: mean_target(part) }, opts.tol)
}

/// `deg_{[0,1]∖(E₂∪F)} = 1/2` off `D`, and `deg_{B₁∪B₂∪B₄∪B₅∪E₂} = 1/2` on `D`.
fn unification(g: &HypercubeGraphon, name: &str, part: HyperPart, seed: u64) -> CheckReport {
    let mut rng = rng_for(seed, name);
    let region: Vec<HyperPart> = if part == D {
        vec![B1, B2, B4, B5, E2]
    } else {
        HyperPart::ALL.iter().copied().filter(|p| !matches!(p, E2 | F)).collect()
    };
    let measure: f64 = region.iter().map(|p| p.measure()).sum();
    let mut worst: f64 = 0.0;
    for _ in 0..VERTICES {
        let t = sample_point(&mut rng, part);
        let p = g.profile(part, t);
        let deg = region.iter().map(|&q| q.measure() * p.relative_to(q)).sum::<f64>() / measure;
        worst = worst.max((deg - 0.5).abs());
    }
    exact(name, 0.5 + worst, 0.5, EXACT_TOL, VERTICES)
}

fn e_bound(g: &HypercubeGraphon, name: &str, part: HyperPart, opts: &EvalOptions) -> CheckReport {
    let label = if part == E1 { "e1" } else { "e2" };
    let est = degree_estimate(g, label, part, opts);
    let target = if part == E1 { Target::Interval { lo: 5.0 / 27.0, hi: 10.0 / 27.0 } } else { Target::Interval { lo: 0.0, hi: 1.0 / 27.0 } };
    CheckReport::new(name, est, target, 0.0)
}

fn e_pinned(g: &HypercubeGraphon, name: &str, part: HyperPart, opts: &EvalOptions) -> CheckReport {
    let label = if part == E1 { "e1" } else { "e2" };
    let est = degree_estimate(g, label, part, opts);
    CheckReport::new(name, est, Target::Exact { value: mean_target(part) }, opts.tol)
}

#[derive(Clone, Copy)]
enum CheckerGraph {
    Edge,
    Triangle,
    Cherry,
}

/// Decorated densities inside `A₁`: the checker is a disjoint union of
/// cliques of relative measures `2^{-k}`.
fn checker(g: &HypercubeGraphon, name: &str, which: CheckerGraph, opts: &EvalOptions) -> CheckReport {
    let (h, target) = match which {
        CheckerGraph::Edge => (GraphSpec::complete(2), 1.0 / 3.0),
        CheckerGraph::Triangle => (GraphSpec::complete(3), 1.0 / 7.0),
        CheckerGraph::Cherry => {
            let mut h = GraphSpec::complete(3);
            h.set(0, 2, PairState::NonEdge).expect("in range");
            (h, 0.0)
        }
    };
    let n = h.order();
    let h = h.with_labels(vec![A1.name().to_string(); n]).expect("labels");
    match density(&h, g, opts.budget, derive_seed(opts.seed, name)) {
        Ok(est) => CheckReport::new(name, est, Target::Exact { value: target }, opts.tol),
        Err(e) => exact(name, f64::NAN, target, 0.0, 0).with_detail(e.to_string()),
    }
}

/// Relative degree of `s ∈ x` into `y`, measured from one kernel value per
/// level of `y`. Exact for kernels constant on each level of `y`.
fn probed_degree(g: &HypercubeGraphon, x: HyperPart, s: UnitCoord, y: HyperPart) -> f64 {
    (1..=PROBE_DEPTH)
        .map(|j| {
            let mid = 1u64 << (PRECISION - j - 1);
            (-(j as f64)).exp2() * g.eval_parts(x.index(), s, y.index(), HypercubeGraphon::level_point(j, mid))
        })
        .sum()
}

/// Relative degree of `s ∈ x` into level `j` of `y`, from probes at a few
/// positions of that level. The kernels checked here are constant there.
fn level_probe(g: &HypercubeGraphon, x: HyperPart, s: UnitCoord, y: HyperPart, j: u32) -> f64 {
    let cells = 1u64 << (PRECISION - j);
    let probes = [0, cells / 3, cells / 2, cells - 1];
    probes.iter().map(|&m| g.eval_parts(x.index(), s, y.index(), HypercubeGraphon::level_point(j, m))).sum::<f64>() / 4.0
}

/// `deg_{A₃} a = 2 deg_{A₁} a` for vertices of `A₁` below the first level.
fn shift(g: &HypercubeGraphon, seed: u64) -> CheckReport {
    let name = "shift";
    let mut rng = rng_for(seed, name);
    let (mut bad, mut first) = (0, None);
    for _ in 0..VERTICES {
        let k = rng.gen_range(2..=SAMPLED_LEVELS);
        let a = level_sample(&mut rng, k);
        let (d3, d1) = (probed_degree(g, A1, a, A3), probed_degree(g, A1, a, A1));
        if (d3 - 2.0 * d1).abs() > EXACT_TOL || d1 == 0.0 {
            bad += 1;
            first.get_or_insert(format!("level {k}: deg_A3 = {d3}, deg_A1 = {d1}"));
        }
    }
    violations(name, bad, VERTICES, first)
}

/// `deg_{A₀} a = 0` or `deg_{A₁} a = 1/2` for every `a ∈ A₁`, with
/// `deg_{A₀} a ∈ {0, 1}`.
fn first_level(g: &HypercubeGraphon, seed: u64) -> CheckReport {
    let name = "first-level";
    let mut rng = rng_for(seed, name);
    let (mut bad, mut first) = (0, None);
    for _ in 0..VERTICES {
        let a = sample_point(&mut rng, A1);
        let d0 = (0..8).map(|i| g.eval_parts(A0.index(), UnitCoord::nearest((i as f64 + 0.5) / 8.0), A1.index(), a)).sum::<f64>() / 8.0;
        let d1 = probed_degree(g, A1, a, A1);
        let ok = (d0 == 0.0 || (d1 - 0.5).abs() <= EXACT_TOL) && (d0 == 0.0 || d0 == 1.0);
        if !ok {
            bad += 1;
            first.get_or_insert(format!("{a}: deg_A0 = {d0}, deg_A1 = {d1}"));
        }
    }
    violations(name, bad, VERTICES, first)
}

/// Levels read off degrees into `A₁` (or `A₂` for `A₃`) are the levels of
/// the layout, and level `k` has relative degree `2^{-k}`.
fn level_alignment(g: &HypercubeGraphon, seed: u64) -> CheckReport {
    let name = "level-alignment";
    let mut rng = rng_for(seed, name);
    let (mut bad, mut first) = (0, None);
    let parts = [A1, A2, A3, B1, B2, B3, B4, B5];
    for &p in &parts {
        for _ in 0..VERTICES {
            let t = sample_point(&mut rng, p);
            let reference = if p == A3 { A2 } else { A1 };
            let d = probed_degree(g, p, t, reference);
            let want = (-(level(t) as f64)).exp2();
            if (d - want).abs() > EXACT_TOL {
                bad += 1;
                first.get_or_insert(format!("{p}:{t}: deg_{reference} = {d}, level {}", level(t)));
            }
        }
    }
    violations(name, bad, VERTICES * parts.len() as u64, first)
}

/// `b ∈ B₁` at level `k` has relative degree 1 in `B₃,m` for `m ≤ k` and 0
/// beyond.
fn stairs(g: &HypercubeGraphon, seed: u64) -> CheckReport {
    let name = "stairs";
    let mut rng = rng_for(seed, name);
    let (mut bad, mut first) = (0, None);
    for _ in 0..VERTICES {
        let b = sample_point(&mut rng, B1);
        let k = level(b);
        for m in 1..=k + 3 {
            let d = level_probe(g, B1, b, B3, m);
            if d != indicator(m <= k) {
                bad += 1;
                first.get_or_insert(format!("level {k}: deg_B3,{m} = {d}"));
            }
        }
    }
    violations(name, bad, VERTICES, first)
}

/// Blocks forced to take only the values 0 and 1.
const BINARY_BLOCKS: [(HyperPart, HyperPart); 12] =
    [(A0, A1), (A1, A1), (A1, A3), (A2, A3), (C, B1), (C, C), (B1, B1), (B1, B2), (B1, B4), (B1, B5), (D, B1), (D, B2)];

fn coordinate_01(g: &HypercubeGraphon, seed: u64) -> CheckReport {
    let name = "coordinate-01";
    let mut rng = rng_for(seed, name);
    let (mut bad, mut first) = (0, None);
    let blocks = BINARY_BLOCKS.iter().chain(&[(D, B4), (D, B5)]).collect::<Vec<_>>();
    for &&(x, y) in &blocks {
        for _ in 0..AUDIT_POINTS / 4 {
            let (s, t) = (sample_point(&mut rng, x), sample_point(&mut rng, y));
            let w = g.eval_parts(x.index(), s, y.index(), t);
            if w != 0.0 && w != 1.0 {
                bad += 1;
                first.get_or_insert(format!("W({x}:{s}, {y}:{t}) = {w}"));
            }
        }
    }
    violations(name, bad, AUDIT_POINTS / 4 * blocks.len() as u64, first)
}

/// Measure of `{s ∈ C : W(s, b) = 1}` for `b ∈ B₁`, by bisection on the
/// upward threshold in `s`.
fn bisect_c_degree(g: &HypercubeGraphon, b: UnitCoord) -> f64 {
    let on = |m: u64| g.eval_parts(C.index(), UnitCoord::from_numerator(m).expect("below one"), B1.index(), b) > 0.5;
    if on(0) {
        return 1.0;
    }
    if !on(ONE - 1) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0u64, ONE - 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if on(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    1.0 - hi as f64 / ONE as f64
}

/// `deg_{B₂,₁} b = (deg_C b - (1 - 2 deg_{A₁} b)) / deg_{A₁} b`.
fn initial_coordinate(g: &HypercubeGraphon, seed: u64) -> CheckReport {
    let name = "initial-coordinate";
    let mut rng = rng_for(seed, name);
    let mut worst: f64 = 0.0;
    for _ in 0..VERTICES {
        let b = sample_point(&mut rng, B1);
        let first = g.bisect_level_degree(B1, b, B2, 1);
        let deg_a1 = probed_degree(g, B1, b, A1);
        let deg_c = bisect_c_degree(g, b);
        let forced = (deg_c - (1.0 - 2.0 * deg_a1)) / deg_a1;
        worst = worst.max((first - forced).abs());
    }
    exact(name, worst, 0.0, EXACT_TOL, VERTICES)
}

/// The B₂ vertex at level `k` and relative position `rho`.
fn b2_vertex(k: u32, rho: f64) -> UnitCoord {
    HypercubeGraphon::level_point(k, (rho * (1u64 << (PRECISION - k)) as f64) as u64)
}

/// `deg_{B₁,k} b = 1 - ρ` for `b ∈ B₂,k₀` at relative position `ρ`.
fn distribution_b1(g: &HypercubeGraphon, name: &str, k: u32, k0: u32, rho: f64, opts: &EvalOptions) -> CheckReport {
    let b = b2_vertex(k0, rho);
    let est = monte_carlo(opts.budget, derive_seed(opts.seed, name), |rng| {
        g.eval_parts(B1.index(), level_sample(rng, k), B2.index(), b)
    });
    CheckReport::new(name, est, Target::Exact { value: 1.0 - rho }, opts.tol)
}

/// `deg_D b = 1 - ρ` for `b ∈ B₂,k` at relative position `ρ`.
fn distribution_d(g: &HypercubeGraphon, name: &str, k: u32, rho: f64, opts: &EvalOptions) -> CheckReport {
    let b = b2_vertex(k, rho);
    let est = monte_carlo(opts.budget, derive_seed(opts.seed, name), |rng| {
        g.eval_parts(D.index(), uniform_coord(rng), B2.index(), b)
    });
    CheckReport::new(name, est, Target::Exact { value: 1.0 - rho }, opts.tol)
}

/// `deg_{B₁,k} d = deg_{B₄,k} d` for a random `d ∈ D`, the left side by
/// Monte Carlo and the right by bisection.
fn infinite(g: &HypercubeGraphon, name: &str, k: u32, opts: &EvalOptions) -> CheckReport {
    let mut rng = rng_for(opts.seed, name);
    let d = uniform_coord(&mut rng);
    let target = g.bisect_level_degree(D, d, B4, k);
    let est = monte_carlo(opts.budget, derive_seed(opts.seed, name), |rng| {
        g.eval_parts(D.index(), d, B1.index(), level_sample(rng, k))
    });
    CheckReport::new(name, est, Target::Exact { value: target }, opts.tol).with_detail(format!("d = {d}"))
}

/// `λ{b ∈ B₁,k : coordinates ≤ a} = λ(B₁,k) ∏ a_i`, counted exactly on a
/// `2^16` lattice for every dyadic threshold vector.
fn projection(g: &HypercubeGraphon, name: &str, k: u32) -> CheckReport {
    let recipe = Recipe::new(PROJECTION_BITS, g.recipe().depth());
    let (bad, checked) = projection_violations(&recipe, k);
    violations(name, bad, checked, None)
}

/// Number of dyadic threshold vectors on which the exact counter and the
/// product disagree, and how many were checked.
pub fn projection_violations(recipe: &Recipe, k: u32) -> (u64, u64) {
    let table = CountTable::build(recipe, k).expect("small lattice");
    let bits = table.lane_bits().to_vec();
    let total = 1u64 << recipe.precision();
    let mut idx = vec![0u64; k as usize];
    let (mut bad, mut checked) = (0, 0);
    loop {
        let thresholds: Vec<UnitCoord> =
            idx.iter().zip(&bits).map(|(&i, &m)| UnitCoord::from_ratio(i, m).expect("at most one")).collect();
        let count = table.count_below(&thresholds).expect("lane aligned");
        // ∏ (i_j / 2^{m_j}) · 2^p, exact in integers since Σ m_j = p.
        let product: u64 = idx.iter().product::<u64>() << (recipe.precision() - bits.iter().sum::<u32>());
        checked += 1;
        if count != product || product > total {
            bad += 1;
        }
        let mut axis = 0;
        loop {
            if axis == idx.len() {
                return (bad, checked);
            }
            idx[axis] += 1;
            if idx[axis] <= 1u64 << bits[axis] {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// `deg_{B₄,i} = ∏_{j≤i} deg_{B₂,j}` and `deg_{B₅,i} = ∏_{j≤i} (1 - deg_{B₂,j})`
/// for vertices of `B₁` at levels at least `i` and for vertices of `D`, all
/// measured by bisection on the kernel.
fn product(g: &HypercubeGraphon, name: &str, i: u32, seed: u64) -> CheckReport {
    let mut rng = rng_for(seed, name);
    let mut worst: f64 = 0.0;
    for n in 0..2 * VERTICES {
        let (x, v) = if n < VERTICES {
            let k = rng.gen_range(i..=SAMPLED_LEVELS.max(i));
            (B1, level_sample(&mut rng, k))
        } else {
            (D, uniform_coord(&mut rng))
        };
        let coords: Vec<f64> = (1..=i).map(|j| g.bisect_level_degree(x, v, B2, j)).collect();
        let p: f64 = coords.iter().product();
        let q: f64 = coords.iter().map(|c| 1.0 - c).product();
        worst = worst.max((g.bisect_level_degree(x, v, B4, i) - p).abs());
        worst = worst.max((g.bisect_level_degree(x, v, B5, i) - q).abs());
    }
    exact(name, worst, 0.0, EXACT_TOL, 2 * VERTICES)
}

/// `W(x, ·)` is constant on `E₁` (on `E₂` for `x ∈ D`), the equality case of
/// the Cauchy–Schwarz step.
fn cauchy_schwarz(g: &HypercubeGraphon, name: &str, e: HyperPart, seed: u64) -> CheckReport {
    let mut rng = rng_for(seed, name);
    let sources: &[HyperPart] = if e == E1 { &[A0, A1, A2, A3, B1, B2, B3, B4, B5, C] } else { &[D] };
    let mut worst: f64 = 0.0;
    for _ in 0..VERTICES {
        let x = sources[rng.gen_range(0..sources.len())];
        let s = sample_point(&mut rng, x);
        let values: Vec<f64> = (0..32).map(|_| g.eval_parts(x.index(), s, e.index(), uniform_coord(&mut rng))).collect();
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        worst = worst.max(hi - lo);
    }
    exact(name, worst, 0.0, 0.0, VERTICES * 32)
}
