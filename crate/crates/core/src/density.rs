//! Induced subgraph densities: plain, rooted and decorated, by Monte Carlo
//! and by product quadrature.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{monte_carlo, uniform_coord, DensityEstimate};
use crate::geometry::{UnitCoord, ONE};
use crate::graphon::Graphon;
use crate::hypercube::{HyperPart, HypercubeGraphon};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DensityError {
    #[error("vertex {0} is out of range")]
    VertexOutOfRange(usize),
    #[error("root {0} is listed twice")]
    DuplicateRoot(usize),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("the root tuple induces the root graph with probability 0")]
    RootsIncompatible,
    #[error("expected {expected} root coordinates, got {got}")]
    RootCount { expected: usize, got: usize },
    #[error("graph has {0} vertices; at most {MAX_AUT_VERTICES} are supported")]
    TooLarge(usize),
    #[error("graph has {0} free pairs; at most {MAX_FREE_PAIRS} are supported")]
    TooManyFree(usize),
    #[error("quadrature supports at most {MAX_QUADRATURE_VERTICES} integrated vertices, got {0}")]
    QuadratureTooLarge(usize),
    #[error("this operation needs {0}")]
    Unsupported(&'static str),
}

pub const MAX_AUT_VERTICES: usize = 8;
pub const MAX_FREE_PAIRS: usize = 12;
pub const MAX_QUADRATURE_VERTICES: usize = 4;
pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairState {
    Edge,
    NonEdge,
    Free,
}

/// A small graph with ordered roots, per-pair states and optional part
/// labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphSpec {
    n: usize,
    roots: Vec<usize>,
    /// Upper triangle in row-major order.
    states: Vec<PairState>,
    labels: Option<Vec<String>>,
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl GraphSpec {
    /// `n` vertices with every pair in state `default`.
    pub fn new(n: usize, default: PairState) -> Self {
        GraphSpec { n, roots: Vec::new(), states: vec![default; n * n.saturating_sub(1) / 2], labels: None }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, DensityError> {
        let mut g = GraphSpec::new(n, PairState::NonEdge);
        for &(i, j) in edges {
            g.set(i, j, PairState::Edge)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        GraphSpec::new(n, PairState::Edge)
    }

    pub fn set(&mut self, i: usize, j: usize, state: PairState) -> Result<(), DensityError> {
        for v in [i, j] {
            if v >= self.n {
                return Err(DensityError::VertexOutOfRange(v));
            }
        }
        if i == j {
            return Err(DensityError::VertexOutOfRange(i));
        }
        let idx = pair_index(self.n, i, j);
        self.states[idx] = state;
        Ok(())
    }

    pub fn with_roots(mut self, roots: Vec<usize>) -> Result<Self, DensityError> {
        for (k, &r) in roots.iter().enumerate() {
            if r >= self.n {
                return Err(DensityError::VertexOutOfRange(r));
            }
            if roots[..k].contains(&r) {
                return Err(DensityError::DuplicateRoot(r));
            }
        }
        self.roots = roots;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, DensityError> {
        if labels.len() != self.n {
            return Err(DensityError::LayoutMismatch(format!("{} labels for {} vertices", labels.len(), self.n)));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn is_decorated(&self) -> bool {
        self.labels.is_some()
    }

    pub fn state(&self, i: usize, j: usize) -> PairState {
        self.states[pair_index(self.n, i, j)]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, PairState)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j, self.state(i, j))))
    }

    fn is_root(&self, v: usize) -> bool {
        self.roots.contains(&v)
    }

    /// All graphs obtained by fixing every free pair to edge or non-edge.
    /// Free pairs between two roots stay free: they constrain the root
    /// tuple, not the sample.
    pub fn resolutions(&self) -> Result<Vec<GraphSpec>, DensityError> {
        let free: Vec<usize> = self
            .pairs()
            .filter(|&(i, j, s)| s == PairState::Free && !(self.is_root(i) && self.is_root(j)))
            .map(|(i, j, _)| pair_index(self.n, i, j))
            .collect();
        if free.len() > MAX_FREE_PAIRS {
            return Err(DensityError::TooManyFree(free.len()));
        }
        Ok((0..1u32 << free.len())
            .map(|mask| {
                let mut g = self.clone();
                for (b, &idx) in free.iter().enumerate() {
                    g.states[idx] = if mask >> b & 1 == 1 { PairState::Edge } else { PairState::NonEdge };
                }
                g
            })
            .collect())
    }
}

/// Automorphisms preserving pair states and labels and fixing every root.
pub fn aut_count(h: &GraphSpec) -> Result<u64, DensityError> {
    let n = h.n;
    if n > MAX_AUT_VERTICES {
        return Err(DensityError::TooLarge(n));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut count = 0;
    permute(&mut perm, 0, &mut |p| {
        let ok = h.roots.iter().all(|&r| p[r] == r)
            && h.labels.as_ref().is_none_or(|l| (0..n).all(|v| l[p[v]] == l[v]))
            && h.pairs().all(|(i, j, s)| h.state(p[i], p[j]) == s);
        count += u64::from(ok);
    });
    Ok(count)
}

fn permute(perm: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// A point fed to the graphon: a global coordinate, or a scaled position
/// inside a part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub part: Option<usize>,
    pub coord: UnitCoord,
}

impl Vertex {
    pub fn global(coord: UnitCoord) -> Self {
        Vertex { part: None, coord }
    }
}

fn eval_vertices(w: &dyn Graphon, a: Vertex, b: Vertex) -> f64 {
    match (a.part, b.part) {
        (Some(i), Some(j)) => w.eval_parts(i, a.coord, j, b.coord),
        _ => w.eval(a.coord, b.coord),
    }
}

/// One resolution of the free pairs with its counting coefficient.
#[derive(Debug, Clone)]
struct Term {
    coef: f64,
    edges: Vec<usize>,
    nonedges: Vec<usize>,
}

/// The integrand `Σ_r coef_r ∏ W ∏ (1-W)` over the pairs not inside the root
/// set, with vertex parts resolved.
#[derive(Debug, Clone)]
struct Prepared {
    n: usize,
    roots: Vec<usize>,
    free_vertices: Vec<usize>,
    parts: Option<Vec<usize>>,
    pairs: Vec<(usize, usize)>,
    terms: Vec<Term>,
}

impl Prepared {
    fn new(h: &GraphSpec, w: &dyn Graphon) -> Result<Self, DensityError> {
        let parts = match &h.labels {
            None => None,
            Some(labels) => {
                let layout = w
                    .layout()
                    .ok_or_else(|| DensityError::LayoutMismatch(format!("{} is not partitioned", w.name())))?;
                let idx = labels
                    .iter()
                    .map(|l| layout.index_of(l).map_err(|_| DensityError::LayoutMismatch(format!("unknown part {l:?}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(idx)
            }
        };
        let free_vertices: Vec<usize> = (0..h.n).filter(|&v| !h.is_root(v)).collect();
        // Exchangeable groups among non-roots: one per label.
        let mut groups: Vec<usize> = Vec::new();
        let mut seen: Vec<Option<&String>> = Vec::new();
        for &v in &free_vertices {
            let key = h.labels.as_ref().map(|l| &l[v]);
            match seen.iter().position(|s| *s == key) {
                Some(g) => groups[g] += 1,
                None => {
                    seen.push(key);
                    groups.push(1);
                }
            }
        }
        let orderings: f64 = groups.iter().map(|&m| factorial(m)).product();
        let pairs: Vec<(usize, usize)> =
            h.pairs().filter(|&(i, j, _)| !(h.is_root(i) && h.is_root(j))).map(|(i, j, _)| (i, j)).collect();
        let mut terms = Vec::new();
        for r in h.resolutions()? {
            let aut = aut_count(&r)?;
            let mut t = Term { coef: orderings / aut as f64, edges: Vec::new(), nonedges: Vec::new() };
            for (k, &(i, j)) in pairs.iter().enumerate() {
                match r.state(i, j) {
                    PairState::Edge => t.edges.push(k),
                    PairState::NonEdge => t.nonedges.push(k),
                    PairState::Free => {}
                }
            }
            terms.push(t);
        }
        Ok(Prepared { n: h.n, roots: h.roots.clone(), free_vertices, parts, pairs, terms })
    }

    fn value(&self, w: &dyn Graphon, verts: &[Vertex], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend(self.pairs.iter().map(|&(i, j)| eval_vertices(w, verts[i], verts[j])));
        self.terms
            .iter()
            .map(|t| {
                let mut p = t.coef;
                for &k in &t.edges {
                    p *= scratch[k];
                }
                for &k in &t.nonedges {
                    p *= 1.0 - scratch[k];
                }
                p
            })
            .sum()
    }

    /// Places the roots, checking each against its label.
    fn root_vertices(&self, w: &dyn Graphon, coords: &[UnitCoord]) -> Result<Vec<Vertex>, DensityError> {
        if coords.len() != self.roots.len() {
            return Err(DensityError::RootCount { expected: self.roots.len(), got: coords.len() });
        }
        let mut verts = vec![Vertex::global(UnitCoord::ZERO); self.n];
        for (&r, &x) in self.roots.iter().zip(coords) {
            verts[r] = match &self.parts {
                None => Vertex::global(x),
                Some(parts) => {
                    let (p, t) = w.layout().expect("checked").locate(x);
                    if p != parts[r] {
                        return Err(DensityError::RootsIncompatible);
                    }
                    Vertex { part: Some(p), coord: t }
                }
            };
        }
        Ok(verts)
    }

    fn sample_free<R: Rng + ?Sized>(&self, rng: &mut R, verts: &mut [Vertex]) {
        for &v in &self.free_vertices {
            let coord = uniform_coord(rng);
            verts[v] = Vertex { part: self.parts.as_ref().map(|p| p[v]), coord };
        }
    }
}

/// `c(x_1..x_m)`: probability that the root tuple induces the root graph.
/// Free pairs among the roots contribute a factor 1.
pub fn root_weight(h: &GraphSpec, w: &dyn Graphon, coords: &[UnitCoord]) -> Result<f64, DensityError> {
    let prep = Prepared::new(h, w)?;
    let verts = match prep.root_vertices(w, coords) {
        Ok(v) => v,
        Err(DensityError::RootsIncompatible) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let mut c = 1.0;
    for (a, &i) in h.roots.iter().enumerate() {
        for &j in &h.roots[a + 1..] {
            let v = eval_vertices(w, verts[i], verts[j]);
            c *= match h.state(i, j) {
                PairState::Edge => v,
                PairState::NonEdge => 1.0 - v,
                PairState::Free => 1.0,
            };
        }
    }
    Ok(c)
}

/// Root coordinates together with their weight `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootAssignment {
    pub coords: Vec<UnitCoord>,
    pub weight: f64,
}

impl RootAssignment {
    pub fn new(h: &GraphSpec, w: &dyn Graphon, coords: Vec<UnitCoord>) -> Result<Self, DensityError> {
        let weight = root_weight(h, w, &coords)?;
        Ok(RootAssignment { coords, weight })
    }
}

/// Draws a root tuple from `μ` by rejection against `c`. Decorated roots are
/// drawn inside their parts. `None` after `max_tries` rejections.
pub fn sample_roots<R: Rng + ?Sized>(
    h: &GraphSpec,
    w: &dyn Graphon,
    rng: &mut R,
    max_tries: usize,
) -> Result<Option<RootAssignment>, DensityError> {
    let prep = Prepared::new(h, w)?;
    for _ in 0..max_tries {
        let coords: Vec<UnitCoord> = h
            .roots
            .iter()
            .map(|&r| match &prep.parts {
                None => uniform_coord(rng),
                Some(parts) => {
                    let (lo, hi) = w.layout().expect("checked").lattice_range(parts[r]);
                    UnitCoord::from_numerator(rng.gen_range(lo..hi)).expect("inside [0,1]")
                }
            })
            .collect();
        let c = root_weight(h, w, &coords)?;
        if c > 0.0 && rng.gen::<f64>() < c {
            return Ok(Some(RootAssignment { coords, weight: c }));
        }
    }
    Ok(None)
}

fn check_unrooted(h: &GraphSpec) -> Result<(), DensityError> {
    if h.roots.is_empty() {
        Ok(())
    } else {
        Err(DensityError::Unsupported("an unrooted graph; use rooted_density"))
    }
}

fn mc_with_roots(prep: &Prepared, w: &dyn Graphon, base: Vec<Vertex>, budget: u64, seed: u64) -> DensityEstimate {
    monte_carlo(budget, seed, |rng| {
        let mut verts = base.clone();
        let mut scratch = Vec::with_capacity(prep.pairs.len());
        prep.sample_free(rng, &mut verts);
        prep.value(w, &verts, &mut scratch)
    })
}

/// `d(H,W)` by Monte Carlo. Decorated graphs are sampled inside their parts.
pub fn density(h: &GraphSpec, w: &dyn Graphon, budget: u64, seed: u64) -> Result<DensityEstimate, DensityError> {
    check_unrooted(h)?;
    let prep = Prepared::new(h, w)?;
    let base = vec![Vertex::global(UnitCoord::ZERO); h.n];
    Ok(mc_with_roots(&prep, w, base, budget, seed))
}

/// Density of a decorated graph: vertices are sampled within their labels.
pub fn decorated_density(h: &GraphSpec, w: &dyn Graphon, budget: u64, seed: u64) -> Result<DensityEstimate, DensityError> {
    if !h.is_decorated() {
        return Err(DensityError::Unsupported("a decorated graph"));
    }
    density(h, w, budget, seed)
}

/// Conditional density of the non-roots given the root tuple.
pub fn rooted_density(
    h: &GraphSpec,
    w: &dyn Graphon,
    roots: &RootAssignment,
    budget: u64,
    seed: u64,
) -> Result<DensityEstimate, DensityError> {
    let prep = Prepared::new(h, w)?;
    if root_weight(h, w, &roots.coords)? <= 0.0 {
        return Err(DensityError::RootsIncompatible);
    }
    let base = prep.root_vertices(w, &roots.coords)?;
    Ok(mc_with_roots(&prep, w, base, budget, seed))
}

/// Quadrature nodes for one integrated vertex: `(weight, coordinate)`.
type Nodes = Vec<(f64, UnitCoord)>;

fn uniform_nodes(count: u64) -> Nodes {
    // Midpoints of a dyadic grid are lattice points.
    let step = ONE / count;
    (0..count).map(|i| (1.0 / count as f64, UnitCoord::from_numerator(i * step + step / 2).unwrap())).collect()
}

/// Grid size per axis for a product rule over `k` vertices.
fn grid_size(k: usize) -> u64 {
    match k {
        0..=2 => 1 << 10,
        3 => 1 << 8,
        _ => 1 << 5,
    }
}

fn quadrature_with_roots(prep: &Prepared, w: &dyn Graphon, base: Vec<Vertex>) -> Result<DensityEstimate, DensityError> {
    let k = prep.free_vertices.len();
    if k > MAX_QUADRATURE_VERTICES {
        return Err(DensityError::QuadratureTooLarge(k));
    }
    let grid = grid_size(k);
    let nodes: Vec<Nodes> = prep
        .free_vertices
        .iter()
        .map(|&v| match &prep.parts {
            None => match w.cells() {
                Some(cells) => cells.into_iter().map(|c| (c.width, c.probe)).collect(),
                None => uniform_nodes(grid),
            },
            Some(parts) => {
                // A vertex whose blocks against every other vertex are
                // constant needs a single node.
                let p = parts[v];
                let constant = (0..prep.n).filter(|&u| u != v).all(|u| w.block_constant(p, parts[u]).is_some());
                if constant {
                    vec![(1.0, UnitCoord::HALF)]
                } else {
                    uniform_nodes(grid)
                }
            }
        })
        .collect();
    let total_nodes: u64 = nodes.iter().map(|n| n.len() as u64).product();
    if k == 0 {
        let mut scratch = Vec::new();
        return Ok(DensityEstimate::quadrature(prep.value(w, &base, &mut scratch), 1));
    }
    let first = &nodes[0];
    // Collected before summing so the rounding does not depend on how the
    // work was split.
    let partial: Vec<f64> = first
        .par_iter()
        .map(|&(w0, c0)| {
            let mut verts = base.clone();
            let mut scratch = Vec::with_capacity(prep.pairs.len());
            let v0 = prep.free_vertices[0];
            verts[v0] = Vertex { part: prep.parts.as_ref().map(|p| p[v0]), coord: c0 };
            let mut idx = vec![0usize; k];
            let mut sum = 0.0;
            loop {
                let mut weight = w0;
                for d in 1..k {
                    let (wd, cd) = nodes[d][idx[d]];
                    let v = prep.free_vertices[d];
                    verts[v] = Vertex { part: prep.parts.as_ref().map(|p| p[v]), coord: cd };
                    weight *= wd;
                }
                sum += weight * prep.value(w, &verts, &mut scratch);
                // Odometer over the remaining axes.
                let mut d = k;
                loop {
                    if d <= 1 {
                        return sum;
                    }
                    d -= 1;
                    idx[d] += 1;
                    if idx[d] < nodes[d].len() {
                        break;
                    }
                    idx[d] = 0;
                }
            }
        })
        .collect();
    let value: f64 = partial.iter().sum();
    Ok(DensityEstimate::quadrature(value, total_nodes))
}

/// `d(H,W)` by product quadrature over at most four vertices. Uses the
/// graphon's cell partition when it has one, otherwise a uniform grid.
pub fn density_quadrature(h: &GraphSpec, w: &dyn Graphon) -> Result<DensityEstimate, DensityError> {
    check_unrooted(h)?;
    let prep = Prepared::new(h, w)?;
    quadrature_with_roots(&prep, w, vec![Vertex::global(UnitCoord::ZERO); h.n])
}

pub fn rooted_density_quadrature(h: &GraphSpec, w: &dyn Graphon, roots: &RootAssignment) -> Result<DensityEstimate, DensityError> {
    let prep = Prepared::new(h, w)?;
    if root_weight(h, w, &roots.coords)? <= 0.0 {
        return Err(DensityError::RootsIncompatible);
    }
    let base = prep.root_vertices(w, &roots.coords)?;
    quadrature_with_roots(&prep, w, base)
}

/// Whether product quadrature is exact for `h` on `w`: every integrated
/// vertex either ranges over a cell partition of the graphon or only meets
/// constant blocks.
pub fn quadrature_is_exact(h: &GraphSpec, w: &dyn Graphon) -> bool {
    let free: Vec<usize> = (0..h.n).filter(|&v| !h.is_root(v)).collect();
    if free.len() > MAX_QUADRATURE_VERTICES {
        return false;
    }
    match &h.labels {
        None => w.cells().is_some_and(|c| (c.len() as u64).saturating_pow(free.len() as u32) <= 1 << 22),
        Some(labels) => {
            let Some(layout) = w.layout() else { return false };
            let Ok(parts) = labels.iter().map(|l| layout.index_of(l)).collect::<Result<Vec<_>, _>>() else {
                return false;
            };
            free.iter().all(|&v| (0..h.n).filter(|&u| u != v).all(|u| w.block_constant(parts[v], parts[u]).is_some()))
        }
    }
}

/// Exact quadrature when available, Monte Carlo otherwise.
pub fn density_auto(h: &GraphSpec, w: &dyn Graphon, budget: u64, seed: u64) -> Result<DensityEstimate, DensityError> {
    if quadrature_is_exact(h, w) {
        density_quadrature(h, w)
    } else {
        density(h, w, budget, seed)
    }
}

pub fn rooted_density_auto(
    h: &GraphSpec,
    w: &dyn Graphon,
    roots: &RootAssignment,
    budget: u64,
    seed: u64,
) -> Result<DensityEstimate, DensityError> {
    if quadrature_is_exact(h, w) {
        rooted_density_quadrature(h, w, roots)
    } else {
        rooted_density(h, w, roots, budget, seed)
    }
}

/// `deg_Y x = (1/λ(Y)) ∫_Y W(x,·)`. Uses closed forms for the hypercubical
/// graphon and constant blocks, and a 2^16-point midpoint rule otherwise.
pub fn relative_degree(w: &dyn Graphon, x: UnitCoord, part: usize) -> Result<f64, DensityError> {
    let layout = w.layout().ok_or(DensityError::LayoutMismatch("relative degrees need a partitioned graphon".into()))?;
    if part >= layout.len() {
        return Err(DensityError::LayoutMismatch(format!("no part {part}")));
    }
    let (xp, s) = layout.locate(x);
    if let Some(h) = w.as_any().downcast_ref::<HypercubeGraphon>() {
        if h.mutation().is_none() {
            return Ok(h.profile(HyperPart::from_index(xp), s).relative_to(HyperPart::from_index(part)));
        }
    }
    if let Some(c) = w.block_constant(xp, part) {
        return Ok(c);
    }
    let nodes = uniform_nodes(1 << 16);
    Ok(nodes.iter().map(|&(wt, t)| wt * w.eval_parts(xp, s, part, t)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::{diagonal_checker, half_graphon, Constant};
    use crate::recipe::Recipe;

    fn path3() -> GraphSpec {
        GraphSpec::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn automorphism_examples() {
        assert_eq!(aut_count(&GraphSpec::complete(3)).unwrap(), 6);
        assert_eq!(aut_count(&GraphSpec::complete(2).with_roots(vec![0]).unwrap()).unwrap(), 1);
        assert_eq!(aut_count(&path3()).unwrap(), 2);
        assert_eq!(aut_count(&GraphSpec::complete(9)), Err(DensityError::TooLarge(9)));
    }

    #[test]
    fn plain_density_examples() {
        let p = Constant::new(0.3).unwrap();
        let k2 = GraphSpec::complete(2);
        let k3 = GraphSpec::complete(3);
        assert!((density_quadrature(&k2, &p).unwrap().value - 0.3).abs() < 1e-15);
        assert!((density_quadrature(&k3, &p).unwrap().value - 0.027).abs() < 1e-15);
        assert!((density(&k2, &p, 1000, 1).unwrap().value - 0.3).abs() < 1e-15);
        let kappa = density_quadrature(&k2, &diagonal_checker()).unwrap();
        assert!((kappa.value - 1.0 / 3.0).abs() < 1e-9);
        let half = density(&k2, &half_graphon(), 200_000, 2).unwrap();
        assert!(half.agrees_with(0.5, 4.0, 0.0));
        let p3 = density_quadrature(&path3(), &p).unwrap();
        assert!((p3.value - 3.0 * 0.09 * 0.7).abs() < 1e-12);
    }

    #[test]
    fn three_vertex_densities_sum_to_one() {
        let w = half_graphon();
        let graphs = [
            GraphSpec::new(3, PairState::NonEdge),
            GraphSpec::from_edges(3, &[(0, 1)]).unwrap(),
            path3(),
            GraphSpec::complete(3),
        ];
        let total: f64 = graphs.iter().map(|g| density_quadrature(g, &w).unwrap().value).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_pairs_add() {
        let w = half_graphon();
        let mut free = GraphSpec::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        free.set(0, 2, PairState::Free).unwrap();
        let sum = density_quadrature(&path3(), &w).unwrap().value + density_quadrature(&GraphSpec::complete(3), &w).unwrap().value;
        assert!((density_quadrature(&free, &w).unwrap().value - sum).abs() < 1e-12);
    }

    #[test]
    fn rooted_examples() {
        let edge = GraphSpec::complete(2).with_roots(vec![0]).unwrap();
        let p = Constant::new(0.4).unwrap();
        let r = RootAssignment::new(&edge, &p, vec![UnitCoord::nearest(0.2)]).unwrap();
        assert!((rooted_density_quadrature(&edge, &p, &r).unwrap().value - 0.4).abs() < 1e-15);
        let x = UnitCoord::from_f64(0.375).unwrap();
        let r = RootAssignment::new(&edge, &half_graphon(), vec![x]).unwrap();
        let q = rooted_density_quadrature(&edge, &half_graphon(), &r).unwrap();
        assert!((q.value - 0.375).abs() < 1e-3);
        let mc = rooted_density(&edge, &half_graphon(), &r, 100_000, 3).unwrap();
        assert!(mc.agrees_with(0.375, 4.0, 0.0));
        let cherry = GraphSpec::from_edges(3, &[(0, 2), (1, 2)]).unwrap().with_roots(vec![0, 1]).unwrap();
        let mut cherry_free = cherry.clone();
        cherry_free.set(0, 1, PairState::Free).unwrap();
        let r = RootAssignment::new(&cherry_free, &p, vec![UnitCoord::HALF, UnitCoord::ZERO]).unwrap();
        assert!((rooted_density_quadrature(&cherry_free, &p, &r).unwrap().value - 0.16).abs() < 1e-15);
        let touching = GraphSpec::complete(3).with_roots(vec![0, 1]).unwrap();
        let zero = Constant::new(0.0).unwrap();
        let r = RootAssignment::new(&touching, &zero, vec![UnitCoord::HALF, UnitCoord::ZERO]).unwrap();
        assert_eq!(rooted_density(&touching, &zero, &r, 10, 1), Err(DensityError::RootsIncompatible));
    }

    #[test]
    fn decorated_examples() {
        let w = HypercubeGraphon::build(Recipe::default(), 30).unwrap();
        let fc = GraphSpec::complete(2).with_labels(vec!["F".into(), "C".into()]).unwrap();
        let d = density_quadrature(&fc, &w).unwrap();
        assert_eq!((d.value, d.stderr), (0.9, 0.0));
        let a2d = GraphSpec::complete(2).with_labels(vec!["A2".into(), "D".into()]).unwrap();
        assert_eq!(density(&a2d, &w, 10_000, 4).unwrap().value, 0.0);
        let bad = GraphSpec::complete(2).with_labels(vec!["Q".into(), "C".into()]).unwrap();
        assert!(matches!(density(&bad, &w, 10, 1), Err(DensityError::LayoutMismatch(_))));
        assert!(matches!(density(&fc, &half_graphon(), 10, 1), Err(DensityError::LayoutMismatch(_))));
    }

    #[test]
    fn relative_degree_examples() {
        let w = HypercubeGraphon::build(Recipe::default(), 30).unwrap();
        let layout = w.layout().unwrap();
        let at = |p: HyperPart, t: f64| layout.embed(p.index(), UnitCoord::nearest(t));
        assert_eq!(relative_degree(&w, at(HyperPart::F, 0.3), HyperPart::B5.index()).unwrap(), 0.8);
        assert_eq!(relative_degree(&w, at(HyperPart::A0, 0.3), HyperPart::A1.index()).unwrap(), 0.5);
        assert_eq!(relative_degree(&w, at(HyperPart::D, 0.3), HyperPart::E1.index()).unwrap(), 0.0);
    }
}
