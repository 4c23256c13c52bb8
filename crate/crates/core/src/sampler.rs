//! `W`-random graphs and the densities of small graphs inside them.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{density_auto, DensityError, GraphSpec, PairState};
use crate::estimate::{derive_seed, monte_carlo, stream_rng, uniform_coord, DensityEstimate, EstimateKind};
use crate::geometry::UnitCoord;
use crate::graphon::Graphon;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("a sampled graph needs at least one vertex")]
    Empty,
    #[error("empirical densities take unrooted graphs")]
    Rooted,
    #[error("empirical densities take graphs without part labels")]
    Decorated,
    #[error("edge list line {line}: {msg}")]
    EdgeList { line: usize, msg: String },
    #[error(transparent)]
    Density(#[from] DensityError),
}

/// Exact enumeration is used while `C(|G|, |H|)` stays below this.
pub const EXACT_SUBSETS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledGraph {
    n: usize,
    words: usize,
    /// Row-major bit matrix, `words` u64 per row.
    bits: Vec<u64>,
    latents: Vec<UnitCoord>,
    seed: u64,
}

impl SampledGraph {
    fn empty(n: usize, latents: Vec<UnitCoord>, seed: u64) -> Self {
        let words = n.div_ceil(64);
        SampledGraph { n, words, bits: vec![0; n * words], latents, seed }
    }

    fn set_edge(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn latents(&self) -> &[UnitCoord] {
        &self.latents
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    pub fn edge_count(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum::<u64>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).filter(move |&j| self.has_edge(i, j)).map(move |j| (i, j)))
    }

    /// A graph with no latents, for tests and loaded edge lists.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, SamplerError> {
        if n == 0 {
            return Err(SamplerError::Empty);
        }
        let mut g = SampledGraph::empty(n, Vec::new(), 0);
        for (k, &(i, j)) in edges.iter().enumerate() {
            if i >= n || j >= n || i == j {
                return Err(SamplerError::EdgeList { line: k + 1, msg: format!("bad pair {i} {j}") });
            }
            g.set_edge(i, j);
        }
        Ok(g)
    }

    /// `# n seed` header, then one `i j` line per edge with `i < j`.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# {} {}\n", self.n, self.seed);
        for (i, j) in self.edges() {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self, SamplerError> {
        let err = |line: usize, msg: &str| SamplerError::EdgeList { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| err(1, "missing header"))?;
        let mut head = header.strip_prefix('#').ok_or_else(|| err(1, "header must start with '#'"))?.split_whitespace();
        let n: usize = head.next().and_then(|v| v.parse().ok()).ok_or_else(|| err(1, "missing order"))?;
        let seed: u64 = head.next().and_then(|v| v.parse().ok()).unwrap_or(0);
        let mut edges = Vec::new();
        for (k, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) => edges.push((i, j)),
                _ => return Err(err(k + 1, "expected two vertex indices")),
            }
        }
        let mut g = SampledGraph::from_edges(n, &edges).map_err(|e| match e {
            SamplerError::EdgeList { line, msg } => SamplerError::EdgeList { line: line + 1, msg },
            other => other,
        })?;
        g.seed = seed;
        Ok(g)
    }
}

/// Uniform in [0,1) from the top 53 bits of a word.
fn unit(word: u64) -> f64 {
    (word >> 11) as f64 * f64::EPSILON / 2.0
}

/// Draws a `W`-random graph of order `n`.
///
/// Latents come from one stream; pair `(i, j)` with `i < j` reads word `j`
/// of stream `i` of a second generator, so every pair's coin is fixed by
/// the seed alone and rows can be filled in any order.
pub fn sample(w: &dyn Graphon, n: usize, seed: u64) -> Result<SampledGraph, SamplerError> {
    if n == 0 {
        return Err(SamplerError::Empty);
    }
    let mut rng = stream_rng(derive_seed(seed, "latents"), 0);
    let latents: Vec<UnitCoord> = (0..n).map(|_| uniform_coord(&mut rng)).collect();
    let edge_seed = derive_seed(seed, "edges");
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut coins = stream_rng(edge_seed, i as u64);
            // Each u64 occupies two 32-bit words of the ChaCha block stream.
            coins.set_word_pos(2 * (i as u128 + 1));
            (i + 1..n).filter(|&j| unit(coins.next_u64()) < w.eval(latents[i], latents[j])).collect()
        })
        .collect();
    let mut g = SampledGraph::empty(n, latents, seed);
    for (i, row) in rows.iter().enumerate() {
        for &j in row {
            g.set_edge(i, j);
        }
    }
    Ok(g)
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

fn pair_ok(h: &GraphSpec, g: &SampledGraph, a: usize, b: usize, u: usize, v: usize) -> bool {
    match h.state(a, b) {
        PairState::Free => true,
        PairState::Edge => g.has_edge(u, v),
        PairState::NonEdge => !g.has_edge(u, v),
    }
}

/// Number of bijections from `V(H)` onto `subset` respecting every pair.
fn count_bijections(h: &GraphSpec, g: &SampledGraph, subset: &[usize]) -> u64 {
    fn go(h: &GraphSpec, g: &SampledGraph, subset: &[usize], image: &mut Vec<usize>, used: &mut [bool]) -> u64 {
        let a = image.len();
        if a == subset.len() {
            return 1;
        }
        let mut total = 0;
        for (slot, &u) in subset.iter().enumerate() {
            if used[slot] || !image.iter().enumerate().all(|(b, &v)| pair_ok(h, g, b, a, v, u)) {
                continue;
            }
            used[slot] = true;
            image.push(u);
            total += go(h, g, subset, image, used);
            image.pop();
            used[slot] = false;
        }
        total
    }
    go(h, g, subset, &mut Vec::with_capacity(subset.len()), &mut vec![false; subset.len()])
}

/// Probability that a uniformly random `|H|`-subset of `V(G)` induces `H`
/// up to isomorphism, the empirical counterpart of `d(H, W)`; 0 when
/// `|H| > |G|`.
pub fn empirical_density(g: &SampledGraph, h: &GraphSpec, budget: u64, seed: u64) -> Result<DensityEstimate, SamplerError> {
    if !h.roots().is_empty() {
        return Err(SamplerError::Rooted);
    }
    if h.is_decorated() {
        return Err(SamplerError::Decorated);
    }
    let (n, k) = (g.order(), h.order());
    if k > n {
        return Ok(DensityEstimate::exact(0.0));
    }
    if k == 0 {
        return Ok(DensityEstimate::exact(1.0));
    }
    match binomial(n as u64, k as u64) {
        Some(subsets) if subsets <= EXACT_SUBSETS => {
            let mut count: u64 = 0;
            let mut subset: Vec<usize> = (0..k).collect();
            loop {
                count += u64::from(count_bijections(h, g, &subset) > 0);
                // Next k-subset in lexicographic order.
                let Some(pos) = (0..k).rev().find(|&p| subset[p] < n - k + p) else { break };
                subset[pos] += 1;
                for q in pos + 1..k {
                    subset[q] = subset[q - 1] + 1;
                }
            }
            Ok(DensityEstimate::exact(count as f64 / subsets as f64))
        }
        _ => Ok(monte_carlo(budget, seed, |rng| {
            // Rejection sampling of a k-subset; k is small next to n.
            let mut chosen: Vec<usize> = Vec::with_capacity(k);
            while chosen.len() < k {
                let u = rng.gen_range(0..n);
                if !chosen.contains(&u) {
                    chosen.push(u);
                }
            }
            f64::from(u8::from(count_bijections(h, g, &chosen) > 0))
        })),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub graph: String,
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub sd: f64,
    pub target: f64,
    pub target_stderr: f64,
    pub target_method: EstimateKind,
    /// `|mean − target|`.
    pub gap: f64,
}

/// For each graph and order, the mean and standard deviation of
/// `d(H, G_n)` over `trials` independent `W`-random graphs, next to `d(H, W)`.
pub fn convergence_report(
    w: &dyn Graphon,
    graphs: &[(String, GraphSpec)],
    schedule: &[usize],
    trials: usize,
    budget: u64,
    seed: u64,
) -> Result<Vec<ConvergenceRow>, SamplerError> {
    let mut rows = Vec::new();
    for (name, h) in graphs {
        let target = density_auto(h, w, budget, derive_seed(seed, name))?;
        for &n in schedule {
            let mut values = Vec::with_capacity(trials);
            for t in 0..trials {
                let trial_seed = derive_seed(seed, &format!("{name}/{n}/{t}"));
                let g = sample(w, n, trial_seed)?;
                values.push(empirical_density(&g, h, budget, trial_seed)?.value);
            }
            let mean = values.iter().sum::<f64>() / trials.max(1) as f64;
            let sd = if trials > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt()
            } else {
                0.0
            };
            rows.push(ConvergenceRow {
                graph: name.clone(),
                n,
                trials,
                mean,
                sd,
                target: target.value,
                target_stderr: target.stderr,
                target_method: target.kind,
                gap: (mean - target.value).abs(),
            });
        }
    }
    Ok(rows)
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("graph,n,trials,mean,sd,target,target_stderr,gap\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}\n",
            r.graph, r.n, r.trials, r.mean, r.sd, r.target, r.target_stderr, r.gap
        ));
    }
    out
}
