use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Constraint, ConstraintFile, DslError, Expr};
use crate::density::{density_auto, rooted_density_auto, sample_roots, GraphSpec, RootAssignment, DEFAULT_BUDGET};
use crate::estimate::{derive_seed, stream_rng, DensityEstimate, EstimateKind};
use crate::graphon::Graphon;

/// Root tuples drawn per rooted constraint.
pub const PANEL_SIZE: usize = 64;

/// Rejection attempts per panel tuple before giving up.
const ROOT_TRIES: usize = 100_000;

/// Residuals closer than this many standard errors to the tolerance are
/// reported as inconclusive.
const INCONCLUSIVE_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub budget: u64,
    pub seed: u64,
    pub tol: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { budget: DEFAULT_BUDGET, seed: 0, tol: 5e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Target {
    Exact { value: f64 },
    Interval { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

/// Outcome of one checked quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    pub target: Target,
    /// Distance from `value` to the target.
    pub delta: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub method: EstimateKind,
    pub samples: u64,
    /// Both sides of a constraint, when the report comes from one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, est: DensityEstimate, target: Target, tol: f64) -> Self {
        CheckReport {
            name: name.into(),
            value: est.value,
            stderr: est.stderr,
            target,
            delta: distance(est.value, target),
            tol,
            verdict: verdict_for(est.value, est.stderr, target, tol),
            method: est.kind,
            samples: est.samples,
            lhs: None,
            rhs: None,
            detail: None,
        }
    }

    pub fn with_sides(mut self, lhs: f64, rhs: f64) -> Self {
        self.lhs = Some(lhs);
        self.rhs = Some(rhs);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

fn distance(value: f64, target: Target) -> f64 {
    match target {
        Target::Exact { value: t } => (value - t).abs(),
        Target::Interval { lo, hi } => (lo - value).max(value - hi).max(0.0),
    }
}

/// Pass when `value` is within `tol` of the target, fail when it is
/// clearly outside, inconclusive when the gap to the tolerance is inside
/// four standard errors.
pub fn verdict_for(value: f64, stderr: f64, target: Target, tol: f64) -> Verdict {
    if !value.is_finite() {
        return Verdict::Fail;
    }
    let excess = match target {
        Target::Exact { value: t } => (value - t).abs() - tol,
        Target::Interval { lo, hi } => (lo - value).max(value - hi) - tol,
    };
    if stderr > 0.0 && excess.abs() <= INCONCLUSIVE_SIGMAS * stderr {
        Verdict::Inconclusive
    } else if excess <= 0.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Value with variance, combined to first order assuming independence.
#[derive(Debug, Clone, Copy)]
struct Approx {
    value: f64,
    var: f64,
}

fn combine(e: &Expr, atom: &mut dyn FnMut(&str) -> Result<DensityEstimate, DslError>) -> Result<Approx, DslError> {
    Ok(match e {
        Expr::Const(v) => Approx { value: *v, var: 0.0 },
        Expr::Graph(g) => {
            let est = atom(g)?;
            Approx { value: est.value, var: est.stderr * est.stderr }
        }
        Expr::Neg(a) => {
            let a = combine(a, atom)?;
            Approx { value: -a.value, var: a.var }
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let (a2, b2) = (combine(a, atom)?, combine(b, atom)?);
            let value = if matches!(e, Expr::Add(..)) { a2.value + b2.value } else { a2.value - b2.value };
            Approx { value, var: a2.var + b2.var }
        }
        Expr::Mul(a, b) => {
            let (a, b) = (combine(a, atom)?, combine(b, atom)?);
            Approx { value: a.value * b.value, var: b.value * b.value * a.var + a.value * a.value * b.var }
        }
        Expr::Div(a, b) => {
            let (a, b) = (combine(a, atom)?, combine(b, atom)?);
            let q = a.value / b.value;
            Approx { value: q, var: (a.var + q * q * b.var) / (b.value * b.value) }
        }
    })
}

fn lookup(file: &ConstraintFile, c: &Constraint, name: &str) -> Result<GraphSpec, DslError> {
    file.graph(name).ok_or_else(|| DslError::UnknownGraph { pos: c.pos, name: name.to_string() })
}

fn estimate_kind(samples: u64, exact: bool) -> (EstimateKind, u64) {
    (if exact { EstimateKind::Quadrature } else { EstimateKind::MonteCarlo }, samples)
}

/// Checks `c` on `w`. Unrooted constraints compare `lhs - rhs` with 0 in
/// expectation. Rooted ones are cross-multiplied and must hold at every
/// tuple of a panel of [`PANEL_SIZE`] roots drawn from the root measure;
/// the report carries the worst tuple and the panel mean in `detail`.
pub fn eval_constraint(file: &ConstraintFile, c: &Constraint, w: &dyn Graphon, opts: &EvalOptions) -> Result<CheckReport, DslError> {
    let target = Target::Exact { value: 0.0 };
    let names = c.lhs.graphs().into_iter().chain(c.rhs.graphs()).map(str::to_string).collect::<Vec<_>>();
    let mut specs = HashMap::new();
    for n in &names {
        specs.insert(n.clone(), lookup(file, c, n)?);
    }
    let rooted = specs.values().any(|g| !g.roots().is_empty());

    if !rooted {
        let mut cache: HashMap<String, DensityEstimate> = HashMap::new();
        let mut atom = |g: &str| -> Result<DensityEstimate, DslError> {
            if let Some(e) = cache.get(g) {
                return Ok(*e);
            }
            let e = density_auto(&specs[g], w, opts.budget, derive_seed(opts.seed, g))?;
            cache.insert(g.to_string(), e);
            Ok(e)
        };
        let l = combine(&c.lhs, &mut atom)?;
        let r = combine(&c.rhs, &mut atom)?;
        let exact = cache.values().all(|e| e.kind == EstimateKind::Quadrature);
        let samples = cache.values().map(|e| e.samples).sum();
        let (method, samples) = estimate_kind(samples, exact);
        let est = DensityEstimate { value: l.value - r.value, stderr: (l.var + r.var).sqrt(), samples, kind: method };
        return Ok(CheckReport::new(&c.name, est, target, opts.tol).with_sides(l.value, r.value));
    }

    let (lhs, rhs) = c.cross_multiplied();
    let representative = &specs[&names[0]];
    let mut rng = stream_rng(derive_seed(opts.seed, &format!("panel/{}", c.name)), 0);
    let per_point = (opts.budget / PANEL_SIZE as u64).max(4096);
    let mut worst: Option<(f64, f64, Verdict, usize)> = None;
    let (mut sum, mut sum_var) = (0.0, 0.0);
    let mut exact = true;
    let mut samples = 0;
    let mut sides = Vec::with_capacity(PANEL_SIZE);
    for i in 0..PANEL_SIZE {
        let roots = sample_roots(representative, w, &mut rng, ROOT_TRIES)?
            .ok_or(DslError::Density(crate::density::DensityError::RootsIncompatible))?;
        let point_seed = rng.gen::<u64>();
        let mut cache: HashMap<String, DensityEstimate> = HashMap::new();
        let mut atom = |g: &str| -> Result<DensityEstimate, DslError> {
            if let Some(e) = cache.get(g) {
                return Ok(*e);
            }
            let spec = &specs[g];
            let assignment = RootAssignment::new(spec, w, roots.coords.clone())?;
            let e = rooted_density_auto(spec, w, &assignment, per_point, derive_seed(point_seed, g))?;
            cache.insert(g.to_string(), e);
            Ok(e)
        };
        let l = combine(&lhs, &mut atom)?;
        let r = combine(&rhs, &mut atom)?;
        exact &= cache.values().all(|e| e.kind == EstimateKind::Quadrature);
        samples += cache.values().map(|e| e.samples).sum::<u64>();
        let residual = l.value - r.value;
        sides.push((l.value, r.value));
        let stderr = (l.var + r.var).sqrt();
        sum += residual;
        sum_var += l.var + r.var;
        let v = verdict_for(residual, stderr, target, opts.tol);
        // Worst tuple: highest verdict, then largest residual.
        let replace = match worst {
            None => true,
            Some((wr, _, wv, _)) => (v, residual.abs()) > (wv, wr.abs()),
        };
        if replace {
            worst = Some((residual, stderr, v, i));
        }
    }
    let (residual, stderr, verdict, at) = worst.expect("panel is not empty");
    let n = PANEL_SIZE as f64;
    let (method, samples) = estimate_kind(samples, exact);
    let mut report = CheckReport::new(
        &c.name,
        DensityEstimate { value: residual, stderr, samples, kind: method },
        target,
        opts.tol,
    )
    .with_sides(sides[at].0, sides[at].1)
    .with_detail(format!("worst of {PANEL_SIZE} root tuples; panel mean residual {} ± {}", sum / n, sum_var.sqrt() / n));
    report.verdict = verdict;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;
    use crate::graphon::{half_graphon, Constant};

    fn opts() -> EvalOptions {
        EvalOptions { budget: 200_000, seed: 7, tol: 5e-3 }
    }

    #[test]
    fn verdict_bands() {
        let t = Target::Exact { value: 1.0 };
        assert_eq!(verdict_for(1.004, 0.0, t, 5e-3), Verdict::Pass);
        assert_eq!(verdict_for(1.006, 0.0, t, 5e-3), Verdict::Fail);
        assert_eq!(verdict_for(1.006, 1e-3, t, 5e-3), Verdict::Inconclusive);
        let i = Target::Interval { lo: 0.0, hi: 0.5 };
        assert_eq!(verdict_for(0.25, 0.0, i, 0.0), Verdict::Pass);
        assert_eq!(verdict_for(0.6, 0.0, i, 0.0), Verdict::Fail);
        assert_eq!(verdict_for(f64::NAN, 0.0, i, 0.0), Verdict::Fail);
    }

    #[test]
    fn unrooted_constant_graphon() {
        let w = Constant::new(0.5).unwrap();
        let f = parse("K2 = 0.5\nK3 = 1/8\nconstraint wrong: K2 = 0.7").unwrap();
        let r: Vec<_> = f.constraints.iter().map(|c| eval_constraint(&f, c, &w, &opts()).unwrap()).collect();
        assert_eq!(r[0].verdict, Verdict::Pass);
        assert_eq!(r[1].verdict, Verdict::Pass);
        assert_eq!(r[2].verdict, Verdict::Fail);
    }

    #[test]
    fn rooted_degree_regularity() {
        // Every vertex of a constant graphon has degree p.
        let w = Constant::new(0.3).unwrap();
        let f = parse("graph edge { vertices 2; roots 0; edge 0-1 }\ngraph pt { vertices 2; roots 0; free 0-1 }\nedge / pt = 0.3").unwrap();
        let r = eval_constraint(&f, &f.constraints[0], &w, &opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        // The half graphon is not regular.
        let h = half_graphon();
        let r = eval_constraint(&f, &f.constraints[0], &h, &opts()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail, "{r:?}");
    }
}
