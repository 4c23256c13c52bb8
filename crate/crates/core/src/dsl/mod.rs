//! Density-expression constraints: syntax tree, parser, printer and
//! evaluator.
//!
//! A constraint file declares small graphs and equalities between
//! expressions over them:
//!
//! ```text
//! graph cherry { vertices 3; roots 0; edge 0-1 0-2; default free }
//! constraint edges: K2 = 1/3
//! K3 + 3 * P3 = 0.5
//! ```
//!
//! See `docs/constraint-grammar.md` for the full grammar.

mod eval;
mod parse;
mod print;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::density::{DensityError, GraphSpec, PairState};

pub use eval::{eval_constraint, verdict_for, CheckReport, EvalOptions, Target, Verdict, PANEL_SIZE};
pub use parse::parse;
pub use print::{print, print_expr};

/// Line and column (both 1-based) of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Position, message: String },
    #[error("{pos}: unknown graph {name:?}")]
    UnknownGraph { pos: Position, name: String },
    #[error("{pos}: graph {name:?} is defined twice")]
    DuplicateGraph { pos: Position, name: String },
    #[error("{pos}: invalid graph: {source}")]
    InvalidGraph { pos: Position, source: DensityError },
    #[error("{pos}: incompatible roots in constraint {constraint:?}: {message}")]
    Compatibility { pos: Position, constraint: String, message: String },
    #[error("density evaluation failed: {0}")]
    Density(#[from] DensityError),
}

impl DslError {
    pub fn position(&self) -> Option<Position> {
        match self {
            DslError::Syntax { pos, .. }
            | DslError::UnknownGraph { pos, .. }
            | DslError::DuplicateGraph { pos, .. }
            | DslError::InvalidGraph { pos, .. }
            | DslError::Compatibility { pos, .. } => Some(*pos),
            DslError::Density(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Graph(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Formal fraction, removed by cross-multiplication before evaluation.
    Div(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn graphs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_graphs(&mut out);
        out
    }

    fn collect_graphs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Const(_) => {}
            Expr::Graph(g) => out.push(g),
            Expr::Neg(a) => a.collect_graphs(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_graphs(out);
                b.collect_graphs(out);
            }
        }
    }

    /// `(numerator, denominator)` with no fraction inside either part.
    pub fn as_fraction(&self) -> (Expr, Expr) {
        let one = || Expr::Const(1.0);
        let b = Box::new;
        match self {
            Expr::Const(_) | Expr::Graph(_) => (self.clone(), one()),
            Expr::Neg(a) => {
                let (n, d) = a.as_fraction();
                (Expr::Neg(b(n)), d)
            }
            Expr::Add(x, y) | Expr::Sub(x, y) => {
                let (nx, dx) = x.as_fraction();
                let (ny, dy) = y.as_fraction();
                let left = mul(nx, dy.clone());
                let right = mul(ny, dx.clone());
                let num = if matches!(self, Expr::Add(..)) { Expr::Add(b(left), b(right)) } else { Expr::Sub(b(left), b(right)) };
                (num, mul(dx, dy))
            }
            Expr::Mul(x, y) => {
                let (nx, dx) = x.as_fraction();
                let (ny, dy) = y.as_fraction();
                (mul(nx, ny), mul(dx, dy))
            }
            Expr::Div(x, y) => {
                let (nx, dx) = x.as_fraction();
                let (ny, dy) = y.as_fraction();
                (mul(nx, dy), mul(dx, ny))
            }
        }
    }

    fn has_fraction(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Graph(_) => false,
            Expr::Div(..) => true,
            Expr::Neg(a) => a.has_fraction(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.has_fraction() || b.has_fraction(),
        }
    }
}

/// Product that drops multiplications by the constant 1.
fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), e) | (e, Expr::Const(x)) if x == 1.0 => e,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub lhs: Expr,
    pub rhs: Expr,
    pub pos: Position,
}

// Positions are ignored so that printed files compare equal to their source.
impl PartialEq for Constraint {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.lhs == other.lhs && self.rhs == other.rhs
    }
}

impl Constraint {
    /// `D₁/D₁' = D₂/D₂'` rewritten as `D₁·D₂' = D₂·D₁'`.
    pub fn cross_multiplied(&self) -> (Expr, Expr) {
        if !self.lhs.has_fraction() && !self.rhs.has_fraction() {
            return (self.lhs.clone(), self.rhs.clone());
        }
        let (nl, dl) = self.lhs.as_fraction();
        let (nr, dr) = self.rhs.as_fraction();
        (mul(nl, dr), mul(nr, dl))
    }
}

/// Parsed file: named graphs in declaration order plus constraints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintFile {
    pub graphs: Vec<(String, GraphSpec)>,
    pub constraints: Vec<Constraint>,
}

impl ConstraintFile {
    /// Graph by name: declared graphs first, then the builtin vocabulary.
    pub fn graph(&self, name: &str) -> Option<GraphSpec> {
        self.graphs.iter().find(|(n, _)| n == name).map(|(_, g)| g.clone()).or_else(|| builtin_graph(name))
    }

    pub fn graph_table(&self) -> BTreeMap<String, GraphSpec> {
        let mut out = BTreeMap::new();
        for c in &self.constraints {
            for name in c.lhs.graphs().into_iter().chain(c.rhs.graphs()) {
                if let Some(g) = self.graph(name) {
                    out.insert(name.to_string(), g);
                }
            }
        }
        out
    }
}

/// `K<n>` complete, `E<n>` edgeless, `P<n>` path and `C<n>` cycle, for
/// `1 ≤ n ≤ 8` (`C` from 3).
pub fn builtin_graph(name: &str) -> Option<GraphSpec> {
    let (kind, n) = name.split_at(1);
    let n: usize = n.parse().ok()?;
    if !(1..=8).contains(&n) {
        return None;
    }
    match kind {
        "K" => Some(GraphSpec::complete(n)),
        "E" => Some(GraphSpec::new(n, PairState::NonEdge)),
        "P" => GraphSpec::from_edges(n, &(1..n).map(|i| (i - 1, i)).collect::<Vec<_>>()).ok(),
        "C" if n >= 3 => GraphSpec::from_edges(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>()).ok(),
        _ => None,
    }
}
