use std::fmt::Write;

use super::{ConstraintFile, Expr};
use crate::density::{GraphSpec, PairState};

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(_) => 3,
        Expr::Const(_) | Expr::Graph(_) => 4,
    }
}

fn operand(out: &mut String, e: &Expr, needs_parens: bool) {
    if needs_parens {
        out.push('(');
        expr(out, e);
        out.push(')');
    } else {
        expr(out, e);
    }
}

fn expr(out: &mut String, e: &Expr) {
    let p = precedence(e);
    match e {
        Expr::Const(v) => write!(out, "{v}").unwrap(),
        Expr::Graph(g) => out.push_str(g),
        Expr::Neg(a) => {
            out.push('-');
            operand(out, a, precedence(a) < 3);
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            let op = match e {
                Expr::Add(..) => " + ",
                Expr::Sub(..) => " - ",
                Expr::Mul(..) => " * ",
                _ => " / ",
            };
            // Operators are left-associative, so an equal-precedence right
            // operand keeps its parentheses.
            operand(out, a, precedence(a) < p);
            out.push_str(op);
            operand(out, b, precedence(b) <= p);
        }
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e);
    s
}

fn state_word(s: PairState) -> &'static str {
    match s {
        PairState::Edge => "edge",
        PairState::NonEdge => "nonedge",
        PairState::Free => "free",
    }
}

fn graph(out: &mut String, name: &str, g: &GraphSpec) {
    writeln!(out, "graph {name} {{").unwrap();
    writeln!(out, "  vertices {}", g.order()).unwrap();
    if !g.roots().is_empty() {
        let roots: Vec<String> = g.roots().iter().map(|r| r.to_string()).collect();
        writeln!(out, "  roots {}", roots.join(" ")).unwrap();
    }
    if let Some(labels) = g.labels() {
        writeln!(out, "  labels {}", labels.join(" ")).unwrap();
    }
    for state in [PairState::Edge, PairState::Free] {
        let pairs: Vec<String> = g.pairs().filter(|p| p.2 == state).map(|(i, j, _)| format!("{i}-{j}")).collect();
        if !pairs.is_empty() {
            writeln!(out, "  {} {}", state_word(state), pairs.join(" ")).unwrap();
        }
    }
    out.push_str("}\n");
}

/// Canonical text of a constraint file. Parsing the output gives back an
/// equal file.
pub fn print(file: &ConstraintFile) -> String {
    let mut out = String::new();
    for (name, g) in &file.graphs {
        graph(&mut out, name, g);
    }
    for c in &file.constraints {
        writeln!(out, "constraint {}: {} = {}", c.name, print_expr(&c.lhs), print_expr(&c.rhs)).unwrap();
    }
    out
}
