//! Builtin graphon names and the block spec file format.
//!
//! Builtins: `constant(p=0.5)` (or `constant(0.5)`), `half`, `checker`,
//! `hypercubical` with optional `(recipe=interleave, L=30)`.
//!
//! A spec file lists parts and then kernels, one per line:
//!
//! ```text
//! # two halves, dense inside
//! part A 1/2 degree 0.7
//! part B 1/2 degree 0.3
//! kernel A A constant 0.9
//! kernel A B constant 0.1
//! kernel B B checker
//! ```
//!
//! Kernels are `zero`, `constant P`, `half`, `checker` and
//! `shifted-checker`. Unlisted pairs are zero; a pair listed twice, in
//! either order, is an error.

use std::collections::HashSet;

use thiserror::Error;

use crate::graphon::{diagonal_checker, half_graphon, BlockGraphon, BlockKernel, Constant, Graphon, GraphonError, Part, PartitionedLayout};
use crate::hypercube::{HypercubeError, HypercubeGraphon, DEFAULT_TRUNCATION};
use crate::recipe::Recipe;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("unknown builtin graphon {0:?}")]
    UnknownBuiltin(String),
    #[error("bad builtin argument {0:?}")]
    BadArgument(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Graphon { line: usize, source: GraphonError },
    #[error(transparent)]
    Hypercube(#[from] HypercubeError),
}

/// Largest truncation depth accepted for the hypercubical builtin.
pub const MAX_TRUNCATION: u32 = 52;

/// `key=value` or a bare positional value.
type Arg<'a> = (Option<&'a str>, &'a str);

/// Splits `name(k=v, ...)` into the name and its arguments.
fn split_call(text: &str) -> Result<(&str, Vec<Arg<'_>>), SpecError> {
    let text = text.trim();
    let Some(open) = text.find('(') else { return Ok((text, Vec::new())) };
    let inner = text[open + 1..].strip_suffix(')').ok_or_else(|| SpecError::BadArgument(text.to_string()))?;
    let args = inner
        .split(',')
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(|a| match a.split_once('=') {
            Some((k, v)) => (Some(k.trim()), v.trim()),
            None => (None, a),
        })
        .collect();
    Ok((text[..open].trim(), args))
}

pub fn is_builtin(text: &str) -> bool {
    split_call(text).is_ok_and(|(name, _)| matches!(name, "constant" | "half" | "checker" | "hypercubical"))
}

pub fn builtin(text: &str) -> Result<Box<dyn Graphon>, SpecError> {
    let (name, args) = split_call(text)?;
    let bad = |a: &str| SpecError::BadArgument(a.to_string());
    match name {
        "constant" => {
            let [(key, value)] = args[..] else { return Err(bad(text)) };
            if key.is_some_and(|k| k != "p") {
                return Err(bad(text));
            }
            let p: f64 = value.parse().map_err(|_| bad(value))?;
            Ok(Box::new(Constant::new(p).map_err(|_| bad(value))?))
        }
        "half" | "checker" if !args.is_empty() => Err(bad(text)),
        "half" => Ok(Box::new(half_graphon())),
        "checker" => Ok(Box::new(diagonal_checker())),
        "hypercubical" => {
            let mut truncation = DEFAULT_TRUNCATION;
            for (key, value) in args {
                match key {
                    Some("recipe") if value == "interleave" => {}
                    Some("L") => {
                        truncation = value.parse().map_err(|_| bad(value))?;
                        if truncation == 0 || truncation > MAX_TRUNCATION {
                            return Err(bad(value));
                        }
                    }
                    _ => return Err(bad(value)),
                }
            }
            Ok(Box::new(HypercubeGraphon::build(Recipe::default(), truncation)?))
        }
        other => Err(SpecError::UnknownBuiltin(other.to_string())),
    }
}

fn parse_measure(text: &str) -> Option<f64> {
    match text.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.parse().ok()?, b.parse().ok()?);
            (b != 0.0).then(|| a / b)
        }
        None => text.parse().ok(),
    }
}

/// Parses a block spec file into a graphon named `name`.
pub fn parse_spec(text: &str, name: &str) -> Result<BlockGraphon, SpecError> {
    let syntax = |line: usize, msg: String| SpecError::Syntax { line, msg };
    let mut parts: Vec<(String, f64, Option<f64>)> = Vec::new();
    let mut kernels: Vec<(usize, String, String, BlockKernel)> = Vec::new();
    let mut last_part_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        match words[0] {
            "part" => {
                if !kernels.is_empty() {
                    return Err(syntax(line, "parts must come before kernels".into()));
                }
                let (pname, measure, degree) = match words[1..] {
                    [n, m] => (n, m, None),
                    [n, m, "degree", d] => (n, m, Some(d)),
                    _ => return Err(syntax(line, "expected: part NAME MEASURE [degree D]".into())),
                };
                let measure = parse_measure(measure).ok_or_else(|| syntax(line, format!("bad measure {measure:?}")))?;
                let degree = match degree {
                    Some(d) => Some(d.parse::<f64>().map_err(|_| syntax(line, format!("bad degree {d:?}")))?),
                    None => None,
                };
                parts.push((pname.to_string(), measure, degree));
                last_part_line = line;
            }
            "kernel" => {
                let (a, b, kernel) = match words[1..] {
                    [a, b, "zero"] => (a, b, BlockKernel::Zero),
                    [a, b, "half"] => (a, b, BlockKernel::Half),
                    [a, b, "checker"] => (a, b, BlockKernel::Checker),
                    [a, b, "shifted-checker"] => (a, b, BlockKernel::Shifted),
                    [a, b, "constant", p] => {
                        let p: f64 = p.parse().map_err(|_| syntax(line, format!("bad constant {p:?}")))?;
                        (a, b, BlockKernel::Constant(p))
                    }
                    _ => return Err(syntax(line, "expected: kernel PART PART (zero|constant P|half|checker|shifted-checker)".into())),
                };
                kernels.push((line, a.to_string(), b.to_string(), kernel));
            }
            other => return Err(syntax(line, format!("unknown statement {other:?}"))),
        }
    }
    if parts.is_empty() {
        return Err(syntax(1, "no parts declared".into()));
    }
    let names: Vec<&str> = parts.iter().map(|p| p.0.as_str()).collect();
    let measures: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let at_parts = |source| SpecError::Graphon { line: last_part_line, source };
    // Degrees are optional per part; the layout takes all or none, so
    // missing ones are carried separately.
    let base = PartitionedLayout::from_measures(&names, &measures, None).map_err(at_parts)?;
    let with_degrees: Vec<Part> =
        base.parts().iter().zip(&parts).map(|(p, (_, _, d))| Part { degree: *d, ..p.clone() }).collect();
    let denominator = base.parts().iter().map(|p| p.weight).sum();
    let layout = PartitionedLayout::new(with_degrees, denominator).map_err(at_parts)?;
    let mut g = BlockGraphon::new(layout.clone(), name);
    let mut seen = HashSet::new();
    for (line, a, b, kernel) in kernels {
        let i = layout.index_of(&a).map_err(|source| SpecError::Graphon { line, source })?;
        let j = layout.index_of(&b).map_err(|source| SpecError::Graphon { line, source })?;
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(syntax(line, format!("pair {a} {b} already has a kernel")));
        }
        g.set(i, j, kernel).map_err(|source| SpecError::Graphon { line, source })?;
    }
    Ok(g)
}
