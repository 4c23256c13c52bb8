use std::io::Cursor;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use graphonlab::battery::{item_names, verify_selected};
use graphonlab::density::density_auto;
use graphonlab::dsl::{eval_constraint, parse, CheckReport, EvalOptions, Verdict};
use graphonlab::estimate::{derive_seed, stream_rng, uniform_coord};
use graphonlab::geometry::{UnitCoord, PRECISION};
use graphonlab::graphon::Graphon;
use graphonlab::hypercube::{HyperPart, HypercubeGraphon, Mutation};
use graphonlab::sampler::{convergence_report, empirical_density, sample as draw};
use graphonlab::typical::sandwich_check;

use crate::output::{num, Outputs, Report, Table};
use crate::{usage, Common, Done, GraphArgs, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_OK};

pub const MIN_RESOLUTION: u32 = 64;

fn hypercube(w: &dyn Graphon) -> Option<&HypercubeGraphon> {
    w.as_any().downcast_ref::<HypercubeGraphon>()
}

/// Renders `report` to stdout and, with `--out`, to that file.
fn finish(common: &Common, report: &Report, code: i32) -> Result<Done> {
    let text = report.render(common.format);
    let mut outputs = Outputs::default();
    if let Some(path) = &common.out {
        outputs.add(path, text.clone());
    }
    outputs.commit()?;
    Ok(Done { code, stdout: text, note: None })
}

/// Lattice point at the centre of cell `i` of `n`.
fn cell_centre(i: u32, n: u32) -> UnitCoord {
    let num = ((2 * i as u128 + 1) << (PRECISION - 1)) / n as u128;
    UnitCoord::from_numerator(num as u64).expect("inside [0,1)")
}

pub fn heatmap(common: &Common, resolution: u32) -> Result<Done> {
    if resolution < MIN_RESOLUTION {
        return Err(usage(format!("--resolution must be at least {MIN_RESOLUTION}")));
    }
    let out = common.out.clone().ok_or_else(|| usage("heatmap needs --out"))?;
    let w = common.graphon()?;
    let n = resolution;
    let centres: Vec<UnitCoord> = (0..n).map(|i| cell_centre(i, n)).collect();
    // Row r shows W(x_r, ·); value 1 is black.
    let pixels: Vec<u8> = centres
        .par_iter()
        .flat_map_iter(|&x| centres.iter().map(move |&y| (x, y)))
        .map(|(x, y)| (255.0 * (1.0 - w.eval(x, y))).round() as u8)
        .collect();
    let bytes = if out.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
        let mut b = format!("P5\n{n} {n}\n255\n").into_bytes();
        b.extend_from_slice(&pixels);
        b
    } else {
        let img = image::GrayImage::from_raw(n, n, pixels).expect("n*n pixels");
        let mut buf = Cursor::new(Vec::new());
        img.write_to(&mut buf, image::ImageOutputFormat::Png).context("PNG encoding failed")?;
        buf.into_inner()
    };
    let sidecar = sidecar_path(&out);
    let mut outputs = Outputs::default();
    outputs.add(&out, bytes);
    outputs.add(&sidecar, part_boundaries(w.as_ref(), n));
    outputs.commit()?;
    Ok(Done { code: EXIT_OK, stdout: format!("{} ({n}x{n}), parts in {}\n", out.display(), sidecar.display()), note: None })
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".parts.txt");
    out.with_file_name(name)
}

/// One line per part: name, interval and the pixel rows/columns it covers.
fn part_boundaries(w: &dyn Graphon, n: u32) -> String {
    let mut out = format!("# graphon {}\n", w.name());
    let Some(layout) = w.layout() else {
        out.push_str("# no part layout\n");
        return out;
    };
    out.push_str("# part start end first_pixel last_pixel\n");
    for (i, part) in layout.parts().iter().enumerate() {
        let (a, b) = layout.interval(i);
        let first = (a * n as f64).floor() as u32;
        let last = ((b * n as f64).ceil() as u32).saturating_sub(1).max(first);
        out.push_str(&format!("{} {} {} {first} {last}\n", part.name, num(a), num(b)));
    }
    out
}

fn parse_mutation(text: &str) -> Result<Mutation> {
    let (a, b) = text
        .split_once(['x', '×', ','])
        .ok_or_else(|| usage(format!("--mutate expects two parts like B1xB4, got {text:?}")))?;
    let part = |p: &str| p.parse::<HyperPart>().map_err(|e| usage(e.to_string()));
    Ok(Mutation::control(part(a)?, part(b)?))
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn verify(common: &Common, constraints: &[PathBuf], select: &[String], mutate: Option<&str>, list: bool) -> Result<Done> {
    let w = common.graphon()?;
    if list {
        let h = hypercube(w.as_ref()).ok_or_else(|| usage("the battery exists for the hypercubical graphon only"))?;
        return Ok(Done { code: EXIT_OK, stdout: item_names(h).join("\n") + "\n", note: None });
    }
    let seed = common.seed()?;
    let opts = EvalOptions { budget: common.budget, seed, tol: common.tol };
    let selected = |name: &str| select.is_empty() || select.iter().any(|s| name.starts_with(s.as_str()));
    let mutated: Option<HypercubeGraphon> = match mutate {
        Some(m) => {
            let h = hypercube(w.as_ref()).ok_or_else(|| usage("--mutate applies to the hypercubical graphon only"))?;
            Some(h.clone().with_mutation(parse_mutation(m)?))
        }
        None => None,
    };
    let target: &dyn Graphon = match &mutated {
        Some(m) => m,
        None => w.as_ref(),
    };

    // Parse every constraint file before any work starts.
    let mut files = Vec::new();
    for path in constraints {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        let file = parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        files.push((file_stem(path), file));
    }

    let mut reports: Vec<CheckReport> = match hypercube(target) {
        Some(h) => verify_selected(h, &opts, &selected),
        None => Vec::new(),
    };
    for (stem, file) in &files {
        for c in &file.constraints {
            let name = format!("{stem}/{}", c.name);
            if !selected(&name) {
                continue;
            }
            let item_opts = EvalOptions { seed: derive_seed(seed, &name), ..opts };
            let mut r = eval_constraint(file, c, target, &item_opts).map_err(|e| usage(format!("{name}: {e}")))?;
            r.name = name;
            reports.push(r);
        }
    }

    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    let (pass, inconclusive, fail) = (count(Verdict::Pass), count(Verdict::Inconclusive), count(Verdict::Fail));
    let code = if fail > 0 {
        EXIT_FAIL
    } else if inconclusive > 0 {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    let mut table = Table::new(&["item", "verdict", "value", "target", "delta", "stderr", "method"]);
    for r in &reports {
        let target = match r.target {
            graphonlab::dsl::Target::Exact { value } => num(value),
            graphonlab::dsl::Target::Interval { lo, hi } => format!("[{}, {}]", num(lo), num(hi)),
        };
        table.push(vec![
            r.name.clone(),
            serde_json::to_value(r.verdict)?.as_str().unwrap_or_default().to_string(),
            num(r.value),
            target,
            num(r.delta),
            num(r.stderr),
            serde_json::to_value(r.method)?.as_str().unwrap_or_default().to_string(),
        ]);
    }
    let json = json!({
        "graphon": target.name(),
        "mutation": mutate,
        "seed": seed,
        "budget": common.budget,
        "tol": common.tol,
        "summary": {"total": reports.len(), "pass": pass, "inconclusive": inconclusive, "fail": fail},
        "exit_code": code,
        "items": serde_json::to_value(&reports)?,
    });
    let report = Report { json, table };
    let mut outputs = Outputs::default();
    if let Some(dir) = &common.out {
        outputs.add(dir.join("report.json"), report.render(crate::output::Format::Json));
        let mut text = report.render(crate::output::Format::Table);
        text.push_str(&format!("\n{pass} pass, {inconclusive} inconclusive, {fail} fail\n"));
        outputs.add(dir.join("report.txt"), text);
    }
    outputs.commit()?;
    let note = format!("{} items: {pass} pass, {inconclusive} inconclusive, {fail} fail", reports.len());
    Ok(Done { code, stdout: report.render(common.format), note: Some(note) })
}

pub fn density(common: &Common, graphs: &GraphArgs) -> Result<Done> {
    let w = common.graphon()?;
    let seed = common.seed()?;
    let named = graphs.resolve()?;
    let mut table = Table::new(&["graph", "density", "stderr", "method", "samples"]);
    let mut rows = Vec::new();
    for (name, h) in &named {
        if !h.roots().is_empty() {
            return Err(usage(format!("graph {name} has roots; densities take unrooted graphs")));
        }
        let est = density_auto(h, w.as_ref(), common.budget, derive_seed(seed, name)).map_err(|e| usage(format!("{name}: {e}")))?;
        let method = serde_json::to_value(est.kind)?;
        table.push(vec![name.clone(), num(est.value), num(est.stderr), method.as_str().unwrap_or_default().into(), est.samples.to_string()]);
        rows.push(json!({"graph": name, "density": est.value, "stderr": est.stderr, "method": method, "samples": est.samples}));
    }
    let json = json!({"graphon": w.name(), "seed": seed, "budget": common.budget, "densities": rows});
    finish(common, &Report { json, table }, EXIT_OK)
}

pub fn sample(common: &Common, n: usize, graphs: &GraphArgs) -> Result<Done> {
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let w = common.graphon()?;
    let seed = common.seed()?;
    let g = draw(w.as_ref(), n, seed)?;
    let edges = g.to_edge_list();
    let wants_densities = !graphs.names.is_empty() || !graphs.graphs.is_empty();
    let mut outputs = Outputs::default();
    if let Some(path) = &common.out {
        outputs.add(path, edges.clone());
    }
    if !wants_densities {
        outputs.commit()?;
        let stdout = if common.out.is_some() { format!("{n} vertices, {} edges\n", g.edge_count()) } else { edges };
        return Ok(Done { code: EXIT_OK, stdout, note: None });
    }
    let mut table = Table::new(&["graph", "empirical", "stderr", "method"]);
    let mut rows = Vec::new();
    for (name, h) in graphs.resolve()? {
        let est = empirical_density(&g, &h, common.budget, derive_seed(seed, &name)).map_err(|e| usage(format!("{name}: {e}")))?;
        let method = serde_json::to_value(est.kind)?;
        table.push(vec![name.clone(), num(est.value), num(est.stderr), method.as_str().unwrap_or_default().into()]);
        rows.push(json!({"graph": name, "empirical": est.value, "stderr": est.stderr, "method": method}));
    }
    outputs.commit()?;
    let json = json!({"graphon": w.name(), "seed": seed, "n": n, "edges": g.edge_count(), "densities": rows});
    Ok(Done { code: EXIT_OK, stdout: Report { json, table }.render(common.format), note: None })
}

pub fn distances(common: &Common, pairs: usize) -> Result<Done> {
    let w = common.graphon()?;
    let h = hypercube(w.as_ref()).ok_or_else(|| usage("distances are defined on part D of the hypercubical graphon"))?;
    let seed = common.seed()?;
    let mut rng = stream_rng(derive_seed(seed, "pairs"), 0);
    let mut table = Table::new(&[
        "pair", "t", "t2", "lower", "l1", "upper", "dw_lower", "dw_lower_blocks", "dw", "dw_stderr", "tail", "l1_chain", "dw_lower_ok",
    ]);
    let mut rows = Vec::new();
    let (mut chain_bad, mut dw_bad) = (0, 0);
    for i in 0..pairs {
        let (t, t2) = (uniform_coord(&mut rng), uniform_coord(&mut rng));
        let s = sandwich_check(h, t, t2, common.budget, derive_seed(seed, &format!("pair{i}")));
        let (chain, lower_ok) = (s.l1_chain_holds(), s.dw_lower_holds());
        chain_bad += usize::from(!chain);
        dw_bad += usize::from(!lower_ok);
        table.push(vec![
            i.to_string(),
            num(t.to_f64()),
            num(t2.to_f64()),
            num(s.lower),
            num(s.l1),
            num(s.upper),
            num(s.dw_lower),
            num(s.dw_lower_blocks),
            num(s.dw),
            num(s.dw_stderr),
            num(s.tail),
            chain.to_string(),
            lower_ok.to_string(),
        ]);
        let mut v = serde_json::to_value(&s)?;
        if let Value::Object(m) = &mut v {
            m.insert("pair".into(), json!(i));
            m.insert("t".into(), json!(t.to_f64()));
            m.insert("t2".into(), json!(t2.to_f64()));
            m.insert("l1_chain".into(), json!(chain));
            m.insert("dw_lower_ok".into(), json!(lower_ok));
        }
        rows.push(v);
    }
    let note = format!("{pairs} pairs: {chain_bad} violate the L1 chain, {dw_bad} violate the (1/27) d_W lower bound");
    let code = if chain_bad + dw_bad > 0 { EXIT_FAIL } else { EXIT_OK };
    let json = json!({"graphon": w.name(), "seed": seed, "budget": common.budget, "pairs": rows,
        "violations": {"l1_chain": chain_bad, "dw_lower": dw_bad}});
    let mut done = finish(common, &Report { json, table }, code)?;
    done.note = Some(note);
    Ok(done)
}

pub fn convergence(common: &Common, graphs: &GraphArgs, schedule: &[usize], trials: usize) -> Result<Done> {
    let w = common.graphon()?;
    let seed = common.seed()?;
    if schedule.contains(&0) || trials == 0 {
        return Err(usage("orders and trials must be positive"));
    }
    let named = graphs.resolve()?;
    let rows = convergence_report(w.as_ref(), &named, schedule, trials, common.budget, seed).map_err(|e| usage(e.to_string()))?;
    let mut table = Table::new(&["graph", "n", "trials", "mean", "sd", "target", "target_stderr", "gap"]);
    for r in &rows {
        table.push(vec![
            r.graph.clone(),
            r.n.to_string(),
            r.trials.to_string(),
            num(r.mean),
            num(r.sd),
            num(r.target),
            num(r.target_stderr),
            num(r.gap),
        ]);
    }
    let json = json!({"graphon": w.name(), "seed": seed, "rows": serde_json::to_value(&rows)?});
    finish(common, &Report { json, table }, EXIT_OK)
}
