use graphonlab::battery::{item_names, verify_forced_properties, verify_selected};
use graphonlab::dsl::{EvalOptions, Verdict};
use graphonlab::hypercube::{HyperPart, HypercubeGraphon, Mutation, DEFAULT_TRUNCATION};
use graphonlab::recipe::Recipe;

fn graphon() -> HypercubeGraphon {
    HypercubeGraphon::build(Recipe::default(), DEFAULT_TRUNCATION).unwrap()
}

#[test]
fn full_battery_passes_at_default_budget() {
    let g = graphon();
    let reports = verify_forced_properties(&g, &EvalOptions { seed: 1, ..EvalOptions::default() });
    let bad: Vec<_> = reports.iter().filter(|r| r.verdict != Verdict::Pass).collect();
    assert!(bad.is_empty(), "{bad:#?}");
    let names: Vec<_> = reports.iter().map(|r| r.name.clone()).collect();
    assert_eq!(names, item_names(&g));
}

#[test]
fn battery_is_deterministic() {
    let g = graphon();
    let opts = EvalOptions { budget: 20_000, seed: 9, tol: 5e-3 };
    let select = |n: &str| n.starts_with("degree/") || n.starts_with("checker") || n.starts_with("audit/B1");
    let a = verify_selected(&g, &opts, &select);
    let b = verify_selected(&g, &opts, &select);
    assert_eq!(a, b);
}

#[test]
fn every_single_pair_mutation_fails() {
    let opts = EvalOptions { budget: 10_000, seed: 2, tol: 5e-3 };
    for (i, &x) in HyperPart::ALL.iter().enumerate() {
        for &y in &HyperPart::ALL[i..] {
            let g = graphon().with_mutation(Mutation::control(x, y));
            let reports = verify_forced_properties(&g, &opts);
            assert!(reports.iter().any(|r| r.verdict == Verdict::Fail), "mutation of {x}x{y} went unnoticed");
        }
    }
}
