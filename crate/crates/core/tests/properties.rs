//! Invariants checked on random inputs.

use proptest::prelude::*;

use graphonlab::density::{density_quadrature, GraphSpec, PairState};
use graphonlab::dsl::{parse, print, print_expr, Expr};
use graphonlab::geometry::{level_of, reconstruct, UnitCoord, ONE};
use graphonlab::graphon::{step_graphon, Graphon};
use graphonlab::hypercube::HypercubeGraphon;
use graphonlab::recipe::{Arity, Recipe};
use graphonlab::sampler::{empirical_density, sample};

fn coord() -> impl Strategy<Value = UnitCoord> {
    (0..ONE).prop_map(|n| UnitCoord::from_numerator(n).unwrap())
}

/// Symmetric step graphon on `k` equal blocks together with its complement.
fn step_pair() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..4).prop_flat_map(|k| {
        (prop::collection::vec(0.0f64..=1.0, k * (k + 1) / 2), prop::collection::vec(1u32..5, k)).prop_map(move |(upper, w)| {
            // `upper` lists the upper triangle row by row.
            let at = |i: usize, j: usize| {
                let (i, j) = (i.min(j), i.max(j));
                upper[i * k - i * (i + 1) / 2 + j]
            };
            let blocks: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| at(i, j)).collect()).collect();
            let total: u32 = w.iter().sum();
            (blocks, w.iter().map(|&x| x as f64 / total as f64).collect())
        })
    })
}

fn expr(depth: u32) -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        (0u32..1000, 0u32..4).prop_map(|(m, e)| Expr::Const(m as f64 / 10f64.powi(e as i32))),
        prop::sample::select(vec!["K2", "K3", "E2", "P3", "g"]).prop_map(|g| Expr::Graph(g.into())),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    let sub = expr(depth - 1);
    prop_oneof![
        2 => leaf,
        1 => sub.clone().prop_map(|a| Expr::Neg(Box::new(a))),
        1 => (sub.clone(), sub.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
        1 => (sub.clone(), sub.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
        1 => (sub.clone(), sub.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
        // Unrooted constraints only divide by constants.
        1 => (sub, 1u32..100).prop_map(|(a, d)| Expr::Div(Box::new(a), Box::new(Expr::Const(d as f64)))),
    ]
    .boxed()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn level_decomposition_round_trips(x in coord()) {
        if let Ok(p) = level_of(x) {
            prop_assert_eq!(reconstruct(p), x);
        }
    }

    #[test]
    fn recipe_inverts_on_its_lattice(raw in 0u64..(1 << 20), n in 1u32..6) {
        let recipe = Recipe::with_precision(20);
        let x = UnitCoord::from_ratio(raw, 20).unwrap();
        let v = recipe.apply(Arity::Finite(n), x);
        prop_assert_eq!(recipe.invert(n, &v).unwrap(), x);
    }

    #[test]
    fn hypercubical_is_symmetric_and_bounded(x in coord(), y in coord()) {
        let w = HypercubeGraphon::build(Recipe::default(), 30).unwrap();
        let v = w.eval(x, y);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, w.eval(y, x));
    }

    #[test]
    fn three_vertex_densities_partition_unity((blocks, widths) in step_pair()) {
        let w = step_graphon(&blocks, &widths).unwrap();
        let shapes = [
            GraphSpec::new(3, PairState::NonEdge),
            GraphSpec::from_edges(3, &[(0, 1)]).unwrap(),
            GraphSpec::from_edges(3, &[(0, 1), (1, 2)]).unwrap(),
            GraphSpec::complete(3),
        ];
        let total: f64 = shapes.iter().map(|h| density_quadrature(h, &w).unwrap().value).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "total {}", total);
    }

    #[test]
    fn complement_swaps_edges_and_non_edges((blocks, widths) in step_pair(), e in prop::collection::vec(any::<bool>(), 6)) {
        let w = step_graphon(&blocks, &widths).unwrap();
        let flipped: Vec<Vec<f64>> = blocks.iter().map(|r| r.iter().map(|v| 1.0 - v).collect()).collect();
        let wc = step_graphon(&flipped, &widths).unwrap();
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let mut h = GraphSpec::new(4, PairState::NonEdge);
        let mut hc = GraphSpec::new(4, PairState::NonEdge);
        for (&(i, j), &on) in pairs.iter().zip(&e) {
            h.set(i, j, if on { PairState::Edge } else { PairState::NonEdge }).unwrap();
            hc.set(i, j, if on { PairState::NonEdge } else { PairState::Edge }).unwrap();
        }
        let a = density_quadrature(&h, &w).unwrap().value;
        let b = density_quadrature(&hc, &wc).unwrap().value;
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn printed_expressions_parse_back(lhs in expr(3), rhs in expr(2)) {
        let text = format!("graph g {{ vertices 2; edge 0-1 }}\nconstraint c: {} = {}\n", print_expr(&lhs), print_expr(&rhs));
        let file = parse(&text).unwrap();
        prop_assert_eq!(&file.constraints[0].lhs, &lhs);
        prop_assert_eq!(&file.constraints[0].rhs, &rhs);
        prop_assert_eq!(parse(&print(&file)).unwrap(), file);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sampling_is_deterministic_and_counts_edges(seed in any::<u64>(), n in 2usize..60) {
        let w = HypercubeGraphon::build(Recipe::default(), 30).unwrap();
        let g = sample(&w, n, seed).unwrap();
        prop_assert_eq!(&g, &sample(&w, n, seed).unwrap());
        for i in 0..n {
            prop_assert!(!g.has_edge(i, i));
            for j in 0..n {
                prop_assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
            }
        }
        let k2 = empirical_density(&g, &GraphSpec::complete(2), 1000, seed).unwrap();
        let pairs = (n * (n - 1) / 2) as f64;
        prop_assert!((k2.value - g.edge_count() as f64 / pairs).abs() < 1e-12);
    }
}
