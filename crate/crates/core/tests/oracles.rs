//! Estimators against closed forms and against each other.

use graphonlab::density::{density, density_quadrature, GraphSpec, PairState};
use graphonlab::graphon::{diagonal_checker, half_graphon, step_graphon, Constant};
use graphonlab::hypercube::{HyperPart, HypercubeGraphon, E1_DEGREE, E2_DEGREE};
use graphonlab::recipe::{Arity, CountTable, Recipe};
use graphonlab::geometry::UnitCoord;
use graphonlab::sampler::{empirical_density, sample, SampledGraph};

#[test]
fn checker_clique_sums() {
    let k = diagonal_checker();
    for (n, target) in [(2, 1.0 / 3.0), (3, 1.0 / 7.0), (4, 1.0 / 15.0)] {
        let d = density_quadrature(&GraphSpec::complete(n), &k).unwrap();
        assert!((d.value - target).abs() < 1e-12, "K{n}: {}", d.value);
    }
}

#[test]
fn half_graphon_triangles_by_monte_carlo() {
    // t(K3, W_half) = 1/4; the estimate must sit within four standard errors.
    let d = density(&GraphSpec::complete(3), &half_graphon(), 400_000, 5).unwrap();
    assert!(d.agrees_with(0.25, 4.0, 0.0), "{d:?}");
}

#[test]
fn monte_carlo_agrees_with_quadrature_on_step_graphons() {
    let w = step_graphon(&[vec![0.9, 0.2, 0.5], vec![0.2, 0.1, 0.7], vec![0.5, 0.7, 0.3]], &[0.5, 0.25, 0.25]).unwrap();
    let mut cherry = GraphSpec::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    cherry.set(0, 2, PairState::NonEdge).unwrap();
    let c4 = GraphSpec::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
    for (i, h) in [GraphSpec::complete(3), cherry, c4].iter().enumerate() {
        let q = density_quadrature(h, &w).unwrap();
        let m = density(h, &w, 400_000, 11 + i as u64).unwrap();
        assert_eq!(q.stderr, 0.0);
        assert!(m.agrees_with(q.value, 4.0, 0.0), "graph {i}: {m:?} vs {q:?}");
    }
}

#[test]
fn exact_recipe_counts_on_small_lattices() {
    let recipe = Recipe::with_precision(12);
    for n in 1..=4u32 {
        let table = CountTable::build(&recipe, n).unwrap();
        let bits = table.lane_bits().to_vec();
        assert_eq!(bits.iter().sum::<u32>(), 12);
        // Half of every coordinate: measure 2^-n.
        let halves = vec![UnitCoord::HALF; n as usize];
        assert_eq!(table.count_below(&halves).unwrap(), 1 << (12 - n));
        assert_eq!(table.count_below(&[]).unwrap(), 1 << 12);
    }
    let est = Recipe::default().verify_property(Arity::Infinite, &[0.5, 0.75, 0.3], 400_000, 2);
    assert!(est.agrees_with(0.5 * 0.75 * 0.3, 4.0, 0.0), "{est:?}");
}

#[test]
fn e_part_degrees_are_pinned() {
    let g = HypercubeGraphon::build(Recipe::default(), 30).unwrap();
    assert!((g.degree(HyperPart::E1, UnitCoord::HALF) - E1_DEGREE).abs() < 1e-12);
    assert!((g.degree(HyperPart::E2, UnitCoord::HALF) - E2_DEGREE).abs() < 1e-12);
}

#[test]
fn empirical_density_counts_small_graphs_exactly() {
    // A 4-cycle contains four induced paths on three vertices and no triangle.
    let g = SampledGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
    let mut p3 = GraphSpec::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    p3.set(0, 2, PairState::NonEdge).unwrap();
    assert_eq!(empirical_density(&g, &p3, 10, 1).unwrap().value, 1.0);
    assert_eq!(empirical_density(&g, &GraphSpec::complete(3), 10, 1).unwrap().value, 0.0);
    assert_eq!(empirical_density(&g, &GraphSpec::complete(2), 10, 1).unwrap().value, 4.0 / 6.0);
}

#[test]
fn sampled_constant_graphon_edge_density() {
    let g = sample(&Constant::new(0.3).unwrap(), 400, 9).unwrap();
    let pairs = 400.0 * 399.0 / 2.0;
    let d = g.edge_count() as f64 / pairs;
    assert!((d - 0.3).abs() < 4.0 * (0.21f64 / pairs).sqrt(), "{d}");
}
