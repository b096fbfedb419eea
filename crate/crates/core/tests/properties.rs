use proptest::prelude::*;

use opdmin_core::graph::WeightedGraph;
use opdmin_core::numerics::{nuclear_norm, svd_soft_threshold, sym_eig, SymMatrix};
use opdmin_core::opinion::{
    center_within_unit_box, disagreement, fj_equilibrium_closed, objective_f, polarization, OpinionVector,
};

fn graph_strategy() -> impl Strategy<Value = WeightedGraph> {
    (2usize..9).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let m = pairs.len();
        (Just(n), Just(pairs), prop::collection::vec(prop::option::weighted(0.4, 0.1f64..3.0), m))
    })
    .prop_map(|(n, pairs, weights)| {
        let edges = pairs.into_iter().zip(weights).filter_map(|((i, j), w)| w.map(|w| (i, j, w)));
        WeightedGraph::from_edges(n, edges).unwrap()
    })
}

fn sym_strategy() -> impl Strategy<Value = SymMatrix> {
    (1usize..7).prop_flat_map(|n| prop::collection::vec(-2.0f64..2.0, n * n)).prop_map(|v| {
        let n = (v.len() as f64).sqrt().round() as usize;
        SymMatrix::from_upper_fn(n, |i, j| v[i * n + j])
    })
}

/// Union-find count, independent of the graph's own traversal.
fn components(g: &WeightedGraph) -> usize {
    let mut parent: Vec<usize> = (0..g.n()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for e in g.edges() {
        let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
        parent[a] = b;
    }
    (0..g.n()).filter(|&x| find(&mut parent, x) == x).count()
}

proptest! {
    #[test]
    fn laplacian_is_psd_with_nullity_equal_to_components(g in graph_strategy()) {
        let eig = sym_eig(&g.laplacian()).unwrap();
        let scale = 1.0 + g.degrees().iter().cloned().fold(0.0, f64::max);
        prop_assert!(eig.values.iter().all(|&l| l > -1e-10 * scale));
        let zeros = eig.values.iter().filter(|&&l| l.abs() < 1e-9 * scale).count();
        prop_assert_eq!(zeros, components(&g));
        prop_assert_eq!(g.connected_components(), components(&g));
    }

    #[test]
    fn polarization_plus_disagreement_matches_objective(
        g in graph_strategy(),
        raw in prop::collection::vec(-1.0f64..1.0, 8),
    ) {
        let s = OpinionVector::new(center_within_unit_box(&raw[..g.n()])).unwrap();
        let lap = g.laplacian();
        let z = fj_equilibrium_closed(&lap, &s).unwrap();
        let lhs = polarization(&z) + disagreement(&z, &g).unwrap();
        let rhs = objective_f(&s, &lap).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn centering_stays_in_box_with_zero_mean(raw in prop::collection::vec(-3.0f64..3.0, 1..20)) {
        let c = center_within_unit_box(&raw);
        prop_assert!(c.iter().all(|x| x.abs() <= 1.0));
        prop_assert!((c.iter().sum::<f64>() / c.len() as f64).abs() <= 1e-12);
    }

    #[test]
    fn soft_threshold_is_non_expansive(
        (a, b) in (1usize..6).prop_flat_map(|n| {
            let m = prop::collection::vec(-2.0f64..2.0, n * n);
            (m.clone(), m)
        }),
        tau in 0.0f64..2.0,
    ) {
        let n = (a.len() as f64).sqrt().round() as usize;
        let a = SymMatrix::from_upper_fn(n, |i, j| a[i * n + j]);
        let b = SymMatrix::from_upper_fn(n, |i, j| b[i * n + j]);
        let ta = svd_soft_threshold(&a, tau).unwrap();
        let tb = svd_soft_threshold(&b, tau).unwrap();
        let mut d_in = a.clone();
        d_in.add_scaled(-1.0, &b);
        let mut d_out = ta;
        d_out.add_scaled(-1.0, &tb);
        prop_assert!(d_out.frobenius_norm() <= d_in.frobenius_norm() + 1e-9);
    }

    #[test]
    fn soft_threshold_shrinks_nuclear_norm_by_tau_per_rank(a in sym_strategy(), tau in 0.0f64..1.0) {
        let eig = sym_eig(&a).unwrap();
        let expected: f64 = eig.values.iter().map(|l| (l.abs() - tau).max(0.0)).sum();
        let got = nuclear_norm(&svd_soft_threshold(&a, tau).unwrap()).unwrap();
        prop_assert!((got - expected).abs() <= 1e-9 * (1.0 + expected));
    }
}
