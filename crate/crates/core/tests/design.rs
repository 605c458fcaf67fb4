mod common;

use common::{cycle_products, model};
use opack_core::design::{
    check_sigma, check_small_gain, design_parameters, find_sigma, tarjan_scc, DesignOptions, GainMatrix,
};
use opack_core::{Error, MonotoneFn};
use proptest::prelude::*;

fn gains(n: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    prop::collection::vec((0..n, 0..n, 0.05f64..1.5), 0..=n * 2)
        .prop_map(|v| v.into_iter().filter(|(i, j, _)| i != j).collect())
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn small_gain_matches_cycle_enumeration(entries in gains(6)) {
        let mut dense = vec![vec![0.0; 6]; 6];
        let mut dedup = Vec::new();
        for &(i, j, g) in &entries {
            if dense[i][j] == 0.0 {
                dense[i][j] = g;
                dedup.push((i, j, g));
            }
        }
        let cycles = cycle_products(6, &dense);
        let check = check_small_gain(&GainMatrix::linear(6, &dedup)).unwrap();
        prop_assert_eq!(check.holds, cycles.iter().all(|&p| p < 1.0));
        prop_assert_eq!(check.cycles_checked, cycles.len());
        if let Some((_, p)) = check.witness {
            prop_assert!(p >= 1.0);
            prop_assert!(cycles.iter().any(|&q| (q - p).abs() < 1e-12));
        }
    }

    #[test]
    fn found_sigma_satisfies_every_constraint(entries in gains(5)) {
        let mut seen = std::collections::BTreeSet::new();
        let dedup: Vec<_> = entries.into_iter().filter(|&(i, j, _)| seen.insert((i, j))).collect();
        let g = GainMatrix::linear(5, &dedup);
        match find_sigma(&g) {
            Ok(sigma) => {
                prop_assert!(check_small_gain(&g).unwrap().holds);
                check_sigma(&g, &sigma).unwrap();
                let top = sigma.iter().map(|s| s.eval(1.0).unwrap()).fold(0.0, f64::max);
                prop_assert!((top - 1.0).abs() < 1e-12);
            }
            Err(Error::SmallGainViolated { product, .. }) => prop_assert!(product >= 1.0),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}

#[test]
fn condensation_is_acyclic_and_complete() {
    let edges = [(0, 1), (1, 0), (1, 2), (2, 3), (3, 2), (3, 4)];
    let scc = tarjan_scc(5, &edges).unwrap();
    assert_eq!(scc.components, vec![vec![0, 1], vec![2, 3], vec![4]]);
    assert_eq!(scc.dag_edges, vec![(0, 1), (1, 2)]);
    assert_eq!(scc.bottom, vec![false, false, true]);
}

#[test]
fn sigma_rejects_a_bad_scaling() {
    let g = GainMatrix::linear(2, &[(0, 1, 0.5), (1, 0, 1.5)]);
    assert!(check_sigma(&g, &[MonotoneFn::identity(), MonotoneFn::identity()]).is_err());
    check_sigma(&g, &[MonotoneFn::Linear(0.6), MonotoneFn::Linear(1.0)]).unwrap();
}

#[test]
fn designed_parameters_are_reproducible_and_composable() {
    let net = model("nonlinear6");
    let a = design_parameters(&net, 0.01, DesignOptions::default()).unwrap();
    let b = design_parameters(&net, 0.01, DesignOptions::default()).unwrap();
    assert_eq!(a, b);
    assert!(opack_core::design::check_composability(&a, &net).unwrap().is_empty());
    let err = design_parameters(&model("infeasible_cycle"), 0.01, DesignOptions::default()).unwrap_err();
    assert!(matches!(err, Error::SmallGainViolated { .. }), "{err}");
}
