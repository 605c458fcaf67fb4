mod common;

use common::{model, perturbed_pair, scalar_distance};
use opack_core::abstraction::{build_abstraction, build_unchecked, neighbor_outputs, QuantParams};
use opack_core::design::{design_parameters, DesignOptions};
use opack_core::relations::{
    check_relation, levelset_relation, max_relation, max_relation_ordered, validate_composed_function, validate_sopsf,
    ClauseViolation, SweepOrder,
};
use opack_core::Notion;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn cascade_subsystem_passes_at_the_designed_grid() {
    let net = model("cascade2");
    let nb = neighbor_outputs(&net, 1, &[0.2, 0.2]).unwrap();
    let abs = build_abstraction(&net.subsystems[1], &QuantParams::new(0.2, 0.0, 0.0, vec![]), &nb).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for notion in [Notion::Init, Notion::Current, Notion::Infinite] {
        let r =
            validate_sopsf(&net.subsystems[1], &abs, &net.subsystems[1].certificate, 0.25, 0.25, notion, 300, &mut rng)
                .unwrap();
        assert!(r.passed(), "{notion}: {:#?}", r.clauses);
        assert!(r.related_pairs > 0);
    }
}

#[test]
fn zero_precision_fails_the_initial_clause() {
    let net = model("cascade2");
    let abs = build_abstraction(&net.subsystems[0], &QuantParams::new(0.2, 0.0, 0.0, vec![]), &[]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r =
        validate_sopsf(&net.subsystems[0], &abs, &net.subsystems[0].certificate, 0.0, 0.0, Notion::Init, 100, &mut rng)
            .unwrap();
    assert!(r.clauses.get("1a").unwrap().failed > 0);
}

#[test]
fn coarse_grid_still_satisfies_the_step_clauses() {
    let net = model("cascade2");
    let nb = neighbor_outputs(&net, 1, &[0.25, 0.25]).unwrap();
    let abs = build_unchecked(&net.subsystems[1], &QuantParams::new(0.25, 0.0, 0.0, vec![]), &nb).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let r = validate_sopsf(
        &net.subsystems[1],
        &abs,
        &net.subsystems[1].certificate,
        0.25,
        0.25,
        Notion::Init,
        300,
        &mut rng,
    )
    .unwrap();
    // η = 0.25 breaks the sufficient bound 0.2125, yet every abstract successor
    // is 0.25 and every concrete successor lies in ]0.145, 0.24[.
    assert_eq!(r.clauses.failures_of("3"), 0, "{:#?}", r.clauses);
    assert!(r.clauses.get("3a").unwrap().checked > 0);
}

#[test]
fn composed_function_on_the_cascade() {
    let net = model("cascade2");
    let d = design_parameters(&net, 0.25, DesignOptions::default()).unwrap();
    let q = vec![QuantParams::new(0.2, 0.0, 0.0, vec![]), QuantParams::new(0.2, 0.0, 0.0, vec![0.0])];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = validate_composed_function(&net, &d, &q, 200, &mut rng).unwrap();
    assert!(r.passed(), "{r:#?}");
    assert_eq!(r.pairs, 200);

    let mut forced = d.clone();
    forced.subsystems[1].vartheta = 0.0;
    let r = validate_composed_function(&net, &forced, &q, 200, &mut rng).unwrap();
    assert!(r.clauses.get("mismatch.2").unwrap().failed > 0);
}

#[test]
fn composed_function_on_the_nonlinear_network() {
    let net = model("nonlinear6");
    let d = design_parameters(&net, 0.01, DesignOptions::default()).unwrap();
    let q: Vec<QuantParams> = d
        .subsystems
        .iter()
        .zip(&net.subsystems)
        .map(|(l, s)| QuantParams::new(l.eta_max, 0.0, 0.0, vec![0.0; s.internal.len()]))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let r = validate_composed_function(&net, &d, &q, 200, &mut rng).unwrap();
    assert!(r.passed(), "{r:#?}");
}

const NOTIONS: [Notion; 3] = [Notion::Init, Notion::Current, Notion::Infinite];

#[test]
fn validated_levelsets_sit_inside_the_maximal_relation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut validated = 0;
    for _ in 0..300 {
        let (t, that) = perturbed_pair(&mut rng, 0.3);
        for notion in NOTIONS {
            let r = levelset_relation(&t, &that, scalar_distance, 0.5, 0.5, notion);
            if !check_relation(&t, &that, &r).unwrap().is_empty() {
                continue;
            }
            validated += 1;
            let m = max_relation(&t, &that, 0.5, notion).unwrap();
            assert!(r.is_subset(&m.relation), "{notion}: {t:?} / {that:?}");
            assert!(m.holds());
        }
    }
    assert!(validated > 100, "only {validated} levelsets validated");
}

#[test]
fn maximal_relation_cannot_be_extended() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let (t, that) = perturbed_pair(&mut rng, 0.6);
        for notion in NOTIONS {
            let m = max_relation(&t, &that, 0.5, notion).unwrap();
            let step_ok = |v: &[ClauseViolation]| !v.iter().any(|c| c.clause.starts_with('3'));
            assert!(step_ok(&check_relation(&t, &that, &m.relation).unwrap()));
            for x in 0..t.len() {
                for xh in 0..that.len() {
                    if m.relation.contains(x, xh) {
                        continue;
                    }
                    if (t.outputs[x][0] - that.outputs[xh][0]).abs() > 0.5 {
                        continue;
                    }
                    let mut bigger = m.relation.clone();
                    bigger.set(x, xh, true);
                    let v = check_relation(&t, &that, &bigger).unwrap();
                    assert!(!step_ok(&v), "{notion}: adding ({x}, {xh}) keeps the step clauses");
                }
            }
        }
    }
}

#[test]
fn sweep_order_does_not_change_the_fixpoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let (t, that) = perturbed_pair(&mut rng, 0.6);
        for notion in NOTIONS {
            let a = max_relation_ordered(&t, &that, 0.5, notion, SweepOrder::Forward).unwrap();
            let b = max_relation_ordered(&t, &that, 0.5, notion, SweepOrder::Reverse).unwrap();
            assert_eq!(a, b);
        }
    }
}
