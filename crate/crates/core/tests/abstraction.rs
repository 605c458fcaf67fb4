mod common;

use common::{isomorphic, model, reference_two, Labeled};
use opack_core::abstraction::{
    build_abstraction, compose, neighbor_outputs, FiniteSystem, QuantParams, DEFAULT_MAX_STATES,
};
use opack_core::NetworkSpec;

const TOL: f64 = 1e-9;

/// Lattice points `k·η` of a scalar set, found by scanning its bounding range.
fn lattice_1d(net: &NetworkSpec, i: usize, eta: f64) -> Vec<f64> {
    let set = &net.subsystems[i].state_set;
    let (lo, hi) = set
        .boxes()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), bx| (a.min(bx.dims[0].lo), b.max(bx.dims[0].hi)));
    let (k0, k1) = ((lo / eta).floor() as i64 - 1, (hi / eta).ceil() as i64 + 1);
    (k0..=k1).map(|k| k as f64 * eta).filter(|&p| set.contains(&[p])).collect()
}

fn cascade_parts(net: &NetworkSpec, eta: f64) -> Vec<FiniteSystem> {
    let etas = vec![eta; net.len()];
    (0..net.len())
        .map(|i| {
            let phi = vec![0.0; net.preds(i).len()];
            let nb = neighbor_outputs(net, i, &etas).unwrap();
            build_abstraction(&net.subsystems[i], &QuantParams::new(eta, 0.0, 0.0, phi), &nb).unwrap()
        })
        .collect()
}

#[test]
fn subsystem_grids_and_successors_match_a_direct_scan() {
    for (name, eta) in [("cascade2", 0.2), ("cascade3", 0.1), ("cascade4", 0.05)] {
        let net = model(name);
        let etas = vec![eta; net.len()];
        for (i, part) in cascade_parts(&net, eta).iter().enumerate() {
            let grid = lattice_1d(&net, i, eta);
            let values: Vec<f64> = part.values.iter().map(|v| v[0]).collect();
            assert_eq!(values.len(), grid.len(), "{name} subsystem {i}");
            assert!(values.iter().zip(&grid).all(|(a, b)| (a - b).abs() < TOL));

            // Internal values: exact predecessor outputs on its own grid.
            let w: Vec<f64> = match net.preds(i).first() {
                Some(&j) => lattice_1d(&net, j, etas[j]),
                None => vec![],
            };
            let sub = &net.subsystems[i];
            let u = part.inputs[0].clone();
            for (x, &xv) in grid.iter().enumerate() {
                let ws: Vec<Vec<f64>> = if w.is_empty() { vec![vec![]] } else { w.iter().map(|&v| vec![v]).collect() };
                assert_eq!(part.transitions[x].len(), ws.len());
                for (label, wv) in ws.iter().enumerate() {
                    let f = sub.eval_dynamics(&[xv], &u, wv).unwrap()[0];
                    let expect: Vec<usize> =
                        (0..grid.len()).filter(|&k| (grid[k] - f).abs() <= eta * (1.0 + TOL)).collect();
                    assert_eq!(part.transitions[x][label], expect, "{name} {i}: x = {xv}, w = {wv:?}");
                }
            }
            let secret: Vec<usize> = (0..grid.len()).filter(|&k| sub.secret_set.contains(&[grid[k]])).collect();
            assert_eq!(part.secret, secret);
        }
    }
}

/// The composed transition relation equals the monolithic one: product grid
/// points within η (per block) of the network's concrete step.
#[test]
fn composition_matches_the_monolithic_product() {
    for (name, eta) in [("cascade2", 0.2), ("cascade3", 0.2), ("cascade3", 0.1), ("cascade4", 0.2)] {
        let net = model(name);
        let parts = cascade_parts(&net, eta);
        let c = compose(&parts, &net, DEFAULT_MAX_STATES).unwrap();
        let grids: Vec<Vec<f64>> = parts.iter().map(|p| p.values.iter().map(|v| v[0]).collect()).collect();
        let n: usize = grids.iter().map(Vec::len).product();
        assert_eq!(c.len(), n);

        let point = |mut k: usize| -> Vec<usize> {
            let mut idx = vec![0; grids.len()];
            for b in (0..grids.len()).rev() {
                idx[b] = k % grids[b].len();
                k /= grids[b].len();
            }
            idx
        };
        let u: Vec<f64> = parts.iter().flat_map(|p| p.inputs[0].clone()).collect();
        for s in 0..n {
            let idx = point(s);
            let x: Vec<f64> = idx.iter().enumerate().map(|(b, &k)| grids[b][k]).collect();
            assert_eq!(c.values[s], x);
            let next = net.network_step(&x, &u).unwrap();
            let expect: Vec<usize> = (0..n)
                .filter(|&t| {
                    point(t).iter().enumerate().all(|(b, &k)| (grids[b][k] - next[b]).abs() <= eta * (1.0 + TOL))
                })
                .collect();
            assert_eq!(c.post(s), expect, "{name} η = {eta}: from {x:?}");
            let secret = idx.iter().enumerate().all(|(b, &k)| parts[b].is_secret(k));
            assert_eq!(c.is_secret(s), secret);
            assert!(c.is_initial(s));
            let last = net.len() - 1;
            let mut y = vec![0.0; net.len()];
            y[last] = x[last];
            assert_eq!(c.outputs[s], y);
        }
    }
}

#[test]
fn two_subsystem_cascade_is_the_drawn_automaton() {
    let net = model("cascade2");
    let c = compose(&cascade_parts(&net, 0.2), &net, DEFAULT_MAX_STATES).unwrap();
    assert!(isomorphic(&Labeled::of(&c), &reference_two()));
    let mut broken = reference_two();
    broken.edges[3][3] = true;
    assert!(!isomorphic(&Labeled::of(&c), &broken));
}

#[test]
fn reachable_restriction_keeps_behaviour() {
    let net = model("cascade3");
    let c = compose(&cascade_parts(&net, 0.1), &net, DEFAULT_MAX_STATES).unwrap();
    let r = c.reachable_only();
    assert!(r.len() <= c.len());
    for x in 0..r.len() {
        let orig = c.find(&r.states[x]).unwrap();
        let mapped: Vec<Vec<i64>> = r.post(x).iter().map(|&y| r.states[y].clone()).collect();
        let want: Vec<Vec<i64>> = c.post(orig).iter().map(|&y| c.states[y].clone()).collect();
        assert_eq!(mapped, want);
    }
}

#[test]
fn every_concrete_secret_has_a_nearby_abstract_secret() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    for (name, eta) in [("cascade3", 0.2), ("cascade3", 0.1), ("cascade4", 0.05)] {
        let net = model(name);
        for (sub, abs) in net.subsystems.iter().zip(cascade_parts(&net, eta)) {
            let mut xs = sub.secret_set.boundary_points();
            xs.extend((0..200).map(|_| sub.secret_set.sample(&mut rng)));
            for x in xs.iter().filter(|x| sub.secret_set.contains(x)) {
                let near = abs
                    .secret
                    .iter()
                    .any(|&k| abs.values[k].iter().zip(x).all(|(a, b)| (a - b).abs() <= eta * (1.0 + TOL)));
                assert!(near, "{name} subsystem {}: {x:?} has no secret grid point within {eta}", sub.id);
            }
        }
    }
}
