//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use opack_core::abstraction::{build_abstraction, compose, neighbor_outputs, DEFAULT_MAX_STATES};
use opack_core::model::load_model;
use opack_core::{FiniteSystem, NetworkSpec, QuantParams};

pub fn fixture(name: &str) -> PathBuf {
    format!("{}/../../models/{name}.toml", env!("CARGO_MANIFEST_DIR")).into()
}

pub fn model(name: &str) -> NetworkSpec {
    load_model(fixture(name)).expect("fixture model parses")
}

/// Abstractions of every cascade subsystem on the common grid `eta`.
pub fn cascade_parts(net: &NetworkSpec, eta: f64) -> Vec<FiniteSystem> {
    let etas = vec![eta; net.len()];
    (0..net.len())
        .map(|i| {
            let nb = neighbor_outputs(net, i, &etas).unwrap();
            let q = QuantParams::new(eta, 0.0, 0.0, vec![0.0; net.preds(i).len()]);
            build_abstraction(&net.subsystems[i], &q, &nb).unwrap()
        })
        .collect()
}

pub fn cascade(net: &NetworkSpec, eta: f64) -> FiniteSystem {
    compose(&cascade_parts(net, eta), net, DEFAULT_MAX_STATES).unwrap()
}
