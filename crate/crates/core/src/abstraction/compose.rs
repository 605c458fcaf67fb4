use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{linf, LATTICE_TOL};
use crate::model::NetworkSpec;
use crate::parallel::with_pool;

use super::build::product_concat;
use super::{format_vector, FiniteSystem};

/// Largest product state space [`compose`] accepts by default.
pub const DEFAULT_MAX_STATES: usize = 1 << 22;

fn close(a: &[f64], b: &[f64], phi: f64) -> bool {
    let scale = a.iter().chain(b).fold(1.0_f64, |m, v| m.max(v.abs()));
    linf(a, b) <= phi + LATTICE_TOL * scale
}

fn mixed_radix(mut k: usize, radix: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for (slot, &r) in out.iter_mut().zip(radix).rev() {
        *slot = k % r;
        k /= r;
    }
    out
}

fn flat(digits: &[usize], radix: &[usize]) -> usize {
    digits.iter().zip(radix).fold(0, |acc, (&d, &r)| acc * r + d)
}

/// Interconnects subsystem abstractions (in network order) into one system
/// without internal inputs.
///
/// A composite transition under `û = [û₁; …; û_N]` takes every `x̂ᵢ` to
/// `f̂ᵢ(x̂ᵢ, ûᵢ, ŵᵢ)` for some `ŵᵢ` whose blocks lie within `φᵢⱼ` of the
/// predecessor outputs `ĥⱼᵢ(x̂ⱼ)`. The `φᵢⱼ` are those recorded in each
/// abstraction's internal alphabet.
pub fn compose(parts: &[FiniteSystem], net: &NetworkSpec, max_states: usize) -> Result<FiniteSystem> {
    if parts.len() != net.len() {
        return Err(Error::DimensionMismatch { expected: net.len(), got: parts.len() });
    }
    for (i, p) in parts.iter().enumerate() {
        let froms: Vec<usize> = p.internal.iter().map(|b| b.from).collect();
        let expected: Vec<usize> = net.subsystems[i].internal.iter().map(|b| b.from).collect();
        if froms != expected {
            return Err(Error::IllPosed(format!(
                "abstraction {} has internal blocks from {:?}, the network wires {:?}",
                i + 1,
                froms.iter().map(|j| j + 1).collect::<Vec<_>>(),
                expected.iter().map(|j| j + 1).collect::<Vec<_>>()
            )));
        }
        for &j in &froms {
            if !parts[j].output_blocks.contains_key(&i) {
                return Err(Error::IllPosed(format!("abstraction {} lacks an output block toward {}", j + 1, i + 1)));
            }
        }
    }

    let sizes: Vec<usize> = parts.iter().map(FiniteSystem::len).collect();
    let total = sizes.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s).filter(|&t| t <= max_states));
    let Some(total) = total else {
        return Err(Error::TooLarge(sizes.iter().map(|&s| s as u128).product()));
    };
    let in_sizes: Vec<usize> = parts.iter().map(|p| p.inputs.len().max(1)).collect();
    let inputs = product_concat(&parts.iter().map(|p| p.inputs.clone()).collect::<Vec<_>>());

    let transitions: Vec<Vec<Vec<usize>>> = with_pool(|| {
        (0..total)
            .into_par_iter()
            .map(|k| {
                let xs = mixed_radix(k, &sizes);
                let matches = parts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| internal_matches(parts, p, i, &xs))
                    .collect::<Result<Vec<_>>>()?;
                let row = (0..inputs.len())
                    .map(|label| {
                        let us = mixed_radix(label, &in_sizes);
                        let per: Vec<Vec<usize>> = parts
                            .iter()
                            .enumerate()
                            .map(|(i, p)| {
                                let nw = p.internal_count();
                                let mut s: Vec<usize> = matches[i]
                                    .iter()
                                    .flat_map(|&w| p.transitions[xs[i]][us[i] * nw + w].iter().copied())
                                    .collect();
                                s.sort_unstable();
                                s.dedup();
                                s
                            })
                            .collect();
                        product_indices(&per, &sizes)
                    })
                    .collect();
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut states = Vec::with_capacity(total);
    let mut values = Vec::with_capacity(total);
    let mut outputs = Vec::with_capacity(total);
    let mut initial = Vec::new();
    let mut secret = Vec::new();
    for k in 0..total {
        let xs = mixed_radix(k, &sizes);
        states.push(xs.iter().zip(parts).flat_map(|(&x, p)| p.states[x].iter().copied()).collect());
        values.push(xs.iter().zip(parts).flat_map(|(&x, p)| p.values[x].iter().copied()).collect());
        outputs.push(xs.iter().zip(parts).flat_map(|(&x, p)| p.outputs[x].iter().copied()).collect());
        if xs.iter().zip(parts).all(|(&x, p)| p.is_initial(x)) {
            initial.push(k);
        }
        if xs.iter().zip(parts).all(|(&x, p)| p.is_secret(x)) {
            secret.push(k);
        }
    }
    let sys = FiniteSystem {
        states,
        values,
        outputs,
        initial,
        secret,
        inputs,
        internal: Vec::new(),
        output_blocks: Default::default(),
        transitions,
    };
    sys.validate()?;
    Ok(sys)
}

/// Internal-label positions of part `i` admissible at the product state `xs`.
fn internal_matches(parts: &[FiniteSystem], p: &FiniteSystem, i: usize, xs: &[usize]) -> Result<Vec<usize>> {
    let mut per_block: Vec<Vec<usize>> = Vec::with_capacity(p.internal.len());
    for b in &p.internal {
        let y = &parts[b.from].output_blocks[&i][xs[b.from]];
        let hits: Vec<usize> = (0..b.values.len()).filter(|&k| close(y, &b.values[k], b.phi)).collect();
        if hits.is_empty() {
            return Err(Error::IllPosed(format!(
                "output {} of subsystem {} toward {} has no internal value within φ = {}",
                format_vector(y),
                b.from + 1,
                i + 1,
                b.phi
            )));
        }
        per_block.push(hits);
    }
    let radix: Vec<usize> = p.internal.iter().map(|b| b.values.len()).collect();
    Ok(product_indices(&per_block, &radix))
}

/// Flat mixed-radix indices of every combination of the given digit choices, ascending.
fn product_indices(choices: &[Vec<usize>], radix: &[usize]) -> Vec<usize> {
    let mut out = vec![Vec::new()];
    for c in choices {
        out = out
            .iter()
            .flat_map(|pre: &Vec<usize>| {
                c.iter().map(move |&d| {
                    let mut v = pre.clone();
                    v.push(d);
                    v
                })
            })
            .collect();
    }
    out.iter().map(|d| flat(d, radix)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::{build_abstraction, neighbor_outputs, QuantParams};
    use crate::model::load_model;

    fn cascade(n: usize) -> (NetworkSpec, FiniteSystem) {
        let net = load_model(format!("{}/../../models/cascade{n}.toml", env!("CARGO_MANIFEST_DIR"))).unwrap();
        let etas = vec![0.2; n];
        let parts: Vec<FiniteSystem> = (0..n)
            .map(|i| {
                let nb = neighbor_outputs(&net, i, &etas).unwrap();
                build_abstraction(&net.subsystems[i], &QuantParams::new(0.2, 0.0, 0.0, vec![]), &nb).unwrap()
            })
            .collect();
        let c = compose(&parts, &net, DEFAULT_MAX_STATES).unwrap();
        (net, c)
    }

    #[test]
    fn two_subsystem_cascade() {
        let (_, c) = cascade(2);
        // order: aa, aA, Aa, AA
        assert_eq!(c.len(), 4);
        assert_eq!(c.secret, vec![1]);
        assert_eq!(c.initial, vec![0, 1, 2, 3]);
        let post: Vec<Vec<usize>> = (0..4).map(|x| c.post(x)).collect();
        assert_eq!(post, vec![vec![0], vec![0], vec![0], vec![0, 1]]);
    }

    #[test]
    fn state_count_guard() {
        let net = load_model(format!("{}/../../models/cascade2.toml", env!("CARGO_MANIFEST_DIR"))).unwrap();
        let p = build_abstraction(&net.subsystems[0], &QuantParams::new(0.2, 0.0, 0.0, vec![]), &[]).unwrap();
        let nb = neighbor_outputs(&net, 1, &[0.2, 0.2]).unwrap();
        let q = build_abstraction(&net.subsystems[1], &QuantParams::new(0.2, 0.0, 0.0, vec![]), &nb).unwrap();
        assert!(matches!(compose(&[p, q], &net, 3), Err(Error::TooLarge(4))));
    }

    #[test]
    fn mismatched_alphabet_is_ill_posed() {
        let net = load_model(format!("{}/../../models/cascade2.toml", env!("CARGO_MANIFEST_DIR"))).unwrap();
        let p = build_abstraction(&net.subsystems[0], &QuantParams::new(0.2, 0.0, 0.0, vec![]), &[]).unwrap();
        let q = build_abstraction(&net.subsystems[1], &QuantParams::new(0.2, 0.0, 0.0, vec![]), &[vec![vec![0.2]]])
            .unwrap();
        assert!(matches!(compose(&[p, q], &net, DEFAULT_MAX_STATES), Err(Error::IllPosed(_))));
    }

    #[test]
    fn radix_round_trip() {
        let r = [2, 3, 4];
        for k in 0..24 {
            assert_eq!(flat(&mixed_radix(k, &r), &r), k);
        }
    }
}
