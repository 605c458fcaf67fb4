use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::span_limit;
use crate::error::{Error, Result};
use crate::geometry::{boxspan, inflate, quantize_uniform, FiniteGrid, GridSet, LATTICE_TOL};
use crate::model::{NetworkSpec, SubsystemSpec};
use crate::parallel::with_pool;

use super::{format_vector, FiniteSystem, InternalAlphabet};

/// Quantization tuple `q = (η, θ, μ, φ)`, with one `φ` per internal block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantParams {
    pub eta: f64,
    pub theta: f64,
    pub mu: f64,
    pub phi: Vec<f64>,
}

impl QuantParams {
    pub fn new(eta: f64, theta: f64, mu: f64, phi: Vec<f64>) -> Self {
        Self { eta, theta, mu, phi }
    }
}

/// `ĥ_ji(x̂_j)` over the state grid of every predecessor `j` of `i`, with each
/// predecessor quantized by `etas[j]`. Values are sorted and deduplicated.
pub fn neighbor_outputs(net: &NetworkSpec, i: usize, etas: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut out = Vec::new();
    for b in &net.subsystems[i].internal {
        let src = &net.subsystems[b.from];
        let grid = state_grid(src, etas[b.from])?;
        let mut vals = grid.points().iter().map(|p| src.eval_output(i, &p.value)).collect::<Result<Vec<_>>>()?;
        sort_dedup(&mut vals);
        out.push(vals);
    }
    Ok(out)
}

fn sort_dedup(v: &mut Vec<Vec<f64>>) {
    v.sort_by(|a, b| {
        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    v.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= LATTICE_TOL * x.abs().max(1.0)));
}

pub(crate) fn state_grid(sub: &SubsystemSpec, eta: f64) -> Result<FiniteGrid> {
    match quantize_uniform(&sub.state_set, eta)? {
        GridSet::Finite(g) if !g.is_empty() => Ok(g),
        GridSet::Finite(_) => {
            Err(Error::Quantization(format!("subsystem {}: η = {eta} leaves no grid point in the state set", sub.id)))
        }
        GridSet::Continuous(_) => {
            Err(Error::Quantization(format!("subsystem {}: state quantization η must be positive", sub.id)))
        }
    }
}

pub(crate) fn input_alphabet(sub: &SubsystemSpec, mu: f64) -> Result<Vec<Vec<f64>>> {
    let Some(u) = &sub.input_set else {
        return Ok(vec![Vec::new()]);
    };
    if u.is_finite_points() {
        let mut pts: Vec<Vec<f64>> = u.boxes().iter().map(|b| b.dims.iter().map(|iv| iv.lo).collect()).collect();
        sort_dedup(&mut pts);
        return Ok(pts);
    }
    if !(mu > 0.0) {
        return Err(Error::Quantization(format!("subsystem {}: a continuous input set needs μ > 0", sub.id)));
    }
    let span = boxspan(u)?;
    if mu > span * (1.0 + LATTICE_TOL) {
        return Err(Error::Quantization(format!("subsystem {}: μ = {mu} exceeds span(U) = {span}", sub.id)));
    }
    match quantize_uniform(u, mu)? {
        GridSet::Finite(g) => Ok(g.points().iter().map(|p| p.value.clone()).collect()),
        GridSet::Continuous(_) => unreachable!("positive μ yields a finite grid"),
    }
}

/// Grid abstraction of one subsystem: states `[X]_η`, secret states
/// `[X_S^θ]_η`, inputs `[U]_μ` and internal inputs per block. A transition
/// `(x̂, û, ŵ) → x̂'` exists iff `‖x̂' − f(x̂, û, ŵ)‖ ≤ η`.
///
/// `neighbor` supplies the exact values of every block with `φ = 0` (see
/// [`neighbor_outputs`]); it may be empty when all blocks are gridded.
/// The quantization bounds on `η`, `μ` and `φ` are enforced.
pub fn build_abstraction(sub: &SubsystemSpec, q: &QuantParams, neighbor: &[Vec<Vec<f64>>]) -> Result<FiniteSystem> {
    let limit = span_limit(sub)?;
    if q.eta > limit * (1.0 + LATTICE_TOL) {
        return Err(Error::Quantization(format!(
            "subsystem {}: η = {} exceeds min(span(X_S), span(X∖X_S)) = {limit}",
            sub.id, q.eta
        )));
    }
    build_unchecked(sub, q, neighbor)
}

/// [`build_abstraction`] without the `η ≤ span` bound; used to study
/// deliberately coarse abstractions.
pub fn build_unchecked(sub: &SubsystemSpec, q: &QuantParams, neighbor: &[Vec<Vec<f64>>]) -> Result<FiniteSystem> {
    if !(q.theta >= 0.0) {
        return Err(Error::NegativeInflation(q.theta));
    }
    let grid = state_grid(sub, q.eta)?;
    let inputs = input_alphabet(sub, q.mu)?;
    let internal = internal_alphabets(sub, q, neighbor)?;
    let int_values: Vec<Vec<f64>> = {
        let blocks: Vec<Vec<Vec<f64>>> = internal.iter().map(|b| b.values.clone()).collect();
        product_concat(&blocks)
    };

    let secret_region = if sub.secret_set.is_empty() { None } else { Some(inflate(&sub.secret_set, q.theta)?) };
    let points = grid.points();
    let secret: Vec<usize> = match &secret_region {
        Some(r) => (0..points.len()).filter(|&k| r.contains(&points[k].value)).collect(),
        None => Vec::new(),
    };

    let own = sub.id - 1;
    let eta = q.eta;
    let transitions: Vec<Vec<Vec<usize>>> = with_pool(|| {
        points
            .par_iter()
            .map(|p| {
                let mut row = Vec::with_capacity(inputs.len() * int_values.len());
                for u in &inputs {
                    for w in &int_values {
                        let v = sub.eval_dynamics(&p.value, u, w).map_err(|e| {
                            Error::Model(format!(
                                "subsystem {}: f({}, {}, {}) failed: {e}",
                                sub.id,
                                format_vector(&p.value),
                                format_vector(u),
                                format_vector(w)
                            ))
                        })?;
                        let succ = grid.near(&v, eta);
                        if succ.is_empty() {
                            return Err(Error::Blocking(format!(
                                "subsystem {}: f({}, {}, {}) = {} has no grid point within η = {eta}",
                                sub.id,
                                format_vector(&p.value),
                                format_vector(u),
                                format_vector(w),
                                format_vector(&v)
                            )));
                        }
                        row.push(succ);
                    }
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let values: Vec<Vec<f64>> = points.iter().map(|p| p.value.clone()).collect();
    let mut outputs = Vec::with_capacity(values.len());
    let mut output_blocks: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
    for x in &values {
        outputs.push(sub.eval_output(own, x)?);
        for &target in sub.outputs.keys().filter(|&&t| t != own) {
            output_blocks.entry(target).or_default().push(sub.eval_output(target, x)?);
        }
    }
    let sys = FiniteSystem {
        states: points.iter().map(|p| p.index.clone()).collect(),
        initial: (0..values.len()).collect(),
        values,
        outputs,
        secret,
        inputs,
        internal,
        output_blocks,
        transitions,
    };
    sys.validate()?;
    Ok(sys)
}

fn internal_alphabets(
    sub: &SubsystemSpec,
    q: &QuantParams,
    neighbor: &[Vec<Vec<f64>>],
) -> Result<Vec<InternalAlphabet>> {
    let nb = sub.internal.len();
    let phi = if q.phi.is_empty() { vec![0.0; nb] } else { q.phi.clone() };
    if phi.len() != nb {
        return Err(Error::DimensionMismatch { expected: nb, got: phi.len() });
    }
    let mut out = Vec::with_capacity(nb);
    for (k, (b, &f)) in sub.internal.iter().zip(&phi).enumerate() {
        let values = if f > 0.0 {
            let set = b.set.as_ref().ok_or_else(|| {
                Error::Quantization(format!(
                    "subsystem {}: φ > 0 on the block from {} needs internal_set.{}",
                    sub.id,
                    b.from + 1,
                    b.from + 1
                ))
            })?;
            let span = boxspan(set)?;
            if f > span * (1.0 + LATTICE_TOL) {
                return Err(Error::Quantization(format!("subsystem {}: φ = {f} exceeds span(W) = {span}", sub.id)));
            }
            match quantize_uniform(set, f)? {
                GridSet::Finite(g) => g.points().iter().map(|p| p.value.clone()).collect(),
                GridSet::Continuous(_) => unreachable!(),
            }
        } else if f == 0.0 {
            neighbor.get(k).cloned().ok_or_else(|| {
                Error::Quantization(format!(
                    "subsystem {}: block from {} has φ = 0 but no neighbor output values",
                    sub.id,
                    b.from + 1
                ))
            })?
        } else {
            return Err(Error::Quantization(format!("subsystem {}: φ must be non-negative", sub.id)));
        };
        if values.is_empty() {
            return Err(Error::Quantization(format!("subsystem {}: empty internal alphabet", sub.id)));
        }
        out.push(InternalAlphabet { from: b.from, phi: f, values });
    }
    Ok(out)
}

/// Product of vector alphabets, concatenating members; first factor most significant.
pub(crate) fn product_concat(factors: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let mut acc: Vec<Vec<f64>> = vec![Vec::new()];
    for f in factors {
        acc = acc
            .iter()
            .flat_map(|prefix| {
                f.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.extend_from_slice(v);
                    p
                })
            })
            .collect();
    }
    acc
}
