use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::abstraction::build::{input_alphabet, state_grid};
use crate::abstraction::{format_vector, QuantParams};
use crate::design::DesignResult;
use crate::error::{Error, Result};
use crate::geometry::{boxspan, linf, quantize_uniform, FiniteGrid, GridSet};
use crate::model::NetworkSpec;
use crate::parallel::with_pool;

use super::report::{Tally, SAMPLE_TOL};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComposedReport {
    pub varpi: f64,
    /// Sampled `(x, x̂)` pairs with `Ṽ(x, x̂) ≤ ϖ`.
    pub pairs: usize,
    /// Samples for which some subsystem had no grid point with `Vᵢ ≤ ϖᵢ`.
    pub uncovered: usize,
    /// `mismatch.i`: `‖wᵢ − ŵᵢ‖ ≤ ϑᵢ`; `3a`, `3b`: successor pairs stay in the level set.
    pub clauses: Tally,
    /// Concrete steps leaving the state set; counted, not held against any clause.
    pub domain_exits: usize,
    pub sampled: bool,
}

impl ComposedReport {
    pub fn passed(&self) -> bool {
        self.clauses.failures() == 0
    }
}

/// One subsystem's abstraction, expanded on demand: grid successors are
/// computed per visited cell instead of for the whole grid.
struct LazyPart {
    grid: FiniteGrid,
    eta: f64,
    /// `None`: `μ = 0` on a continuous input set, so `û = u`.
    inputs: Option<Vec<Vec<f64>>>,
    /// Per internal block: `None` for `φ = 0` (exact neighbor output), else the `φ`-grid of `W`.
    blocks: Vec<Option<(FiniteGrid, f64)>>,
    varpi: f64,
    vartheta: f64,
}

impl LazyPart {
    fn new(net: &NetworkSpec, i: usize, q: &QuantParams, design: &DesignResult) -> Result<Self> {
        let sub = &net.subsystems[i];
        let inputs = match &sub.input_set {
            Some(u) if q.mu == 0.0 && !u.is_finite_points() => None,
            _ => Some(input_alphabet(sub, q.mu)?),
        };
        let mut blocks = Vec::new();
        for (k, b) in sub.internal.iter().enumerate() {
            let phi = q.phi.get(k).copied().unwrap_or(0.0);
            if phi == 0.0 {
                blocks.push(None);
                continue;
            }
            let set = b
                .set
                .as_ref()
                .ok_or_else(|| Error::Quantization(format!("subsystem {}: φ > 0 needs an internal set", sub.id)))?;
            if phi > boxspan(set)? {
                return Err(Error::Quantization(format!("subsystem {}: φ = {phi} exceeds span(W)", sub.id)));
            }
            match quantize_uniform(set, phi)? {
                GridSet::Finite(g) => blocks.push(Some((g, phi))),
                GridSet::Continuous(_) => unreachable!(),
            }
        }
        Ok(Self {
            grid: state_grid(sub, q.eta)?,
            eta: q.eta,
            inputs,
            blocks,
            varpi: design.varpi_of(i),
            vartheta: design.vartheta_of(i),
        })
    }
}

/// Sample-based check of the composed function `Ṽ = maxᵢ (ϖ/ϖᵢ)·Vᵢ` between
/// the concrete network and the interconnection of grid abstractions with
/// parameters `quant`: successor pairs stay within `Ṽ ≤ ϖ`, and every
/// internal input mismatch stays within `ϑᵢ`.
pub fn validate_composed_function<R: Rng + ?Sized>(
    net: &NetworkSpec,
    design: &DesignResult,
    quant: &[QuantParams],
    samples: usize,
    rng: &mut R,
) -> Result<ComposedReport> {
    if quant.len() != net.len() {
        return Err(Error::DimensionMismatch { expected: net.len(), got: quant.len() });
    }
    let parts = (0..net.len()).map(|i| LazyPart::new(net, i, &quant[i], design)).collect::<Result<Vec<_>>>()?;
    let varpi = design.varpi;

    // Pre-draw everything random so the parallel phase is deterministic.
    struct Draw {
        x: Vec<Vec<f64>>,
        u: Vec<Vec<f64>>,
        pick: Vec<u64>,
    }
    let draws: Vec<Draw> = (0..samples)
        .map(|_| Draw {
            x: net.subsystems.iter().map(|s| s.state_set.sample(rng)).collect(),
            u: net.subsystems.iter().map(|s| s.input_set.as_ref().map_or_else(Vec::new, |u| u.sample(rng))).collect(),
            pick: (0..net.len()).map(|_| rng.gen()).collect(),
        })
        .collect();

    let results: Vec<Result<(Tally, usize, usize, usize)>> = with_pool(|| {
        draws
            .par_iter()
            .map(|d| {
                let mut tally = Tally::default();
                let mut domain = 0;
                // abstract partner: a random grid point with Vᵢ ≤ ϖᵢ per subsystem
                let mut xh: Vec<Vec<f64>> = Vec::with_capacity(net.len());
                for (i, p) in parts.iter().enumerate() {
                    let cert = &net.subsystems[i].certificate;
                    let radius = cert.alpha_lower.inverse()?.eval(p.varpi)?;
                    let cand: Vec<usize> = p
                        .grid
                        .near(&d.x[i], radius)
                        .into_iter()
                        .filter(|&k| cert.metric.eval(&d.x[i], &p.grid.points()[k].value) <= p.varpi + SAMPLE_TOL)
                        .collect();
                    if cand.is_empty() {
                        return Ok((tally, 0, 1, 0));
                    }
                    xh.push(p.grid.points()[cand[(d.pick[i] % cand.len() as u64) as usize]].value.clone());
                }
                let xs: Vec<&[f64]> = d.x.iter().map(Vec::as_slice).collect();
                let xhs: Vec<&[f64]> = xh.iter().map(Vec::as_slice).collect();
                let ctx = || {
                    format!(
                        "x = [{}], x̂ = [{}]",
                        d.x.iter().map(|v| format_vector(v)).collect::<Vec<_>>().join("; "),
                        xh.iter().map(|v| format_vector(v)).collect::<Vec<_>>().join("; ")
                    )
                };
                let scale = |i: usize| if parts[i].varpi > 0.0 { varpi / parts[i].varpi } else { f64::INFINITY };

                for (i, p) in parts.iter().enumerate() {
                    let sub = &net.subsystems[i];
                    let v = |a: &[f64], b: &[f64]| sub.certificate.metric.eval(a, b);
                    let w = net.internal_input(i, &xs)?;
                    let w_hats = admissible_internal(net, i, p, &xhs)?;
                    for wh in &w_hats {
                        tally.record(&format!("mismatch.{}", i + 1), linf(&w, wh) - p.vartheta, ctx);
                    }
                    let u_hats: Vec<Vec<f64>> = match &p.inputs {
                        None => vec![d.u[i].clone()],
                        Some(us) => us.clone(),
                    };
                    // 3a: the concrete successor under the sampled input is matched
                    match sub.step(xs[i], &d.u[i], &w) {
                        Ok(xd) if sub.state_set.contains(&xd) => {
                            let mut best = f64::INFINITY;
                            for uh in &u_hats {
                                for wh in &w_hats {
                                    let c = sub.eval_dynamics(xhs[i], uh, wh)?;
                                    for k in p.grid.near(&c, p.eta) {
                                        best = best.min(v(&xd, &p.grid.points()[k].value));
                                    }
                                }
                            }
                            tally.record("3a", scale(i) * best - varpi, ctx);
                        }
                        _ => domain += 1,
                    }
                    // 3b: every abstract successor is matched by the concrete step under u = û
                    for uh in &u_hats {
                        let xd = match sub.step(xs[i], uh, &w) {
                            Ok(xd) if sub.state_set.contains(&xd) => xd,
                            _ => {
                                domain += 1;
                                continue;
                            }
                        };
                        for wh in &w_hats {
                            let c = sub.eval_dynamics(xhs[i], uh, wh)?;
                            for k in p.grid.near(&c, p.eta) {
                                tally.record("3b", scale(i) * v(&xd, &p.grid.points()[k].value) - varpi, ctx);
                            }
                        }
                    }
                }
                Ok((tally, 1, 0, domain))
            })
            .collect()
    });

    let mut tally = Tally::with(&["3a", "3b"]);
    let (mut pairs, mut uncovered, mut domain) = (0, 0, 0);
    for r in results {
        let (t, p, u, dm) = r?;
        tally = tally.merge(t);
        pairs += p;
        uncovered += u;
        domain += dm;
    }
    Ok(ComposedReport { varpi, pairs, uncovered, clauses: tally, domain_exits: domain, sampled: true })
}

/// Every `ŵᵢ` the interconnection admits at the abstract state `x̂`.
fn admissible_internal(net: &NetworkSpec, i: usize, p: &LazyPart, xh: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
    let mut acc: Vec<Vec<f64>> = vec![Vec::new()];
    for (b, grid) in net.subsystems[i].internal.iter().zip(&p.blocks) {
        let y = net.subsystems[b.from].eval_output(i, xh[b.from])?;
        let choices: Vec<Vec<f64>> = match grid {
            None => vec![y.clone()],
            Some((g, phi)) => g.near(&y, *phi).into_iter().map(|k| g.points()[k].value.clone()).collect(),
        };
        if choices.is_empty() {
            return Err(Error::IllPosed(format!(
                "output {} of subsystem {} has no internal grid value within φ",
                format_vector(&y),
                b.from + 1
            )));
        }
        acc = acc
            .iter()
            .flat_map(|pre| {
                choices.iter().map(move |c| {
                    let mut v = pre.clone();
                    v.extend_from_slice(c);
                    v
                })
            })
            .collect();
    }
    Ok(acc)
}
