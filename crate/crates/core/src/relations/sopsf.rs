use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::abstraction::{format_vector, FiniteSystem};
use crate::error::Result;
use crate::geometry::linf;
use crate::model::{IssCertificate, SubsystemSpec};
use crate::opacity::Notion;
use crate::parallel::with_pool;

use super::report::{Tally, SAMPLE_TOL};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SopsfReport {
    pub subsystem: usize,
    pub notion: Notion,
    pub varpi: f64,
    pub vartheta: f64,
    /// Concrete states examined: grid points, boundary points and uniform samples.
    pub concrete_states: usize,
    /// `(x, x̂)` pairs with `V(x, x̂) ≤ ϖ`.
    pub related_pairs: usize,
    pub clauses: Tally,
    /// Concrete steps leaving the state set. Such steps are not runs of the
    /// system, so they are counted but not held against any clause.
    pub domain_exits: usize,
    pub sampled: bool,
}

impl SopsfReport {
    /// No counterexample was found. Sampling can refute but not certify.
    pub fn passed(&self) -> bool {
        self.clauses.failures() == 0
    }
}

fn clause_names(notion: Notion) -> &'static [&'static str] {
    match notion {
        Notion::Init => &["1a", "1b", "2", "3a", "3b"],
        Notion::Current => &["1", "2", "3a", "3b", "3c", "3d"],
        Notion::Infinite => &["1a", "1b", "1c", "2", "3a", "3b", "3c", "3d"],
    }
}

/// Concrete inputs to try: the singleton or grid inputs plus corners and random points.
fn concrete_inputs<R: Rng + ?Sized>(sub: &SubsystemSpec, abs: &FiniteSystem, rng: &mut R) -> Vec<Vec<f64>> {
    let Some(u) = &sub.input_set else { return vec![Vec::new()] };
    let mut out = abs.inputs.clone();
    if !u.is_finite_points() {
        out.extend(u.boundary_points());
        out.extend((0..8).map(|_| u.sample(rng)));
    }
    out
}

/// Concrete internal inputs near each abstract one: the point itself, the
/// corners of its `ϑ`-ball and a random point of the ball, kept inside `W`.
fn concrete_internal<R: Rng + ?Sized>(
    sub: &SubsystemSpec,
    abs: &FiniteSystem,
    vartheta: f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let nw = abs.internal_count();
    let dim = sub.internal_dim();
    let mut out = Vec::new();
    for k in 0..nw {
        let w_hat = internal_value(abs, k);
        out.push(w_hat.clone());
        if dim <= 6 {
            for mask in 0..(1usize << dim) {
                out.push((0..dim).map(|d| w_hat[d] + if mask >> d & 1 == 1 { vartheta } else { -vartheta }).collect());
            }
        }
        out.push(w_hat.iter().map(|v| v + rng.gen_range(-1.0..=1.0) * vartheta).collect());
    }
    out.retain(|w| in_internal_sets(sub, w));
    out
}

fn in_internal_sets(sub: &SubsystemSpec, w: &[f64]) -> bool {
    let mut at = 0;
    for b in &sub.internal {
        if let Some(set) = &b.set {
            if !set.contains(&w[at..at + b.dim]) {
                return false;
            }
        }
        at += b.dim;
    }
    true
}

/// The concatenated internal input of label component `k`.
pub(crate) fn internal_value(abs: &FiniteSystem, mut k: usize) -> Vec<f64> {
    let mut parts = Vec::with_capacity(abs.internal.len());
    for b in abs.internal.iter().rev() {
        parts.push(&b.values[k % b.values.len()]);
        k /= b.values.len();
    }
    parts.into_iter().rev().flatten().copied().collect()
}

/// Sample-based check of the opacity-preserving simulation function
/// conditions for `V = G` (the certificate's pair function) between `sub` and
/// its abstraction `abs`, for every `w`, `ŵ` with `‖w − ŵ‖ ≤ ϑ`.
#[allow(clippy::too_many_arguments)]
pub fn validate_sopsf<R: Rng + ?Sized>(
    sub: &SubsystemSpec,
    abs: &FiniteSystem,
    cert: &IssCertificate,
    varpi: f64,
    vartheta: f64,
    notion: Notion,
    samples: usize,
    rng: &mut R,
) -> Result<SopsfReport> {
    let alpha = cert.alpha()?;
    let own = sub.id - 1;
    let mut xs: Vec<Vec<f64>> = abs.values.clone();
    xs.extend(sub.state_set.boundary_points());
    xs.extend((0..samples).map(|_| sub.state_set.sample(rng)));
    let us = concrete_inputs(sub, abs, rng);
    let ws = concrete_internal(sub, abs, vartheta, rng);
    let nw = abs.internal_count();
    let w_hats: Vec<Vec<f64>> = (0..nw).map(|k| internal_value(abs, k)).collect();
    let v = |a: &[f64], b: &[f64]| cert.metric.eval(a, b);
    let secret_hat = abs.secret_mask();
    let check_init = notion != Notion::Current;
    let check_cur = notion != Notion::Init;
    let names = |init: &'static str, cur: &'static str, inf: &'static str| match notion {
        Notion::Init => init,
        Notion::Current => cur,
        Notion::Infinite => inf,
    };

    struct Partial {
        tally: Tally,
        pairs: usize,
        domain: usize,
        best_public: Vec<f64>,
    }

    let parts: Vec<Result<Partial>> = with_pool(|| {
        xs.par_iter()
            .map(|x| {
                let mut p = Partial {
                    tally: Tally::default(),
                    pairs: 0,
                    domain: 0,
                    best_public: vec![f64::INFINITY; abs.len()],
                };
                let in_secret = sub.secret_set.contains(x);
                let hx = sub.eval_output(own, x)?;
                let dist: Vec<f64> = abs.values.iter().map(|xh| v(x, xh)).collect();

                // condition 1
                let best = |pred: &dyn Fn(usize) -> bool| {
                    (0..abs.len())
                        .filter(|&k| abs.is_initial(k) && pred(k))
                        .map(|k| dist[k])
                        .fold(f64::INFINITY, f64::min)
                };
                if check_cur {
                    let m = best(&|_| true) - varpi;
                    p.tally.record(names("", "1", "1a"), m, || format!("x₀ = {}", format_vector(x)));
                }
                if check_init && in_secret {
                    let m = best(&|k| secret_hat[k]) - varpi;
                    p.tally.record(names("1a", "", "1b"), m, || format!("secret x₀ = {}", format_vector(x)));
                }
                if !in_secret {
                    for k in 0..abs.len() {
                        p.best_public[k] = p.best_public[k].min(dist[k]);
                    }
                }

                for xh in 0..abs.len() {
                    // condition 2
                    let d = linf(&hx, &abs.outputs[xh]);
                    p.tally.record("2", alpha.eval(d)? - dist[xh], || {
                        format!("x = {}, x̂ = {}", format_vector(x), abs.state_label(xh))
                    });
                    if dist[xh] > varpi + SAMPLE_TOL {
                        continue;
                    }
                    p.pairs += 1;
                    for w in &ws {
                        for (kw, w_hat) in w_hats.iter().enumerate() {
                            if linf(w, w_hat) > vartheta + SAMPLE_TOL {
                                continue;
                            }
                            let ctx = || {
                                format!(
                                    "x = {}, x̂ = {}, w = {}, ŵ = {}",
                                    format_vector(x),
                                    abs.state_label(xh),
                                    format_vector(w),
                                    format_vector(w_hat)
                                )
                            };
                            // concrete successors for every sampled input
                            let mut succ: Vec<(Vec<f64>, bool)> = Vec::with_capacity(us.len());
                            for u in &us {
                                match sub.step(x, u, w) {
                                    Ok(xd) if sub.state_set.contains(&xd) => {
                                        let s = sub.secret_set.contains(&xd);
                                        succ.push((xd, s));
                                    }
                                    _ => p.domain += 1,
                                }
                            }
                            let abs_succ: Vec<usize> = (0..abs.inputs.len().max(1))
                                .flat_map(|ku| abs.transitions[xh][ku * nw + kw].iter().copied())
                                .collect();
                            // 3a / 3b(current): concrete successors are matched
                            for (xd, s) in &succ {
                                let m = abs_succ.iter().map(|&y| v(xd, &abs.values[y])).fold(f64::INFINITY, f64::min);
                                p.tally.record("3a", m - varpi, ctx);
                                if check_cur && *s {
                                    let m = abs_succ
                                        .iter()
                                        .filter(|&&y| secret_hat[y])
                                        .map(|&y| v(xd, &abs.values[y]))
                                        .fold(f64::INFINITY, f64::min);
                                    p.tally.record("3b", m - varpi, ctx);
                                }
                            }
                            // 3b(init) / 3c: abstract successors are matched; 3d for non-secret ones
                            for &y in &abs_succ {
                                let m = succ.iter().map(|(xd, _)| v(xd, &abs.values[y])).fold(f64::INFINITY, f64::min);
                                p.tally.record(names("3b", "3c", "3c"), m - varpi, ctx);
                                if check_cur && !secret_hat[y] {
                                    let m = succ
                                        .iter()
                                        .filter(|(_, s)| !s)
                                        .map(|(xd, _)| v(xd, &abs.values[y]))
                                        .fold(f64::INFINITY, f64::min);
                                    p.tally.record("3d", m - varpi, ctx);
                                }
                            }
                        }
                    }
                }
                Ok(p)
            })
            .collect()
    });

    let mut tally = Tally::with(clause_names(notion));
    let mut pairs = 0;
    let mut domain = 0;
    let mut best_public = vec![f64::INFINITY; abs.len()];
    for p in parts {
        let p = p?;
        tally = tally.merge(p.tally);
        pairs += p.pairs;
        domain += p.domain;
        for (b, q) in best_public.iter_mut().zip(p.best_public) {
            *b = b.min(q);
        }
    }
    if check_init {
        for k in (0..abs.len()).filter(|&k| abs.is_initial(k) && !secret_hat[k]) {
            tally.record(names("1b", "", "1c"), best_public[k] - varpi, || {
                format!("non-secret x̂₀ = {}", abs.state_label(k))
            });
        }
    }
    tally.0.retain(|k, _| !k.is_empty());
    Ok(SopsfReport {
        subsystem: sub.id,
        notion,
        varpi,
        vartheta,
        concrete_states: xs.len(),
        related_pairs: pairs,
        clauses: tally,
        domain_exits: domain,
        sampled: true,
    })
}
