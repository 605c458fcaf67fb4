//! Compositional choice of the local precisions `(ϖ_i, ϑ_i)` and the
//! internal-input quantization `φ_ij`.
//!
//! Bottom components of the shrinking interconnection graph are handled
//! first. In the first pass each bottom component targets the requested
//! precision; later components are limited by the budgets `ϑ_j − φ_ji` of
//! their already-designed successors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinf::MonotoneFn;
use crate::model::NetworkSpec;
use crate::opacity::Notion;

use super::graph::{tarjan_scc, SccDecomposition};
use super::quant::{max_eta, min_theta};
use super::small_gain::{check_sigma, check_small_gain, find_sigma, GainMatrix, SmallGainCheck};

/// Relative slack for the post-design consistency checks.
const POST_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignOptions {
    pub notion: Notion,
    /// Fraction of the strict upper bound used for every `φ_ij` (0 ≤ f < 1).
    pub phi_fraction: f64,
    /// Fraction of `ρ_int⁻¹ ∘ κ(ϖ_i)` capping `ϑ_i` in singleton components.
    pub theta_fraction: f64,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self { notion: Notion::Init, phi_fraction: 0.0, theta_fraction: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalDesign {
    pub subsystem: usize,
    pub varpi: f64,
    pub vartheta: f64,
    pub sigma: MonotoneFn,
    /// Largest admissible state quantization with `μ = 0`.
    pub eta_max: f64,
    /// Smallest admissible secret-set inflation (0 for the initial-state notion).
    pub theta_min: f64,
    pub pass: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiEntry {
    pub to: usize,
    pub from: usize,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub varpi: f64,
    pub epsilon: f64,
    pub options: DesignOptions,
    /// Strongly connected components, 1-based.
    pub components: Vec<Vec<usize>>,
    pub small_gain: Vec<SmallGainCheck>,
    pub subsystems: Vec<LocalDesign>,
    pub phi: Vec<PhiEntry>,
    pub notes: Vec<String>,
}

impl DesignResult {
    pub fn varpi_of(&self, i: usize) -> f64 {
        self.subsystems[i].varpi
    }

    pub fn vartheta_of(&self, i: usize) -> f64 {
        self.subsystems[i].vartheta
    }

    /// `φ_ij` for 0-based `i`, `j`; zero when the pair is not an edge.
    pub fn phi_of(&self, i: usize, j: usize) -> f64 {
        self.phi.iter().find(|p| p.to == i + 1 && p.from == j + 1).map_or(0.0, |p| p.phi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionViolation {
    pub to: usize,
    pub from: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Checks `α_j⁻¹(ϖ_j) + φ_ij ≤ ϑ_i` on every edge.
pub fn check_composability(d: &DesignResult, net: &NetworkSpec) -> Result<Vec<CompositionViolation>> {
    let mut out = Vec::new();
    for &(j, i) in &net.edges {
        let lhs = net.subsystems[j].certificate.alpha_inverse()?.eval(d.varpi_of(j))? + d.phi_of(i, j);
        let rhs = d.vartheta_of(i);
        if lhs > rhs + POST_TOL * rhs.abs().max(1.0) {
            out.push(CompositionViolation { to: i + 1, from: j + 1, lhs, rhs });
        }
    }
    Ok(out)
}

/// Per-component σ: user-supplied when every member declares one, otherwise
/// computed for linear gains.
fn component_sigma(net: &NetworkSpec, g: &GainMatrix) -> Result<(SmallGainCheck, Vec<MonotoneFn>)> {
    let user: Option<Vec<MonotoneFn>> =
        g.members.iter().map(|&i| net.subsystems[i].certificate.sigma.clone()).collect();
    match check_small_gain(g) {
        Ok(check) => {
            if let Some((cycle, product)) = check.witness.clone() {
                return Err(Error::SmallGainViolated { cycle, product });
            }
            let sigma = match user {
                Some(s) => {
                    check_sigma(g, &s)?;
                    s
                }
                None => find_sigma(g)?,
            };
            Ok((check, sigma))
        }
        Err(Error::NonLinearGain(msg)) => {
            let s =
                user.ok_or_else(|| Error::NonLinearGain(format!("{msg}; supply sigma functions for this component")))?;
            check_sigma(g, &s)?;
            let check = SmallGainCheck { holds: true, cycles_checked: 0, max_cycle_mean: None, witness: None };
            Ok((check, s))
        }
        Err(e) => Err(e),
    }
}

struct Work<'a> {
    net: &'a NetworkSpec,
    opts: DesignOptions,
    varpi: Vec<f64>,
    vartheta: Vec<f64>,
    /// φ[i][j]
    phi: Vec<Vec<f64>>,
}

impl Work<'_> {
    fn alpha_inv(&self, j: usize) -> Result<MonotoneFn> {
        self.net.subsystems[j].certificate.alpha_inverse()
    }

    /// `ρ_int,i⁻¹ ∘ κ_i(ϖ_i)`, infinite when `ρ_int,i` is zero.
    fn theta_bound(&self, i: usize) -> Result<f64> {
        let c = &self.net.subsystems[i].certificate;
        if c.rho_int.is_zero() {
            return Ok(f64::INFINITY);
        }
        c.rho_int.inverse()?.eval(c.kappa.eval(self.varpi[i])?)
    }

    /// `ϑ_i` and in-component `φ_ij` for a component whose `ϖ` are set.
    fn inner_parameters(&mut self, members: &[usize], line: u32) -> Result<()> {
        if members.len() == 1 {
            let i = members[0];
            let bound = self.theta_bound(i)?;
            self.vartheta[i] =
                if bound.is_infinite() { self.varpi[i] } else { self.varpi[i].min(self.opts.theta_fraction * bound) };
            if !(self.vartheta[i] > 0.0) {
                return Err(Error::InfeasibleDesign {
                    line: line + 2,
                    message: format!("no positive ϑ_{} below {bound}", i + 1),
                });
            }
            return Ok(());
        }
        for &i in members {
            let preds: Vec<usize> = self.net.preds(i).into_iter().filter(|j| members.contains(j)).collect();
            let mut reach = Vec::with_capacity(preds.len());
            for &j in &preds {
                reach.push(self.alpha_inv(j)?.eval(self.varpi[j])?);
            }
            let top = reach.iter().copied().fold(0.0, f64::max);
            let bound = self.theta_bound(i)? - top;
            if !(bound > 0.0) {
                return Err(Error::InfeasibleDesign {
                    line,
                    message: format!("subsystem {}: ρ_int⁻¹∘κ(ϖ) − max α_j⁻¹(ϖ_j) = {bound} is not positive", i + 1),
                });
            }
            let step = if bound.is_finite() { bound } else { top };
            let phi = self.opts.phi_fraction * step;
            let mut theta: f64 = 0.0;
            for (&j, &r) in preds.iter().zip(&reach) {
                self.phi[i][j] = phi;
                theta = theta.max(r + phi);
            }
            self.vartheta[i] = theta;
        }
        Ok(())
    }

    /// `φ_ij = f·ϑ_i` for predecessors outside the component.
    fn outer_phi(&mut self, members: &[usize]) {
        for &i in members {
            for j in self.net.preds(i) {
                if !members.contains(&j) {
                    self.phi[i][j] = self.opts.phi_fraction * self.vartheta[i];
                }
            }
        }
    }

    /// `min_j (ϑ_j − φ_ji)` over successors outside the component.
    fn budget(&self, i: usize, members: &[usize]) -> Option<f64> {
        self.net
            .succs(i)
            .into_iter()
            .filter(|j| !members.contains(j))
            .map(|j| self.vartheta[j] - self.phi[j][i])
            .reduce(f64::min)
    }
}

/// Designs `(ϖ_i, ϑ_i, φ_ij)` for a network precision `varpi`.
pub fn design_parameters(net: &NetworkSpec, varpi: f64, opts: DesignOptions) -> Result<DesignResult> {
    if !(varpi > 0.0 && varpi.is_finite()) {
        return Err(Error::InfeasibleDesign { line: 1, message: format!("precision {varpi} must be positive") });
    }
    if !(0.0..1.0).contains(&opts.phi_fraction) || !(opts.theta_fraction > 0.0 && opts.theta_fraction < 1.0) {
        return Err(Error::InfeasibleDesign {
            line: 1,
            message: "slack fractions must satisfy 0 ≤ phi < 1 and 0 < theta < 1".into(),
        });
    }
    let n = net.len();
    let scc: SccDecomposition = tarjan_scc(n, &net.edges)?;
    let mut sigma = vec![MonotoneFn::identity(); n];
    let mut checks = Vec::new();
    for comp in &scc.components {
        let g = GainMatrix::of_component(net, comp)?;
        let (check, s) = component_sigma(net, &g)?;
        for (&i, f) in comp.iter().zip(s) {
            sigma[i] = f;
        }
        checks.push(check);
    }

    let mut w = Work { net, opts, varpi: vec![0.0; n], vartheta: vec![0.0; n], phi: vec![vec![0.0; n]; n] };
    let mut pass_of = vec![0; n];
    let mut notes = Vec::new();
    let mut done = vec![false; scc.components.len()];
    let mut pass = 0;
    while done.iter().any(|d| !d) {
        pass += 1;
        let bottom: Vec<usize> =
            (0..scc.components.len()).filter(|&k| !done[k] && scc.successors(k).all(|s| done[s])).collect();
        for &k in &bottom {
            let members = &scc.components[k];
            let first = pass == 1;
            if members.len() == 1 {
                let i = members[0];
                w.varpi[i] = if first {
                    varpi
                } else {
                    let b = w.budget(i, members).unwrap_or(f64::INFINITY);
                    if !(b > 0.0) {
                        return Err(Error::InfeasibleDesign {
                            line: 19,
                            message: format!("subsystem {}: successor budget {b} is not positive", i + 1),
                        });
                    }
                    let cap = net.subsystems[i].certificate.alpha()?.eval(b)?;
                    if cap < varpi {
                        notes.push(format!("ϖ_{} limited to {cap} by its successors", i + 1));
                    }
                    cap.min(varpi)
                };
                w.inner_parameters(members, if first { 9 } else { 17 })?;
            } else {
                let mut r = f64::INFINITY;
                for &i in members {
                    r = r.min(sigma[i].inverse()?.eval(varpi)?);
                    if first {
                        continue;
                    }
                    if let Some(b) = w.budget(i, members) {
                        if !(b > 0.0) {
                            return Err(Error::InfeasibleDesign {
                                line: 16,
                                message: format!("subsystem {}: successor budget {b} is not positive", i + 1),
                            });
                        }
                        let alpha_b = net.subsystems[i].certificate.alpha()?.eval(b)?;
                        let ri = sigma[i].inverse()?.eval(alpha_b)?;
                        if ri < r {
                            notes.push(format!(
                                "component {:?}: r limited to {ri} by successors of {}",
                                members.iter().map(|v| v + 1).collect::<Vec<_>>(),
                                i + 1
                            ));
                        }
                        r = r.min(ri);
                    }
                }
                for &i in members {
                    w.varpi[i] = sigma[i].eval(r)?;
                }
                w.inner_parameters(members, if first { 9 } else { 17 })?;
            }
            w.outer_phi(members);
            for &i in members {
                pass_of[i] = pass;
            }
        }
        for k in bottom {
            done[k] = true;
        }
    }

    let mut subsystems = Vec::with_capacity(n);
    for i in 0..n {
        let sub = &net.subsystems[i];
        let theta_min = match opts.notion {
            Notion::Init => 0.0,
            _ => min_theta(&sub.certificate, w.varpi[i])?,
        };
        subsystems.push(LocalDesign {
            subsystem: i + 1,
            varpi: w.varpi[i],
            vartheta: w.vartheta[i],
            sigma: sigma[i].clone(),
            eta_max: max_eta(sub, w.varpi[i], w.vartheta[i], 0.0)?,
            theta_min,
            pass: pass_of[i],
        });
    }
    let phi = net.edges.iter().map(|&(j, i)| PhiEntry { to: i + 1, from: j + 1, phi: w.phi[i][j] }).collect();
    let epsilon = super::quant::network_epsilon(net, varpi)?;
    let result = DesignResult {
        varpi,
        epsilon,
        options: opts,
        components: scc.components.iter().map(|c| c.iter().map(|v| v + 1).collect()).collect(),
        small_gain: checks,
        subsystems,
        phi,
        notes,
    };
    post_check(&result, net)?;
    Ok(result)
}

fn post_check(d: &DesignResult, net: &NetworkSpec) -> Result<()> {
    for (i, l) in d.subsystems.iter().enumerate() {
        let c = &net.subsystems[i].certificate;
        if !(l.varpi > 0.0 && l.vartheta > 0.0) {
            return Err(Error::Internal(format!("subsystem {}: non-positive local parameters", i + 1)));
        }
        if c.kappa.eval(l.varpi)? <= c.rho_int.eval(l.vartheta)? {
            return Err(Error::Internal(format!("subsystem {}: κ(ϖ) ≤ ρ_int(ϑ)", i + 1)));
        }
    }
    if let Some(v) = check_composability(d, net)?.first() {
        return Err(Error::Internal(format!(
            "edge {} -> {} violates composability: {} > {}",
            v.from, v.to, v.lhs, v.rhs
        )));
    }
    let top = d.subsystems.iter().map(|l| l.varpi).fold(0.0, f64::max);
    if (top - d.varpi).abs() > POST_TOL * d.varpi {
        return Err(Error::Internal(format!("max ϖ_i = {top} differs from ϖ = {}", d.varpi)));
    }
    Ok(())
}
