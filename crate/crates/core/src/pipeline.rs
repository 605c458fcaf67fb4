//! End-to-end run: design, abstract, compose, verify and lift the verdict.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::abstraction::build::{input_alphabet, state_grid};
use crate::abstraction::{build_abstraction, compose, neighbor_outputs, FiniteSystem, QuantParams, DEFAULT_MAX_STATES};
use crate::design::{design_parameters, eta_bound, span_limit, DesignOptions, DesignResult, LocalDesign};
use crate::error::{Error, Result};
use crate::model::{parse_model, NetworkSpec, SubsystemSpec};
use crate::opacity::{transfer_bound, verify, Notion, OpacityVerdict};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest per-subsystem transition table (states × labels) the pipeline builds.
pub const DEFAULT_MAX_CELLS: usize = 50_000_000;

/// Last stage a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Design,
    Abstract,
    Compose,
    Verify,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Design => "design",
            Stage::Abstract => "abstract",
            Stage::Compose => "compose",
            Stage::Verify => "verify",
        })
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "design" => Ok(Stage::Design),
            "abstract" => Ok(Stage::Abstract),
            "compose" => Ok(Stage::Compose),
            "verify" => Ok(Stage::Verify),
            _ => Err(format!("unknown stage `{s}` (expected design, abstract, compose or verify)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub varpi: f64,
    pub notion: Notion,
    pub delta_hat: f64,
    pub until: Stage,
    /// Replaces the chosen `η` of every subsystem.
    pub eta: Option<f64>,
    pub design: DesignOptions,
    pub max_states: usize,
    pub max_cells: usize,
}

impl PipelineOptions {
    pub fn new(varpi: f64, notion: Notion, delta_hat: f64) -> Self {
        Self {
            varpi,
            notion,
            delta_hat,
            until: Stage::Verify,
            eta: None,
            design: DesignOptions { notion, ..DesignOptions::default() },
            max_states: DEFAULT_MAX_STATES,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSize {
    pub states: usize,
    pub labels: usize,
    pub transitions: usize,
    pub initial: usize,
    pub secret: usize,
}

impl SystemSize {
    pub fn of(t: &FiniteSystem) -> Self {
        Self {
            states: t.len(),
            labels: t.label_count(),
            transitions: t.transition_count(),
            initial: t.initial.len(),
            secret: t.secret.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: Vec<String>,
    pub model_sha256: String,
    pub varpi: f64,
    pub notion: Notion,
    pub delta_hat: f64,
    pub stage: Stage,
    pub design: DesignResult,
    pub quantization: Vec<QuantParams>,
    pub abstraction_sizes: Vec<SystemSize>,
    pub composed_size: Option<SystemSize>,
    pub verdict: Option<OpacityVerdict>,
    /// `δ̂ + 2ε`, the guarantee on the concrete network.
    pub lifted_delta: Option<f64>,
    /// Seconds per stage; absent unless requested, so reports stay reproducible.
    pub timings: Option<BTreeMap<String, f64>>,
}

/// Report plus the systems built on the way (for DOT export).
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub abstractions: Vec<FiniteSystem>,
    pub composed: Option<FiniteSystem>,
    pub timings: BTreeMap<String, f64>,
}

/// Largest value `d·10^e ≤ x` with a single significant digit `d`.
pub fn round_down_1sig(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return x;
    }
    let e = x.log10().floor() as i32;
    let (m, pow) = if e < 0 { (x * 10f64.powi(-e), None) } else { (x / 10f64.powi(e), Some(10f64.powi(e))) };
    let d = (m * (1.0 + 1e-9)).floor().clamp(1.0, 9.0);
    match pow {
        Some(p) => d * p,
        None => d / 10f64.powi(-e),
    }
}

/// Default quantization of one subsystem for its local design.
///
/// `θ = 0` for initial-state opacity and `α̲⁻¹(ϖᵢ)` otherwise; `μ = 0` for
/// finite or absent input sets, else the `ρ_ext` share of half the budget;
/// `η` is the admissible bound rounded down to one significant digit and
/// capped by the set spans.
pub fn choose_quant(sub: &SubsystemSpec, local: &LocalDesign, phi: Vec<f64>, notion: Notion) -> Result<QuantParams> {
    let cert = &sub.certificate;
    let theta = if notion == Notion::Init { 0.0 } else { local.theta_min };
    let mu = match &sub.input_set {
        Some(u) if !u.is_finite_points() => {
            let budget = cert.kappa.eval(local.varpi)? - cert.rho_int.eval(local.vartheta)?;
            if cert.rho_ext.is_zero() {
                round_down_1sig(crate::geometry::boxspan(u)?)
            } else {
                round_down_1sig(cert.rho_ext.inverse()?.eval(0.5 * budget)?)
            }
        }
        _ => 0.0,
    };
    let eta = round_down_1sig(eta_bound(cert, local.varpi, local.vartheta, mu)?.min(span_limit(sub)?));
    Ok(QuantParams { eta, theta, mu, phi })
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage { stage: stage.into(), source: Box::new(e) })
}

/// Runs the pipeline on a model file.
pub fn run_pipeline(path: impl AsRef<Path>, opts: &PipelineOptions) -> Result<RunOutcome> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
    let net = staged("parse", parse_model(&text))?;
    run_pipeline_on(&net, &hex::encode(Sha256::digest(&bytes)), opts)
}

pub fn run_pipeline_on(net: &NetworkSpec, model_sha256: &str, opts: &PipelineOptions) -> Result<RunOutcome> {
    let mut timings = BTreeMap::new();
    let clock = Instant::now();
    let design = staged("design", design_parameters(net, opts.varpi, opts.design))?;
    timings.insert("design".to_string(), clock.elapsed().as_secs_f64());

    let quant = staged(
        "design",
        net.subsystems
            .iter()
            .enumerate()
            .map(|(i, sub)| {
                let phi = sub.internal.iter().map(|b| design.phi_of(i, b.from)).collect();
                let mut q = choose_quant(sub, &design.subsystems[i], phi, opts.notion)?;
                if let Some(eta) = opts.eta {
                    q.eta = eta;
                }
                Ok(q)
            })
            .collect::<Result<Vec<_>>>(),
    )?;

    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        command: Vec::new(),
        model_sha256: model_sha256.to_string(),
        varpi: opts.varpi,
        notion: opts.notion,
        delta_hat: opts.delta_hat,
        stage: Stage::Design,
        design,
        quantization: quant,
        abstraction_sizes: Vec::new(),
        composed_size: None,
        verdict: None,
        lifted_delta: None,
        timings: None,
    };
    let mut outcome =
        RunOutcome { report: report.clone(), abstractions: Vec::new(), composed: None, timings: BTreeMap::new() };
    if opts.until == Stage::Design {
        outcome.report = report;
        outcome.timings = timings;
        return Ok(outcome);
    }

    let clock = Instant::now();
    let etas: Vec<f64> = report.quantization.iter().map(|q| q.eta).collect();
    let mut parts = Vec::with_capacity(net.len());
    for (i, sub) in net.subsystems.iter().enumerate() {
        let q = &report.quantization[i];
        let nb = staged("abstract", neighbor_outputs(net, i, &etas))?;
        staged("abstract", guard_cells(sub, q, &nb, opts.max_cells))?;
        let t = staged("abstract", build_abstraction(sub, q, &nb))?;
        report.abstraction_sizes.push(SystemSize::of(&t));
        parts.push(t);
    }
    timings.insert("abstract".to_string(), clock.elapsed().as_secs_f64());
    report.stage = Stage::Abstract;

    if opts.until >= Stage::Compose {
        let clock = Instant::now();
        let c = staged("compose", compose(&parts, net, opts.max_states))?;
        timings.insert("compose".to_string(), clock.elapsed().as_secs_f64());
        report.composed_size = Some(SystemSize::of(&c));
        report.stage = Stage::Compose;
        if opts.until == Stage::Verify {
            let clock = Instant::now();
            let v = staged("verify", verify(&c, opts.notion, opts.delta_hat))?;
            timings.insert("verify".to_string(), clock.elapsed().as_secs_f64());
            if v.opaque {
                report.lifted_delta = Some(transfer_bound(opts.delta_hat, report.design.epsilon));
            }
            report.verdict = Some(v);
            report.stage = Stage::Verify;
        }
        outcome.composed = Some(c);
    }
    outcome.report = report;
    outcome.abstractions = parts;
    outcome.timings = timings;
    Ok(outcome)
}

fn guard_cells(sub: &SubsystemSpec, q: &QuantParams, nb: &[Vec<Vec<f64>>], limit: usize) -> Result<()> {
    let states = state_grid(sub, q.eta)?.len() as u128;
    let inputs = input_alphabet(sub, q.mu)?.len() as u128;
    let mut labels = inputs;
    for (k, b) in sub.internal.iter().enumerate() {
        let phi = q.phi.get(k).copied().unwrap_or(0.0);
        let n = if phi > 0.0 {
            match &b.set {
                Some(set) => crate::geometry::quantize_uniform(set, phi)?.as_finite().map_or(1, |g| g.len()) as u128,
                None => 1,
            }
        } else {
            nb.get(k).map_or(1, Vec::len) as u128
        };
        labels = labels.saturating_mul(n);
    }
    let cells = states.saturating_mul(labels);
    if cells > limit as u128 {
        return Err(Error::TooLarge(cells));
    }
    Ok(())
}
