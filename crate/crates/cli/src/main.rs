//! `opack`: design, build, compose and verify opacity-preserving abstractions
//! of interconnected control systems from TOML model files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use opack_core::abstraction::dot::export_dot;
use opack_core::abstraction::{build_abstraction, build_unchecked, compose, neighbor_outputs, DEFAULT_MAX_STATES};
use opack_core::design::DesignOptions;
use opack_core::model::load_model;
use opack_core::opacity::{transfer_bound, verify};
use opack_core::pipeline::{run_pipeline, Stage, DEFAULT_MAX_CELLS, SCHEMA_VERSION};
use opack_core::relations::{max_relation, validate_sopsf};
use opack_core::{design_parameters, FiniteSystem, NetworkSpec, Notion, PipelineOptions, QuantParams};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "opack", version, about = "Opacity-preserving finite abstractions of interconnected control systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compositional parameter design (local precisions, internal-input steps).
    Design {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite abstraction of one subsystem.
    Abstract {
        #[arg(long)]
        model: PathBuf,
        /// 1-based subsystem id.
        #[arg(long)]
        subsystem: usize,
        /// Quantization "η,θ,μ,φ…" (one φ per internal block; a single φ is broadcast).
        #[arg(long)]
        q: String,
        /// State steps of every subsystem, for the neighbour output values. Defaults to this η.
        #[arg(long, value_delimiter = ',')]
        etas: Option<Vec<f64>>,
        /// Skip the admissible-η check.
        #[arg(long)]
        unchecked: bool,
        #[arg(long)]
        reachable_only: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interconnect subsystem abstractions (given in subsystem order).
    Compose {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        parts: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: usize,
        #[arg(long)]
        reachable_only: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Approximate opacity of a finite system. Exit 0 when opaque, 1 otherwise.
    Verify {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, default_value = "init")]
        notion: Notion,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Relation precision ε; also reports the lifted δ̂ + 2ε.
        #[arg(long)]
        transfer: Option<f64>,
    },
    /// Maximal opacity-preserving simulation relation between two finite systems.
    ValidateRelation {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value = "init")]
        notion: Notion,
        /// Include the related pairs in the report.
        #[arg(long)]
        pairs: bool,
    },
    /// Sample-based check of a subsystem's simulation function against its abstraction.
    ValidateSopsf {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        subsystem: usize,
        #[arg(long)]
        q: String,
        #[arg(long)]
        varpi: f64,
        #[arg(long)]
        vartheta: f64,
        #[arg(long, default_value = "init")]
        notion: Notion,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, value_delimiter = ',')]
        etas: Option<Vec<f64>>,
    },
    /// Design, abstract, compose, verify and lift the verdict.
    Pipeline {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long, default_value_t = 0.0)]
        delta_hat: f64,
        /// Last stage to run.
        #[arg(long, default_value = "verify")]
        until: Stage,
        /// Overrides the chosen state step of every subsystem.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_CELLS)]
        max_cells: usize,
        /// Add per-stage wall-clock seconds to the report.
        #[arg(long)]
        timings: bool,
        /// Write DOT files of the abstractions and the composition here.
        #[arg(long)]
        dot_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graphviz rendering of a finite system.
    ExportDot {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        reachable_only: bool,
    },
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long)]
    model: PathBuf,
    /// Target precision ϖ.
    #[arg(long)]
    precision: f64,
    #[arg(long, default_value = "init")]
    notion: Notion,
    #[arg(long)]
    phi_fraction: Option<f64>,
    #[arg(long)]
    theta_fraction: Option<f64>,
}

impl DesignArgs {
    fn options(&self) -> DesignOptions {
        let d = DesignOptions::default();
        DesignOptions {
            notion: self.notion,
            phi_fraction: self.phi_fraction.unwrap_or(d.phi_fraction),
            theta_fraction: self.theta_fraction.unwrap_or(d.theta_fraction),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}

/// The error chain, skipping causes whose text the previous message already ends with.
fn describe(e: &anyhow::Error) -> String {
    let mut out: Vec<String> = Vec::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if out.last().is_none_or(|prev| !prev.ends_with(&msg)) {
            out.push(msg);
        }
    }
    out.join(": ")
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Design { design, out } => {
            let net = model(&design.model)?;
            let d = design_parameters(&net, design.precision, design.options())?;
            emit(&report("design", &d)?, out.as_deref())?;
            Ok(0)
        }
        Command::Abstract { model: path, subsystem, q, etas, unchecked, reachable_only, out } => {
            let net = model(&path)?;
            let t = abstraction(&net, subsystem, &q, etas.as_deref(), !unchecked)?;
            let t = if reachable_only { t.reachable_only() } else { t };
            emit(&to_value(&t)?, out.as_deref())?;
            Ok(0)
        }
        Command::Compose { model: path, parts, max_states, reachable_only, out } => {
            let net = model(&path)?;
            let parts = parts.iter().map(|p| system(p)).collect::<Result<Vec<_>>>()?;
            let c = compose(&parts, &net, max_states)?;
            let c = if reachable_only { c.reachable_only() } else { c };
            emit(&to_value(&c)?, out.as_deref())?;
            Ok(0)
        }
        Command::Verify { system: path, notion, delta, transfer } => {
            let t = system(&path)?;
            let v = verify(&t, notion, delta)?;
            let mut r = report("verify", &v)?;
            if let Some(eps) = transfer {
                r["epsilon"] = json!(eps);
                r["lifted_delta"] = if v.opaque { json!(transfer_bound(delta, eps)) } else { Value::Null };
            }
            emit(&r, None)?;
            Ok(if v.opaque { 0 } else { 1 })
        }
        Command::ValidateRelation { lhs, rhs, epsilon, notion, pairs } => {
            let (t, that) = (system(&lhs)?, system(&rhs)?);
            let out = max_relation(&t, &that, epsilon, notion)?;
            let mut r = json!({
                "schema_version": SCHEMA_VERSION,
                "kind": "validate-relation",
                "notion": notion,
                "epsilon": epsilon,
                "holds": out.holds(),
                "related_pairs": out.relation.len(),
                "violations": out.violations,
            });
            if pairs {
                r["pairs"] = json!(out.relation.pairs());
            }
            emit(&r, None)?;
            Ok(if out.holds() { 0 } else { 1 })
        }
        Command::ValidateSopsf { model: path, subsystem, q, varpi, vartheta, notion, samples, etas } => {
            let net = model(&path)?;
            let abs = abstraction(&net, subsystem, &q, etas.as_deref(), false)?;
            let sub = &net.subsystems[subsystem - 1];
            let mut rng = ChaCha8Rng::seed_from_u64(seed()?);
            let r = validate_sopsf(sub, &abs, &sub.certificate, varpi, vartheta, notion, samples, &mut rng)?;
            let mut v = report("validate-sopsf", &r)?;
            v["passed"] = json!(r.passed());
            emit(&v, None)?;
            Ok(if r.passed() { 0 } else { 1 })
        }
        Command::Pipeline { design, delta_hat, until, eta, max_states, max_cells, timings, dot_dir, out } => {
            let mut opts = PipelineOptions::new(design.precision, design.notion, delta_hat);
            opts.design = design.options();
            opts.until = until;
            opts.eta = eta;
            opts.max_states = max_states;
            opts.max_cells = max_cells;
            let outcome = run_pipeline(&design.model, &opts)?;
            let mut r = outcome.report;
            r.command = std::env::args().collect();
            if timings {
                r.timings = Some(outcome.timings);
            }
            if let Some(dir) = dot_dir {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for (i, t) in outcome.abstractions.iter().enumerate() {
                    write_dot(t, &dir.join(format!("subsystem{}.dot", i + 1)))?;
                }
                if let Some(c) = &outcome.composed {
                    write_dot(c, &dir.join("composed.dot"))?;
                }
            }
            emit(&to_value(&r)?, out.as_deref())?;
            Ok(match &r.verdict {
                Some(v) if !v.opaque => 1,
                _ => 0,
            })
        }
        Command::ExportDot { system: path, out, reachable_only } => {
            let t = system(&path)?;
            let t = if reachable_only { t.reachable_only() } else { t };
            write_dot(&t, &out)?;
            Ok(0)
        }
    }
}

fn model(path: &Path) -> Result<NetworkSpec> {
    load_model(path).with_context(|| format!("loading model {}", path.display()))
}

/// Reads a finite system written by `abstract` or `compose` (or a bare system object).
fn system(path: &Path) -> Result<FiniteSystem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("schema_version");
    }
    let t: FiniteSystem =
        serde_json::from_value(v).with_context(|| format!("{} is not a finite system", path.display()))?;
    t.validate().with_context(|| format!("{} is malformed", path.display()))?;
    Ok(t)
}

/// Parses "η,θ,μ,φ…" for a subsystem with `blocks` internal inputs.
fn parse_quant(s: &str, blocks: usize) -> Result<QuantParams> {
    let v = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("`{p}` in --q is not a number")))
        .collect::<Result<Vec<_>>>()?;
    if v.len() < 3 {
        bail!("--q needs at least η, θ and μ, got `{s}`");
    }
    let phi = match &v[3..] {
        [] => vec![0.0; blocks],
        [p] => vec![*p; blocks],
        ps if ps.len() == blocks => ps.to_vec(),
        ps => bail!("--q gives {} φ values for {blocks} internal blocks", ps.len()),
    };
    Ok(QuantParams::new(v[0], v[1], v[2], phi))
}

fn abstraction(
    net: &NetworkSpec,
    subsystem: usize,
    q: &str,
    etas: Option<&[f64]>,
    checked: bool,
) -> Result<FiniteSystem> {
    if subsystem == 0 || subsystem > net.len() {
        bail!("subsystem {subsystem} does not exist (the model has {})", net.len());
    }
    let i = subsystem - 1;
    let sub = &net.subsystems[i];
    let q = parse_quant(q, sub.internal.len())?;
    let etas = match etas {
        Some(e) if e.len() == net.len() => e.to_vec(),
        Some(e) => bail!("--etas gives {} values for {} subsystems", e.len(), net.len()),
        None => vec![q.eta; net.len()],
    };
    let nb = neighbor_outputs(net, i, &etas)?;
    Ok(if checked { build_abstraction(sub, &q, &nb)? } else { build_unchecked(sub, &q, &nb)? })
}

fn seed() -> Result<u64> {
    match std::env::var("OPACK_SEED") {
        Ok(s) => s.trim().parse().with_context(|| format!("OPACK_SEED=`{s}` is not an unsigned integer")),
        Err(_) => Ok(0),
    }
}

fn write_dot(t: &FiniteSystem, path: &Path) -> Result<()> {
    export_dot(t, path, None).with_context(|| format!("writing {}", path.display()))
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    let mut v = serde_json::to_value(x)?;
    if let Some(obj) = v.as_object_mut() {
        obj.entry("schema_version").or_insert(json!(SCHEMA_VERSION));
    }
    Ok(v)
}

fn report<T: Serialize>(kind: &str, x: &T) -> Result<Value> {
    let mut v = to_value(x)?;
    v["kind"] = json!(kind);
    Ok(v)
}

/// Rounds every float to 12 significant digits so reports compare byte for byte.
fn canonical(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or_default();
            let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            *v = json!(r);
        }
        Value::Array(a) => a.iter_mut().for_each(canonical),
        Value::Object(o) => o.values_mut().for_each(canonical),
        _ => {}
    }
}

fn emit(v: &Value, out: Option<&Path>) -> Result<()> {
    let mut v = v.clone();
    canonical(&mut v);
    let text = serde_json::to_string_pretty(&v)? + "\n";
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
