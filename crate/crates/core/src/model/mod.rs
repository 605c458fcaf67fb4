//! Subsystems, networks and their model files.
//!
//! Subsystem `i` sees its own state as `x1..xn`, its external input as
//! `u1..um` and its internal input as `w1..wk`, where `w` concatenates the
//! output blocks `h_ji` of its predecessors `j` in ascending order of `j`.

pub mod certificate;
pub mod expr;
mod file;

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::BoxUnion;

pub use certificate::{IssCertificate, Metric};
pub use expr::{Env, Expr, Var};
pub use file::{load_model, parse_model};

/// Internal input block `w_ij` fed by predecessor `from`.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalBlock {
    pub from: usize,
    pub dim: usize,
    /// Declared set `W_ij`; required only when the block is quantized.
    pub set: Option<BoxUnion>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemSpec {
    /// Identifier as written in the model file (1-based).
    pub id: usize,
    /// `X`, which is also the initial set.
    pub state_set: BoxUnion,
    /// `U`, absent when the subsystem has no external input.
    pub input_set: Option<BoxUnion>,
    /// `X_S`, possibly empty.
    pub secret_set: BoxUnion,
    pub internal: Vec<InternalBlock>,
    pub dynamics: Vec<Expr>,
    /// Output blocks `h_ij` keyed by 0-based destination; the key equal to the
    /// subsystem's own position is its external output.
    pub outputs: BTreeMap<usize, Vec<Expr>>,
    pub certificate: IssCertificate,
}

impl SubsystemSpec {
    pub fn state_dim(&self) -> usize {
        self.state_set.dim()
    }

    pub fn input_dim(&self) -> usize {
        self.input_set.as_ref().map_or(0, BoxUnion::dim)
    }

    pub fn internal_dim(&self) -> usize {
        self.internal.iter().map(|b| b.dim).sum()
    }

    /// `f(x, u, w)` without domain checks.
    pub fn eval_dynamics(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let env = Env { x, u, w, s: None };
        self.dynamics.iter().map(|e| e.eval(&env)).collect()
    }

    /// `f(x, u, w)` after checking that every argument lies in its set.
    pub fn step(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let outside = |what: &str, v: &[f64], set: &BoxUnion| Error::OutOfDomain {
            what: format!("subsystem {} {what}", self.id),
            value: v.to_vec(),
            set: set.to_string(),
        };
        if x.len() != self.state_dim() {
            return Err(Error::DimensionMismatch { expected: self.state_dim(), got: x.len() });
        }
        if !self.state_set.contains(x) {
            return Err(outside("state", x, &self.state_set));
        }
        if u.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: u.len() });
        }
        if let Some(set) = &self.input_set {
            if !set.contains(u) {
                return Err(outside("input", u, set));
            }
        }
        if w.len() != self.internal_dim() {
            return Err(Error::DimensionMismatch { expected: self.internal_dim(), got: w.len() });
        }
        let mut at = 0;
        for b in &self.internal {
            let part = &w[at..at + b.dim];
            if let Some(set) = &b.set {
                if !set.contains(part) {
                    return Err(outside(&format!("internal input from {}", b.from + 1), part, set));
                }
            }
            at += b.dim;
        }
        self.eval_dynamics(x, u, w)
    }

    /// Output block toward `target` (0-based); empty when there is none.
    pub fn eval_output(&self, target: usize, x: &[f64]) -> Result<Vec<f64>> {
        match self.outputs.get(&target) {
            Some(h) => h.iter().map(|e| e.eval(&Env::state(x))).collect(),
            None => Ok(Vec::new()),
        }
    }

    /// All output blocks concatenated in destination order.
    pub fn eval_all_outputs(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for h in self.outputs.values() {
            for e in h {
                out.push(e.eval(&Env::state(x))?);
            }
        }
        Ok(out)
    }

    pub fn output_dim(&self, target: usize) -> usize {
        self.outputs.get(&target).map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub subsystems: Vec<SubsystemSpec>,
    /// Edges `(j, i)` meaning `j` feeds `i`, 0-based and sorted.
    pub edges: Vec<(usize, usize)>,
}

impl NetworkSpec {
    /// Validates the wiring and fills each subsystem's internal blocks.
    /// Internal sets already present on a subsystem are matched to
    /// predecessors by `from`.
    pub fn new(mut subsystems: Vec<SubsystemSpec>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = subsystems.len();
        let mut edges = edges;
        edges.sort_unstable();
        edges.dedup();
        for &(j, i) in &edges {
            if j >= n || i >= n {
                return Err(Error::Model(format!("edge ({}, {}) names a missing subsystem", j + 1, i + 1)));
            }
            if i == j {
                return Err(Error::SelfLoop(i + 1));
            }
        }
        let out_dims: Vec<BTreeMap<usize, usize>> =
            subsystems.iter().map(|s| s.outputs.iter().map(|(k, h)| (*k, h.len())).collect()).collect();
        for (i, sub) in subsystems.iter_mut().enumerate() {
            let preds: Vec<usize> = edges.iter().filter(|e| e.1 == i).map(|e| e.0).collect();
            if let Some(b) = sub.internal.iter().find(|b| !preds.contains(&b.from)) {
                return Err(Error::Model(format!(
                    "subsystem {} declares an internal set for {}, which does not feed it",
                    sub.id,
                    b.from + 1
                )));
            }
            let mut blocks = Vec::with_capacity(preds.len());
            for &j in &preds {
                let dim = out_dims[j].get(&i).copied().unwrap_or(0);
                if dim == 0 {
                    return Err(Error::Model(format!(
                        "edge {} -> {} needs a non-empty output block output.{} on subsystem {}",
                        j + 1,
                        i + 1,
                        i + 1,
                        j + 1
                    )));
                }
                let set = sub.internal.iter().find(|b| b.from == j).and_then(|b| b.set.clone());
                if let Some(s) = &set {
                    if s.dim() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, got: s.dim() });
                    }
                }
                blocks.push(InternalBlock { from: j, dim, set });
            }
            sub.internal = blocks;
        }
        for (j, sub) in subsystems.iter().enumerate() {
            for &target in sub.outputs.keys() {
                if target != j && !edges.contains(&(j, target)) && !sub.outputs[&target].iter().all(Expr::is_zero) {
                    return Err(Error::Model(format!(
                        "subsystem {} has a non-zero output toward {} but no such edge",
                        sub.id,
                        target + 1
                    )));
                }
            }
        }
        for sub in &subsystems {
            check_variables(sub)?;
        }
        Ok(Self { subsystems, edges })
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn preds(&self, i: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == i).map(|e| e.0).collect()
    }

    pub fn succs(&self, i: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.0 == i).map(|e| e.1).collect()
    }

    /// `w_i` assembled from the predecessors' outputs, with `states[j] = x_j`.
    pub fn internal_input(&self, i: usize, states: &[&[f64]]) -> Result<Vec<f64>> {
        let mut w = Vec::with_capacity(self.subsystems[i].internal_dim());
        for b in &self.subsystems[i].internal {
            w.extend(self.subsystems[b.from].eval_output(i, states[b.from])?);
        }
        Ok(w)
    }

    /// Offsets of each subsystem's block in a concatenated vector of the given dims.
    fn split<'a>(&self, v: &'a [f64], dim: impl Fn(&SubsystemSpec) -> usize) -> Result<Vec<&'a [f64]>> {
        let total: usize = self.subsystems.iter().map(&dim).sum();
        if v.len() != total {
            return Err(Error::DimensionMismatch { expected: total, got: v.len() });
        }
        let mut at = 0;
        Ok(self
            .subsystems
            .iter()
            .map(|s| {
                let part = &v[at..at + dim(s)];
                at += dim(s);
                part
            })
            .collect())
    }

    /// One step of the concrete network, wiring `w_ij := h_ji(x_j)`.
    pub fn network_step(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        let xs = self.split(x, SubsystemSpec::state_dim)?;
        let us = self.split(u, SubsystemSpec::input_dim)?;
        let mut out = Vec::with_capacity(x.len());
        for (i, sub) in self.subsystems.iter().enumerate() {
            let w = self.internal_input(i, &xs)?;
            out.extend(sub.step(xs[i], us[i], &w)?);
        }
        Ok(out)
    }

    /// A random internal input for subsystem `i`: drawn from the declared
    /// block set, or as the output of a random predecessor state otherwise.
    pub fn sample_internal<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Vec<f64> {
        let mut w = Vec::new();
        for b in &self.subsystems[i].internal {
            match &b.set {
                Some(set) => w.extend(set.sample(rng)),
                None => {
                    let src = &self.subsystems[b.from];
                    let xj = src.state_set.sample(rng);
                    w.extend(src.eval_output(i, &xj).unwrap_or_else(|_| vec![0.0; b.dim]));
                }
            }
        }
        w
    }
}

fn check_variables(sub: &SubsystemSpec) -> Result<()> {
    let (nx, nu, nw) = (sub.state_dim(), sub.input_dim(), sub.internal_dim());
    if sub.dynamics.len() != nx {
        return Err(Error::Model(format!(
            "subsystem {} has {} dynamics entries for a {}-dimensional state",
            sub.id,
            sub.dynamics.len(),
            nx
        )));
    }
    let mut bad = None;
    for e in &sub.dynamics {
        e.for_each_var(&mut |v| {
            let ok = match v {
                Var::X(k) => k < nx,
                Var::U(k) => k < nu,
                Var::W(k) => k < nw,
                Var::S => false,
            };
            if !ok {
                bad.get_or_insert(v);
            }
        });
    }
    for h in sub.outputs.values().flatten() {
        h.for_each_var(&mut |v| {
            if !matches!(v, Var::X(k) if k < nx) {
                bad.get_or_insert(v);
            }
        });
    }
    match bad {
        Some(v) => Err(Error::Model(format!("subsystem {} uses undeclared variable `{v}`", sub.id))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASCADE2: &str = r#"
        [network]
        edges = [[1, 2]]

        [subsystem.1]
        state_set = ["(0, 0.6)"]
        input_set = ["{0.145}"]
        secret_set = ["(0, 0.2]"]
        dynamics = ["0.1*x1 + u1"]
        output.1 = ["0"]
        output.2 = ["x1"]
        [subsystem.1.certificate]
        kappa = "0.9*s"
        rho_int = "0.05*s"
        rho_ext = "s"
        alpha_lower = "s"
        alpha_upper = "s"
        gamma_hat = "s"
        lipschitz = "s"

        [subsystem.2]
        state_set = ["(0, 0.6)"]
        input_set = ["{0.145}"]
        secret_set = ["[0.4, 0.6)"]
        internal_set.1 = ["(0, 0.6)"]
        dynamics = ["0.1*x1 + u1 + 0.05*w1"]
        output.2 = ["x1"]
        [subsystem.2.certificate]
        kappa = "0.9*s"
        rho_int = "0.05*s"
        rho_ext = "s"
        alpha_lower = "s"
        alpha_upper = "s"
        gamma_hat = "s"
        lipschitz = "s"
    "#;

    #[test]
    fn cascade_steps() {
        let net = parse_model(CASCADE2).unwrap();
        let s2 = &net.subsystems[1];
        let v = s2.step(&[0.4], &[0.145], &[0.4]).unwrap();
        assert!((v[0] - 0.205).abs() < 1e-12);
        let v = net.subsystems[0].step(&[0.2], &[0.145], &[]).unwrap();
        assert!((v[0] - 0.165).abs() < 1e-12);
        let v = net.network_step(&[0.2, 0.4], &[0.145, 0.145]).unwrap();
        assert!((v[0] - 0.165).abs() < 1e-12 && (v[1] - 0.195).abs() < 1e-12);
    }

    #[test]
    fn step_reports_domain() {
        let net = parse_model(CASCADE2).unwrap();
        match net.subsystems[1].step(&[0.7], &[0.145], &[0.2]) {
            Err(Error::OutOfDomain { set, .. }) => assert_eq!(set, "(0, 0.6)"),
            other => panic!("{other:?}"),
        }
        assert!(net.subsystems[1].step(&[0.3], &[0.2], &[0.2]).is_err());
    }

    #[test]
    fn rejects_bad_wiring() {
        let looped = CASCADE2.replace("edges = [[1, 2]]", "edges = [[1, 2], [2, 2]]");
        assert!(matches!(parse_model(&looped), Err(Error::SelfLoop(2))));
        let missing =
            CASCADE2.replace("output.2 = [\"x1\"]\n        [subsystem.1.certificate]", "[subsystem.1.certificate]");
        assert!(matches!(parse_model(&missing), Err(Error::Model(_))));
        let undeclared = CASCADE2.replace("0.1*x1 + u1 + 0.05*w1", "0.1*x2 + u1");
        assert!(matches!(parse_model(&undeclared), Err(Error::Model(_))));
    }
}
