//! Finite transition systems: grid abstractions of subsystems and their
//! interconnection.

pub(crate) mod build;
mod compose;
pub mod dot;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::linf;

pub use build::{build_abstraction, build_unchecked, neighbor_outputs, QuantParams};
pub use compose::{compose, DEFAULT_MAX_STATES};

/// Values one internal input block may take, with the quantization used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalAlphabet {
    /// 0-based predecessor feeding this block.
    pub from: usize,
    /// `φ_ij`; zero means the values are the predecessor's exact outputs.
    pub phi: f64,
    pub values: Vec<Vec<f64>>,
}

/// A finite, possibly non-deterministic transition system with real-vector
/// outputs compared in the ∞-norm.
///
/// Transition labels combine an external input and an internal input:
/// `label = input · |Ŵ| + internal`, where the internal alphabet is the
/// product of the block alphabets (first block most significant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSystem {
    /// Integer identity of each state (grid index vector).
    pub states: Vec<Vec<i64>>,
    /// Real payload of each state.
    pub values: Vec<Vec<f64>>,
    /// External output `ĥ(x̂)`.
    pub outputs: Vec<Vec<f64>>,
    pub initial: Vec<usize>,
    pub secret: Vec<usize>,
    pub inputs: Vec<Vec<f64>>,
    #[serde(default)]
    pub internal: Vec<InternalAlphabet>,
    /// Output blocks toward other subsystems, keyed by 0-based destination.
    #[serde(default)]
    pub output_blocks: BTreeMap<usize, Vec<Vec<f64>>>,
    /// Sorted successor lists, indexed `[state][label]`.
    pub transitions: Vec<Vec<Vec<usize>>>,
}

impl FiniteSystem {
    /// A system without internal inputs given directly by its transition
    /// lists `[state][input]`. States are numbered `0..n`.
    pub fn explicit(
        outputs: Vec<Vec<f64>>,
        initial: Vec<usize>,
        secret: Vec<usize>,
        transitions: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let n = outputs.len();
        let labels = transitions.first().map_or(1, Vec::len);
        let mut sys = FiniteSystem {
            states: (0..n as i64).map(|k| vec![k]).collect(),
            values: (0..n).map(|k| vec![k as f64]).collect(),
            outputs,
            initial,
            secret,
            inputs: (0..labels).map(|k| vec![k as f64]).collect(),
            internal: Vec::new(),
            output_blocks: BTreeMap::new(),
            transitions,
        };
        sys.normalize();
        sys.validate()?;
        Ok(sys)
    }

    fn normalize(&mut self) {
        self.initial.sort_unstable();
        self.initial.dedup();
        self.secret.sort_unstable();
        self.secret.dedup();
        for row in &mut self.transitions {
            for succ in row {
                succ.sort_unstable();
                succ.dedup();
            }
        }
    }

    /// Structural checks: index ranges, label counts and non-blocking.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let bad = |m: String| Err(Error::Model(m));
        if self.values.len() != n || self.outputs.len() != n || self.transitions.len() != n {
            return bad("state, value, output and transition tables differ in length".into());
        }
        if let Some(&x) = self.initial.iter().chain(&self.secret).find(|&&x| x >= n) {
            return bad(format!("state {x} is out of range"));
        }
        let labels = self.label_count();
        for (x, row) in self.transitions.iter().enumerate() {
            if row.len() != labels {
                return bad(format!("state {x} has {} labels, expected {labels}", row.len()));
            }
            if row.iter().flatten().any(|&y| y >= n) {
                return bad(format!("state {x} has a successor out of range"));
            }
            if row.iter().all(Vec::is_empty) {
                return Err(Error::Blocking(format!("state {x} has no successor")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn internal_count(&self) -> usize {
        self.internal.iter().map(|b| b.values.len()).product()
    }

    pub fn label_count(&self) -> usize {
        self.inputs.len().max(1) * self.internal_count()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.iter().flatten().map(Vec::len).sum()
    }

    pub fn is_secret(&self, x: usize) -> bool {
        self.secret.binary_search(&x).is_ok()
    }

    pub fn is_initial(&self, x: usize) -> bool {
        self.initial.binary_search(&x).is_ok()
    }

    pub fn secret_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.len()];
        self.secret.iter().for_each(|&x| m[x] = true);
        m
    }

    /// Successors under any label.
    pub fn post(&self, x: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.transitions[x].iter().flatten().copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `post` for every state.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.len()).map(|x| self.post(x)).collect()
    }

    pub fn output_distance(&self, x: usize, y: usize) -> f64 {
        linf(&self.outputs[x], &self.outputs[y])
    }

    /// Position of the state with the given grid index.
    pub fn find(&self, index: &[i64]) -> Option<usize> {
        self.states.binary_search_by(|s| s.as_slice().cmp(index)).ok()
    }

    /// Keeps only states reachable from the initial set, renumbering them.
    pub fn reachable_only(&self) -> FiniteSystem {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> = self.initial.clone();
        stack.iter().for_each(|&x| seen[x] = true);
        while let Some(x) = stack.pop() {
            for y in self.post(x) {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        let mut map = vec![usize::MAX; self.len()];
        let keep: Vec<usize> = (0..self.len()).filter(|&x| seen[x]).collect();
        for (k, &x) in keep.iter().enumerate() {
            map[x] = k;
        }
        let remap = |v: &[usize]| v.iter().filter(|&&x| seen[x]).map(|&x| map[x]).collect::<Vec<_>>();
        FiniteSystem {
            states: keep.iter().map(|&x| self.states[x].clone()).collect(),
            values: keep.iter().map(|&x| self.values[x].clone()).collect(),
            outputs: keep.iter().map(|&x| self.outputs[x].clone()).collect(),
            initial: remap(&self.initial),
            secret: remap(&self.secret),
            inputs: self.inputs.clone(),
            internal: self.internal.clone(),
            output_blocks: self
                .output_blocks
                .iter()
                .map(|(k, v)| (*k, keep.iter().map(|&x| v[x].clone()).collect()))
                .collect(),
            transitions: keep.iter().map(|&x| self.transitions[x].iter().map(|s| remap(s)).collect()).collect(),
        }
    }

    /// Human-readable state name: the payload vector.
    pub fn state_label(&self, x: usize) -> String {
        format_vector(&self.values[x])
    }
}

pub fn format_vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format_number(*x)).collect();
    if parts.len() == 1 {
        parts[0].clone()
    } else {
        format!("({})", parts.join(", "))
    }
}

/// Shortest decimal for values that sit on a decimal lattice up to rounding.
pub fn format_number(x: f64) -> String {
    let r = format!("{:.12}", x);
    let r = r.trim_end_matches('0').trim_end_matches('.');
    if r == "-0" {
        "0".into()
    } else {
        r.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_systems_validate() {
        let t = FiniteSystem::explicit(
            vec![vec![0.0], vec![1.0]],
            vec![1, 0, 1],
            vec![0],
            vec![vec![vec![1, 1, 0]], vec![vec![1]]],
        )
        .unwrap();
        assert_eq!(t.initial, vec![0, 1]);
        assert_eq!(t.post(0), vec![0, 1]);
        let blocking = FiniteSystem::explicit(vec![vec![0.0]], vec![0], vec![], vec![vec![vec![]]]);
        assert!(matches!(blocking, Err(Error::Blocking(_))));
    }

    #[test]
    fn reachable_restriction_renumbers() {
        let t = FiniteSystem::explicit(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![2],
            vec![0, 2],
            vec![vec![vec![0]], vec![vec![1]], vec![vec![0]]],
        )
        .unwrap();
        let r = t.reachable_only();
        assert_eq!(r.len(), 2);
        assert_eq!(r.initial, vec![1]);
        assert_eq!(r.secret, vec![0, 1]);
        assert_eq!(r.transitions, vec![vec![vec![0]], vec![vec![0]]]);
    }

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.2 + 0.1 - 0.1), "0.2");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_vector(&[0.2, 0.4]), "(0.2, 0.4)");
    }
}
