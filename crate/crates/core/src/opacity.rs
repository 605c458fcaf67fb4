//! Approximate opacity of finite systems against an intruder who observes
//! outputs up to precision δ and does not see inputs.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::abstraction::FiniteSystem;
use crate::error::{Error, Result};

/// Which secret the intruder must not infer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Notion {
    /// Whether the run started in a secret state.
    Init,
    /// Whether the run currently is in a secret state.
    Current,
    /// Whether the run was in a secret state at any step.
    Infinite,
}

impl fmt::Display for Notion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Notion::Init => "init",
            Notion::Current => "current",
            Notion::Infinite => "infinite",
        })
    }
}

impl FromStr for Notion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "init" | "initial" => Ok(Notion::Init),
            "current" | "cur" => Ok(Notion::Current),
            "inf" | "infinite" => Ok(Notion::Infinite),
            _ => Err(format!("unknown notion `{s}` (expected init, current or inf)")),
        }
    }
}

/// A secret run with no δ-close alternative of the required kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// State indices `x₀ … x_n`.
    pub run: Vec<usize>,
    /// For infinite-step opacity, the step `k` at which the run is secret.
    pub step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpacityVerdict {
    pub notion: Notion,
    pub delta: f64,
    pub opaque: bool,
    /// Every initial state is secret.
    pub trivially_violated: bool,
    pub witness: Option<Witness>,
    /// Number of (state, belief) pairs visited.
    pub explored: usize,
}

impl OpacityVerdict {
    fn opaque(notion: Notion, delta: f64, explored: usize) -> Self {
        Self { notion, delta, opaque: true, trivially_violated: false, witness: None, explored }
    }

    fn violated(notion: Notion, delta: f64, witness: Witness, explored: usize) -> Self {
        Self { notion, delta, opaque: false, trivially_violated: false, witness: Some(witness), explored }
    }
}

/// The guarantee on the concrete system implied by a verdict at `delta_hat`
/// on an abstraction related with precision `epsilon`.
pub fn transfer_bound(delta_hat: f64, epsilon: f64) -> f64 {
    delta_hat + 2.0 * epsilon
}

pub fn verify(t: &FiniteSystem, notion: Notion, delta: f64) -> Result<OpacityVerdict> {
    match notion {
        Notion::Init => verify_init_opacity(t, delta),
        Notion::Current => verify_current_opacity(t, delta),
        Notion::Infinite => verify_infinite_opacity(t, delta),
    }
}

/// Interned belief sets plus the search tree over `(state, belief)` pairs.
struct Search<'a> {
    t: &'a FiniteSystem,
    post: Vec<Vec<usize>>,
    delta: f64,
    beliefs: Vec<Vec<usize>>,
    ids: HashMap<Vec<usize>, usize>,
    /// `(state, belief id, parent node)`.
    nodes: Vec<(usize, usize, usize)>,
    seen: HashSet<(usize, usize)>,
}

const ROOT: usize = usize::MAX;

impl<'a> Search<'a> {
    fn new(t: &'a FiniteSystem, delta: f64) -> Self {
        Self {
            t,
            post: t.adjacency(),
            delta,
            beliefs: Vec::new(),
            ids: HashMap::new(),
            nodes: Vec::new(),
            seen: HashSet::new(),
        }
    }

    fn close(&self, x: usize, y: usize) -> bool {
        self.t.output_distance(x, y) <= self.delta
    }

    fn intern(&mut self, b: Vec<usize>) -> usize {
        if let Some(&id) = self.ids.get(&b) {
            return id;
        }
        let id = self.beliefs.len();
        self.ids.insert(b.clone(), id);
        self.beliefs.push(b);
        id
    }

    /// Adds a node unless its pair was seen; returns its index.
    fn push(&mut self, x: usize, b: Vec<usize>, parent: usize) -> Option<usize> {
        let id = self.intern(b);
        if !self.seen.insert((x, id)) {
            return None;
        }
        self.nodes.push((x, id, parent));
        Some(self.nodes.len() - 1)
    }

    /// Successor beliefs of `b` that stay δ-close to `xd`.
    fn step(&self, b: &[usize], xd: usize) -> Vec<usize> {
        let mut out: Vec<usize> =
            b.iter().flat_map(|&y| self.post[y].iter().copied()).filter(|&yd| self.close(xd, yd)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn run_to(&self, mut node: usize) -> Vec<usize> {
        let mut run = Vec::new();
        while node != ROOT {
            run.push(self.nodes[node].0);
            node = self.nodes[node].2;
        }
        run.reverse();
        run
    }

    /// Breadth-first exploration from the queued nodes; stops at the first
    /// node for which `bad` holds and returns it.
    fn explore(&mut self, mut head: usize, bad: impl Fn(&Self, usize, &[usize]) -> bool) -> Option<usize> {
        while head < self.nodes.len() {
            let (x, bid, _) = self.nodes[head];
            if bad(self, x, &self.beliefs[bid]) {
                return Some(head);
            }
            let b = self.beliefs[bid].clone();
            for xd in self.post[x].clone() {
                let nb = self.step(&b, xd);
                self.push(xd, nb, head);
            }
            head += 1;
        }
        None
    }
}

fn check_alphabet(t: &FiniteSystem) -> Result<()> {
    if t.internal.is_empty() {
        Ok(())
    } else {
        Err(Error::Model("opacity is verified on systems without internal inputs; compose first".into()))
    }
}

fn trivial(t: &FiniteSystem, notion: Notion, delta: f64) -> Option<OpacityVerdict> {
    if t.secret.is_empty() || t.initial.is_empty() || !t.initial.iter().all(|&x| t.is_secret(x)) {
        return None;
    }
    Some(OpacityVerdict {
        notion,
        delta,
        opaque: false,
        trivially_violated: true,
        witness: Some(Witness { run: vec![t.initial[0]], step: (notion == Notion::Infinite).then_some(0) }),
        explored: 0,
    })
}

/// δ-approximate initial-state opacity: every run from a secret initial state
/// has a δ-close run from a non-secret initial state.
pub fn verify_init_opacity(t: &FiniteSystem, delta: f64) -> Result<OpacityVerdict> {
    check_alphabet(t)?;
    if let Some(v) = trivial(t, Notion::Init, delta) {
        return Ok(v);
    }
    let mut s = Search::new(t, delta);
    for &x0 in t.initial.iter().filter(|&&x| t.is_secret(x)) {
        let b0: Vec<usize> = t.initial.iter().copied().filter(|&y| !t.is_secret(y) && s.close(x0, y)).collect();
        s.push(x0, b0, ROOT);
    }
    let hit = s.explore(0, |_, _, b| b.is_empty());
    Ok(finish(&s, Notion::Init, delta, hit, None))
}

/// δ-approximate current-state opacity: every run ending in a secret state
/// has a δ-close run of equal length ending outside the secret set.
pub fn verify_current_opacity(t: &FiniteSystem, delta: f64) -> Result<OpacityVerdict> {
    check_alphabet(t)?;
    if let Some(v) = trivial(t, Notion::Current, delta) {
        return Ok(v);
    }
    let mut s = current_roots(t, delta);
    let hit = s.explore(0, |s, x, b| s.t.is_secret(x) && b.iter().all(|&y| s.t.is_secret(y)));
    Ok(finish(&s, Notion::Current, delta, hit, None))
}

fn current_roots(t: &FiniteSystem, delta: f64) -> Search<'_> {
    let mut s = Search::new(t, delta);
    for &x0 in &t.initial {
        let b0: Vec<usize> = t.initial.iter().copied().filter(|&y| s.close(x0, y)).collect();
        s.push(x0, b0, ROOT);
    }
    s
}

fn finish(s: &Search<'_>, notion: Notion, delta: f64, hit: Option<usize>, step: Option<usize>) -> OpacityVerdict {
    match hit {
        Some(n) => OpacityVerdict::violated(notion, delta, Witness { run: s.run_to(n), step }, s.nodes.len()),
        None => OpacityVerdict::opaque(notion, delta, s.nodes.len()),
    }
}

/// δ-approximate infinite-step opacity: for every run and every step `k` at
/// which it is secret, some δ-close run of equal length is non-secret at `k`.
pub fn verify_infinite_opacity(t: &FiniteSystem, delta: f64) -> Result<OpacityVerdict> {
    check_alphabet(t)?;
    if let Some(v) = trivial(t, Notion::Infinite, delta) {
        return Ok(v);
    }
    let mut prefix = current_roots(t, delta);
    let _ = prefix.explore(0, |_, _, _| false);
    let mut explored = prefix.nodes.len();
    let mut memo: HashSet<(usize, Vec<usize>)> = HashSet::new();
    for node in 0..prefix.nodes.len() {
        let (x, bid, _) = prefix.nodes[node];
        if !t.is_secret(x) {
            continue;
        }
        let c0: Vec<usize> = prefix.beliefs[bid].iter().copied().filter(|&y| !t.is_secret(y)).collect();
        if !memo.insert((x, c0.clone())) {
            continue;
        }
        let mut suffix = Search::new(t, delta);
        suffix.push(x, c0, ROOT);
        let hit = suffix.explore(0, |_, _, c| c.is_empty());
        explored += suffix.nodes.len();
        if let Some(h) = hit {
            let mut run = prefix.run_to(node);
            let k = run.len() - 1;
            run.extend(suffix.run_to(h).into_iter().skip(1));
            return Ok(OpacityVerdict {
                explored,
                ..OpacityVerdict::violated(Notion::Infinite, delta, Witness { run, step: Some(k) }, 0)
            });
        }
    }
    Ok(OpacityVerdict::opaque(Notion::Infinite, delta, explored))
}
