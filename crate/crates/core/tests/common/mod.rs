//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::path::PathBuf;

use opack_core::abstraction::FiniteSystem;
use opack_core::model::load_model;
use opack_core::{NetworkSpec, Notion};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    format!("{}/../../models/{name}.toml", env!("CARGO_MANIFEST_DIR")).into()
}

pub fn model(name: &str) -> NetworkSpec {
    load_model(fixture(name)).unwrap()
}

/// Random non-blocking system with outputs on the half-integer lattice of [0, 3].
pub fn random_system<R: Rng>(rng: &mut R, max_states: usize, max_inputs: usize) -> FiniteSystem {
    let n = rng.gen_range(1..=max_states);
    let m = rng.gen_range(1..=max_inputs);
    let outputs = (0..n).map(|_| vec![rng.gen_range(0..=6) as f64 * 0.5]).collect();
    let mut initial: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
    if initial.is_empty() {
        initial.push(rng.gen_range(0..n));
    }
    let secret = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
    let transitions = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    let k = rng.gen_range(1..=2);
                    (0..k).map(|_| rng.gen_range(0..n)).collect()
                })
                .collect()
        })
        .collect();
    FiniteSystem::explicit(outputs, initial, secret, transitions).unwrap()
}

fn succ(t: &FiniteSystem, x: usize) -> Vec<usize> {
    let mut v: Vec<usize> = t.transitions[x].iter().flatten().copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn close(t: &FiniteSystem, a: usize, b: usize, delta: f64) -> bool {
    (t.outputs[a][0] - t.outputs[b][0]).abs() <= delta
}

/// Is there a run `y₀ … y_n` (from an initial state) that is δ-close to `run`
/// step by step and satisfies `ok(k, y_k)` at every step?
fn has_alternative(t: &FiniteSystem, run: &[usize], delta: f64, ok: &dyn Fn(usize, usize) -> bool) -> bool {
    fn extend(
        t: &FiniteSystem,
        run: &[usize],
        delta: f64,
        ok: &dyn Fn(usize, usize) -> bool,
        k: usize,
        y: usize,
    ) -> bool {
        if !close(t, run[k], y, delta) || !ok(k, y) {
            return false;
        }
        if k + 1 == run.len() {
            return true;
        }
        succ(t, y).into_iter().any(|z| extend(t, run, delta, ok, k + 1, z))
    }
    t.initial.iter().any(|&y0| extend(t, run, delta, ok, 0, y0))
}

/// Does this run violate the notion (no admissible alternative)? Returns the
/// violating step for the infinite-step notion.
pub fn run_violates(t: &FiniteSystem, run: &[usize], notion: Notion, delta: f64) -> Option<Option<usize>> {
    let secret = |x: usize| t.secret.contains(&x);
    match notion {
        Notion::Init => {
            if secret(run[0]) && !has_alternative(t, run, delta, &|k, y| k != 0 || !secret(y)) {
                return Some(None);
            }
        }
        Notion::Current => {
            let n = run.len() - 1;
            if secret(run[n]) && !has_alternative(t, run, delta, &|k, y| k != n || !secret(y)) {
                return Some(None);
            }
        }
        Notion::Infinite => {
            for k0 in 0..run.len() {
                if secret(run[k0]) && !has_alternative(t, run, delta, &|k, y| k != k0 || !secret(y)) {
                    return Some(Some(k0));
                }
            }
        }
    }
    None
}

/// Brute-force verdict: enumerate every run with at most `depth` transitions.
pub fn brute_force_opaque(t: &FiniteSystem, notion: Notion, delta: f64, depth: usize) -> bool {
    fn dfs(t: &FiniteSystem, run: &mut Vec<usize>, notion: Notion, delta: f64, depth: usize) -> bool {
        if run_violates(t, run, notion, delta).is_some() {
            return false;
        }
        if run.len() > depth {
            return true;
        }
        let x = *run.last().unwrap();
        for y in succ(t, x) {
            run.push(y);
            let ok = dfs(t, run, notion, delta, depth);
            run.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    t.initial.iter().all(|&x0| dfs(t, &mut vec![x0], notion, delta, depth))
}

/// The run starts initially and follows transitions.
pub fn replays(t: &FiniteSystem, run: &[usize]) -> bool {
    !run.is_empty() && t.initial.contains(&run[0]) && run.windows(2).all(|w| succ(t, w[0]).contains(&w[1]))
}

/// Every simple cycle's gain product, by depth-first search from its smallest vertex.
pub fn cycle_products(n: usize, gain: &[Vec<f64>]) -> Vec<f64> {
    fn go(gain: &[Vec<f64>], start: usize, v: usize, prod: f64, on: &mut Vec<bool>, out: &mut Vec<f64>) {
        for w in 0..gain.len() {
            // edge v → w carries gain[w][v] (v feeds w)
            let g = gain[w][v];
            if g == 0.0 {
                continue;
            }
            if w == start {
                out.push(prod * g);
            } else if w > start && !on[w] {
                on[w] = true;
                go(gain, start, w, prod * g, on, out);
                on[w] = false;
            }
        }
    }
    let mut out = Vec::new();
    for s in 0..n {
        let mut on = vec![false; n];
        on[s] = true;
        go(gain, s, s, 1.0, &mut on, &mut out);
    }
    out
}

/// A finite automaton with named states, used to compare against hand-drawn references.
#[derive(Debug, Clone)]
pub struct Labeled {
    pub outputs: Vec<Vec<f64>>,
    pub initial: Vec<bool>,
    pub secret: Vec<bool>,
    pub edges: Vec<Vec<bool>>,
}

impl Labeled {
    pub fn of(t: &FiniteSystem) -> Self {
        let n = t.len();
        let mut edges = vec![vec![false; n]; n];
        for x in 0..n {
            for y in succ(t, x) {
                edges[x][y] = true;
            }
        }
        Labeled {
            outputs: t.outputs.clone(),
            initial: (0..n).map(|x| t.initial.contains(&x)).collect(),
            secret: (0..n).map(|x| t.secret.contains(&x)).collect(),
            edges,
        }
    }
}

/// Exact isomorphism: a bijection preserving outputs, initial and secret
/// marks, and the edge relation. Brute force over label-respecting maps.
pub fn isomorphic(a: &Labeled, b: &Labeled) -> bool {
    let n = a.outputs.len();
    if n != b.outputs.len() {
        return false;
    }
    let compatible = |x: usize, y: usize| {
        a.outputs[x].len() == b.outputs[y].len()
            && a.outputs[x].iter().zip(&b.outputs[y]).all(|(p, q)| (p - q).abs() < 1e-9)
            && a.initial[x] == b.initial[y]
            && a.secret[x] == b.secret[y]
            && a.edges[x][x] == b.edges[y][y]
    };
    fn assign(
        a: &Labeled,
        b: &Labeled,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        ok: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        let x = map.len();
        if x == a.outputs.len() {
            return true;
        }
        for y in 0..b.outputs.len() {
            if used[y] || !ok(x, y) {
                continue;
            }
            let consistent = (0..x).all(|p| a.edges[x][p] == b.edges[y][map[p]] && a.edges[p][x] == b.edges[map[p]][y]);
            if !consistent {
                continue;
            }
            map.push(y);
            used[y] = true;
            if assign(a, b, map, used, ok) {
                return true;
            }
            map.pop();
            used[y] = false;
        }
        false
    }
    assign(a, b, &mut Vec::new(), &mut vec![false; n], &compatible)
}

/// Hand-drawn reference automata for the cascade, with `a = 0.2`, `A = 0.4`
/// per subsystem and the network output `[0; …; 0; x_n]`.
pub fn drawn_cascade(n: usize, names: &[&str], secret: &[&str], edges: &[(&str, &str)]) -> Labeled {
    let k = names.len();
    let idx = |s: &str| names.iter().position(|&m| m == s).unwrap();
    let value = |c: char| if c == 'a' { 0.2 } else { 0.4 };
    let outputs = names
        .iter()
        .map(|s| {
            let mut y = vec![0.0; n];
            y[n - 1] = value(s.chars().last().unwrap());
            y
        })
        .collect();
    let mut e = vec![vec![false; k]; k];
    for &(x, y) in edges {
        e[idx(x)][idx(y)] = true;
    }
    Labeled { outputs, initial: vec![true; k], secret: names.iter().map(|s| secret.contains(s)).collect(), edges: e }
}

pub fn reference_two() -> Labeled {
    drawn_cascade(
        2,
        &["aa", "Aa", "aA", "AA"],
        &["aA"],
        &[("aa", "aa"), ("Aa", "aa"), ("aA", "aa"), ("AA", "aa"), ("AA", "aA")],
    )
}

pub fn reference_three() -> Labeled {
    drawn_cascade(
        3,
        &["aaa", "aAa", "Aaa", "AAa", "aaA", "AAA", "aAA", "AaA"],
        &["aAa", "aAA"],
        &[
            ("aaa", "aaa"),
            ("aAa", "aaa"),
            ("Aaa", "aaa"),
            ("AAa", "aAa"),
            ("AAa", "aaa"),
            ("AAA", "aaA"),
            ("AAA", "aaa"),
            ("aAA", "aaA"),
            ("aAA", "aaa"),
            ("aaA", "aaa"),
            ("AaA", "aaa"),
        ],
    )
}

/// A random system whose state payload is its output, and a copy with every
/// payload moved by at most `jitter`. Same transitions, initial and secret sets.
pub fn perturbed_pair<R: Rng>(rng: &mut R, jitter: f64) -> (FiniteSystem, FiniteSystem) {
    let mut t = random_system(rng, 5, 2);
    t.values = t.outputs.clone();
    let mut that = t.clone();
    for (v, y) in that.values.iter_mut().zip(that.outputs.iter_mut()) {
        v[0] += rng.gen_range(-jitter..=jitter);
        y[0] = v[0];
    }
    (t, that)
}

pub fn scalar_distance(a: &[f64], b: &[f64]) -> f64 {
    (a[0] - b[0]).abs()
}
