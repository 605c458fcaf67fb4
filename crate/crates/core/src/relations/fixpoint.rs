use serde::{Serialize, Serializer};

use crate::abstraction::FiniteSystem;
use crate::error::{Error, Result};
use crate::geometry::linf;
use crate::opacity::Notion;

/// A relation `R ⊆ X × X̂` between the states of two finite systems.
#[derive(Debug, Clone, PartialEq)]
pub struct OpRelation {
    pub notion: Notion,
    pub epsilon: f64,
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl OpRelation {
    pub fn empty(notion: Notion, epsilon: f64, rows: usize, cols: usize) -> Self {
        Self { notion, epsilon, rows, cols, bits: vec![false; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn contains(&self, x: usize, xh: usize) -> bool {
        self.bits[x * self.cols + xh]
    }

    pub fn set(&mut self, x: usize, xh: usize, on: bool) {
        self.bits[x * self.cols + xh] = on;
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pairs in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|x| (0..self.cols).map(move |xh| (x, xh)))
            .filter(|&(x, xh)| self.contains(x, xh))
            .collect()
    }

    pub fn is_subset(&self, other: &OpRelation) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

impl Serialize for OpRelation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View {
            notion: Notion,
            epsilon: f64,
            pairs: Vec<(usize, usize)>,
        }
        View { notion: self.notion, epsilon: self.epsilon, pairs: self.pairs() }.serialize(s)
    }
}

/// A clause of the relation definition that does not hold, with a witness pair or state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseViolation {
    pub clause: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationOutcome {
    pub relation: OpRelation,
    /// Empty iff `relation` is an opacity-preserving simulation relation.
    pub violations: Vec<ClauseViolation>,
}

impl RelationOutcome {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sweep direction of the deletion passes; the fixpoint does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    Forward,
    Reverse,
}

struct Pair<'a> {
    t: &'a FiniteSystem,
    that: &'a FiniteSystem,
    post: Vec<Vec<usize>>,
    post_hat: Vec<Vec<usize>>,
}

impl<'a> Pair<'a> {
    fn new(t: &'a FiniteSystem, that: &'a FiniteSystem) -> Result<Self> {
        if !t.internal.is_empty() || !that.internal.is_empty() {
            return Err(Error::Model("relations are computed between systems without internal inputs".into()));
        }
        Ok(Self { t, that, post: t.adjacency(), post_hat: that.adjacency() })
    }

    /// First clause of condition 3 violated by `(x, x̂)` with respect to `r`.
    fn step_violation(&self, r: &OpRelation, x: usize, xh: usize) -> Option<&'static str> {
        let (t, that) = (self.t, self.that);
        let (px, ph) = (&self.post[x], &self.post_hat[xh]);
        if !px.iter().all(|&xd| ph.iter().any(|&yd| r.contains(xd, yd))) {
            return Some("3a");
        }
        match r.notion {
            Notion::Init => {
                if !ph.iter().all(|&yd| px.iter().any(|&xd| r.contains(xd, yd))) {
                    return Some("3b");
                }
            }
            Notion::Current | Notion::Infinite => {
                let ok_b = px
                    .iter()
                    .filter(|&&xd| t.is_secret(xd))
                    .all(|&xd| ph.iter().any(|&yd| that.is_secret(yd) && r.contains(xd, yd)));
                if !ok_b {
                    return Some("3b");
                }
                if !ph.iter().all(|&yd| px.iter().any(|&xd| r.contains(xd, yd))) {
                    return Some("3c");
                }
                let ok_d = ph
                    .iter()
                    .filter(|&&yd| !that.is_secret(yd))
                    .all(|&yd| px.iter().any(|&xd| !t.is_secret(xd) && r.contains(xd, yd)));
                if !ok_d {
                    return Some("3d");
                }
            }
        }
        None
    }

    fn initial_violations(&self, r: &OpRelation) -> Vec<ClauseViolation> {
        let (t, that) = (self.t, self.that);
        let mut out = Vec::new();
        let (all, secret, public) = match r.notion {
            Notion::Init => (None, "1a", "1b"),
            Notion::Current => (Some("1"), "", ""),
            Notion::Infinite => (Some("1a"), "1b", "1c"),
        };
        if let Some(c) = all {
            for &x0 in &t.initial {
                if !that.initial.iter().any(|&y0| r.contains(x0, y0)) {
                    out.push(ClauseViolation {
                        clause: c.into(),
                        detail: format!("initial state {x0} has no related initial state"),
                    });
                    break;
                }
            }
        }
        if r.notion != Notion::Current {
            for &x0 in t.initial.iter().filter(|&&x| t.is_secret(x)) {
                if !that.initial.iter().any(|&y0| that.is_secret(y0) && r.contains(x0, y0)) {
                    out.push(ClauseViolation {
                        clause: secret.into(),
                        detail: format!("secret initial state {x0} has no related secret initial state"),
                    });
                    break;
                }
            }
            for &y0 in that.initial.iter().filter(|&&y| !that.is_secret(y)) {
                if !t.initial.iter().any(|&x0| !t.is_secret(x0) && r.contains(x0, y0)) {
                    out.push(ClauseViolation {
                        clause: public.into(),
                        detail: format!("non-secret initial state {y0} has no related non-secret initial state"),
                    });
                    break;
                }
            }
        }
        out
    }
}

/// Checks every condition of the notion's relation definition for `r`.
pub fn check_relation(t: &FiniteSystem, that: &FiniteSystem, r: &OpRelation) -> Result<Vec<ClauseViolation>> {
    check_shape(t, that, r)?;
    let p = Pair::new(t, that)?;
    let mut out = p.initial_violations(r);
    for (x, xh) in r.pairs() {
        let d = linf(&t.outputs[x], &that.outputs[xh]);
        if d > r.epsilon {
            out.push(ClauseViolation {
                clause: "2".into(),
                detail: format!("pair ({x}, {xh}) has output distance {d}"),
            });
            break;
        }
    }
    let mut step: Vec<ClauseViolation> = r
        .pairs()
        .into_iter()
        .filter_map(|(x, xh)| {
            p.step_violation(r, x, xh)
                .map(|c| ClauseViolation { clause: c.into(), detail: format!("pair ({x}, {xh})") })
        })
        .collect();
    step.sort_by(|a, b| a.clause.cmp(&b.clause));
    step.dedup_by(|a, b| a.clause == b.clause);
    out.extend(step);
    Ok(out)
}

fn check_shape(t: &FiniteSystem, that: &FiniteSystem, r: &OpRelation) -> Result<()> {
    if r.rows != t.len() || r.cols != that.len() {
        return Err(Error::DimensionMismatch { expected: t.len() * that.len(), got: r.rows * r.cols });
    }
    Ok(())
}

/// The greatest relation satisfying conditions 2 and 3 of the notion,
/// together with the condition-1 clauses it fails (if any).
pub fn max_relation(t: &FiniteSystem, that: &FiniteSystem, epsilon: f64, notion: Notion) -> Result<RelationOutcome> {
    max_relation_ordered(t, that, epsilon, notion, SweepOrder::Forward)
}

pub fn max_relation_ordered(
    t: &FiniteSystem,
    that: &FiniteSystem,
    epsilon: f64,
    notion: Notion,
    order: SweepOrder,
) -> Result<RelationOutcome> {
    let p = Pair::new(t, that)?;
    let mut r = OpRelation::empty(notion, epsilon, t.len(), that.len());
    for x in 0..t.len() {
        for xh in 0..that.len() {
            r.set(x, xh, linf(&t.outputs[x], &that.outputs[xh]) <= epsilon);
        }
    }
    let mut cells: Vec<(usize, usize)> = r.pairs();
    if order == SweepOrder::Reverse {
        cells.reverse();
    }
    loop {
        let mut changed = false;
        for &(x, xh) in &cells {
            if r.contains(x, xh) && p.step_violation(&r, x, xh).is_some() {
                r.set(x, xh, false);
                changed = true;
            }
        }
        if !changed {
            break;
        }
        cells.retain(|&(x, xh)| r.contains(x, xh));
    }
    let violations = p.initial_violations(&r);
    Ok(RelationOutcome { relation: r, violations })
}

/// `{(x, x̂) : G(x, x̂) ≤ ϖ}` over the state payloads, tagged with `ε = α⁻¹(ϖ)`.
/// The result is a candidate; validate it with [`check_relation`].
pub fn levelset_relation(
    t: &FiniteSystem,
    that: &FiniteSystem,
    g: impl Fn(&[f64], &[f64]) -> f64,
    varpi: f64,
    epsilon: f64,
    notion: Notion,
) -> OpRelation {
    let mut r = OpRelation::empty(notion, epsilon, t.len(), that.len());
    for x in 0..t.len() {
        for xh in 0..that.len() {
            r.set(x, xh, g(&t.values[x], &that.values[xh]) <= varpi);
        }
    }
    r
}

/// `Ṽ(x, x̂) = maxᵢ (ϖ/ϖᵢ)·Gᵢ(xᵢ, x̂ᵢ)` over concatenated block vectors.
pub fn composed_value(
    blocks: &[(usize, f64)],
    varpi: f64,
    g: &[&dyn Fn(&[f64], &[f64]) -> f64],
    x: &[f64],
    xh: &[f64],
) -> f64 {
    let mut at = 0;
    let mut v: f64 = 0.0;
    for (k, &(dim, varpi_i)) in blocks.iter().enumerate() {
        let gi = g[k](&x[at..at + dim], &xh[at..at + dim]);
        v = v.max(if varpi_i > 0.0 {
            varpi / varpi_i * gi
        } else if gi > 0.0 {
            f64::INFINITY
        } else {
            0.0
        });
        at += dim;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(outputs: &[f64], initial: &[usize], secret: &[usize], post: &[&[usize]]) -> FiniteSystem {
        FiniteSystem::explicit(
            outputs.iter().map(|&v| vec![v]).collect(),
            initial.to_vec(),
            secret.to_vec(),
            post.iter().map(|p| vec![p.to_vec()]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn reflexive() {
        let t = sys(&[0.0, 1.0, 2.0], &[0, 1], &[1], &[&[1], &[2, 0], &[2]]);
        for n in [Notion::Init, Notion::Current, Notion::Infinite] {
            let out = max_relation(&t, &t, 0.0, n).unwrap();
            assert!(out.holds(), "{n}: {:?}", out.violations);
            for x in 0..3 {
                assert!(out.relation.contains(x, x));
            }
            assert!(check_relation(&t, &t, &out.relation).unwrap().is_empty());
        }
    }

    #[test]
    fn secret_structure_mismatch() {
        let secret_only = sys(&[0.0], &[0], &[0], &[&[0]]);
        let secret_free = sys(&[0.0], &[0], &[], &[&[0]]);
        let out = max_relation(&secret_only, &secret_free, 1.0, Notion::Init).unwrap();
        let clauses: Vec<&str> = out.violations.iter().map(|v| v.clause.as_str()).collect();
        assert_eq!(clauses, ["1a", "1b"]);
        assert!(max_relation(&secret_free, &secret_only, 1.0, Notion::Init).unwrap().holds());
    }

    #[test]
    fn deletion_propagates() {
        // 0 → 1 emits 5 on the left; the right only emits 0
        let t = sys(&[0.0, 5.0], &[0], &[], &[&[1], &[1]]);
        let that = sys(&[0.0], &[0], &[], &[&[0]]);
        let out = max_relation(&t, &that, 0.5, Notion::Init).unwrap();
        assert!(out.relation.is_empty());
        assert!(!out.holds());
        let rev = max_relation_ordered(&t, &that, 0.5, Notion::Init, SweepOrder::Reverse).unwrap();
        assert_eq!(out.relation, rev.relation);
    }

    #[test]
    fn levelsets() {
        let t = sys(&[0.2, 0.4], &[0, 1], &[0], &[&[0], &[0]]);
        let g = |a: &[f64], b: &[f64]| linf(a, b);
        let r = levelset_relation(&t, &t, g, 0.0, 0.0, Notion::Init);
        assert_eq!(r.pairs(), vec![(0, 0), (1, 1)]);
        let r = levelset_relation(&t, &t, g, 1.0, 1.0, Notion::Init);
        assert_eq!(r.len(), 4);
        let blocks = [(1, 0.5), (1, 0.25)];
        let v = composed_value(&blocks, 0.5, &[&g, &g], &[0.0, 0.0], &[0.1, 0.1]);
        assert!((v - 0.2).abs() < 1e-15);
    }
}
