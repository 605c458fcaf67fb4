//! Axis-aligned boxes with exact open/closed faces, finite unions of them,
//! lattice quantization `[A]_η`, and ∞-norm inflation.
//!
//! Model files write a box as a product of interval strings joined by `x`,
//! e.g. `"(0, 0.2] x [0.4, 0.6)"`. `(`/`)` mark open faces, `[`/`]` closed
//! ones; `{v}` is shorthand for the point interval `[v, v]`.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether `p / η` is an integer.
pub const LATTICE_TOL: f64 = 1e-9;
/// Absolute slack for face membership of computed (not lattice) points.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn point(v: f64) -> Self {
        Self::closed(v, v)
    }

    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Self { lo, hi, lo_closed, hi_closed }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi || (self.lo == self.hi && self.lo_closed && self.hi_closed))
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi && self.lo_closed && self.hi_closed
    }

    pub fn len(&self) -> f64 {
        (self.hi - self.lo).abs()
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.lo_closed { v >= self.lo - MEMBERSHIP_TOL } else { v > self.lo + MEMBERSHIP_TOL };
        let below = if self.hi_closed { v <= self.hi + MEMBERSHIP_TOL } else { v < self.hi - MEMBERSHIP_TOL };
        above && below
    }

    fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_closed) = match self.lo.partial_cmp(&other.lo) {
            Some(Ordering::Greater) => (self.lo, self.lo_closed),
            Some(Ordering::Less) => (other.lo, other.lo_closed),
            _ => (self.lo, self.lo_closed && other.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Less) => (self.hi, self.hi_closed),
            Some(Ordering::Greater) => (other.hi, other.hi_closed),
            _ => (self.hi, self.hi_closed && other.hi_closed),
        };
        Interval { lo, hi, lo_closed, hi_closed }
    }

    /// Parts of `self` strictly below and strictly above `cut`.
    fn outside(&self, cut: &Interval) -> [Interval; 2] {
        let below = Interval::new(self.lo, cut.lo, self.lo_closed, !cut.lo_closed).intersect(self);
        let above = Interval::new(cut.hi, self.hi, !cut.hi_closed, self.hi_closed).intersect(self);
        [below, above]
    }

    /// Lattice indices `k` with `k·η` inside the interval, honouring open faces.
    fn lattice_range(&self, eta: f64) -> Option<(i64, i64)> {
        let first = lattice_bound(self.lo / eta, true, self.lo_closed);
        let last = lattice_bound(self.hi / eta, false, self.hi_closed);
        (first <= last).then_some((first, last))
    }
}

fn near_integer(t: f64) -> Option<f64> {
    let r = t.round();
    ((t - r).abs() <= LATTICE_TOL * t.abs().max(1.0)).then_some(r)
}

fn lattice_bound(t: f64, lower: bool, closed: bool) -> i64 {
    match (near_integer(t), lower) {
        (Some(r), true) => (if closed { r } else { r + 1.0 }) as i64,
        (Some(r), false) => (if closed { r } else { r - 1.0 }) as i64,
        (None, true) => t.ceil() as i64,
        (None, false) => t.floor() as i64,
    }
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            return write!(f, "{{{}}}", fmt_num(self.lo));
        }
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            fmt_num(self.lo),
            fmt_num(self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// An axis-aligned box, the product of one interval per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperbox {
    pub dims: Vec<Interval>,
}

impl Hyperbox {
    pub fn new(dims: Vec<Interval>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidBox("zero-dimensional box".into()));
        }
        for iv in &dims {
            if !(iv.lo.is_finite() && iv.hi.is_finite()) || iv.is_empty() {
                return Err(Error::InvalidBox(format!("{iv} is empty or unbounded")));
            }
        }
        Ok(Self { dims })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn span(&self) -> f64 {
        self.dims.iter().map(Interval::len).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dims.len() && self.dims.iter().zip(p).all(|(iv, &v)| iv.contains(v))
    }

    fn is_empty(&self) -> bool {
        self.dims.iter().any(Interval::is_empty)
    }

    fn intersect(&self, other: &Hyperbox) -> Hyperbox {
        Hyperbox { dims: self.dims.iter().zip(&other.dims).map(|(a, b)| a.intersect(b)).collect() }
    }

    /// `self ∖ other` as disjoint boxes.
    fn subtract(&self, other: &Hyperbox) -> Vec<Hyperbox> {
        if self.intersect(other).is_empty() {
            return vec![self.clone()];
        }
        let mut pieces = Vec::new();
        let mut rest = self.clone();
        for d in 0..self.dims.len() {
            for part in rest.dims[d].outside(&other.dims[d]) {
                if !part.is_empty() {
                    let mut piece = rest.clone();
                    piece.dims[d] = part;
                    pieces.push(piece);
                }
            }
            rest.dims[d] = rest.dims[d].intersect(&other.dims[d]);
        }
        pieces
    }
}

impl fmt::Display for Hyperbox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" x "))
    }
}

/// A finite union of boxes sharing one dimension. May be empty (e.g. after a
/// set difference), in which case `dim` still records the ambient dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxUnion {
    dim: usize,
    boxes: Vec<Hyperbox>,
}

impl BoxUnion {
    pub fn new(boxes: Vec<Hyperbox>) -> Result<Self> {
        let dim = boxes.first().map(Hyperbox::dim).ok_or(Error::EmptySet)?;
        if let Some(b) = boxes.iter().find(|b| b.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: b.dim() });
        }
        Ok(Self { dim, boxes })
    }

    pub fn single(b: Hyperbox) -> Self {
        Self { dim: b.dim(), boxes: vec![b] }
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, boxes: Vec::new() }
    }

    /// Parses a list of box strings, e.g. `["[0, 1] x (0, 2)", "{3} x [0, 1]"]`.
    pub fn parse_list<S: AsRef<str>>(items: &[S]) -> Result<Self> {
        let boxes = items.iter().map(|s| parse_box(s.as_ref())).collect::<Result<Vec<_>>>()?;
        Self::new(boxes)
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(Self::single(parse_box(s)?))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[Hyperbox] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// True when every box is a single point, i.e. the set is finite.
    pub fn is_finite_points(&self) -> bool {
        self.boxes.iter().all(|b| b.dims.iter().all(Interval::is_point))
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(p))
    }

    /// Smallest edge of a box in dimension `d` across the union.
    fn span_in_dim(&self, d: usize) -> f64 {
        self.boxes.iter().map(|b| b.dims[d].len()).fold(f64::INFINITY, f64::min)
    }

    /// Product with another union (dimensions concatenated).
    pub fn product(&self, other: &BoxUnion) -> BoxUnion {
        let mut boxes = Vec::new();
        for a in &self.boxes {
            for b in &other.boxes {
                let mut dims = a.dims.clone();
                dims.extend(b.dims.iter().copied());
                boxes.push(Hyperbox { dims });
            }
        }
        BoxUnion { dim: self.dim + other.dim, boxes }
    }

    pub fn difference(&self, other: &BoxUnion) -> Result<BoxUnion> {
        if !other.is_empty() && other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut pieces = self.boxes.clone();
        for cut in &other.boxes {
            pieces = pieces.iter().flat_map(|p| p.subtract(cut)).collect();
        }
        Ok(BoxUnion { dim: self.dim, boxes: pieces })
    }

    /// Vertex-free sample: uniform inside a box chosen uniformly at random.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let b = &self.boxes[rng.gen_range(0..self.boxes.len())];
        loop {
            let p: Vec<f64> =
                b.dims.iter().map(|iv| if iv.lo == iv.hi { iv.lo } else { rng.gen_range(iv.lo..=iv.hi) }).collect();
            if b.contains(&p) {
                return p;
            }
        }
    }

    /// Corners and face midpoints of every box, nudged inward on open faces.
    pub fn boundary_points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for b in &self.boxes {
            let choices: Vec<Vec<f64>> = b
                .dims
                .iter()
                .map(|iv| {
                    let nudge = iv.len() * 1e-6;
                    let lo = if iv.lo_closed { iv.lo } else { iv.lo + nudge };
                    let hi = if iv.hi_closed { iv.hi } else { iv.hi - nudge };
                    let mut c = vec![lo, 0.5 * (iv.lo + iv.hi), hi];
                    c.dedup();
                    c
                })
                .collect();
            for p in cartesian(&choices) {
                if b.contains(&p) {
                    out.push(p);
                }
            }
        }
        out
    }
}

impl fmt::Display for BoxUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.boxes.is_empty() {
            return f.write_str("∅");
        }
        let parts: Vec<String> = self.boxes.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" ∪ "))
    }
}

pub(crate) fn cartesian(choices: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut acc: Vec<Vec<f64>> = vec![Vec::new()];
    for c in choices {
        acc = acc
            .iter()
            .flat_map(|prefix| {
                c.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    acc
}

fn parse_box(s: &str) -> Result<Hyperbox> {
    let dims = s.split(['x', '×']).map(|part| parse_interval(part.trim())).collect::<Result<Vec<_>>>()?;
    Hyperbox::new(dims)
}

fn parse_interval(s: &str) -> Result<Interval> {
    let bad = || Error::InvalidBox(format!("cannot parse interval `{s}`"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    if let Some(inner) = s.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
        return Ok(Interval::point(num(inner)?));
    }
    let mut chars = s.chars();
    let lo_closed = match chars.next() {
        Some('[') => true,
        Some('(') | Some(']') => false,
        _ => return Err(bad()),
    };
    let hi_closed = match s.chars().last() {
        Some(']') => true,
        Some(')') | Some('[') => false,
        _ => return Err(bad()),
    };
    let body = &s[1..s.len() - 1];
    let (a, b) = body.split_once(',').ok_or_else(bad)?;
    let (lo, hi) = (num(a)?, num(b)?);
    if lo > hi {
        return Err(Error::InvalidBox(format!("`{s}` has lower bound above upper bound")));
    }
    Ok(Interval::new(lo, hi, lo_closed, hi_closed))
}

/// Minimum edge length over all boxes.
pub fn boxspan(a: &BoxUnion) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(a.boxes.iter().map(Hyperbox::span).fold(f64::INFINITY, f64::min))
}

/// ∞-norm inflation `A ⊕ B_θ`: every face moves outward by `θ`.
pub fn inflate(a: &BoxUnion, theta: f64) -> Result<BoxUnion> {
    if !(theta >= 0.0) {
        return Err(Error::NegativeInflation(theta));
    }
    let boxes = a
        .boxes
        .iter()
        .map(|b| Hyperbox {
            dims: b
                .dims
                .iter()
                .map(|iv| Interval::new(iv.lo - theta, iv.hi + theta, iv.lo_closed, iv.hi_closed))
                .collect(),
        })
        .collect();
    Ok(BoxUnion { dim: a.dim, boxes })
}

/// A lattice point: integer coordinates `k` and real payload `k·η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: Vec<i64>,
    pub value: Vec<f64>,
}

/// Quantization `[A]_η`: lattice points of `A`, or the set itself when `η = 0`
/// and `A` is not a finite point set.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSet {
    Finite(FiniteGrid),
    Continuous(BoxUnion),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteGrid {
    source: BoxUnion,
    eta: Vec<f64>,
    points: Vec<GridPoint>,
}

impl FiniteGrid {
    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn source(&self) -> &BoxUnion {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Position of the point with the given lattice index.
    pub fn position(&self, index: &[i64]) -> Option<usize> {
        self.points.binary_search_by(|p| p.index.as_slice().cmp(index)).ok()
    }

    /// Lattice index of `p` if it lies on the lattice (within tolerance).
    pub fn lattice_index(&self, p: &[f64]) -> Option<Vec<i64>> {
        if p.len() != self.eta.len() {
            return None;
        }
        p.iter()
            .zip(&self.eta)
            .map(|(&v, &e)| if e == 0.0 { Some(0) } else { near_integer(v / e).map(|r| r as i64) })
            .collect()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.lattice_index(p).is_some_and(|k| self.position(&k).is_some())
    }

    /// Positions of all grid points within `radius` (∞-norm) of `p`.
    pub fn near(&self, p: &[f64], radius: f64) -> Vec<usize> {
        let mut ranges = Vec::with_capacity(p.len());
        for (d, (&v, &e)) in p.iter().zip(&self.eta).enumerate() {
            if e == 0.0 {
                ranges.push((0, 0));
                continue;
            }
            let iv = Interval::closed(v - radius, v + radius);
            match iv.lattice_range(e) {
                Some(r) => ranges.push(r),
                None => return Vec::new(),
            }
            let _ = d;
        }
        let mut out = Vec::new();
        let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            if let Some(pos) = self.position(&k) {
                let q = &self.points[pos].value;
                if linf(q, p) <= radius * (1.0 + LATTICE_TOL) + MEMBERSHIP_TOL {
                    out.push(pos);
                }
            }
            let mut d = k.len();
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                if k[d] < ranges[d].1 {
                    k[d] += 1;
                    for j in d + 1..k.len() {
                        k[j] = ranges[j].0;
                    }
                    break;
                }
            }
        }
    }
}

impl GridSet {
    pub fn as_finite(&self) -> Option<&FiniteGrid> {
        match self {
            GridSet::Finite(g) => Some(g),
            GridSet::Continuous(_) => None,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            GridSet::Finite(g) => g.contains(p),
            GridSet::Continuous(a) => a.contains(p),
        }
    }
}

/// `[A]_η` with one step per dimension. Zero steps are allowed only on
/// dimensions where every box is a point, or for every dimension at once
/// (which yields the continuous marker `[A]_0 = A`).
pub fn quantize(a: &BoxUnion, eta: &[f64]) -> Result<GridSet> {
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    if eta.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: eta.len() });
    }
    if eta.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
        return Err(Error::Quantization(format!("invalid quantization step {eta:?}")));
    }
    let point_dim = |d: usize| a.boxes.iter().all(|b| b.dims[d].is_point());
    if eta.iter().all(|&e| e == 0.0) && !a.is_finite_points() {
        return Ok(GridSet::Continuous(a.clone()));
    }
    for (d, &e) in eta.iter().enumerate() {
        if e == 0.0 {
            if !point_dim(d) {
                return Err(Error::Quantization(format!("zero step in dimension {d} of a non-degenerate set")));
            }
            continue;
        }
        let span = a.span_in_dim(d);
        if e > span * (1.0 + LATTICE_TOL) {
            return Err(Error::GridTooCoarse { dim: d, eta: e, span });
        }
    }
    let mut points: Vec<GridPoint> = Vec::new();
    for b in &a.boxes {
        let mut axes: Vec<Vec<(i64, f64)>> = Vec::with_capacity(a.dim());
        for (iv, &e) in b.dims.iter().zip(eta) {
            if e == 0.0 {
                axes.push(vec![(0, iv.lo)]);
            } else if let Some((lo, hi)) = iv.lattice_range(e) {
                axes.push((lo..=hi).map(|k| (k, k as f64 * e)).collect());
            } else {
                axes.clear();
                break;
            }
        }
        if axes.len() != a.dim() {
            continue;
        }
        let mut acc: Vec<GridPoint> = vec![GridPoint { index: vec![], value: vec![] }];
        for axis in &axes {
            acc = acc
                .iter()
                .flat_map(|gp| {
                    axis.iter().map(move |&(k, v)| {
                        let mut gp = gp.clone();
                        gp.index.push(k);
                        gp.value.push(v);
                        gp
                    })
                })
                .collect();
        }
        points.extend(acc);
    }
    points.sort_by(|p, q| p.index.cmp(&q.index));
    points.dedup_by(|p, q| p.index == q.index);
    Ok(GridSet::Finite(FiniteGrid { source: a.clone(), eta: eta.to_vec(), points }))
}

/// `[A]_η` with the same step on every dimension.
pub fn quantize_uniform(a: &BoxUnion, eta: f64) -> Result<GridSet> {
    quantize(a, &vec![eta; a.dim()])
}

/// All points of `g` within `eta` (∞-norm) of `p`.
pub fn nearest_grid_points(p: &[f64], g: &FiniteGrid, eta: f64) -> Vec<Vec<f64>> {
    g.near(p, eta).into_iter().map(|i| g.points[i].value.clone()).collect()
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(g: &GridSet) -> Vec<Vec<f64>> {
        g.as_finite().unwrap().points().iter().map(|p| p.value.clone()).collect()
    }

    fn approx(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(p, q)| linf(p, q) < 1e-12)
    }

    #[test]
    fn boxspan_examples() {
        assert_eq!(boxspan(&BoxUnion::parse("[0, 1] x [0, 3]").unwrap()).unwrap(), 1.0);
        let u = BoxUnion::parse_list(&["[0, 2]", "[5, 5.5]"]).unwrap();
        assert_eq!(boxspan(&u).unwrap(), 0.5);
        assert!((boxspan(&BoxUnion::parse("(0, 0.6)").unwrap()).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(boxspan(&BoxUnion::empty(1)), Err(Error::EmptySet));
    }

    #[test]
    fn quantize_examples() {
        let g = quantize_uniform(&BoxUnion::parse("[0, 1]").unwrap(), 0.5).unwrap();
        assert!(approx(&values(&g), &[vec![0.0], vec![0.5], vec![1.0]]));

        let g = quantize_uniform(&BoxUnion::parse("(0, 0.6)").unwrap(), 0.2).unwrap();
        assert!(approx(&values(&g), &[vec![0.2], vec![0.4]]));

        let g = quantize(&BoxUnion::parse("(0, 0.2] x [0.4, 0.6)").unwrap(), &[0.2, 0.2]).unwrap();
        assert!(approx(&values(&g), &[vec![0.2, 0.4]]));
    }

    #[test]
    fn quantize_too_coarse_and_zero() {
        let a = BoxUnion::parse("[0, 1]").unwrap();
        assert!(matches!(quantize_uniform(&a, 1.5), Err(Error::GridTooCoarse { .. })));
        assert_eq!(quantize_uniform(&a, 0.0).unwrap(), GridSet::Continuous(a));
        let single = BoxUnion::parse("{0.145}").unwrap();
        let g = quantize_uniform(&single, 0.0).unwrap();
        assert!(approx(&values(&g), &[vec![0.145]]));
    }

    #[test]
    fn inflate_examples() {
        let a = BoxUnion::parse("[0, 1]").unwrap();
        assert_eq!(inflate(&a, 0.0).unwrap(), a);
        let b = inflate(&a, 0.1).unwrap();
        assert_eq!(b.to_string(), "[-0.1, 1.1]");
        let u = BoxUnion::parse_list(&["[0, 1]", "[2, 3]"]).unwrap();
        assert_eq!(inflate(&u, 0.5).unwrap().to_string(), "[-0.5, 1.5] ∪ [1.5, 3.5]");
        assert!(matches!(inflate(&a, -1.0), Err(Error::NegativeInflation(_))));
        let open = BoxUnion::parse("(0, 0.2]").unwrap();
        assert_eq!(inflate(&open, 0.25).unwrap().to_string(), "(-0.25, 0.45]");
    }

    #[test]
    fn nearest_examples() {
        let g = quantize_uniform(&BoxUnion::parse("(0, 0.6)").unwrap(), 0.2).unwrap();
        let g = g.as_finite().unwrap();
        assert!(approx(&nearest_grid_points(&[0.175], g, 0.2), &[vec![0.2]]));
        assert!(approx(&nearest_grid_points(&[0.205], g, 0.2), &[vec![0.2], vec![0.4]]));
        assert!(approx(&nearest_grid_points(&[0.4], g, 0.0), &[vec![0.4]]));
    }

    #[test]
    fn difference_respects_faces() {
        let x = BoxUnion::parse("(0, 0.6)").unwrap();
        let s = BoxUnion::parse("(0, 0.2]").unwrap();
        let d = x.difference(&s).unwrap();
        assert_eq!(d.to_string(), "(0.2, 0.6)");
        let s2 = BoxUnion::parse("[0.4, 0.6)").unwrap();
        assert_eq!(x.difference(&s2).unwrap().to_string(), "(0, 0.4)");
        assert!(x.difference(&x).unwrap().is_empty());
        let sq = BoxUnion::parse("[0, 2] x [0, 2]").unwrap();
        let hole = BoxUnion::parse("[0.5, 1] x [0.5, 1]").unwrap();
        let d = sq.difference(&hole).unwrap();
        assert!(d.contains(&[0.25, 0.75]) && !d.contains(&[0.75, 0.75]) && d.contains(&[1.5, 1.5]));
    }

    #[test]
    fn parse_display_roundtrip() {
        for s in ["(0, 0.6)", "[0, 0.2] x (0.4, 0.6]", "{0.145}", "[-1, 1] x [-1, 1]"] {
            assert_eq!(BoxUnion::parse(s).unwrap().to_string(), s);
        }
        assert!(BoxUnion::parse("[1, 0]").is_err());
        assert!(BoxUnion::parse("(0, 0)").is_err());
    }
}
