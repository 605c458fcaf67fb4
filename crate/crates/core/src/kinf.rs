//! Comparison functions of class K∞ (and the zero function).
//!
//! Closed forms are kept for the linear and power laws so that gains along
//! interconnection cycles stay exact; anything else is evaluated numerically
//! and inverted by bisection.

use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::expr::{BinOp, Env, Expr, Func, Var};

/// Absolute tolerance of numeric inverses.
pub const INVERSE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneFn {
    Zero,
    /// `c·s`
    Linear(f64),
    /// `a·s^b`
    Power {
        a: f64,
        b: f64,
    },
    /// `f₁ ∘ f₂ ∘ … ∘ fₖ`, applied right to left.
    Composition(Vec<MonotoneFn>),
    Numeric(Numeric),
    /// Inverse of a numeric function, evaluated by bisection.
    Inverse(Box<MonotoneFn>),
}

/// A function known only through evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Numeric {
    /// Piecewise-linear interpolation of `(s, f(s))` samples starting at
    /// `(0, 0)`, extended linearly with the last slope.
    Table { s: Arc<[f64]>, f: Arc<[f64]> },
    /// An expression in the single variable `s`.
    Expr(Arc<Expr>),
}

impl MonotoneFn {
    pub fn identity() -> Self {
        MonotoneFn::Linear(1.0)
    }

    pub fn linear(c: f64) -> Self {
        if c == 0.0 {
            MonotoneFn::Zero
        } else {
            MonotoneFn::Linear(c)
        }
    }

    pub fn table(s: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        let ok = s.len() == f.len()
            && s.len() >= 2
            && s[0] == 0.0
            && f[0] == 0.0
            && s.windows(2).all(|w| w[0] < w[1])
            && f.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::Certificate("sample table must start at (0, 0) and be strictly increasing".into()));
        }
        Ok(MonotoneFn::Numeric(Numeric::Table { s: s.into(), f: f.into() }))
    }

    /// Reads a function of `s` from an expression string. Homogeneous forms
    /// `c·s^p` are recognized structurally (`0.6*s`, `s/2`, `3*s*s`,
    /// `sqrt(s)`); everything else is kept as a numeric function.
    pub fn parse(text: &str) -> Result<Self> {
        let e = Expr::parse(text)?;
        let mut stray = None;
        e.for_each_var(&mut |v| {
            if v != Var::S {
                stray.get_or_insert(v);
            }
        });
        if let Some(v) = stray {
            return Err(Error::UnknownIdentifier(v.to_string()));
        }
        Ok(match homogeneous(&e) {
            Some((c, _)) if c == 0.0 => MonotoneFn::Zero,
            Some((c, p)) if p == 1.0 && c > 0.0 => MonotoneFn::Linear(c),
            Some((c, p)) if p > 0.0 && c > 0.0 => MonotoneFn::Power { a: c, b: p },
            _ => MonotoneFn::Numeric(Numeric::Expr(Arc::new(e))),
        })
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        if s.is_nan() {
            return Err(Error::NonFinite);
        }
        if s < 0.0 {
            return Err(Error::NegativeArgument(s));
        }
        match self {
            MonotoneFn::Zero => Ok(0.0),
            MonotoneFn::Linear(c) => Ok(c * s),
            MonotoneFn::Power { a, b } => Ok(a * s.powf(*b)),
            MonotoneFn::Composition(fs) => fs.iter().rev().try_fold(s, |acc, f| f.eval(acc.max(0.0))),
            MonotoneFn::Numeric(n) => n.eval(s),
            MonotoneFn::Inverse(f) => bisect_inverse(f, s),
        }
    }

    pub fn inverse(&self) -> Result<MonotoneFn> {
        match self {
            MonotoneFn::Zero => Err(Error::NotInvertible("the zero function".into())),
            MonotoneFn::Linear(c) if *c > 0.0 => Ok(MonotoneFn::Linear(1.0 / c)),
            MonotoneFn::Linear(c) => Err(Error::NotInvertible(format!("linear gain {c}"))),
            MonotoneFn::Power { a, b } if *a > 0.0 && *b > 0.0 => {
                Ok(MonotoneFn::Power { a: a.powf(-1.0 / b), b: 1.0 / b })
            }
            MonotoneFn::Power { a, b } => Err(Error::NotInvertible(format!("power law {a}*s^{b}"))),
            MonotoneFn::Composition(fs) => {
                let inv = fs.iter().rev().map(MonotoneFn::inverse).collect::<Result<Vec<_>>>()?;
                Ok(MonotoneFn::Composition(inv))
            }
            MonotoneFn::Numeric(_) => Ok(MonotoneFn::Inverse(Box::new(self.clone()))),
            MonotoneFn::Inverse(f) => Ok((**f).clone()),
        }
    }

    /// `self ∘ g`, collapsing linear factors and absorbing zeros.
    pub fn compose(&self, g: &MonotoneFn) -> MonotoneFn {
        let mut parts = Vec::new();
        flatten(self, &mut parts);
        flatten(g, &mut parts);
        let mut out: Vec<MonotoneFn> = Vec::new();
        for f in parts {
            match f {
                MonotoneFn::Zero => return MonotoneFn::Zero,
                MonotoneFn::Linear(c) => match out.last_mut() {
                    Some(MonotoneFn::Linear(prev)) => *prev *= c,
                    _ => out.push(MonotoneFn::Linear(c)),
                },
                other => out.push(other),
            }
        }
        out.retain(|f| *f != MonotoneFn::Linear(1.0));
        match out.len() {
            0 => MonotoneFn::identity(),
            1 => out.pop().unwrap(),
            _ => MonotoneFn::Composition(out),
        }
    }

    /// Coefficient `c` when the function is exactly `s ↦ c·s` (zero included).
    pub fn as_linear(&self) -> Option<f64> {
        match self {
            MonotoneFn::Zero => Some(0.0),
            MonotoneFn::Linear(c) => Some(*c),
            MonotoneFn::Power { a, b } if *b == 1.0 => Some(*a),
            MonotoneFn::Composition(fs) => fs.iter().try_fold(1.0, |acc, f| f.as_linear().map(|c| acc * c)),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_linear() == Some(0.0)
    }

    /// Decides `f(s) < s` for every `s > 0`.
    pub fn strictly_below_identity(&self) -> Result<bool> {
        if let Some(c) = self.as_linear() {
            return Ok(c < 1.0);
        }
        match self {
            MonotoneFn::Power { a, b } => Err(Error::Undecidable(format!(
                "{a}*s^{b} with exponent other than 1 crosses the identity; restrict the domain or use a linear bound"
            ))),
            _ => Err(Error::Undecidable(format!("`{self}` is not a closed-form gain; supply sigma functions"))),
        }
    }
}

fn flatten(f: &MonotoneFn, out: &mut Vec<MonotoneFn>) {
    match f {
        MonotoneFn::Composition(fs) => fs.iter().for_each(|g| flatten(g, out)),
        MonotoneFn::Power { a, b } if *b == 1.0 => out.push(MonotoneFn::Linear(*a)),
        other => out.push(other.clone()),
    }
}

impl Numeric {
    fn eval(&self, s: f64) -> Result<f64> {
        match self {
            Numeric::Expr(e) => e.eval(&Env::scalar(s)),
            Numeric::Table { s: xs, f: ys } => {
                let k = xs.partition_point(|&x| x <= s).clamp(1, xs.len() - 1);
                let (x0, x1, y0, y1) = (xs[k - 1], xs[k], ys[k - 1], ys[k]);
                Ok(y0 + (y1 - y0) * (s - x0) / (x1 - x0))
            }
        }
    }
}

fn bisect_inverse(f: &MonotoneFn, y: f64) -> Result<f64> {
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut hi = y.max(1.0);
    let mut grow = 0;
    while f.eval(hi)? < y {
        hi *= 2.0;
        grow += 1;
        if grow > 1100 {
            return Err(Error::NotInvertible(format!("`{f}` stays below {y}")));
        }
    }
    let mut lo = 0.0;
    while hi - lo > INVERSE_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f.eval(mid)? < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Reads `e` as `c·s^p`. Sums are accepted only when both sides share `p`.
fn homogeneous(e: &Expr) -> Option<(f64, f64)> {
    match e {
        Expr::Num(v) => Some((*v, 0.0)),
        Expr::Var(Var::S) => Some((1.0, 1.0)),
        Expr::Var(_) => None,
        Expr::Neg(a) => homogeneous(a).map(|(c, p)| (-c, p)),
        Expr::Bin(op, a, b) => {
            let ((ca, pa), (cb, pb)) = (homogeneous(a)?, homogeneous(b)?);
            match op {
                BinOp::Mul => Some((ca * cb, pa + pb)),
                BinOp::Div if cb != 0.0 => Some((ca / cb, pa - pb)),
                BinOp::Div => None,
                BinOp::Add | BinOp::Sub => {
                    let cb = if *op == BinOp::Sub { -cb } else { cb };
                    if pa == pb || cb == 0.0 || ca == 0.0 {
                        let p = if ca == 0.0 { pb } else { pa };
                        Some((ca + cb, p))
                    } else {
                        None
                    }
                }
            }
        }
        Expr::Call(Func::Sqrt, args) => {
            let (c, p) = homogeneous(&args[0])?;
            (c >= 0.0).then(|| (c.sqrt(), p / 2.0))
        }
        Expr::Call(..) => None,
    }
}

impl fmt::Display for MonotoneFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonotoneFn::Zero => f.write_str("0"),
            MonotoneFn::Linear(c) if *c == 1.0 => f.write_str("s"),
            MonotoneFn::Linear(c) => write!(f, "{c}*s"),
            MonotoneFn::Power { a, b } => write!(f, "{a}*s^{b}"),
            MonotoneFn::Composition(fs) => {
                let parts: Vec<String> = fs.iter().map(|g| format!("({g})")).collect();
                f.write_str(&parts.join(" ∘ "))
            }
            MonotoneFn::Numeric(Numeric::Expr(e)) => write!(f, "{e}"),
            MonotoneFn::Numeric(Numeric::Table { s, .. }) => {
                write!(f, "table[{} samples]", s.len())
            }
            MonotoneFn::Inverse(g) => write!(f, "inv({g})"),
        }
    }
}

impl Serialize for MonotoneFn {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn evaluation() {
        assert!(close(MonotoneFn::Linear(0.9).eval(0.01).unwrap(), 0.009));
        assert_eq!(MonotoneFn::identity().eval(3.5).unwrap(), 3.5);
        assert_eq!(MonotoneFn::Zero.eval(7.0).unwrap(), 0.0);
        assert!(matches!(MonotoneFn::Linear(1.0).eval(-1.0), Err(Error::NegativeArgument(_))));
        let g = MonotoneFn::Linear(0.9).inverse().unwrap().compose(&MonotoneFn::Linear(0.05));
        assert!(close(g.eval(1.0).unwrap(), 0.05 / 0.9));
    }

    #[test]
    fn inverses() {
        let k = MonotoneFn::Linear(0.6).inverse().unwrap();
        assert!(close(k.eval(0.006).unwrap(), 0.01));
        assert_eq!(MonotoneFn::identity().inverse().unwrap(), MonotoneFn::identity());
        let p = MonotoneFn::Power { a: 2.0, b: 1.0 }.inverse().unwrap();
        assert!(close(p.eval(4.0).unwrap(), 2.0));
        assert!(matches!(MonotoneFn::Zero.inverse(), Err(Error::NotInvertible(_))));
        let q = MonotoneFn::Power { a: 3.0, b: 2.0 };
        assert!((q.inverse().unwrap().eval(q.eval(1.7).unwrap()).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn composition_collapses() {
        let f = MonotoneFn::Linear(0.5).compose(&MonotoneFn::Linear(0.4));
        assert_eq!(f, MonotoneFn::Linear(0.2));
        let g = MonotoneFn::Power { a: 2.0, b: 3.0 };
        assert_eq!(g.compose(&MonotoneFn::identity()), g);
        let kappa = MonotoneFn::Linear(0.6);
        let gain = kappa
            .inverse()
            .unwrap()
            .compose(&MonotoneFn::Linear(0.4))
            .compose(&MonotoneFn::identity().inverse().unwrap());
        assert!(close(gain.as_linear().unwrap(), 2.0 / 3.0));
        assert_eq!(MonotoneFn::Linear(3.0).compose(&MonotoneFn::Zero), MonotoneFn::Zero);
    }

    #[test]
    fn identity_domination() {
        assert!(MonotoneFn::Linear(0.0556).strictly_below_identity().unwrap());
        assert!(!MonotoneFn::identity().strictly_below_identity().unwrap());
        assert!(MonotoneFn::Zero.strictly_below_identity().unwrap());
        assert!(MonotoneFn::Power { a: 0.5, b: 2.0 }.strictly_below_identity().is_err());
        assert!(MonotoneFn::parse("s/(1+s)").unwrap().strictly_below_identity().is_err());
    }

    #[test]
    fn structural_parse() {
        assert_eq!(MonotoneFn::parse("0.6*s").unwrap(), MonotoneFn::Linear(0.6));
        assert_eq!(MonotoneFn::parse("s").unwrap(), MonotoneFn::identity());
        assert_eq!(MonotoneFn::parse("0").unwrap(), MonotoneFn::Zero);
        assert_eq!(MonotoneFn::parse("s/2").unwrap(), MonotoneFn::Linear(0.5));
        assert_eq!(MonotoneFn::parse("3*s*s").unwrap(), MonotoneFn::Power { a: 3.0, b: 2.0 });
        assert_eq!(MonotoneFn::parse("sqrt(s)").unwrap(), MonotoneFn::Power { a: 1.0, b: 0.5 });
        assert_eq!(MonotoneFn::parse("0.2*s + 0.2*s").unwrap(), MonotoneFn::Linear(0.4));
        assert!(matches!(MonotoneFn::parse("s + s*s").unwrap(), MonotoneFn::Numeric(_)));
        assert!(MonotoneFn::parse("x1").is_err());
    }

    #[test]
    fn numeric_inverse_round_trip() {
        let f = MonotoneFn::parse("s + s*s").unwrap();
        let inv = f.inverse().unwrap();
        for s in [0.0, 1e-6, 0.3, 1.0, 9.5] {
            assert!((inv.eval(f.eval(s).unwrap()).unwrap() - s).abs() < 1e-9);
        }
        let t = MonotoneFn::table(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.eval(1.5).unwrap(), 2.5);
        assert_eq!(t.eval(4.0).unwrap(), 5.0);
        assert!((t.inverse().unwrap().eval(2.5).unwrap() - 1.5).abs() < 1e-9);
    }
}
