//! A small arithmetic language for dynamics, output maps and comparison
//! functions.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | var | func '(' expr (',' expr)* ')' | '(' expr ')'
//! var     := 'x' N | 'u' N | 'w' N | 's'        (N ≥ 1)
//! ```

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X(usize),
    U(usize),
    W(usize),
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Tanh,
    Sech,
    Abs,
    Exp,
    Sqrt,
    Min,
    Max,
}

impl Func {
    const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Tanh,
        Func::Sech,
        Func::Abs,
        Func::Exp,
        Func::Sqrt,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Tanh => "tanh",
            Func::Sech => "sech",
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, a: &[f64]) -> f64 {
        match self {
            Func::Sin => a[0].sin(),
            Func::Cos => a[0].cos(),
            Func::Tan => a[0].tan(),
            Func::Tanh => a[0].tanh(),
            Func::Sech => 1.0 / a[0].cosh(),
            Func::Abs => a[0].abs(),
            Func::Exp => a[0].exp(),
            Func::Sqrt => a[0].sqrt(),
            Func::Min => a[0].min(a[1]),
            Func::Max => a[0].max(a[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Variable bindings. Indices in the source are 1-based; slices are 0-based.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env<'a> {
    pub x: &'a [f64],
    pub u: &'a [f64],
    pub w: &'a [f64],
    pub s: Option<f64>,
}

impl<'a> Env<'a> {
    pub fn state(x: &'a [f64]) -> Self {
        Self { x, ..Default::default() }
    }

    pub fn scalar(s: f64) -> Self {
        Self { s: Some(s), ..Default::default() }
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        match p.peek() {
            Tok { kind: Kind::End, .. } => Ok(e),
            t => Err(t.error(format!("unexpected {}", t.kind))),
        }
    }

    pub fn eval(&self, env: &Env) -> Result<f64> {
        let v = self.eval_raw(env)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }

    fn eval_raw(&self, env: &Env) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(v) => lookup(*v, env)?,
            Expr::Neg(e) => -e.eval_raw(env)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval_raw(env)?, b.eval_raw(env)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b == 0.0 => return Err(Error::DivisionByZero),
                    BinOp::Div => a / b,
                }
            }
            Expr::Call(f, args) => {
                let mut vals = [0.0; 2];
                for (slot, a) in vals.iter_mut().zip(args) {
                    *slot = a.eval_raw(env)?;
                }
                let v = f.apply(&vals[..args.len()]);
                if v.is_nan() {
                    return Err(Error::NonFinite);
                }
                v
            }
        })
    }

    /// Calls `visit` on every variable occurrence.
    pub fn for_each_var(&self, visit: &mut impl FnMut(Var)) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => visit(*v),
            Expr::Neg(e) => e.for_each_var(visit),
            Expr::Bin(_, a, b) => {
                a.for_each_var(visit);
                b.for_each_var(visit);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.for_each_var(visit)),
        }
    }

    /// True when the expression is the literal `0` or folds to zero without
    /// referencing variables.
    pub fn is_zero(&self) -> bool {
        let mut has_var = false;
        self.for_each_var(&mut |_| has_var = true);
        !has_var && self.eval(&Env::default()).is_ok_and(|v| v == 0.0)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }
}

fn lookup(v: Var, env: &Env) -> Result<f64> {
    let (slice, k, name) = match v {
        Var::S => return env.s.ok_or_else(|| Error::UnboundVariable("s".into())),
        Var::X(k) => (env.x, k, 'x'),
        Var::U(k) => (env.u, k, 'u'),
        Var::W(k) => (env.w, k, 'w'),
    };
    slice.get(k).copied().ok_or_else(|| Error::UnboundVariable(format!("{name}{}", k + 1)))
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(k) => write!(f, "x{}", k + 1),
            Var::U(k) => write!(f, "u{}", k + 1),
            Var::W(k) => write!(f, "w{}", k + 1),
            Var::S => f.write_str("s"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool| {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                wrap(f, e, e.precedence() < 3)
            }
            Expr::Bin(op, a, b) => {
                let p = self.precedence();
                wrap(f, a, a.precedence() < p)?;
                f.write_str(match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                })?;
                wrap(f, b, b.precedence() <= p)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Num(v) => write!(f, "number {v}"),
            Kind::Ident(s) => write!(f, "identifier `{s}`"),
            Kind::Op(c) => write!(f, "`{c}`"),
            Kind::End => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Tok {
    kind: Kind,
    line: usize,
    column: usize,
}

impl Tok {
    fn error(&self, message: String) -> Error {
        Error::Syntax { line: self.line, column: self.column, message }
    }
}

fn lex(text: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let begin = i;
        let kind = if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                let mut j = i + 1;
                if j < chars.len() && matches!(chars[j], '+' | '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lexeme: String = chars[begin..i].iter().collect();
            let v = lexeme.parse::<f64>().map_err(|_| Error::Syntax {
                line: start_line,
                column: start_col,
                message: format!("malformed number `{lexeme}`"),
            })?;
            Kind::Num(v)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Kind::Ident(chars[begin..i].iter().collect())
        } else if "+-*/(),".contains(c) {
            i += 1;
            Kind::Op(c)
        } else {
            return Err(Error::Syntax { line, column: col, message: format!("unexpected character `{c}`") });
        };
        col += i - begin;
        out.push(Tok { kind, line: start_line, column: start_col });
    }
    out.push(Tok { kind: Kind::End, line, column: col });
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Tok {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek().kind == Kind::Op(op) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            let t = self.peek();
            Err(t.error(format!("expected `{op}`, found {}", t.kind)))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let tok = self.next();
        match tok.kind {
            Kind::Num(v) => Ok(Expr::Num(v)),
            Kind::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Kind::Ident(ref name) => {
                if self.peek().kind == Kind::Op('(') {
                    let func = Func::lookup(name).ok_or_else(|| Error::UnknownIdentifier(name.clone()))?;
                    self.next();
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != func.arity() {
                        return Err(Error::Arity { name: name.clone(), expected: func.arity(), got: args.len() });
                    }
                    Ok(Expr::Call(func, args))
                } else {
                    parse_var(name).map(Expr::Var)
                }
            }
            ref k => Err(tok.error(format!("unexpected {k}"))),
        }
    }
}

fn parse_var(name: &str) -> Result<Var> {
    if name == "s" {
        return Ok(Var::S);
    }
    let unknown = || Error::UnknownIdentifier(name.to_string());
    let (head, digits) = name.split_at(1);
    let k: usize = digits.parse().map_err(|_| unknown())?;
    if k == 0 || digits.starts_with('0') {
        return Err(unknown());
    }
    match head {
        "x" => Ok(Var::X(k - 1)),
        "u" => Ok(Var::U(k - 1)),
        "w" => Ok(Var::W(k - 1)),
        _ => Err(unknown()),
    }
}
