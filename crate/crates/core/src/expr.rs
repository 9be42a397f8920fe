//! Scalar closed-form functions of one variable.
//!
//! Expressions are written in a small grammar over the single variable `eta`:
//! numbers, `+ - * /`, `^` with an integer exponent, parentheses and the
//! functions `exp`, `ln`, `sqrt`, `sin`, `cos`. They hold the arbitrary
//! profile functions of the solution families (`S`, `N`) and the ξ-shift
//! profile `φ` of the X1 symmetry.
//!
//! Evaluation propagates an order-2 jet through the tree, so the first two
//! derivatives are exact to closed form.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Errors from parsing or evaluating an [`Expr`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("domain error at eta = {at}: {message}")]
    Domain { at: f64, message: String },
}

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

/// Expression tree. Subtraction is represented as a sum with a negated
/// right operand.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

/// Value and first two derivatives of an expression at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl D2 {
    fn constant(value: f64) -> Self {
        D2 { value, d1: 0.0, d2: 0.0 }
    }

    /// `f(self)` given `f, f', f''` at `self.value`.
    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        D2 {
            value: f,
            d1: df * self.d1,
            d2: ddf * self.d1 * self.d1 + df * self.d2,
        }
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { src: text, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < text.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    /// Evaluates the expression value only.
    pub fn eval(&self, eta: f64) -> Result<f64, ExprError> {
        Ok(self.eval_d2(eta)?.value)
    }

    /// Value, first and second derivative at `eta`.
    pub fn eval_d2(&self, eta: f64) -> Result<D2, ExprError> {
        let r = self.jet(eta)?;
        if !(r.value.is_finite() && r.d1.is_finite() && r.d2.is_finite()) {
            return Err(domain(eta, "non-finite result"));
        }
        Ok(r)
    }

    fn jet(&self, eta: f64) -> Result<D2, ExprError> {
        Ok(match self {
            Expr::Const(c) => D2::constant(*c),
            Expr::Var => D2 { value: eta, d1: 1.0, d2: 0.0 },
            Expr::Neg(a) => {
                let a = a.jet(eta)?;
                D2 { value: -a.value, d1: -a.d1, d2: -a.d2 }
            }
            Expr::Add(a, b) => {
                let (a, b) = (a.jet(eta)?, b.jet(eta)?);
                D2 { value: a.value + b.value, d1: a.d1 + b.d1, d2: a.d2 + b.d2 }
            }
            Expr::Mul(a, b) => mul(a.jet(eta)?, b.jet(eta)?),
            Expr::Div(a, b) => {
                let (a, b) = (a.jet(eta)?, b.jet(eta)?);
                if b.value == 0.0 {
                    return Err(domain(eta, "division by zero"));
                }
                let u = b.value;
                mul(a, b.chain(1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u)))
            }
            Expr::Pow(a, n) => {
                let a = a.jet(eta)?;
                let n = *n;
                let u = a.value;
                if n < 0 && u == 0.0 {
                    return Err(domain(eta, "negative power of zero"));
                }
                let nf = n as f64;
                let df = if n == 0 { 0.0 } else { nf * u.powi(n - 1) };
                let ddf = if n == 0 || n == 1 { 0.0 } else { nf * (nf - 1.0) * u.powi(n - 2) };
                a.chain(u.powi(n), df, ddf)
            }
            Expr::Call(f, a) => {
                let a = a.jet(eta)?;
                let u = a.value;
                match f {
                    Func::Exp => {
                        let e = u.exp();
                        a.chain(e, e, e)
                    }
                    Func::Ln => {
                        if u <= 0.0 {
                            return Err(domain(eta, "ln of non-positive argument"));
                        }
                        a.chain(u.ln(), 1.0 / u, -1.0 / (u * u))
                    }
                    Func::Sqrt => {
                        if u <= 0.0 {
                            return Err(domain(eta, "sqrt of non-positive argument"));
                        }
                        let r = u.sqrt();
                        a.chain(r, 0.5 / r, -0.25 / (r * u))
                    }
                    Func::Sin => a.chain(u.sin(), u.cos(), -u.sin()),
                    Func::Cos => a.chain(u.cos(), -u.sin(), -u.cos()),
                }
            }
        })
    }

    /// Whether the tree mentions the variable at all.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.is_constant(),
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.is_constant() && b.is_constant(),
        }
    }
}

fn mul(a: D2, b: D2) -> D2 {
    D2 {
        value: a.value * b.value,
        d1: a.d1 * b.value + a.value * b.d1,
        d2: a.d2 * b.value + 2.0 * a.d1 * b.d1 + a.value * b.d2,
    }
}

fn domain(at: f64, message: &str) -> ExprError {
    ExprError::Domain { at, message: message.to_string() }
}

impl FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

/// Fully parenthesised form; re-parses to an identical tree for every tree
/// the parser can produce.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => write!(f, "eta"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) if *n < 0 => write!(f, "({a}^({n}))"),
            Expr::Pow(a, n) => write!(f, "({a}^{n})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: &str) -> ExprError {
        ExprError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Expr::Add(Box::new(lhs), Box::new(Expr::Neg(Box::new(rhs))));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let n = if self.eat(b'(') {
                let n = self.integer()?;
                self.expect(b')')?;
                n
            } else {
                self.integer()?
            };
            Ok(Expr::Pow(Box::new(base), n))
        } else {
            Ok(base)
        }
    }

    fn integer(&mut self) -> Result<i32, ExprError> {
        self.skip_ws();
        let start = self.pos;
        let neg = self.eat(b'-');
        self.skip_ws();
        let digits_start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.err("expected integer exponent"));
        }
        if matches!(self.peek(), Some(b'.') | Some(b'e') | Some(b'E')) {
            return Err(self.err("exponent must be an integer"));
        }
        let n: i32 = self.src[digits_start..self.pos].parse().map_err(|_| ExprError::Syntax {
            offset: start,
            message: "exponent out of range".to_string(),
        })?;
        Ok(if neg { -n } else { n })
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if name == "eta" {
                    return Ok(Expr::Var);
                }
                match Func::from_name(name) {
                    Some(func) => {
                        self.expect(b'(')?;
                        let arg = self.expr()?;
                        self.expect(b')')?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                    None => Err(ExprError::UnknownIdentifier { name: name.to_string(), offset: start }),
                }
            }
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let mut n = digits(&mut p);
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            n += digits(&mut p);
        }
        if n == 0 {
            return Err(self.err("malformed number"));
        }
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) > 0 {
                p = q;
            }
        }
        self.pos = p;
        self.src[start..p]
            .parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ExprError::Syntax { offset: start, message: "malformed number".to_string() })
    }
}
