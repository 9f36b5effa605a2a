//! Univariate real expressions with exact symbolic differentiation.
//!
//! An [`Expr`] is an immutable, reference-counted tree over the variable `x`,
//! numeric constants and named parameters. Parameters stay symbolic until an
//! expression is compiled against a [`Params`] assignment, so a single tree
//! serves a whole parameter sweep.
//!
//! The arithmetic operators and the named constructors (`exp`, `log`, ...)
//! apply the conservative rewrites of [`Expr::simplify`] as they build: constant
//! folding, additive and multiplicative identities, and merging of powers with a
//! common base. Nothing else is rewritten.

mod compile;
mod diff;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

pub use compile::Compiled;
pub use parse::parse;

use crate::error::Result;

/// Parameter assignment used when compiling or evaluating expressions.
pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    X,
    Param(Arc<str>),
    Add(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    /// Base and an exponent that does not depend on `x`.
    Pow(Expr, Expr),
    Neg(Expr),
    Exp(Expr),
    Log(Expr),
    Abs(Expr),
    Sign(Expr),
    Tanh(Expr),
}

#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn constant(c: f64) -> Expr {
        Expr::raw(Node::Const(c))
    }

    pub fn x() -> Expr {
        Expr::raw(Node::X)
    }

    pub fn param(name: &str) -> Expr {
        Expr::raw(Node::Param(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_const(&self, value: f64) -> bool {
        self.as_const() == Some(value)
    }

    pub fn depends_on_x(&self) -> bool {
        match self.node() {
            Node::Const(_) | Node::Param(_) => false,
            Node::X => true,
            Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.depends_on_x() || b.depends_on_x()
            }
            Node::Neg(a)
            | Node::Exp(a)
            | Node::Log(a)
            | Node::Abs(a)
            | Node::Sign(a)
            | Node::Tanh(a) => a.depends_on_x(),
        }
    }

    /// Names of all parameter leaves, sorted.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) | Node::X => {}
            Node::Param(p) => {
                out.insert(p.to_string());
            }
            Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            Node::Neg(a)
            | Node::Exp(a)
            | Node::Log(a)
            | Node::Abs(a)
            | Node::Sign(a)
            | Node::Tanh(a) => a.collect_params(out),
        }
    }

    /// Rebuilds the tree bottom-up through the simplifying constructors.
    pub fn simplify(&self) -> Expr {
        self.map_children(|c| c.simplify())
    }

    /// Replaces every bound parameter by its value; unbound parameters stay symbolic.
    pub fn bind(&self, params: &Params) -> Expr {
        match self.node() {
            Node::Param(p) => match params.get(p.as_ref()) {
                Some(v) => Expr::constant(*v),
                None => self.clone(),
            },
            _ => self.map_children(|c| c.bind(params)),
        }
    }

    /// Substitutes `x` by `inner`, i.e. returns `self ∘ inner`.
    pub fn compose(&self, inner: &Expr) -> Expr {
        match self.node() {
            Node::X => inner.clone(),
            _ => self.map_children(|c| c.compose(inner)),
        }
    }

    fn map_children(&self, f: impl Fn(&Expr) -> Expr) -> Expr {
        match self.node() {
            Node::Const(_) | Node::X | Node::Param(_) => self.clone(),
            Node::Add(a, b) => f(a) + f(b),
            Node::Mul(a, b) => f(a) * f(b),
            Node::Div(a, b) => f(a) / f(b),
            Node::Pow(a, b) => f(a).pow(f(b)),
            Node::Neg(a) => -f(a),
            Node::Exp(a) => f(a).exp(),
            Node::Log(a) => f(a).log(),
            Node::Abs(a) => f(a).abs(),
            Node::Sign(a) => f(a).sign(),
            Node::Tanh(a) => f(a).tanh(),
        }
    }

    pub fn differentiate(&self) -> Expr {
        diff::differentiate(self)
    }

    pub fn compile(&self, params: &Params) -> Result<Compiled> {
        Compiled::new(self, params)
    }

    /// Checked evaluation: unbound parameters and logarithms of non-positive
    /// arguments are errors; other infinities and NaNs are returned as values.
    pub fn evaluate(&self, x: f64, params: &Params) -> Result<f64> {
        self.compile(params)?.eval_checked(x)
    }

    pub fn powi(&self, n: i32) -> Expr {
        self.clone().pow(Expr::constant(n as f64))
    }

    pub fn powf(&self, c: f64) -> Expr {
        self.clone().pow(Expr::constant(c))
    }

    pub fn sqrt(&self) -> Expr {
        self.powf(0.5)
    }

    /// `self ^ exponent`. The exponent must not depend on `x`.
    pub fn pow(self, exponent: Expr) -> Expr {
        debug_assert!(!exponent.depends_on_x(), "exponent depends on x");
        if exponent.is_const(0.0) {
            return Expr::constant(1.0);
        }
        if exponent.is_const(1.0) {
            return self;
        }
        if let (Some(b), Some(e)) = (self.as_const(), exponent.as_const()) {
            return Expr::constant(const_pow(b, e));
        }
        if let (Node::Sign(_), Some(n)) = (self.node(), exponent.as_const()) {
            // sign(u)^2 = 1 away from u = 0.
            if n.fract() == 0.0 && n > 0.0 {
                return if n % 2.0 == 0.0 { Expr::constant(1.0) } else { self };
            }
        }
        if let Node::Pow(base, inner) = self.node() {
            // (u^a)^n = u^(a n) holds for integer n wherever u^a is defined.
            if let Some(n) = exponent.as_const() {
                if n.fract() == 0.0 {
                    return base.clone().pow(inner.clone() * exponent);
                }
            }
        }
        Expr::raw(Node::Pow(self, exponent))
    }

    pub fn exp(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(c.exp()),
            None => Expr::raw(Node::Exp(self.clone())),
        }
    }

    pub fn log(&self) -> Expr {
        match self.as_const() {
            Some(c) if c > 0.0 => Expr::constant(c.ln()),
            _ => Expr::raw(Node::Log(self.clone())),
        }
    }

    pub fn abs(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(c.abs()),
            None => Expr::raw(Node::Abs(self.clone())),
        }
    }

    pub fn sign(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(sign(c)),
            None => Expr::raw(Node::Sign(self.clone())),
        }
    }

    pub fn tanh(&self) -> Expr {
        match self.as_const() {
            Some(c) => Expr::constant(c.tanh()),
            None => Expr::raw(Node::Tanh(self.clone())),
        }
    }

    /// Splits `c * e` into `(c, e)`; anything else is `(1, self)`.
    fn split_coefficient(&self) -> (f64, Expr) {
        match self.node() {
            Node::Const(c) => (*c, Expr::constant(1.0)),
            Node::Neg(a) => {
                let (c, rest) = a.split_coefficient();
                (-c, rest)
            }
            Node::Mul(a, b) => match a.as_const() {
                Some(c) => (c, b.clone()),
                None => (1.0, self.clone()),
            },
            _ => (1.0, self.clone()),
        }
    }

    /// `self` with one factor equal to `f` removed from its product chain.
    fn remove_factor(&self, f: &Expr) -> Option<Expr> {
        if self == f {
            return Some(Expr::constant(1.0));
        }
        match self.node() {
            Node::Mul(a, b) => {
                if let Some(r) = b.remove_factor(f) {
                    return Some(a.clone() * r);
                }
                a.remove_factor(f).map(|r| r * b.clone())
            }
            Node::Neg(a) => a.remove_factor(f).map(|r| -r),
            _ => None,
        }
    }

    /// Splits `u ^ c` into `(u, c)`; anything else is `(self, 1)`.
    fn split_power(&self) -> (Expr, Expr) {
        match self.node() {
            Node::Pow(base, e) => (base.clone(), e.clone()),
            _ => (self.clone(), Expr::constant(1.0)),
        }
    }
}

pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        v // keeps 0 and NaN
    }
}

/// Integer exponents go through `powi` so negative bases work; the compiled
/// evaluator uses the same rule, keeping folded constants bit-identical.
pub(crate) fn const_pow(base: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= 64.0 {
        base.powi(e as i32)
    } else {
        base.powf(e)
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => return Expr::constant(a + b),
            (Some(a), _) if a == 0.0 => return rhs,
            (_, Some(b)) if b == 0.0 => return self,
            _ => {}
        }
        // c1*e + c2*e = (c1 + c2)*e
        let (c1, e1) = self.split_coefficient();
        let (c2, e2) = rhs.split_coefficient();
        if e1 == e2 && !e1.is_const(1.0) {
            return Expr::constant(c1 + c2) * e1;
        }
        Expr::raw(Node::Add(self, rhs))
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => return Expr::constant(a * b),
            (Some(a), _) if a == 0.0 => return Expr::constant(0.0),
            (_, Some(b)) if b == 0.0 => return Expr::constant(0.0),
            (Some(a), _) if a == 1.0 => return rhs,
            (_, Some(b)) if b == 1.0 => return self,
            (Some(a), _) if a == -1.0 => return -rhs,
            (_, Some(b)) if b == -1.0 => return -self,
            (None, Some(_)) => return rhs * self,
            _ => {}
        }
        if let Node::Neg(a) = self.node() {
            return -(a.clone() * rhs);
        }
        // sign(u) * sign(u) = 1 away from u = 0, anywhere in a product chain.
        for (s, other) in [(&rhs, &self), (&self, &rhs)] {
            if let Node::Sign(_) = s.node() {
                if let Some(r) = other.remove_factor(s) {
                    return r;
                }
            }
        }
        if let Node::Neg(b) = rhs.node() {
            return -(self * b.clone());
        }
        // Collect constant factors on the left: c1*(c2*e) = (c1 c2)*e.
        if let Some(c1) = self.as_const() {
            if let Node::Mul(a, b) = rhs.node() {
                if let Some(c2) = a.as_const() {
                    return Expr::constant(c1 * c2) * b.clone();
                }
            }
            return Expr::raw(Node::Mul(self, rhs));
        }
        if let Node::Mul(a, b) = rhs.node() {
            if let Some(c) = a.as_const() {
                return Expr::constant(c) * (self * b.clone());
            }
        }
        if let Node::Mul(a, b) = self.node() {
            if let Some(c) = a.as_const() {
                return Expr::constant(c) * (b.clone() * rhs);
            }
        }
        // u^a * u^b = u^(a+b)
        let (b1, e1) = self.split_power();
        let (b2, e2) = rhs.split_power();
        if b1 == b2 && e1.as_const().is_some() && e2.as_const().is_some() {
            return b1.pow(e1 + e2);
        }
        Expr::raw(Node::Mul(self, rhs))
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => return Expr::constant(a / b),
            (Some(a), _) if a == 0.0 => return Expr::constant(0.0),
            (_, Some(b)) if b == 1.0 => return self,
            (_, Some(b)) if b == -1.0 => return -self,
            _ => {}
        }
        if self == rhs {
            return Expr::constant(1.0);
        }
        if let Some(b) = rhs.as_const() {
            let (c, e) = self.split_coefficient();
            if c != 1.0 && b != 0.0 {
                return Expr::constant(c / b) * e;
            }
        }
        Expr::raw(Node::Div(self, rhs))
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(a) => a.clone(),
            Node::Mul(a, b) => match a.as_const() {
                Some(c) => Expr::constant(-c) * b.clone(),
                None => Expr::raw(Node::Neg(self)),
            },
            _ => Expr::raw(Node::Neg(self)),
        }
    }
}

macro_rules! forward_ref_binop {
    ($imp:ident, $method:ident) => {
        impl $imp<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $imp::$method(self.clone(), rhs.clone())
            }
        }
        impl $imp<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $imp::$method(self, rhs.clone())
            }
        }
        impl $imp<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $imp::$method(self.clone(), rhs)
            }
        }
        impl $imp<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $imp::$method(Expr::constant(self), rhs.clone())
            }
        }
        impl $imp<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $imp::$method(self.clone(), Expr::constant(rhs))
            }
        }
        impl $imp<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $imp::$method(self, Expr::constant(rhs))
            }
        }
        impl $imp<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $imp::$method(Expr::constant(self), rhs)
            }
        }
    };
}

forward_ref_binop!(Add, add);
forward_ref_binop!(Sub, sub);
forward_ref_binop!(Mul, mul);
forward_ref_binop!(Div, div);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

// Precedence levels used by the printer.
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) if *c < 0.0 || c.is_nan() => PREC_NEG,
        Node::Const(_) | Node::X | Node::Param(_) => PREC_ATOM,
        Node::Add(..) => PREC_ADD,
        Node::Mul(..) | Node::Div(..) => PREC_MUL,
        Node::Neg(_) => PREC_NEG,
        Node::Pow(..) => PREC_POW,
        Node::Exp(_) | Node::Log(_) | Node::Abs(_) | Node::Sign(_) | Node::Tanh(_) => PREC_ATOM,
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c.is_nan() {
        write!(f, "nan")
    } else if c.is_infinite() {
        write!(f, "{}", if c > 0.0 { "inf" } else { "-inf" })
    } else if c.fract() == 0.0 && c.abs() < 1e15 {
        write!(f, "{}", c as i64)
    } else {
        write!(f, "{c:?}")
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(e) < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Canonical printable form; `parse(e.to_string())` evaluates identically to `e`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write_number(f, *c),
            Node::X => write!(f, "x"),
            Node::Param(p) => write!(f, "{p}"),
            Node::Add(a, b) => {
                write_wrapped(f, a, PREC_ADD)?;
                match b.node() {
                    Node::Neg(inner) => {
                        write!(f, " - ")?;
                        write_wrapped(f, inner, PREC_MUL)
                    }
                    Node::Const(c) if *c < 0.0 => {
                        write!(f, " - ")?;
                        write_number(f, -c)
                    }
                    Node::Mul(k, rest) if k.as_const().is_some_and(|c| c < 0.0) => {
                        write!(f, " - ")?;
                        write_number(f, -k.as_const().unwrap_or_default())?;
                        write!(f, "*")?;
                        write_wrapped(f, rest, PREC_NEG + 1)
                    }
                    _ => {
                        write!(f, " + ")?;
                        write_wrapped(f, b, PREC_MUL)
                    }
                }
            }
            Node::Mul(a, b) => {
                write_wrapped(f, a, PREC_MUL)?;
                write!(f, "*")?;
                write_wrapped(f, b, PREC_NEG + 1)
            }
            Node::Div(a, b) => {
                write_wrapped(f, a, PREC_MUL)?;
                write!(f, "/")?;
                write_wrapped(f, b, PREC_NEG + 1)
            }
            Node::Pow(a, b) => {
                write_wrapped(f, a, PREC_ATOM)?;
                write!(f, "^")?;
                write_wrapped(f, b, PREC_ATOM)
            }
            Node::Neg(a) => {
                write!(f, "-")?;
                write_wrapped(f, a, PREC_POW)
            }
            Node::Exp(a) => write!(f, "exp({a})"),
            Node::Log(a) => write!(f, "log({a})"),
            Node::Abs(a) => write!(f, "abs({a})"),
            Node::Sign(a) => write!(f, "sign({a})"),
            Node::Tanh(a) => write!(f, "tanh({a})"),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = crate::error::Error;

    /// Parses an expression without parameters; see [`parse`] for the general form.
    fn from_str(s: &str) -> Result<Self> {
        parse(s, &[])
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
