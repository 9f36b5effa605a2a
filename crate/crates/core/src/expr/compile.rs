use super::{const_pow, sign, Expr, Node, Params};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    X,
    Add,
    Mul,
    Div,
    Neg,
    PowI(i32),
    PowF(f64),
    Exp,
    Log,
    Abs,
    Sign,
    Tanh,
}

const INLINE_STACK: usize = 32;

/// An expression with its parameters bound, flattened to a postfix program.
///
/// Cheap to clone and safe to evaluate from many threads.
#[derive(Debug, Clone)]
pub struct Compiled {
    ops: std::sync::Arc<[Op]>,
    depth: usize,
}

impl Compiled {
    pub(super) fn new(e: &Expr, params: &Params) -> Result<Compiled> {
        let mut ops = Vec::new();
        emit(e, params, &mut ops)?;
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::X => depth += 1,
                Op::Add | Op::Mul | Op::Div => depth -= 1,
                _ => {}
            }
            max_depth = max_depth.max(depth);
        }
        Ok(Compiled {
            ops: ops.into(),
            depth: max_depth,
        })
    }

    /// Returns the constant value when the program does not read `x`.
    pub fn as_constant(&self) -> Option<f64> {
        match &*self.ops {
            [Op::Const(c)] => Some(*c),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if self.depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            run(&self.ops, x, &mut stack, &mut |_| {}).unwrap_or(f64::NAN)
        } else {
            let mut stack = vec![0.0f64; self.depth];
            run(&self.ops, x, &mut stack, &mut |_| {}).unwrap_or(f64::NAN)
        }
    }

    /// Like [`Compiled::eval`], but a logarithm of a non-positive argument is an error.
    pub fn eval_checked(&self, x: f64) -> Result<f64> {
        let mut stack = vec![0.0f64; self.depth.max(1)];
        let mut bad = false;
        let v = run(&self.ops, x, &mut stack, &mut |arg| {
            if arg <= 0.0 {
                bad = true;
            }
        });
        if bad {
            return Err(Error::Domain { op: "log", x });
        }
        Ok(v.unwrap_or(f64::NAN))
    }
}

#[inline]
fn run(ops: &[Op], x: f64, stack: &mut [f64], on_log: &mut impl FnMut(f64)) -> Option<f64> {
    let mut sp = 0usize;
    for op in ops {
        match *op {
            Op::Const(c) => {
                stack[sp] = c;
                sp += 1;
            }
            Op::X => {
                stack[sp] = x;
                sp += 1;
            }
            Op::Add => {
                sp -= 1;
                stack[sp - 1] += stack[sp];
            }
            Op::Mul => {
                sp -= 1;
                stack[sp - 1] *= stack[sp];
            }
            Op::Div => {
                sp -= 1;
                stack[sp - 1] /= stack[sp];
            }
            Op::Neg => stack[sp - 1] = -stack[sp - 1],
            Op::PowI(n) => stack[sp - 1] = stack[sp - 1].powi(n),
            Op::PowF(c) => stack[sp - 1] = stack[sp - 1].powf(c),
            Op::Exp => stack[sp - 1] = stack[sp - 1].exp(),
            Op::Log => {
                on_log(stack[sp - 1]);
                stack[sp - 1] = stack[sp - 1].ln();
            }
            Op::Abs => stack[sp - 1] = stack[sp - 1].abs(),
            Op::Sign => stack[sp - 1] = sign(stack[sp - 1]),
            Op::Tanh => stack[sp - 1] = stack[sp - 1].tanh(),
        }
    }
    (sp == 1).then(|| stack[0])
}

/// Values of x-free subtrees with parameters substituted.
fn fold(e: &Expr, params: &Params) -> Result<f64> {
    let mut ops = Vec::new();
    emit(e, params, &mut ops)?;
    let mut stack = vec![0.0; ops.len().max(1)];
    Ok(run(&ops, 0.0, &mut stack, &mut |_| {}).unwrap_or(f64::NAN))
}

fn emit(e: &Expr, params: &Params, ops: &mut Vec<Op>) -> Result<()> {
    match e.node() {
        Node::Const(c) => ops.push(Op::Const(*c)),
        Node::X => ops.push(Op::X),
        Node::Param(p) => {
            let v = params
                .get(p.as_ref())
                .ok_or_else(|| Error::UnboundParameter(p.to_string()))?;
            ops.push(Op::Const(*v));
        }
        Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            emit(a, params, ops)?;
            emit(b, params, ops)?;
            ops.push(match e.node() {
                Node::Add(..) => Op::Add,
                Node::Mul(..) => Op::Mul,
                _ => Op::Div,
            });
        }
        Node::Pow(u, c) => {
            let exponent = fold(c, params)?;
            if !u.depends_on_x() {
                ops.push(Op::Const(const_pow(fold(u, params)?, exponent)));
                return Ok(());
            }
            emit(u, params, ops)?;
            if exponent.fract() == 0.0 && exponent.abs() <= 64.0 {
                ops.push(Op::PowI(exponent as i32));
            } else {
                ops.push(Op::PowF(exponent));
            }
        }
        Node::Neg(a)
        | Node::Exp(a)
        | Node::Log(a)
        | Node::Abs(a)
        | Node::Sign(a)
        | Node::Tanh(a) => {
            emit(a, params, ops)?;
            ops.push(match e.node() {
                Node::Neg(_) => Op::Neg,
                Node::Exp(_) => Op::Exp,
                Node::Log(_) => Op::Log,
                Node::Abs(_) => Op::Abs,
                Node::Sign(_) => Op::Sign,
                _ => Op::Tanh,
            });
        }
    }
    Ok(())
}
