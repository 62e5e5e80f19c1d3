use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{BinOp, Func, Node};
use crate::error::EvalError;

/// Number types the evaluator runs on: `f64` and nested dual numbers.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    /// The plain value, used for domain checks.
    fn real(&self) -> f64;
    fn all_finite(&self) -> bool;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn powf(self, c: f64) -> Self;
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn real(&self) -> f64 {
        *self
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powf(self, c: f64) -> Self {
        f64::powf(self, c)
    }
}

fn fault(message: impl Into<String>, node: &Node, names: &[String]) -> EvalError {
    EvalError {
        message: message.into(),
        subexpr: node.display(names).to_string(),
    }
}

/// `x^n` by binary exponentiation.
fn powi<S: Scalar>(x: S, n: i64) -> S {
    let mut base = x;
    let mut k = n.unsigned_abs();
    let mut acc = S::constant(1.0);
    while k > 0 {
        if k & 1 == 1 {
            acc = acc * base;
        }
        k >>= 1;
        if k > 0 {
            base = base * base;
        }
    }
    if n < 0 {
        S::constant(1.0) / acc
    } else {
        acc
    }
}

pub(crate) fn eval_node<S: Scalar>(node: &Node, vars: &[S], names: &[String]) -> Result<S, EvalError> {
    let out = match node {
        Node::Num(x) => S::constant(*x),
        Node::Const(c) => S::constant(c.value()),
        Node::Var(i) => vars[*i],
        Node::Neg(a) => -eval_node(a, vars, names)?,
        Node::Call(f, a) => {
            let x = eval_node(a, vars, names)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log => {
                    if x.real() <= 0.0 {
                        return Err(fault(format!("log of non-positive value {}", x.real()), node, names));
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x.real() < 0.0 {
                        return Err(fault(format!("sqrt of negative value {}", x.real()), node, names));
                    }
                    x.sqrt()
                }
                Func::Abs => x.abs(),
            }
        }
        Node::Bin(op, a, b) => {
            let x = eval_node(a, vars, names)?;
            let y = eval_node(b, vars, names)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y.real() == 0.0 {
                        return Err(fault("division by zero", node, names));
                    }
                    x / y
                }
                BinOp::Pow => pow(x, y, !b.has_vars(), node, names)?,
            }
        }
    };
    if !out.all_finite() {
        let what = if out.real().is_finite() {
            "non-finite derivative"
        } else {
            "non-finite result"
        };
        return Err(fault(what, node, names));
    }
    Ok(out)
}

// Whether the exponent is constant is decided from the syntax tree, so that
// plain and dual evaluation take the same branch.
fn pow<S: Scalar>(x: S, y: S, const_exp: bool, node: &Node, names: &[String]) -> Result<S, EvalError> {
    let (b, e) = (x.real(), y.real());
    if const_exp {
        if e.fract() == 0.0 && e.abs() < 1e9 {
            if b == 0.0 && e < 0.0 {
                return Err(fault("zero raised to a negative power", node, names));
            }
            return Ok(powi(x, e as i64));
        }
        if b < 0.0 {
            return Err(fault(
                format!("negative base {b} with non-integer exponent {e}"),
                node,
                names,
            ));
        }
        if b == 0.0 && e < 0.0 {
            return Err(fault("zero raised to a negative power", node, names));
        }
        return Ok(x.powf(e));
    }
    if b <= 0.0 {
        return Err(fault(
            format!("variable exponent needs a positive base, got {b}"),
            node,
            names,
        ));
    }
    Ok((y * x.ln()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_powers_are_exact() {
        assert_eq!(powi(3.0, 4), 81.0);
        assert_eq!(powi(2.0, -3), 0.125);
        assert_eq!(powi(7.0, 0), 1.0);
        assert_eq!(powi(1.1, 2), 1.1 * 1.1);
    }
}
