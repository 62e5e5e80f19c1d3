//! The integrand expression language.
//!
//! Expressions are parsed against a declared list of variable names and
//! evaluated either plainly or with nested dual numbers, which gives first
//! and second partials exact to rounding.

mod dual;
mod eval;
mod parse;

use std::fmt;

pub use dual::Dual;
pub use eval::Scalar;

use crate::error::{EvalError, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn prec(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    fn from_name(name: &str) -> Option<Constant> {
        match name {
            "pi" => Some(Constant::Pi),
            "e" => Some(Constant::E),
            _ => None,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Const(Constant),
    /// Index into the declared variable list.
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 5;

impl Node {
    fn prec(&self) -> u8 {
        match self {
            Node::Num(x) if *x < 0.0 || (*x == 0.0 && x.is_sign_negative()) => PREC_NEG,
            Node::Bin(op, ..) => op.prec(),
            Node::Neg(_) => PREC_NEG,
            _ => PREC_ATOM,
        }
    }

    pub fn has_vars(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Num(_) | Node::Const(_) => false,
            Node::Neg(a) | Node::Call(_, a) => a.has_vars(),
            Node::Bin(_, a, b) => a.has_vars() || b.has_vars(),
        }
    }

    fn mentions(&self, var: usize) -> bool {
        match self {
            Node::Var(i) => *i == var,
            Node::Num(_) | Node::Const(_) => false,
            Node::Neg(a) | Node::Call(_, a) => a.mentions(var),
            Node::Bin(_, a, b) => a.mentions(var) || b.mentions(var),
        }
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> NodeDisplay<'a> {
        NodeDisplay { node: self, names }
    }
}

/// Prints a node with the fewest parentheses that re-parse to the same tree.
pub struct NodeDisplay<'a> {
    node: &'a Node,
    names: &'a [String],
}

impl NodeDisplay<'_> {
    fn child<'b>(&'b self, node: &'b Node) -> NodeDisplay<'b> {
        NodeDisplay { node, names: self.names }
    }

    fn wrapped(&self, f: &mut fmt::Formatter<'_>, node: &Node, paren: bool) -> fmt::Result {
        if paren {
            write!(f, "({})", self.child(node))
        } else {
            write!(f, "{}", self.child(node))
        }
    }
}

impl fmt::Display for NodeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node {
            Node::Num(x) => write!(f, "{x}"),
            Node::Const(Constant::Pi) => write!(f, "pi"),
            Node::Const(Constant::E) => write!(f, "e"),
            Node::Var(i) => write!(f, "{}", self.names[*i]),
            Node::Neg(a) => {
                write!(f, "-")?;
                self.wrapped(f, a, a.prec() < PREC_NEG)
            }
            Node::Call(func, a) => write!(f, "{}({})", func.name(), self.child(a)),
            Node::Bin(op, a, b) => {
                let p = op.prec();
                let (left_paren, right_paren) = if *op == BinOp::Pow {
                    (a.prec() <= p, b.prec() < p)
                } else {
                    (a.prec() < p, b.prec() <= p)
                };
                self.wrapped(f, a, left_paren)?;
                if *op == BinOp::Pow {
                    write!(f, "^")?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                self.wrapped(f, b, right_paren)
            }
        }
    }
}

/// A parsed expression together with its declared variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
}

/// Value, gradient and Hessian of an expression at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffValue {
    pub value: f64,
    pub first: Vec<f64>,
    /// Symmetric; `second[i][j] = ∂²f/∂x_i∂x_j`.
    pub second: Vec<Vec<f64>>,
    vars: Vec<String>,
}

impl DiffValue {
    fn index(&self, name: &str) -> usize {
        self.vars
            .iter()
            .position(|v| v == name)
            .unwrap_or_else(|| panic!("no variable `{name}`"))
    }

    pub fn d(&self, name: &str) -> f64 {
        self.first[self.index(name)]
    }

    pub fn d2(&self, a: &str, b: &str) -> f64 {
        self.second[self.index(a)][self.index(b)]
    }
}

impl Expr {
    pub fn parse<S: AsRef<str>>(text: &str, vars: &[S]) -> Result<Expr, ParseError> {
        let vars: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
        let root = parse::parse(text, &vars)?;
        Ok(Expr { root, vars })
    }

    /// The literal `c`, over the given variables.
    pub fn constant<S: AsRef<str>>(c: f64, vars: &[S]) -> Expr {
        Expr {
            root: Node::Num(c),
            vars: vars.iter().map(|v| v.as_ref().to_string()).collect(),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Whether `name` occurs in the expression.
    pub fn depends_on(&self, name: &str) -> bool {
        self.var_index(name).is_some_and(|i| self.root.mentions(i))
    }

    fn check_arity(&self, n: usize) -> Result<(), EvalError> {
        if n != self.vars.len() {
            return Err(EvalError {
                message: format!("expected {} bindings ({}), got {n}", self.vars.len(), self.vars.join(", ")),
                subexpr: self.to_string(),
            });
        }
        Ok(())
    }

    /// Evaluates with `values[i]` bound to the `i`-th declared variable.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        self.check_arity(values.len())?;
        eval::eval_node(&self.root, values, &self.vars)
    }

    /// Evaluates with named bindings; every declared variable must be bound.
    pub fn eval_named(&self, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        let values = self.order_bindings(bindings)?;
        self.eval(&values)
    }

    fn order_bindings(&self, bindings: &[(&str, f64)]) -> Result<Vec<f64>, EvalError> {
        self.vars
            .iter()
            .map(|v| {
                bindings
                    .iter()
                    .find(|(name, _)| name == v)
                    .map(|&(_, x)| x)
                    .ok_or_else(|| EvalError {
                        message: format!("variable `{v}` is not bound"),
                        subexpr: self.to_string(),
                    })
            })
            .collect()
    }

    /// `(f, ∂f/∂x_i, ∂f/∂x_j, ∂²f/∂x_i∂x_j)` in one nested-dual pass.
    pub fn eval_pair(&self, values: &[f64], i: usize, j: usize) -> Result<[f64; 4], EvalError> {
        self.check_arity(values.len())?;
        let seeded: Vec<Dual<Dual<f64>>> = values
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let inner = Dual::new(x, if k == j { 1.0 } else { 0.0 });
                let outer = Dual::new(if k == i { 1.0 } else { 0.0 }, 0.0);
                Dual::new(inner, outer)
            })
            .collect();
        let r = eval::eval_node(&self.root, &seeded, &self.vars)?;
        Ok([r.re.re, r.eps.re, r.re.eps, r.eps.eps])
    }

    /// Value with all first and second partials.
    pub fn eval_with_partials(&self, values: &[f64]) -> Result<DiffValue, EvalError> {
        self.check_arity(values.len())?;
        let n = values.len();
        let mut first = vec![0.0; n];
        let mut second = vec![vec![0.0; n]; n];
        let mut value = None;
        for i in 0..n {
            for j in i..n {
                let [v, di, dj, dij] = self.eval_pair(values, i, j)?;
                value.get_or_insert(v);
                first[i] = di;
                first[j] = dj;
                second[i][j] = dij;
                second[j][i] = dij;
            }
        }
        let value = match value {
            Some(v) => v,
            None => self.eval(values)?,
        };
        Ok(DiffValue {
            value,
            first,
            second,
            vars: self.vars.clone(),
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root.display(&self.vars))
    }
}
