//! Integrands `f(t, y, v)` and their sampled partials along a trajectory.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::timescale::TimeScale;

/// Which shifted arguments an integrand receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// `f(t, y^σ(t), y^Δ(t))` integrated over `[a, b)` with weights `μ`.
    Delta,
    /// `f(t, y^ρ(t), y^∇(t))` integrated over `(a, b]` with weights `ν`.
    Nabla,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Delta => "delta",
            Flavor::Nabla => "nabla",
        })
    }
}

impl std::str::FromStr for Flavor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "delta" => Ok(Flavor::Delta),
            "nabla" => Ok(Flavor::Nabla),
            other => Err(format!("expected `delta` or `nabla`, got `{other}`")),
        }
    }
}

/// Value and partials of `f` in its `y` and `v` slots.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalPartials {
    pub value: f64,
    pub y: f64,
    pub v: f64,
    pub yy: f64,
    pub yv: f64,
    pub vv: f64,
}

pub trait Integrand: Send + Sync {
    /// `idx` is the scale index of `t`; grid-backed integrands use it.
    fn value(&self, idx: usize, t: f64, y: f64, v: f64) -> Result<f64>;
    fn partials(&self, idx: usize, t: f64, y: f64, v: f64) -> Result<LocalPartials>;
    fn describe(&self) -> String;
}

/// An integrand given by an expression over `t, y, v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprIntegrand {
    expr: Expr,
}

pub const TYV: [&str; 3] = ["t", "y", "v"];

impl ExprIntegrand {
    pub fn new(expr: Expr) -> Result<Self> {
        if expr.vars() != TYV {
            return Err(Error::InvalidProblem(format!(
                "integrand must be declared over (t, y, v), not ({})",
                expr.vars().join(", ")
            )));
        }
        Ok(ExprIntegrand { expr })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::new(Expr::parse(text, &TYV)?)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl Integrand for ExprIntegrand {
    fn value(&self, _idx: usize, t: f64, y: f64, v: f64) -> Result<f64> {
        Ok(self.expr.eval(&[t, y, v])?)
    }

    fn partials(&self, _idx: usize, t: f64, y: f64, v: f64) -> Result<LocalPartials> {
        let x = [t, y, v];
        let [value, fy, fv, fyv] = self.expr.eval_pair(&x, 1, 2)?;
        let [_, _, _, fyy] = self.expr.eval_pair(&x, 1, 1)?;
        let [_, _, _, fvv] = self.expr.eval_pair(&x, 2, 2)?;
        Ok(LocalPartials {
            value,
            y: fy,
            v: fv,
            yy: fyy,
            yv: fyv,
            vv: fvv,
        })
    }

    fn describe(&self) -> String {
        self.expr.to_string()
    }
}

/// Arguments `(idx, t, y-slot, v-slot)` of every term of the discrete
/// functional along `y` (a full-length value vector).
///
/// Delta terms sit at `i ∈ [0, N-1)` with `(t_i, y_{i+1}, (y_{i+1}-y_i)/μ_i)`;
/// nabla terms at `i ∈ [1, N)` with `(t_i, y_{i-1}, (y_i-y_{i-1})/ν_i)`.
pub fn term_args(ts: &TimeScale, flavor: Flavor, y: &[f64]) -> Vec<(usize, f64, f64, f64)> {
    let n = ts.len();
    match flavor {
        Flavor::Delta => (0..n - 1)
            .map(|i| (i, ts.t(i), y[i + 1], (y[i + 1] - y[i]) / ts.mu(i)))
            .collect(),
        Flavor::Nabla => (1..n)
            .map(|i| (i, ts.t(i), y[i - 1], (y[i] - y[i - 1]) / ts.nu(i)))
            .collect(),
    }
}

/// Weight `μ_i` or `ν_i` of the term at scale index `i`.
pub fn weight(ts: &TimeScale, flavor: Flavor, i: usize) -> f64 {
    match flavor {
        Flavor::Delta => ts.mu(i),
        Flavor::Nabla => ts.nu(i),
    }
}

/// Shared handle to any integrand.
pub type DynIntegrand = Arc<dyn Integrand>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expression_partials() {
        let f = ExprIntegrand::parse("t*y^2*v + v^3").unwrap();
        let p = f.partials(0, 2.0, 3.0, 0.5).unwrap();
        assert_eq!(p.value, 2.0 * 9.0 * 0.5 + 0.125);
        assert_eq!(p.y, 2.0 * 2.0 * 3.0 * 0.5);
        assert_eq!(p.v, 2.0 * 9.0 + 3.0 * 0.25);
        assert_eq!(p.yy, 2.0 * 2.0 * 0.5);
        assert_eq!(p.yv, 2.0 * 2.0 * 3.0);
        assert_eq!(p.vv, 6.0 * 0.5);
    }

    #[test]
    fn wrong_variables_are_rejected() {
        let e = Expr::parse("x", &["x"]).unwrap();
        assert!(ExprIntegrand::new(e).is_err());
    }

    #[test]
    fn term_arguments() {
        let ts = TimeScale::from_points(vec![0.0, 1.0, 3.0]).unwrap();
        let y = [0.0, 2.0, 6.0];
        assert_eq!(term_args(&ts, Flavor::Delta, &y), vec![(0, 0.0, 2.0, 2.0), (1, 1.0, 6.0, 2.0)]);
        assert_eq!(term_args(&ts, Flavor::Nabla, &y), vec![(1, 1.0, 0.0, 2.0), (2, 3.0, 2.0, 2.0)]);
        assert_eq!(weight(&ts, Flavor::Nabla, 2), 2.0);
    }
}
