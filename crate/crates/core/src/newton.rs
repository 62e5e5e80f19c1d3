//! Damped Newton iteration on a square nonlinear system `r(x) = 0`.
//!
//! Steps are damped by halving until the merit `½‖r‖²` decreases
//! sufficiently (Armijo, `c = 1e-4`). Trial points at which the system cannot
//! be evaluated (domain faults) are treated like rejected steps.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Stop once `‖r‖∞` falls to this level.
    pub gtol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iter: 200,
            gtol: 1e-12,
        }
    }
}

pub trait NewtonSystem {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// The Newton step `d` with `J(x) d = -r`.
    fn step(&self, x: &[f64], r: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

const MAX_HALVINGS: usize = 50;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn merit(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// One extra full step once converged, kept if it does not worsen the
/// merit; flat directions otherwise stop short of the root by `gtol/curvature`.
fn polish(sys: &dyn NewtonSystem, x: Vec<f64>, r: Vec<f64>, iterations: usize) -> NewtonReport {
    let norm = inf_norm(&r);
    let improved = sys.step(&x, &r).ok().and_then(|d| {
        let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + di).collect();
        let rt = sys.residual(&trial).ok()?;
        (rt.iter().all(|v| v.is_finite()) && merit(&rt) <= merit(&r)).then_some((trial, rt))
    });
    match improved {
        Some((xt, rt)) => NewtonReport {
            x: xt,
            iterations: iterations + 1,
            residual_norm: inf_norm(&rt),
        },
        None => NewtonReport {
            x,
            iterations,
            residual_norm: norm,
        },
    }
}

pub fn damped_newton(sys: &dyn NewtonSystem, x0: &[f64], opts: NewtonOptions) -> Result<NewtonReport> {
    let mut x = x0.to_vec();
    let mut r = sys.residual(&x)?;
    for iter in 0..opts.max_iter {
        let norm = inf_norm(&r);
        if norm <= opts.gtol {
            return Ok(polish(sys, x, r, iter));
        }
        let d = sys.step(&x, &r)?;
        // A Newton correction at rounding level means x is already a root to
        // working precision, even if ‖r‖ sits slightly above gtol.
        if inf_norm(&d) <= 1e-13 * (1.0 + inf_norm(&x)) {
            return Ok(NewtonReport {
                x,
                iterations: iter,
                residual_norm: norm,
            });
        }
        let m0 = merit(&r);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            if let Ok(rt) = sys.residual(&trial) {
                if rt.iter().all(|v| v.is_finite()) && merit(&rt) <= (1.0 - 2e-4 * alpha) * m0 {
                    accepted = Some((trial, rt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((xt, rt)) => {
                x = xt;
                r = rt;
            }
            None => {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    gradient_norm: norm,
                })
            }
        }
    }
    let norm = inf_norm(&r);
    if norm <= opts.gtol {
        return Ok(NewtonReport {
            x,
            iterations: opts.max_iter,
            residual_norm: norm,
        });
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        gradient_norm: norm,
    })
}
