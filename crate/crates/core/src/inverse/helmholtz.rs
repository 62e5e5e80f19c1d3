//! Equations of variation and the self-adjointness test for
//! `H[y](t) + ∫_{t0}^t G[y](s) Δs = const`, where `[y](t) = (t, y^σ(t), y^Δ(t))`
//! and `t0` is the left end of the scale.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{DiffValue, Expr};
use crate::grid::GridFunction;
use crate::timescale::TimeScale;

pub const CERTIFY_TOL: f64 = 1e-10;
pub const REFUTE_TOL: f64 = 1e-6;
/// `|H_v|` at or below this counts as vanishing.
pub const DEGENERATE_TOL: f64 = 1e-14;

const TYV: [&str; 3] = ["t", "y", "v"];

#[derive(Debug, Clone, PartialEq)]
pub struct IntegroDiffEquation {
    pub h: Expr,
    pub g: Expr,
}

impl IntegroDiffEquation {
    pub fn new(h: Expr, g: Expr) -> Result<Self> {
        for (name, e) in [("H", &h), ("G", &g)] {
            if e.vars() != TYV {
                return Err(Error::InvalidProblem(format!(
                    "{name} must be an expression over t, y, v, not ({})",
                    e.vars().join(", ")
                )));
            }
        }
        Ok(IntegroDiffEquation { h, g })
    }

    pub fn from_text(h: &str, g: &str) -> Result<Self> {
        Self::new(Expr::parse(h, &TYV)?, Expr::parse(g, &TYV)?)
    }

    fn partials(e: &Expr, t: f64, y: f64, v: f64) -> Result<(f64, f64)> {
        let d: DiffValue = e.eval_with_partials(&[t, y, v])?;
        Ok((d.first[1], d.first[2]))
    }
}

/// `(t, y^σ, y^Δ)` at every point of `T^κ`.
fn brackets(y: &GridFunction) -> Vec<(f64, f64, f64)> {
    let ts = y.scale();
    ts.kappa_upper()
        .map(|i| {
            let sig = y.at(i + 1);
            (ts.t(i), sig, (sig - y.at(i)) / ts.mu(i))
        })
        .collect()
}

fn check_full(y: &GridFunction, what: &str) -> Result<()> {
    if !y.is_full() || y.len() < 2 {
        return Err(Error::Domain(format!("{what} must cover a scale of at least two points")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variation {
    /// Left side of the equation of variation on `T^κ`.
    pub residual: GridFunction,
    /// Points where `H_v` vanishes along the base curve.
    pub degenerate: Vec<f64>,
}

/// `H_y u^σ + H_v u^Δ + Σ_{s<t} μ(s)(G_y u^σ + G_v u^Δ)(s)` with the partials
/// taken along `base`.
pub fn equation_of_variation(ide: &IntegroDiffEquation, base: &GridFunction, u: &GridFunction) -> Result<Variation> {
    check_full(base, "the base curve")?;
    check_full(u, "the variation")?;
    if base.scale().points() != u.scale().points() {
        return Err(Error::Domain("the base curve and the variation live on different scales".into()));
    }
    let ts = base.scale().clone();
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(ts.len() - 1);
    let mut degenerate = Vec::new();
    for (i, (t, y, v)) in brackets(base).into_iter().enumerate() {
        let (hy, hv) = IntegroDiffEquation::partials(&ide.h, t, y, v)?;
        let (gy, gv) = IntegroDiffEquation::partials(&ide.g, t, y, v)?;
        if hv.abs() <= DEGENERATE_TOL {
            degenerate.push(t);
        }
        let mu = ts.mu(i);
        let us = u.at(i + 1);
        let ud = (us - u.at(i)) / mu;
        values.push(hy * us + hv * ud + acc);
        acc += mu * (gy * us + gv * ud);
    }
    Ok(Variation {
        residual: GridFunction::on_domain(ts, 0, values)?,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HelmholtzStatus {
    CertifiedSelfAdjoint,
    NotEulerLagrange,
    Undecided,
}

impl fmt::Display for HelmholtzStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HelmholtzStatus::CertifiedSelfAdjoint => "CERTIFIED_SELF_ADJOINT",
            HelmholtzStatus::NotEulerLagrange => "NOT_EULER_LAGRANGE",
            HelmholtzStatus::Undecided => "UNDECIDED",
        })
    }
}

/// Where `D = H_y + G_v` was largest.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub curve: GridFunction,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzVerdict {
    pub status: HelmholtzStatus,
    pub witness: Option<Witness>,
    pub max_abs_d: f64,
    pub trials: usize,
    pub seed: u64,
    pub notes: Vec<String>,
}

/// A cubic in normalized time with coefficients in `[−1, 1]`, scaled into `[−1, 1]`.
fn random_curve(ts: &Arc<TimeScale>, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
    let (a, b) = (ts.min(), ts.max());
    let mut values: Vec<f64> = ts
        .points()
        .iter()
        .map(|&t| {
            let s = (t - a) / (b - a);
            c[0] + s * (c[1] + s * (c[2] + s * c[3]))
        })
        .collect();
    let peak = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    values.iter_mut().for_each(|v| *v /= peak);
    GridFunction::new(ts.clone(), values)
}

/// Samples `trials` random curves and evaluates `D = H_y + G_v` along each.
///
/// `D ≡ 0` certifies self-adjointness of the equation of variation. A large
/// `D` refutes the Euler–Lagrange property only when `H_y` and `G_v` do not
/// depend on `(y, v)` at the witness time; otherwise the test is inconclusive.
pub fn helmholtz_check(ide: &IntegroDiffEquation, scale: &Arc<TimeScale>, trials: usize, seed: u64) -> Result<HelmholtzVerdict> {
    if trials == 0 {
        return Err(Error::InvalidProblem("the Helmholtz check needs at least one trial".into()));
    }
    if scale.len() < 2 {
        return Err(Error::InvalidProblem("the Helmholtz check needs at least two points".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_abs_d = 0.0f64;
    let mut witness: Option<(Witness, f64, f64)> = None;
    let mut degenerate = Vec::new();
    for _ in 0..trials {
        let curve = random_curve(scale, &mut rng)?;
        let mut best: Option<(f64, f64, f64, f64)> = None;
        for (t, y, v) in brackets(&curve) {
            let (hy, hv) = IntegroDiffEquation::partials(&ide.h, t, y, v)?;
            let (_, gv) = IntegroDiffEquation::partials(&ide.g, t, y, v)?;
            if hv.abs() <= DEGENERATE_TOL {
                degenerate.push(t);
            }
            let d = hy + gv;
            if !d.is_finite() {
                return Err(Error::InvalidProblem(format!("H_y + G_v is not finite at t = {t}")));
            }
            if d.abs() > best.map_or(-1.0, |b| b.1.abs()) {
                best = Some((t, d, y, v));
            }
        }
        if let Some((t, d, y, v)) = best {
            if d.abs() > max_abs_d || witness.is_none() {
                max_abs_d = max_abs_d.max(d.abs());
                witness = Some((Witness { curve, t, value: d }, y, v));
            }
        }
    }

    let mut notes = Vec::new();
    if !degenerate.is_empty() {
        degenerate.sort_by(f64::total_cmp);
        degenerate.dedup();
        notes.push(format!(
            "H_v vanishes along sampled curves at {} point(s), first at t = {}",
            degenerate.len(),
            degenerate[0]
        ));
    }

    let status = if max_abs_d <= CERTIFY_TOL {
        HelmholtzStatus::CertifiedSelfAdjoint
    } else {
        let (w, _, _) = witness.as_ref().expect("at least one trial");
        if max_abs_d > REFUTE_TOL && structurally_constant(ide, w.t, &mut rng)? {
            HelmholtzStatus::NotEulerLagrange
        } else {
            if max_abs_d <= REFUTE_TOL {
                notes.push(format!("H_y + G_v is small but nonzero (max {max_abs_d:e})"));
            } else {
                notes.push("H_y + G_v depends on the curve; the sufficient condition is inconclusive".into());
            }
            HelmholtzStatus::Undecided
        }
    };
    let witness = match status {
        HelmholtzStatus::CertifiedSelfAdjoint => None,
        _ => witness.map(|(w, _, _)| w),
    };
    Ok(HelmholtzVerdict {
        status,
        witness,
        max_abs_d,
        trials,
        seed,
        notes,
    })
}

/// Whether `H_y` and `G_v` take the same value at `t` for a spread of `(y, v)`.
fn structurally_constant(ide: &IntegroDiffEquation, t: f64, rng: &mut ChaCha8Rng) -> Result<bool> {
    let (hy0, _) = IntegroDiffEquation::partials(&ide.h, t, 0.0, 0.0)?;
    let (_, gv0) = IntegroDiffEquation::partials(&ide.g, t, 0.0, 0.0)?;
    for _ in 0..16 {
        let y = rng.gen_range(-2.0..=2.0);
        let v = rng.gen_range(-2.0..=2.0);
        let (hy, _) = IntegroDiffEquation::partials(&ide.h, t, y, v)?;
        let (_, gv) = IntegroDiffEquation::partials(&ide.g, t, y, v)?;
        if (hy - hy0).abs() > 1e-12 * (1.0 + hy0.abs()) || (gv - gv0).abs() > 1e-12 * (1.0 + gv0.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}
