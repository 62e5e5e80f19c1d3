//! Stationary points of `H(F(y))` over the free values of `y`, with a
//! Lagrange multiplier when a constraint is present.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::residuals::{classify_extremal, el_residuals, iso_residuals, transversality_residuals, Normality};
use super::{CompositionProblem, Evaluated};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::linalg::{dot, solve_bordered, Structured};
use crate::newton::{damped_newton, NewtonOptions, NewtonSystem};
use crate::timescale::TimeScale;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    #[default]
    Min,
    Max,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Min => "min",
            Objective::Max => "max",
        })
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(Objective::Min),
            "max" => Ok(Objective::Max),
            other => Err(Error::InvalidProblem(format!("objective must be `min` or `max`, not `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub objective: Objective,
    pub multistart: usize,
    pub seed: u64,
    pub newton: NewtonOptions,
    /// Constancy tolerance for accepting a stationary point.
    pub tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            objective: Objective::Min,
            multistart: 8,
            seed: 0,
            newton: NewtonOptions::default(),
            tolerance: 1e-8,
        }
    }
}

/// Largest absolute residual of every condition checked on the solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSummary {
    pub el_delta: f64,
    pub el_nabla: f64,
    pub transversality_initial: Option<f64>,
    pub transversality_terminal: Option<f64>,
    /// The four isoperimetric conditions.
    pub iso: Option<[f64; 4]>,
    /// `|K[y] − d|`.
    pub constraint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extremal {
    pub y: GridFunction,
    pub lambda: Option<f64>,
    pub value: f64,
    pub residuals: ResidualSummary,
    pub normality: Option<Normality>,
    /// Index of the start that produced this point.
    pub start: usize,
    pub iterations: usize,
    /// Final residual norm of every start (`inf` where evaluation failed).
    pub start_norms: Vec<f64>,
}

struct CompositionSystem<'a> {
    cp: &'a CompositionProblem,
    free: Vec<usize>,
    template: Vec<f64>,
}

impl CompositionSystem<'_> {
    fn full(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.template.clone();
        for (&i, &v) in self.free.iter().zip(x) {
            y[i] = v;
        }
        y
    }

    fn restrict(&self, g: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| g[i]).collect()
    }

    fn evaluate(&self, x: &[f64]) -> Result<(Evaluated, Option<Evaluated>)> {
        let y = self.full(&x[..self.free.len()]);
        let ts = &self.cp.scale;
        let ev = self.cp.objective.evaluate(ts, &y)?;
        let ek = match &self.cp.iso {
            Some(iso) => Some(iso.constraint.evaluate(ts, &y)?),
            None => None,
        };
        Ok((ev, ek))
    }

    /// Least-squares multiplier for `∇L ≈ λ ∇K` at `x`.
    fn initial_lambda(&self, x: &[f64]) -> f64 {
        match self.evaluate(x) {
            Ok((ev, Some(ek))) => {
                let gl = self.restrict(&ev.gradient());
                let gk = self.restrict(&ek.gradient());
                let kk = dot(&gk, &gk);
                if kk > 0.0 {
                    dot(&gl, &gk) / kk
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    fn structured(&self, ev: &Evaluated, ek: Option<(&Evaluated, f64)>) -> Structured {
        let mut t = ev.tridiagonal().principal(&self.free);
        let mut u: Vec<Vec<f64>> = ev.grads.iter().map(|g| self.restrict(g)).collect();
        let r1 = u.len();
        let mut blocks = vec![(DMatrix::from_fn(r1, r1, |i, j| ev.outer.second[i][j]), 1.0)];
        if let Some((ek, lambda)) = ek {
            t.add_scaled(&ek.tridiagonal().principal(&self.free), -lambda);
            u.extend(ek.grads.iter().map(|g| self.restrict(g)));
            let r2 = ek.grads.len();
            blocks.push((DMatrix::from_fn(r2, r2, |i, j| ek.outer.second[i][j]), -lambda));
        }
        let r = u.len();
        let mut c = DMatrix::zeros(r, r);
        let mut off = 0;
        for (b, s) in blocks {
            let k = b.nrows();
            c.view_mut((off, off), (k, k)).copy_from(&(b * s));
            off += k;
        }
        Structured { t, u, c }
    }
}

impl NewtonSystem for CompositionSystem<'_> {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (ev, ek) = self.evaluate(x)?;
        let mut r = self.restrict(&ev.gradient());
        if let (Some(ek), Some(iso)) = (ek, &self.cp.iso) {
            let lambda = x[self.free.len()];
            for (ri, gi) in r.iter_mut().zip(self.restrict(&ek.gradient())) {
                *ri -= lambda * gi;
            }
            r.push(ek.outer.value - iso.target);
        }
        Ok(r)
    }

    fn step(&self, x: &[f64], r: &[f64]) -> Result<Vec<f64>> {
        let nf = self.free.len();
        let (ev, ek) = self.evaluate(x)?;
        match ek {
            None => {
                let neg: Vec<f64> = r.iter().map(|v| -v).collect();
                self.structured(&ev, None).solve(&neg)
            }
            Some(ek) => {
                // [A −g; gᵀ 0][dx; dλ] = −r, solved as [A g; gᵀ 0][dx; −dλ].
                let lambda = x[nf];
                let a = self.structured(&ev, Some((&ek, lambda)));
                let g = self.restrict(&ek.gradient());
                let r1: Vec<f64> = r[..nf].iter().map(|v| -v).collect();
                let (mut dx, l) = solve_bordered(&a, &g, &r1, -r[nf])?;
                dx.push(-l);
                Ok(dx)
            }
        }
    }
}

/// Smooth starting curve number `k`: the boundary interpolant plus, for
/// `k > 0`, one dominant sine mode (cycling through modes 1..3 with both
/// signs, amplitude growing every six starts). From the seventh start on,
/// seeded noise is added to all modes and to free ends.
fn start_curve(cp: &CompositionProblem, k: usize, seed: u64) -> Vec<f64> {
    let ts = &cp.scale;
    let (a, b) = (ts.min(), ts.max());
    let base = |s: f64| match (cp.y_a, cp.y_b) {
        (Some(ya), Some(yb)) => ya + (yb - ya) * s,
        (Some(ya), None) => ya,
        (None, Some(yb)) => yb,
        (None, None) => 0.0,
    };
    let spread = [cp.y_a, cp.y_b, cp.y_a.zip(cp.y_b).map(|(p, q)| q - p)]
        .into_iter()
        .flatten()
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let mut coef = [0.0; 5];
    if k > 0 {
        let j = k - 1;
        let amp = 1.5 * spread * (1 + j / 6) as f64;
        if j >= 6 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            for c in &mut coef {
                *c = 0.25 * amp * rng.gen_range(-1.0..1.0);
            }
        }
        coef[(j / 2) % 3] += if j % 2 == 0 { amp } else { -amp };
    }
    if cp.y_a.is_some() {
        coef[3] = 0.0;
    }
    if cp.y_b.is_some() {
        coef[4] = 0.0;
    }
    ts.points()
        .iter()
        .map(|&t| {
            let s = (t - a) / (b - a);
            base(s)
                + (1..=3).map(|m| coef[m - 1] * (m as f64 * PI * s).sin()).sum::<f64>()
                + coef[3] * (1.0 - s)
                + coef[4] * s
        })
        .collect()
}

/// Multi-start damped Newton on the stationarity system.
///
/// Every start that converges is checked against the Euler–Lagrange forms
/// (and the isoperimetric conditions 1 and 4 with the feasibility of the
/// constraint); among the accepted points the best by `opts.objective` wins,
/// ties within `1e-12` going to the lowest start index.
pub fn solve_composition(cp: &CompositionProblem, opts: &SolveOptions) -> Result<Extremal> {
    if !cp.scale.is_exact() {
        return Err(Error::InvalidProblem(format!(
            "solve_composition needs an exact isolated scale, not {}",
            cp.scale.kind()
        )));
    }
    if opts.multistart == 0 {
        return Err(Error::InvalidProblem("multistart must be at least 1".into()));
    }
    let sys = system(cp, opts.seed);
    let mut norms = Vec::with_capacity(opts.multistart);
    let mut best: Option<Extremal> = None;
    for k in 0..opts.multistart {
        let (norm, cand) = run_start(cp, &sys, &start_curve(cp, k, opts.seed), None, k, opts);
        norms.push(norm);
        let Some(cand) = cand else { continue };
        let better = match &best {
            None => true,
            Some(b) => {
                let margin = 1e-12 * (1.0 + b.value.abs());
                match opts.objective {
                    Objective::Min => cand.value < b.value - margin,
                    Objective::Max => cand.value > b.value + margin,
                }
            }
        };
        if better {
            best = Some(cand);
        }
    }
    match best {
        Some(mut e) => {
            e.start_norms = norms;
            Ok(e)
        }
        None => Err(Error::NoConvergentStart { norms }),
    }
}

/// A single Newton run from `init` (and `lambda0` when a constraint is
/// present; by default the least-squares multiplier at `init`).
pub fn solve_from(cp: &CompositionProblem, init: &GridFunction, lambda0: Option<f64>, opts: &SolveOptions) -> Result<Extremal> {
    if !cp.scale.is_exact() {
        return Err(Error::InvalidProblem(format!(
            "solve_from needs an exact isolated scale, not {}",
            cp.scale.kind()
        )));
    }
    if !init.is_full() || init.scale().points() != cp.scale.points() {
        return Err(Error::Domain("the initial guess must cover the whole scale".into()));
    }
    let sys = system(cp, opts.seed);
    let mut y0 = init.values().to_vec();
    for (i, v) in [(0, cp.y_a), (y0.len() - 1, cp.y_b)] {
        if let Some(v) = v {
            y0[i] = v;
        }
    }
    match run_start(cp, &sys, &y0, lambda0, 0, opts) {
        (_, Some(mut e)) => {
            e.start_norms = vec![e.start_norms.first().copied().unwrap_or(0.0)];
            Ok(e)
        }
        (norm, None) => Err(Error::NoConvergentStart { norms: vec![norm] }),
    }
}

fn system(cp: &CompositionProblem, seed: u64) -> CompositionSystem<'_> {
    let n = cp.scale.len();
    let free: Vec<usize> = (0..n)
        .filter(|&i| !((i == 0 && cp.y_a.is_some()) || (i == n - 1 && cp.y_b.is_some())))
        .collect();
    CompositionSystem {
        cp,
        free,
        template: start_curve(cp, 0, seed),
    }
}

/// Final residual norm of the run and the accepted extremal, if any.
fn run_start(
    cp: &CompositionProblem,
    sys: &CompositionSystem<'_>,
    y0: &[f64],
    lambda0: Option<f64>,
    k: usize,
    opts: &SolveOptions,
) -> (f64, Option<Extremal>) {
    let mut x0 = sys.restrict(y0);
    if cp.iso.is_some() {
        let l = lambda0.unwrap_or_else(|| sys.initial_lambda(&x0));
        x0.push(l);
    }
    match damped_newton(sys, &x0, opts.newton) {
        Ok(rep) => {
            let cand = accept(cp, sys, &rep.x, k, rep.iterations, opts).ok().flatten();
            let cand = cand.map(|mut e| {
                e.start_norms = vec![rep.residual_norm];
                e
            });
            (rep.residual_norm, cand)
        }
        Err(Error::NoConvergence { gradient_norm, .. }) => (gradient_norm, None),
        Err(_) => (f64::INFINITY, None),
    }
}

/// Builds the extremal for a Newton root, or `None` if it fails the checks.
fn accept(
    cp: &CompositionProblem,
    sys: &CompositionSystem<'_>,
    x: &[f64],
    start: usize,
    iterations: usize,
    opts: &SolveOptions,
) -> Result<Option<Extremal>> {
    let nf = sys.free.len();
    let y = GridFunction::new(cp.scale.clone(), sys.full(&x[..nf]))?;
    let tol = opts.tolerance;
    let forms = el_residuals(cp, &y)?;
    // Runaway curves along which H' decays make every absolute residual
    // small; judge constancy against the size of the summands as well.
    let mut size = cp.objective.evaluate(&cp.scale, y.values())?.magnitude(&cp.scale);
    let worst = match &cp.iso {
        Some(iso) => {
            let lambda = x[nf];
            size += lambda.abs() * iso.constraint.evaluate(&cp.scale, y.values())?.magnitude(&cp.scale);
            let r = iso_residuals(cp, &y, lambda)?.max_abs();
            r[0].max(r[3])
        }
        None => forms.delta_form.max_abs().max(forms.nabla_form.max_abs()),
    };
    if worst > tol * size {
        return Ok(None);
    }
    // With a constraint the plain forms carry the multiplier term and are
    // judged through the isoperimetric conditions instead.
    let mut ok = cp.iso.is_some()
        || (forms.delta_form.max_abs() <= tol * (1.0 + forms.c_delta.abs())
            && forms.nabla_form.max_abs() <= tol * (1.0 + forms.c_nabla.abs()));
    let tr = transversality_residuals(cp, &y)?;
    let scale = 1.0 + forms.c_delta.abs();
    let free_a = cp.y_a.is_none().then_some(tr.initial).flatten();
    let free_b = cp.y_b.is_none().then_some(tr.terminal).flatten();
    if cp.iso.is_none() {
        for v in [free_a, free_b].into_iter().flatten() {
            ok &= v.abs() <= tol * scale;
        }
    }
    let (lambda, iso, constraint, normality) = match &cp.iso {
        Some(_) => {
            let lambda = x[nf];
            let r = iso_residuals(cp, &y, lambda)?;
            ok &= r.holds(0) && r.holds(3) && r.constraint_violation.abs() <= 1e-10;
            (
                Some(lambda),
                Some(r.max_abs()),
                Some(r.constraint_violation.abs()),
                Some(classify_extremal(cp, &y)?),
            )
        }
        None => (None, None, None, None),
    };
    if !ok {
        return Ok(None);
    }
    let value = cp.objective.evaluate(&cp.scale, y.values())?.outer.value;
    Ok(Some(Extremal {
        y,
        lambda,
        value,
        residuals: ResidualSummary {
            el_delta: forms.delta_form.max_abs(),
            el_nabla: forms.nabla_form.max_abs(),
            transversality_initial: tr.initial.map(f64::abs),
            transversality_terminal: tr.terminal.map(f64::abs),
            iso,
            constraint,
        },
        normality,
        start,
        iterations,
        start_norms: Vec::new(),
    }))
}

/// Solves the problem built by `build` on `hZ(2^{-e}, a, b)` for each `e`.
pub fn solve_refinement(
    build: impl Fn(Arc<TimeScale>) -> Result<CompositionProblem>,
    a: f64,
    b: f64,
    exponents: impl IntoIterator<Item = u32>,
    opts: &SolveOptions,
) -> Result<Vec<(f64, Extremal)>> {
    exponents
        .into_iter()
        .map(|e| {
            let h = 0.5f64.powi(e as i32);
            let cp = build(Arc::new(TimeScale::hz(h, a, b)?))?;
            Ok((h, solve_composition(&cp, opts)?))
        })
        .collect()
}
