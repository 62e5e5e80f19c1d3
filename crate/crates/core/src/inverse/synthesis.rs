//! Lagrangians with a prescribed local minimizer on isolated scales.
//!
//! In the shifted coordinates `z = y^σ − y₀^σ`, `ζ = y^Δ − y₀^Δ` the
//! synthesized integrand is
//!
//! ```text
//! P(t, z) + (Q(t) + q(t, z) − q(t, 0)) ζ + ½ (R(t) + w(t, z, ζ) − w(t, 0, 0)) ζ²
//! ```
//!
//! with `Q(t) = C + Σ_{τ<t} μ(τ) P_y(τ, 0)`, which makes `z ≡ 0` an extremal,
//! and `R` chosen so that the Legendre quantity at `y₀` equals `p`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::GridFunction;
use crate::integrand::{Flavor, Integrand, LocalPartials};
use crate::timescale::TimeScale;
use crate::variational::{el_integral_residual, evaluate_functional, legendre_quantity, VariationalProblem};

pub const EL_TOL: f64 = 1e-8;
pub const LEGENDRE_TOL: f64 = 1e-10;
pub const PROBE_COUNT: usize = 64;
pub const PROBE_MAGNITUDE: f64 = 1e-3;
pub const PROBE_TOL: f64 = 1e-12;

const TY: [&str; 2] = ["t", "y"];
const TYV: [&str; 3] = ["t", "y", "v"];

#[derive(Debug, Clone)]
pub struct SynthesisSpec {
    pub scale: Arc<TimeScale>,
    /// `P(t, y)`.
    pub big_p: Expr,
    /// `q(t, y)`.
    pub q: Expr,
    /// `w(t, y, v)`.
    pub w: Expr,
    /// Target Legendre quantity `p(t)`, positive on `T^{κ²}`.
    pub p: Expr,
    pub c: f64,
    pub r0: f64,
    /// The prescribed minimizer.
    pub y0: GridFunction,
}

impl SynthesisSpec {
    /// `P = q = w = 0`, `p = 1`, `C = 0`, `R₀ = 1`, `y₀ = 0`.
    pub fn new(scale: Arc<TimeScale>) -> Result<Self> {
        Ok(SynthesisSpec {
            big_p: Expr::constant(0.0, &TY),
            q: Expr::constant(0.0, &TY),
            w: Expr::constant(0.0, &TYV),
            p: Expr::constant(1.0, &["t"]),
            c: 0.0,
            r0: 1.0,
            y0: GridFunction::constant(scale.clone(), 0.0)?,
            scale,
        })
    }

    pub fn with_big_p(mut self, text: &str) -> Result<Self> {
        self.big_p = Expr::parse(text, &TY)?;
        Ok(self)
    }

    pub fn with_q(mut self, text: &str) -> Result<Self> {
        self.q = Expr::parse(text, &TY)?;
        Ok(self)
    }

    pub fn with_w(mut self, text: &str) -> Result<Self> {
        self.w = Expr::parse(text, &TYV)?;
        Ok(self)
    }

    pub fn with_p(mut self, text: &str) -> Result<Self> {
        self.p = Expr::parse(text, &["t"])?;
        Ok(self)
    }

    pub fn with_constants(mut self, c: f64, r0: f64) -> Self {
        self.c = c;
        self.r0 = r0;
        self
    }

    pub fn with_y0(mut self, y0: GridFunction) -> Self {
        self.y0 = y0;
        self
    }

    /// `y₀` from an expression in `t`.
    pub fn with_y0_text(self, text: &str) -> Result<Self> {
        let e = Expr::parse(text, &["t"])?;
        let values = self
            .scale
            .points()
            .iter()
            .map(|&t| e.eval(&[t]))
            .collect::<Result<Vec<_>, _>>()?;
        let y0 = GridFunction::new(self.scale.clone(), values)?;
        Ok(self.with_y0(y0))
    }

    fn validate(&self) -> Result<()> {
        let ts = &self.scale;
        if !ts.is_exact() {
            return Err(Error::InvalidScale(format!(
                "synthesis needs an isolated scale, not {}",
                ts.kind()
            )));
        }
        if ts.len() < 3 {
            return Err(Error::InvalidProblem(format!(
                "synthesis needs at least three points, the scale has {}",
                ts.len()
            )));
        }
        for i in ts.kappa_upper() {
            if ts.mu(i) <= 0.0 {
                return Err(Error::InvalidScale(format!("μ vanishes at t = {}", ts.t(i))));
            }
        }
        if !self.y0.is_full() || self.y0.scale().points() != ts.points() {
            return Err(Error::Domain("y0 must be given at every point of the scale".into()));
        }
        if !self.c.is_finite() || !self.r0.is_finite() {
            return Err(Error::InvalidProblem("C and R0 must be finite".into()));
        }
        for i in ts.kappa_upper2() {
            let p = self.p.eval(&[ts.t(i)])?;
            if !(p > 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "p must be positive on T^κ², but p({}) = {p}",
                    ts.t(i)
                )));
            }
        }
        Ok(())
    }

    /// `(p, q_y(t, 0), P_yy(t, 0))` at point `i`.
    fn coefficients(&self, i: usize) -> Result<(f64, f64, f64)> {
        let t = self.scale.t(i);
        let p = self.p.eval(&[t])?;
        let qy = self.q.eval_with_partials(&[t, 0.0])?.first[1];
        let pyy = self.big_p.eval_with_partials(&[t, 0.0])?.second[1][1];
        Ok((p, qy, pyy))
    }
}

/// The coefficients `r` and `s` of the first-order equation `R^Δ = r R + s`
/// that the Legendre equation becomes on `T^{κ²}`.
pub fn recursion_coefficients(spec: &SynthesisSpec) -> Result<(GridFunction, GridFunction)> {
    spec.validate()?;
    let ts = &spec.scale;
    let (mut r, mut s) = (Vec::new(), Vec::new());
    for i in ts.kappa_upper2() {
        let (p, qy, pyy) = spec.coefficients(i)?;
        let (mu, mu_next) = (ts.mu(i), ts.mu(i + 1));
        let denom = mu * mu / mu_next;
        r.push(-(1.0 + mu / mu_next) / denom);
        s.push((p - mu * (2.0 * qy + mu * pyy)) / denom);
    }
    Ok((
        GridFunction::on_domain(ts.clone(), 0, r)?,
        GridFunction::on_domain(ts.clone(), 0, s)?,
    ))
}

/// `R` on `T^κ` from the closed form `e_r(t, a) R₀ + Σ_{τ<t} μ(τ) e_r(t, σ(τ)) s(τ)`,
/// checked against the Legendre equation it is meant to solve.
pub fn solve_r_recursion(spec: &SynthesisSpec) -> Result<GridFunction> {
    let (r, s) = recursion_coefficients(spec)?;
    let ts = &spec.scale;
    let k2 = ts.kappa_upper2();
    let rs: Vec<(f64, f64)> = r.values().iter().copied().zip(s.values().iter().copied()).collect();

    // R_j = e_r(t_j, a) (R₀ + Σ_{i<j} μ_i s_i / e_r(t_{i+1}, a)).
    let mut values = Vec::with_capacity(k2.len() + 1);
    let mut e = 1.0;
    let mut acc = spec.r0;
    values.push(spec.r0);
    for (i, &(r, s)) in k2.clone().zip(&rs) {
        e *= 1.0 + ts.mu(i) * r;
        acc += ts.mu(i) * s / e;
        values.push(e * acc);
    }

    for i in k2 {
        let (p, qy, pyy) = spec.coefficients(i)?;
        let (mu, mu_next) = (ts.mu(i), ts.mu(i + 1));
        let terms = [values[i], mu * 2.0 * qy, mu * mu * pyy, mu / mu_next * values[i + 1]];
        let lhs: f64 = terms.iter().sum();
        let size: f64 = 1.0 + terms.iter().map(|x| x.abs()).sum::<f64>();
        if !lhs.is_finite() || (lhs - p).abs() > LEGENDRE_TOL * size {
            return Err(Error::InvalidProblem(format!(
                "the R recursion lost accuracy at t = {}: Legendre quantity {lhs} vs p = {p}",
                ts.t(i)
            )));
        }
    }
    GridFunction::on_domain(ts.clone(), 0, values)
}

/// The synthesized integrand; a delta integrand on `T^κ`.
#[derive(Debug, Clone)]
pub struct SynthesizedLagrangian {
    scale: Arc<TimeScale>,
    big_p: Expr,
    q: Expr,
    w: Expr,
    y0: Vec<f64>,
    q_term: Vec<f64>,
    r_term: Vec<f64>,
}

pub fn synthesize_lagrangian(spec: &SynthesisSpec) -> Result<SynthesizedLagrangian> {
    let r = solve_r_recursion(spec)?;
    let ts = &spec.scale;
    let mut q_term = Vec::with_capacity(ts.len() - 1);
    let mut acc = spec.c;
    for i in ts.kappa_upper() {
        q_term.push(acc);
        let py = spec.big_p.eval_with_partials(&[ts.t(i), 0.0])?.first[1];
        acc += ts.mu(i) * py;
    }
    Ok(SynthesizedLagrangian {
        scale: ts.clone(),
        big_p: spec.big_p.clone(),
        q: spec.q.clone(),
        w: spec.w.clone(),
        y0: spec.y0.values().to_vec(),
        q_term,
        r_term: r.into_values(),
    })
}

impl SynthesizedLagrangian {
    /// `Q(t) = C + Σ_{τ<t} μ(τ) P_y(τ, 0)` on `T^κ`.
    pub fn q_term(&self) -> GridFunction {
        GridFunction::on_domain(self.scale.clone(), 0, self.q_term.clone()).expect("T^κ domain")
    }

    /// `R` on `T^κ`.
    pub fn r_term(&self) -> GridFunction {
        GridFunction::on_domain(self.scale.clone(), 0, self.r_term.clone()).expect("T^κ domain")
    }

    /// Replaces `R`; used to inject faults.
    pub fn with_r_term(mut self, r: Vec<f64>) -> Result<Self> {
        if r.len() != self.r_term.len() {
            return Err(Error::Domain(format!(
                "R must have {} values on T^κ, got {}",
                self.r_term.len(),
                r.len()
            )));
        }
        self.r_term = r;
        Ok(self)
    }

    pub fn scale(&self) -> &Arc<TimeScale> {
        &self.scale
    }

    fn shift(&self, idx: usize, y: f64, v: f64) -> Result<(f64, f64)> {
        if idx + 1 >= self.y0.len() {
            return Err(Error::Domain(format!(
                "the synthesized Lagrangian is defined on T^κ, index {idx} is outside"
            )));
        }
        let mu = self.scale.mu(idx);
        let sig = self.y0[idx + 1];
        Ok((y - sig, v - (sig - self.y0[idx]) / mu))
    }
}

impl Integrand for SynthesizedLagrangian {
    fn value(&self, idx: usize, t: f64, y: f64, v: f64) -> Result<f64> {
        let (z, zeta) = self.shift(idx, y, v)?;
        let big_p = self.big_p.eval(&[t, z])?;
        let a = self.q_term[idx] + self.q.eval(&[t, z])? - self.q.eval(&[t, 0.0])?;
        let b = self.r_term[idx] + self.w.eval(&[t, z, zeta])? - self.w.eval(&[t, 0.0, 0.0])?;
        Ok(big_p + a * zeta + 0.5 * b * zeta * zeta)
    }

    fn partials(&self, idx: usize, t: f64, y: f64, v: f64) -> Result<LocalPartials> {
        let (z, zeta) = self.shift(idx, y, v)?;
        let pp = self.big_p.eval_with_partials(&[t, z])?;
        let qq = self.q.eval_with_partials(&[t, z])?;
        let ww = self.w.eval_with_partials(&[t, z, zeta])?;
        let a = self.q_term[idx] + qq.value - self.q.eval(&[t, 0.0])?;
        let b = self.r_term[idx] + ww.value - self.w.eval(&[t, 0.0, 0.0])?;
        let z2 = zeta * zeta;
        let (wz, wzeta) = (ww.first[1], ww.first[2]);
        Ok(LocalPartials {
            value: pp.value + a * zeta + 0.5 * b * z2,
            y: pp.first[1] + qq.first[1] * zeta + 0.5 * wz * z2,
            v: a + b * zeta + 0.5 * wzeta * z2,
            yy: pp.second[1][1] + qq.second[1][1] * zeta + 0.5 * ww.second[1][1] * z2,
            yv: qq.first[1] + wz * zeta + 0.5 * ww.second[1][2] * z2,
            vv: b + 2.0 * wzeta * zeta + 0.5 * ww.second[2][2] * z2,
        })
    }

    fn describe(&self) -> String {
        format!(
            "synthesized: P = {}, q = {}, w = {} around y0",
            self.big_p, self.q, self.w
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthesisCheck {
    EulerLagrange,
    Legendre,
    Positivity,
    Perturbation,
}

impl fmt::Display for SynthesisCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthesisCheck::EulerLagrange => "euler-lagrange",
            SynthesisCheck::Legendre => "legendre",
            SynthesisCheck::Positivity => "positivity",
            SynthesisCheck::Perturbation => "perturbation",
        })
    }
}

/// One failing point: `value` is the offending quantity, `expected` what it
/// was compared with.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisFailure {
    pub check: SynthesisCheck,
    pub t: f64,
    pub value: f64,
    pub expected: f64,
}

impl fmt::Display for SynthesisFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.check {
            SynthesisCheck::EulerLagrange => write!(f, "EL residual {:e} at t = {} exceeds {:e}", self.value, self.t, self.expected),
            SynthesisCheck::Legendre => write!(f, "Legendre quantity {} at t = {} differs from p = {}", self.value, self.t, self.expected),
            SynthesisCheck::Positivity => write!(f, "Legendre quantity {} at t = {} is not positive", self.value, self.t),
            SynthesisCheck::Perturbation => write!(
                f,
                "a perturbation peaking at t = {} lowers the functional by {:e}",
                self.t, -self.value
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport {
    pub el_max: f64,
    pub legendre: GridFunction,
    pub legendre_max_deviation: f64,
    /// Smallest `J[y₀ + η] − J[y₀]` over the probes.
    pub probe_min_change: f64,
    pub probes: usize,
    pub failures: Vec<SynthesisFailure>,
}

impl SynthesisReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failed(&self, check: SynthesisCheck) -> Vec<&SynthesisFailure> {
        self.failures.iter().filter(|f| f.check == check).collect()
    }
}

pub fn verify_synthesis(lagr: &SynthesizedLagrangian, spec: &SynthesisSpec) -> Result<SynthesisReport> {
    verify_synthesis_seeded(lagr, spec, 0)
}

/// [`verify_synthesis`] with an explicit seed for the perturbation probe.
pub fn verify_synthesis_seeded(lagr: &SynthesizedLagrangian, spec: &SynthesisSpec, seed: u64) -> Result<SynthesisReport> {
    spec.validate()?;
    let ts = spec.scale.clone();
    if lagr.scale.points() != ts.points() {
        return Err(Error::InvalidProblem("the Lagrangian was built on a different scale".into()));
    }
    let n = ts.len();
    let y0 = &spec.y0;
    let problem = VariationalProblem::new(ts.clone(), Arc::new(lagr.clone()), Flavor::Delta)?
        .with_boundary(Some(y0.at(0)), Some(y0.at(n - 1)))?;
    let mut failures = Vec::new();

    let el = el_integral_residual(&problem, y0)?;
    let el_max = el.max_abs_residual;
    if !(el_max <= EL_TOL) {
        let (i, v) = el
            .residual
            .iter()
            .fold((0, 0.0f64), |best, (i, v)| if v.abs() > best.1.abs() { (i, v) } else { best });
        failures.push(SynthesisFailure {
            check: SynthesisCheck::EulerLagrange,
            t: ts.t(i),
            value: v.abs(),
            expected: EL_TOL,
        });
    }

    let legendre = legendre_quantity(&problem, y0)?;
    let mut legendre_max_deviation = 0.0f64;
    for (i, value) in legendre.iter() {
        let (p, qy, pyy) = spec.coefficients(i)?;
        let (mu, mu_next) = (ts.mu(i), ts.mu(i + 1));
        let size = 1.0
            + lagr.r_term[i].abs()
            + mu * (2.0 * qy).abs()
            + mu * mu * pyy.abs()
            + mu / mu_next * lagr.r_term[i + 1].abs();
        let dev = (value - p).abs();
        legendre_max_deviation = legendre_max_deviation.max(dev);
        if !(dev <= LEGENDRE_TOL * size) {
            failures.push(SynthesisFailure {
                check: SynthesisCheck::Legendre,
                t: ts.t(i),
                value,
                expected: p,
            });
        }
        if !(value > 0.0) {
            failures.push(SynthesisFailure {
                check: SynthesisCheck::Positivity,
                t: ts.t(i),
                value,
                expected: 0.0,
            });
        }
    }

    let base = evaluate_functional(&problem, y0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe_min_change = f64::INFINITY;
    let mut worst = None;
    for _ in 0..PROBE_COUNT {
        // Magnitudes spread over three decades below the cap.
        let amp = PROBE_MAGNITUDE * 10f64.powf(-3.0 * rng.gen::<f64>());
        let mut y = y0.values().to_vec();
        let mut peak = (0, 0.0f64);
        for (i, yi) in y.iter_mut().enumerate().take(n - 1).skip(1) {
            let eta = amp * rng.gen_range(-1.0..=1.0);
            *yi += eta;
            if eta.abs() > peak.1.abs() {
                peak = (i, eta);
            }
        }
        let change = evaluate_functional(&problem, &GridFunction::new(ts.clone(), y)?)? - base;
        if change < probe_min_change {
            probe_min_change = change;
            worst = Some(peak.0);
        }
    }
    if probe_min_change < -PROBE_TOL {
        failures.push(SynthesisFailure {
            check: SynthesisCheck::Perturbation,
            t: ts.t(worst.unwrap_or(1)),
            value: probe_min_change,
            expected: -PROBE_TOL,
        });
    }

    Ok(SynthesisReport {
        el_max,
        legendre,
        legendre_max_deviation,
        probe_min_change,
        probes: PROBE_COUNT,
        failures,
    })
}
