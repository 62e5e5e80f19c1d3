//! Single-integrand problems
//! `∫_a^b L(t, y^σ, y^Δ) Δt` and `∫_a^b L(t, y^ρ, y^∇) ∇t`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::grid::GridFunction;
use crate::integrand::{DynIntegrand, ExprIntegrand, Flavor};
use crate::linalg::{numerical_rank, SymTridiag};
use crate::newton::{damped_newton, NewtonOptions, NewtonSystem};
use crate::timescale::TimeScale;

/// Boundary values must hold to this absolute accuracy.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Residual constancy tolerance (relative to `1 + |c|`) on exact scales.
pub const EXACT_TOL: f64 = 1e-8;
/// The same on sampled scales.
pub const SAMPLED_TOL: f64 = 1e-4;

#[derive(Clone)]
pub struct VariationalProblem {
    pub scale: Arc<TimeScale>,
    pub lagrangian: DynIntegrand,
    pub flavor: Flavor,
    pub y_a: Option<f64>,
    pub y_b: Option<f64>,
}

impl std::fmt::Debug for VariationalProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VariationalProblem")
            .field("scale", &self.scale.provenance())
            .field("lagrangian", &self.lagrangian.describe())
            .field("flavor", &self.flavor)
            .field("y_a", &self.y_a)
            .field("y_b", &self.y_b)
            .finish()
    }
}

/// Euler–Lagrange check in integral form.
#[derive(Debug, Clone, PartialEq)]
pub struct ElReport {
    /// `g − c` where `g` is the left side of the integrated equation.
    pub residual: GridFunction,
    pub constant_c: f64,
    pub max_abs_residual: f64,
    /// The tolerance the residual is judged against (already scaled by `1 + |c|`).
    pub tolerance: f64,
    /// Delta problems only: the Legendre quantity on `T^{κ²}`.
    pub legendre: Option<GridFunction>,
    pub legendre_strict: Option<bool>,
}

impl ElReport {
    pub fn is_extremal(&self) -> bool {
        self.max_abs_residual <= self.tolerance
    }
}

impl VariationalProblem {
    pub fn new(scale: Arc<TimeScale>, lagrangian: DynIntegrand, flavor: Flavor) -> Result<Self> {
        if scale.len() < 3 {
            return Err(Error::InvalidProblem(format!(
                "a variational problem needs at least three points, the scale has {}",
                scale.len()
            )));
        }
        Ok(VariationalProblem {
            scale,
            lagrangian,
            flavor,
            y_a: None,
            y_b: None,
        })
    }

    /// Convenience constructor from expression text over `t, y, v`.
    pub fn from_text(scale: Arc<TimeScale>, lagrangian: &str, flavor: Flavor) -> Result<Self> {
        Self::new(scale, Arc::new(ExprIntegrand::parse(lagrangian)?), flavor)
    }

    pub fn with_boundary(mut self, y_a: Option<f64>, y_b: Option<f64>) -> Result<Self> {
        for v in [y_a, y_b].into_iter().flatten() {
            if !v.is_finite() {
                return Err(Error::InvalidProblem(format!("boundary value {v} is not finite")));
            }
        }
        self.y_a = y_a;
        self.y_b = y_b;
        Ok(self)
    }

    fn functional(&self) -> Functional<'_> {
        Functional::new(&self.scale, self.lagrangian.as_ref(), self.flavor)
    }

    /// Default constancy tolerance for this scale, before scaling by `1 + |c|`.
    pub fn base_tolerance(&self) -> f64 {
        if self.scale.is_exact() {
            EXACT_TOL
        } else {
            SAMPLED_TOL
        }
    }

    fn check_curve(&self, y: &GridFunction) -> Result<()> {
        if !y.is_full() || y.scale().points() != self.scale.points() {
            return Err(Error::Domain("the trajectory must be given at every point of the problem's scale".into()));
        }
        check_boundary(&self.scale, y.values(), self.y_a, self.y_b)
    }
}

pub(crate) fn check_boundary(ts: &TimeScale, y: &[f64], y_a: Option<f64>, y_b: Option<f64>) -> Result<()> {
    let ends = [(0, y_a), (ts.len() - 1, y_b)];
    for (i, want) in ends {
        if let Some(w) = want {
            if (y[i] - w).abs() > BOUNDARY_TOL {
                return Err(Error::Boundary {
                    t: ts.t(i),
                    expected: w,
                    got: y[i],
                });
            }
        }
    }
    Ok(())
}

pub fn evaluate_functional(p: &VariationalProblem, y: &GridFunction) -> Result<f64> {
    p.check_curve(y)?;
    p.functional().value(y.values())
}

/// `g(t) = L_v[y](t) − ∫_a^t L_y[y](τ) Δτ` on `T^κ`, its mean `c`, the
/// residual `g − c`, and the Legendre quantity.
pub fn el_integral_residual(p: &VariationalProblem, y: &GridFunction) -> Result<ElReport> {
    if p.flavor != Flavor::Delta {
        return Err(Error::InvalidProblem("el_integral_residual applies to delta problems".into()));
    }
    p.check_curve(y)?;
    let ts = &p.scale;
    let s = p.functional().sample(y.values())?;
    let mut g = Vec::with_capacity(s.idx.len());
    let mut acc = 0.0;
    for (&i, q) in s.idx.iter().zip(&s.partials) {
        g.push(q.v - acc);
        acc += ts.mu(i) * q.y;
    }
    let legendre = legendre_from_partials(ts, &s.partials)?;
    let strict = legendre.values().iter().all(|&v| v > 0.0);
    finish_report(p, g, 0, Some(legendre), Some(strict))
}

/// `g(t) = L_v{y}(t) − ∫_a^t L_y{y}(τ) ∇τ` on `T_κ`.
pub fn nabla_el_residual(p: &VariationalProblem, y: &GridFunction) -> Result<ElReport> {
    if p.flavor != Flavor::Nabla {
        return Err(Error::InvalidProblem("nabla_el_residual applies to nabla problems".into()));
    }
    p.check_curve(y)?;
    let ts = &p.scale;
    let s = p.functional().sample(y.values())?;
    let mut g = Vec::with_capacity(s.idx.len());
    let mut acc = 0.0;
    for (&i, q) in s.idx.iter().zip(&s.partials) {
        acc += ts.nu(i) * q.y;
        g.push(q.v - acc);
    }
    finish_report(p, g, 1, None, None)
}

/// Dispatches on the problem's flavor.
pub fn el_residual(p: &VariationalProblem, y: &GridFunction) -> Result<ElReport> {
    match p.flavor {
        Flavor::Delta => el_integral_residual(p, y),
        Flavor::Nabla => nabla_el_residual(p, y),
    }
}

fn finish_report(
    p: &VariationalProblem,
    g: Vec<f64>,
    start: usize,
    legendre: Option<GridFunction>,
    legendre_strict: Option<bool>,
) -> Result<ElReport> {
    let c = g.iter().sum::<f64>() / g.len() as f64;
    let residual = GridFunction::on_domain(p.scale.clone(), start, g.iter().map(|v| v - c).collect())?;
    let max_abs_residual = residual.max_abs();
    Ok(ElReport {
        residual,
        constant_c: c,
        max_abs_residual,
        tolerance: p.base_tolerance() * (1.0 + c.abs()),
        legendre,
        legendre_strict,
    })
}

/// The delta-differentiated residual, i.e. the differential form of the
/// equation; diagnostic only.
pub fn el_differential_residual(report: &ElReport) -> Result<GridFunction> {
    crate::calculus::delta_derivative(&report.residual)
}

fn legendre_from_partials(ts: &Arc<TimeScale>, partials: &[crate::integrand::LocalPartials]) -> Result<GridFunction> {
    let values = ts
        .kappa_upper2()
        .map(|i| {
            let (a, b, c) = (partials[i].vv, partials[i].yy, partials[i].yv);
            let mu = ts.mu(i);
            let mu_next = ts.mu(i + 1);
            let dagger = if mu_next == 0.0 { 0.0 } else { 1.0 / mu_next };
            a + mu * (2.0 * c + mu * b + dagger * partials[i + 1].vv)
        })
        .collect();
    GridFunction::on_domain(ts.clone(), 0, values)
}

/// `A + μ(2C + μB + (μ^σ)† A^σ)` with `A = L_vv`, `B = L_yy`, `C = L_yv`
/// along `y`, on `T^{κ²}`.
pub fn legendre_quantity(p: &VariationalProblem, y: &GridFunction) -> Result<GridFunction> {
    if p.flavor != Flavor::Delta {
        return Err(Error::InvalidProblem("the Legendre quantity is defined for delta problems".into()));
    }
    p.check_curve(y)?;
    let s = p.functional().sample(y.values())?;
    legendre_from_partials(&p.scale, &s.partials)
}

struct DirectSystem<'a> {
    p: &'a VariationalProblem,
    y_a: f64,
    y_b: f64,
}

impl DirectSystem<'_> {
    fn full(&self, interior: &[f64]) -> Vec<f64> {
        let mut y = Vec::with_capacity(interior.len() + 2);
        y.push(self.y_a);
        y.extend_from_slice(interior);
        y.push(self.y_b);
        y
    }

    fn interior_hessian(&self, interior: &[f64]) -> Result<SymTridiag> {
        let f = self.p.functional();
        let s = f.sample(&self.full(interior))?;
        let idx: Vec<usize> = (1..=interior.len()).collect();
        Ok(f.hessian(&s).principal(&idx))
    }
}

impl NewtonSystem for DirectSystem<'_> {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let f = self.p.functional();
        let s = f.sample(&self.full(x))?;
        let (_, g) = f.value_and_gradient(&s);
        Ok(g[1..g.len() - 1].to_vec())
    }

    fn step(&self, x: &[f64], r: &[f64]) -> Result<Vec<f64>> {
        let h = self.interior_hessian(x)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        match h.solve(&neg) {
            Some(d) => Ok(d),
            None => crate::linalg::solve_dense(h.to_dense(), &neg),
        }
    }
}

/// Stationary point of the discretized functional with both ends fixed.
///
/// Starts from `init` (default: the linear interpolant of the boundary
/// data). Fails with [`Error::Singular`] when the Hessian is rank deficient
/// (for instance when `L` is affine in `v` and free of `y`) and with
/// [`Error::NoConvergence`] when Newton stalls.
pub fn solve_direct(p: &VariationalProblem, init: Option<&GridFunction>) -> Result<GridFunction> {
    solve_direct_with(p, init, NewtonOptions::default())
}

pub fn solve_direct_with(p: &VariationalProblem, init: Option<&GridFunction>, opts: NewtonOptions) -> Result<GridFunction> {
    let (y_a, y_b) = match (p.y_a, p.y_b) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InvalidProblem(
                "solve_direct needs both boundary values".into(),
            ))
        }
    };
    if !p.scale.is_exact() {
        return Err(Error::InvalidProblem(format!(
            "solve_direct needs an exact isolated scale, not {}",
            p.scale.kind()
        )));
    }
    let ts = &p.scale;
    let n = ts.len();
    let x0: Vec<f64> = match init {
        Some(g) => {
            if !g.is_full() || g.len() != n {
                return Err(Error::Domain("the initial guess must cover the whole scale".into()));
            }
            g.values()[1..n - 1].to_vec()
        }
        None => {
            let (a, b) = (ts.min(), ts.max());
            (1..n - 1).map(|i| y_a + (y_b - y_a) * (ts.t(i) - a) / (b - a)).collect()
        }
    };
    let sys = DirectSystem { p, y_a, y_b };

    let h0 = sys.interior_hessian(&x0)?;
    let rank = numerical_rank(&h0.to_dense());
    if rank < h0.len() {
        return Err(Error::Singular { rank, dim: h0.len() });
    }

    let rep = damped_newton(&sys, &x0, opts)?;
    let y = GridFunction::new(ts.clone(), sys.full(&rep.x))?;
    let check = el_residual(p, &y)?;
    if !check.is_extremal() {
        return Err(Error::NoConvergence {
            iterations: rep.iterations,
            gradient_norm: rep.residual_norm,
        });
    }
    Ok(y)
}

/// Directional derivative of the functional at `y` along `eta` (which must
/// vanish at the fixed ends).
pub fn first_variation(p: &VariationalProblem, y: &GridFunction, eta: &[f64]) -> Result<f64> {
    p.check_curve(y)?;
    let f = p.functional();
    let s = f.sample(y.values())?;
    let (_, g) = f.value_and_gradient(&s);
    Ok(g.iter().zip(eta).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scale(s: &str) -> Arc<TimeScale> {
        Arc::new(TimeScale::parse(s).unwrap())
    }

    fn problem(s: &str, l: &str, flavor: Flavor) -> VariationalProblem {
        VariationalProblem::from_text(scale(s), l, flavor).unwrap()
    }

    #[test]
    fn functional_values() {
        let p = problem("points(0, 0.5, 1)", "v^2", Flavor::Delta);
        let y = GridFunction::from_fn(p.scale.clone(), |t| t).unwrap();
        assert_eq!(evaluate_functional(&p, &y).unwrap(), 1.0);

        let p = problem("hZ(1, 0, 3)", "t*v", Flavor::Delta);
        let y = GridFunction::from_fn(p.scale.clone(), |t| t).unwrap();
        assert_eq!(evaluate_functional(&p, &y).unwrap(), 3.0);
    }

    #[test]
    fn boundary_violations_are_reported() {
        let p = problem("hZ(1, 0, 3)", "v^2", Flavor::Delta)
            .with_boundary(Some(0.0), Some(1.0))
            .unwrap();
        let y = GridFunction::from_fn(p.scale.clone(), |t| t).unwrap();
        assert!(matches!(evaluate_functional(&p, &y), Err(Error::Boundary { .. })));
    }

    #[test]
    fn too_few_points() {
        assert!(VariationalProblem::from_text(scale("points(0, 1)"), "v^2", Flavor::Delta).is_err());
    }

    #[test]
    fn linear_curves_are_extremals_of_v_squared() {
        for flavor in [Flavor::Delta, Flavor::Nabla] {
            let p = problem("points(0, 0.2, 0.7, 1, 2.5)", "v^2", flavor);
            let y = GridFunction::from_fn(p.scale.clone(), |t| 3.0 * t - 1.0).unwrap();
            let r = el_residual(&p, &y).unwrap();
            assert!(r.max_abs_residual < 1e-14);
            assert!((r.constant_c - 6.0).abs() < 1e-14);
        }
    }

    #[test]
    fn a_parabola_is_not_an_extremal_of_v_squared() {
        let p = problem("hZ(1, 0, 3)", "v^2", Flavor::Delta);
        let y = GridFunction::from_fn(p.scale.clone(), |t| t * t).unwrap();
        let r = el_integral_residual(&p, &y).unwrap();
        // g = 2Δy = 2(2t+1) = 2, 6, 10 on T^κ, mean 6.
        assert_eq!(r.residual.values(), &[-4.0, 0.0, 4.0]);
        assert!(!r.is_extremal());
    }

    #[test]
    fn nabla_residual_by_hand_on_three_points() {
        // L = y v: g(t) = y^ρ(t) − ∫_a^t y^∇ ∇τ = y(ρ(t)) − (y(t) − y(a)).
        let p = problem("points(0, 1, 3)", "y*v", Flavor::Nabla);
        let y = GridFunction::new(p.scale.clone(), vec![2.0, 5.0, 4.0]).unwrap();
        let r = nabla_el_residual(&p, &y).unwrap();
        let g = [2.0 - (5.0 - 2.0), 5.0 - (4.0 - 2.0)];
        let c = (g[0] + g[1]) / 2.0;
        assert_eq!(r.residual.domain(), 1..3);
        assert_eq!(r.constant_c, c);
        assert_eq!(r.residual.values(), &[g[0] - c, g[1] - c]);
    }

    #[test]
    fn legendre_of_v_squared() {
        let p = problem("points(0, 1, 1.5, 3, 4)", "v^2", Flavor::Delta);
        let y = GridFunction::constant(p.scale.clone(), 0.0).unwrap();
        let l = legendre_quantity(&p, &y).unwrap();
        assert_eq!(l.domain(), 0..3);
        let ts = &p.scale;
        for (i, v) in l.iter() {
            assert_eq!(v, 2.0 + 2.0 * ts.mu(i) / ts.mu(i + 1));
        }
        let r = el_integral_residual(&p, &y).unwrap();
        assert_eq!(r.legendre_strict, Some(true));

        let p = problem("points(0, 1, 1.5, 3, 4)", "-v^2", Flavor::Delta);
        let r = el_integral_residual(&p, &y).unwrap();
        assert_eq!(r.legendre_strict, Some(false));
        assert!(r.legendre.unwrap().values().iter().all(|&v| v < 0.0));
    }

    #[test]
    fn solve_v_squared_gives_the_line() {
        for s in ["points(0, 0.1, 0.5, 0.6, 1)", "hZ(0.125, 0, 1)"] {
            let p = problem(s, "v^2", Flavor::Delta).with_boundary(Some(0.0), Some(1.0)).unwrap();
            let y = solve_direct(&p, None).unwrap();
            for (i, v) in y.iter() {
                assert!((v - p.scale.t(i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solution_passes_the_checker() {
        let p = problem("hZ(0.25, 0, 1)", "v^2 + y^2", Flavor::Delta)
            .with_boundary(Some(0.0), Some(1.0))
            .unwrap();
        let y = solve_direct(&p, None).unwrap();
        let r = el_integral_residual(&p, &y).unwrap();
        assert!(r.max_abs_residual < 1e-8);
        let d = el_differential_residual(&r).unwrap();
        assert!(d.max_abs() < 1e-8);
    }

    #[test]
    fn affine_in_v_is_degenerate() {
        let p = problem("hZ(0.25, 0, 1)", "t*v", Flavor::Delta)
            .with_boundary(Some(0.0), Some(1.0))
            .unwrap();
        match solve_direct(&p, None) {
            Err(Error::Singular { rank, dim }) => assert_eq!((rank, dim), (0, 3)),
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn solver_requirements() {
        let p = problem("hZ(0.25, 0, 1)", "v^2", Flavor::Delta);
        assert!(solve_direct(&p, None).is_err());
        let p = problem("Pab(1, 1, 2, 0.5)", "v^2", Flavor::Delta)
            .with_boundary(Some(0.0), Some(1.0))
            .unwrap();
        assert!(matches!(solve_direct(&p, None), Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn nonlinear_nabla_problem() {
        let p = problem("qZ(1.5, 0, 6)", "v^4/4 + exp(y)", Flavor::Nabla)
            .with_boundary(Some(0.0), Some(2.0))
            .unwrap();
        let y = solve_direct(&p, None).unwrap();
        assert!(nabla_el_residual(&p, &y).unwrap().is_extremal());
    }
}
