//! Composition functionals `H(F_1, ..., F_{k+n})` where `F_1..F_k` are
//! delta integrals and `F_{k+1}..F_{k+n}` nabla integrals of one trajectory,
//! optionally subject to an isoperimetric constraint `P(G_1, ..., G_{m+p}) = d`.

mod residuals;
mod solve;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{DiffValue, Expr};
use crate::functional::{Functional, Sampled};
use crate::grid::GridFunction;
use crate::integrand::{DynIntegrand, ExprIntegrand, Flavor};
use crate::linalg::SymTridiag;
use crate::timescale::TimeScale;
use crate::variational::check_boundary;

pub use residuals::{
    classify_extremal, constraint_extremal_deviation, el_form_divergence, el_residuals, iso_residuals,
    transversality_residuals, ElForms, FormDivergence, IsoResiduals, Normality, Transversality,
};
pub use solve::{solve_composition, solve_from, solve_refinement, Extremal, Objective, ResidualSummary, SolveOptions};

/// Delta and nabla integrands together with the outer function of their
/// integrals. The outer function is declared over `F1..Fm` (or `G1..Gm` for
/// a constraint), delta components first.
#[derive(Clone)]
pub struct Composite {
    pub delta: Vec<DynIntegrand>,
    pub nabla: Vec<DynIntegrand>,
    pub outer: Expr,
}

impl std::fmt::Debug for Composite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let show = |v: &[DynIntegrand]| v.iter().map(|i| i.describe()).collect::<Vec<_>>();
        f.debug_struct("Composite")
            .field("delta", &show(&self.delta))
            .field("nabla", &show(&self.nabla))
            .field("outer", &self.outer.to_string())
            .finish()
    }
}

/// `["F1", ..., "Fm"]` style variable names.
pub fn component_names(prefix: &str, m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("{prefix}{i}")).collect()
}

impl Composite {
    pub fn new(delta: Vec<DynIntegrand>, nabla: Vec<DynIntegrand>, outer: Expr, prefix: &str) -> Result<Self> {
        let m = delta.len() + nabla.len();
        if m == 0 {
            return Err(Error::InvalidProblem("a composition needs at least one integral".into()));
        }
        let names = component_names(prefix, m);
        if outer.vars() != names.as_slice() {
            return Err(Error::InvalidProblem(format!(
                "outer function must be declared over ({}), not ({})",
                names.join(", "),
                outer.vars().join(", ")
            )));
        }
        Ok(Composite { delta, nabla, outer })
    }

    /// Parses integrands over `t, y, v` and the outer function over
    /// `prefix1..prefixm`.
    pub fn from_text(delta: &[&str], nabla: &[&str], outer: &str, prefix: &str) -> Result<Self> {
        let parse = |v: &[&str]| -> Result<Vec<DynIntegrand>> {
            v.iter()
                .map(|s| Ok(Arc::new(ExprIntegrand::parse(s)?) as DynIntegrand))
                .collect()
        };
        let names = component_names(prefix, delta.len() + nabla.len());
        let outer = Expr::parse(outer, &names)?;
        Self::new(parse(delta)?, parse(nabla)?, outer, prefix)
    }

    pub fn len(&self) -> usize {
        self.delta.len() + self.nabla.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn components(&self) -> impl Iterator<Item = (Flavor, &DynIntegrand)> {
        self.delta
            .iter()
            .map(|f| (Flavor::Delta, f))
            .chain(self.nabla.iter().map(|f| (Flavor::Nabla, f)))
    }

    pub(crate) fn evaluate(&self, ts: &TimeScale, y: &[f64]) -> Result<Evaluated> {
        let mut values = Vec::with_capacity(self.len());
        let mut grads = Vec::with_capacity(self.len());
        let mut hessians = Vec::with_capacity(self.len());
        let mut samples = Vec::with_capacity(self.len());
        for (flavor, f) in self.components() {
            let fun = Functional::new(ts, f.as_ref(), flavor);
            let s = fun.sample(y)?;
            let (v, g) = fun.value_and_gradient(&s);
            hessians.push(fun.hessian(&s));
            values.push(v);
            grads.push(g);
            samples.push((flavor, s));
        }
        let outer = self.outer.eval_with_partials(&values)?;
        Ok(Evaluated {
            values,
            grads,
            hessians,
            samples,
            outer,
        })
    }
}

/// Component integrals with their derivatives along one trajectory.
pub(crate) struct Evaluated {
    pub values: Vec<f64>,
    pub grads: Vec<Vec<f64>>,
    pub hessians: Vec<SymTridiag>,
    samples: Vec<(Flavor, Sampled)>,
    pub outer: DiffValue,
}

impl Evaluated {
    /// `Σ H'_i ∇F_i` over the full value vector.
    pub fn gradient(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.grads[0].len()];
        for (hk, gk) in self.outer.first.iter().zip(&self.grads) {
            for (a, b) in g.iter_mut().zip(gk) {
                *a += hk * b;
            }
        }
        g
    }

    /// `Σ H'_i ∇²F_i`, the tridiagonal part of the Hessian.
    pub fn tridiagonal(&self) -> SymTridiag {
        let mut t = SymTridiag::zeros(self.grads[0].len());
        for (hk, h) in self.outer.first.iter().zip(&self.hessians) {
            t.add_scaled(h, *hk);
        }
        t
    }

    /// `ξ` on `T^κ` (indices `0..N-1`) and `χ` on `T_κ` (indices `1..N`),
    /// both as vectors of length `N - 1`.
    pub fn profiles(&self, ts: &TimeScale) -> (Vec<f64>, Vec<f64>) {
        let n = ts.len();
        let mut xi = vec![0.0; n - 1];
        let mut chi = vec![0.0; n - 1];
        for ((flavor, s), hk) in self.samples.iter().zip(&self.outer.first) {
            let mut run = 0.0;
            for (&j, p) in s.idx.iter().zip(&s.partials) {
                match flavor {
                    Flavor::Delta => {
                        xi[j] += hk * (p.v - run);
                        run += ts.mu(j) * p.y;
                    }
                    Flavor::Nabla => {
                        run += ts.nu(j) * p.y;
                        chi[j - 1] += hk * (p.v - run);
                    }
                }
            }
        }
        (xi, chi)
    }

    /// `Σ |H'_i| (max |f_iv| + Σ w |f_iy|)`, the scale of the terms making
    /// up `ξ` and `χ`.
    pub fn magnitude(&self, ts: &TimeScale) -> f64 {
        let mut acc = 0.0;
        for ((flavor, s), hk) in self.samples.iter().zip(&self.outer.first) {
            let mut fv = 0.0f64;
            let mut fy = 0.0;
            for (&j, p) in s.idx.iter().zip(&s.partials) {
                fv = fv.max(p.v.abs());
                fy += crate::integrand::weight(ts, *flavor, j) * p.y.abs();
            }
            acc += hk.abs() * (fv + fy);
        }
        acc
    }

    /// Left side of the terminal transversality condition.
    pub fn terminal(&self, ts: &TimeScale) -> f64 {
        let last = ts.len() - 1;
        let mut acc = 0.0;
        for ((flavor, s), hk) in self.samples.iter().zip(&self.outer.first) {
            let p = s.partials.last().expect("a scale of three points has terms");
            acc += hk
                * match flavor {
                    Flavor::Delta => p.v + ts.mu(last - 1) * p.y,
                    Flavor::Nabla => p.v,
                };
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub struct IsoConstraint {
    pub constraint: Composite,
    pub target: f64,
}

impl IsoConstraint {
    pub fn new(constraint: Composite, target: f64) -> Result<Self> {
        if !target.is_finite() {
            return Err(Error::InvalidProblem(format!("constraint target {target} is not finite")));
        }
        Ok(IsoConstraint { constraint, target })
    }

    /// Integrands over `t, y, v`, outer function over `G1..Gm`.
    pub fn from_text(delta: &[&str], nabla: &[&str], outer: &str, target: f64) -> Result<Self> {
        Self::new(Composite::from_text(delta, nabla, outer, "G")?, target)
    }
}

#[derive(Debug, Clone)]
pub struct CompositionProblem {
    pub scale: Arc<TimeScale>,
    pub objective: Composite,
    pub y_a: Option<f64>,
    pub y_b: Option<f64>,
    pub iso: Option<IsoConstraint>,
}

impl CompositionProblem {
    pub fn new(scale: Arc<TimeScale>, objective: Composite) -> Result<Self> {
        if scale.len() < 3 {
            return Err(Error::InvalidProblem(format!(
                "a composition problem needs at least three points, the scale has {}",
                scale.len()
            )));
        }
        Ok(CompositionProblem {
            scale,
            objective,
            y_a: None,
            y_b: None,
            iso: None,
        })
    }

    /// Integrands over `t, y, v`, outer function over `F1..Fm`.
    pub fn from_text(scale: Arc<TimeScale>, delta: &[&str], nabla: &[&str], outer: &str) -> Result<Self> {
        Self::new(scale, Composite::from_text(delta, nabla, outer, "F")?)
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

    pub fn with_iso(mut self, iso: IsoConstraint) -> Self {
        self.iso = Some(iso);
        self
    }

    /// Residual constancy tolerance before scaling by `1 + |c|`.
    pub fn base_tolerance(&self) -> f64 {
        if self.scale.is_exact() {
            crate::variational::EXACT_TOL
        } else {
            crate::variational::SAMPLED_TOL
        }
    }

    pub(crate) fn check_curve(&self, y: &GridFunction) -> Result<()> {
        if !y.is_full() || y.scale().points() != self.scale.points() {
            return Err(Error::Domain("the trajectory must be given at every point of the problem's scale".into()));
        }
        check_boundary(&self.scale, y.values(), self.y_a, self.y_b)
    }
}

/// Integrals, outer derivatives and the `ξ`, `χ` profiles along a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionState {
    pub value: f64,
    /// `F_i`, delta components first.
    pub f: Vec<f64>,
    /// `H'_i = ∂H/∂F_i` at `f`.
    pub h_prime: Vec<f64>,
    /// On `T^κ`.
    pub xi: GridFunction,
    /// On `T_κ`.
    pub chi: GridFunction,
    pub iso: Option<IsoState>,
}

/// The constraint analogue of [`CompositionState`].
#[derive(Debug, Clone, PartialEq)]
pub struct IsoState {
    /// `K[y] = P(G)`.
    pub value: f64,
    pub g: Vec<f64>,
    pub p_prime: Vec<f64>,
    /// On `T^κ`.
    pub u: GridFunction,
    /// On `T_κ`.
    pub w: GridFunction,
}

pub fn evaluate_composition(cp: &CompositionProblem, y: &GridFunction) -> Result<CompositionState> {
    cp.check_curve(y)?;
    let ts = &cp.scale;
    let ev = cp.objective.evaluate(ts, y.values())?;
    let (xi, chi) = ev.profiles(ts);
    let iso = match &cp.iso {
        Some(iso) => {
            let ek = iso.constraint.evaluate(ts, y.values())?;
            let (u, w) = ek.profiles(ts);
            Some(IsoState {
                value: ek.outer.value,
                g: ek.values,
                p_prime: ek.outer.first,
                u: GridFunction::on_domain(ts.clone(), 0, u)?,
                w: GridFunction::on_domain(ts.clone(), 1, w)?,
            })
        }
        None => None,
    };
    Ok(CompositionState {
        value: ev.outer.value,
        f: ev.values,
        h_prime: ev.outer.first,
        xi: GridFunction::on_domain(ts.clone(), 0, xi)?,
        chi: GridFunction::on_domain(ts.clone(), 1, chi)?,
        iso,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_grid() -> Arc<TimeScale> {
        Arc::new(TimeScale::from_points(vec![0.0, 0.5, 1.0]).unwrap())
    }

    #[test]
    fn quotient_integrals_at_the_small_grid_extremal() {
        let cp = CompositionProblem::from_text(half_grid(), &["t*v"], &["v^2"], "F1/F2").unwrap();
        let q = (1.0 + 2f64.sqrt()) / 8.0;
        let y = GridFunction::new(cp.scale.clone(), vec![0.0, (8.0 * q - 1.0) / (16.0 * q), 1.0]).unwrap();
        let st = evaluate_composition(&cp, &y).unwrap();
        assert!((st.f[0] - (8.0 * q + 1.0) / (32.0 * q)).abs() < 1e-14);
        assert!((st.f[1] - (64.0 * q * q + 1.0) / (64.0 * q * q)).abs() < 1e-14);
        assert!((st.value - st.f[0] / st.f[1]).abs() < 1e-15);
        assert!((st.h_prime[0] - 1.0 / st.f[1]).abs() < 1e-14);
    }

    #[test]
    fn identity_outer_reduces_to_the_plain_functional() {
        let ts = Arc::new(TimeScale::qz(2.0, 0, 4).unwrap());
        let cp = CompositionProblem::from_text(ts.clone(), &["t*y^2 + v^2"], &[], "F1").unwrap();
        let y = GridFunction::from_fn(ts.clone(), |t| t.sin()).unwrap();
        let st = evaluate_composition(&cp, &y).unwrap();
        let vp = crate::variational::VariationalProblem::from_text(ts, "t*y^2 + v^2", Flavor::Delta).unwrap();
        let direct = crate::variational::evaluate_functional(&vp, &y).unwrap();
        assert!((st.value - direct).abs() < 1e-14);
        assert_eq!(st.h_prime, vec![1.0]);
    }

    #[test]
    fn product_integrals_on_the_half_integer_grid() {
        let ts = Arc::new(TimeScale::hz(0.5, 0.0, 3.0).unwrap());
        let cp = CompositionProblem::from_text(ts.clone(), &["t*v", "v*(1+t)"], &["v^2+t"], "F1*F2*F3").unwrap();
        let q = 2.5139;
        let vals = [0.0, (4.0 + 5.0 * q) / 8.0, 1.0 + q, (12.0 + 9.0 * q) / 8.0, 2.0 + q, (20.0 + 5.0 * q) / 8.0, 3.0];
        let y = GridFunction::new(ts, vals.to_vec()).unwrap();
        let st = evaluate_composition(&cp, &y).unwrap();
        assert!((st.f[0] - (60.0 - 35.0 * q) / 16.0).abs() < 1e-12);
        assert!((st.f[1] - (108.0 - 35.0 * q) / 16.0).abs() < 1e-12);
        assert!((st.f[2] - (35.0 * q * q + 132.0) / 16.0).abs() < 1e-12);
    }

    #[test]
    fn outer_must_use_component_names() {
        let err = CompositionProblem::from_text(half_grid(), &["v"], &[], "G1");
        assert!(err.is_err());
        let outer = Expr::parse("F1 + F2", &["F1", "F2"]).unwrap();
        let c = Composite::new(vec![Arc::new(ExprIntegrand::parse("v").unwrap())], vec![], outer, "F");
        assert!(matches!(c, Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn profiles_sit_on_the_kappa_domains() {
        let cp = CompositionProblem::from_text(half_grid(), &["t*v"], &["v^2"], "F1/F2").unwrap();
        let y = GridFunction::new(cp.scale.clone(), vec![0.0, 0.3, 1.0]).unwrap();
        let st = evaluate_composition(&cp, &y).unwrap();
        assert_eq!(st.xi.domain(), 0..2);
        assert_eq!(st.chi.domain(), 1..3);
    }
}
