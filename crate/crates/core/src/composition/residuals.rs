//! Necessary conditions for composition functionals, evaluated along a
//! given curve.

use std::fmt;

use super::{evaluate_composition, CompositionProblem, CompositionState};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Both integral forms of the Euler–Lagrange equation, centred on their means.
#[derive(Debug, Clone, PartialEq)]
pub struct ElForms {
    /// `ξ(ρ(t)) + χ(t) − c_nabla` on `T_κ`.
    pub nabla_form: GridFunction,
    /// `ξ(t) + χ(σ(t)) − c_delta` on `T^κ`.
    pub delta_form: GridFunction,
    pub c_nabla: f64,
    pub c_delta: f64,
    /// Constancy tolerance before scaling by `1 + |c|`.
    pub base_tolerance: f64,
}

impl ElForms {
    pub fn nabla_ok(&self) -> bool {
        self.nabla_form.max_abs() <= self.base_tolerance * (1.0 + self.c_nabla.abs())
    }

    pub fn delta_ok(&self) -> bool {
        self.delta_form.max_abs() <= self.base_tolerance * (1.0 + self.c_delta.abs())
    }
}

fn centred(v: Vec<f64>) -> (Vec<f64>, f64) {
    let c = v.iter().sum::<f64>() / v.len() as f64;
    (v.into_iter().map(|x| x - c).collect(), c)
}

/// Index accessors for `ξ` (on `T^κ`) and `χ` (on `T_κ`).
struct Profiles<'a> {
    xi: &'a [f64],
    chi: &'a [f64],
}

impl<'a> Profiles<'a> {
    fn of(st: &'a CompositionState) -> Self {
        Profiles {
            xi: st.xi.values(),
            chi: st.chi.values(),
        }
    }

    fn xi(&self, j: usize) -> f64 {
        self.xi[j]
    }

    fn chi(&self, j: usize) -> f64 {
        self.chi[j - 1]
    }
}

pub fn el_residuals(cp: &CompositionProblem, y: &crate::GridFunction) -> Result<ElForms> {
    let st = evaluate_composition(cp, y)?;
    Ok(forms_from_state(cp, &st))
}

pub(crate) fn forms_from_state(cp: &CompositionProblem, st: &CompositionState) -> ElForms {
    let ts = &cp.scale;
    let n = ts.len();
    let p = Profiles::of(st);
    let (nabla, c_nabla) = centred((1..n).map(|j| p.xi(j - 1) + p.chi(j)).collect());
    let (delta, c_delta) = centred((0..n - 1).map(|j| p.xi(j) + p.chi(j + 1)).collect());
    ElForms {
        nabla_form: GridFunction::on_domain(ts.clone(), 1, nabla).expect("finite by construction"),
        delta_form: GridFunction::on_domain(ts.clone(), 0, delta).expect("finite by construction"),
        c_nabla,
        c_delta,
        base_tolerance: cp.base_tolerance(),
    }
}

/// How the two Euler–Lagrange forms differ when the jumps of the modelled
/// set are used (on exact scales these are the sample's own jumps).
#[derive(Debug, Clone, PartialEq)]
pub struct FormDivergence {
    /// `[ξ(t) + χ(σ(t))] − [ξ(ρ(t)) + χ(t)]` at interior points.
    pub same_point: GridFunction,
    /// `[ξ(t) + χ(σ(t))] − [ξ(ρ(σ(t))) + χ(σ(t))]`, the delta form against
    /// the nabla form taken one forward jump later.
    pub shifted: GridFunction,
}

pub fn el_form_divergence(cp: &CompositionProblem, y: &GridFunction) -> Result<FormDivergence> {
    let st = evaluate_composition(cp, y)?;
    let ts = &cp.scale;
    let n = ts.len();
    let p = Profiles::of(&st);
    let delta_at = |j: usize| p.xi(j) + p.chi(ts.modeled_sigma_index(j));
    let nabla_at = |j: usize| p.xi(ts.modeled_rho_index(j)) + p.chi(j);
    let same: Vec<f64> = (1..n - 1).map(|j| delta_at(j) - nabla_at(j)).collect();
    let first = if ts.modeled_sigma_index(0) >= 1 { 0 } else { 1 };
    let shifted: Vec<f64> = (first..n - 1)
        .map(|j| delta_at(j) - nabla_at(ts.modeled_sigma_index(j)))
        .collect();
    Ok(FormDivergence {
        same_point: GridFunction::on_domain(ts.clone(), 1, same)?,
        shifted: GridFunction::on_domain(ts.clone(), first, shifted)?,
    })
}

/// Left sides of the natural boundary conditions; `None` where the
/// condition does not apply (`ρ(σ(a)) ≠ a`, resp. `σ(ρ(b)) ≠ b`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transversality {
    pub initial: Option<f64>,
    pub terminal: Option<f64>,
}

pub fn transversality_residuals(cp: &CompositionProblem, y: &GridFunction) -> Result<Transversality> {
    cp.check_curve(y)?;
    let ts = &cp.scale;
    let last = ts.len() - 1;
    let ev = cp.objective.evaluate(ts, y.values())?;
    let initial_applies = ts.modeled_rho_index(ts.modeled_sigma_index(0)) == 0;
    let terminal_applies = ts.modeled_sigma_index(ts.modeled_rho_index(last)) == last;
    let initial = initial_applies.then(|| {
        let (xi, chi) = ev.profiles(ts);
        xi[0] + chi[0]
    });
    Ok(Transversality {
        initial,
        terminal: terminal_applies.then(|| ev.terminal(ts)),
    })
}

/// The four isoperimetric conditions, each centred on its mean over
/// `T^κ_κ`, and the constraint value.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoResiduals {
    pub lambda: f64,
    /// In order: `ξ^ρ+χ − λ(u^ρ+w)`, `ξ+χ^σ − λ(u^ρ+w)`, `ξ^ρ+χ − λ(u+w^σ)`,
    /// `ξ+χ^σ − λ(u+w^σ)`.
    pub conditions: [GridFunction; 4],
    pub constants: [f64; 4],
    pub constraint_value: f64,
    /// `K[y] − d`.
    pub constraint_violation: f64,
    pub base_tolerance: f64,
}

impl IsoResiduals {
    pub fn max_abs(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.conditions[k].max_abs())
    }

    pub fn holds(&self, k: usize) -> bool {
        self.conditions[k].max_abs() <= self.base_tolerance * (1.0 + self.constants[k].abs())
    }
}

fn iso_absent() -> Error {
    Error::InvalidProblem("the problem has no isoperimetric constraint".into())
}

pub fn iso_residuals(cp: &CompositionProblem, y: &GridFunction, lambda: f64) -> Result<IsoResiduals> {
    let iso = cp.iso.as_ref().ok_or_else(iso_absent)?;
    let st = evaluate_composition(cp, y)?;
    let ks = st.iso.as_ref().expect("constraint state accompanies a constraint");
    let ts = &cp.scale;
    let n = ts.len();
    let p = Profiles::of(&st);
    let (u, w) = (ks.u.values(), ks.w.values());
    let w_at = |j: usize| w[j - 1];
    let build = |k: usize| -> Vec<f64> {
        (1..n - 1)
            .map(|j| {
                let el = if k % 2 == 0 { p.xi(j - 1) + p.chi(j) } else { p.xi(j) + p.chi(j + 1) };
                let cons = if k < 2 { u[j - 1] + w_at(j) } else { u[j] + w_at(j + 1) };
                el - lambda * cons
            })
            .collect()
    };
    let mut constants = [0.0; 4];
    let conditions = [0, 1, 2, 3].map(|k| {
        let (v, c) = centred(build(k));
        constants[k] = c;
        GridFunction::on_domain(ts.clone(), 1, v).expect("finite by construction")
    });
    Ok(IsoResiduals {
        lambda,
        conditions,
        constants,
        constraint_value: ks.value,
        constraint_violation: ks.value - iso.target,
        base_tolerance: cp.base_tolerance(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normality {
    Normal,
    Abnormal,
    Undetermined,
}

impl fmt::Display for Normality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normality::Normal => "normal",
            Normality::Abnormal => "abnormal",
            Normality::Undetermined => "undetermined",
        })
    }
}

const EXTREMAL_TOL: f64 = 1e-8;

/// Largest deviation from constancy of `u + w^σ` on `T^κ` and `u^ρ + w` on
/// `T_κ`, relative to `1 + |mean|`.
pub fn constraint_extremal_deviation(cp: &CompositionProblem, y: &GridFunction) -> Result<f64> {
    cp.iso.as_ref().ok_or_else(iso_absent)?;
    let st = evaluate_composition(cp, y)?;
    let ks = st.iso.as_ref().expect("constraint state accompanies a constraint");
    let (u, w) = (ks.u.values(), ks.w.values());
    let n = cp.scale.len();
    // u(t) + w(σ(t)) for t ∈ T^κ and u(ρ(t)) + w(t) for t ∈ T_κ.
    let forward: Vec<f64> = (0..n - 1).map(|j| u[j] + w[j]).collect();
    let backward: Vec<f64> = (1..n).map(|j| u[j - 1] + w[j - 1]).collect();
    let dev = |v: Vec<f64>| {
        let (r, c) = centred(v);
        r.iter().fold(0.0f64, |m, x| m.max(x.abs())) / (1.0 + c.abs())
    };
    Ok(dev(forward).max(dev(backward)))
}

/// Abnormal when `y` is itself an extremal of the constraint functional.
pub fn classify_extremal(cp: &CompositionProblem, y: &GridFunction) -> Result<Normality> {
    let d = constraint_extremal_deviation(cp, y)?;
    Ok(if d <= EXTREMAL_TOL / 10.0 {
        Normality::Abnormal
    } else if d > EXTREMAL_TOL * 10.0 {
        Normality::Normal
    } else {
        Normality::Undetermined
    })
}
