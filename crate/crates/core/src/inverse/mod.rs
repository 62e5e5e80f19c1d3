//! Inverse problems: Lagrangians with a prescribed minimizer, and the
//! Helmholtz test for integro-differential equations.

mod helmholtz;
mod synthesis;

pub use helmholtz::{
    equation_of_variation, helmholtz_check, HelmholtzStatus, HelmholtzVerdict, IntegroDiffEquation, Variation, Witness,
    CERTIFY_TOL, DEGENERATE_TOL, REFUTE_TOL,
};
pub use synthesis::{
    recursion_coefficients, solve_r_recursion, synthesize_lagrangian, verify_synthesis, verify_synthesis_seeded, SynthesisCheck, SynthesisFailure,
    SynthesisReport, SynthesisSpec, SynthesizedLagrangian, EL_TOL, LEGENDRE_TOL, PROBE_COUNT, PROBE_MAGNITUDE, PROBE_TOL,
};
