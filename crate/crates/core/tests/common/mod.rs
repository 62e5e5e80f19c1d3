//! Generators shared by the integration tests.

#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use tsvar_core::inverse::SynthesisSpec;
use tsvar_core::TimeScale;

/// A random isolated scale together with an expression for its graininess.
pub fn isolated_scale(rng: &mut impl Rng) -> (Arc<TimeScale>, String) {
    match rng.gen_range(0..3) {
        0 => {
            let h = rng.gen_range(0.05..0.6f64);
            let a = rng.gen_range(-2.0..2.0f64);
            let n = rng.gen_range(3..14);
            let pts = (0..=n).map(|k| a + k as f64 * h).collect();
            (Arc::new(TimeScale::from_points(pts).unwrap()), format!("{h:?}"))
        }
        1 => {
            let q = rng.gen_range(1.1..2.0f64);
            let k0 = rng.gen_range(-3..1);
            // Keep the right end below 10.
            let top = (10f64.ln() / q.ln()).floor() as i32;
            let n = rng.gen_range(3..=(top - k0).clamp(3, 12));
            let ts = TimeScale::qz(q, k0, k0 + n).unwrap();
            (Arc::new(ts), format!("({:?} - 1)*t", q))
        }
        _ => {
            // t_k = a + h k + c k², so k(t) = (sqrt(h² + 4c(t − a)) − h)/(2c) and μ = h + c(2k + 1).
            let h = rng.gen_range(0.05..0.4f64);
            let c = rng.gen_range(0.005..0.05f64);
            let a = rng.gen_range(-1.0..1.0f64);
            let n = rng.gen_range(3..12);
            let pts = (0..=n).map(|k| a + h * k as f64 + c * (k * k) as f64).collect();
            let k = format!("((sqrt({h:?}^2 + 4*{c:?}*(t - {a:?})) - {h:?})/(2*{c:?}))");
            (Arc::new(TimeScale::from_points(pts).unwrap()), format!("({h:?} + {c:?}*(2*{k} + 1))"))
        }
    }
}

/// A synthesis problem whose prescribed curve is a strict local minimizer.
///
/// With `P_yy(t, 0) = 2β ≥ 0`, `q_y(t, 0) = γ` constant and `p = μ(g + 2βμ)`,
/// the second variation at `y₀` is `Σ ½(R/μ + γ)(Δη)² + Σ βμη²`, and the
/// choice of `R₀` keeps `R/μ + γ` near `g/2 > 0` for the whole recursion.
pub fn minimizing_spec(rng: &mut impl Rng) -> SynthesisSpec {
    let (ts, mu) = isolated_scale(rng);
    let beta = rng.gen_range(0.0..0.5f64);
    let gamma = rng.gen_range(-0.5..0.5f64);
    let g0 = rng.gen_range(0.5..3.0f64);
    let (om, ph) = (rng.gen_range(0.5..3.0f64), rng.gen_range(0.0..6.0f64));
    let g = format!("{g0:?}*(1 + 0.02*sin({om:?}*t + {ph:?}))");
    let p = format!("{mu}*({g} + 2*{beta:?}*{mu})");

    let big_p = format!(
        "{beta:?}*y^2 + {:?}*sin(t)*y + {:?}*y^3",
        rng.gen_range(-1.0..1.0f64),
        rng.gen_range(-0.2..0.2f64)
    );
    let q = format!("{gamma:?}*y + {:?}*t*y^2", rng.gen_range(-0.2..0.2f64));
    let w = format!(
        "{:?}*t*y*v + {:?}*y^2 + {:?}*v^2",
        rng.gen_range(-0.05..0.05f64),
        rng.gen_range(-0.05..0.05f64),
        rng.gen_range(-0.05..0.05f64)
    );
    let (a, b) = (ts.min(), ts.max());
    let s = format!("((t - {a:?})/{:?})", b - a);
    let y0 = format!(
        "{:?} + {:?}*{s} + {:?}*{s}^2 + {:?}*{s}^3",
        rng.gen_range(-1.0..1.0f64),
        rng.gen_range(-1.0..1.0f64),
        rng.gen_range(-1.0..1.0f64),
        rng.gen_range(-1.0..1.0f64)
    );
    let c = rng.gen_range(-2.0..2.0f64);

    let (t0, mu0) = (ts.t(0), ts.mu(0));
    let g_at_a = g0 * (1.0 + 0.02 * (om * t0 + ph).sin());
    let r0 = mu0 * (g_at_a * rng.gen_range(0.45..0.55) - gamma);

    SynthesisSpec::new(ts)
        .unwrap()
        .with_big_p(&big_p)
        .unwrap()
        .with_q(&q)
        .unwrap()
        .with_w(&w)
        .unwrap()
        .with_p(&p)
        .unwrap()
        .with_y0_text(&y0)
        .unwrap()
        .with_constants(c, r0)
}
