//! A function on `T^κ` whose integral against every `η^Δ` (with `η`
//! vanishing at both ends) is zero must be constant; hat functions suffice
//! to see it.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsvar_core::calculus::{delta_derivative, delta_integral};
use tsvar_core::{GridFunction, TimeScale};

fn hat(ts: &Arc<TimeScale>, k: usize) -> GridFunction {
    let mut v = vec![0.0; ts.len()];
    v[k] = 1.0;
    GridFunction::new(ts.clone(), v).unwrap()
}

/// `∫_a^b f η_k^Δ Δt` for `f` on `T^κ` and the hat `η_k`.
fn pairing(f: &GridFunction, k: usize) -> f64 {
    let ts = f.scale();
    let eta_d = delta_derivative(&hat(ts, k)).unwrap();
    let prod = f.zip_with(&eta_d, |a, b| a * b).unwrap();
    delta_integral(&prod, ts.min(), ts.max()).unwrap()
}

fn on_kappa(ts: &Arc<TimeScale>, values: Vec<f64>) -> GridFunction {
    GridFunction::on_domain(ts.clone(), 0, values).unwrap()
}

fn random_scale(rng: &mut ChaCha8Rng, dyadic: bool) -> Arc<TimeScale> {
    let n = rng.gen_range(3..30);
    let mut t = rng.gen_range(-3.0..3.0f64).round();
    let mut pts = vec![t];
    for _ in 1..n {
        t += if dyadic {
            0.5f64.powi(rng.gen_range(0..8))
        } else {
            rng.gen_range(1e-3..2.0)
        };
        pts.push(t);
    }
    Arc::new(TimeScale::from_points(pts).unwrap())
}

#[test]
fn constants_annihilate_every_hat() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..100 {
        let ts = random_scale(&mut rng, true);
        let c = rng.gen_range(-5.0..5.0);
        let f = on_kappa(&ts, vec![c; ts.len() - 1]);
        for k in 1..ts.len() - 1 {
            assert_eq!(pairing(&f, k), 0.0, "trial {trial}, k = {k}");
        }
    }
    for trial in 0..100 {
        let ts = random_scale(&mut rng, false);
        let c = rng.gen_range(-5.0..5.0);
        let f = on_kappa(&ts, vec![c; ts.len() - 1]);
        for k in 1..ts.len() - 1 {
            let p = pairing(&f, k);
            assert!(p.abs() <= 4.0 * f64::EPSILON * c.abs(), "trial {trial}, k = {k}: {p}");
        }
    }
}

#[test]
fn nonconstant_functions_are_detected() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..100 {
        let ts = random_scale(&mut rng, trial % 2 == 0);
        let m = ts.len() - 1;
        let values: Vec<f64> = if trial % 4 == 1 {
            // A single small bump on an otherwise constant function.
            let mut v = vec![rng.gen_range(-5.0..5.0); m];
            v[rng.gen_range(0..m)] += 1e-6;
            v
        } else {
            (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let f = on_kappa(&ts, values);
        let best = (1..ts.len() - 1).map(|k| pairing(&f, k).abs()).fold(0.0, f64::max);
        assert!(best > 1e-8, "trial {trial}: largest pairing {best:e}");
    }
}

#[test]
fn pairing_is_a_difference_of_neighbours() {
    let ts = Arc::new(TimeScale::from_points(vec![0.0, 0.3, 1.0, 1.1, 2.0]).unwrap());
    let f = on_kappa(&ts, vec![4.0, -1.0, 2.5, 7.0]);
    for k in 1..4 {
        let want = f.at(k - 1) - f.at(k);
        assert!((pairing(&f, k) - want).abs() < 1e-14);
    }
}
