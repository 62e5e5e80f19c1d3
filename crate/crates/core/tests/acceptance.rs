//! Acceptance gate: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL ...` line.

mod common;

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsvar_core::calculus::*;
use tsvar_core::composition::*;
use tsvar_core::inverse::*;
use tsvar_core::{GridFunction, ScaleSpec, TimeScale};

fn report(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn grid(pts: &[f64]) -> Arc<TimeScale> {
    Arc::new(TimeScale::from_points(pts.to_vec()).unwrap())
}

fn pab(cycles: u32, step: f64) -> Arc<TimeScale> {
    Arc::new(TimeScale::build(&ScaleSpec::Pab { a: 1.0, b: 1.0, cycles, step }).unwrap())
}

fn ex1(ts: Arc<TimeScale>) -> tsvar_core::Result<CompositionProblem> {
    CompositionProblem::from_text(ts, &["t*v"], &["v^2"], "F1/F2")?.with_boundary(Some(0.0), Some(1.0))
}

fn ex4(ts: Arc<TimeScale>) -> tsvar_core::Result<CompositionProblem> {
    Ok(CompositionProblem::from_text(ts, &["v^2"], &["t*v"], "F1/F2")?
        .with_boundary(Some(0.0), Some(1.0))?
        .with_iso(IsoConstraint::from_text(&[], &["t*v"], "G1", 1.0)?))
}

fn quotient(cp: &CompositionProblem, y: &GridFunction) -> f64 {
    let st = evaluate_composition(cp, y).unwrap();
    st.f[0] / st.f[1]
}

#[test]
fn criterion_1_quotient_on_three_points() {
    let start = Instant::now();
    let cp = ex1(grid(&[0.0, 0.5, 1.0])).unwrap();
    // The paper's value is the larger of the two stationary quotients.
    let opts = SolveOptions {
        objective: Objective::Max,
        ..Default::default()
    };
    let e = solve_composition(&cp, &opts).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let q = quotient(&cp, &e.y);
    let r2 = 2f64.sqrt();
    let (dq, dy) = ((q - (1.0 + r2) / 8.0).abs(), (e.y.at(1) - (1.0 - r2 / 2.0)).abs());
    report(
        1,
        dq <= 1e-9 && dy <= 1e-9 && elapsed < 1.0,
        format!("(Q = {q:.12}, |ΔQ| = {dq:.1e}, |Δy(1/2)| = {dy:.1e}, {elapsed:.3} s)"),
    );
}

#[test]
fn criterion_2_quotient_refinement() {
    let start = Instant::now();
    let q_true = (3.0 - 2.0 * 3f64.sqrt()) / 12.0;
    let y_true = |t: f64| -(3.0 + 2.0 * 3f64.sqrt()) * t * t + (4.0 + 2.0 * 3f64.sqrt()) * t;
    let runs = solve_refinement(ex1, 0.0, 1.0, 4..=8, &SolveOptions::default()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let mut errors = Vec::new();
    for (h, e) in &runs {
        let cp = ex1(Arc::new(TimeScale::hz(*h, 0.0, 1.0).unwrap())).unwrap();
        errors.push((quotient(&cp, &e.y) - q_true).abs());
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let (_, finest) = runs.last().unwrap();
    let y_err = finest
        .y
        .iter()
        .map(|(i, v)| (v - y_true(finest.y.times()[i])).abs())
        .fold(0.0, f64::max);
    let last = *errors.last().unwrap();
    report(
        2,
        monotone && last < 5e-3 && y_err < 1e-2 && elapsed < 10.0,
        format!(
            "(|ΔQ| = {}, monotone = {monotone}, max |Δy| = {y_err:.2e}, {elapsed:.2} s)",
            errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    );
}

#[test]
fn criterion_3_product_of_three_integrals() {
    let ts = Arc::new(TimeScale::hz(0.5, 0.0, 3.0).unwrap());
    let solve = |delta: &[&str], nabla: &[&str]| {
        let cp = CompositionProblem::from_text(ts.clone(), delta, nabla, "F1*F2*F3")
            .unwrap()
            .with_boundary(Some(0.0), Some(3.0))
            .unwrap();
        let e = solve_composition(&cp, &SolveOptions::default()).unwrap();
        let f = evaluate_composition(&cp, &e.y).unwrap().f;
        ((f[0] * f[2] + f[1] * f[2]) / (2.0 * f[0] * f[1]), e.y)
    };
    let (q_mixed, y) = solve(&["t*v", "v*(1+t)"], &["v^2+t"]);
    let table = [0.0, 2.0711875, 3.5139, 4.3281375, 4.5139, 4.0711875, 3.0];
    let y_err = table.iter().zip(y.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (q_delta, _) = solve(&["t*v", "v*(1+t)", "v^2+t"], &[]);
    let (q_nabla, _) = solve(&[], &["t*v", "v*(1+t)", "v^2+t"]);
    let checks = [
        ("mixed Q", (q_mixed - 2.5139).abs()),
        ("mixed table", y_err),
        ("delta-only Q", (q_delta - 2.5216).abs()),
        ("nabla-only Q", (q_nabla - 3.1097).abs()),
    ];
    let ok = checks.iter().all(|&(_, e)| e <= 5e-4);
    report(
        3,
        ok,
        format!(
            "(Q = {q_mixed:.6}, {q_delta:.6}, {q_nabla:.6}; {})",
            checks
                .iter()
                .map(|(name, e)| if *e <= 5e-4 { format!("{name} ok") } else { format!("{name} off by {e:.2e}") })
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}

#[test]
fn criterion_4_isoperimetric_quotient() {
    let cp = ex4(grid(&[0.0, 0.5, 1.0])).unwrap();
    let e = solve_composition(&cp, &SolveOptions::default()).unwrap();
    let lambda = e.lambda.unwrap();
    let k = evaluate_composition(&cp, &e.y).unwrap().iso.unwrap().value;
    let y_err = [0.0, 0.0, 1.0].iter().zip(e.y.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let small = (lambda - 6.0).abs() <= 1e-8 && (k - 1.0).abs() <= 1e-10 && y_err <= 1e-8;

    let runs = solve_refinement(ex4, 0.0, 1.0, 4..=10, &SolveOptions::default()).unwrap();
    let l_errors: Vec<f64> = runs.iter().map(|(_, e)| (e.lambda.unwrap() - 8.0).abs()).collect();
    let (_, finest) = runs.last().unwrap();
    let y_fine = finest
        .y
        .iter()
        .map(|(i, v)| {
            let t = finest.y.times()[i];
            (v - (3.0 * t * t - 2.0 * t)).abs()
        })
        .fold(0.0, f64::max);
    let fine = *l_errors.last().unwrap() < 1e-2 && y_fine < 1e-2;
    report(
        4,
        small && fine,
        format!(
            "(λ = {lambda:.10}, K = {k:.12}, |Δy| = {y_err:.1e}; hZ |Δλ| = {}, finest |Δy| = {y_fine:.1e})",
            l_errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    );
}

#[test]
fn criterion_5_helmholtz_verdicts() {
    let scales = [
        Arc::new(TimeScale::hz(1.0, 0.0, 5.0).unwrap()),
        Arc::new(TimeScale::qz(2.0, 0, 4).unwrap()),
        pab(3, 0.25),
    ];
    let oscillator = IntegroDiffEquation::from_text("v", "v - t").unwrap();
    let control = IntegroDiffEquation::from_text("v", "y").unwrap();
    let mut ok = true;
    let mut lines = Vec::new();
    for ts in &scales {
        let v = helmholtz_check(&oscillator, ts, 16, 1).unwrap();
        let w = v.witness.as_ref().map(|w| w.value);
        let refuted = v.status == HelmholtzStatus::NotEulerLagrange && w == Some(1.0) && v.max_abs_d == 1.0;
        let c = helmholtz_check(&control, ts, 16, 1).unwrap();
        let certified = c.status == HelmholtzStatus::CertifiedSelfAdjoint;
        ok &= refuted && certified;
        lines.push(format!("{}: {} / {}", ts.provenance(), v.status, c.status));
    }
    report(5, ok, format!("({})", lines.join("; ")));
}

#[test]
fn criterion_6_synthesis_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    for case in 0..100 {
        let spec = common::minimizing_spec(&mut rng);
        let l = synthesize_lagrangian(&spec).unwrap();
        let rep = verify_synthesis_seeded(&l, &spec, case).unwrap();
        if !rep.passed() {
            failures.push(format!("case {case}: {}", rep.failures[0]));
        }
    }
    let mut alternating = true;
    for k in 1..8 {
        let h = 0.5f64.powi(k);
        let ts = Arc::new(TimeScale::hz(h, 0.0, 2.0).unwrap());
        let spec = SynthesisSpec::new(ts.clone()).unwrap().with_p("1 + t").unwrap();
        let (r, _) = recursion_coefficients(&spec).unwrap();
        let mut e = 1.0;
        for (i, ri) in r.iter() {
            e *= 1.0 + ts.mu(i) * ri;
            let want = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
            alternating &= e == want;
        }
    }
    report(
        6,
        failures.is_empty() && alternating,
        format!(
            "(100 random specs, {} failed{}; e_r = (−1)^k exactly: {alternating})",
            failures.len(),
            failures.first().map(|f| format!(", first {f}")).unwrap_or_default()
        ),
    );
}

fn random_scale(rng: &mut ChaCha8Rng) -> Arc<TimeScale> {
    let n = rng.gen_range(3..24);
    let mut t = rng.gen_range(-5.0..5.0);
    let mut pts = vec![t];
    for _ in 1..n {
        t += rng.gen_range(1e-3..2.0);
        pts.push(t);
    }
    Arc::new(TimeScale::from_points(pts).unwrap())
}

fn random_fn(ts: &Arc<TimeScale>, rng: &mut ChaCha8Rng, lo: f64) -> GridFunction {
    GridFunction::new(ts.clone(), (0..ts.len()).map(|_| lo + rng.gen_range(-10.0..10.0)).collect()).unwrap()
}

#[test]
fn criterion_7_calculus_identities() {
    const CASES: usize = 500;
    let start = Instant::now();
    let rel = |a: f64, b: f64, size: f64| (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()).max(size));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad: Vec<&str> = Vec::new();
    for _ in 0..CASES {
        let ts = random_scale(&mut rng);
        let n = ts.len();
        let (f, g) = (random_fn(&ts, &mut rng, 0.0), random_fn(&ts, &mut rng, 0.0));
        let (fd, gd, fs, gs) = (
            delta_derivative(&f).unwrap(),
            delta_derivative(&g).unwrap(),
            sigma_shift(&f).unwrap(),
            sigma_shift(&g).unwrap(),
        );

        let fg = delta_derivative(&f.zip_with(&g, |a, b| a * b).unwrap()).unwrap();
        for (i, l) in fg.iter() {
            let (x, y) = (fd.at(i) * g.at(i), fs.at(i) * gd.at(i));
            if !rel(l, x + y, x.abs() + y.abs()) {
                bad.push("product rule");
            }
        }

        let den = random_fn(&ts, &mut rng, 11.0);
        let dd = delta_derivative(&den).unwrap();
        let ds = sigma_shift(&den).unwrap();
        let qd = delta_derivative(&f.zip_with(&den, |a, b| a / b).unwrap()).unwrap();
        for (i, l) in qd.iter() {
            let (x, y) = (fd.at(i) * den.at(i), f.at(i) * dd.at(i));
            let w = den.at(i) * ds.at(i);
            if !rel(l, (x - y) / w, (x.abs() + y.abs()) / w.abs()) {
                bad.push("quotient rule");
            }
        }

        for (i, d) in fd.iter() {
            if !rel(fs.at(i), f.at(i) + ts.mu(i) * d, f.at(i).abs()) {
                bad.push("sigma");
            }
            if !rel(delta_integral(&f, ts.t(i), ts.sigma(i)).unwrap(), ts.mu(i) * f.at(i), 0.0) {
                bad.push("integral over a jump");
            }
        }

        let (a, b) = (ts.min(), ts.max());
        let ends = f.at(n - 1) * g.at(n - 1) - f.at(0) * g.at(0);
        let abs_int = |h: &GridFunction| delta_integral(&h.map(f64::abs).unwrap(), a, b).unwrap();
        let parts = [
            (f.zip_with(&gd, |x, y| x * y).unwrap(), fd.zip_with(&gs, |x, y| x * y).unwrap()),
            (fs.zip_with(&gd, |x, y| x * y).unwrap(), fd.zip_with(&g, |x, y| x * y).unwrap()),
        ];
        for (l, r) in &parts {
            let (li, ri) = (delta_integral(l, a, b).unwrap(), delta_integral(r, a, b).unwrap());
            if !rel(li, ends - ri, abs_int(l) + abs_int(r) + ends.abs()) {
                bad.push("integration by parts");
            }
        }

        let (fr, fabs) = (rho_shift(&f).unwrap(), f.map(f64::abs).unwrap());
        let i = rng.gen_range(0..n - 1);
        let j = rng.gen_range(i + 1..n);
        let (s, e) = (ts.t(i), ts.t(j));
        let size = delta_integral(&fabs, s, e).unwrap() + nabla_integral(&fabs, s, e).unwrap();
        if !rel(delta_integral(&f, s, e).unwrap(), nabla_integral(&fr, s, e).unwrap(), size)
            || !rel(nabla_integral(&f, s, e).unwrap(), delta_integral(&fs, s, e).unwrap(), size)
        {
            bad.push("delta-nabla conversion");
        }
    }
    bad.sort();
    bad.dedup();
    let elapsed = start.elapsed().as_secs_f64();
    report(
        7,
        bad.is_empty() && elapsed < 30.0,
        format!("({CASES} random cases per identity, {elapsed:.2} s, failing: {})", if bad.is_empty() { "none".into() } else { bad.join(", ") }),
    );
}

#[test]
fn criterion_8_form_divergence() {
    let ts = pab(3, 0.25);
    let cp = CompositionProblem::from_text(ts.clone(), &["v^2 + y"], &["t*v"], "F1*F2").unwrap();
    let y = GridFunction::from_fn(ts.clone(), |t| t * t / 4.0 + 1.0).unwrap();
    let d = el_form_divergence(&cp, &y).unwrap();
    let odd: Vec<(f64, f64)> = d
        .same_point
        .iter()
        .map(|(i, v)| (ts.t(i), v))
        .filter(|(t, _)| t.fract() == 0.0 && (*t as i64) % 2 == 1)
        .collect();
    let splits = !odd.is_empty() && odd.iter().all(|(_, v)| v.abs() > 1e-3);

    let cp = ex1(Arc::new(TimeScale::hz(0.125, 0.0, 1.0).unwrap())).unwrap();
    let e = solve_composition(&cp, &SolveOptions::default()).unwrap();
    let shifted = el_form_divergence(&cp, &e.y).unwrap().shifted.max_abs();
    report(
        8,
        splits && shifted <= 1e-10,
        format!(
            "(P_1,1 odd points: {}; hZ max |difference| = {shifted:.1e})",
            odd.iter().map(|(t, v)| format!("t = {t}: {v:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    );
}

#[test]
fn criterion_9_dubois_reymond() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pairing = |f: &GridFunction, k: usize| {
        let ts = f.scale();
        let mut eta = vec![0.0; ts.len()];
        eta[k] = 1.0;
        let eta_d = delta_derivative(&GridFunction::new(ts.clone(), eta).unwrap()).unwrap();
        delta_integral(&f.zip_with(&eta_d, |a, b| a * b).unwrap(), ts.min(), ts.max()).unwrap()
    };
    let mut exact = true;
    for k in 1..6 {
        let ts = Arc::new(TimeScale::hz(0.5f64.powi(k), 0.0, 2.0).unwrap());
        let f = GridFunction::on_domain(ts.clone(), 0, vec![rng.gen_range(-5.0..5.0); ts.len() - 1]).unwrap();
        exact &= (1..ts.len() - 1).all(|j| pairing(&f, j) == 0.0);
    }
    let mut detected = 0;
    for _ in 0..100 {
        let ts = random_scale(&mut rng);
        let vals: Vec<f64> = (0..ts.len() - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = GridFunction::on_domain(ts.clone(), 0, vals).unwrap();
        if (1..ts.len() - 1).any(|j| pairing(&f, j).abs() > 1e-8) {
            detected += 1;
        }
    }
    report(
        9,
        exact && detected == 100,
        format!("(constants annihilated exactly: {exact}; non-constant detected: {detected}/100)"),
    );
}
