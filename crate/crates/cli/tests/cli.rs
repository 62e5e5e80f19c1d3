use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn problem(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("problems")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn tsvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsvar")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn scratch(name: &str, text: &str) -> String {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn quotient_on_three_points() {
    let o = tsvar(&["solve", &problem("ex1_three_points.prob"), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let j = json(&o);
    let y = j["extremal"][1]["y"].as_f64().unwrap();
    assert!((y - (1.0 - 0.5 * 2f64.sqrt())).abs() < 1e-9, "{y}");
    let q = j["solution"]["value"].as_f64().unwrap();
    assert!((q - (1.0 + 2f64.sqrt()) / 8.0).abs() < 1e-9);
}

#[test]
fn oscillator_is_refuted() {
    let path = problem("oscillator.prob");
    let o = tsvar(&["helmholtz", &path, "--format", "json"]);
    assert_eq!(code(&o), 2);
    let j = json(&o);
    assert_eq!(j["helmholtz"]["verdict"], "NOT_EULER_LAGRANGE");
    assert_eq!(j["helmholtz"]["witness_d"].as_f64(), Some(1.0));
    assert_eq!(code(&tsvar(&["helmholtz", &path, "--expect", "not-el"])), 0);
    assert_eq!(code(&tsvar(&["helmholtz", &problem("self_adjoint.prob")])), 0);
    assert_eq!(code(&tsvar(&["helmholtz", &problem("self_adjoint.prob"), "--expect", "not-el"])), 2);
}

#[test]
fn sampled_scale_jump_table() {
    // Pab(1, 1, 2, 0.5) samples [0, 1] ∪ [2, 3] at 0, 0.5, 1, 2, 2.5, 3.
    // Columns: t, sample σ, sample μ, modelled σ, modelled ρ, modelled class.
    let want: [(f64, f64, f64, f64, f64, &str); 6] = [
        (0.0, 0.5, 0.5, 0.0, 0.0, "right-dense"),
        (0.5, 1.0, 0.5, 0.5, 0.5, "right-dense left-dense dense"),
        (1.0, 2.0, 1.0, 2.0, 1.0, "right-scattered left-dense"),
        (2.0, 2.5, 0.5, 2.0, 1.0, "left-scattered right-dense"),
        (2.5, 3.0, 0.5, 2.5, 2.5, "right-dense left-dense dense"),
        (3.0, 3.0, 0.0, 3.0, 3.0, "left-dense"),
    ];
    let o = tsvar(&["analyze-scale", "Pab(1,1,2,0.5)", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let j = json(&o);
    assert_eq!(j["scale"]["kind"], "SAMPLED_DENSE(step 0.5)");
    assert_eq!(j["scale"]["surrogate_step"].as_f64(), Some(0.5));
    let rows = j["jumps"].as_array().unwrap();
    assert_eq!(rows.len(), want.len());
    for (row, w) in rows.iter().zip(want) {
        let f = |k: &str| row[k].as_f64().unwrap();
        assert_eq!((f("t"), f("sigma"), f("mu"), f("modeled_sigma"), f("modeled_rho")), (w.0, w.1, w.2, w.3, w.4));
        assert_eq!(row["modeled_class"], w.5);
    }
    // The same table from a problem file on that scale.
    let from_file = json(&tsvar(&["analyze-scale", &problem("pab_scale.prob"), "--format", "json"]));
    assert_eq!(from_file["jumps"], j["jumps"]);
}

#[test]
fn exclusive_sections_fail_with_a_location() {
    let path = scratch(
        "both.prob",
        "[variational]\nscale = hZ(1, 0, 3)\nlagrangian = \"v^2\"\n\n[composition]\nscale = hZ(1, 0, 3)\n",
    );
    let o = tsvar(&["solve", &path]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("both.prob:5:1:"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn malformed_files_report_line_and_column() {
    let path = scratch("typo.prob", "[helmholtz]\nscale = hZ(1, 0, 5)\nH = \"v +* t\"\nG = y\n");
    let o = tsvar(&["helmholtz", &path]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("typo.prob:3:9: helmholtz.H:"), "{err}");

    let path = scratch("unknown.prob", "[helmholtz]\nscale = hZ(1, 0, 5)\nH = v\nG = y\ntrails = 3\n");
    let err = String::from_utf8_lossy(&tsvar(&["helmholtz", &path]).stderr).into_owned();
    assert!(err.contains("unknown.prob:5:1: helmholtz.trails: unknown key"), "{err}");

    assert_eq!(code(&tsvar(&["solve", "no/such/file.prob"])), 1);
    assert_eq!(code(&tsvar(&["synthesize", &problem("oscillator.prob")])), 1);
}

#[test]
fn reports_are_deterministic() {
    for args in [
        vec!["solve", "ex3_product.prob", "--format", "json"],
        vec!["helmholtz", "oscillator.prob", "--seed", "7", "--format", "csv"],
        vec!["synthesize", "synthesis.prob", "--seed", "3"],
    ] {
        let mut a: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        a[1] = problem(args[1]);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        let (x, y) = (tsvar(&a), tsvar(&a));
        assert_eq!(x.stdout, y.stdout, "{args:?}");
        assert!(!x.stdout.is_empty());
    }
}

#[test]
fn json_carries_the_text_values_at_full_precision() {
    let path = problem("ex3_product.prob");
    let text = String::from_utf8(tsvar(&["solve", &path]).stdout).unwrap();
    let j = json(&tsvar(&["solve", &path, "--format", "json"]));
    let block = text.split("[extremal]\n").nth(1).unwrap().split("\n\n").next().unwrap();
    let rows: Vec<Vec<f64>> = block
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|c| c.parse().unwrap()).collect())
        .collect();
    let ys = j["extremal"].as_array().unwrap();
    assert_eq!(rows.len(), ys.len());
    for (r, y) in rows.iter().zip(ys) {
        let full = y["y"].as_f64().unwrap();
        assert!((r[1] - full).abs() <= 1e-11 * (1.0 + full.abs()), "{} vs {full}", r[1]);
        // 17 significant digits in the raw JSON.
        let raw = serde_json::to_string(&y["y"]).unwrap();
        if full != 0.0 {
            assert_eq!(raw.split('e').next().unwrap().replace(['-', '.'], "").len(), 17, "{raw}");
        }
    }
}

#[test]
fn csv_and_output_file() {
    let path = problem("ex4_iso.prob");
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ex4.csv");
    let o = tsvar(&["iso-check", &path, "--format", "csv", "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let written = std::fs::read(&out).unwrap();
    assert_eq!(written, tsvar(&["iso-check", &path, "--format", "csv"]).stdout);
    let mut r = csv::Reader::from_reader(written.as_slice());
    let lambda = r
        .records()
        .map(|rec| rec.unwrap())
        .find(|rec| &rec[0] == "isoperimetric" && &rec[2] == "lambda")
        .unwrap();
    assert!((lambda[3].parse::<f64>().unwrap() - 6.0).abs() < 1e-8);
}

#[test]
fn check_el_against_a_given_curve() {
    let good = scratch(
        "line.prob",
        "[variational]\nscale = qZ(1.5, 0, 5)\nlagrangian = \"v^2\"\ny_a = 0\ny_b = 1\ncurve = \"(t - 1)/(1.5^5 - 1)\"\n",
    );
    assert_eq!(code(&tsvar(&["check-el", &good])), 0);
    let bad = scratch(
        "bent.prob",
        "[variational]\nscale = qZ(1.5, 0, 5)\nlagrangian = \"v^2\"\ny_a = 0\ny_b = 1\ncurve = [0, 0.3, 0.4, 0.5, 0.7, 1]\n",
    );
    let o = tsvar(&["check-el", &bad, "--format", "json"]);
    assert_eq!(code(&o), 2);
    assert_eq!(json(&o)["euler_lagrange"]["verdict"], "EL_VIOLATED");
    assert_eq!(code(&tsvar(&["check-el", &bad, "--expect", "not-el"])), 0);
    // A loose enough tolerance accepts it.
    assert_eq!(code(&tsvar(&["check-el", &bad, "--tol", "10"])), 0);
}

#[test]
fn composition_check_el_solves_when_no_curve_is_given() {
    let j = json(&tsvar(&["check-el", &problem("ex1_hz.prob"), "--format", "json"]));
    assert_eq!(j["candidate"]["source"], "solved");
    assert_eq!(j["euler_lagrange"]["verdict"], "EL_SATISFIED");
    // Regular scale: the two forms agree one jump apart.
    assert!(j["euler_lagrange"]["form_divergence_shifted_max"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn free_end_transversality() {
    let o = tsvar(&["transversality", &problem("free_end.prob"), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let j = json(&o);
    let terminal = &j["transversality"][1];
    assert_eq!(terminal["free"], true);
    assert_eq!(terminal["holds"], true);
    assert_eq!(j["transversality"][0]["holds"], Value::Null);
}

#[test]
fn refinement_sweep_approaches_the_continuum_value() {
    let o = tsvar(&["solve", &problem("ex1_hz.prob"), "--refine", "0.0625,0.03125,0.015625", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let q = (3.0 - 2.0 * 3f64.sqrt()) / 12.0;
    let errs: Vec<f64> = json(&o)["refinement"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["value"].as_f64().unwrap() - q).abs())
        .collect();
    assert_eq!(errs.len(), 3);
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn synthesis_verifies_and_records_the_seed() {
    let o = tsvar(&["synthesize", &problem("synthesis.prob"), "--seed", "11", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let j = json(&o);
    assert_eq!(j["verification"]["verdict"], "VERIFIED");
    assert_eq!(j["verification"]["seed"], 11);
    assert_eq!(j["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn objective_and_multistart_flags() {
    let path = problem("ex1_three_points.prob");
    let max = json(&tsvar(&["solve", &path, "--format", "json"]))["solution"]["value"].as_f64().unwrap();
    let min = json(&tsvar(&["solve", &path, "--objective", "min", "--format", "json"]))["solution"]["value"]
        .as_f64()
        .unwrap();
    assert!(min < max);
    assert_eq!(code(&tsvar(&["solve", &path, "--multistart", "0"])), 2);
}
