//! Browser bindings: three operations returning JSON strings.
//!
//! The `*_json` functions hold the logic and run natively too; the
//! `#[wasm_bindgen]` wrappers only turn errors into JS exceptions.

use std::sync::Arc;

use serde_json::{json, Value};
use tsvar_core::composition::{evaluate_composition, solve_composition, CompositionProblem, Objective, SolveOptions};
use tsvar_core::inverse::{synthesize_lagrangian, verify_synthesis_seeded, SynthesisSpec};
use tsvar_core::{GridFunction, TimeScale};
use wasm_bindgen::prelude::*;

fn scale(spec: &str) -> Result<Arc<TimeScale>, String> {
    TimeScale::parse(spec).map(Arc::new).map_err(|e| e.to_string())
}

/// Non-finite values become `null`.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn curve(y: &GridFunction) -> Value {
    y.iter().map(|(i, v)| json!({ "t": y.times()[i], "y": num(v) })).collect()
}

fn opt_curve(g: &GridFunction, ts: &TimeScale) -> Vec<Value> {
    (0..ts.len()).map(|i| g.get(i).map_or(Value::Null, num)).collect()
}

pub fn analyze_scale_json(spec: &str) -> Result<Value, String> {
    let ts = scale(spec)?;
    let props = ts.properties();
    let points: Vec<Value> = (0..ts.len())
        .map(|i| {
            let j = ts.jump_data_at(i);
            json!({
                "t": j.t,
                "sigma": j.sigma,
                "rho": j.rho,
                "mu": j.mu,
                "nu": j.nu,
                "class": j.class.labels(),
                "modeled_sigma": ts.modeled_sigma(i),
                "modeled_rho": ts.modeled_rho(i),
                "modeled_class": ts.modeled_class(i).labels(),
            })
        })
        .collect();
    Ok(json!({
        "spec": ts.provenance(),
        "kind": ts.kind().to_string(),
        "isolated": props.is_isolated,
        "regular": props.is_regular,
        "modeled_regular": props.modeled_regular,
        "points": points,
    }))
}

fn optional(text: &str) -> Result<Option<f64>, String> {
    let t = text.trim();
    if t.is_empty() {
        return Ok(None);
    }
    t.parse().map(Some).map_err(|_| format!("`{t}` is not a number"))
}

/// Integrand lists are newline-separated expressions; blank lines are skipped.
fn lines(text: &str) -> Vec<&str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

pub fn solve_composition_json(
    spec: &str,
    delta: &str,
    nabla: &str,
    outer: &str,
    y_a: &str,
    y_b: &str,
    objective: &str,
) -> Result<Value, String> {
    let ts = scale(spec)?;
    let objective: Objective = objective.parse().map_err(|e: tsvar_core::Error| e.to_string())?;
    let (y_a, y_b) = (optional(y_a)?, optional(y_b)?);
    let cp = CompositionProblem::from_text(ts, &lines(delta), &lines(nabla), outer)
        .and_then(|p| p.with_boundary(y_a, y_b))
        .map_err(|e| e.to_string())?;
    let opts = SolveOptions {
        objective,
        ..Default::default()
    };
    let e = solve_composition(&cp, &opts).map_err(|e| e.to_string())?;
    let st = evaluate_composition(&cp, &e.y).map_err(|e| e.to_string())?;
    let r = &e.residuals;
    Ok(json!({
        "value": num(e.value),
        "components": st.f.iter().map(|&v| num(v)).collect::<Vec<_>>(),
        "el_delta_max": num(r.el_delta),
        "el_nabla_max": num(r.el_nabla),
        "transversality_initial": r.transversality_initial.map(num),
        "transversality_terminal": r.transversality_terminal.map(num),
        "extremal": curve(&e.y),
    }))
}

#[allow(clippy::too_many_arguments)]
pub fn synthesize_json(spec: &str, big_p: &str, q: &str, w: &str, p: &str, c: f64, r0: f64, y0: &str) -> Result<Value, String> {
    let ts = scale(spec)?;
    let build = || -> tsvar_core::Result<SynthesisSpec> {
        Ok(SynthesisSpec::new(ts.clone())?
            .with_big_p(big_p)?
            .with_q(q)?
            .with_w(w)?
            .with_p(p)?
            .with_y0_text(y0)?
            .with_constants(c, r0))
    };
    let s = build().map_err(|e| e.to_string())?;
    let l = synthesize_lagrangian(&s).map_err(|e| e.to_string())?;
    let rep = verify_synthesis_seeded(&l, &s, 0).map_err(|e| e.to_string())?;
    Ok(json!({
        "verified": rep.passed(),
        "el_max": num(rep.el_max),
        "probe_min_change": num(rep.probe_min_change),
        "failures": rep.failures.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
        "t": ts.points(),
        "y0": opt_curve(&s.y0, &ts),
        "Q": opt_curve(&l.q_term(), &ts),
        "R": opt_curve(&l.r_term(), &ts),
        "legendre": opt_curve(&rep.legendre, &ts),
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn analyze_scale(spec: &str) -> Result<String, JsError> {
    to_js(analyze_scale_json(spec))
}

#[wasm_bindgen]
pub fn solve(spec: &str, delta: &str, nabla: &str, outer: &str, y_a: &str, y_b: &str, objective: &str) -> Result<String, JsError> {
    to_js(solve_composition_json(spec, delta, nabla, outer, y_a, y_b, objective))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn synthesize(spec: &str, big_p: &str, q: &str, w: &str, p: &str, c: f64, r0: f64, y0: &str) -> Result<String, JsError> {
    to_js(synthesize_json(spec, big_p, q, w, p, c, r0, y0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_table() {
        let v = analyze_scale_json("Pab(1, 1, 2, 0.5)").unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 6);
        assert_eq!(v["points"][2]["modeled_sigma"], 2.0);
        assert_eq!(v["modeled_regular"], false);
        assert!(analyze_scale_json("hZ(1, 0").is_err());
    }

    #[test]
    fn quotient_on_three_points() {
        let v = solve_composition_json("points(0, 0.5, 1)", "t*v", "v^2", "F1/F2", "0", "1", "max").unwrap();
        let y = v["extremal"][1]["y"].as_f64().unwrap();
        assert!((y - (1.0 - 0.5 * 2f64.sqrt())).abs() < 1e-9);
        assert!(solve_composition_json("points(0, 0.5, 1)", "t*v", "v^2", "F1/F2", "0", "one", "max").is_err());
    }

    #[test]
    fn synthesis_round_trip() {
        let v = synthesize_json("hZ(0.25, 0, 2)", "0.3*y^2", "0.1*y", "0", "0.3", 0.5, 0.1, "1 + t").unwrap();
        assert_eq!(v["verified"], true, "{v}");
        assert_eq!(v["R"].as_array().unwrap().len(), 9);
        assert_eq!(v["R"][8], Value::Null);
    }
}
