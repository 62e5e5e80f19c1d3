//! The subcommands. Each turns a problem (or a scale) into a [`Report`] and
//! a pass/fail flag; input faults are [`CliError`]s.

use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use tsvar_core::composition::{
    classify_extremal, el_form_divergence, el_residuals, evaluate_composition, iso_residuals, solve_composition,
    transversality_residuals, Composite, CompositionProblem, Extremal, Objective, SolveOptions,
};
use tsvar_core::inverse::{helmholtz_check, synthesize_lagrangian, verify_synthesis_seeded, HelmholtzStatus, SynthesisSpec};
use tsvar_core::variational::{el_residual, evaluate_functional, solve_direct, VariationalProblem};
use tsvar_core::{Expr, Flavor, GridFunction, ScaleKind, ScaleSpec, TimeScale};

use crate::problem::{load_problem, CompositionFile, Format, HelmholtzFile, LoadError, Problem, ProblemFile, VariationalFile};
use crate::report::{Fields, Report, Table, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    AnalyzeScale,
    Solve,
    CheckEl,
    Transversality,
    IsoCheck,
    Synthesize,
    Helmholtz,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::AnalyzeScale,
        Command::Solve,
        Command::CheckEl,
        Command::Transversality,
        Command::IsoCheck,
        Command::Synthesize,
        Command::Helmholtz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::AnalyzeScale => "analyze-scale",
            Command::Solve => "solve",
            Command::CheckEl => "check-el",
            Command::Transversality => "transversality",
            Command::IsoCheck => "iso-check",
            Command::Synthesize => "synthesize",
            Command::Helmholtz => "helmholtz",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// Verdict the caller asserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    El,
    NotEl,
}

impl FromStr for Expect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "el" => Ok(Expect::El),
            "not-el" => Ok(Expect::NotEl),
            other => Err(format!("expected `el` or `not-el`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Options {
    pub format: Option<Format>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub multistart: Option<usize>,
    pub objective: Option<Objective>,
    /// Step sizes for an `hZ` refinement sweep over the problem's interval.
    pub refine: Option<Vec<f64>>,
    pub expect: Option<Expect>,
    pub timings: bool,
}

#[derive(Debug)]
pub enum CliError {
    Load { path: String, error: LoadError },
    Usage(String),
    Engine(tsvar_core::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Load { path, error } => write!(f, "{path}:{error}"),
            CliError::Usage(m) => f.write_str(m),
            CliError::Engine(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tsvar_core::Error> for CliError {
    fn from(e: tsvar_core::Error) -> Self {
        CliError::Engine(e)
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub format: Format,
    /// `false` when a check failed (exit code 2).
    pub passed: bool,
}

type Run = Result<(Report, bool), CliError>;

/// Runs `command` on `input` (a problem file, or for `analyze-scale` also a
/// scale spec). `echo` is recorded as the report's command line.
pub fn run(command: Command, input: &str, opts: &Options, echo: &str) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut report = Report::new(echo);
    let (file, scale) = if command == Command::AnalyzeScale && !Path::new(input).exists() {
        let spec = ScaleSpec::parse(input).map_err(|e| CliError::Usage(format!("`{input}` is neither a file nor a scale spec: {e}")))?;
        (None, Arc::new(TimeScale::build(&spec)?))
    } else {
        let f = load_problem(Path::new(input)).map_err(|error| CliError::Load {
            path: input.to_string(),
            error,
        })?;
        let s = f.problem.scale().clone();
        (Some(f), s)
    };
    let format = opts
        .format
        .or(file.as_ref().and_then(|f| f.globals.format))
        .unwrap_or(Format::Text);
    let tol = opts.tol.or(file.as_ref().and_then(|f| f.globals.tol));
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("tolerance must be positive, got {t}")));
        }
    }
    scale_summary(&mut report, &scale);
    let ctx = Ctx { opts, tol };

    let (mut report, passed) = match (command, file) {
        (Command::AnalyzeScale, _) => analyze_scale(report, &scale),
        (c, Some(f)) => dispatch(c, f, &ctx, report)?,
        (_, None) => unreachable!("only analyze-scale accepts a bare spec"),
    };
    if opts.timings {
        report.fields("timings", Fields::new().add("elapsed_s", start.elapsed().as_secs_f64()));
    }
    Ok(Outcome { report, format, passed })
}

struct Ctx<'a> {
    opts: &'a Options,
    tol: Option<f64>,
}

impl Ctx<'_> {
    /// `max ≤ tol·(1 + |c|)`, with `base` when no override was given.
    fn within(&self, max: f64, c: f64, base: f64) -> bool {
        max <= self.tol.unwrap_or(base) * (1.0 + c.abs())
    }

    fn solve_options(&self, file_objective: Option<Objective>) -> SolveOptions {
        let mut o = SolveOptions::default();
        o.objective = self.opts.objective.or(file_objective).unwrap_or(o.objective);
        o.multistart = self.opts.multistart.unwrap_or(o.multistart);
        o.seed = self.opts.seed.unwrap_or(o.seed);
        o.tolerance = self.tol.unwrap_or(o.tolerance);
        o
    }
}

fn wrong_section(c: Command, p: &Problem, accepted: &str) -> CliError {
    CliError::Usage(format!("`{}` applies to {accepted} files, not [{}]", c.name(), p.kind()))
}

fn dispatch(c: Command, f: ProblemFile, ctx: &Ctx, report: Report) -> Run {
    let p = f.problem;
    match (c, p) {
        (Command::Solve, Problem::Variational(v)) => solve_variational(report, &v, ctx),
        (Command::Solve, Problem::Composition(cf)) => solve_comp(report, &cf, ctx),
        (Command::CheckEl, Problem::Variational(v)) => check_el_variational(report, &v, ctx),
        (Command::CheckEl, Problem::Composition(cf)) => check_el_comp(report, &cf, ctx),
        (Command::Transversality, Problem::Variational(v)) => {
            let cf = CompositionFile {
                problem: as_composition(&v)?,
                objective: None,
                curve: v.curve.clone(),
                lambda: None,
            };
            transversality(report, &cf, ctx)
        }
        (Command::Transversality, Problem::Composition(cf)) => transversality(report, &cf, ctx),
        (Command::IsoCheck, Problem::Composition(cf)) => iso_check(report, &cf, ctx),
        (Command::Synthesize, Problem::Synthesis(s)) => synthesize(report, &s, ctx),
        (Command::Helmholtz, Problem::Helmholtz(h)) => helmholtz(report, &h, ctx),
        (c @ (Command::Solve | Command::CheckEl | Command::Transversality), p) => {
            Err(wrong_section(c, &p, "[variational] and [composition]"))
        }
        (c @ Command::IsoCheck, p) => Err(wrong_section(c, &p, "[composition] with [composition.iso]")),
        (c @ Command::Synthesize, p) => Err(wrong_section(c, &p, "[synthesis]")),
        (c, p) => Err(wrong_section(c, &p, "[helmholtz]")),
    }
}

fn scale_summary(r: &mut Report, ts: &TimeScale) {
    let props = ts.properties();
    let mut f = Fields::new()
        .add("spec", ts.provenance())
        .add("kind", ts.kind().to_string())
        .add("points", ts.len())
        .add("min", ts.min())
        .add("max", ts.max())
        .add("isolated", props.is_isolated)
        .add("regular", props.is_regular);
    if let ScaleKind::SampledDense { step } = ts.kind() {
        f.push("surrogate_step", step);
        f.push("modeled_regular", props.modeled_regular);
    }
    r.fields("scale", f);
}

fn analyze_scale(mut r: Report, ts: &TimeScale) -> (Report, bool) {
    let sampled = !ts.is_exact();
    let mut cols = vec!["t", "sigma", "rho", "mu", "nu", "class"];
    if sampled {
        cols.extend(["modeled_sigma", "modeled_rho", "modeled_mu", "modeled_class"]);
    }
    let mut t = Table::new(&cols);
    for i in 0..ts.len() {
        let j = ts.jump_data_at(i);
        let mut row: Vec<Value> = vec![
            j.t.into(),
            j.sigma.into(),
            j.rho.into(),
            j.mu.into(),
            j.nu.into(),
            j.class.labels().join(" ").into(),
        ];
        if sampled {
            let ms = ts.modeled_sigma(i);
            row.extend([
                ms.into(),
                ts.modeled_rho(i).into(),
                (ms - j.t).into(),
                ts.modeled_class(i).labels().join(" ").into(),
            ]);
        }
        t.push(row);
    }
    r.table("jumps", t);
    (r, true)
}

fn curve_table(y: &GridFunction) -> Table {
    let mut t = Table::new(&["t", "y"]);
    for (i, v) in y.iter() {
        t.push(vec![y.times()[i].into(), v.into()]);
    }
    t
}

/// Values of several grid functions side by side over the whole scale;
/// points outside a function's domain are left empty.
fn profile_table(ts: &TimeScale, cols: &[(&str, &GridFunction)]) -> Table {
    let mut names = vec!["t"];
    names.extend(cols.iter().map(|(n, _)| *n));
    let mut t = Table::new(&names);
    for i in 0..ts.len() {
        let mut row: Vec<Value> = vec![ts.t(i).into()];
        row.extend(cols.iter().map(|(_, g)| Value::from(g.get(i))));
        t.push(row);
    }
    t
}

fn failure_fields(e: &tsvar_core::Error) -> Fields {
    Fields::new().add("status", "no extremal found").add("error", e.to_string())
}

/// The `hZ(h, a, b)` sweep requested with `--refine`.
fn refinement_scales(ts: &TimeScale, hs: &[f64]) -> Result<Vec<Arc<TimeScale>>, CliError> {
    hs.iter()
        .map(|&h| {
            if !(h > 0.0 && h.is_finite()) {
                return Err(CliError::Usage(format!("refinement steps must be positive, got {h}")));
            }
            Ok(Arc::new(TimeScale::hz(h, ts.min(), ts.max())?))
        })
        .collect()
}

fn variational_on(v: &VariationalFile, ts: Arc<TimeScale>) -> Result<VariationalProblem, tsvar_core::Error> {
    VariationalProblem::from_text(ts, &v.lagrangian, v.problem.flavor)?.with_boundary(v.problem.y_a, v.problem.y_b)
}

fn solve_variational(mut r: Report, v: &VariationalFile, ctx: &Ctx) -> Run {
    let p = &v.problem;
    r.fields(
        "problem",
        Fields::new()
            .add("kind", "variational")
            .add("lagrangian", v.lagrangian.as_str())
            .add("flavor", p.flavor.to_string())
            .add("y_a", p.y_a)
            .add("y_b", p.y_b),
    );
    let y = match solve_direct(p, None) {
        Ok(y) => y,
        Err(e) => {
            r.fields("solution", failure_fields(&e));
            return Ok((r, false));
        }
    };
    let el = el_residual(p, &y)?;
    let ok = ctx.within(el.max_abs_residual, el.constant_c, p.base_tolerance());
    r.fields(
        "solution",
        Fields::new()
            .add("status", if ok { "extremal" } else { "residual above tolerance" })
            .add("value", evaluate_functional(p, &y)?)
            .add("el_constant", el.constant_c)
            .add("el_max_residual", el.max_abs_residual)
            .add("legendre_strict", el.legendre_strict),
    );
    r.table("extremal", curve_table(&y));
    let mut passed = ok;
    if let Some(hs) = &ctx.opts.refine {
        let mut t = Table::new(&["h", "points", "value", "el_max_residual", "status"]);
        for ts in refinement_scales(&p.scale, hs)? {
            let h = ts.mu(0);
            let q = variational_on(v, ts.clone())?;
            match solve_direct(&q, None) {
                Ok(y) => {
                    let el = el_residual(&q, &y)?;
                    t.push(vec![h.into(), ts.len().into(), evaluate_functional(&q, &y)?.into(), el.max_abs_residual.into(), "extremal".into()]);
                }
                Err(e) => {
                    passed = false;
                    t.push(vec![h.into(), ts.len().into(), Value::Missing, Value::Missing, e.to_string().into()]);
                }
            }
        }
        r.table("refinement", t);
    }
    Ok((r, passed))
}

fn composition_fields(cf: &CompositionFile) -> Fields {
    let cp = &cf.problem;
    let mut f = Fields::new()
        .add("kind", "composition")
        .add("delta_f", cp.objective.delta.iter().map(|i| i.describe()).collect::<Vec<_>>().join("; "))
        .add("nabla_f", cp.objective.nabla.iter().map(|i| i.describe()).collect::<Vec<_>>().join("; "))
        .add("H", cp.objective.outer.to_string())
        .add("y_a", cp.y_a)
        .add("y_b", cp.y_b);
    if let Some(iso) = &cp.iso {
        f.push("constraint", iso.constraint.outer.to_string());
        f.push("constraint_target", iso.target);
    }
    f
}

fn extremal_blocks(r: &mut Report, cp: &CompositionProblem, e: &Extremal, opts: &SolveOptions) -> Result<(), CliError> {
    let s = &e.residuals;
    r.fields(
        "solution",
        Fields::new()
            .add("status", "extremal")
            .add("objective", opts.objective.to_string())
            .add("value", e.value)
            .add("lambda", e.lambda)
            .add("normality", e.normality.map(|n| n.to_string()))
            .add("start", e.start)
            .add("iterations", e.iterations)
            .add("seed", opts.seed)
            .add("el_delta_max", s.el_delta)
            .add("el_nabla_max", s.el_nabla)
            .add("transversality_initial", s.transversality_initial)
            .add("transversality_terminal", s.transversality_terminal)
            .add("constraint_violation", s.constraint),
    );
    if let Some(iso) = s.iso {
        let mut t = Table::new(&["condition", "max_abs"]);
        for (k, v) in iso.iter().enumerate() {
            t.push(vec![(k + 1).into(), (*v).into()]);
        }
        r.table("iso_conditions", t);
    }
    let st = evaluate_composition(cp, &e.y)?;
    let mut t = Table::new(&["component", "value", "dH"]);
    for (k, (f, d)) in st.f.iter().zip(&st.h_prime).enumerate() {
        t.push(vec![format!("F{}", k + 1).into(), (*f).into(), (*d).into()]);
    }
    r.table("components", t);
    r.table("extremal", curve_table(&e.y));
    let mut t = Table::new(&["start", "residual_norm"]);
    for (k, n) in e.start_norms.iter().enumerate() {
        t.push(vec![k.into(), (*n).into()]);
    }
    r.table("starts", t);
    Ok(())
}

fn solve_comp(mut r: Report, cf: &CompositionFile, ctx: &Ctx) -> Run {
    let cp = &cf.problem;
    let opts = ctx.solve_options(cf.objective);
    r.fields("problem", composition_fields(cf));
    let mut passed = match solve_composition(cp, &opts) {
        Ok(e) => {
            extremal_blocks(&mut r, cp, &e, &opts)?;
            true
        }
        Err(e) => {
            r.fields("solution", failure_fields(&e));
            false
        }
    };
    if let Some(hs) = &ctx.opts.refine {
        let mut t = Table::new(&["h", "points", "value", "lambda", "el_delta_max", "el_nabla_max", "status"]);
        for ts in refinement_scales(&cp.scale, hs)? {
            let h = ts.mu(0);
            let mut q = CompositionProblem::new(ts.clone(), cp.objective.clone())?.with_boundary(cp.y_a, cp.y_b)?;
            if let Some(iso) = &cp.iso {
                q = q.with_iso(iso.clone());
            }
            match solve_composition(&q, &opts) {
                Ok(e) => t.push(vec![
                    h.into(),
                    ts.len().into(),
                    e.value.into(),
                    e.lambda.into(),
                    e.residuals.el_delta.into(),
                    e.residuals.el_nabla.into(),
                    "extremal".into(),
                ]),
                Err(e) => {
                    passed = false;
                    t.push(vec![
                        h.into(),
                        ts.len().into(),
                        Value::Missing,
                        Value::Missing,
                        Value::Missing,
                        Value::Missing,
                        e.to_string().into(),
                    ]);
                }
            }
        }
        r.table("refinement", t);
    }
    Ok((r, passed))
}

/// The curve to check: the file's `curve`, else a solved extremal.
fn candidate(cf: &CompositionFile, ctx: &Ctx, r: &mut Report) -> Result<Option<(GridFunction, Option<f64>)>, CliError> {
    if let Some(y) = &cf.curve {
        r.fields("candidate", Fields::new().add("source", "file").add("lambda", cf.lambda));
        return Ok(Some((y.clone(), cf.lambda)));
    }
    let opts = ctx.solve_options(cf.objective);
    match solve_composition(&cf.problem, &opts) {
        Ok(e) => {
            r.fields(
                "candidate",
                Fields::new()
                    .add("source", "solved")
                    .add("objective", opts.objective.to_string())
                    .add("seed", opts.seed)
                    .add("lambda", e.lambda),
            );
            Ok(Some((e.y, e.lambda)))
        }
        Err(e) => {
            r.fields("candidate", failure_fields(&e));
            Ok(None)
        }
    }
}

fn verdict(expect: Option<Expect>, is_el: bool) -> bool {
    match expect.unwrap_or(Expect::El) {
        Expect::El => is_el,
        Expect::NotEl => !is_el,
    }
}

fn check_el_variational(mut r: Report, v: &VariationalFile, ctx: &Ctx) -> Run {
    let p = &v.problem;
    r.fields(
        "problem",
        Fields::new()
            .add("kind", "variational")
            .add("lagrangian", v.lagrangian.as_str())
            .add("flavor", p.flavor.to_string()),
    );
    let y = match &v.curve {
        Some(y) => {
            r.fields("candidate", Fields::new().add("source", "file"));
            y.clone()
        }
        None => match solve_direct(p, None) {
            Ok(y) => {
                r.fields("candidate", Fields::new().add("source", "solved"));
                y
            }
            Err(e) => {
                r.fields("candidate", failure_fields(&e));
                return Ok((r, false));
            }
        },
    };
    let el = el_residual(p, &y)?;
    let is_el = ctx.within(el.max_abs_residual, el.constant_c, p.base_tolerance());
    r.fields(
        "euler_lagrange",
        Fields::new()
            .add("verdict", if is_el { "EL_SATISFIED" } else { "EL_VIOLATED" })
            .add("constant", el.constant_c)
            .add("max_abs_residual", el.max_abs_residual)
            .add("tolerance", ctx.tol.unwrap_or(p.base_tolerance()) * (1.0 + el.constant_c.abs()))
            .add("legendre_strict", el.legendre_strict),
    );
    let mut cols: Vec<(&str, &GridFunction)> = vec![("y", &y), ("residual", &el.residual)];
    if let Some(l) = &el.legendre {
        cols.push(("legendre", l));
    }
    r.table("residuals", profile_table(&p.scale, &cols));
    Ok((r, verdict(ctx.opts.expect, is_el)))
}

fn check_el_comp(mut r: Report, cf: &CompositionFile, ctx: &Ctx) -> Run {
    let cp = &cf.problem;
    if cp.iso.is_some() {
        return Err(CliError::Usage("the problem has an isoperimetric constraint; use `iso-check`".into()));
    }
    r.fields("problem", composition_fields(cf));
    let Some((y, _)) = candidate(cf, ctx, &mut r)? else {
        return Ok((r, false));
    };
    let forms = el_residuals(cp, &y)?;
    let delta_ok = ctx.within(forms.delta_form.max_abs(), forms.c_delta, forms.base_tolerance);
    let nabla_ok = ctx.within(forms.nabla_form.max_abs(), forms.c_nabla, forms.base_tolerance);
    let is_el = delta_ok && nabla_ok;
    let div = el_form_divergence(cp, &y)?;
    r.fields(
        "euler_lagrange",
        Fields::new()
            .add("verdict", if is_el { "EL_SATISFIED" } else { "EL_VIOLATED" })
            .add("delta_form_constant", forms.c_delta)
            .add("delta_form_max", forms.delta_form.max_abs())
            .add("delta_form_holds", delta_ok)
            .add("nabla_form_constant", forms.c_nabla)
            .add("nabla_form_max", forms.nabla_form.max_abs())
            .add("nabla_form_holds", nabla_ok)
            .add("form_divergence_same_point_max", div.same_point.max_abs())
            .add("form_divergence_shifted_max", div.shifted.max_abs()),
    );
    r.table(
        "residuals",
        profile_table(
            &cp.scale,
            &[
                ("y", &y),
                ("delta_form", &forms.delta_form),
                ("nabla_form", &forms.nabla_form),
                ("same_point", &div.same_point),
                ("shifted", &div.shifted),
            ],
        ),
    );
    Ok((r, verdict(ctx.opts.expect, is_el)))
}

/// A single-integrand problem as the composition `H = F1`.
fn as_composition(v: &VariationalFile) -> Result<CompositionProblem, CliError> {
    let p = &v.problem;
    let (delta, nabla) = match p.flavor {
        Flavor::Delta => (vec![p.lagrangian.clone()], Vec::new()),
        Flavor::Nabla => (Vec::new(), vec![p.lagrangian.clone()]),
    };
    let outer = Expr::parse("F1", &["F1"]).expect("a bare variable parses");
    Ok(CompositionProblem::new(p.scale.clone(), Composite::new(delta, nabla, outer, "F")?)?.with_boundary(p.y_a, p.y_b)?)
}

fn transversality(mut r: Report, cf: &CompositionFile, ctx: &Ctx) -> Run {
    let cp = &cf.problem;
    r.fields("problem", composition_fields(cf));
    let Some((y, _)) = candidate(cf, ctx, &mut r)? else {
        return Ok((r, false));
    };
    let tr = transversality_residuals(cp, &y)?;
    let c = el_residuals(cp, &y)?.c_delta;
    let base = cp.base_tolerance();
    let mut passed = true;
    let mut t = Table::new(&["end", "free", "applicable", "value", "holds"]);
    for (name, free, value) in [("initial", cp.y_a.is_none(), tr.initial), ("terminal", cp.y_b.is_none(), tr.terminal)] {
        // Fixed ends are reported but not judged.
        let holds = match (free, value) {
            (true, Some(v)) => {
                let ok = ctx.within(v.abs(), c, base);
                passed &= ok;
                Value::Bool(ok)
            }
            _ => Value::Missing,
        };
        t.push(vec![name.into(), free.into(), value.is_some().into(), value.into(), holds]);
    }
    r.table("transversality", t);
    r.table("candidate_curve", curve_table(&y));
    Ok((r, passed))
}

fn iso_check(mut r: Report, cf: &CompositionFile, ctx: &Ctx) -> Run {
    let cp = &cf.problem;
    if cp.iso.is_none() {
        return Err(CliError::Usage("`iso-check` needs a [composition.iso] section".into()));
    }
    if cf.curve.is_some() && cf.lambda.is_none() {
        return Err(CliError::Usage("a curve given in the file needs `lambda` in [composition.iso]".into()));
    }
    r.fields("problem", composition_fields(cf));
    let Some((y, lambda)) = candidate(cf, ctx, &mut r)? else {
        return Ok((r, false));
    };
    let lambda = lambda.expect("constrained problems carry a multiplier");
    let iso = iso_residuals(cp, &y, lambda)?;
    let max = iso.max_abs();
    let holds: Vec<bool> = (0..4).map(|k| ctx.within(max[k], iso.constants[k], iso.base_tolerance)).collect();
    let constraint_ok = iso.constraint_violation.abs() <= ctx.tol.unwrap_or(1e-10);
    // Conditions 1 and 4 are the ones a discrete extremal satisfies; 2 and 3
    // are reported for comparison.
    let passed = holds[0] && holds[3] && constraint_ok;
    r.fields(
        "isoperimetric",
        Fields::new()
            .add("verdict", if passed { "CONDITIONS_HOLD" } else { "CONDITIONS_VIOLATED" })
            .add("lambda", lambda)
            .add("constraint_value", iso.constraint_value)
            .add("constraint_violation", iso.constraint_violation)
            .add("normality", classify_extremal(cp, &y)?.to_string()),
    );
    let mut t = Table::new(&["condition", "constant", "max_abs", "holds", "judged"]);
    for k in 0..4 {
        t.push(vec![(k + 1).into(), iso.constants[k].into(), max[k].into(), holds[k].into(), (k == 0 || k == 3).into()]);
    }
    r.table("conditions", t);
    let c = &iso.conditions;
    r.table(
        "residuals",
        profile_table(&cp.scale, &[("y", &y), ("c1", &c[0]), ("c2", &c[1]), ("c3", &c[2]), ("c4", &c[3])]),
    );
    Ok((r, passed))
}

fn synthesize(mut r: Report, spec: &SynthesisSpec, ctx: &Ctx) -> Run {
    let seed = ctx.opts.seed.unwrap_or(0);
    r.fields(
        "problem",
        Fields::new()
            .add("kind", "synthesis")
            .add("P", spec.big_p.to_string())
            .add("q", spec.q.to_string())
            .add("w", spec.w.to_string())
            .add("p", spec.p.to_string())
            .add("C", spec.c)
            .add("R0", spec.r0),
    );
    let l = synthesize_lagrangian(spec)?;
    let rep = verify_synthesis_seeded(&l, spec, seed)?;
    r.fields(
        "verification",
        Fields::new()
            .add("verdict", if rep.passed() { "VERIFIED" } else { "FAILED" })
            .add("el_max_residual", rep.el_max)
            .add("legendre_max_deviation", rep.legendre_max_deviation)
            .add("probes", rep.probes)
            .add("probe_min_change", rep.probe_min_change)
            .add("seed", seed),
    );
    let ts = &spec.scale;
    let p = GridFunction::on_domain(
        ts.clone(),
        0,
        ts.kappa_upper2().map(|i| spec.p.eval(&[ts.t(i)])).collect::<Result<Vec<_>, _>>().map_err(tsvar_core::Error::from)?,
    )?;
    let (q, rr) = (l.q_term(), l.r_term());
    r.table(
        "lagrangian",
        profile_table(ts, &[("y0", &spec.y0), ("Q", &q), ("R", &rr), ("p", &p), ("legendre", &rep.legendre)]),
    );
    let mut t = Table::new(&["check", "t", "value", "expected"]);
    for f in &rep.failures {
        t.push(vec![f.check.to_string().into(), f.t.into(), f.value.into(), f.expected.into()]);
    }
    r.table("failures", t);
    Ok((r, rep.passed()))
}

fn helmholtz(mut r: Report, h: &HelmholtzFile, ctx: &Ctx) -> Run {
    let seed = ctx.opts.seed.unwrap_or(h.seed);
    let v = helmholtz_check(&h.equation, &h.scale, h.trials, seed)?;
    let mut f = Fields::new()
        .add("H", h.h.as_str())
        .add("G", h.g.as_str())
        .add("verdict", v.status.to_string())
        .add("max_abs_d", v.max_abs_d)
        .add("trials", v.trials)
        .add("seed", v.seed);
    if let Some(w) = &v.witness {
        f.push("witness_t", w.t);
        f.push("witness_d", w.value);
    }
    r.fields("helmholtz", f);
    if let Some(w) = &v.witness {
        r.table("witness_curve", curve_table(&w.curve));
    }
    let mut t = Table::new(&["note"]);
    for n in &v.notes {
        t.push(vec![n.as_str().into()]);
    }
    r.table("notes", t);
    let passed = match (ctx.opts.expect.unwrap_or(Expect::El), v.status) {
        (Expect::El, s) => s != HelmholtzStatus::NotEulerLagrange,
        (Expect::NotEl, s) => s == HelmholtzStatus::NotEulerLagrange,
    };
    Ok((r, passed))
}
