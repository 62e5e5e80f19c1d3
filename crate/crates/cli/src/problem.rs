//! Problem files: an INI-like format with one primary section.
//!
//! ```text
//! # Quotient example on three points
//! format = json
//!
//! [composition]
//! scale = points(0, 0.5, 1)
//! delta_f = ["t*v"]
//! nabla_f = ["v^2"]
//! H = "F1/F2"
//! y_a = 0
//! y_b = 1
//! objective = max
//! ```
//!
//! Values are quoted strings, bracketed lists of quoted strings or numbers,
//! or bare tokens running to the end of the line. `#` starts a comment
//! outside quotes. Every expression is parsed at load time, so a bad
//! integrand is reported at its own line and column.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use tsvar_core::composition::{component_names, CompositionProblem, IsoConstraint, Objective};
use tsvar_core::inverse::{IntegroDiffEquation, SynthesisSpec};
use tsvar_core::variational::VariationalProblem;
use tsvar_core::{Expr, Flavor, GridFunction, ParseError, TimeScale};

/// A load failure, located in the file. Line and column are 1-based; a
/// column of 0 means the whole line.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadError {
    pub line: usize,
    pub column: usize,
    /// Dotted key path, e.g. `composition.iso.P`, when the error belongs to a key.
    pub key: Option<String>,
    pub message: String,
}

impl LoadError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        LoadError {
            line,
            column,
            key: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.column)?;
        if let Some(k) = &self.key {
            write!(f, "{k}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for LoadError {}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Str(String),
    Num(f64),
}

#[derive(Debug, Clone, PartialEq)]
enum RawValue {
    Str(String),
    Bare(String),
    List(Vec<(Item, usize)>),
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: RawValue,
    line: usize,
    /// Column of the first character of the value.
    column: usize,
}

#[derive(Debug, Clone)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

const SECTIONS: [&str; 5] = ["variational", "composition", "composition.iso", "synthesis", "helmholtz"];
const PRIMARY: [&str; 4] = ["variational", "composition", "synthesis", "helmholtz"];

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn char_col(line: &str, byte: usize) -> usize {
    line[..byte].chars().count() + 1
}

fn parse_number(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_value(line: &str, start: usize, lineno: usize) -> Result<RawValue, LoadError> {
    let rest = &line[start..];
    let col = |off: usize| char_col(line, start + off);
    if let Some(body) = rest.strip_prefix('"') {
        let end = body
            .find('"')
            .ok_or_else(|| LoadError::at(lineno, col(0), "unterminated string"))?;
        let tail = &body[end + 1..];
        if !tail.trim().is_empty() {
            return Err(LoadError::at(lineno, col(end + 2), "unexpected text after the closing quote"));
        }
        return Ok(RawValue::Str(body[..end].to_string()));
    }
    if let Some(body) = rest.strip_prefix('[') {
        let close = rest
            .rfind(']')
            .ok_or_else(|| LoadError::at(lineno, col(0), "list is missing its closing `]`"))?;
        if !rest[close + 1..].trim().is_empty() {
            return Err(LoadError::at(lineno, col(close + 1), "unexpected text after the list"));
        }
        let inner = &body[..close - 1];
        let mut items = Vec::new();
        let mut i = 0;
        let bytes = inner.as_bytes();
        while i < inner.len() {
            while i < inner.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i >= inner.len() {
                break;
            }
            let item_col = col(1 + i);
            let item_end = if bytes[i] == b'"' {
                let end = inner[i + 1..]
                    .find('"')
                    .ok_or_else(|| LoadError::at(lineno, item_col, "unterminated string"))?;
                items.push((Item::Str(inner[i + 1..i + 1 + end].to_string()), item_col + 1));
                i + end + 2
            } else {
                let end = inner[i..].find(',').map_or(inner.len(), |e| i + e);
                let tok = inner[i..end].trim();
                let v = parse_number(tok).ok_or_else(|| {
                    LoadError::at(lineno, item_col, format!("list items are quoted expressions or numbers, not `{tok}`"))
                })?;
                items.push((Item::Num(v), item_col));
                end
            };
            i = item_end;
            while i < inner.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < inner.len() {
                if bytes[i] != b',' {
                    return Err(LoadError::at(lineno, col(1 + i), "expected `,` between list items"));
                }
                i += 1;
            }
        }
        return Ok(RawValue::List(items));
    }
    Ok(RawValue::Bare(rest.trim_end().to_string()))
}

fn is_key(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits the text into the global preamble and the sections.
fn lex(text: &str) -> Result<(Vec<Entry>, Vec<Section>), LoadError> {
    let mut globals = Vec::new();
    let mut sections: Vec<Section> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let lineno = n + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lead = line.len() - line.trim_start().len();
        if trimmed.starts_with('[') {
            if !trimmed.ends_with(']') {
                return Err(LoadError::at(lineno, char_col(line, lead), "section header is missing its closing `]`"));
            }
            let name = trimmed[1..trimmed.len() - 1].trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(LoadError::at(
                    lineno,
                    char_col(line, lead) + 1,
                    format!("unknown section `[{name}]`; expected one of {}", SECTIONS.join(", ")),
                ));
            }
            if let Some(prev) = sections.iter().find(|s| s.name == name) {
                return Err(LoadError::at(
                    lineno,
                    char_col(line, lead) + 1,
                    format!("section `[{name}]` already opened on line {}", prev.line),
                ));
            }
            sections.push(Section {
                name,
                line: lineno,
                entries: Vec::new(),
            });
            continue;
        }
        let eq = line
            .find('=')
            .ok_or_else(|| LoadError::at(lineno, char_col(line, lead), "expected `key = value`"))?;
        let key = line[..eq].trim();
        if !is_key(key) {
            return Err(LoadError::at(lineno, char_col(line, lead), format!("`{key}` is not a valid key")));
        }
        let after = &line[eq + 1..];
        let vstart = eq + 1 + (after.len() - after.trim_start().len());
        if line[vstart..].trim().is_empty() {
            return Err(LoadError::at(lineno, char_col(line, eq) + 1, format!("`{key}` has no value")));
        }
        let value = parse_value(line, vstart, lineno)?;
        let entry = Entry {
            key: key.to_string(),
            value,
            line: lineno,
            column: char_col(line, vstart),
        };
        let target = match sections.last_mut() {
            Some(s) => &mut s.entries,
            None => &mut globals,
        };
        if let Some(prev) = target.iter().find(|e| e.key == entry.key) {
            return Err(LoadError::at(
                lineno,
                char_col(line, lead),
                format!("`{key}` already set on line {}", prev.line),
            ));
        }
        target.push(entry);
    }
    Ok((globals, sections))
}

/// Accessor for the entries of one section that checks the schema as it goes.
struct Keys<'a> {
    path: &'a str,
    header_line: usize,
    entries: &'a [Entry],
}

impl<'a> Keys<'a> {
    fn new(path: &'a str, header_line: usize, entries: &'a [Entry], allowed: &[&str]) -> Result<Self, LoadError> {
        for e in entries {
            if !allowed.contains(&e.key.as_str()) {
                let mut err = LoadError::at(
                    e.line,
                    e.column.saturating_sub(e.key.len() + 3).max(1),
                    format!("unknown key; `{}` accepts {}", display_path(path), allowed.join(", ")),
                );
                err.key = Some(join(path, &e.key));
                return Err(err);
            }
        }
        Ok(Keys {
            path,
            header_line,
            entries,
        })
    }

    fn get(&self, key: &str) -> Option<&'a Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn fail(&self, e: &Entry, column: usize, message: impl Into<String>) -> LoadError {
        LoadError {
            line: e.line,
            column,
            key: Some(join(self.path, &e.key)),
            message: message.into(),
        }
    }

    fn required(&self, key: &str) -> Result<&'a Entry, LoadError> {
        self.get(key).ok_or_else(|| LoadError {
            line: self.header_line,
            column: 0,
            key: Some(join(self.path, key)),
            message: "missing required key".into(),
        })
    }

    fn text(&self, e: &Entry) -> Result<(String, usize), LoadError> {
        match &e.value {
            RawValue::Str(s) => Ok((s.clone(), e.column + 1)),
            RawValue::Bare(s) => Ok((s.clone(), e.column)),
            RawValue::List(_) => Err(self.fail(e, e.column, "expected a single value, not a list")),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>, LoadError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        let (s, col) = self.text(e)?;
        parse_number(&s)
            .map(Some)
            .ok_or_else(|| self.fail(e, col, format!("expected a finite number, got `{s}`")))
    }

    fn integer(&self, key: &str) -> Result<Option<u64>, LoadError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        let (s, col) = self.text(e)?;
        s.trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| self.fail(e, col, format!("expected a non-negative integer, got `{s}`")))
    }

    fn expr(&self, e: &Entry, text: &str, col: usize, vars: &[String]) -> Result<Expr, LoadError> {
        Expr::parse(text, vars).map_err(|p: ParseError| self.fail(e, col + p.column.saturating_sub(1), p.message))
    }

    fn expr_key(&self, key: &str, vars: &[&str]) -> Result<Option<(Expr, String)>, LoadError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        let (s, col) = self.text(e)?;
        let vars: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
        Ok(Some((self.expr(e, &s, col, &vars)?, s)))
    }

    /// A list of expressions; each is parsed for its own diagnostics.
    fn expr_list(&self, key: &str, vars: &[&str]) -> Result<Vec<String>, LoadError> {
        let Some(e) = self.get(key) else { return Ok(Vec::new()) };
        let RawValue::List(items) = &e.value else {
            return Err(self.fail(e, e.column, "expected a bracketed list of quoted expressions"));
        };
        let vars: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
        items
            .iter()
            .map(|(item, col)| match item {
                Item::Str(s) => self.expr(e, s, *col, &vars).map(|_| s.clone()),
                Item::Num(_) => Err(self.fail(e, *col, "expressions must be quoted")),
            })
            .collect()
    }

    fn scale(&self) -> Result<Arc<TimeScale>, LoadError> {
        let e = self.required("scale")?;
        let (s, col) = self.text(e)?;
        let spec = tsvar_core::ScaleSpec::parse(&s).map_err(|p| self.fail(e, col + p.column.saturating_sub(1), p.message))?;
        TimeScale::build(&spec)
            .map(Arc::new)
            .map_err(|err| self.fail(e, col, err.to_string()))
    }

    /// A curve given as an expression in `t` or as one value per point.
    fn curve(&self, key: &str, ts: &Arc<TimeScale>) -> Result<Option<GridFunction>, LoadError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        let values = match &e.value {
            RawValue::List(items) => {
                let mut v = Vec::with_capacity(items.len());
                for (item, col) in items {
                    match item {
                        Item::Num(x) => v.push(*x),
                        Item::Str(_) => return Err(self.fail(e, *col, "a point list holds numbers")),
                    }
                }
                if v.len() != ts.len() {
                    return Err(self.fail(
                        e,
                        e.column,
                        format!("{} values given for a scale of {} points", v.len(), ts.len()),
                    ));
                }
                v
            }
            _ => {
                let (s, col) = self.text(e)?;
                let f = self.expr(e, &s, col, &["t".to_string()])?;
                let mut v = Vec::with_capacity(ts.len());
                for &t in ts.points() {
                    v.push(f.eval(&[t]).map_err(|err| self.fail(e, col, format!("at t = {t}: {err}")))?);
                }
                v
            }
        };
        GridFunction::new(ts.clone(), values)
            .map(Some)
            .map_err(|err| self.fail(e, e.column, err.to_string()))
    }

    fn word<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, LoadError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        let (s, col) = self.text(e)?;
        s.trim()
            .parse::<T>()
            .map(Some)
            .map_err(|_| self.fail(e, col, format!("expected {what}, got `{s}`")))
    }

    /// Wraps a constructor error at the section header.
    fn build_err(&self, err: tsvar_core::Error) -> LoadError {
        LoadError {
            line: self.header_line,
            column: 0,
            key: Some(display_path(self.path)),
            message: err.to_string(),
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn display_path(path: &str) -> String {
    if path.is_empty() {
        "the preamble".into()
    } else {
        format!("[{path}]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("expected text, json or csv, got `{other}`")),
        }
    }
}

/// Keys allowed before the first section.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Globals {
    pub tol: Option<f64>,
    pub format: Option<Format>,
}

pub struct VariationalFile {
    pub problem: VariationalProblem,
    pub lagrangian: String,
    pub curve: Option<GridFunction>,
}

pub struct CompositionFile {
    pub problem: CompositionProblem,
    pub objective: Option<Objective>,
    pub curve: Option<GridFunction>,
    /// Multiplier to check `curve` against.
    pub lambda: Option<f64>,
}

pub struct HelmholtzFile {
    pub scale: Arc<TimeScale>,
    pub equation: IntegroDiffEquation,
    pub h: String,
    pub g: String,
    pub trials: usize,
    pub seed: u64,
}

pub enum Problem {
    Variational(VariationalFile),
    Composition(CompositionFile),
    Synthesis(SynthesisSpec),
    Helmholtz(HelmholtzFile),
}

impl Problem {
    pub fn kind(&self) -> &'static str {
        match self {
            Problem::Variational(_) => "variational",
            Problem::Composition(_) => "composition",
            Problem::Synthesis(_) => "synthesis",
            Problem::Helmholtz(_) => "helmholtz",
        }
    }

    pub fn scale(&self) -> &Arc<TimeScale> {
        match self {
            Problem::Variational(v) => &v.problem.scale,
            Problem::Composition(c) => &c.problem.scale,
            Problem::Synthesis(s) => &s.scale,
            Problem::Helmholtz(h) => &h.scale,
        }
    }
}

pub struct ProblemFile {
    pub globals: Globals,
    pub problem: Problem,
}

impl fmt::Debug for ProblemFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemFile")
            .field("globals", &self.globals)
            .field("problem", &self.problem.kind())
            .field("scale", &self.problem.scale().provenance())
            .finish()
    }
}

const TXY: [&str; 3] = ["t", "y", "v"];

fn as_refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn load_globals(entries: &[Entry]) -> Result<Globals, LoadError> {
    let k = Keys::new("", 1, entries, &["tol", "format"])?;
    let tol = k.number("tol")?;
    if let (Some(t), Some(e)) = (tol, k.get("tol")) {
        if t <= 0.0 {
            return Err(k.fail(e, e.column, "tolerance must be positive"));
        }
    }
    Ok(Globals {
        tol,
        format: k.word("format", "text, json or csv")?,
    })
}

fn load_variational(s: &Section) -> Result<Problem, LoadError> {
    let k = Keys::new(&s.name, s.line, &s.entries, &["scale", "lagrangian", "flavor", "y_a", "y_b", "curve"])?;
    let ts = k.scale()?;
    k.required("lagrangian")?;
    let (_, text) = k.expr_key("lagrangian", &TXY)?.expect("required");
    let flavor = k.word::<Flavor>("flavor", "delta or nabla")?.unwrap_or(Flavor::Delta);
    let (y_a, y_b) = (k.number("y_a")?, k.number("y_b")?);
    let problem = VariationalProblem::from_text(ts.clone(), &text, flavor)
        .and_then(|p| p.with_boundary(y_a, y_b))
        .map_err(|e| k.build_err(e))?;
    Ok(Problem::Variational(VariationalFile {
        problem,
        lagrangian: text,
        curve: k.curve("curve", &ts)?,
    }))
}

fn load_composition(s: &Section, iso: Option<&Section>) -> Result<Problem, LoadError> {
    let k = Keys::new(
        &s.name,
        s.line,
        &s.entries,
        &["scale", "delta_f", "nabla_f", "H", "y_a", "y_b", "objective", "curve"],
    )?;
    let ts = k.scale()?;
    let delta = k.expr_list("delta_f", &TXY)?;
    let nabla = k.expr_list("nabla_f", &TXY)?;
    let m = delta.len() + nabla.len();
    if m == 0 {
        return Err(LoadError {
            line: s.line,
            column: 0,
            key: Some("composition".into()),
            message: "at least one of delta_f, nabla_f must list an integrand".into(),
        });
    }
    k.required("H")?;
    let f_names = component_names("F", m);
    let f_vars: Vec<&str> = f_names.iter().map(String::as_str).collect();
    let (_, h) = k.expr_key("H", &f_vars)?.expect("required");
    let (y_a, y_b) = (k.number("y_a")?, k.number("y_b")?);
    let mut problem = CompositionProblem::from_text(ts.clone(), &as_refs(&delta), &as_refs(&nabla), &h)
        .and_then(|p| p.with_boundary(y_a, y_b))
        .map_err(|e| k.build_err(e))?;

    let mut lambda = None;
    if let Some(is) = iso {
        let ki = Keys::new(&is.name, is.line, &is.entries, &["delta_g", "nabla_g", "P", "d", "lambda"])?;
        let dg = ki.expr_list("delta_g", &TXY)?;
        let ng = ki.expr_list("nabla_g", &TXY)?;
        let g_names = component_names("G", dg.len() + ng.len());
        let g_vars: Vec<&str> = g_names.iter().map(String::as_str).collect();
        ki.required("P")?;
        let (_, p) = ki.expr_key("P", &g_vars)?.expect("required");
        ki.required("d")?;
        let d = ki.number("d")?.expect("required");
        lambda = ki.number("lambda")?;
        let c = IsoConstraint::from_text(&as_refs(&dg), &as_refs(&ng), &p, d).map_err(|e| ki.build_err(e))?;
        problem = problem.with_iso(c);
    }
    Ok(Problem::Composition(CompositionFile {
        problem,
        objective: k.word("objective", "min or max")?,
        curve: k.curve("curve", &ts)?,
        lambda,
    }))
}

fn load_synthesis(s: &Section) -> Result<Problem, LoadError> {
    let k = Keys::new(&s.name, s.line, &s.entries, &["scale", "P", "q", "w", "p", "C", "R0", "y0"])?;
    let ts = k.scale()?;
    let mut spec = SynthesisSpec::new(ts.clone()).map_err(|e| k.build_err(e))?;
    if let Some((e, _)) = k.expr_key("P", &["t", "y"])? {
        spec.big_p = e;
    }
    if let Some((e, _)) = k.expr_key("q", &["t", "y"])? {
        spec.q = e;
    }
    if let Some((e, _)) = k.expr_key("w", &TXY)? {
        spec.w = e;
    }
    if let Some((e, _)) = k.expr_key("p", &["t"])? {
        spec.p = e;
    }
    let c = k.number("C")?.unwrap_or(spec.c);
    let r0 = k.number("R0")?.unwrap_or(spec.r0);
    spec = spec.with_constants(c, r0);
    if let Some(y0) = k.curve("y0", &ts)? {
        spec = spec.with_y0(y0);
    }
    Ok(Problem::Synthesis(spec))
}

fn load_helmholtz(s: &Section) -> Result<Problem, LoadError> {
    let k = Keys::new(&s.name, s.line, &s.entries, &["scale", "H", "G", "trials", "seed"])?;
    let scale = k.scale()?;
    k.required("H")?;
    k.required("G")?;
    let (he, h) = k.expr_key("H", &TXY)?.expect("required");
    let (ge, g) = k.expr_key("G", &TXY)?.expect("required");
    let equation = IntegroDiffEquation::new(he, ge).map_err(|e| k.build_err(e))?;
    let trials = k.integer("trials")?.unwrap_or(16) as usize;
    if trials == 0 {
        let e = k.get("trials").expect("parsed above");
        return Err(k.fail(e, e.column, "at least one trial is needed"));
    }
    Ok(Problem::Helmholtz(HelmholtzFile {
        scale,
        equation,
        h,
        g,
        trials,
        seed: k.integer("seed")?.unwrap_or(0),
    }))
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<ProblemFile, LoadError> {
    let (globals, sections) = lex(text)?;
    let globals = load_globals(&globals)?;
    let primary: Vec<&Section> = sections.iter().filter(|s| PRIMARY.contains(&s.name.as_str())).collect();
    let main = match primary.as_slice() {
        [one] => *one,
        [] => {
            return Err(LoadError::at(
                1,
                0,
                format!("no primary section; expected exactly one of {}", PRIMARY.map(|s| format!("[{s}]")).join(", ")),
            ))
        }
        [first, second, ..] => {
            return Err(LoadError::at(
                second.line,
                1,
                format!("[{}] cannot be combined with [{}] (line {})", second.name, first.name, first.line),
            ))
        }
    };
    let iso = sections.iter().find(|s| s.name == "composition.iso");
    if let (Some(is), false) = (iso, main.name == "composition") {
        return Err(LoadError::at(is.line, 1, "[composition.iso] needs a [composition] section"));
    }
    let problem = match main.name.as_str() {
        "variational" => load_variational(main)?,
        "composition" => load_composition(main, iso)?,
        "synthesis" => load_synthesis(main)?,
        _ => load_helmholtz(main)?,
    };
    Ok(ProblemFile { globals, problem })
}

/// Reads and parses a problem file.
pub fn load_problem(path: &Path) -> Result<ProblemFile, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| LoadError::at(0, 0, format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}
