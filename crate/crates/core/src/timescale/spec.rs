//! Textual scale specifications:
//! `points(t0,t1,...)` | `hZ(h,a,b)` | `qZ(q,kmin,kmax)` | `Pab(a,b,cycles,step)`.
//!
//! Arguments may be constant arithmetic (`hZ(1/4, 0, 1)`).

use std::fmt;
use std::str::FromStr;

use crate::error::ParseError;
use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq)]
pub enum ScaleSpec {
    /// An explicit, strictly increasing list of points.
    Points(Vec<f64>),
    /// `{a, a+h, ..., b}`.
    Hz { h: f64, a: f64, b: f64 },
    /// `{q^k_min, ..., q^k_max}`.
    Qz { q: f64, k_min: i32, k_max: i32 },
    /// Samples of `[k(a+b), k(a+b)+a]` for `k = 0..cycles` at spacing `step`.
    Pab {
        a: f64,
        b: f64,
        cycles: u32,
        step: f64,
    },
}

impl ScaleSpec {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let lead = text.len() - text.trim_start().len();
        let body = text.trim();
        let open = body
            .find('(')
            .ok_or_else(|| ParseError::new("expected `name(args)`", lead + 1))?;
        let name = body[..open].trim();
        if !body.ends_with(')') {
            return Err(ParseError::new("missing closing `)`", lead + body.len()));
        }
        let inner = &body[open + 1..body.len() - 1];
        let args = split_args(inner, lead + open + 2)?;

        let expect = |n: usize| -> Result<(), ParseError> {
            if args.len() != n {
                return Err(ParseError::new(
                    format!("`{name}` takes {n} arguments, got {}", args.len()),
                    lead + 1,
                ));
            }
            Ok(())
        };
        let int_arg = |i: usize| -> Result<i64, ParseError> {
            let (v, col) = args[i];
            if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
                return Err(ParseError::new(format!("expected an integer, got {v}"), col));
            }
            Ok(v as i64)
        };

        match name {
            "points" => {
                if args.len() < 2 {
                    return Err(ParseError::new("points(...) needs at least two points", lead + 1));
                }
                Ok(ScaleSpec::Points(args.iter().map(|a| a.0).collect()))
            }
            "hZ" => {
                expect(3)?;
                Ok(ScaleSpec::Hz {
                    h: args[0].0,
                    a: args[1].0,
                    b: args[2].0,
                })
            }
            "qZ" => {
                expect(3)?;
                Ok(ScaleSpec::Qz {
                    q: args[0].0,
                    k_min: int_arg(1)? as i32,
                    k_max: int_arg(2)? as i32,
                })
            }
            "Pab" => {
                expect(4)?;
                let cycles = int_arg(2)?;
                if cycles < 1 {
                    return Err(ParseError::new("cycles must be at least 1", args[2].1));
                }
                Ok(ScaleSpec::Pab {
                    a: args[0].0,
                    b: args[1].0,
                    cycles: cycles as u32,
                    step: args[3].0,
                })
            }
            other => Err(ParseError::new(
                format!("unknown scale `{other}` (expected points, hZ, qZ or Pab)"),
                lead + 1,
            )),
        }
    }
}

/// Splits at top-level commas and evaluates each piece as a constant.
fn split_args(inner: &str, base_col: usize) -> Result<Vec<(f64, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0usize;
    let chars: Vec<char> = inner.chars().collect();
    let mut pieces = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                pieces.push((start, i));
                start = i + 1;
            }
            _ => {}
        }
    }
    pieces.push((start, chars.len()));
    for (s, e) in pieces {
        let piece: String = chars[s..e].iter().collect();
        let col = base_col + s;
        if piece.trim().is_empty() {
            return Err(ParseError::new("empty argument", col));
        }
        let expr = Expr::parse::<&str>(&piece, &[]).map_err(|e| e.offset(col - 1))?;
        let v = expr
            .eval(&[])
            .map_err(|e| ParseError::new(e.to_string(), col))?;
        out.push((v, col));
    }
    Ok(out)
}

impl FromStr for ScaleSpec {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for ScaleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleSpec::Points(pts) => {
                write!(f, "points(")?;
                for (i, p) in pts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
            ScaleSpec::Hz { h, a, b } => write!(f, "hZ({h}, {a}, {b})"),
            ScaleSpec::Qz { q, k_min, k_max } => write!(f, "qZ({q}, {k_min}, {k_max})"),
            ScaleSpec::Pab { a, b, cycles, step } => write!(f, "Pab({a}, {b}, {cycles}, {step})"),
        }
    }
}
