//! Delta and nabla calculus of grid functions on finite scales.
//!
//! On a finite scale every point is isolated, so derivatives are difference
//! quotients and integrals are graininess-weighted sums; nothing here is an
//! approximation.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::timescale::TimeScale;

fn need_two(y: &GridFunction) -> Result<()> {
    if y.len() < 2 {
        return Err(Error::Domain(format!(
            "a difference quotient needs two consecutive points, domain is {:?}",
            y.domain()
        )));
    }
    Ok(())
}

/// `y^Δ(t) = (y(σ(t)) − y(t))/μ(t)` on the domain minus its last point.
pub fn delta_derivative(y: &GridFunction) -> Result<GridFunction> {
    need_two(y)?;
    let ts = y.scale();
    let d = y.domain();
    let values = (d.start..d.end - 1)
        .map(|i| (y.at(i + 1) - y.at(i)) / ts.mu(i))
        .collect();
    GridFunction::on_domain(ts.clone(), d.start, values)
}

/// `y^∇(t) = (y(t) − y(ρ(t)))/ν(t)` on the domain minus its first point.
pub fn nabla_derivative(y: &GridFunction) -> Result<GridFunction> {
    need_two(y)?;
    let ts = y.scale();
    let d = y.domain();
    let values = (d.start + 1..d.end)
        .map(|i| (y.at(i) - y.at(i - 1)) / ts.nu(i))
        .collect();
    GridFunction::on_domain(ts.clone(), d.start + 1, values)
}

/// `y^σ`, wherever `σ(t)` lies in the domain (the max point maps to itself).
pub fn sigma_shift(y: &GridFunction) -> Result<GridFunction> {
    let ts = y.scale();
    let d = y.domain();
    let end = if d.end == ts.len() { d.end } else { d.end.saturating_sub(1) };
    let values = (d.start..end).map(|i| y.at((i + 1).min(ts.len() - 1))).collect();
    GridFunction::on_domain(ts.clone(), d.start, values)
}

/// `y^ρ`, wherever `ρ(t)` lies in the domain (the min point maps to itself).
pub fn rho_shift(y: &GridFunction) -> Result<GridFunction> {
    let ts = y.scale();
    let d = y.domain();
    let start = if d.start == 0 { 0 } else { d.start + 1 };
    let values = (start..d.end).map(|i| y.at(i.saturating_sub(1))).collect();
    GridFunction::on_domain(ts.clone(), start, values)
}

/// Orientation-aware index range for `[a, b)` or `(a, b]`.
fn oriented(ts: &TimeScale, a: f64, b: f64) -> Result<(usize, usize, f64)> {
    let (ia, ib) = (ts.index_of(a)?, ts.index_of(b)?);
    Ok(if ia <= ib { (ia, ib, 1.0) } else { (ib, ia, -1.0) })
}

/// `∫_a^b f(t) Δt = Σ_{t ∈ [a,b)} μ(t) f(t)`; negated when `a > b`.
pub fn delta_integral(f: &GridFunction, a: f64, b: f64) -> Result<f64> {
    let (lo, hi, sign) = oriented(f.scale(), a, b)?;
    Ok(sign * delta_sum(f, lo..hi)?)
}

/// `∫_a^b f(t) ∇t = Σ_{t ∈ (a,b]} ν(t) f(t)`; negated when `a > b`.
pub fn nabla_integral(f: &GridFunction, a: f64, b: f64) -> Result<f64> {
    let (lo, hi, sign) = oriented(f.scale(), a, b)?;
    Ok(sign * nabla_sum(f, lo + 1..hi + 1)?)
}

fn covered(f: &GridFunction, idx: &Range<usize>) -> Result<()> {
    let d = f.domain();
    if !idx.is_empty() && (idx.start < d.start || idx.end > d.end) {
        let ts = f.scale();
        return Err(Error::Domain(format!(
            "integrand is needed on t = {}..{} but is only defined on t = {}..{}",
            ts.t(idx.start),
            ts.t(idx.end - 1),
            ts.t(d.start),
            ts.t(d.end - 1)
        )));
    }
    Ok(())
}

/// `Σ_{i ∈ idx} μ_i f_i`.
pub fn delta_sum(f: &GridFunction, idx: Range<usize>) -> Result<f64> {
    covered(f, &idx)?;
    let ts = f.scale();
    Ok(idx.map(|i| ts.mu(i) * f.at(i)).sum())
}

/// `Σ_{i ∈ idx} ν_i f_i`.
pub fn nabla_sum(f: &GridFunction, idx: Range<usize>) -> Result<f64> {
    covered(f, &idx)?;
    let ts = f.scale();
    Ok(idx.map(|i| ts.nu(i) * f.at(i)).sum())
}

/// `G(t) = ∫_{from}^t f Δτ` for every `t ≥ from` reachable from the domain of `f`.
pub fn delta_running_integral(f: &GridFunction, from: f64) -> Result<GridFunction> {
    let ts = f.scale();
    let base = ts.index_of(from)?;
    let d = f.domain();
    if base < d.start || base > d.end {
        return Err(Error::Domain(format!("integrand is not defined from t = {from}")));
    }
    let end = (d.end + 1).min(ts.len());
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(end - base);
    for j in base..end {
        values.push(acc);
        if j < d.end {
            acc += ts.mu(j) * f.at(j);
        }
    }
    GridFunction::on_domain(ts.clone(), base, values)
}

/// `G(t) = ∫_{from}^t f ∇τ` for every `t ≥ from` reachable from the domain of `f`.
pub fn nabla_running_integral(f: &GridFunction, from: f64) -> Result<GridFunction> {
    let ts = f.scale();
    let base = ts.index_of(from)?;
    let d = f.domain();
    if base + 1 < d.start || base >= d.end {
        return Err(Error::Domain(format!("integrand is not defined after t = {from}")));
    }
    let mut acc = 0.0;
    let mut values = vec![0.0];
    for j in base + 1..d.end {
        acc += ts.nu(j) * f.at(j);
        values.push(acc);
    }
    GridFunction::on_domain(ts.clone(), base, values)
}

/// `e_r(t, s0) = Π_{τ ∈ [s0, t)} (1 + μ(τ) r(τ))` for every `t ≥ s0`.
///
/// No regressivity check: factors may vanish or be negative.
pub fn ts_exponential(r: &GridFunction, s0: f64) -> Result<GridFunction> {
    let ts = r.scale();
    if !ts.is_exact() {
        return Err(Error::InvalidScale(format!(
            "the exponential is only available on exact isolated scales, not {}",
            ts.kind()
        )));
    }
    let base = ts.index_of(s0)?;
    let last = ts.len() - 1;
    covered(r, &(base..last))?;
    let mut acc = 1.0;
    let mut values = Vec::with_capacity(ts.len() - base);
    values.push(acc);
    for i in base..last {
        acc *= 1.0 + ts.mu(i) * r.at(i);
        values.push(acc);
    }
    GridFunction::on_domain(ts.clone(), base, values)
}
