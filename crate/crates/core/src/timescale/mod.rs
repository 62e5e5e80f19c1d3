//! Finite time scales and their jump structure.
//!
//! A [`TimeScale`] is always a finite, strictly increasing point set. Dense
//! pieces (as in `Pab`) exist only as sampled surrogates: the scale then
//! remembers which neighbouring gaps are sampling artefacts so that the
//! jump operators of the modelled continuum can still be queried.

mod spec;

use std::fmt;
use std::ops::Range;

pub use spec::ScaleSpec;

use crate::error::{Error, Result};

/// Relative tolerance for point membership and duplicate detection.
pub const POINT_TOL: f64 = 1e-12;

fn point_tol(t: f64) -> f64 {
    POINT_TOL * t.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleKind {
    ExactIsolated,
    /// Surrogate for a scale with dense pieces, sampled at `step`.
    SampledDense { step: f64 },
}

impl fmt::Display for ScaleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleKind::ExactIsolated => write!(f, "EXACT_ISOLATED"),
            ScaleKind::SampledDense { step } => write!(f, "SAMPLED_DENSE(step {step})"),
        }
    }
}

/// One-sided classification of a point of the (finite) scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PointClass {
    pub right_scattered: bool,
    pub left_scattered: bool,
    pub isolated: bool,
    pub right_dense: bool,
    pub left_dense: bool,
    pub dense: bool,
}

impl PointClass {
    fn from_flags(right_scattered: bool, left_scattered: bool, right_dense: bool, left_dense: bool) -> Self {
        PointClass {
            right_scattered,
            left_scattered,
            isolated: right_scattered && left_scattered,
            right_dense,
            left_dense,
            dense: right_dense && left_dense,
        }
    }

    /// Names of the flags that are set, in declaration order.
    pub fn labels(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let flags = [
            (self.right_scattered, "right-scattered"),
            (self.left_scattered, "left-scattered"),
            (self.isolated, "isolated"),
            (self.right_dense, "right-dense"),
            (self.left_dense, "left-dense"),
            (self.dense, "dense"),
        ];
        for (on, name) in flags {
            if on {
                out.push(name);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpData {
    pub t: f64,
    pub sigma: f64,
    pub rho: f64,
    pub mu: f64,
    pub nu: f64,
    pub class: PointClass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleProperties {
    pub is_isolated: bool,
    pub is_regular: bool,
    /// For sampled scales: regularity of the modelled continuum, judged from
    /// the modelled jump operators at the sample points. `None` for exact
    /// scales, where the two notions coincide.
    pub modeled_regular: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeScale {
    points: Vec<f64>,
    kind: ScaleKind,
    /// `gap_is_real[i]` describes the gap `(t_i, t_{i+1})`: `false` when the
    /// modelled set fills it (a sampling artefact).
    gap_is_real: Vec<bool>,
    provenance: String,
}

impl TimeScale {
    /// An exact isolated scale from an explicit point list.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        let provenance = ScaleSpec::Points(points.clone()).to_string();
        Self::exact(points, provenance)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::build(&ScaleSpec::parse(text)?)
    }

    pub fn hz(h: f64, a: f64, b: f64) -> Result<Self> {
        Self::build(&ScaleSpec::Hz { h, a, b })
    }

    pub fn qz(q: f64, k_min: i32, k_max: i32) -> Result<Self> {
        Self::build(&ScaleSpec::Qz { q, k_min, k_max })
    }

    pub fn build(spec: &ScaleSpec) -> Result<Self> {
        let provenance = spec.to_string();
        match *spec {
            ScaleSpec::Points(ref pts) => Self::exact(pts.clone(), provenance),
            ScaleSpec::Hz { h, a, b } => {
                if !(h > 0.0) || !h.is_finite() {
                    return Err(Error::InvalidScale(format!("hZ step must be positive, got {h}")));
                }
                if !(a < b) {
                    return Err(Error::InvalidScale(format!("hZ needs a < b, got a = {a}, b = {b}")));
                }
                let n = integral_count((b - a) / h)
                    .ok_or_else(|| Error::InvalidScale(format!("(b - a)/h = {} is not an integer", (b - a) / h)))?;
                let mut pts: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
                pts.push(b);
                Self::exact(pts, provenance)
            }
            ScaleSpec::Qz { q, k_min, k_max } => {
                if !(q > 1.0) || !q.is_finite() {
                    return Err(Error::InvalidScale(format!("qZ needs q > 1, got {q}")));
                }
                if k_min >= k_max {
                    return Err(Error::InvalidScale(format!(
                        "qZ needs k_min < k_max, got {k_min}..{k_max}"
                    )));
                }
                let pts = (k_min..=k_max).map(|k| q.powi(k)).collect();
                Self::exact(pts, provenance)
            }
            ScaleSpec::Pab { a, b, cycles, step } => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(Error::InvalidScale(format!("Pab needs a, b > 0, got a = {a}, b = {b}")));
                }
                if !(step > 0.0) || !step.is_finite() {
                    return Err(Error::InvalidScale(format!("sample step must be positive, got {step}")));
                }
                let per_block = integral_count(a / step).ok_or_else(|| {
                    Error::InvalidScale(format!("block length {a} is not a multiple of the step {step}"))
                })?;
                let mut pts = Vec::new();
                let mut gap_is_real = Vec::new();
                for k in 0..cycles {
                    let start = k as f64 * (a + b);
                    if k > 0 {
                        gap_is_real.push(true);
                    }
                    for j in 0..=per_block {
                        if j > 0 {
                            gap_is_real.push(false);
                        }
                        pts.push(if j == per_block { start + a } else { start + j as f64 * step });
                    }
                }
                check_points(&pts)?;
                Ok(TimeScale {
                    points: pts,
                    kind: ScaleKind::SampledDense { step },
                    gap_is_real,
                    provenance,
                })
            }
        }
    }

    fn exact(points: Vec<f64>, provenance: String) -> Result<Self> {
        check_points(&points)?;
        let gaps = points.len() - 1;
        Ok(TimeScale {
            points,
            kind: ScaleKind::ExactIsolated,
            gap_is_real: vec![true; gaps],
            provenance,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false: a valid scale has at least two points.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kind(&self) -> ScaleKind {
        self.kind
    }

    pub fn is_exact(&self) -> bool {
        self.kind == ScaleKind::ExactIsolated
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        self.points[self.len() - 1]
    }

    pub fn t(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Index of `t`, matched within `1e-12·max(1,|t|)`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let pos = self.points.partition_point(|&p| p < t);
        for i in [pos.wrapping_sub(1), pos] {
            if let Some(&p) = self.points.get(i) {
                if (p - t).abs() <= point_tol(t) {
                    return Ok(i);
                }
            }
        }
        Err(Error::OffScale(t))
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.points[(i + 1).min(self.len() - 1)]
    }

    pub fn rho(&self, i: usize) -> f64 {
        self.points[i.saturating_sub(1)]
    }

    /// Forward graininess; zero at the max point.
    pub fn mu(&self, i: usize) -> f64 {
        self.sigma(i) - self.points[i]
    }

    /// Backward graininess; zero at the min point.
    pub fn nu(&self, i: usize) -> f64 {
        self.points[i] - self.rho(i)
    }

    /// `T^κ`: every point but the max.
    pub fn kappa_upper(&self) -> Range<usize> {
        0..self.len() - 1
    }

    /// `T_κ`: every point but the min.
    pub fn kappa_lower(&self) -> Range<usize> {
        1..self.len()
    }

    /// `T^κ_κ`.
    pub fn kappa_both(&self) -> Range<usize> {
        1..self.len() - 1
    }

    /// `T^{κ²}`: the last two points dropped.
    pub fn kappa_upper2(&self) -> Range<usize> {
        0..self.len().saturating_sub(2)
    }

    pub fn jump_data(&self, t: f64) -> Result<JumpData> {
        Ok(self.jump_data_at(self.index_of(t)?))
    }

    pub fn jump_data_at(&self, i: usize) -> JumpData {
        let last = self.len() - 1;
        let class = PointClass::from_flags(i < last, i > 0, false, false);
        JumpData {
            t: self.points[i],
            sigma: self.sigma(i),
            rho: self.rho(i),
            mu: self.mu(i),
            nu: self.nu(i),
            class,
        }
    }

    /// Forward jump of the modelled set. Equals `sigma` on exact scales; on
    /// sampled scales a sample point inside a dense block is its own jump.
    pub fn modeled_sigma(&self, i: usize) -> f64 {
        self.points[self.modeled_sigma_index(i)]
    }

    pub fn modeled_rho(&self, i: usize) -> f64 {
        self.points[self.modeled_rho_index(i)]
    }

    /// Index of [`modeled_sigma`](Self::modeled_sigma).
    pub fn modeled_sigma_index(&self, i: usize) -> usize {
        if i + 1 < self.len() && self.gap_is_real[i] {
            i + 1
        } else {
            i
        }
    }

    pub fn modeled_rho_index(&self, i: usize) -> usize {
        if i > 0 && self.gap_is_real[i - 1] {
            i - 1
        } else {
            i
        }
    }

    /// Classification in the modelled set rather than the sample.
    pub fn modeled_class(&self, i: usize) -> PointClass {
        let last = self.len() - 1;
        let right_gap = (i < last).then(|| self.gap_is_real[i]);
        let left_gap = (i > 0).then(|| self.gap_is_real[i - 1]);
        PointClass::from_flags(
            right_gap == Some(true),
            left_gap == Some(true),
            right_gap == Some(false),
            left_gap == Some(false),
        )
    }

    /// Whether the gap `(t_i, t_{i+1})` is a genuine gap of the modelled set.
    pub fn gap_is_real(&self, i: usize) -> bool {
        self.gap_is_real[i]
    }

    pub fn properties(&self) -> ScaleProperties {
        // σ(ρ(t)) = t is only meaningful away from the min point (where the
        // endpoint convention forces ρ(t) = t) and symmetrically for ρ∘σ.
        let n = self.len();
        let is_regular = (1..n).all(|i| self.index_of(self.rho(i)).map(|j| self.sigma(j)) == Ok(self.points[i]))
            && (0..n - 1).all(|i| self.index_of(self.sigma(i)).map(|j| self.rho(j)) == Ok(self.points[i]));
        let is_isolated = (1..n - 1).all(|i| self.jump_data_at(i).class.isolated);
        let modeled_regular = match self.kind {
            ScaleKind::ExactIsolated => None,
            ScaleKind::SampledDense { .. } => {
                let ok_lower = (1..n).all(|i| {
                    let j = self.index_of(self.modeled_rho(i)).expect("jump lands on the scale");
                    self.modeled_sigma(j) == self.points[i]
                });
                let ok_upper = (0..n - 1).all(|i| {
                    let j = self.index_of(self.modeled_sigma(i)).expect("jump lands on the scale");
                    self.modeled_rho(j) == self.points[i]
                });
                Some(ok_lower && ok_upper)
            }
        };
        ScaleProperties {
            is_isolated,
            is_regular,
            modeled_regular,
        }
    }
}

impl fmt::Display for TimeScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}; {} points]", self.provenance, self.kind, self.len())
    }
}

fn integral_count(ratio: f64) -> Option<usize> {
    let n = ratio.round();
    if n >= 1.0 && (ratio - n).abs() <= 1e-9 * n.max(1.0) && n < 1e8 {
        Some(n as usize)
    } else {
        None
    }
}

fn check_points(points: &[f64]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::InvalidScale(format!(
            "a time scale needs at least two points, got {}",
            points.len()
        )));
    }
    if let Some(bad) = points.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidScale(format!("non-finite point {bad}")));
    }
    for (i, w) in points.windows(2).enumerate() {
        if w[1] - w[0] <= point_tol(w[1]) {
            return Err(Error::InvalidScale(format!(
                "points must be strictly increasing: t[{}] = {} is followed by t[{}] = {}",
                i,
                w[0],
                i + 1,
                w[1]
            )));
        }
    }
    Ok(())
}
