use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::timescale::TimeScale;

/// Real values attached to a contiguous run of scale points.
///
/// Functions on the whole scale start at index 0 and cover every point;
/// derivatives and shifts carry trimmed domains (`T^κ`, `T_κ`, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    scale: Arc<TimeScale>,
    start: usize,
    values: Vec<f64>,
}

impl GridFunction {
    /// A function on every point of `scale`.
    pub fn new(scale: Arc<TimeScale>, values: Vec<f64>) -> Result<Self> {
        Self::on_domain(scale, 0, values)
    }

    /// A function on the points `start..start + values.len()`.
    pub fn on_domain(scale: Arc<TimeScale>, start: usize, values: Vec<f64>) -> Result<Self> {
        if start + values.len() > scale.len() {
            return Err(Error::Domain(format!(
                "{} values starting at index {start} overrun a scale of {} points",
                values.len(),
                scale.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value {} at t = {}",
                values[i],
                scale.t(start + i)
            )));
        }
        Ok(GridFunction { scale, start, values })
    }

    pub fn from_fn(scale: Arc<TimeScale>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = scale.points().iter().map(|&t| f(t)).collect();
        Self::new(scale, values)
    }

    pub fn constant(scale: Arc<TimeScale>, c: f64) -> Result<Self> {
        let n = scale.len();
        Self::new(scale, vec![c; n])
    }

    pub fn scale(&self) -> &Arc<TimeScale> {
        &self.scale
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Scale indices covered.
    pub fn domain(&self) -> Range<usize> {
        self.start..self.start + self.values.len()
    }

    pub fn is_full(&self) -> bool {
        self.start == 0 && self.values.len() == self.scale.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The points of the domain.
    pub fn times(&self) -> &[f64] {
        &self.scale.points()[self.domain()]
    }

    /// Value at scale index `i`; panics outside the domain.
    pub fn at(&self, i: usize) -> f64 {
        assert!(
            self.domain().contains(&i),
            "index {i} outside domain {:?}",
            self.domain()
        );
        self.values[i - self.start]
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.domain().contains(&i).then(|| self.values[i - self.start])
    }

    /// Value at the point `t`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let i = self.scale.index_of(t)?;
        self.get(i).ok_or_else(|| {
            Error::Domain(format!("t = {t} is outside the domain of this grid function"))
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(move |(k, &v)| (self.start + k, v))
    }

    /// Restriction to a sub-range of the domain.
    pub fn restrict(&self, range: Range<usize>) -> Result<Self> {
        let d = self.domain();
        if range.start < d.start || range.end > d.end || range.start > range.end {
            return Err(Error::Domain(format!(
                "cannot restrict domain {d:?} to {range:?}"
            )));
        }
        Ok(GridFunction {
            scale: self.scale.clone(),
            start: range.start,
            values: self.values[range.start - d.start..range.end - d.start].to_vec(),
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::on_domain(self.scale.clone(), self.start, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination on the common part of the two domains.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !Arc::ptr_eq(&self.scale, &other.scale) && self.scale.points() != other.scale.points() {
            return Err(Error::Domain("grid functions live on different scales".into()));
        }
        let (a, b) = (self.domain(), other.domain());
        let lo = a.start.max(b.start);
        let hi = a.end.min(b.end).max(lo);
        let values = (lo..hi).map(|i| f(self.at(i), other.at(i))).collect();
        Self::on_domain(self.scale.clone(), lo, values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            0.0
        } else {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scale() -> Arc<TimeScale> {
        Arc::new(TimeScale::hz(1.0, 0.0, 4.0).unwrap())
    }

    #[test]
    fn domain_bookkeeping() {
        let g = GridFunction::on_domain(scale(), 1, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(g.domain(), 1..4);
        assert_eq!(g.times(), &[1.0, 2.0, 3.0]);
        assert_eq!(g.at(2), 2.0);
        assert_eq!(g.get(0), None);
        assert_eq!(g.value_at(3.0).unwrap(), 3.0);
        assert!(g.value_at(4.0).is_err());
        assert!(!g.is_full());
    }

    #[test]
    fn rejects_overruns_and_non_finite_values() {
        assert!(GridFunction::on_domain(scale(), 3, vec![0.0; 3]).is_err());
        assert!(GridFunction::new(scale(), vec![0.0, f64::NAN, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn zip_uses_the_common_domain() {
        let s = scale();
        let a = GridFunction::on_domain(s.clone(), 0, vec![1.0; 4]).unwrap();
        let b = GridFunction::on_domain(s, 1, vec![2.0; 4]).unwrap();
        let c = a.zip_with(&b, |x, y| x + y).unwrap();
        assert_eq!(c.domain(), 1..4);
        assert_eq!(c.values(), &[3.0; 3]);
    }

    #[test]
    fn restrict_checks_bounds() {
        let g = GridFunction::from_fn(scale(), |t| t * t).unwrap();
        assert_eq!(g.restrict(1..3).unwrap().values(), &[1.0, 4.0]);
        assert!(g.restrict(2..7).is_err());
    }
}
