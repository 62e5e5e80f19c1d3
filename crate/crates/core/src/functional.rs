//! The discrete functional `F[y] = Σ w_i f(t_i, y-slot, v-slot)` as a
//! function of the full value vector, with exact gradient and tridiagonal
//! Hessian.

use crate::error::Result;
use crate::integrand::{term_args, weight, Flavor, Integrand, LocalPartials};
use crate::linalg::SymTridiag;
use crate::timescale::TimeScale;

pub struct Functional<'a> {
    pub scale: &'a TimeScale,
    pub integrand: &'a dyn Integrand,
    pub flavor: Flavor,
}

/// Partials of every term, indexed like [`term_args`].
pub struct Sampled {
    pub idx: Vec<usize>,
    pub partials: Vec<LocalPartials>,
}

impl<'a> Functional<'a> {
    pub fn new(scale: &'a TimeScale, integrand: &'a dyn Integrand, flavor: Flavor) -> Self {
        Functional { scale, integrand, flavor }
    }

    pub fn value(&self, y: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (i, t, ys, v) in term_args(self.scale, self.flavor, y) {
            acc += weight(self.scale, self.flavor, i) * self.integrand.value(i, t, ys, v)?;
        }
        Ok(acc)
    }

    pub fn sample(&self, y: &[f64]) -> Result<Sampled> {
        let args = term_args(self.scale, self.flavor, y);
        let mut idx = Vec::with_capacity(args.len());
        let mut partials = Vec::with_capacity(args.len());
        for (i, t, ys, v) in args {
            idx.push(i);
            partials.push(self.integrand.partials(i, t, ys, v)?);
        }
        Ok(Sampled { idx, partials })
    }

    /// Value and gradient from already sampled partials.
    pub fn value_and_gradient(&self, s: &Sampled) -> (f64, Vec<f64>) {
        let n = self.scale.len();
        let mut g = vec![0.0; n];
        let mut value = 0.0;
        for (&i, p) in s.idx.iter().zip(&s.partials) {
            let w = weight(self.scale, self.flavor, i);
            value += w * p.value;
            match self.flavor {
                Flavor::Delta => {
                    g[i] -= p.v;
                    g[i + 1] += w * p.y + p.v;
                }
                Flavor::Nabla => {
                    g[i - 1] += w * p.y - p.v;
                    g[i] += p.v;
                }
            }
        }
        (value, g)
    }

    pub fn hessian(&self, s: &Sampled) -> SymTridiag {
        let n = self.scale.len();
        let mut h = SymTridiag::zeros(n);
        for (&i, p) in s.idx.iter().zip(&s.partials) {
            let w = weight(self.scale, self.flavor, i);
            match self.flavor {
                Flavor::Delta => {
                    h.diag[i] += p.vv / w;
                    h.off[i] -= p.yv + p.vv / w;
                    h.diag[i + 1] += w * p.yy + 2.0 * p.yv + p.vv / w;
                }
                Flavor::Nabla => {
                    h.diag[i - 1] += w * p.yy - 2.0 * p.yv + p.vv / w;
                    h.off[i - 1] += p.yv - p.vv / w;
                    h.diag[i] += p.vv / w;
                }
            }
        }
        h
    }
}
