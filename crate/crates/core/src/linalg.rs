//! Linear solves for the Newton systems.
//!
//! Hessians of discrete functionals are tridiagonal; composing them through an
//! outer function adds a low-rank term. [`Structured`] solves
//! `(T + U C Uᵀ) x = b` in `O(n r²)` through the Woodbury identity and falls
//! back to dense LU when the tridiagonal part is singular or the result fails
//! its residual check.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Below this size everything is solved densely.
const DENSE_LIMIT: usize = 64;

/// Symmetric tridiagonal matrix; `off[i]` is entry `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn zeros(n: usize) -> Self {
        SymTridiag {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i + 1 == j {
            self.off[i]
        } else if j + 1 == i {
            self.off[j]
        } else {
            0.0
        }
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, other: &SymTridiag, alpha: f64) {
        for (a, b) in self.diag.iter_mut().zip(&other.diag) {
            *a += alpha * b;
        }
        for (a, b) in self.off.iter_mut().zip(&other.off) {
            *a += alpha * b;
        }
    }

    /// The principal submatrix on `idx`, which must be contiguous.
    pub fn principal(&self, idx: &[usize]) -> SymTridiag {
        let mut out = SymTridiag::zeros(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            out.diag[k] = self.diag[i];
            if k + 1 < idx.len() {
                debug_assert_eq!(idx[k + 1], i + 1);
                out.off[k] = self.off[i];
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.diag.iter().chain(&self.off).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// Gaussian elimination with partial pivoting (the `gtsv` scheme).
    /// `None` on an exactly zero pivot.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        if n == 0 {
            return Some(Vec::new());
        }
        let mut d = self.diag.clone();
        let mut du = self.off.clone();
        let dl = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut x = b.to_vec();
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return None;
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                x[i + 1] -= fact * x[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let temp = d[i + 1];
                d[i + 1] = du[i] - fact * temp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du2[i];
                }
                du[i] = temp;
                let tb = x[i];
                x[i] = x[i + 1];
                x[i + 1] = tb - fact * x[i + 1];
            }
        }
        if d[n - 1] == 0.0 {
            return None;
        }
        x[n - 1] /= d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

/// `T + U C Uᵀ` with `T` symmetric tridiagonal, `U` given by columns.
#[derive(Debug, Clone)]
pub struct Structured {
    pub t: SymTridiag,
    pub u: Vec<Vec<f64>>,
    pub c: DMatrix<f64>,
}

impl Structured {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = self.t.to_dense();
        if !self.u.is_empty() {
            let n = self.len();
            let u = DMatrix::from_fn(n, self.u.len(), |i, k| self.u[k][i]);
            m += &u * &self.c * u.transpose();
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.t.mul_vec(x);
        let r = self.u.len();
        let ux: Vec<f64> = self.u.iter().map(|col| dot(col, x)).collect();
        for k in 0..r {
            let coef: f64 = (0..r).map(|l| self.c[(k, l)] * ux[l]).sum();
            for (o, uk) in out.iter_mut().zip(&self.u[k]) {
                *o += coef * uk;
            }
        }
        out
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.len() > DENSE_LIMIT {
            if let Some(x) = self.woodbury(b) {
                if residual_ok(&self.mul_vec(&x), b, &x, self.norm_estimate()) {
                    return Ok(x);
                }
            }
        }
        solve_dense(self.to_dense(), b)
    }

    fn norm_estimate(&self) -> f64 {
        let mut s = self.t.max_abs() * 3.0;
        for k in 0..self.u.len() {
            let uk = self.u[k].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for l in 0..self.u.len() {
                let ul = self.u[l].iter().map(|v| v.abs()).sum::<f64>();
                s += uk * self.c[(k, l)].abs() * ul;
            }
        }
        s
    }

    fn woodbury(&self, b: &[f64]) -> Option<Vec<f64>> {
        let y = self.t.solve(b)?;
        let r = self.u.len();
        if r == 0 {
            return Some(y);
        }
        let z: Vec<Vec<f64>> = self.u.iter().map(|col| self.t.solve(col)).collect::<Option<_>>()?;
        let w = DMatrix::from_fn(r, r, |k, l| dot(&self.u[k], &z[l]));
        let system = DMatrix::identity(r, r) + &w * &self.c;
        let rhs = DVector::from_iterator(r, self.u.iter().map(|col| dot(col, &y)));
        let s = system.lu().solve(&rhs)?;
        let cs = &self.c * s;
        let mut x = y;
        for l in 0..r {
            for (xi, zi) in x.iter_mut().zip(&z[l]) {
                *xi -= zi * cs[l];
            }
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn residual_ok(mx: &[f64], b: &[f64], x: &[f64], norm: f64) -> bool {
    let res = mx.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    res <= 1e-9 * (norm * inf_norm(x) + inf_norm(b)) + f64::MIN_POSITIVE
}

/// Numerical rank: singular values above `1e-10 · σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-10 * smax).count()
}

/// Dense LU solve; reports [`Error::Singular`] with the numerical rank when
/// the factorisation fails or its solution does not reproduce `b`.
pub fn solve_dense(m: DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = m.nrows();
    let norm = m.iter().fold(0.0f64, |a, v| a.max(v.abs())) * n as f64;
    let rhs = DVector::from_column_slice(b);
    if let Some(x) = m.clone().lu().solve(&rhs) {
        let x: Vec<f64> = x.iter().copied().collect();
        let mx = &m * DVector::from_column_slice(&x);
        if x.iter().all(|v| v.is_finite()) && residual_ok(mx.as_slice(), b, &x, norm) {
            return Ok(x);
        }
    }
    Err(Error::Singular {
        rank: numerical_rank(&m),
        dim: n,
    })
}

/// Solves `[A g; gᵀ 0] [x; l] = [r1; r2]`.
pub fn solve_bordered(a: &Structured, g: &[f64], r1: &[f64], r2: f64) -> Result<(Vec<f64>, f64)> {
    let n = a.len();
    if n > DENSE_LIMIT {
        if let (Ok(p), Ok(q)) = (a.solve(r1), a.solve(g)) {
            let gq = dot(g, &q);
            if gq.abs() > 1e-12 * inf_norm(g) * inf_norm(&q) && gq != 0.0 {
                let l = (dot(g, &p) - r2) / gq;
                let x: Vec<f64> = p.iter().zip(&q).map(|(pi, qi)| pi - qi * l).collect();
                let mut ax = a.mul_vec(&x);
                for (v, gi) in ax.iter_mut().zip(g) {
                    *v += gi * l;
                }
                if residual_ok(&ax, r1, &x, a.norm_estimate() + inf_norm(g))
                    && (dot(g, &x) - r2).abs() <= 1e-9 * (inf_norm(g) * inf_norm(&x) + r2.abs()) + f64::MIN_POSITIVE
                {
                    return Ok((x, l));
                }
            }
        }
    }
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&a.to_dense());
    for i in 0..n {
        m[(i, n)] = g[i];
        m[(n, i)] = g[i];
    }
    let mut rhs = r1.to_vec();
    rhs.push(r2);
    let mut sol = solve_dense(m, &rhs)?;
    let l = sol.pop().expect("bordered solution has n+1 entries");
    Ok((sol, l))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_tridiag(rng: &mut ChaCha8Rng, n: usize) -> SymTridiag {
        let mut t = SymTridiag::zeros(n);
        for d in &mut t.diag {
            *d = rng.gen_range(-2.0..2.0);
        }
        for o in &mut t.off {
            *o = rng.gen_range(-2.0..2.0);
        }
        t
    }

    #[test]
    fn tridiagonal_solve_with_pivoting() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 10, 200] {
            let mut t = random_tridiag(&mut rng, n);
            // A zero leading pivot forces a row interchange.
            t.diag[0] = 0.0;
            if n == 1 {
                t.diag[0] = 3.0;
            }
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = t.mul_vec(&x);
            let got = t.solve(&b).unwrap();
            for (g, w) in got.iter().zip(&x) {
                assert!((g - w).abs() < 1e-8, "{n}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn singular_tridiagonal_is_detected() {
        let t = SymTridiag::zeros(4);
        assert!(t.solve(&[1.0; 4]).is_none());
    }

    #[test]
    fn woodbury_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 150;
        let mut t = random_tridiag(&mut rng, n);
        for d in &mut t.diag {
            *d += 6.0;
        }
        let u: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let c = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.5 } else { 0.1 });
        let m = Structured { t, u, c };
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = m.mul_vec(&x);
        let dense = m.to_dense() * DVector::from_column_slice(&x);
        for (p, q) in b.iter().zip(dense.iter()) {
            assert!((p - q).abs() < 1e-12);
        }
        let got = m.woodbury(&b).unwrap();
        for (g, w) in got.iter().zip(&x) {
            assert!((g - w).abs() < 1e-9);
        }
    }

    #[test]
    fn singular_tridiagonal_part_falls_back_to_dense() {
        // T has a zero first row; the rank-one term makes the sum invertible.
        let n = 80;
        let mut t = SymTridiag::zeros(n);
        for i in 1..n {
            t.diag[i] = 2.0;
        }
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        let m = Structured {
            t,
            u: vec![e0],
            c: DMatrix::from_element(1, 1, 3.0),
        };
        let b = vec![1.0; n];
        let x = m.solve(&b).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-14);
        assert!((x[5] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_reports_rank() {
        let m = Structured {
            t: SymTridiag::zeros(3),
            u: vec![vec![1.0, 1.0, 1.0]],
            c: DMatrix::from_element(1, 1, 1.0),
        };
        match m.solve(&[1.0, 0.0, 0.0]) {
            Err(Error::Singular { rank, dim }) => assert_eq!((rank, dim), (1, 3)),
            other => panic!("expected a singular report, got {other:?}"),
        }
    }

    #[test]
    fn bordered_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [5, 120] {
            let mut t = random_tridiag(&mut rng, n);
            for d in &mut t.diag {
                *d += 6.0;
            }
            let a = Structured {
                t,
                u: vec![(0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()],
                c: DMatrix::from_element(1, 1, -0.3),
            };
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let l = 0.7;
            let mut r1 = a.mul_vec(&x);
            for (r, gi) in r1.iter_mut().zip(&g) {
                *r += gi * l;
            }
            let r2 = dot(&g, &x);
            let (gx, gl) = solve_bordered(&a, &g, &r1, r2).unwrap();
            assert!((gl - l).abs() < 1e-9);
            for (p, q) in gx.iter().zip(&x) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }
}
