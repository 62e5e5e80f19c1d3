use std::ops::{Add, Div, Mul, Neg, Sub};

use super::eval::Scalar;

/// First-order dual number `re + eps·ε`, `ε² = 0`.
///
/// Nesting (`Dual<Dual<f64>>`) yields second derivatives: seeding variable
/// `i` in the outer and `j` in the inner part gives `∂²f/∂x_i∂x_j` in
/// `eps.eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Dual { re, eps }
    }

    fn chain(self, f: T, df: T) -> Self {
        Dual {
            re: f,
            eps: self.eps * df,
        }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Dual::new(q, (self.eps - q * o.eps) / o.re)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn constant(c: f64) -> Self {
        Dual::new(T::constant(c), T::constant(0.0))
    }

    fn real(&self) -> f64 {
        self.re.real()
    }

    fn all_finite(&self) -> bool {
        self.re.all_finite() && self.eps.all_finite()
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }

    fn ln(self) -> Self {
        self.chain(self.re.ln(), T::constant(1.0) / self.re)
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, T::constant(0.5) / s)
    }

    fn abs(self) -> Self {
        let sign = if self.re.real() < 0.0 {
            -1.0
        } else if self.re.real() > 0.0 {
            1.0
        } else {
            0.0
        };
        self.chain(self.re.abs(), T::constant(sign))
    }

    fn powf(self, c: f64) -> Self {
        self.chain(self.re.powf(c), self.re.powf(c - 1.0) * T::constant(c))
    }
}
