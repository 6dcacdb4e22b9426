//! Second-order forward-mode automatic differentiation.
//!
//! [`HyperDual`] carries a value together with its gradient and Hessian with
//! respect to the four chart coordinates. It is the hyper-dual construction
//! with every pairwise product `ε_k ε_l` of the four infinitesimal directions
//! retained, so a single evaluation of an expression yields all first and
//! second partial derivatives at once.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number type the expression evaluator is generic over.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;

    fn value(&self) -> f64;

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value()`.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self;

    fn is_finite(&self) -> bool;

    fn powi(self, n: i32) -> Self {
        let v = self.value();
        let nf = f64::from(n);
        self.chain(
            v.powi(n),
            nf * v.powi(n - 1),
            nf * (nf - 1.0) * v.powi(n - 2),
        )
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn value(&self) -> f64 {
        *self
    }

    #[inline]
    fn chain(self, f: f64, _df: f64, _d2f: f64) -> Self {
        f
    }

    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Value, gradient and Hessian of a function of four variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperDual {
    pub re: f64,
    pub grad: [f64; 4],
    pub hess: [[f64; 4]; 4],
}

impl HyperDual {
    pub const fn constant(re: f64) -> Self {
        Self {
            re,
            grad: [0.0; 4],
            hess: [[0.0; 4]; 4],
        }
    }

    /// The coordinate function `x_k` evaluated at `re`.
    pub fn variable(re: f64, k: usize) -> Self {
        let mut v = Self::constant(re);
        v.grad[k] = 1.0;
        v
    }

    fn recip(self) -> Self {
        let v = self.re;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }
}

impl Add for HyperDual {
    type Output = Self;

    #[inline]
    fn add(self, o: Self) -> Self {
        let mut r = self;
        r.re += o.re;
        for k in 0..4 {
            r.grad[k] += o.grad[k];
            for l in 0..4 {
                r.hess[k][l] += o.hess[k][l];
            }
        }
        r
    }
}

impl Sub for HyperDual {
    type Output = Self;

    #[inline]
    fn sub(self, o: Self) -> Self {
        let mut r = self;
        r.re -= o.re;
        for k in 0..4 {
            r.grad[k] -= o.grad[k];
            for l in 0..4 {
                r.hess[k][l] -= o.hess[k][l];
            }
        }
        r
    }
}

impl Neg for HyperDual {
    type Output = Self;

    #[inline]
    fn neg(self) -> Self {
        let mut r = self;
        r.re = -r.re;
        for k in 0..4 {
            r.grad[k] = -r.grad[k];
            for l in 0..4 {
                r.hess[k][l] = -r.hess[k][l];
            }
        }
        r
    }
}

impl Mul for HyperDual {
    type Output = Self;

    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut r = Self::constant(self.re * o.re);
        for k in 0..4 {
            r.grad[k] = self.re * o.grad[k] + o.re * self.grad[k];
        }
        for k in 0..4 {
            for l in k..4 {
                let h = self.re * o.hess[k][l]
                    + o.re * self.hess[k][l]
                    + self.grad[k] * o.grad[l]
                    + self.grad[l] * o.grad[k];
                r.hess[k][l] = h;
                r.hess[l][k] = h;
            }
        }
        r
    }
}

impl Div for HyperDual {
    type Output = Self;

    #[inline]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Scalar for HyperDual {
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }

    fn value(&self) -> f64 {
        self.re
    }

    #[inline]
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut r = Self::constant(f);
        for k in 0..4 {
            r.grad[k] = df * self.grad[k];
        }
        for k in 0..4 {
            for l in k..4 {
                let h = df * self.hess[k][l] + d2f * self.grad[k] * self.grad[l];
                r.hess[k][l] = h;
                r.hess[l][k] = h;
            }
        }
        r
    }

    fn is_finite(&self) -> bool {
        self.re.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().flatten().all(|h| h.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(x: [f64; 4]) -> [HyperDual; 4] {
        [0, 1, 2, 3].map(|k| HyperDual::variable(x[k], k))
    }

    #[test]
    fn product_rule_matches_hand_derivatives() {
        // f = x0^2 * x1 + x2 / x3
        let [a, b, c, d] = vars([1.5, -0.5, 2.0, 4.0]);
        let f = a * a * b + c / d;
        assert!((f.re - (2.25 * -0.5 + 0.5)).abs() < 1e-15);
        assert!((f.grad[0] - 2.0 * 1.5 * -0.5).abs() < 1e-15);
        assert!((f.grad[1] - 2.25).abs() < 1e-15);
        assert!((f.grad[2] - 0.25).abs() < 1e-15);
        assert!((f.grad[3] + 2.0 / 16.0).abs() < 1e-15);
        assert!((f.hess[0][0] - 2.0 * -0.5).abs() < 1e-15);
        assert!((f.hess[0][1] - 3.0).abs() < 1e-15);
        assert!((f.hess[2][3] + 1.0 / 16.0).abs() < 1e-15);
        assert!((f.hess[3][3] - 2.0 * 2.0 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn chain_rule_for_sine() {
        let [a, b, _, _] = vars([0.3, 0.7, 0.0, 0.0]);
        let p = a * b;
        let f = p.chain(p.re.sin(), p.re.cos(), -p.re.sin());
        // d/da sin(ab) = b cos(ab); d2/dadb = cos(ab) - ab sin(ab)
        let ab: f64 = 0.21;
        assert!((f.grad[0] - 0.7 * ab.cos()).abs() < 1e-15);
        assert!((f.hess[0][1] - (ab.cos() - ab * ab.sin())).abs() < 1e-15);
        assert!((f.hess[1][1] + 0.09 * ab.sin()).abs() < 1e-15);
    }

    #[test]
    fn integer_power_at_zero_is_finite() {
        let [a, ..] = vars([0.0, 0.0, 0.0, 0.0]);
        let f = a.powi(2);
        assert_eq!(f.re, 0.0);
        assert_eq!(f.grad[0], 0.0);
        assert_eq!(f.hess[0][0], 2.0);
    }
}
