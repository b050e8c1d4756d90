//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] of order `K` stores the normalized Taylor coefficients
//! `f(x₀), f′(x₀), f″(x₀)/2!, …, f^{(K)}(x₀)/K!`. Products, quotients and the
//! elementary functions propagate all orders at once, so the k-th derivative
//! of any composite expression is exact up to floating-point rounding.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Largest supported derivative order.
pub const MAX_ORDER: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    order: usize,
    c: [f64; MAX_ORDER + 1],
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

impl Jet {
    pub fn constant(order: usize, value: f64) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; MAX_ORDER + 1];
        c[0] = value;
        Jet { order, c }
    }

    pub fn zero(order: usize) -> Self {
        Jet::constant(order, 0.0)
    }

    /// The identity function expanded at `x0`.
    pub fn variable(order: usize, x0: f64) -> Self {
        let mut j = Jet::constant(order, x0);
        if order >= 1 {
            j.c[1] = 1.0;
        }
        j
    }

    /// Builds a jet from `f(x₀), f′(x₀), …`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        assert!(!derivs.is_empty());
        let mut j = Jet::zero(derivs.len() - 1);
        for (k, d) in derivs.iter().enumerate() {
            j.c[k] = d / factorial(k);
        }
        j
    }

    /// Builds a jet from normalized coefficients; missing ones are zero.
    pub fn from_coeffs(order: usize, coeffs: &[f64]) -> Self {
        let mut j = Jet::zero(order);
        for (k, v) in coeffs.iter().take(order + 1).enumerate() {
            j.c[k] = *v;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Normalized Taylor coefficient `f^{(k)}(x₀)/k!`.
    pub fn coeff(&self, k: usize) -> f64 {
        self.c[k]
    }

    /// `f^{(k)}(x₀)`.
    pub fn derivative(&self, k: usize) -> f64 {
        assert!(k <= self.order, "derivative {k} beyond jet order {}", self.order);
        self.c[k] * factorial(k)
    }

    pub fn derivatives(&self) -> Vec<f64> {
        (0..=self.order).map(|k| self.derivative(k)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.c[..=self.order].iter().all(|&v| v == 0.0)
    }

    /// Drops orders above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order);
        let mut j = Jet::zero(order);
        j.c[..=order].copy_from_slice(&self.c[..=order]);
        j
    }

    /// Jet of the k-th derivative; the order drops by `k`.
    pub fn differentiate(&self, k: usize) -> Self {
        assert!(k <= self.order);
        let order = self.order - k;
        let mut j = Jet::zero(order);
        for i in 0..=order {
            // g^{(i)}/i! = f^{(k+i)}/i! = c[k+i] (k+i)!/i!
            let ratio = ((i + 1)..=(i + k)).fold(1.0, |acc, n| acc * n as f64);
            j.c[i] = self.c[k + i] * ratio;
        }
        j
    }

    /// Jet of `x ↦ f(s·x)` given the jet of `f` at `s·x₀`.
    pub fn scale_argument(&self, s: f64) -> Self {
        let mut j = *self;
        let mut p = 1.0;
        for k in 0..=self.order {
            j.c[k] *= p;
            p *= s;
        }
        j
    }

    /// Evaluates the Taylor polynomial `outer` at the series `inner`, i.e. the
    /// jet of `g ∘ h` from the jet of `g` at `h(x₀)` and the jet of `h` at `x₀`.
    pub fn compose(outer: &Jet, inner: &Jet) -> Jet {
        let order = outer.order.min(inner.order);
        let mut delta = inner.truncate(order);
        delta.c[0] = 0.0;
        let mut result = Jet::constant(order, outer.c[0]);
        let mut power = Jet::constant(order, 1.0);
        for k in 1..=order {
            power = power * delta;
            for i in 0..=order {
                result.c[i] += outer.c[k] * power.c[i];
            }
        }
        result
    }

    fn check(&self, other: &Jet) -> usize {
        self.order.min(other.order)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut j = *self;
        for v in j.c[..=j.order].iter_mut() {
            *v *= s;
        }
        j
    }

    pub fn recip(&self) -> Self {
        let a = &self.c;
        let mut b = Jet::zero(self.order);
        b.c[0] = 1.0 / a[0];
        for k in 1..=self.order {
            let s: f64 = (1..=k).map(|j| a[j] * b.c[k - j]).sum();
            b.c[k] = -s / a[0];
        }
        b
    }

    pub fn exp(&self) -> Self {
        let a = &self.c;
        let mut b = Jet::zero(self.order);
        b.c[0] = a[0].exp();
        for k in 1..=self.order {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * b.c[k - j]).sum();
            b.c[k] = s / k as f64;
        }
        b
    }

    pub fn ln(&self) -> Self {
        let a = &self.c;
        let mut b = Jet::zero(self.order);
        b.c[0] = a[0].ln();
        for k in 1..=self.order {
            let s: f64 = (1..k).map(|j| j as f64 * b.c[j] * a[k - j]).sum();
            b.c[k] = (a[k] - s / k as f64) / a[0];
        }
        b
    }

    /// `self^p` for a positive base.
    pub fn powf(&self, p: f64) -> Self {
        let a = &self.c;
        let mut b = Jet::zero(self.order);
        b.c[0] = a[0].powf(p);
        for k in 1..=self.order {
            let s: f64 = (1..=k)
                .map(|j| ((p + 1.0) * j as f64 - k as f64) * a[j] * b.c[k - j])
                .sum();
            b.c[k] = s / (k as f64 * a[0]);
        }
        b
    }

    pub fn square(&self) -> Self {
        *self * *self
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.check(&rhs);
        let mut j = Jet::zero(order);
        for k in 0..=order {
            j.c[k] = self.c[k] + rhs.c[k];
        }
        j
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.check(&rhs);
        let mut j = Jet::zero(order);
        for k in 0..=order {
            j.c[k] = (0..=k).map(|i| self.c[i] * rhs.c[k - i]).sum();
        }
        j
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}
