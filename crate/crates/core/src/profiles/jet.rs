//! Second-order jets: truncated Taylor data `(value, d1, d2)` of a function of one
//! variable, propagated through arithmetic by the chain rule.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value, first and second derivative of a scalar quantity with respect to the
/// profile variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    /// The identity jet at `t`.
    pub const fn variable(t: f64) -> Self {
        Self::new(t, 1.0, 0.0)
    }

    /// Composes with a scalar function given its value and first two derivatives
    /// at `self.value`.
    #[inline]
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Self {
            value: f0,
            d1: f1 * self.d1,
            d2: f2 * self.d1 * self.d1 + f1 * self.d2,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    /// Natural logarithm. The caller guarantees `value > 0`.
    pub fn ln(self) -> Self {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    /// Square root. The caller guarantees `value > 0`.
    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    pub fn tanh(self) -> Self {
        let t = self.value.tanh();
        let sech2 = 1.0 - t * t;
        self.chain(t, sech2, -2.0 * t * sech2)
    }

    pub fn cosh(self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(c, s, c)
    }

    pub fn sinh(self) -> Self {
        let (s, c) = (self.value.sinh(), self.value.cosh());
        self.chain(s, c, s)
    }

    /// Integer power; exact for negative bases.
    pub fn powi(self, p: i32) -> Self {
        let x = self.value;
        let pf = f64::from(p);
        let f1 = if p == 0 { 0.0 } else { pf * x.powi(p - 1) };
        let f2 = if p == 0 || p == 1 {
            0.0
        } else {
            pf * (pf - 1.0) * x.powi(p - 2)
        };
        self.chain(x.powi(p), f1, f2)
    }

    /// Real power with a constant exponent. The caller guarantees `value > 0`.
    pub fn powf(self, p: f64) -> Self {
        let x = self.value;
        self.chain(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }
}

impl From<f64> for Jet {
    fn from(value: f64) -> Self {
        Self::constant(value)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        Jet::new(self.value + rhs.value, self.d1 + rhs.d1, self.d2 + rhs.d2)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        Jet::new(self.value - rhs.value, self.d1 - rhs.d1, self.d2 - rhs.d2)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        Jet::new(
            self.value * rhs.value,
            self.d1 * rhs.value + self.value * rhs.d1,
            self.d2 * rhs.value + 2.0 * self.d1 * rhs.d1 + self.value * rhs.d2,
        )
    }
}

impl Div for Jet {
    type Output = Jet;
    /// Quotient rule. The caller guarantees `rhs.value != 0`.
    fn div(self, rhs: Jet) -> Jet {
        let inv = rhs.chain(1.0 / rhs.value, -1.0 / (rhs.value * rhs.value), 2.0 / rhs.value.powi(3));
        self * inv
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::new(-self.value, -self.d1, -self.d2)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, k: f64) -> Jet {
        Jet::new(self.value * k, self.d1 * k, self.d2 * k)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, k: f64) -> Jet {
        Jet::new(self.value + k, self.d1, self.d2)
    }
}
