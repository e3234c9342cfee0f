//! Third-order Taylor jets: a value together with its first three
//! derivatives, propagated through arithmetic by the chain rule.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Jet { v, d1: 0.0, d2: 0.0, d3: 0.0 }
    }

    /// The identity jet at `x`.
    pub const fn var(x: f64) -> Self {
        Jet { v: x, d1: 1.0, d2: 0.0, d3: 0.0 }
    }

    /// Composes an outer function, given its value and derivatives at `self.v`.
    fn compose(self, f0: f64, f1: f64, f2: f64, f3: f64) -> Self {
        let (u1, u2, u3) = (self.d1, self.d2, self.d3);
        Jet {
            v: f0,
            d1: f1 * u1,
            d2: f2 * u1 * u1 + f1 * u2,
            d3: f3 * u1 * u1 * u1 + 3.0 * f2 * u1 * u2 + f1 * u3,
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.compose(e, e, e, e)
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.compose(r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r)
    }

    /// `self^n` for real `n`; derivative terms with a vanishing coefficient are
    /// dropped so integer powers stay finite at zero.
    pub fn powf(self, n: f64) -> Self {
        let x = self.v;
        let term = |coef: f64, k: f64| if coef == 0.0 { 0.0 } else { coef * x.powf(n - k) };
        self.compose(
            x.powf(n),
            term(n, 1.0),
            term(n * (n - 1.0), 2.0),
            term(n * (n - 1.0) * (n - 2.0), 3.0),
        )
    }

    pub fn scale(self, c: f64) -> Self {
        Jet { v: c * self.v, d1: c * self.d1, d2: c * self.d2, d3: c * self.d3 }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2, d3: self.d3 + o.d3 }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
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
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self, o);
        Jet {
            v: a.v * b.v,
            d1: a.d1 * b.v + a.v * b.d1,
            d2: a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2,
            d3: a.d3 * b.v + 3.0 * a.d2 * b.d1 + 3.0 * a.d1 * b.d2 + a.v * b.d3,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet { v: self.v + c, ..self }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}
