//! Fixed-order derivative jets over f64.
//!
//! A jet carries a function value together with its derivatives up to order
//! four at one point; sums, products, quotients, exponentials and powers
//! propagate by the Leibniz and chain rules. Four orders cover the deepest
//! pairing weight the engine produces: two wave operators, or one
//! fourth-order moment contraction.

pub const JET_ORDER: usize = 4;
pub const JET_LEN: usize = JET_ORDER + 1;

const BINOM: [[f64; JET_LEN]; JET_LEN] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

/// d[i] is the i-th derivative at the expansion point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub d: [f64; JET_LEN],
}

impl Jet {
    pub fn zero() -> Jet {
        Jet { d: [0.0; JET_LEN] }
    }

    pub fn constant(c: f64) -> Jet {
        let mut d = [0.0; JET_LEN];
        d[0] = c;
        Jet { d }
    }

    pub fn var(x: f64) -> Jet {
        let mut d = [0.0; JET_LEN];
        d[0] = x;
        d[1] = 1.0;
        Jet { d }
    }

    pub fn value(&self) -> f64 {
        self.d[0]
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(other.d.iter()) {
            *a += b;
        }
        Jet { d }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(other.d.iter()) {
            *a -= b;
        }
        Jet { d }
    }

    pub fn scale(&self, c: f64) -> Jet {
        let mut d = self.d;
        for a in d.iter_mut() {
            *a *= c;
        }
        Jet { d }
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let mut d = [0.0; JET_LEN];
        for (n, slot) in d.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, b) in BINOM[n].iter().enumerate().take(n + 1) {
                acc += b * self.d[i] * other.d[n - i];
            }
            *slot = acc;
        }
        Jet { d }
    }

    /// Reciprocal, from the Leibniz expansion of f * (1/f) = 1. The value
    /// must be nonzero.
    pub fn recip(&self) -> Jet {
        let mut d = [0.0; JET_LEN];
        d[0] = 1.0 / self.d[0];
        for n in 1..JET_LEN {
            let mut acc = 0.0;
            for i in 0..n {
                acc += BINOM[n][i] * d[i] * self.d[n - i];
            }
            d[n] = -acc / self.d[0];
        }
        Jet { d }
    }

    pub fn div(&self, other: &Jet) -> Jet {
        self.mul(&other.recip())
    }

    /// exp(f), via g' = f' g.
    pub fn exp(&self) -> Jet {
        let mut d = [0.0; JET_LEN];
        d[0] = self.d[0].exp();
        for n in 1..JET_LEN {
            let mut acc = 0.0;
            for i in 0..n {
                acc += BINOM[n - 1][i] * d[i] * self.d[n - i];
            }
            d[n] = acc;
        }
        Jet { d }
    }

    /// ln(f), for positive values: the derivative part is f'/f integrated
    /// back one order.
    pub fn ln(&self) -> Jet {
        let q = self.dshift().mul(&self.recip());
        let mut d = [0.0; JET_LEN];
        d[0] = self.d[0].ln();
        d[1..JET_LEN].copy_from_slice(&q.d[..JET_ORDER]);
        Jet { d }
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut acc = Jet::constant(1.0);
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// f^a for real exponents; the value must be positive.
    pub fn powf(&self, a: f64) -> Jet {
        if a == 0.0 {
            return Jet::constant(1.0);
        }
        if a.fract() == 0.0 && a.abs() <= 16.0 {
            return self.powi(a as i32);
        }
        self.ln().scale(a).exp()
    }

    /// Derivative jet, one order shorter; the top slot is zero-filled and
    /// must not be trusted.
    pub fn dshift(&self) -> Jet {
        let mut d = [0.0; JET_LEN];
        d[..JET_ORDER].copy_from_slice(&self.d[1..JET_LEN]);
        Jet { d }
    }
}
