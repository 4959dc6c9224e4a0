//! Radial test functions for numeric pairings.
//!
//! A test function is a radial profile (compactly supported bump or
//! Gaussian) around a center, times a polynomial in the radius, living on
//! the k-dimensional relative space. Derivatives up to fourth order come
//! from jet arithmetic, not finite differences; a test below validates them
//! against central differences.

use crate::error::{Error, Result};
use crate::numeric::jet::{Jet, JET_ORDER};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFamily {
    /// exp(-1/(1-u^2)) for |u| < 1, zero outside, u = (r - center)/width.
    Bump,
    /// exp(-u^2), effectively supported within |u| <= 14.
    Gaussian,
}

#[derive(Clone, Debug)]
pub struct TestFunction {
    pub family: TestFamily,
    pub center: f64,
    pub width: f64,
    /// Polynomial in r multiplying the profile, ascending coefficients.
    pub poly: Vec<f64>,
    pub k: u32,
}

const GAUSSIAN_CUTOFF: f64 = 14.0;

impl TestFunction {
    pub fn bump(k: u32, center: f64, width: f64) -> Self {
        TestFunction { family: TestFamily::Bump, center, width, poly: vec![1.0], k }
    }

    pub fn gaussian(k: u32, center: f64, width: f64) -> Self {
        TestFunction { family: TestFamily::Gaussian, center, width, poly: vec![1.0], k }
    }

    pub fn with_poly(mut self, poly: Vec<f64>) -> Self {
        self.poly = poly;
        self
    }

    /// Radial support, clipped to r >= 0. For the Gaussian this is the
    /// interval outside which the profile underflows to zero in f64.
    pub fn support(&self) -> (f64, f64) {
        let reach = match self.family {
            TestFamily::Bump => self.width,
            TestFamily::Gaussian => GAUSSIAN_CUTOFF * self.width,
        };
        ((self.center - reach).max(0.0), self.center + reach)
    }

    pub fn jet(&self, r: f64) -> Jet {
        let u = Jet::var(r).sub(&Jet::constant(self.center)).scale(1.0 / self.width);
        let profile = match self.family {
            TestFamily::Bump => {
                if (r - self.center).abs() >= self.width {
                    return Jet::zero();
                }
                let one_minus = Jet::constant(1.0).sub(&u.mul(&u));
                one_minus.recip().scale(-1.0).exp()
            }
            TestFamily::Gaussian => u.mul(&u).scale(-1.0).exp(),
        };
        let rj = Jet::var(r);
        let mut poly = Jet::zero();
        for c in self.poly.iter().rev() {
            poly = poly.mul(&rj).add(&Jet::constant(*c));
        }
        profile.mul(&poly)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).value()
    }

    pub fn derivative(&self, r: f64, order: usize) -> Result<f64> {
        if order > JET_ORDER {
            return Err(Error::UnsupportedOperation(format!(
                "test function derivatives stop at order {JET_ORDER}, requested {order}"
            )));
        }
        Ok(self.jet(r).d[order])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite_difference(h: &TestFunction, r: f64, order: usize) -> f64 {
        let step = 2e-5 * h.width;
        let lo = h.jet(r - step).d[order - 1];
        let hi = h.jet(r + step).d[order - 1];
        (hi - lo) / (2.0 * step)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cases = [
            TestFunction::bump(4, 1.5, 0.5),
            TestFunction::gaussian(4, 0.0, 1.0),
            TestFunction::bump(4, 1.0, 0.75).with_poly(vec![0.5, -1.0, 2.0]),
            TestFunction::gaussian(8, 0.5, 0.8).with_poly(vec![0.0, 1.0]),
        ];
        for h in &cases {
            let (lo, hi) = h.support();
            for i in 1..8 {
                let r = lo + (hi - lo) * i as f64 / 8.0;
                if r <= 0.0 {
                    continue;
                }
                for order in 1..=JET_ORDER {
                    let exact = h.derivative(r, order).unwrap();
                    let approx = finite_difference(h, r, order);
                    let scale = 1.0 + exact.abs().max(approx.abs());
                    assert!(
                        (exact - approx).abs() <= 1e-6 * scale,
                        "{:?} order {order} at r={r}: {exact} vs {approx}",
                        h.family
                    );
                }
            }
        }
    }

    #[test]
    fn bump_vanishes_outside_its_support() {
        let h = TestFunction::bump(4, 1.5, 0.5);
        assert_eq!(h.value(0.9), 0.0);
        assert_eq!(h.value(2.1), 0.0);
        assert!(h.value(1.5) > 0.0);
        assert_eq!(h.support(), (1.0, 2.0));
    }

    #[test]
    fn gaussian_support_is_clipped_at_zero() {
        let h = TestFunction::gaussian(4, 0.0, 1.0);
        assert_eq!(h.support().0, 0.0);
        assert!(h.value(h.support().1) == 0.0 || h.value(h.support().1) < 1e-80);
    }

    #[test]
    fn polynomial_part_multiplies_the_profile() {
        let h = TestFunction::gaussian(4, 0.0, 1.0).with_poly(vec![0.0, 1.0]);
        assert_eq!(h.value(0.0), 0.0);
        let plain = TestFunction::gaussian(4, 0.0, 1.0);
        let r = 0.7;
        assert!((h.value(r) - r * plain.value(r)).abs() < 1e-15);
    }

    #[test]
    fn derivative_order_is_capped() {
        let h = TestFunction::bump(4, 1.5, 0.5);
        assert!(h.derivative(1.5, 5).is_err());
    }
}
