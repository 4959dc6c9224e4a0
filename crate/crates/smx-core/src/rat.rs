//! Exact rational scalars.
//!
//! All symbolic coefficients in the engine bottom out in `Rat`, an
//! arbitrary-precision rational. Floating point enters only in the numeric
//! verification backend.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    BigRational::from(BigInt::from(n))
}

pub fn rat_zero() -> Rat {
    BigRational::zero()
}

pub fn rat_one() -> Rat {
    BigRational::one()
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Renders `p/q`, or just `p` for integers. Used by Display impls and the
/// JSON layer, which serializes rationals as `"p/q"` strings.
pub fn rat_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_parse(s: &str) -> Option<Rat> {
    let mut parts = s.splitn(2, '/');
    let num: BigInt = parts.next()?.trim().parse().ok()?;
    match parts.next() {
        None => Some(BigRational::from(num)),
        Some(d) => {
            let den: BigInt = d.trim().parse().ok()?;
            if den.is_zero() {
                None
            } else {
                Some(BigRational::new(num, den))
            }
        }
    }
}

/// True when the rational is a (possibly negative) integer.
pub fn rat_is_int(r: &Rat) -> bool {
    r.denom().is_one()
}

pub fn rat_to_i64(r: &Rat) -> Option<i64> {
    if rat_is_int(r) {
        r.numer().to_i64()
    } else {
        None
    }
}

/// Nonnegative-integer test, used by smoothness checks on exponents.
pub fn rat_is_nat(r: &Rat) -> bool {
    rat_is_int(r) && !r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_round_trip() {
        let r = rat(-3, 8);
        assert_eq!(rat_string(&r), "-3/8");
        assert_eq!(rat_parse("-3/8").unwrap(), r);
        assert_eq!(rat_string(&rat_int(5)), "5");
        assert_eq!(rat_parse("5").unwrap(), rat_int(5));
        assert!(rat_parse("1/0").is_none());
    }

    #[test]
    fn integer_predicates() {
        assert!(rat_is_int(&rat(4, 2)));
        assert!(!rat_is_int(&rat(1, 2)));
        assert!(rat_is_nat(&rat_int(0)));
        assert!(!rat_is_nat(&rat_int(-1)));
        assert_eq!(rat_to_i64(&rat(4, 2)), Some(2));
        assert_eq!(rat_to_i64(&rat(1, 2)), None);
    }
}
