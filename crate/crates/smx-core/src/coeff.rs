//! Coefficient field: rational functions whose numerators are polynomials in
//! model constants and regulator symbols, and whose denominators involve
//! regulator symbols only.
//!
//! Equality is decided by cross-multiplication, which is exact in a
//! polynomial ring; reduction to lowest terms is opportunistic (rational
//! content, monomial content, and linear factors of univariate denominators,
//! which covers every denominator produced by the moment solver and the
//! Laurent machinery).

use crate::error::{Error, Result};
use crate::poly::{poly_divrem, CoeffPoly, VarPows};
use crate::rat::{rat_int, Rat};
use num::bigint::BigInt;
use num::{Integer, One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone)]
pub struct Coeff {
    pub num: CoeffPoly,
    pub den: CoeffPoly,
}

impl Coeff {
    pub fn zero() -> Self {
        Coeff { num: CoeffPoly::zero(), den: CoeffPoly::one() }
    }

    pub fn one() -> Self {
        Coeff { num: CoeffPoly::one(), den: CoeffPoly::one() }
    }

    pub fn from_rat(r: Rat) -> Self {
        Coeff { num: CoeffPoly::constant(r), den: CoeffPoly::one() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rat(rat_int(n))
    }

    pub fn from_poly(p: CoeffPoly) -> Self {
        Coeff { num: p, den: CoeffPoly::one() }
    }

    pub fn var(name: &str) -> Self {
        Self::from_poly(CoeffPoly::var(name))
    }

    pub fn new(num: CoeffPoly, den: CoeffPoly) -> Self {
        let mut c = Coeff { num, den };
        c.reduce();
        c
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    pub fn as_rat(&self) -> Option<Rat> {
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        if d.is_zero() {
            None
        } else {
            Some(n / d)
        }
    }

    pub fn add(&self, other: &Coeff) -> Coeff {
        if self.den == other.den {
            let mut c = Coeff { num: self.num.add(&other.num), den: self.den.clone() };
            c.reduce();
            return c;
        }
        let num = self.num.mul(&other.den).add(&other.num.mul(&self.den));
        let den = self.den.mul(&other.den);
        Coeff::new(num, den)
    }

    pub fn neg(&self) -> Coeff {
        Coeff { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &Coeff) -> Coeff {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Coeff) -> Coeff {
        Coeff::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn mul_poly(&self, p: &CoeffPoly) -> Coeff {
        Coeff::new(self.num.mul(p), self.den.clone())
    }

    pub fn scale(&self, r: &Rat) -> Coeff {
        Coeff { num: self.num.scale(r), den: self.den.clone() }
    }

    /// Division; the divisor's numerator must involve regulator-style
    /// variables only, since it moves into the denominator.
    pub fn div(&self, other: &Coeff) -> Result<Coeff> {
        if other.is_zero() {
            return Err(Error::UnsupportedOperation("division by zero coefficient".into()));
        }
        Ok(Coeff::new(self.num.mul(&other.den), self.den.mul(&other.num)))
    }

    pub fn pow(&self, n: u32) -> Coeff {
        let mut acc = Coeff::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn subst(&self, var: &str, value: &CoeffPoly) -> Coeff {
        Coeff::new(self.num.subst(var, value), self.den.subst(var, value))
    }

    pub fn eval(&self, env: &BTreeMap<String, f64>) -> Result<f64> {
        let n = self.num.eval(env)?;
        let d = self.den.eval(env)?;
        if d == 0.0 {
            return Err(Error::UnsupportedOperation("coefficient denominator vanishes numerically".into()));
        }
        Ok(n / d)
    }

    pub fn depends_on(&self, var: &str) -> bool {
        self.num.vars().contains(var) || self.den.vars().contains(var)
    }

    /// Lowest exponent of `var` in the Laurent expansion around `var = 0`.
    pub fn laurent_min(&self, var: &str) -> Result<i64> {
        if self.num.is_zero() {
            return Ok(0);
        }
        let den_u = self.den.rational_univariate(var).ok_or_else(|| {
            Error::UnsupportedOperation(format!(
                "denominator `{}` is not univariate in the regulator `{var}`",
                self.den
            ))
        })?;
        let t = den_u.iter().position(|c| !c.is_zero()).unwrap();
        let num_u = self.num.as_univariate(var);
        let jmin = num_u.iter().position(|c| !c.is_zero()).unwrap();
        Ok(jmin as i64 - t as i64)
    }

    /// Laurent coefficients around `var = 0` for exponents up to and
    /// including `order`. Requires the denominator to be univariate in
    /// `var` with rational coefficients. Returns (min_exponent, coeffs)
    /// where coeffs[i] is the coefficient of var^(min_exponent + i).
    pub fn laurent(&self, var: &str, order: i64) -> Result<(i64, Vec<CoeffPoly>)> {
        if self.num.is_zero() {
            return Ok((order, vec![]));
        }
        let den_u = self.den.rational_univariate(var).ok_or_else(|| {
            Error::UnsupportedOperation(format!(
                "denominator `{}` is not univariate in the regulator `{var}`",
                self.den
            ))
        })?;
        // den = var^t * unit(var), unit(0) != 0
        let t = den_u.iter().position(|c| !c.is_zero()).unwrap();
        let unit: Vec<Rat> = den_u[t..].to_vec();
        let num_u = self.num.as_univariate(var);
        let jmin = num_u.iter().position(|c| !c.is_zero()).unwrap();
        let min_exp = jmin as i64 - t as i64;
        if order < min_exp {
            return Ok((order, vec![]));
        }
        // Power series inverse of the unit part, to the needed length.
        let len = (order - min_exp) as usize + 1;
        let mut inv = vec![Rat::zero(); len];
        inv[0] = Rat::one() / unit[0].clone();
        for n in 1..len {
            let mut s = Rat::zero();
            for i in 1..=n.min(unit.len() - 1) {
                s += &unit[i] * &inv[n - i];
            }
            inv[n] = -s / unit[0].clone();
        }
        let mut coeffs = vec![CoeffPoly::zero(); len];
        for (j, nj) in num_u.iter().enumerate().skip(jmin) {
            if nj.is_zero() {
                continue;
            }
            for (i, b) in inv.iter().enumerate() {
                let e = j as i64 - t as i64 + i as i64;
                if e > order {
                    break;
                }
                let slot = (e - min_exp) as usize;
                coeffs[slot] = coeffs[slot].add(&nj.scale(b));
            }
        }
        Ok((min_exp, coeffs))
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = CoeffPoly::one();
            return;
        }
        if self.den.as_constant().is_none() {
            self.cancel_monomial_content();
            self.cancel_linear_factors();
        }
        self.normalize_den_content();
    }

    fn cancel_monomial_content(&mut self) {
        let vars = self.den.vars();
        for v in vars {
            let m_den = self.den.0.keys().map(|vp| vp.pow_of(&v)).min().unwrap_or(0);
            if m_den == 0 {
                continue;
            }
            let m_num = self.num.0.keys().map(|vp| vp.pow_of(&v)).min().unwrap_or(0);
            let m = m_den.min(m_num);
            if m == 0 {
                continue;
            }
            self.num = shift_down(&self.num, &v, m);
            self.den = shift_down(&self.den, &v, m);
        }
    }

    /// Divides out linear factors (v - r) that the numerator shares with a
    /// univariate denominator; r runs over the denominator's rational roots.
    fn cancel_linear_factors(&mut self) {
        let vars = self.den.vars();
        if vars.len() != 1 {
            return;
        }
        let v = vars.into_iter().next().unwrap();
        let Some(mut den_u) = self.den.rational_univariate(&v) else { return };
        for root in rational_roots(&den_u) {
            loop {
                let lin = vec![-root.clone(), Rat::one()];
                let (q_den, r_den) = poly_divrem(&den_u, &lin);
                if !r_den.iter().all(|c| c.is_zero()) {
                    break;
                }
                match divide_linear(&self.num, &v, &root) {
                    Some(q_num) => {
                        self.num = q_num;
                        den_u = q_den;
                    }
                    None => break,
                }
            }
        }
        self.den = CoeffPoly::from_univariate(
            &den_u.iter().map(|r| CoeffPoly::constant(r.clone())).collect::<Vec<_>>(),
            &v,
        );
    }

    /// Scales so the denominator has coprime integer coefficients with a
    /// positive leading (lex-greatest) one.
    fn normalize_den_content(&mut self) {
        let Some((_, lead)) = self.den.0.iter().next_back() else { return };
        let mut scale = content(&self.den);
        if lead.is_negative() {
            scale = -scale;
        }
        if scale.is_one() {
            return;
        }
        let inv = Rat::one() / scale;
        self.num = self.num.scale(&inv);
        self.den = self.den.scale(&inv);
    }
}

fn shift_down(p: &CoeffPoly, var: &str, m: u32) -> CoeffPoly {
    CoeffPoly(
        p.0.iter()
            .map(|(vp, r)| {
                let mut vmap = vp.0.clone();
                let cur = vmap.get(var).copied().unwrap_or(0);
                if cur <= m {
                    vmap.remove(var);
                } else {
                    vmap.insert(var.to_string(), cur - m);
                }
                (VarPows(vmap), r.clone())
            })
            .collect(),
    )
}

/// Synthetic division of a multivariate polynomial, viewed in R[var], by the
/// monic linear factor (var - r). None when it does not divide exactly.
fn divide_linear(p: &CoeffPoly, var: &str, r: &Rat) -> Option<CoeffPoly> {
    let coeffs = p.as_univariate(var);
    if coeffs.len() < 2 {
        return None;
    }
    let deg = coeffs.len() - 1;
    let mut quot = vec![CoeffPoly::zero(); deg];
    let mut carry = coeffs[deg].clone();
    for j in (0..deg).rev() {
        quot[j] = carry.clone();
        carry = coeffs[j].add(&carry.scale(r));
    }
    if carry.is_zero() {
        Some(CoeffPoly::from_univariate(&quot, var))
    } else {
        None
    }
}

/// Rational gcd of all coefficients (positive), for content normalization.
fn content(p: &CoeffPoly) -> Rat {
    let mut num_gcd = BigInt::zero();
    let mut den_lcm = BigInt::one();
    for r in p.0.values() {
        num_gcd = num_gcd.gcd(r.numer());
        den_lcm = den_lcm.lcm(r.denom());
    }
    if num_gcd.is_zero() {
        Rat::one()
    } else {
        Rat::new(num_gcd, den_lcm)
    }
}

/// Rational roots of a univariate rational polynomial, via the rational root
/// theorem on the integer-scaled form. Gives up (returns fewer candidates)
/// on huge coefficients; reduction is best-effort.
fn rational_roots(poly: &[Rat]) -> Vec<Rat> {
    let Some(last) = poly.iter().rposition(|c| !c.is_zero()) else { return vec![] };
    let mut roots = Vec::new();
    let first = poly.iter().position(|c| !c.is_zero()).unwrap();
    if first > 0 {
        roots.push(Rat::zero());
    }
    if last == first {
        return roots;
    }
    let mut scale = BigInt::one();
    for c in &poly[first..=last] {
        scale = scale.lcm(c.denom());
    }
    let ints: Vec<BigInt> =
        poly[first..=last].iter().map(|c| c.numer() * (&scale / c.denom())).collect();
    let a0 = ints[0].magnitude().clone();
    let alead = ints[ints.len() - 1].magnitude().clone();
    let bound = num::BigUint::from(1_000_000u32);
    if a0 > bound || alead > bound {
        return roots;
    }
    let divisors = |n: &num::BigUint| -> Vec<BigInt> {
        let n: u64 = n.try_into().unwrap();
        let mut out = Vec::new();
        let mut d = 1u64;
        while d * d <= n {
            if n.is_multiple_of(d) {
                out.push(BigInt::from(d));
                out.push(BigInt::from(n / d));
            }
            d += 1;
        }
        out
    };
    let eval_at = |x: &Rat| -> Rat {
        let mut acc = Rat::zero();
        for c in poly[first..=last].iter().rev() {
            acc = acc * x + c;
        }
        acc
    };
    for p in divisors(&a0) {
        for q in divisors(&alead) {
            for sign in [1i64, -1] {
                let cand = Rat::new(&p * BigInt::from(sign), q.clone());
                if eval_at(&cand).is_zero() && !roots.contains(&cand) {
                    roots.push(cand.clone());
                }
            }
        }
    }
    roots
}

impl PartialEq for Coeff {
    fn eq(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl Eq for Coeff {}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.as_constant().map(|r| r.is_one()).unwrap_or(false) {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn eta() -> CoeffPoly {
        CoeffPoly::var("eta")
    }

    #[test]
    fn cross_multiplied_equality() {
        // (eta^2 - 1)/(eta - 1) == eta + 1
        let num = eta().mul(&eta()).sub(&CoeffPoly::one());
        let den = eta().sub(&CoeffPoly::one());
        let a = Coeff::new(num, den);
        let b = Coeff::from_poly(eta().add(&CoeffPoly::one()));
        assert_eq!(a, b);
        // and reduction actually cleared the denominator
        assert!(a.den.as_constant().map(|r| r.is_one()).unwrap_or(false));
    }

    #[test]
    fn reduction_with_constants_in_numerator() {
        // a0*(eta+1)*eta / (eta^2*(eta+1)) -> a0/eta
        let a0 = CoeffPoly::var("a0");
        let e1 = eta().add(&CoeffPoly::one());
        let num = a0.mul(&e1).mul(&eta());
        let den = eta().mul(&eta()).mul(&e1);
        let c = Coeff::new(num, den);
        assert_eq!(c, Coeff::new(a0, eta()));
        assert_eq!(c.den, eta());
    }

    #[test]
    fn laurent_of_pole() {
        // -1/eta^2 with eta = -4 zeta: -1/(16 zeta^2)
        let c = Coeff::new(CoeffPoly::constant(rat_int(-1)), eta().mul(&eta()));
        let c = c.subst("eta", &CoeffPoly::var("zeta").scale(&rat_int(-4)));
        let (min, coeffs) = c.laurent("zeta", 0).unwrap();
        assert_eq!(min, -2);
        assert_eq!(coeffs[0].as_constant(), Some(rat(-1, 16)));
        assert!(coeffs[1].is_zero());
        assert!(coeffs[2].is_zero());
    }

    #[test]
    fn laurent_of_unit() {
        // 1/(1 - zeta) = 1 + zeta + zeta^2 + ...
        let one_minus = CoeffPoly::one().sub(&CoeffPoly::var("zeta"));
        let c = Coeff::new(CoeffPoly::one(), one_minus);
        let (min, coeffs) = c.laurent("zeta", 2).unwrap();
        assert_eq!(min, 0);
        assert!(coeffs.iter().all(|c| c.as_constant() == Some(Rat::one())));
        assert_eq!(coeffs.len(), 3);
    }

    #[test]
    fn arithmetic() {
        let half = Coeff::from_rat(rat(1, 2));
        let third = Coeff::from_rat(rat(1, 3));
        assert_eq!(half.add(&third).as_rat(), Some(rat(5, 6)));
        assert_eq!(half.mul(&third).as_rat(), Some(rat(1, 6)));
        assert_eq!(half.sub(&half), Coeff::zero());
        let inv = Coeff::one().div(&Coeff::new(eta(), CoeffPoly::one())).unwrap();
        assert_eq!(inv.mul(&Coeff::from_poly(eta())), Coeff::one());
    }
}
