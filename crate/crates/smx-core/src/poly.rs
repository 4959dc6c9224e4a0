//! Sparse multivariate polynomials over exact rationals.
//!
//! Variables are named symbols: model constants (`a0`, `a1`, `A1`, `hbar`,
//! `C0`, ...), dimreg coefficient symbols (`h0`, `c1`, ...) and regulator
//! symbols (`zeta`, `eta`, `z12`, ...). The polynomial ring is the numerator
//! ring of every coefficient in the engine.

use crate::error::{Error, Result};
use crate::rat::{rat_string, rat_to_f64, Rat};
use num::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A power product of named variables, e.g. `a0^2 * eta`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VarPows(pub BTreeMap<String, u32>);

impl VarPows {
    pub fn unit() -> Self {
        VarPows(BTreeMap::new())
    }

    pub fn var(name: &str, pow: u32) -> Self {
        let mut m = BTreeMap::new();
        if pow > 0 {
            m.insert(name.to_string(), pow);
        }
        VarPows(m)
    }

    pub fn mul(&self, other: &VarPows) -> VarPows {
        let mut m = self.0.clone();
        for (v, p) in &other.0 {
            *m.entry(v.clone()).or_insert(0) += p;
        }
        VarPows(m)
    }

    pub fn pow_of(&self, var: &str) -> u32 {
        self.0.get(var).copied().unwrap_or(0)
    }

    /// Removes `var^pow`; caller guarantees the power is present.
    fn without(&self, var: &str) -> VarPows {
        let mut m = self.0.clone();
        m.remove(var);
        VarPows(m)
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CoeffPoly(pub BTreeMap<VarPows, Rat>);

impl CoeffPoly {
    pub fn zero() -> Self {
        CoeffPoly(BTreeMap::new())
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn constant(r: Rat) -> Self {
        let mut m = BTreeMap::new();
        if !r.is_zero() {
            m.insert(VarPows::unit(), r);
        }
        CoeffPoly(m)
    }

    pub fn var(name: &str) -> Self {
        let mut m = BTreeMap::new();
        m.insert(VarPows::var(name, 1), Rat::one());
        CoeffPoly(m)
    }

    pub fn monomial(vars: VarPows, coeff: Rat) -> Self {
        let mut m = BTreeMap::new();
        if !coeff.is_zero() {
            m.insert(vars, coeff);
        }
        CoeffPoly(m)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|r| r.is_one())
    }

    /// Some(r) when the polynomial is the constant r (including zero).
    pub fn as_constant(&self) -> Option<Rat> {
        match self.0.len() {
            0 => Some(Rat::zero()),
            1 => {
                let (vp, r) = self.0.iter().next().unwrap();
                if vp.is_unit() {
                    Some(r.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn add(&self, other: &CoeffPoly) -> CoeffPoly {
        let mut m = self.0.clone();
        for (vp, r) in &other.0 {
            let entry = m.entry(vp.clone()).or_insert_with(Rat::zero);
            *entry += r;
            if entry.is_zero() {
                m.remove(vp);
            }
        }
        CoeffPoly(m)
    }

    pub fn neg(&self) -> CoeffPoly {
        CoeffPoly(self.0.iter().map(|(vp, r)| (vp.clone(), -r.clone())).collect())
    }

    pub fn sub(&self, other: &CoeffPoly) -> CoeffPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &CoeffPoly) -> CoeffPoly {
        let mut m: BTreeMap<VarPows, Rat> = BTreeMap::new();
        for (vp1, r1) in &self.0 {
            for (vp2, r2) in &other.0 {
                let vp = vp1.mul(vp2);
                let entry = m.entry(vp.clone()).or_insert_with(Rat::zero);
                *entry += r1 * r2;
                if entry.is_zero() {
                    m.remove(&vp);
                }
            }
        }
        CoeffPoly(m)
    }

    pub fn scale(&self, r: &Rat) -> CoeffPoly {
        if r.is_zero() {
            return CoeffPoly::zero();
        }
        CoeffPoly(self.0.iter().map(|(vp, c)| (vp.clone(), c * r)).collect())
    }

    pub fn pow(&self, n: u32) -> CoeffPoly {
        let mut acc = CoeffPoly::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        for vp in self.0.keys() {
            for v in vp.0.keys() {
                s.insert(v.clone());
            }
        }
        s
    }

    pub fn degree_in(&self, var: &str) -> u32 {
        self.0.keys().map(|vp| vp.pow_of(var)).max().unwrap_or(0)
    }

    /// Coefficients of `var^0, var^1, ...`; each is free of `var`.
    pub fn as_univariate(&self, var: &str) -> Vec<CoeffPoly> {
        let deg = self.degree_in(var);
        let mut out = vec![CoeffPoly::zero(); deg as usize + 1];
        for (vp, r) in &self.0 {
            let p = vp.pow_of(var) as usize;
            let rest = vp.without(var);
            let entry = out[p].0.entry(rest.clone()).or_insert_with(Rat::zero);
            *entry += r;
            if entry.is_zero() {
                out[p].0.remove(&rest);
            }
        }
        out
    }

    pub fn from_univariate(coeffs: &[CoeffPoly], var: &str) -> CoeffPoly {
        let mut acc = CoeffPoly::zero();
        for (p, c) in coeffs.iter().enumerate() {
            let vp = CoeffPoly(
                c.0.iter()
                    .map(|(rest, r)| (rest.mul(&VarPows::var(var, p as u32)), r.clone()))
                    .collect(),
            );
            acc = acc.add(&vp);
        }
        acc
    }

    /// Substitutes `var := value` (a polynomial) everywhere.
    pub fn subst(&self, var: &str, value: &CoeffPoly) -> CoeffPoly {
        let coeffs = self.as_univariate(var);
        let mut acc = CoeffPoly::zero();
        let mut pow = CoeffPoly::one();
        for c in coeffs {
            acc = acc.add(&c.mul(&pow));
            pow = pow.mul(value);
        }
        acc
    }

    /// Purely rational univariate view: Some(coeff vector) when the
    /// polynomial involves no variable other than `var`.
    pub fn rational_univariate(&self, var: &str) -> Option<Vec<Rat>> {
        let mut out = vec![Rat::zero(); self.degree_in(var) as usize + 1];
        for (vp, r) in &self.0 {
            if vp.0.keys().any(|v| v != var) {
                return None;
            }
            out[vp.pow_of(var) as usize] = r.clone();
        }
        while out.len() > 1 && out.last().unwrap().is_zero() {
            out.pop();
        }
        Some(out)
    }

    pub fn eval(&self, env: &BTreeMap<String, f64>) -> Result<f64> {
        let mut acc = 0.0;
        for (vp, r) in &self.0 {
            let mut t = rat_to_f64(r);
            for (v, p) in &vp.0 {
                let x = env.get(v).copied().ok_or_else(|| {
                    Error::UnsupportedOperation(format!("unassigned constant `{v}` in numeric evaluation"))
                })?;
                t *= x.powi(*p as i32);
            }
            acc += t;
        }
        Ok(acc)
    }
}

impl fmt::Debug for CoeffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CoeffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (vp, r) in &self.0 {
            let mag = r.abs();
            if first {
                if r.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if r.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let show_coeff = !mag.is_one() || vp.is_unit();
            if show_coeff {
                write!(f, "{}", rat_string(&mag))?;
            }
            let mut lead = !show_coeff;
            for (v, p) in &vp.0 {
                if !lead {
                    write!(f, "*")?;
                }
                lead = false;
                if *p == 1 {
                    write!(f, "{v}")?;
                } else {
                    write!(f, "{v}^{p}")?;
                }
            }
        }
        Ok(())
    }
}

/// Univariate polynomial division over the rationals: returns (quotient,
/// remainder) with `a = q*b + r`, deg r < deg b.
pub fn poly_divrem(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let bd = b.iter().rposition(|c| !c.is_zero()).expect("division by zero polynomial");
    let mut rem: Vec<Rat> = a.to_vec();
    let mut quot = vec![Rat::zero(); a.len().saturating_sub(bd)];
    while let Some(rd) = rem.iter().rposition(|c| !c.is_zero()) {
        if rd < bd {
            break;
        }
        let factor = &rem[rd] / &b[bd];
        let shift = rd - bd;
        for (i, bc) in b.iter().enumerate().take(bd + 1) {
            let delta = &factor * bc;
            rem[shift + i] -= delta;
        }
        quot[shift] = factor;
    }
    while rem.len() > 1 && rem.last().unwrap().is_zero() {
        rem.pop();
    }
    (quot, rem)
}

/// Monic gcd of univariate rational polynomials.
pub fn poly_gcd(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let is_zero = |p: &[Rat]| p.iter().all(|c| c.is_zero());
    let mut x: Vec<Rat> = a.to_vec();
    let mut y: Vec<Rat> = b.to_vec();
    while !is_zero(&y) {
        let (_, r) = poly_divrem(&x, &y);
        x = y;
        y = r;
    }
    if let Some(ld) = x.iter().rposition(|c| !c.is_zero()) {
        let lead = x[ld].clone();
        for c in &mut x {
            *c /= lead.clone();
        }
        x.truncate(ld + 1);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    fn p(coeffs: &[i64]) -> Vec<Rat> {
        coeffs.iter().map(|&c| rat_int(c)).collect()
    }

    #[test]
    fn ring_basics() {
        let a0 = CoeffPoly::var("a0");
        let two = CoeffPoly::constant(rat_int(2));
        let s = a0.add(&two); // a0 + 2
        let sq = s.mul(&s); // a0^2 + 4 a0 + 4
        assert_eq!(sq.degree_in("a0"), 2);
        assert_eq!(sq.as_univariate("a0")[1].as_constant(), Some(rat_int(4)));
        assert!(s.sub(&s).is_zero());
        assert_eq!(format!("{}", sq), "4 + 4*a0 + a0^2");
    }

    #[test]
    fn substitution() {
        // eta := -4 zeta inside eta^2 + eta
        let eta = CoeffPoly::var("eta");
        let e = eta.mul(&eta).add(&eta);
        let m4z = CoeffPoly::var("zeta").scale(&rat_int(-4));
        let s = e.subst("eta", &m4z);
        // 16 zeta^2 - 4 zeta
        let z = CoeffPoly::var("zeta");
        let expect = z.mul(&z).scale(&rat_int(16)).add(&z.scale(&rat_int(-4)));
        assert_eq!(s, expect);
    }

    #[test]
    fn divrem_and_gcd() {
        // (x+1)(x+2) = x^2+3x+2
        let prod = p(&[2, 3, 1]);
        let (q, r) = poly_divrem(&prod, &p(&[1, 1]));
        assert_eq!(q, p(&[2, 1]));
        assert!(r.iter().all(|c| c.is_zero()));

        let g = poly_gcd(&p(&[2, 3, 1]), &p(&[1, 1]));
        assert_eq!(g, p(&[1, 1]));

        let g2 = poly_gcd(&p(&[1, 2, 1]), &p(&[-1, 0, 1]));
        assert_eq!(g2, p(&[1, 1]));

        let g3 = poly_gcd(&p(&[1, 1]), &p(&[1]));
        assert_eq!(g3, p(&[1]));
    }

    #[test]
    fn eval_with_env() {
        let e = CoeffPoly::var("a0").mul(&CoeffPoly::var("a0")).scale(&rat(3, 2));
        let mut env = BTreeMap::new();
        env.insert("a0".to_string(), 2.0);
        assert_eq!(e.eval(&env).unwrap(), 6.0);
        env.clear();
        assert!(e.eval(&env).is_err());
    }
}
