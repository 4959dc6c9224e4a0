//! Exponent forms: a rational plus a linear form in regulator symbols, e.g.
//! `-1 + zeta` or `8 - 4*zeta`. Used for powers of invariants and masses and
//! for (almost-)homogeneity degrees.

use crate::poly::CoeffPoly;
use crate::rat::{rat_int, rat_string, rat_to_f64, Rat};
use num::Zero;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LinForm {
    pub rat: Rat,
    pub reg: BTreeMap<String, Rat>,
}

impl LinForm {
    pub fn zero() -> Self {
        LinForm::default()
    }

    pub fn from_rat(r: Rat) -> Self {
        LinForm { rat: r, reg: BTreeMap::new() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rat(rat_int(n))
    }

    pub fn reg_var(name: &str) -> Self {
        Self::reg_term(name, rat_int(1))
    }

    pub fn reg_term(name: &str, coeff: Rat) -> Self {
        let mut reg = BTreeMap::new();
        if !coeff.is_zero() {
            reg.insert(name.to_string(), coeff);
        }
        LinForm { rat: Rat::zero(), reg }
    }

    pub fn add(&self, other: &LinForm) -> LinForm {
        let mut reg = self.reg.clone();
        for (v, c) in &other.reg {
            let entry = reg.entry(v.clone()).or_insert_with(Rat::zero);
            *entry += c;
            if entry.is_zero() {
                reg.remove(v);
            }
        }
        LinForm { rat: &self.rat + &other.rat, reg }
    }

    pub fn neg(&self) -> LinForm {
        LinForm {
            rat: -self.rat.clone(),
            reg: self.reg.iter().map(|(v, c)| (v.clone(), -c.clone())).collect(),
        }
    }

    pub fn sub(&self, other: &LinForm) -> LinForm {
        self.add(&other.neg())
    }

    pub fn scale(&self, r: &Rat) -> LinForm {
        if r.is_zero() {
            return LinForm::zero();
        }
        LinForm {
            rat: &self.rat * r,
            reg: self.reg.iter().map(|(v, c)| (v.clone(), c * r)).collect(),
        }
    }

    pub fn add_rat(&self, r: &Rat) -> LinForm {
        LinForm { rat: &self.rat + r, reg: self.reg.clone() }
    }

    pub fn add_int(&self, n: i64) -> LinForm {
        self.add_rat(&rat_int(n))
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.reg.is_empty()
    }

    pub fn is_pure_rat(&self) -> bool {
        self.reg.is_empty()
    }

    pub fn as_rat(&self) -> Option<Rat> {
        if self.reg.is_empty() {
            Some(self.rat.clone())
        } else {
            None
        }
    }

    /// The polynomial `rat + sum c_j * var_j`, for coefficient arithmetic.
    pub fn to_poly(&self) -> CoeffPoly {
        let mut p = CoeffPoly::constant(self.rat.clone());
        for (v, c) in &self.reg {
            p = p.add(&CoeffPoly::var(v).scale(c));
        }
        p
    }

    pub fn eval(&self, env: &BTreeMap<String, f64>) -> f64 {
        let mut acc = rat_to_f64(&self.rat);
        for (v, c) in &self.reg {
            acc += rat_to_f64(c) * env.get(v).copied().unwrap_or(0.0);
        }
        acc
    }

    /// Substitutes one regulator symbol by a multiple of another, e.g.
    /// eta -> -4 zeta.
    pub fn subst_reg(&self, var: &str, replacement: &LinForm) -> LinForm {
        match self.reg.get(var) {
            None => self.clone(),
            Some(c) => {
                let mut base = self.clone();
                base.reg.remove(var);
                base.add(&replacement.scale(c))
            }
        }
    }
}

impl fmt::Display for LinForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        if !self.rat.is_zero() || self.reg.is_empty() {
            write!(f, "{}", rat_string(&self.rat))?;
            first = false;
        }
        for (v, c) in &self.reg {
            use num::Signed;
            if first {
                if c.abs() == rat_int(1) {
                    write!(f, "{}{v}", if c.is_negative() { "-" } else { "" })?;
                } else {
                    write!(f, "{}*{v}", rat_string(c))?;
                }
                first = false;
            } else {
                let mag = c.abs();
                let op = if c.is_negative() { " - " } else { " + " };
                if mag == rat_int(1) {
                    write!(f, "{op}{v}")?;
                } else {
                    write!(f, "{op}{}*{v}", rat_string(&mag))?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn arithmetic_and_display() {
        let d = LinForm::from_int(8).add(&LinForm::reg_var("eta"));
        assert_eq!(format!("{d}"), "8 + eta");
        let e = d.sub(&LinForm::reg_var("eta"));
        assert_eq!(e.as_rat(), Some(rat_int(8)));
        assert_eq!(format!("{}", LinForm::reg_term("zeta", rat(-1, 2))), "-1/2*zeta");
    }

    #[test]
    fn substitution() {
        // 8 + eta with eta -> -4 zeta
        let d = LinForm::from_int(8).add(&LinForm::reg_var("eta"));
        let z = LinForm::reg_term("zeta", rat_int(-4));
        let s = d.subst_reg("eta", &z);
        assert_eq!(s, LinForm::from_int(8).add(&LinForm::reg_term("zeta", rat_int(-4))));
    }

    #[test]
    fn eval() {
        let d = LinForm::from_int(2).add(&LinForm::reg_term("zeta", rat_int(-4)));
        let mut env = BTreeMap::new();
        env.insert("zeta".to_string(), 0.25);
        assert_eq!(d.eval(&env), 1.0);
    }
}
