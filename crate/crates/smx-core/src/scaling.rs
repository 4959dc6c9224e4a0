//! Scaling degree toward the origin and almost-homogeneous scaling analysis.
//!
//! The scaling degree of a sum is the max over terms; the empty expression
//! reports minus infinity so the max identity holds. Regulator symbols are
//! treated as purely imaginary for degree bookkeeping (only the rational part
//! of an exponent contributes to the real scaling weight).

use crate::error::{Error, Result};
use crate::expr::calculus::apply_euler;
use crate::expr::{Expr, Factor, Term};
use crate::json::{linform_value, obj, rat_value};
use crate::linform::LinForm;
use crate::rat::{rat_int, rat_string, Rat};
use serde_json::Value;
use std::cmp::Ordering;
use std::fmt;

pub const DEFAULT_N_MAX: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScalingDegree {
    NegInf,
    Finite(Rat),
}

impl ScalingDegree {
    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ScalingDegree::NegInf => None,
            ScalingDegree::Finite(r) => Some(r),
        }
    }

    pub fn max(self, other: ScalingDegree) -> ScalingDegree {
        match (self, other) {
            (ScalingDegree::NegInf, o) => o,
            (s, ScalingDegree::NegInf) => s,
            (ScalingDegree::Finite(a), ScalingDegree::Finite(b)) => {
                ScalingDegree::Finite(a.max(b))
            }
        }
    }

    /// True when the degree is strictly below the bound (always true for the
    /// empty expression).
    pub fn below(&self, bound: &Rat) -> bool {
        match self {
            ScalingDegree::NegInf => true,
            ScalingDegree::Finite(r) => r < bound,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ScalingDegree::NegInf => Value::String("-inf".into()),
            ScalingDegree::Finite(r) => rat_value(r),
        }
    }
}

impl PartialOrd for ScalingDegree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScalingDegree {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ScalingDegree::NegInf, ScalingDegree::NegInf) => Ordering::Equal,
            (ScalingDegree::NegInf, _) => Ordering::Less,
            (_, ScalingDegree::NegInf) => Ordering::Greater,
            (ScalingDegree::Finite(a), ScalingDegree::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ScalingDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalingDegree::NegInf => write!(f, "-inf"),
            ScalingDegree::Finite(r) => write!(f, "{}", rat_string(r)),
        }
    }
}

/// Scaling degree toward the origin of the k-dimensional relative space.
/// Logs and mass factors never contribute; deltas contribute their own
/// dimension plus derivative order; moment contractions are degree-neutral.
pub fn scaling_degree(e: &Expr, k: u32) -> Result<ScalingDegree> {
    let _ = k;
    let mut sd = ScalingDegree::NegInf;
    for t in e.terms() {
        sd = sd.max(ScalingDegree::Finite(term_sd(t)?));
    }
    Ok(sd)
}

fn term_sd(t: &Term) -> Result<Rat> {
    let mut acc = rat_int(0);
    for gp in t.mono.groups.values() {
        acc -= gp.inv.rat.clone() * rat_int(2);
    }
    for f in &t.factors {
        acc += factor_sd(f)?;
    }
    Ok(acc)
}

fn factor_sd(f: &Factor) -> Result<Rat> {
    Ok(match f {
        Factor::Overline { z_moment, child, .. } => {
            expr_sd_max(child)? - rat_int(*z_moment as i64)
        }
        Factor::MomentDiv { l, child, .. } => expr_sd_max(child)? + rat_int(*l as i64),
        Factor::BoxOp { child, .. } => expr_sd_max(child)? + rat_int(2),
        Factor::Delta { op, k, .. } => rat_int(*k as i64 + op.order() as i64),
        Factor::Remainder { tag, .. } => {
            return Err(Error::UnsupportedOperation(format!(
                "scaling degree of opaque remainder `{tag}` (use its stored bound instead)"
            )));
        }
    })
}

fn expr_sd_max(e: &Expr) -> Result<Rat> {
    let mut best: Option<Rat> = None;
    for t in e.terms() {
        let s = term_sd(t)?;
        best = Some(match best {
            None => s,
            Some(b) => b.max(s),
        });
    }
    best.ok_or_else(|| Error::UnsupportedForm("scaling degree of an empty child".into()))
}

/// Checks that every extension marker in the tree satisfies its constructor
/// contract: the effective degree of the marked object (child degree minus
/// the moment order) stays below the ambient dimension.
pub fn extension_markers_wellformed(e: &Expr) -> Result<()> {
    for t in e.terms() {
        for f in &t.factors {
            match f {
                Factor::Overline { k, z_moment, child } => {
                    let sd = scaling_degree(child, *k)?;
                    let bound = rat_int(*k as i64 + *z_moment as i64);
                    if let ScalingDegree::Finite(r) = &sd {
                        if *r >= bound {
                            return Err(Error::DivergentDirect {
                                sd: rat_string(r),
                                k: *k,
                            });
                        }
                    }
                    extension_markers_wellformed(child)?;
                }
                Factor::MomentDiv { child, .. } | Factor::BoxOp { child, .. } => {
                    extension_markers_wellformed(child)?;
                }
                _ => {}
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneityReport {
    pub degree: LinForm,
    /// Highest surviving log order: the annihilator order minus one.
    pub power: u32,
    pub with_mass: bool,
    pub order: u32,
}

impl HomogeneityReport {
    pub fn to_json(&self) -> Value {
        obj(vec![
            ("degree", linform_value(&self.degree)),
            ("power", Value::from(self.power)),
            ("with_mass", Value::Bool(self.with_mass)),
            ("order", Value::from(self.order)),
        ])
    }
}

/// Finds the degree D and minimal order N with `(E [- m d/dm] + D)^N e = 0`.
/// D is read off the grading of the first term; the annihilator search then
/// certifies it (or rejects the expression).
pub fn homogeneity_analyze(e: &Expr, with_mass: bool) -> Result<HomogeneityReport> {
    homogeneity_analyze_capped(e, with_mass, DEFAULT_N_MAX)
}

pub fn homogeneity_analyze_capped(
    e: &Expr,
    with_mass: bool,
    n_max: u32,
) -> Result<HomogeneityReport> {
    if e.is_zero() {
        return Ok(HomogeneityReport {
            degree: LinForm::zero(),
            power: 0,
            with_mass,
            order: 0,
        });
    }
    let degree = term_weight(&e.terms()[0], with_mass)?.neg();
    let shift = crate::coeff::Coeff::from_poly(degree.to_poly());
    let mut acc = e.clone();
    for n in 1..=n_max {
        acc = apply_euler(&acc, with_mass)?.add(&acc.scale(&shift));
        if acc.is_zero() {
            return Ok(HomogeneityReport { degree, power: n - 1, with_mass, order: n });
        }
    }
    Err(Error::NotAlmostHomogeneous {
        degree: format!("{degree}"),
        with_mass,
        n_max,
    })
}

/// Euler eigenvalue of the log-free skeleton of a term (the exact eigenvalue
/// when all log powers are stripped).
fn term_weight(t: &Term, with_mass: bool) -> Result<LinForm> {
    let mut w = LinForm::zero();
    for gp in t.mono.groups.values() {
        w = w.add(&gp.inv.scale(&rat_int(2)));
    }
    if with_mass {
        w = w.sub(&t.mono.mass);
    }
    for f in &t.factors {
        w = w.add(&factor_weight(f, with_mass)?);
    }
    Ok(w)
}

fn factor_weight(f: &Factor, with_mass: bool) -> Result<LinForm> {
    Ok(match f {
        Factor::Overline { child, .. } | Factor::MomentDiv { child, .. } => {
            child_weight(child, with_mass)?
        }
        Factor::BoxOp { child, .. } => child_weight(child, with_mass)?.add_int(-2),
        Factor::Delta { op, k, .. } => LinForm::from_int(-((*k as i64) + op.order() as i64)),
        Factor::Remainder { tag, .. } => {
            return Err(Error::UnsupportedOperation(format!(
                "scaling weight of opaque remainder `{tag}`"
            )));
        }
    })
}

fn child_weight(e: &Expr, with_mass: bool) -> Result<LinForm> {
    if e.is_zero() {
        return Ok(LinForm::zero());
    }
    term_weight(&e.terms()[0], with_mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Coeff;
    use crate::expr::{DeltaOp, Monomial};
    use crate::rat::rat;

    fn mono(n: i64, logs: u32) -> Expr {
        Expr::from_mono(Monomial::one().with_x_int(0, n).with_log_x(0, logs))
    }

    #[test]
    fn basic_degrees() {
        // log(M^2 X)/(32 X) has degree 2 in k = 4
        let e = mono(-1, 1).scale_rat(&rat(1, 32));
        assert_eq!(scaling_degree(&e, 4).unwrap(), ScalingDegree::Finite(rat_int(2)));
        // derived deltas: k + |b|
        let d = Expr::delta(DeltaOp::Box(0), 4, vec![0]);
        assert_eq!(scaling_degree(&d, 4).unwrap(), ScalingDegree::Finite(rat_int(6)));
        // zero expression
        assert_eq!(scaling_degree(&Expr::zero(), 4).unwrap(), ScalingDegree::NegInf);
        // sums take the max
        let s = mono(-3, 0).add(&mono(-1, 2));
        assert_eq!(scaling_degree(&s, 4).unwrap(), ScalingDegree::Finite(rat_int(6)));
    }

    #[test]
    fn regulator_exponents_do_not_shift_degree() {
        // X^-3 Y^-1 (M^4 X Y)^zeta in k=8 keeps degree 8
        let z = LinForm::reg_var("zeta");
        let e = Expr::from_mono(
            Monomial::one()
                .with_x_pow(1, LinForm::from_int(-3).add(&z))
                .with_x_pow(2, LinForm::from_int(-1).add(&z))
                .with_scale_form(z.scale(&rat_int(4))),
        );
        assert_eq!(scaling_degree(&e, 8).unwrap(), ScalingDegree::Finite(rat_int(8)));
    }

    #[test]
    fn moment_markers_are_degree_neutral() {
        let u = mono(-3, 0);
        let me = u.clone().moment_extension(1, 8).unwrap();
        assert_eq!(scaling_degree(&me, 8).unwrap(), scaling_degree(&u, 8).unwrap());
    }

    #[test]
    fn homogeneity_simple() {
        // a0/X: degree 2, power 0
        let e = Expr::from_mono(Monomial::one().with_coeff(Coeff::var("a0")).with_x_int(0, -1));
        let r = homogeneity_analyze(&e, false).unwrap();
        assert_eq!(r.degree, LinForm::from_int(2));
        assert_eq!(r.power, 0);
        assert_eq!(r.order, 1);
    }

    #[test]
    fn homogeneity_with_logs_and_regulators() {
        // (E + 8 + eta)^2 kills X^(-3+z) Y^(-1+z) with eta = -4z; order is 1
        // without logs, so power 0 already at the first application.
        let z = LinForm::reg_var("zeta");
        let e = Expr::from_mono(
            Monomial::one()
                .with_x_pow(1, LinForm::from_int(-3).add(&z))
                .with_x_pow(2, LinForm::from_int(-1).add(&z)),
        );
        let r = homogeneity_analyze(&e, false).unwrap();
        // degree 8 + eta with eta = -4 zeta
        let want = LinForm::from_int(8).add(&z.scale(&rat_int(-4)));
        assert_eq!(r.degree, want);
        assert_eq!(r.power, 0);
        // adding a log in X raises the order by one
        let elog = Expr::from_mono(
            Monomial::one()
                .with_x_pow(1, LinForm::from_int(-3).add(&z))
                .with_x_pow(2, LinForm::from_int(-1).add(&z))
                .with_log_x(1, 1),
        );
        let r = homogeneity_analyze(&elog, false).unwrap();
        assert_eq!(r.power, 1);
        assert_eq!(r.order, 2);
    }

    #[test]
    fn joint_scaling_of_mass_rows() {
        // m^2 log(m/M) X^-2: joint degree 6, one log to lower
        let e = Expr::from_mono(
            Monomial::one().with_mass(2).with_log_m(1).with_x_int(0, -2),
        );
        let r = homogeneity_analyze(&e, true).unwrap();
        assert_eq!(r.degree, LinForm::from_int(6));
        assert_eq!(r.power, 1);
        // x-only analysis ignores the mass log: exact degree 4
        let r = homogeneity_analyze(&e, false).unwrap();
        assert_eq!(r.degree, LinForm::from_int(4));
        assert_eq!(r.power, 0);
    }

    #[test]
    fn inhomogeneous_rejected() {
        let e = mono(-1, 0).add(&mono(-2, 0));
        assert!(matches!(
            homogeneity_analyze(&e, false),
            Err(Error::NotAlmostHomogeneous { .. })
        ));
    }

    #[test]
    fn marker_contract_checked() {
        let ok = mono(-1, 1).overline(4).unwrap();
        assert!(extension_markers_wellformed(&ok).is_ok());
        // a degree-8 object under a first-moment marker in k=8: the moment
        // lowers the effective degree to 7 < 8 + 1, so the marker is legal
        let deep = mono(-3, 0)
            .multiply(&Expr::from_mono(Monomial::one().with_x_int(1, -1)))
            .unwrap()
            .moment_extension(1, 8)
            .unwrap();
        assert!(extension_markers_wellformed(&deep).is_ok());
    }
}
