//! Laurent expansion in an analytic regulator.
//!
//! The regulator enters expressions in three places: exponents of the
//! invariants (paired with compensating scale powers so that
//! `(M^2 X)^(w zeta)` expands into powers of `log(M^2 X)`), exponents of the
//! mass (paired the same way into `log(m/M)` powers), and rational-function
//! coefficients. Marker children are expanded recursively, with the marker
//! rewrapped around each coefficient.

use crate::error::{Error, Result};
use crate::expr::{Expr, Factor, Monomial, Term};
use crate::json::{obj, to_json_string};
use crate::linform::LinForm;
use crate::rat::{rat_int, Rat};
use num::{One, Zero};
use serde_json::Value;
use std::collections::BTreeMap;

type Series = BTreeMap<i64, Expr>;

#[derive(Clone, Debug)]
pub struct LaurentSeries {
    pub regulator: String,
    /// Highest exponent computed; asking beyond it is an error.
    pub truncation: i64,
    pub coeffs: BTreeMap<i64, Expr>,
}

impl LaurentSeries {
    pub fn min_exponent(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn pole_order(&self) -> u32 {
        match self.min_exponent() {
            Some(n) if n < 0 => (-n) as u32,
            _ => 0,
        }
    }

    pub fn coeff(&self, n: i64) -> Result<Expr> {
        if n > self.truncation {
            return Err(Error::TruncationTooSmall { requested: n, truncation: self.truncation });
        }
        Ok(self.coeffs.get(&n).cloned().unwrap_or_else(Expr::zero))
    }

    pub fn principal_part(&self) -> Vec<(i64, Expr)> {
        self.coeffs.iter().filter(|(n, _)| **n < 0).map(|(n, e)| (*n, e.clone())).collect()
    }

    pub fn to_json(&self) -> Value {
        obj(vec![
            ("regulator", Value::String(self.regulator.clone())),
            ("truncation", Value::from(self.truncation)),
            (
                "terms",
                Value::Array(
                    self.coeffs
                        .iter()
                        .map(|(n, e)| {
                            obj(vec![("exp", Value::from(*n)), ("expr", e.to_json())])
                        })
                        .collect(),
                ),
            ),
        ])
    }

    pub fn to_json_string(&self) -> String {
        to_json_string(&self.to_json())
    }
}

pub fn laurent_expand(e: &Expr, regulator: &str, order: i64) -> Result<LaurentSeries> {
    let mut total: Series = BTreeMap::new();
    for t in e.terms() {
        for (n, ex) in term_series(t, regulator, order)? {
            let slot = total.entry(n).or_insert_with(Expr::zero);
            *slot = slot.add(&ex);
        }
    }
    total.retain(|_, ex| !ex.is_zero());
    Ok(LaurentSeries { regulator: regulator.to_string(), truncation: order, coeffs: total })
}

fn strip(form: &LinForm, reg: &str) -> (LinForm, Rat) {
    let mut out = form.clone();
    let w = out.reg.remove(reg).unwrap_or_else(Rat::zero);
    (out, w)
}

/// The regulator can hide in coefficients of arbitrarily nested marker
/// children, not only in exponents, so the exponent-level listing is not
/// enough here.
fn depends_on_reg(e: &Expr, reg: &str) -> bool {
    e.terms().iter().any(|t| {
        t.mono.coeff.depends_on(reg)
            || t.mono.mass.reg.contains_key(reg)
            || t.mono.scale.reg.contains_key(reg)
            || t.mono.groups.values().any(|gp| gp.inv.reg.contains_key(reg))
            || t.factors
                .iter()
                .any(|f| f.child().map(|c| depends_on_reg(c, reg)).unwrap_or(false))
    })
}

fn expr_laurent_min(e: &Expr, reg: &str) -> Result<i64> {
    let mut best = 0i64;
    for t in e.terms() {
        let mut m = if t.mono.coeff.depends_on(reg) { t.mono.coeff.laurent_min(reg)? } else { 0 };
        for f in &t.factors {
            if let Factor::Overline { child, .. }
            | Factor::MomentDiv { child, .. }
            | Factor::BoxOp { child, .. } = f
            {
                if depends_on_reg(child, reg) {
                    m += expr_laurent_min(child, reg)?;
                }
            }
        }
        best = best.min(m);
    }
    Ok(best)
}

fn mul_series(a: &Series, b: &Series, order: i64) -> Result<Series> {
    let mut out: Series = BTreeMap::new();
    for (i, ea) in a {
        for (j, eb) in b {
            let n = i + j;
            if n > order {
                continue;
            }
            let prod = ea.multiply(eb)?;
            let slot = out.entry(n).or_insert_with(Expr::zero);
            *slot = slot.add(&prod);
        }
    }
    out.retain(|_, ex| !ex.is_zero());
    Ok(out)
}

/// Series of `exp(w zeta S)` where `S` is the single-site log expression.
fn exp_site_series(site: &Monomial, w: &Rat, order: i64) -> Series {
    let mut out: Series = BTreeMap::new();
    let mut fact = Rat::one();
    let mut power = Rat::one();
    let mut mono = Monomial::one();
    for n in 0..=order.max(0) {
        if n > 0 {
            fact *= rat_int(n);
            power *= w;
            mono = mono.mul(site);
        }
        let c = &power / &fact;
        if c.is_zero() {
            continue;
        }
        out.insert(n, Expr::from_mono(mono.clone().with_coeff(crate::coeff::Coeff::from_rat(c))));
    }
    out
}

fn rewrap(f: &Factor, child: Expr) -> Factor {
    match f {
        Factor::Overline { k, z_moment, .. } => {
            Factor::Overline { k: *k, z_moment: *z_moment, child }
        }
        Factor::MomentDiv { l, k, .. } => Factor::MomentDiv { l: *l, k: *k, child },
        Factor::BoxOp { group, .. } => Factor::BoxOp { group: *group, child },
        other => other.clone(),
    }
}

fn term_series(t: &Term, reg: &str, order: i64) -> Result<Series> {
    // Exact lowest exponents first, so each component gets a tight budget.
    let coeff_min =
        if t.mono.coeff.depends_on(reg) { t.mono.coeff.laurent_min(reg)? } else { 0 };
    let mut child_mins: Vec<i64> = Vec::with_capacity(t.factors.len());
    for f in &t.factors {
        let m = match f {
            Factor::Overline { child, .. }
            | Factor::MomentDiv { child, .. }
            | Factor::BoxOp { child, .. }
                if depends_on_reg(child, reg) => {
                    expr_laurent_min(child, reg)?
                }
            _ => 0,
        };
        child_mins.push(m);
    }
    let total_min = coeff_min + child_mins.iter().sum::<i64>();
    if total_min > order {
        return Ok(BTreeMap::new());
    }

    // (lowest exponent, series) per component; budgets leave room for the
    // poles of the other components.
    let mut components: Vec<(i64, Series)> = Vec::new();

    // Rational-function coefficient.
    let coeff_in_base = !t.mono.coeff.depends_on(reg);
    if !coeff_in_base {
        let budget = order - (total_min - coeff_min);
        let (min, polys) = t.mono.coeff.laurent(reg, budget)?;
        let mut s: Series = BTreeMap::new();
        for (i, p) in polys.into_iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            s.insert(min + i as i64, Expr::constant(crate::coeff::Coeff::from_poly(p)));
        }
        components.push((coeff_min, s));
    }

    // Regulator exponents of the monomial: each invariant power
    // `X_g^(w zeta)` must come with scale `M^(2 w zeta)`, each mass power
    // `m^(w zeta)` with scale `M^(-w zeta)`; the leftover scale weight has
    // no log primitive.
    let exp_budget = order - total_min;
    let (mass_stripped, w_m) = strip(&t.mono.mass, reg);
    let (scale_stripped, w_s) = strip(&t.mono.scale, reg);
    let mut base = t.mono.clone();
    if !coeff_in_base {
        base.coeff = crate::coeff::Coeff::one();
    }
    base.mass = mass_stripped;
    base.scale = scale_stripped;
    let mut group_weights: Vec<(crate::expr::Group, Rat)> = Vec::new();
    for (g, pows) in &t.mono.groups {
        let (inv_stripped, w_g) = strip(&pows.inv, reg);
        base = base.with_x_pow(*g, inv_stripped);
        if !w_g.is_zero() {
            group_weights.push((*g, w_g));
        }
    }
    let residual = &w_s - &(rat_int(2) * group_weights.iter().fold(Rat::zero(), |a, (_, w)| a + w)) + &w_m;
    if !residual.is_zero() {
        return Err(Error::UnsupportedForm(format!(
            "scale weight {} of the regulator has no log primitive",
            residual
        )));
    }
    for (g, w) in &group_weights {
        let site = Monomial::one().with_log_x(*g, 1);
        components.push((0, exp_site_series(&site, w, exp_budget)));
    }
    if !w_m.is_zero() {
        let site = Monomial::one().with_log_m(1);
        components.push((0, exp_site_series(&site, &w_m, exp_budget)));
    }

    // Marker children carrying the regulator.
    let mut plain_factors: Vec<Factor> = Vec::new();
    for (f, cm) in t.factors.iter().zip(&child_mins) {
        let has_reg = matches!(
            f,
            Factor::Overline { child, .. }
            | Factor::MomentDiv { child, .. }
            | Factor::BoxOp { child, .. } if depends_on_reg(child, reg)
        );
        if !has_reg {
            plain_factors.push(f.clone());
            continue;
        }
        let child = match f {
            Factor::Overline { child, .. }
            | Factor::MomentDiv { child, .. }
            | Factor::BoxOp { child, .. } => child,
            _ => unreachable!(),
        };
        let budget = order - (total_min - cm);
        let sub = laurent_expand(child, reg, budget)?;
        let mut s: Series = BTreeMap::new();
        for (n, ce) in sub.coeffs {
            s.insert(
                n,
                Expr::from_term(Term { mono: Monomial::one(), factors: vec![rewrap(f, ce)] }),
            );
        }
        components.push((*cm, s));
    }

    let mut acc: Series = BTreeMap::new();
    acc.insert(0, Expr::from_term(Term { mono: base, factors: plain_factors }));
    let mut remaining: i64 = components.iter().map(|(m, _)| m).sum();
    for (min_i, comp) in &components {
        remaining -= min_i;
        acc = mul_series(&acc, comp, order - remaining)?;
        if acc.is_empty() {
            return Ok(acc);
        }
    }
    Ok(acc)
}
