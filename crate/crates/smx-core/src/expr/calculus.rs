//! Exact operator calculus on the term algebra: the Euler operator, the wave
//! operator in a single variable group, contracted-moment reduction,
//! restriction to the complement of the origin, and dimension grading.

use super::{DeltaOp, Expr, Factor, Group, MetricConvention, Term};
use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::linform::LinForm;
use crate::rat::{rat_int, Rat};

/// Applies the Euler operator `x . d/dx` summed over all variable groups.
///
/// With `with_mass` the opposite-sign mass term `- m d/dm` is included, so the
/// result is the generator of the joint scaling `(x, m) -> (rho x, m / rho)`.
///
/// Eigenvalue rules: `E X = 2X`, `E log(M^2 X) = 2`, `E (d^b delta_k) =
/// -(k + |b|) d^b delta_k`, `[E, box] = -2 box`, and `E` commutes with
/// extension markers and moment contractions.
pub fn apply_euler(e: &Expr, with_mass: bool) -> Result<Expr> {
    let mut out = Expr::zero();
    for t in e.terms() {
        out = out.add(&euler_term(t, with_mass)?);
    }
    Ok(out)
}

fn euler_term(t: &Term, with_mass: bool) -> Result<Expr> {
    let mut out = Expr::zero();
    for (g, gp) in &t.mono.groups {
        if !gp.inv.is_zero() {
            let c = Coeff::from_poly(gp.inv.scale(&rat_int(2)).to_poly());
            out = out.add(&Expr::from_term(t.clone()).scale(&c));
        }
        if gp.log > 0 {
            let mut t2 = t.clone();
            t2.mono.groups.get_mut(g).expect("group present").log -= 1;
            t2.mono.coeff = t2.mono.coeff.scale(&rat_int(2 * gp.log as i64));
            out = out.add(&Expr::from_term(t2));
        }
    }
    if with_mass {
        if !t.mono.mass.is_zero() {
            let c = Coeff::from_poly(t.mono.mass.neg().to_poly());
            out = out.add(&Expr::from_term(t.clone()).scale(&c));
        }
        if t.mono.log_m > 0 {
            let mut t2 = t.clone();
            t2.mono.log_m -= 1;
            t2.mono.coeff = t2.mono.coeff.scale(&rat_int(-(t.mono.log_m as i64)));
            out = out.add(&Expr::from_term(t2));
        }
    }
    for (i, f) in t.factors.iter().enumerate() {
        match f {
            Factor::Overline { child, .. } | Factor::MomentDiv { child, .. } => {
                let mut t2 = t.clone();
                match &mut t2.factors[i] {
                    Factor::Overline { child: c, .. } | Factor::MomentDiv { child: c, .. } => {
                        *c = apply_euler(child, with_mass)?;
                    }
                    _ => unreachable!(),
                }
                out = out.add(&Expr::from_term(t2));
            }
            Factor::BoxOp { child, .. } => {
                let mut t2 = t.clone();
                if let Factor::BoxOp { child: c, .. } = &mut t2.factors[i] {
                    *c = apply_euler(child, with_mass)?;
                }
                out = out.add(&Expr::from_term(t2));
                let mut t3 = t.clone();
                t3.mono.coeff = t3.mono.coeff.scale(&rat_int(-2));
                out = out.add(&Expr::from_term(t3));
            }
            Factor::Delta { op, k, .. } => {
                let eigen = -((*k as i64) + op.order() as i64);
                let mut t2 = t.clone();
                t2.mono.coeff = t2.mono.coeff.scale(&rat_int(eigen));
                out = out.add(&Expr::from_term(t2));
            }
            Factor::Remainder { tag, .. } => {
                return Err(Error::UnsupportedOperation(format!(
                    "Euler operator applied to opaque remainder `{tag}`"
                )));
            }
        }
    }
    Ok(out)
}

/// `(E + shift)^n expr` with the Euler operator of [`apply_euler`].
pub fn euler_shift_pow(e: &Expr, with_mass: bool, shift: &Rat, n: u32) -> Result<Expr> {
    let mut acc = e.clone();
    for _ in 0..n {
        acc = apply_euler(&acc, with_mass)?.add(&acc.scale_rat(shift));
    }
    Ok(acc)
}

/// Applies the wave operator of one variable group.
///
/// Monomial dependence is differentiated in closed form through
/// `box f(X) = 2s (d f' + 2X f'')`; when the group enters only through a
/// single structural factor the operator stays formal (a `BoxOp` wrapper for
/// extension markers, operator composition for deltas). Mixed products would
/// need gradient cross terms and are refused.
pub fn apply_box(conv: &MetricConvention, group: Group, e: &Expr) -> Result<Expr> {
    let mut out = Expr::zero();
    for t in e.terms() {
        let involved: Vec<usize> = t
            .factors
            .iter()
            .enumerate()
            .filter(|(_, f)| f.groups().contains(&group))
            .map(|(i, _)| i)
            .collect();
        let gp = t.mono.group(group);
        match (involved.len(), gp.is_trivial()) {
            (0, true) => {}
            (0, false) => out = out.add(&box_mono(conv, group, t)),
            (1, true) => out = out.add(&box_factor(conv, group, t, involved[0])?),
            _ => {
                return Err(Error::UnsupportedDerivative(format!(
                    "wave operator on a mixed product in group {group}: `{t}`"
                )));
            }
        }
    }
    Ok(out)
}

/// `box^n` in one group.
pub fn apply_box_pow(conv: &MetricConvention, group: Group, e: &Expr, n: u32) -> Result<Expr> {
    let mut acc = e.clone();
    for _ in 0..n {
        acc = apply_box(conv, group, &acc)?;
    }
    Ok(acc)
}

fn box_mono(conv: &MetricConvention, group: Group, t: &Term) -> Expr {
    let gp = t.mono.group(group);
    let a = &gp.inv;
    let q = gp.log;
    let two_s = rat_int(2 * conv.s as i64);
    let d = conv.d as i64;

    let mut pieces: Vec<(Coeff, u32)> = Vec::new();
    let lead = Coeff::from_poly(a.to_poly().mul(&a.scale(&rat_int(2)).add_int(d - 2).to_poly()));
    if !lead.is_zero() {
        pieces.push((lead, 0));
    }
    if q >= 1 {
        let c = Coeff::from_poly(a.scale(&rat_int(4)).add_int(d - 2).to_poly())
            .scale(&rat_int(q as i64));
        if !c.is_zero() {
            pieces.push((c, 1));
        }
    }
    if q >= 2 {
        pieces.push((Coeff::from_rat(rat_int(2 * q as i64 * (q as i64 - 1))), 2));
    }

    let mut out = Expr::zero();
    for (c, log_drop) in pieces {
        let mut t2 = t.clone();
        t2.mono.coeff = t2.mono.coeff.mul(&c).scale(&two_s);
        let e = t2.mono.groups.entry(group).or_default();
        e.inv = e.inv.add_int(-1);
        e.log = q - log_drop;
        out = out.add(&Expr::from_term(t2));
    }
    out
}

fn box_factor(conv: &MetricConvention, group: Group, t: &Term, idx: usize) -> Result<Expr> {
    let _ = conv;
    let mut t2 = t.clone();
    match &mut t2.factors[idx] {
        f @ (Factor::Overline { .. } | Factor::MomentDiv { .. } | Factor::BoxOp { .. }) => {
            let inner = Expr::from_term(Term::from_factor(f.clone()));
            *f = Factor::BoxOp { group, child: inner };
            Ok(Expr::from_term(t2))
        }
        Factor::Delta { op, .. } => match op {
            DeltaOp::Id => {
                *op = DeltaOp::Box(group);
                Ok(Expr::from_term(t2))
            }
            _ => Err(Error::UnsupportedDerivative(format!(
                "wave operator composed onto already-derived delta in `{t}`"
            ))),
        },
        Factor::Remainder { tag, .. } => Err(Error::UnsupportedDerivative(format!(
            "wave operator applied to opaque remainder `{tag}`"
        ))),
    }
}

/// Reduces the contracted moment operator on an expression defined everywhere:
/// `d^l (z^l expr) = prod_{j=0}^{l-1} (k + j + E) expr`.
pub fn moment_div_reduce(l: u32, e: &Expr, k: u32) -> Result<Expr> {
    let mut acc = e.clone();
    for j in 0..l {
        acc = apply_euler(&acc, false)?.add(&acc.scale_rat(&rat_int(k as i64 + j as i64)));
    }
    Ok(acc)
}

/// Evaluates the expression on the complement of the total origin: deltas
/// at the origin drop, extension markers anchored there unwrap, moment
/// contractions reduce through the Euler identity, wave operators on
/// plain content differentiate. Markers and deltas of lower-dimensional
/// subproblems live on sets meeting the complement and pass through
/// untouched, as do wave operators acting on them.
pub fn restrict_away(e: &Expr, conv: &MetricConvention) -> Result<Expr> {
    let mut out = Expr::zero();
    'terms: for t in e.terms() {
        let mut acc = Expr::from_mono(t.mono.clone());
        for f in &t.factors {
            let piece = match f {
                Factor::Delta { k, .. } if *k == conv.k => continue 'terms,
                Factor::Delta { .. } | Factor::Remainder { .. } => {
                    Expr::from_term(Term::from_factor(f.clone()))
                }
                Factor::Overline { k, .. } if *k != conv.k => {
                    Expr::from_term(Term::from_factor(f.clone()))
                }
                Factor::Overline { z_moment: 0, child, .. } => restrict_away(child, conv)?,
                Factor::Overline { z_moment, .. } => {
                    return Err(Error::UnsupportedForm(format!(
                        "moment marker z^{z_moment} outside a matching contraction"
                    )));
                }
                Factor::MomentDiv { k, .. } if *k != conv.k => {
                    Expr::from_term(Term::from_factor(f.clone()))
                }
                Factor::MomentDiv { l, k, child } => {
                    let inner = unwrap_moment(child, *l)?;
                    moment_div_reduce(*l, &restrict_away(&inner, conv)?, *k)?
                }
                Factor::BoxOp { group, child } => {
                    let inner = restrict_away(child, conv)?;
                    if inner.terms().iter().any(|t| !t.factors.is_empty()) {
                        Expr::box_op(*group, inner)
                    } else {
                        apply_box(conv, *group, &inner)?
                    }
                }
            };
            acc = acc.multiply(&piece)?;
        }
        out = out.add(&acc);
    }
    Ok(out)
}

fn unwrap_moment(child: &Expr, l: u32) -> Result<Expr> {
    let mut out = Expr::zero();
    for t in child.terms() {
        if t.factors.len() == 1 {
            if let Factor::Overline { z_moment, child: inner, .. } = &t.factors[0] {
                if *z_moment != l {
                    return Err(Error::UnsupportedForm(format!(
                        "moment contraction of order {l} over a marker of order {z_moment}"
                    )));
                }
                out = out.add(&inner.clone().multiply(&Expr::from_mono(t.mono.clone()))?);
                continue;
            }
        }
        out = out.add(&Expr::from_term(t.clone()));
    }
    Ok(out)
}

/// Physical mass dimension, additive over products: `dim X = -2`,
/// `dim m = dim M = 1`, logs are dimensionless, a delta over a k-dimensional
/// space has dimension k plus the order of its derivative, opaque remainders
/// report their stored degree. The zero expression reports dimension 0.
pub fn mass_dimension(e: &Expr) -> Result<LinForm> {
    let mut dim: Option<LinForm> = None;
    let mut witness = String::new();
    for t in e.terms() {
        let d = term_dimension(t)?;
        match &dim {
            None => {
                dim = Some(d);
                witness = format!("{t}");
            }
            Some(prev) if *prev == d => {}
            Some(_) => {
                return Err(Error::InhomogeneousDimension(witness, format!("{t}")));
            }
        }
    }
    Ok(dim.unwrap_or_else(LinForm::zero))
}

fn term_dimension(t: &Term) -> Result<LinForm> {
    let mut d = t.mono.mass.add(&t.mono.scale);
    for gp in t.mono.groups.values() {
        d = d.add(&gp.inv.scale(&rat_int(-2)));
    }
    for f in &t.factors {
        d = d.add(&factor_dimension(f)?);
    }
    Ok(d)
}

fn factor_dimension(f: &Factor) -> Result<LinForm> {
    Ok(match f {
        Factor::Overline { child, .. } => mass_dimension(child)?,
        Factor::MomentDiv { child, .. } => mass_dimension(child)?,
        Factor::BoxOp { child, .. } => mass_dimension(child)?.add_int(2),
        Factor::Delta { op, k, .. } => LinForm::from_int(*k as i64 + op.order() as i64),
        Factor::Remainder { degree, .. } => degree.clone(),
    })
}
