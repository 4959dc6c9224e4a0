//! Extension of distributions across the origin of a variable group.
//!
//! Four routes, picked by the divergence and the shape of the input:
//! already-integrable inputs get a direct marker; integer powers of a
//! single invariant are pulled out of wave operators acting on milder
//! objects; almost homogeneous inputs of non-resonant degree get exact
//! moment weights; resonant degrees go through an analytic regulator and
//! minimal subtraction. Every renormalizing route reports the local
//! counterterm span alongside the particular solution it picked.

pub mod counterterms;
pub mod laurent;
pub mod moments;

pub use counterterms::{counterterm_basis, invariant_delta_ops, CtFlags};
pub use laurent::{laurent_expand, LaurentSeries};
pub use moments::{moment_certificate, moment_solver, specialize_moments, MomentSolution};

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::expr::calculus::restrict_away;
use crate::expr::{Expr, Group, MetricConvention, Monomial};
use crate::linform::LinForm;
use crate::poly::CoeffPoly;
use crate::rat::{rat_int, rat_string, Rat};
use crate::scaling::{homogeneity_analyze, scaling_degree, HomogeneityReport, ScalingDegree};
use crate::smx::{SmExpansion, SmRow};
use num::{One, ToPrimitive, Zero};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionMethod {
    Direct,
    DiffRenorm,
    Moment,
    MinimalSubtraction,
}

impl ExtensionMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExtensionMethod::Direct => "direct",
            ExtensionMethod::DiffRenorm => "diffren",
            ExtensionMethod::Moment => "moment",
            ExtensionMethod::MinimalSubtraction => "ms",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExtensionResult {
    pub extended: Expr,
    /// Span of the local ambiguity; empty when the extension is unique.
    pub counterterms: Vec<Expr>,
    pub method: ExtensionMethod,
    pub report: Option<HomogeneityReport>,
    /// Order of the regulator pole that was subtracted (minimal subtraction
    /// only).
    pub pole_order: u32,
}

/// Extension of an input that is already integrable at the origin: wrap it
/// in a direct-extension marker. Divergent inputs are refused.
pub fn direct_extend(e: &Expr, k: u32) -> Result<ExtensionResult> {
    let sd = scaling_degree(e, k)?;
    if let ScalingDegree::Finite(r) = &sd {
        if !(*r < rat_int(k as i64)) {
            return Err(Error::DivergentDirect { sd: rat_string(r), k });
        }
    }
    let report = homogeneity_analyze(e, false).ok();
    Ok(ExtensionResult {
        extended: e.clone().overline(k)?,
        counterterms: Vec::new(),
        method: ExtensionMethod::Direct,
        report,
        pole_order: 0,
    })
}

/// A bare log-polynomial over one invariant: group, power `a` in `X^(-a)`,
/// and the log coefficients.
struct InversePowerForm {
    group: Group,
    a: i64,
    logpoly: Vec<Coeff>,
}

fn parse_inverse_power(u: &Expr) -> Option<InversePowerForm> {
    let groups = u.groups();
    if groups.len() != 1 || u.is_zero() {
        return None;
    }
    let g = *groups.iter().next().unwrap();
    let mut a: Option<i64> = None;
    let mut logpoly: Vec<Coeff> = Vec::new();
    for t in u.terms() {
        if !t.factors.is_empty()
            || !t.mono.mass.is_zero()
            || t.mono.log_m != 0
            || !t.mono.scale.is_zero()
        {
            return None;
        }
        let pows = t.mono.groups.get(&g)?;
        if !pows.inv.is_pure_rat() || !pows.inv.rat.is_integer() {
            return None;
        }
        let this_a = -pows.inv.rat.to_integer().to_i64()?;
        match a {
            None => a = Some(this_a),
            Some(prev) if prev == this_a => {}
            _ => return None,
        }
        let q = pows.log as usize;
        if logpoly.len() <= q {
            logpoly.resize(q + 1, Coeff::zero());
        }
        logpoly[q] = logpoly[q].add(&t.mono.coeff);
    }
    Some(InversePowerForm { group: g, a: a?, logpoly })
}

/// One inverse-power reduction: the log polynomial `g` at `X^(1-a)` with
/// `box g` equal to the input at `X^(-a)`. At `a = 2` the solvable span
/// starts at log power one; the free constant there is fixed to zero.
fn solve_box_step(conv: &MetricConvention, a: i64, t: &[Coeff]) -> Result<Vec<Coeff>> {
    let d = conv.d as i64;
    let b = 1 - a;
    let two_s = rat_int(2 * conv.s as i64);
    let beta = |q: i64| rat_int(q * (d + 4 * b - 2));
    let gamma = |q: i64| rat_int(2 * q * (q - 1));
    let alpha = rat_int(b * (d + 2 * b - 2));
    let at = |v: &Vec<Coeff>, i: i64| -> Coeff {
        if i >= 0 && (i as usize) < v.len() { v[i as usize].clone() } else { Coeff::zero() }
    };
    if alpha.is_zero() {
        let mut c = vec![Coeff::zero(); t.len() + 1];
        for q in (0..t.len() as i64).rev() {
            let num = t[q as usize]
                .scale(&(Rat::from_integer(1.into()) / &two_s))
                .sub(&at(&c, q + 2).scale(&gamma(q + 2)));
            let denom = beta(q + 1);
            if denom.is_zero() {
                return Err(Error::UnsupportedForm("degenerate log ladder".into()));
            }
            c[(q + 1) as usize] = num.scale(&(Rat::from_integer(1.into()) / denom));
        }
        Ok(c)
    } else {
        let mut c = vec![Coeff::zero(); t.len()];
        for q in (0..t.len() as i64).rev() {
            let num = t[q as usize]
                .scale(&(Rat::from_integer(1.into()) / &two_s))
                .sub(&at(&c, q + 1).scale(&beta(q + 1)))
                .sub(&at(&c, q + 2).scale(&gamma(q + 2)));
            c[q as usize] = num.scale(&(Rat::from_integer(1.into()) / &alpha));
        }
        Ok(c)
    }
}

fn logpoly_expr(group: Group, xpow: i64, coeffs: &[Coeff]) -> Expr {
    let mut acc = Expr::zero();
    for (q, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        acc = acc.add(&Expr::from_mono(
            Monomial::one()
                .with_coeff(c.clone())
                .with_x_int(group, xpow)
                .with_log_x(group, q as u32),
        ));
    }
    acc
}

/// Differential renormalization of `X^(-a)` log polynomials in four
/// dimensions: peel wave operators until the residual power is integrable,
/// then mark the direct extension. The ambiguity is the delta span of
/// derivative order `sd - 4`.
pub fn diff_renorm_extend(conv: &MetricConvention, u0: &Expr) -> Result<ExtensionResult> {
    if conv.d != 4 {
        return Err(Error::UnsupportedGeometry(format!(
            "inverse-power peeling needs d = 4, got d = {}",
            conv.d
        )));
    }
    let k = 4u32;
    let form = parse_inverse_power(u0).ok_or_else(|| {
        Error::UnsupportedForm("input is not a log polynomial over one inverse power".into())
    })?;
    if form.a < 2 {
        return Err(Error::UnsupportedForm(format!(
            "inverse power {} is already integrable, use the direct extension",
            form.a
        )));
    }
    let sd0 = 2 * form.a;
    let mut a = form.a;
    let mut poly = form.logpoly;
    let mut boxes = 0u32;
    while 2 * a >= k as i64 {
        poly = solve_box_step(conv, a, &poly)?;
        a -= 1;
        boxes += 1;
    }
    let core = logpoly_expr(form.group, -a, &poly);
    let mut extended = core.overline(k)?;
    for _ in 0..boxes {
        extended = Expr::box_op(form.group, extended);
    }
    let order = (sd0 - k as i64) as u32;
    let counterterms =
        invariant_delta_ops(order, k, &[form.group], &CtFlags::default());
    let report = homogeneity_analyze(&extended, false).ok();
    Ok(ExtensionResult {
        extended,
        counterterms,
        method: ExtensionMethod::DiffRenorm,
        report,
        pole_order: 0,
    })
}

fn divergence_shift(sd: &ScalingDegree, k: u32) -> Option<Rat> {
    match sd {
        ScalingDegree::Finite(r) if *r >= rat_int(k as i64) => Some(r - rat_int(k as i64)),
        _ => None,
    }
}

fn moment_orders(c: &Rat) -> u32 {
    // floor(c) + 1
    (c.floor().to_integer().to_i64().unwrap() + 1) as u32
}

fn assemble_moment_extension(
    v: &Expr,
    k: u32,
    weights: &[(u32, Coeff)],
) -> Result<Expr> {
    let mut extended = Expr::zero();
    for (l, w) in weights {
        let piece = v.clone().moment_extension(*l, k)?;
        extended = extended.add(&piece.scale(w));
    }
    Ok(extended)
}

fn check_restriction(extended: &Expr, target: &Expr, conv: &MetricConvention) -> Result<()> {
    let back = restrict_away(extended, conv)?;
    if &back != target {
        return Err(Error::UnsupportedOperation(format!(
            "restriction identity violated: expected {target}, recovered {back}"
        )));
    }
    Ok(())
}

/// Exact homogeneous extension for non-resonant degrees: moment weights
/// evaluated at regulator offset zero. Resonant degrees surface as
/// `ResonantDegree` from the specialization.
pub fn homogeneous_extend(conv: &MetricConvention, v0: &Expr) -> Result<ExtensionResult> {
    let k = conv.k;
    let sd = scaling_degree(v0, k)?;
    let c = match divergence_shift(&sd, k) {
        None => return direct_extend(v0, k),
        Some(c) => c,
    };
    let rep = homogeneity_analyze(v0, false)?;
    let sol = moment_solver(rep.order, moment_orders(&c), &c, "eta", k)?;
    let weights = specialize_moments(&sol, &Rat::zero())?;
    let extended = assemble_moment_extension(v0, k, &weights)?;
    check_restriction(&extended, v0, conv)?;
    let report = homogeneity_analyze(&extended, false).ok();
    Ok(ExtensionResult {
        extended,
        counterterms: Vec::new(),
        method: ExtensionMethod::Moment,
        report,
        pole_order: 0,
    })
}

/// Regularized extension: multiply by `(M^(2 nv) prod X_g)^zeta`, solve for
/// moment weights over the rational functions of the regulator offset, and
/// assemble. The result is exact in the regulator; its restriction to the
/// punctured space reproduces the regularized input, which is verified
/// before returning.
pub fn regularized_extend(
    conv: &MetricConvention,
    v0: &Expr,
    zeta: &str,
    reg_groups: Option<&BTreeSet<Group>>,
) -> Result<ExtensionResult> {
    let k = conv.k;
    let sd = scaling_degree(v0, k)?;
    let c = match divergence_shift(&sd, k) {
        None => return direct_extend(v0, k),
        Some(c) => c,
    };
    let groups = match reg_groups {
        Some(gs) => gs.clone(),
        None => v0.groups(),
    };
    if groups.is_empty() {
        return Err(Error::UnsupportedForm("no variable group to regularize".into()));
    }
    let nv = groups.len() as i64;
    let mut reg_mono = Monomial::one().with_scale_form(LinForm::reg_term(zeta, rat_int(2 * nv)));
    for g in &groups {
        reg_mono = reg_mono.with_x_pow(*g, LinForm::reg_var(zeta));
    }
    let vz = v0.multiply(&Expr::from_mono(reg_mono))?;
    let rep = homogeneity_analyze(&vz, false)?;
    let sol = moment_solver(rep.order, moment_orders(&c), &c, "eta", k)?;
    let eta_of_zeta = CoeffPoly::var(zeta).scale(&rat_int(-2 * nv));
    let weights: Vec<(u32, Coeff)> =
        sol.coeffs.iter().map(|(l, w)| (*l, w.subst("eta", &eta_of_zeta))).collect();
    let extended = assemble_moment_extension(&vz, k, &weights)?;
    check_restriction(&extended, &vz, conv)?;
    let report = homogeneity_analyze(&extended, false).ok();
    Ok(ExtensionResult {
        extended,
        counterterms: Vec::new(),
        method: ExtensionMethod::Moment,
        report,
        pole_order: 0,
    })
}

/// Minimal subtraction: drop the principal part of the Laurent expansion
/// and keep the regulator-free coefficient. The counterterm span is the
/// delta basis of the finite part's degree.
pub fn minimal_subtract(
    e: &Expr,
    regulator: &str,
    k: u32,
    ct_groups: &[Group],
    p_max: u32,
    flags: &CtFlags,
) -> Result<ExtensionResult> {
    let series = laurent_expand(e, regulator, 0)?;
    let extended = series.coeff(0)?;
    let pole_order = series.pole_order();
    let report = homogeneity_analyze(&extended, false).ok();
    let counterterms = match &report {
        Some(rep) if rep.degree.is_pure_rat() && rep.degree.rat.is_integer() => {
            let d_total = rep.degree.rat.to_integer().to_i64().unwrap();
            counterterm_basis(d_total, k, ct_groups, p_max, flags)
        }
        _ => Vec::new(),
    };
    Ok(ExtensionResult {
        extended,
        counterterms,
        method: ExtensionMethod::MinimalSubtraction,
        report,
        pole_order,
    })
}

/// Log-polynomial that minimal subtraction attaches inside each moment
/// marker: substituting the regulator for the offset symbol and expanding
/// against the regulator exponential, the finite part collects
/// `sum_j gamma_(-j) L^j / j!` where gamma are the Laurent coefficients of
/// the moment weight and L the total regulator log. Returned per moment
/// order as coefficients by ascending log power.
pub fn ms_brackets(
    sol: &MomentSolution,
    zeta: &str,
    nv: u32,
) -> Result<Vec<(u32, Vec<Rat>)>> {
    let eta_of_zeta = CoeffPoly::var(zeta).scale(&rat_int(-2 * nv as i64));
    let mut out = Vec::new();
    for (l, w) in &sol.coeffs {
        let wz = w.subst(&sol.eta, &eta_of_zeta);
        let (min_exp, coeffs) = wz.laurent(zeta, 0)?;
        let pole = (-min_exp).max(0) as usize;
        let mut bracket = vec![Rat::zero(); pole + 1];
        let mut fact = Rat::one();
        for (j, slot) in bracket.iter_mut().enumerate() {
            if j > 0 {
                fact *= rat_int(j as i64);
            }
            let idx = -(j as i64) - min_exp;
            if idx >= 0 && (idx as usize) < coeffs.len() {
                let gamma = coeffs[idx as usize].as_constant().ok_or_else(|| {
                    Error::UnsupportedOperation(
                        "moment weight keeps symbolic content after the regulator substitution"
                            .into(),
                    )
                })?;
                *slot = gamma / fact.clone();
            }
        }
        out.push((*l, bracket));
    }
    Ok(out)
}

/// Dispatch for a single coefficient: direct when integrable, inverse-power
/// peeling when the input is a bare integer power in four dimensions, exact
/// moments when non-resonant, regularization plus minimal subtraction when
/// resonant.
pub fn extend_row(
    conv: &MetricConvention,
    u: &Expr,
    zeta: &str,
    ct_groups: &[Group],
    p_max: u32,
    flags: &CtFlags,
) -> Result<ExtensionResult> {
    let k = conv.k;
    let sd = scaling_degree(u, k)?;
    let c = match divergence_shift(&sd, k) {
        None => return direct_extend(u, k),
        Some(c) => c,
    };
    if k == 4 && conv.d == 4 {
        if let Some(form) = parse_inverse_power(u) {
            if form.a >= 2 {
                return diff_renorm_extend(conv, u);
            }
        }
    }
    if !c.is_integer() {
        return homogeneous_extend(conv, u);
    }
    let reg = regularized_extend(conv, u, zeta, None)?;
    minimal_subtract(&reg.extended, zeta, k, ct_groups, p_max, flags)
}

#[derive(Clone, Debug)]
pub struct RowExtension {
    pub l: u32,
    pub p: u32,
    pub method: ExtensionMethod,
    pub pole_order: u32,
}

#[derive(Clone, Debug)]
pub struct ExtendedSm {
    pub table: SmExpansion,
    /// Freedom of the whole table: mass, log and derivative counterterms
    /// graded by the table degree.
    pub counterterms: Vec<Expr>,
    pub rows: Vec<RowExtension>,
    /// Highest mass order whose coefficient needed renormalization.
    pub l0: i64,
}

/// Extend every coefficient of an expansion table. Rows above the critical
/// order (and the opaque remainder) are merely marked as directly extended;
/// rows at or below it go through the renormalizing routes.
pub fn extend_sm(
    conv: &MetricConvention,
    s: &SmExpansion,
    zeta: &str,
    ct_groups: &[Group],
    flags: &CtFlags,
    p_max: Option<u32>,
) -> Result<ExtendedSm> {
    let k = s.k;
    let p_max = p_max.unwrap_or_else(|| s.max_log_power());
    let l0 = s.degree as i64 - k as i64;
    let mut rows = Vec::with_capacity(s.rows.len());
    let mut methods = Vec::with_capacity(s.rows.len());
    for row in &s.rows {
        let sd = scaling_degree(&row.expr, k)?;
        let res = if divergence_shift(&sd, k).is_some() {
            extend_row(conv, &row.expr, zeta, ct_groups, p_max, flags)?
        } else if row_is_smooth(&row.expr) {
            ExtensionResult {
                extended: row.expr.clone(),
                counterterms: Vec::new(),
                method: ExtensionMethod::Direct,
                report: None,
                pole_order: 0,
            }
        } else {
            direct_extend(&row.expr, k)?
        };
        methods.push(RowExtension {
            l: row.l,
            p: row.p,
            method: res.method,
            pole_order: res.pole_order,
        });
        rows.push(SmRow { l: row.l, p: row.p, expr: res.extended });
    }
    let mut table = SmExpansion::new(s.degree, s.order, k, rows, &format!("ov({})", s.remainder.tag));
    table.remainder.exact = s.remainder.exact;
    let counterterms = counterterm_basis(s.degree as i64, k, ct_groups, p_max, flags);
    Ok(ExtendedSm { table, counterterms, rows: methods, l0 })
}

fn row_is_smooth(e: &Expr) -> bool {
    let gs = e.groups();
    e.terms().iter().all(|t| t.factors.is_empty() && t.mono.smooth_in(&gs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::DeltaOp;
    use crate::rat::rat;

    fn conv4() -> MetricConvention {
        MetricConvention::minkowski(4, 2)
    }

    fn xpow(a: i64) -> Expr {
        Expr::from_mono(Monomial::one().with_x_int(0, a))
    }

    fn xlog(a: i64, q: u32) -> Expr {
        Expr::from_mono(Monomial::one().with_x_int(0, a).with_log_x(0, q))
    }

    #[test]
    fn direct_extension_guard() {
        let conv = conv4();
        let ok = direct_extend(&xpow(-1), conv.k).unwrap();
        assert_eq!(ok.method, ExtensionMethod::Direct);
        match direct_extend(&xpow(-2), conv.k) {
            Err(Error::DivergentDirect { sd, k }) => {
                assert_eq!(sd, "4");
                assert_eq!(k, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverse_square_peels_one_box() {
        let conv = conv4();
        let res = diff_renorm_extend(&conv, &xpow(-2)).unwrap();
        // box ov( log(M^2 X) / (4 X) )
        let want = Expr::box_op(0, xlog(-1, 1).scale_rat(&rat(1, 4)).overline(4).unwrap());
        assert_eq!(res.extended, want);
        assert_eq!(res.counterterms, vec![Expr::delta(DeltaOp::Id, 4, vec![0])]);
        let rep = res.report.unwrap();
        assert_eq!(rep.degree, LinForm::from_int(4));
        assert_eq!(rep.power, 1);
    }

    #[test]
    fn logged_inverse_square() {
        let conv = conv4();
        let res = diff_renorm_extend(&conv, &xlog(-2, 1)).unwrap();
        // box ov( (log^2 + 2 log) / (8 X) )
        let want = Expr::box_op(
            0,
            xlog(-1, 2)
                .scale_rat(&rat(1, 8))
                .add(&xlog(-1, 1).scale_rat(&rat(1, 4)))
                .overline(4)
                .unwrap(),
        );
        assert_eq!(res.extended, want);
    }

    #[test]
    fn inverse_cube_needs_two_boxes() {
        let conv = conv4();
        let res = diff_renorm_extend(&conv, &xpow(-3)).unwrap();
        // -box box ov( log(M^2 X) / (32 X) )
        let want = Expr::box_op(
            0,
            Expr::box_op(0, xlog(-1, 1).scale_rat(&rat(-1, 32)).overline(4).unwrap()),
        );
        assert_eq!(res.extended, want);
        assert_eq!(res.counterterms, vec![Expr::delta(DeltaOp::Box(0), 4, vec![0])]);
    }

    #[test]
    fn box_peeling_restricts_back() {
        let conv = conv4();
        for input in [xpow(-2), xpow(-3), xlog(-2, 1)] {
            let res = diff_renorm_extend(&conv, &input).unwrap();
            let back = restrict_away(&res.extended, &conv).unwrap();
            assert_eq!(back, input, "restriction failed for {input}");
        }
    }

    #[test]
    fn nonresonant_moment_extension() {
        // X^(-9/4): degree 9/2, shift 1/2, non-resonant
        let conv = conv4();
        let v = Expr::from_mono(Monomial::one().with_x_pow(0, LinForm::from_rat(rat(-9, 4))));
        let res = homogeneous_extend(&conv, &v).unwrap();
        assert_eq!(res.method, ExtensionMethod::Moment);
        assert!(res.counterterms.is_empty());
        let rep = res.report.unwrap();
        assert_eq!(rep.degree, LinForm::from_rat(rat(9, 2)));
        assert_eq!(rep.power, 0, "non-resonant extension preserves the power");
        let back = restrict_away(&res.extended, &conv).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn resonant_degree_hits_pole() {
        let conv = conv4();
        match homogeneous_extend(&conv, &xpow(-2)) {
            Err(Error::ResonantDegree { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn regularized_extension_restricts_back() {
        let conv = conv4();
        let res = regularized_extend(&conv, &xpow(-2), "zeta", None).unwrap();
        assert_eq!(res.method, ExtensionMethod::Moment);
        let rep = res.report.unwrap();
        // degree 4 - 2 zeta, power unchanged by the regularized extension
        assert_eq!(rep.degree.rat, rat_int(4));
        assert_eq!(rep.degree.reg.get("zeta"), Some(&rat_int(-2)));
    }

    #[test]
    fn minimal_subtraction_of_inverse_square() {
        let conv = conv4();
        let reg = regularized_extend(&conv, &xpow(-2), "zeta", None).unwrap();
        let ms = minimal_subtract(
            &reg.extended,
            "zeta",
            4,
            &[0],
            0,
            &CtFlags::default(),
        )
        .unwrap();
        assert_eq!(ms.method, ExtensionMethod::MinimalSubtraction);
        assert!(ms.pole_order >= 1);
        // the finite part is regulator-free and restricts to the input
        assert!(ms.extended.regulators().is_empty());
        let back = restrict_away(&ms.extended, &conv).unwrap();
        assert_eq!(back, xpow(-2));
        // resonant degree: the annihilator power rose by one
        let rep = ms.report.unwrap();
        assert_eq!(rep.degree, LinForm::from_int(4));
        assert_eq!(rep.power, 1);
        assert_eq!(ms.counterterms, vec![Expr::delta(DeltaOp::Id, 4, vec![0])]);
    }

    #[test]
    fn ms_is_idempotent() {
        let conv = conv4();
        let reg = regularized_extend(&conv, &xpow(-2), "zeta", None).unwrap();
        let ms =
            minimal_subtract(&reg.extended, "zeta", 4, &[0], 0, &CtFlags::default()).unwrap();
        let series = laurent_expand(&ms.extended, "zeta", 0).unwrap();
        assert_eq!(series.pole_order(), 0);
        assert_eq!(series.coeff(0).unwrap(), ms.extended);
    }

    #[test]
    fn table_extension_marks_methods() {
        let conv = conv4();
        let cube = crate::smx::sm_power(&crate::smx::propagator_table(4, 2, 0, 4, true, "DF", None), 3)
            .unwrap();
        let ext = extend_sm(&conv, &cube, "zeta", &[0], &CtFlags::default(), None).unwrap();
        assert_eq!(ext.l0, 2);
        assert_eq!(ext.table.degree, 6);
        // u0 at X^-3 renormalizes, the l=2 rows at X^-2 renormalize too
        for rm in &ext.rows {
            assert_eq!(rm.method, ExtensionMethod::DiffRenorm, "row {} {}", rm.l, rm.p);
        }
        assert_eq!(ext.counterterms.len(), 3);
        // extended rows keep their degree, with one extra annihilator power
        for row in &ext.table.rows {
            let rep = homogeneity_analyze(&row.expr, false).unwrap();
            assert_eq!(rep.degree, LinForm::from_int(6 - row.l as i64));
        }
        assert!(crate::smx::sm_check(&ext.table).all_pass());
    }

    #[test]
    fn remainder_relation_between_truncations() {
        let conv = conv4();
        let cube = crate::smx::sm_power(&crate::smx::propagator_table(4, 2, 0, 4, true, "DF", None), 3)
            .unwrap();
        let ext = extend_sm(&conv, &cube, "zeta", &[0], &CtFlags::default(), None).unwrap();
        let r0 = ext.table.remainder_at(0);
        let r2 = ext.table.remainder_at(2);
        let mut mid = Expr::zero();
        for row in &ext.table.rows {
            if row.l > 0 && row.l <= 2 {
                mid = mid.add(&SmExpansion::row_term(row));
            }
        }
        assert_eq!(r0, mid.add(&r2));
    }

    #[test]
    fn subtraction_brackets_from_moment_weights() {
        let sol = moment_solver(2, 1, &rat_int(0), "eta", 8).unwrap();
        let brackets = ms_brackets(&sol, "zeta", 2).unwrap();
        assert_eq!(
            brackets,
            vec![
                (1, vec![rat_int(0), rat(1, 2), rat(1, 32)]),
                (2, vec![rat_int(0), rat_int(0), rat(-1, 32)]),
            ]
        );

        let sol = moment_solver(3, 1, &rat_int(0), "eta", 8).unwrap();
        let brackets = ms_brackets(&sol, "zeta", 2).unwrap();
        assert_eq!(
            brackets,
            vec![
                (1, vec![rat_int(0), rat(3, 4), rat(3, 32), rat(1, 384)]),
                (2, vec![rat_int(0), rat_int(0), rat(-3, 32), rat(-1, 128)]),
                (3, vec![rat_int(0), rat_int(0), rat_int(0), rat(1, 384)]),
            ]
        );

        let sol = moment_solver(2, 3, &rat_int(2), "eta", 8).unwrap();
        let brackets = ms_brackets(&sol, "zeta", 2).unwrap();
        assert_eq!(
            brackets,
            vec![
                (3, vec![rat(-1, 8), rat(1, 4), rat(1, 64)]),
                (4, vec![rat(7, 8), rat_int(0), rat(-1, 64)]),
            ]
        );
    }
}
