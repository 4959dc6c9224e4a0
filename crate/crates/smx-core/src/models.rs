//! Propagator models and end-to-end diagram pipelines: the two-vertex
//! triple-line diagram, the same diagram dressed with two external legs,
//! the vacuum-split identity of the vertex expectation, and the scan of
//! the renormalization freedom left by the expansion axiom.

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::expr::fields::{pairing_count, FieldMonomial};
use crate::expr::{Expr, Group, MetricConvention, Monomial};
use crate::extension::{
    counterterm_basis, extend_sm, invariant_delta_ops, minimal_subtract, moment_solver,
    ms_brackets, regularized_extend, CtFlags, ExtendedSm, MomentSolution,
};
use crate::json::obj;
use crate::linform::LinForm;
use crate::rat::{rat_int, rat_string, Rat};
use crate::scaling::homogeneity_analyze;
use crate::smx::{
    propagator_table, sm_check, sm_power, sm_product, sm_remainder_bound, SmCheckReport,
    SmExpansion, SmRow,
};
use num::ToPrimitive;
use serde_json::Value;
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagatorKind {
    Wightman,
    Feynman,
    Hadamard,
    HadamardDifference,
}

impl PropagatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PropagatorKind::Wightman => "wightman",
            PropagatorKind::Feynman => "feynman",
            PropagatorKind::Hadamard => "hadamard",
            PropagatorKind::HadamardDifference => "hadamard-difference",
        }
    }
}

/// A two-point structure with a truncated small-X series. The Feynman and
/// Wightman kinds carry their mass log in dedicated log rows; the vacuum
/// kind trades those rows for a reference-scale constant, and the
/// difference kind subtracts the two, leaving a series without singular
/// X-powers.
#[derive(Clone, Debug)]
pub struct PropagatorModel {
    pub kind: PropagatorKind,
    pub d: u32,
    /// Highest power of the squared mass kept by the truncated series.
    pub truncation: u32,
    pub group: Group,
    pub k: u32,
    /// Coefficient symbol standing for the reference-scale log of the
    /// vacuum kind.
    pub mu_log: String,
}

impl PropagatorModel {
    fn new(kind: PropagatorKind, d: u32, truncation: u32) -> Self {
        PropagatorModel { kind, d, truncation, group: 0, k: d, mu_log: "lgmu".into() }
    }

    pub fn feynman(d: u32, truncation: u32) -> Self {
        Self::new(PropagatorKind::Feynman, d, truncation)
    }

    pub fn wightman(d: u32, truncation: u32) -> Self {
        Self::new(PropagatorKind::Wightman, d, truncation)
    }

    pub fn hadamard(d: u32, truncation: u32) -> Self {
        Self::new(PropagatorKind::Hadamard, d, truncation)
    }

    pub fn difference(d: u32, truncation: u32) -> Self {
        Self::new(PropagatorKind::HadamardDifference, d, truncation)
    }

    pub fn on_group(mut self, group: Group, k: u32) -> Self {
        self.group = group;
        self.k = k;
        self
    }

    fn tag(&self) -> String {
        format!("{}[d={}]", self.kind.as_str(), self.d)
    }
}

/// The truncated expansion table of a model. Odd mass rows vanish for
/// every kind, so the remainder's vanishing order is bumped past the next
/// odd power.
pub fn propagator_sm(model: &PropagatorModel, order: u32) -> Result<SmExpansion> {
    if order > 2 * model.truncation {
        return Err(Error::TruncationTooSmall {
            requested: order as i64,
            truncation: 2 * model.truncation as i64,
        });
    }
    let tag = model.tag();
    let mut table = match model.kind {
        PropagatorKind::Feynman | PropagatorKind::Wightman => {
            propagator_table(model.d, order, model.group, model.k, true, &tag, None)
        }
        PropagatorKind::Hadamard => {
            propagator_table(model.d, order, model.group, model.k, false, &tag, Some(&model.mu_log))
        }
        PropagatorKind::HadamardDifference => {
            let f = propagator_table(model.d, order, model.group, model.k, true, &tag, None);
            let h = propagator_table(
                model.d,
                order,
                model.group,
                model.k,
                false,
                &tag,
                Some(&model.mu_log),
            );
            let rows = f
                .rows
                .iter()
                .cloned()
                .chain(h.rows.iter().map(|r| SmRow { l: r.l, p: r.p, expr: r.expr.neg() }))
                .collect();
            SmExpansion::new(f.degree, order, model.k, rows, &tag)
        }
    };
    if order.is_multiple_of(2) {
        table.remainder.order = order + 2;
    }
    Ok(table)
}

/// Combinatorial convention for vertex expectations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Full pairing count times one hbar per line.
    Vertex,
    /// Bare power of the propagator, for side-by-side row comparisons.
    Literal,
}

/// Two-vertex vacuum expectation of `phi^a (x) phi^b (y)` as an expansion
/// table: the complete-pairing count times the propagator power, zero when
/// the field counts differ.
pub fn two_vertex_vev_table(
    a: u32,
    b: u32,
    model: &PropagatorModel,
    norm: Normalization,
    order: u32,
) -> Result<SmExpansion> {
    let count = pairing_count(&FieldMonomial::phi_power(a), &FieldMonomial::phi_power(b));
    if count == 0 {
        return Ok(SmExpansion::one(model.k, order).scale(&Coeff::zero()));
    }
    let prop = propagator_sm(model, order)?;
    let mut table = sm_power(&prop, a)?;
    if let Normalization::Vertex = norm {
        let scale = Coeff::var("hbar").pow(a).scale(&rat_int(count as i64));
        table = table.scale(&scale);
    }
    Ok(table)
}

/// The same expectation assembled into a single expression, remainder
/// marker included.
pub fn two_vertex_vev(
    a: u32,
    b: u32,
    model: &PropagatorModel,
    norm: Normalization,
    order: u32,
) -> Result<Expr> {
    Ok(two_vertex_vev_table(a, b, model, norm, order)?.to_expr())
}

fn expr_depends_on_symbol(e: &Expr, name: &str) -> bool {
    e.terms().iter().any(|t| {
        t.mono.coeff.depends_on(name)
            || t.factors
                .iter()
                .any(|f| f.child().map(|c| expr_depends_on_symbol(c, name)).unwrap_or(false))
    })
}

/// Replaces every power of a constant coefficient symbol by the same power
/// of the mass log. Children of extension markers must not carry the
/// symbol, since the mass log does not live inside x-space markers.
fn const_to_mass_log(e: &Expr, name: &str) -> Result<Expr> {
    let mut acc = Expr::zero();
    for t in e.terms() {
        if t.factors.iter().any(|f| {
            f.child().map(|c| expr_depends_on_symbol(c, name)).unwrap_or(false)
        }) {
            return Err(Error::UnsupportedOperation(format!(
                "constant `{name}` occurs inside an extension marker"
            )));
        }
        if t.mono.coeff.den.vars().contains(name) {
            return Err(Error::UnsupportedOperation(format!(
                "constant `{name}` occurs in a coefficient denominator"
            )));
        }
        for (i, num_i) in t.mono.coeff.num.as_univariate(name).iter().enumerate() {
            if num_i.is_zero() {
                continue;
            }
            let mut t2 = t.clone();
            t2.mono.coeff = Coeff::new(num_i.clone(), t.mono.coeff.den.clone());
            t2.mono.log_m += i as u32;
            acc = acc.add(&Expr::from_term(t2));
        }
    }
    Ok(acc)
}

/// Substitutes the reference-scale symbol of a vacuum-kind table by the
/// mass log, shifting the affected content into higher log rows.
pub fn table_mu_to_mass(table: &SmExpansion, name: &str) -> Result<SmExpansion> {
    let mut rows = Vec::new();
    for r in &table.rows {
        let e = const_to_mass_log(&r.expr, name)?;
        for t in e.terms() {
            let extra = t.mono.log_m;
            let mut t2 = t.clone();
            t2.mono.log_m = 0;
            rows.push(SmRow { l: r.l, p: r.p + extra, expr: Expr::from_term(t2) });
        }
    }
    let mut out = SmExpansion::new(
        table.degree,
        table.order,
        table.k,
        rows,
        &format!("mu->m({})", table.remainder.tag),
    );
    out.remainder.order = table.remainder.order;
    out.remainder.exact = table.remainder.exact;
    Ok(out)
}

fn sum_tables(tables: &[&SmExpansion], tag: &str) -> SmExpansion {
    let degree = tables.iter().map(|t| t.degree).max().unwrap_or(0);
    let order = tables.iter().map(|t| t.order).min().unwrap_or(0);
    let k = tables.iter().map(|t| t.k).max().unwrap_or(0);
    let rows = tables.iter().flat_map(|t| t.rows.iter().cloned()).collect();
    let mut out = SmExpansion::new(degree, order, k, rows, tag);
    out.remainder.exact = tables.iter().all(|t| t.remainder.exact);
    out
}

/// Outcome of splitting the triple-line vertex expectation against the
/// vacuum kind: the four-term identity, smoothness of the difference
/// propagator, and its collapse when the reference scale meets the mass.
#[derive(Clone, Debug)]
pub struct HadamardSplitReport {
    pub identity_holds: bool,
    pub difference_smooth: bool,
    pub collapses_at_equal_scales: bool,
    /// Multiplicity in front of each power of the difference propagator.
    pub weights: Vec<(u32, u64)>,
    /// True when every weight equals the pairing count times the binomial.
    pub weights_binomial: bool,
}

impl HadamardSplitReport {
    pub fn all_ok(&self) -> bool {
        self.identity_holds
            && self.difference_smooth
            && self.collapses_at_equal_scales
            && self.weights_binomial
    }

    pub fn to_json(&self) -> Value {
        obj(vec![
            ("identity_holds", self.identity_holds.into()),
            ("difference_smooth", self.difference_smooth.into()),
            ("collapses_at_equal_scales", self.collapses_at_equal_scales.into()),
            (
                "weights",
                Value::Array(
                    self.weights
                        .iter()
                        .map(|(j, w)| Value::Array(vec![(*j).into(), (*w).into()]))
                        .collect(),
                ),
            ),
            ("weights_binomial", self.weights_binomial.into()),
            ("all_ok", self.all_ok().into()),
        ])
    }
}

/// Checks the vacuum split of the triple-line vertex expectation at the
/// given truncation: with d the difference propagator and H the vacuum
/// kind, the full expectation must equal the four-term expansion in powers
/// of d, the difference must stay free of singular X-powers, and setting
/// the reference scale equal to the mass must collapse d to zero.
pub fn hadamard_split_check(d: u32, order: u32) -> Result<HadamardSplitReport> {
    let feyn = PropagatorModel::feynman(d, order);
    let hada = PropagatorModel::hadamard(d, order);
    let diff = PropagatorModel::difference(d, order);

    let lhs = two_vertex_vev_table(3, 3, &feyn, Normalization::Vertex, order)?;
    let h1 = propagator_sm(&hada, order)?;
    let d1 = propagator_sm(&diff, order)?;
    let hbar = Coeff::var("hbar");

    let t0 = two_vertex_vev_table(3, 3, &hada, Normalization::Vertex, order)?;
    let t1 = sm_product(&two_vertex_vev_table(2, 2, &hada, Normalization::Vertex, order)?, &d1)?
        .scale(&hbar.scale(&rat_int(9)));
    let t2 = sm_product(&h1, &sm_power(&d1, 2)?)?.scale(&hbar.pow(3).scale(&rat_int(18)));
    let t3 = sm_power(&d1, 3)?.scale(&hbar.pow(3).scale(&rat_int(6)));
    let rhs = sum_tables(&[&t0, &t1, &t2, &t3], "split");

    let identity_holds = lhs == rhs;
    let groups: BTreeSet<Group> = [feyn.group].into_iter().collect();
    let difference_smooth = d1
        .rows
        .iter()
        .all(|r| r.expr.terms().iter().all(|t| t.factors.is_empty() && t.mono.smooth_in(&groups)));
    let collapses_at_equal_scales = table_mu_to_mass(&d1, &diff.mu_log)?.rows.is_empty();

    let weights: Vec<(u32, u64)> = vec![(0, 6), (1, 9 * 2), (2, 18), (3, 6)];
    let binom = |n: u64, j: u64| (1..=j).fold(1u64, |acc, i| acc * (n + 1 - i) / i);
    let weights_binomial = weights.iter().all(|(j, w)| *w == 6 * binom(3, *j as u64));

    Ok(HadamardSplitReport {
        identity_holds,
        difference_smooth,
        collapses_at_equal_scales,
        weights,
        weights_binomial,
    })
}

/// The triple-line two-vertex diagram: its expansion table, the property
/// report of the table, and the renormalized table with its counterterm
/// span.
#[derive(Clone, Debug)]
pub struct SettingSunPipeline {
    pub table: SmExpansion,
    pub check: SmCheckReport,
    pub extended: ExtendedSm,
}

impl SettingSunPipeline {
    pub fn to_json(&self) -> Value {
        obj(vec![
            ("schema", Value::String("smx/1".into())),
            ("kind", Value::String("setting-sun".into())),
            ("table", self.table.to_json()),
            ("check", self.check.to_json()),
            ("extended", self.extended.table.to_json()),
            (
                "rows",
                Value::Array(
                    self.extended
                        .rows
                        .iter()
                        .map(|r| {
                            obj(vec![
                                ("l", r.l.into()),
                                ("p", r.p.into()),
                                ("method", Value::String(r.method.as_str().into())),
                                ("pole_order", r.pole_order.into()),
                            ])
                        })
                        .collect(),
                ),
            ),
            (
                "counterterms",
                Value::Array(self.extended.counterterms.iter().map(|c| c.to_json()).collect()),
            ),
            ("l0", self.extended.l0.into()),
        ])
    }
}

pub fn setting_sun_pipeline_at(
    conv: &MetricConvention,
    norm: Normalization,
    group: Group,
) -> Result<SettingSunPipeline> {
    let model = PropagatorModel::feynman(conv.d, 2).on_group(group, conv.k);
    let table = two_vertex_vev_table(3, 3, &model, norm, 2)?;
    let check = sm_check(&table);
    let extended = extend_sm(conv, &table, "zeta", &[group], &CtFlags::default(), None)?;
    Ok(SettingSunPipeline { table, check, extended })
}

pub fn setting_sun_pipeline(
    conv: &MetricConvention,
    norm: Normalization,
) -> Result<SettingSunPipeline> {
    setting_sun_pipeline_at(conv, norm, 0)
}

/// Attaches one symbolic constant per element of the table-level
/// counterterm span to the matching row of the renormalized table. The
/// constants are named by the prefix and the basis position.
pub fn with_symbolic_constants(ext: &ExtendedSm, prefix: &str) -> Result<SmExpansion> {
    let mut rows = ext.table.rows.clone();
    for (i, ct) in ext.counterterms.iter().enumerate() {
        let name = format!("{prefix}{i}");
        for t in ct.terms() {
            let l = t
                .mono
                .mass
                .as_rat()
                .and_then(|r| if r.is_integer() { r.to_integer().to_u32() } else { None })
                .ok_or_else(|| {
                    Error::UnsupportedForm("counterterm with a non-integer mass power".into())
                })?;
            let mut t2 = t.clone();
            t2.mono.mass = LinForm::zero();
            t2.mono.log_m = 0;
            t2.mono.coeff = t2.mono.coeff.mul(&Coeff::var(&name));
            rows.push(SmRow { l, p: t.mono.log_m, expr: Expr::from_term(t2) });
        }
    }
    let mut out = SmExpansion::new(
        ext.table.degree,
        ext.table.order,
        ext.table.k,
        rows,
        &format!("{}+constants", ext.table.remainder.tag),
    );
    out.remainder.order = ext.table.remainder.order;
    out.remainder.exact = ext.table.remainder.exact;
    Ok(out)
}

/// One renormalized coefficient of the dressed diagram: its moment
/// weights, regularized extension, pole order, subtracted value, the log
/// polynomials attached inside each moment marker, and the invariant
/// counterterm span of the row.
#[derive(Clone, Debug)]
pub struct HatRow {
    pub label: String,
    pub l: u32,
    pub p: u32,
    pub input: Expr,
    pub degree: i64,
    pub power: u32,
    pub moments: MomentSolution,
    pub regularized: Expr,
    pub pole_order: u32,
    pub subtracted: Expr,
    pub brackets: Vec<(u32, Vec<Rat>)>,
    pub counterterms: Vec<Expr>,
    /// The subtracted value rebuilt from the brackets matches the Laurent
    /// route exactly.
    pub reconstruction_ok: bool,
}

impl HatRow {
    fn to_json(&self) -> Value {
        obj(vec![
            ("l", self.l.into()),
            ("p", self.p.into()),
            ("input", self.input.to_json()),
            ("degree", self.degree.into()),
            ("power", self.power.into()),
            ("pole_order", self.pole_order.into()),
            (
                "brackets",
                Value::Array(
                    self.brackets
                        .iter()
                        .map(|(l, coeffs)| {
                            obj(vec![
                                ("l", (*l).into()),
                                (
                                    "coeffs",
                                    Value::Array(
                                        coeffs
                                            .iter()
                                            .map(|r| Value::String(rat_string(r)))
                                            .collect(),
                                    ),
                                ),
                            ])
                        })
                        .collect(),
                ),
            ),
            ("subtracted", self.subtracted.to_json()),
            (
                "counterterms",
                Value::Array(self.counterterms.iter().map(|c| c.to_json()).collect()),
            ),
            ("reconstruction_ok", self.reconstruction_ok.into()),
        ])
    }
}

/// The dressed diagram: the inserted renormalized subdiagram, the
/// assembled table, the renormalized rows, and the freedom of the whole
/// object.
#[derive(Clone, Debug)]
pub struct HatPipeline {
    pub sun: SettingSunPipeline,
    pub inserted: SmExpansion,
    pub table: SmExpansion,
    pub check: SmCheckReport,
    pub rows: Vec<HatRow>,
    /// Scaling bound of the remainder, strictly below the ambient
    /// dimension, so the remainder extends directly.
    pub remainder_bound: Rat,
    pub freedom: Vec<Expr>,
}

impl HatPipeline {
    pub fn row(&self, label: &str) -> Option<&HatRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_json(&self) -> Value {
        let ms = self.rows.iter().map(|r| (r.label.clone(), r.to_json())).collect();
        obj(vec![
            ("schema", Value::String("smx/1".into())),
            ("kind", Value::String("setting-sun-hat".into())),
            ("sun", self.sun.to_json()),
            ("table", self.table.to_json()),
            ("check", self.check.to_json()),
            ("ms", Value::Object(ms)),
            ("remainder_bound", Value::String(rat_string(&self.remainder_bound))),
            ("freedom", Value::Array(self.freedom.iter().map(|c| c.to_json()).collect())),
        ])
    }
}

fn bracket_expr(coeffs: &[Rat], groups: &[Group]) -> Result<Expr> {
    let lsum = groups.iter().fold(Expr::zero(), |acc, g| {
        acc.add(&Expr::from_mono(Monomial::one().with_log_x(*g, 1)))
    });
    let mut acc = Expr::zero();
    let mut pow = Expr::one();
    for (n, b) in coeffs.iter().enumerate() {
        if n > 0 {
            pow = pow.multiply(&lsum)?;
        }
        acc = acc.add(&pow.scale_rat(b));
    }
    Ok(acc)
}

/// Builds and renormalizes the dressed diagram: the renormalized
/// subdiagram (with symbolic constants) times one propagator on each
/// external relative variable, expanded to second mass order, every
/// coefficient extended through the x-y-symmetric regulator and minimal
/// subtraction.
pub fn setting_sun_hat_pipeline(norm: Normalization) -> Result<HatPipeline> {
    let conv_sub = MetricConvention::minkowski(4, 2);
    let conv = MetricConvention::minkowski(4, 3);
    let sun = setting_sun_pipeline_at(&conv_sub, norm, 2)?;
    let inserted = with_symbolic_constants(&sun.extended, "C")?;

    let leg = PropagatorModel::feynman(4, 2);
    let px = propagator_sm(&leg.clone().on_group(0, 8), 2)?;
    let py = propagator_sm(&leg.on_group(1, 8), 2)?;
    let table = sm_product(&sm_product(&inserted, &px)?, &py)?;
    let check = sm_check(&table);

    let k = 8u32;
    let reg_groups: BTreeSet<Group> = [0u8, 1].into_iter().collect();
    let ct_groups = [0u8, 1];
    let flags = CtFlags { symmetric: true, covariant: true };
    let p_max = table.max_log_power();

    let mut rows = Vec::new();
    for (l, p, label) in [(0u32, 0u32, "v0"), (2, 0, "v20"), (2, 1, "v21")] {
        let input = table.row_or_zero(l, p);
        let rep = homogeneity_analyze(&input, false)?;
        let degree = rep
            .degree
            .as_rat()
            .and_then(|r| if r.is_integer() { r.to_integer().to_i64() } else { None })
            .ok_or_else(|| {
                Error::UnsupportedForm(format!("row ({l},{p}) has a non-integer degree"))
            })?;
        let shift = degree - k as i64;
        let sol = moment_solver(rep.order, (shift + 1) as u32, &rat_int(shift), "eta", k)?;
        let brackets = ms_brackets(&sol, "zeta", reg_groups.len() as u32)?;

        let reg = regularized_extend(&conv, &input, "zeta", Some(&reg_groups))?;
        let ms = minimal_subtract(&reg.extended, "zeta", k, &ct_groups, p_max, &flags)?;

        let mut rebuilt = Expr::zero();
        for (lm, coeffs) in &brackets {
            let dressed = input.multiply(&bracket_expr(coeffs, &[0, 1])?)?;
            rebuilt = rebuilt.add(&dressed.moment_extension(*lm, k)?);
        }
        let reconstruction_ok = rebuilt == ms.extended;

        rows.push(HatRow {
            label: label.into(),
            l,
            p,
            input,
            degree,
            power: rep.power,
            moments: sol,
            regularized: reg.extended,
            pole_order: ms.pole_order,
            subtracted: ms.extended,
            brackets,
            counterterms: invariant_delta_ops(shift as u32, k, &ct_groups, &flags),
            reconstruction_ok,
        });
    }

    let remainder_bound = sm_remainder_bound(&table);
    let freedom = counterterm_basis(table.degree as i64, k, &ct_groups, p_max, &flags);
    Ok(HatPipeline { sun, inserted, table, check, rows, remainder_bound, freedom })
}

/// One invariant operator of the local freedom together with the mass
/// power it rides on and the log powers the expansion axiom admits. An
/// empty log list stands for an arbitrary function of the mass ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct FreedomEntry {
    pub op: Expr,
    pub mass_power: u32,
    pub log_powers: Vec<u32>,
}

/// The renormalization freedom of an extension problem, under the bare
/// scaling-degree requirement and under the expansion axiom.
#[derive(Clone, Debug)]
pub struct FreedomReport {
    pub degree: i64,
    pub k: u32,
    pub unrestricted: Vec<FreedomEntry>,
    pub restricted: Vec<FreedomEntry>,
}

impl FreedomReport {
    pub fn to_json(&self) -> Value {
        let render = |entries: &[FreedomEntry]| {
            Value::Array(
                entries
                    .iter()
                    .map(|e| {
                        obj(vec![
                            ("op", e.op.to_json()),
                            ("mass_power", e.mass_power.into()),
                            (
                                "log_powers",
                                Value::Array(
                                    e.log_powers.iter().map(|p| (*p).into()).collect(),
                                ),
                            ),
                        ])
                    })
                    .collect(),
            )
        };
        obj(vec![
            ("schema", Value::String("smx/1".into())),
            ("kind", Value::String("freedom".into())),
            ("degree", self.degree.into()),
            ("k", self.k.into()),
            ("unrestricted", render(&self.unrestricted)),
            ("restricted", render(&self.restricted)),
        ])
    }
}

/// Enumerates the delta-supported freedom at total degree `d_total` over
/// dimension `k`: the scaling-degree requirement alone admits one
/// arbitrary mass-ratio function per invariant operator; the expansion
/// axiom cuts each down to constants, except for one log on every strictly
/// positive mass power.
pub fn renorm_freedom_scan(
    d_total: i64,
    k: u32,
    groups: &[Group],
    p_max: u32,
    flags: &CtFlags,
) -> FreedomReport {
    let mut unrestricted = Vec::new();
    let mut restricted = Vec::new();
    let c = d_total - k as i64;
    if c >= 0 {
        for l in 0..=c {
            for op in invariant_delta_ops((c - l) as u32, k, groups, flags) {
                unrestricted.push(FreedomEntry {
                    op: op.clone(),
                    mass_power: l as u32,
                    log_powers: vec![],
                });
                let log_powers = if l == 0 { vec![0] } else { (0..=p_max).collect() };
                restricted.push(FreedomEntry { op, mass_power: l as u32, log_powers });
            }
        }
    }
    FreedomReport { degree: d_total, k, unrestricted, restricted }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::DeltaOp;
    use crate::rat::rat;

    fn a(name: &str) -> Coeff {
        Coeff::var(name)
    }

    fn mono() -> Monomial {
        Monomial::one()
    }

    #[test]
    fn feynman_rows_match_reference() {
        let model = PropagatorModel::feynman(4, 2);
        let t = propagator_sm(&model, 2).unwrap();
        assert_eq!(t.degree, 2);
        assert_eq!(t.remainder.order, 4);
        assert_eq!(
            t.row_or_zero(0, 0),
            Expr::from_mono(mono().with_coeff(a("a0")).with_x_int(0, -1))
        );
        let logful = Expr::from_mono(mono().with_coeff(a("a1")).with_log_x(0, 1))
            .add(&Expr::from_mono(mono().with_coeff(a("A1"))));
        assert_eq!(t.row_or_zero(2, 0), logful);
        assert_eq!(
            t.row_or_zero(2, 1),
            Expr::from_mono(mono().with_coeff(a("a1").scale(&rat_int(2))))
        );
        assert!(t.row(1, 0).is_none());

        let w = propagator_sm(&PropagatorModel::wightman(4, 2), 2).unwrap();
        assert_eq!(w.degree, 2);
        assert_eq!(w.rows, t.rows);
    }

    #[test]
    fn truncation_is_guarded() {
        let model = PropagatorModel::feynman(4, 1);
        assert!(matches!(
            propagator_sm(&model, 4),
            Err(Error::TruncationTooSmall { requested: 4, truncation: 2 })
        ));
    }

    #[test]
    fn vacuum_kind_swaps_the_mass_log_row() {
        let hada = PropagatorModel::hadamard(4, 2);
        let h = propagator_sm(&hada, 2).unwrap();
        assert!(h.row(2, 1).is_none());
        assert!(expr_depends_on_symbol(&h.row_or_zero(2, 0), "lgmu"));

        let f = propagator_sm(&PropagatorModel::feynman(4, 2), 2).unwrap();
        assert_eq!(table_mu_to_mass(&h, "lgmu").unwrap(), f);
    }

    #[test]
    fn difference_kind_is_smooth_and_collapses() {
        let diff = PropagatorModel::difference(4, 2);
        let d = propagator_sm(&diff, 2).unwrap();
        assert!(d.row(0, 0).is_none());
        let groups: BTreeSet<Group> = [0u8].into_iter().collect();
        for r in &d.rows {
            for t in r.expr.terms() {
                assert!(t.factors.is_empty() && t.mono.smooth_in(&groups));
            }
        }
        assert!(table_mu_to_mass(&d, "lgmu").unwrap().rows.is_empty());
    }

    #[test]
    fn vev_counts_pairings() {
        let model = PropagatorModel::feynman(4, 2);
        let f = propagator_sm(&model, 2).unwrap();
        let v33 = two_vertex_vev_table(3, 3, &model, Normalization::Vertex, 2).unwrap();
        let expected = sm_power(&f, 3)
            .unwrap()
            .scale(&Coeff::var("hbar").pow(3).scale(&rat_int(6)));
        assert_eq!(v33, expected);

        let v22 = two_vertex_vev_table(2, 2, &model, Normalization::Vertex, 2).unwrap();
        let expected = sm_power(&f, 2)
            .unwrap()
            .scale(&Coeff::var("hbar").pow(2).scale(&rat_int(2)));
        assert_eq!(v22, expected);

        let v23 = two_vertex_vev_table(2, 3, &model, Normalization::Vertex, 2).unwrap();
        assert!(v23.rows.is_empty() && v23.remainder.exact);
    }

    #[test]
    fn vacuum_split_identity() {
        let report = hadamard_split_check(4, 2).unwrap();
        assert!(report.identity_holds);
        assert!(report.difference_smooth);
        assert!(report.collapses_at_equal_scales);
        assert!(report.weights_binomial);
        assert_eq!(report.weights, vec![(0, 6), (1, 18), (2, 18), (3, 6)]);
    }

    #[test]
    fn triple_line_table_rows() {
        let conv = MetricConvention::minkowski(4, 2);
        let pipe = setting_sun_pipeline(&conv, Normalization::Literal).unwrap();
        assert_eq!(pipe.table.degree, 6);
        assert_eq!(
            pipe.table.row_or_zero(0, 0),
            Expr::from_mono(mono().with_coeff(a("a0").pow(3)).with_x_int(0, -3))
        );
        let c = a("a0").pow(2).scale(&rat_int(3));
        let expected = Expr::from_mono(
            mono().with_coeff(c.mul(&a("a1"))).with_x_int(0, -2).with_log_x(0, 1),
        )
        .add(&Expr::from_mono(mono().with_coeff(c.mul(&a("A1"))).with_x_int(0, -2)));
        assert_eq!(pipe.table.row_or_zero(2, 0), expected);
        assert_eq!(
            pipe.table.row_or_zero(2, 1),
            Expr::from_mono(
                mono().with_coeff(a("a0").pow(2).mul(&a("a1")).scale(&rat_int(6))).with_x_int(0, -2)
            )
        );
        assert!(pipe.table.rows.iter().all(|r| r.l % 2 == 0));
        assert!(pipe.check.all_pass());
    }

    #[test]
    fn triple_line_renormalized_rows() {
        let conv = MetricConvention::minkowski(4, 2);
        let pipe = setting_sun_pipeline(&conv, Normalization::Literal).unwrap();
        let ext = &pipe.extended;
        assert_eq!(ext.l0, 2);

        let ov = |child: Expr| child.overline(4).unwrap();
        let log_over_x = Expr::from_mono(mono().with_x_int(0, -1).with_log_x(0, 1));
        let log_sq_over_x = Expr::from_mono(mono().with_x_int(0, -1).with_log_x(0, 2));

        let want_21 = Expr::box_op(
            0,
            ov(log_over_x.scale(&a("a0").pow(2).mul(&a("a1")).scale(&rat(3, 2)))),
        );
        assert_eq!(ext.table.row_or_zero(2, 1), want_21);

        let c = a("a0").pow(2).scale(&rat_int(3));
        let child_20 = log_over_x
            .scale(&c.mul(&a("A1")).scale(&rat(1, 4)))
            .add(
                &log_sq_over_x
                    .add(&log_over_x.scale_rat(&rat_int(2)))
                    .scale(&c.mul(&a("a1")).scale(&rat(1, 8))),
            );
        assert_eq!(ext.table.row_or_zero(2, 0), Expr::box_op(0, ov(child_20)));

        let want_0 = Expr::box_op(
            0,
            Expr::box_op(0, ov(log_over_x.scale(&a("a0").pow(3).scale(&rat(-1, 32))))),
        );
        assert_eq!(ext.table.row_or_zero(0, 0), want_0);

        let delta = |op: DeltaOp| Expr::delta(op, 4, vec![0]);
        assert_eq!(
            ext.counterterms,
            vec![
                delta(DeltaOp::Box(0)),
                Expr::from_mono(mono().with_mass(2)).multiply(&delta(DeltaOp::Id)).unwrap(),
                Expr::from_mono(mono().with_mass(2).with_log_m(1))
                    .multiply(&delta(DeltaOp::Id))
                    .unwrap(),
            ]
        );
    }

    #[test]
    fn dressed_table_rows_match_reference() {
        let pipe = setting_sun_hat_pipeline(Normalization::Literal).unwrap();
        assert_eq!(pipe.table.degree, 10);
        assert_eq!(pipe.table.k, 8);
        assert!(pipe.check.all_pass());

        let ov = |child: Expr| child.overline(4).unwrap();
        let log_over_w = Expr::from_mono(mono().with_x_int(2, -1).with_log_x(2, 1));
        let log_sq_over_w = Expr::from_mono(mono().with_x_int(2, -1).with_log_x(2, 2));
        let delta_w = |op: DeltaOp| Expr::delta(op, 4, vec![2]);

        let u0 = Expr::box_op(
            2,
            Expr::box_op(2, ov(log_over_w.scale(&a("a0").pow(3).scale(&rat(-1, 32))))),
        )
        .add(&delta_w(DeltaOp::Box(2)).scale(&a("C0")));
        let u20 = {
            let c = a("a0").pow(2).scale(&rat_int(3));
            let child = log_over_w
                .scale(&c.mul(&a("A1")).scale(&rat(1, 4)))
                .add(
                    &log_sq_over_w
                        .add(&log_over_w.scale_rat(&rat_int(2)))
                        .scale(&c.mul(&a("a1")).scale(&rat(1, 8))),
                );
            Expr::box_op(2, ov(child)).add(&delta_w(DeltaOp::Id).scale(&a("C1")))
        };
        let u21 = Expr::box_op(
            2,
            ov(log_over_w.scale(&a("a0").pow(2).mul(&a("a1")).scale(&rat(3, 2)))),
        )
        .add(&delta_w(DeltaOp::Id).scale(&a("C2")));

        let inv_x = Expr::from_mono(mono().with_x_int(0, -1));
        let inv_y = Expr::from_mono(mono().with_x_int(1, -1));
        let inv_xy = inv_x.multiply(&inv_y).unwrap();

        let want_v0 = u0.multiply(&inv_xy).unwrap().scale(&a("a0").pow(2));
        assert_eq!(pipe.table.row_or_zero(0, 0), want_v0);

        let want_v21 = u21
            .multiply(&inv_xy)
            .unwrap()
            .scale(&a("a0").pow(2))
            .add(
                &u0.multiply(&inv_x.add(&inv_y))
                    .unwrap()
                    .scale(&a("a0").mul(&a("a1")).scale(&rat_int(2))),
            );
        assert_eq!(pipe.table.row_or_zero(2, 1), want_v21);

        let leg_x_log = Expr::from_mono(mono().with_coeff(a("a1")).with_log_x(0, 1))
            .add(&Expr::from_mono(mono().with_coeff(a("A1"))));
        let leg_y_log = Expr::from_mono(mono().with_coeff(a("a1")).with_log_x(1, 1))
            .add(&Expr::from_mono(mono().with_coeff(a("A1"))));
        let want_v20 = u20
            .multiply(&inv_xy)
            .unwrap()
            .scale(&a("a0").pow(2))
            .add(
                &u0.multiply(&leg_y_log.multiply(&inv_x).unwrap().add(
                    &leg_x_log.multiply(&inv_y).unwrap(),
                ))
                .unwrap()
                .scale(&a("a0")),
            );
        assert_eq!(pipe.table.row_or_zero(2, 0), want_v20);
    }

    #[test]
    fn dressed_rows_subtract_to_reference_brackets() {
        let pipe = setting_sun_hat_pipeline(Normalization::Literal).unwrap();

        let v21 = pipe.row("v21").unwrap();
        assert_eq!(v21.degree, 8);
        assert_eq!(v21.pole_order, 2);
        assert_eq!(
            v21.brackets,
            vec![
                (1, vec![rat_int(0), rat(1, 2), rat(1, 32)]),
                (2, vec![rat_int(0), rat_int(0), rat(-1, 32)]),
            ]
        );
        assert!(v21.reconstruction_ok);

        let v20 = pipe.row("v20").unwrap();
        assert_eq!(v20.pole_order, 3);
        assert_eq!(
            v20.brackets,
            vec![
                (1, vec![rat_int(0), rat(3, 4), rat(3, 32), rat(1, 384)]),
                (2, vec![rat_int(0), rat_int(0), rat(-3, 32), rat(-1, 128)]),
                (3, vec![rat_int(0), rat_int(0), rat_int(0), rat(1, 384)]),
            ]
        );
        assert!(v20.reconstruction_ok);

        let v0 = pipe.row("v0").unwrap();
        assert_eq!(v0.degree, 10);
        assert_eq!(v0.pole_order, 2);
        assert_eq!(
            v0.brackets,
            vec![
                (3, vec![rat(-1, 8), rat(1, 4), rat(1, 64)]),
                (4, vec![rat(7, 8), rat_int(0), rat(-1, 64)]),
            ]
        );
        assert!(v0.reconstruction_ok);

        let delta = Expr::delta(DeltaOp::Id, 8, vec![0, 1]);
        assert_eq!(v21.counterterms, vec![delta.clone()]);
        assert_eq!(v20.counterterms, vec![delta]);
        let boxes = Expr::delta(DeltaOp::Box(0), 8, vec![0, 1])
            .add(&Expr::delta(DeltaOp::Box(1), 8, vec![0, 1]));
        let grad = Expr::delta(DeltaOp::GradDot(0, 1), 8, vec![0, 1]);
        assert_eq!(v0.counterterms, vec![boxes, grad]);
    }

    #[test]
    fn freedom_scan_reports_the_log_restriction() {
        let flags = CtFlags { symmetric: true, covariant: true };
        let report = renorm_freedom_scan(10, 8, &[0, 1], 1, &flags);
        let boxes = Expr::delta(DeltaOp::Box(0), 8, vec![0, 1])
            .add(&Expr::delta(DeltaOp::Box(1), 8, vec![0, 1]));
        let grad = Expr::delta(DeltaOp::GradDot(0, 1), 8, vec![0, 1]);
        let delta = Expr::delta(DeltaOp::Id, 8, vec![0, 1]);
        assert_eq!(
            report.restricted,
            vec![
                FreedomEntry { op: boxes, mass_power: 0, log_powers: vec![0] },
                FreedomEntry { op: grad, mass_power: 0, log_powers: vec![0] },
                FreedomEntry { op: delta, mass_power: 2, log_powers: vec![0, 1] },
            ]
        );
        assert!(report.unrestricted.iter().all(|e| e.log_powers.is_empty()));
        assert_eq!(report.unrestricted.len(), 3);

        let covariant = CtFlags::default();
        let sun = renorm_freedom_scan(6, 4, &[0], 1, &covariant);
        let ops: Vec<(u32, Vec<u32>)> =
            sun.restricted.iter().map(|e| (e.mass_power, e.log_powers.clone())).collect();
        assert_eq!(ops, vec![(0, vec![0]), (2, vec![0, 1])]);

        let empty = renorm_freedom_scan(6, 8, &[0, 1], 1, &flags);
        assert!(empty.restricted.is_empty() && empty.unrestricted.is_empty());
    }

    #[test]
    fn pipeline_reports_are_deterministic() {
        let a = setting_sun_hat_pipeline(Normalization::Literal).unwrap();
        let b = setting_sun_hat_pipeline(Normalization::Literal).unwrap();
        assert_eq!(
            crate::json::to_json_string(&a.to_json()),
            crate::json::to_json_string(&b.to_json())
        );
    }
}
