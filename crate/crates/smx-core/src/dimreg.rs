//! Regulated propagators and their products. Every line between a vertex
//! pair carries its own exponent symbol; a product of regulated propagators
//! then splits into bins labelled by how many factors on each line took the
//! massless branch versus the analytic mass branch. Binned coefficients are
//! exactly homogeneous, so no logarithms appear anywhere in this layer.

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::expr::calculus::{apply_box, apply_euler};
use crate::expr::{Expr, Group, MetricConvention, Monomial, Term};
use crate::json::obj;
use crate::linform::LinForm;
use crate::poly::CoeffPoly;
use crate::rat::{rat, rat_int, rat_to_i64, Rat};
use num::Zero;
use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};

/// One vertex pair together with its exponent symbol and the relative
/// coordinate group its invariant lives in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineSlot {
    pub vertices: (u32, u32),
    pub group: Group,
    pub zeta: String,
}

/// The line slots of an n-vertex configuration, one per unordered vertex
/// pair, in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineIndexing {
    pub n_vertices: u32,
    pub slots: Vec<LineSlot>,
}

impl LineIndexing {
    pub fn complete(n_vertices: u32) -> Self {
        let mut slots = Vec::new();
        for i in 1..=n_vertices {
            for j in (i + 1)..=n_vertices {
                slots.push(LineSlot {
                    vertices: (i, j),
                    group: slots.len() as Group,
                    zeta: format!("z{i}{j}"),
                });
            }
        }
        LineIndexing { n_vertices, slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn groups(&self) -> BTreeSet<Group> {
        self.slots.iter().map(|s| s.group).collect()
    }

    fn zeta_of_group(&self, g: Group) -> Option<&str> {
        self.slots.iter().find(|s| s.group == g).map(|s| s.zeta.as_str())
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.slots
                .iter()
                .map(|s| {
                    obj(vec![
                        ("vertices", Value::Array(vec![s.vertices.0.into(), s.vertices.1.into()])),
                        ("group", s.group.into()),
                        ("zeta", Value::String(s.zeta.clone())),
                    ])
                })
                .collect(),
        )
    }
}

/// One factor of a regulated product: a propagator on a line slot with an
/// optional number of wave operators applied to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegFactor {
    pub slot: usize,
    pub boxes: u32,
}

impl RegFactor {
    pub fn plain(slot: usize) -> Self {
        RegFactor { slot, boxes: 0 }
    }
}

/// Bin label of a regulated expansion: the mass power p together with the
/// per-slot counts of analytic-branch (c) and massless-branch (h) factors.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RegBinKey {
    pub p: u32,
    pub c: Vec<u32>,
    pub h: Vec<u32>,
}

impl RegBinKey {
    pub fn label(&self) -> String {
        let join = |v: &[u32]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
        format!("{}:{}:{}", self.p, join(&self.c), join(&self.h))
    }

    pub fn c_total(&self) -> u32 {
        self.c.iter().sum()
    }

    pub fn h_total(&self) -> u32 {
        self.h.iter().sum()
    }

    /// Linear form `sum_j w_j zeta_j` for per-slot weights w.
    fn weighted_zeta(weights: &[u32], lines: &LineIndexing) -> LinForm {
        let mut acc = LinForm::zero();
        for (w, slot) in weights.iter().zip(&lines.slots) {
            if *w != 0 {
                acc = acc.add(&LinForm::reg_term(&slot.zeta, rat_int(*w as i64)));
            }
        }
        acc
    }

    /// Mass exponent carried by this bin's prefactor, `2p - 2 c.zeta`.
    pub fn mass_form(&self, lines: &LineIndexing) -> LinForm {
        Self::weighted_zeta(&self.c, lines)
            .scale(&rat_int(-2))
            .add_int(2 * self.p as i64)
    }

    /// Homogeneity degree of the bin coefficient, `D - 2p - 2 h.zeta`.
    pub fn coeff_degree(&self, degree: &LinForm, lines: &LineIndexing) -> LinForm {
        degree
            .add_int(-2 * self.p as i64)
            .sub(&Self::weighted_zeta(&self.h, lines).scale(&rat_int(2)))
    }

    /// Joint (x, m) degree of the full bracket, `D - 2(h+c).zeta`.
    pub fn joint_degree(&self, degree: &LinForm, lines: &LineIndexing) -> LinForm {
        let hc: Vec<u32> = self.c.iter().zip(&self.h).map(|(a, b)| a + b).collect();
        degree.sub(&Self::weighted_zeta(&hc, lines).scale(&rat_int(2)))
    }
}

/// A product of regulated propagators sorted into `(p, c, h)` bins. Each bin
/// holds the mass-independent coefficient; its mass prefactor is implied by
/// the key. Terms beyond the kept mass order sit in `remainders` with their
/// mass factors intact, keyed at order + 1.
#[derive(Clone, Debug, PartialEq)]
pub struct RegSmExpansion {
    pub degree: LinForm,
    /// Highest mass power p kept in the bins.
    pub order: u32,
    /// Number of propagator factors; every key satisfies |c| + |h| = this.
    pub q_factors: u32,
    pub lines: LineIndexing,
    pub bins: BTreeMap<RegBinKey, Expr>,
    pub remainders: BTreeMap<RegBinKey, Expr>,
}

impl RegSmExpansion {
    pub fn bin(&self, key: &RegBinKey) -> Expr {
        self.bins.get(key).cloned().unwrap_or_else(Expr::zero)
    }

    /// Keys of populated bins grouped as (total c, total h), ignoring p.
    pub fn branch_profile(&self) -> BTreeSet<(u32, u32)> {
        self.bins.keys().map(|k| (k.c_total(), k.h_total())).collect()
    }

    /// Reattaches every mass prefactor and sums bins and remainders back
    /// into the plain product expression.
    pub fn to_expr(&self) -> Expr {
        let mut acc = Expr::zero();
        for (key, u) in &self.bins {
            acc = acc.add(&attach_mass(u, &key.mass_form(&self.lines)));
        }
        for rem in self.remainders.values() {
            acc = acc.add(rem);
        }
        acc
    }

    pub fn to_json(&self) -> Value {
        let render = |m: &BTreeMap<RegBinKey, Expr>| {
            Value::Object(
                m.iter()
                    .map(|(k, e)| (k.label(), e.to_json()))
                    .collect(),
            )
        };
        obj(vec![
            ("schema", Value::String("smx/1".into())),
            ("kind", Value::String("RegSmExpansion".into())),
            ("degree", Value::String(self.degree.to_string())),
            ("order", self.order.into()),
            ("q", self.q_factors.into()),
            ("lines", self.lines.to_json()),
            ("bins", render(&self.bins)),
            ("remainders", render(&self.remainders)),
        ])
    }
}

/// Multiplies a bin coefficient by its mass prefactor `(m/M)^w`.
fn attach_mass(u: &Expr, w: &LinForm) -> Expr {
    let terms = u
        .terms()
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.mono.mass = t.mono.mass.add(w);
            t.mono.scale = t.mono.scale.sub(w);
            t
        })
        .collect();
    Expr::from_terms(terms)
}

/// Truncated regulated Feynman propagator in even dimension d > 2: a
/// massless-branch series `h_l X^(l+1-d/2+zeta)` plus an analytic-branch
/// series `c_l m^(d-2+2l-2*zeta) X^l`, both carrying `M^(2*zeta)` and
/// symbolic coefficients named after the slot's exponent symbol.
pub fn reg_propagator(
    d: u32,
    group: Group,
    zeta: &str,
    trunc_h: u32,
    trunc_c: u32,
) -> Result<Expr> {
    if !d.is_multiple_of(2) || d <= 2 {
        return Err(Error::OddDimension(d));
    }
    let half_d = (d / 2) as i64;
    let scale = LinForm::reg_term(zeta, rat_int(2));
    let mut terms = Vec::new();
    for l in 0..=trunc_h {
        let inv = LinForm::reg_var(zeta).add_int(l as i64 + 1 - half_d);
        terms.push(Term::from_mono(
            Monomial::one()
                .with_coeff(Coeff::var(&format!("h{l}_{zeta}")))
                .with_mass(2 * l as i64)
                .with_scale_form(scale.clone())
                .with_x_pow(group, inv),
        ));
    }
    for l in 0..=trunc_c {
        let mass = LinForm::reg_term(zeta, rat_int(-2)).add_int(d as i64 - 2 + 2 * l as i64);
        terms.push(Term::from_mono(
            Monomial::one()
                .with_coeff(Coeff::var(&format!("c{l}_{zeta}")))
                .with_mass_form(mass)
                .with_scale_form(scale.clone())
                .with_x_int(group, l as i64),
        ));
    }
    Ok(Expr::from_terms(terms))
}

/// Expands a product of regulated propagators and sorts the terms into
/// `(p, c, h)` bins. Mass powers above `order` go to the remainder map with
/// their mass factors intact.
pub fn reg_product_sm(
    conv: &MetricConvention,
    lines: &LineIndexing,
    factors: &[RegFactor],
    trunc_h: u32,
    trunc_c: u32,
    order: u32,
) -> Result<RegSmExpansion> {
    if factors.is_empty() {
        return Err(Error::UnsupportedForm(
            "a regulated product needs at least one factor".into(),
        ));
    }
    let mut degree = LinForm::zero();
    let mut product = Expr::one();
    for f in factors {
        let slot = lines.slots.get(f.slot).ok_or_else(|| {
            Error::UnsupportedForm(format!("line slot {} out of range", f.slot))
        })?;
        let mut prop = reg_propagator(conv.d, slot.group, &slot.zeta, trunc_h, trunc_c)?;
        for _ in 0..f.boxes {
            prop = apply_box(conv, slot.group, &prop)?;
        }
        degree = degree.add_int(conv.d as i64 - 2 + 2 * f.boxes as i64);
        product = product.multiply(&prop)?;
    }

    let mut bins: BTreeMap<RegBinKey, Expr> = BTreeMap::new();
    let mut remainders: BTreeMap<RegBinKey, Expr> = BTreeMap::new();
    for t in product.terms() {
        let key = classify_term(t, lines, factors.len() as u32)?;
        if key.p <= order {
            let mass = key.mass_form(lines);
            let mut u = t.clone();
            u.mono.mass = u.mono.mass.sub(&mass);
            u.mono.scale = u.mono.scale.add(&mass);
            let entry = bins.entry(key).or_insert_with(Expr::zero);
            *entry = entry.add(&Expr::from_term(u));
        } else {
            let mut key = key;
            key.p = order + 1;
            let entry = remainders.entry(key).or_insert_with(Expr::zero);
            *entry = entry.add(&Expr::from_term(t.clone()));
        }
    }
    bins.retain(|_, e| !e.is_zero());
    remainders.retain(|_, e| !e.is_zero());

    Ok(RegSmExpansion {
        degree,
        order,
        q_factors: factors.len() as u32,
        lines: lines.clone(),
        bins,
        remainders,
    })
}

/// Reads the bin label of one product term off its exponents: p from the
/// numeric mass power, c from the exponent-symbol content of the mass, h
/// from the exponent-symbol content of the invariant powers.
fn classify_term(t: &Term, lines: &LineIndexing, q: u32) -> Result<RegBinKey> {
    if !t.factors.is_empty() || t.mono.log_m != 0 || t.mono.groups.values().any(|g| g.log != 0) {
        return Err(Error::UnsupportedForm(
            "regulated products stay log-free and marker-free".into(),
        ));
    }
    let bad = |what: &str| Error::UnsupportedForm(format!("regulated term has {what}"));

    let p2 = rat_to_i64(&t.mono.mass.rat).ok_or_else(|| bad("a fractional mass power"))?;
    if p2 < 0 || p2 % 2 != 0 {
        return Err(bad("a mass power outside 2N"));
    }
    let mut c = vec![0u32; lines.len()];
    for (var, coeff) in &t.mono.mass.reg {
        let idx = lines
            .slots
            .iter()
            .position(|s| &s.zeta == var)
            .ok_or_else(|| bad("an unknown exponent symbol in its mass power"))?;
        let w = rat_to_i64(coeff).ok_or_else(|| bad("a fractional exponent weight"))?;
        if w > 0 || w % 2 != 0 {
            return Err(bad("a mass exponent weight outside -2N"));
        }
        c[idx] = (-w / 2) as u32;
    }
    let mut h = vec![0u32; lines.len()];
    for (g, pows) in &t.mono.groups {
        let zeta = lines
            .zeta_of_group(*g)
            .ok_or_else(|| bad("an invariant outside the line slots"))?;
        for (var, coeff) in &pows.inv.reg {
            if var != zeta {
                return Err(bad("a foreign exponent symbol on an invariant"));
            }
            let w = rat_to_i64(coeff).ok_or_else(|| bad("a fractional exponent weight"))?;
            if w < 0 {
                return Err(bad("a negative exponent weight on an invariant"));
            }
            let idx = lines.slots.iter().position(|s| s.zeta == *zeta).unwrap();
            h[idx] = w as u32;
        }
    }
    let key = RegBinKey { p: (p2 / 2) as u32, c, h };
    if key.c_total() + key.h_total() != q {
        return Err(bad("branch counts that do not add up to the factor count"));
    }
    Ok(key)
}

/// Applies a wave operator to every bin and remainder, shifting the degree
/// by two.
pub fn reg_box(conv: &MetricConvention, r: &RegSmExpansion, slot: usize) -> Result<RegSmExpansion> {
    let group = r
        .lines
        .slots
        .get(slot)
        .ok_or_else(|| Error::UnsupportedForm(format!("line slot {slot} out of range")))?
        .group;
    let mut bins = BTreeMap::new();
    for (key, u) in &r.bins {
        let boxed = apply_box(conv, group, u)?;
        if !boxed.is_zero() {
            bins.insert(key.clone(), boxed);
        }
    }
    let mut remainders = BTreeMap::new();
    for (key, u) in &r.remainders {
        let boxed = apply_box(conv, group, u)?;
        if !boxed.is_zero() {
            remainders.insert(key.clone(), boxed);
        }
    }
    Ok(RegSmExpansion {
        degree: r.degree.add_int(2),
        order: r.order,
        q_factors: r.q_factors,
        lines: r.lines.clone(),
        bins,
        remainders,
    })
}

/// Projects the single component of homogeneity degree `D - 2p - 2*target.zeta`
/// out of a sum of exactly homogeneous pieces with known branch counts. The
/// candidate list must contain the target; coincident candidates make the
/// eigenvalues collide and are rejected.
pub fn reg_project_coeff(
    u: &Expr,
    target: &[u32],
    candidates: &[Vec<u32>],
    degree: &LinForm,
    p: u32,
    lines: &LineIndexing,
) -> Result<Expr> {
    if !candidates.iter().any(|h| h == target) {
        return Err(Error::UnsupportedForm(
            "projection target is not among the candidates".into(),
        ));
    }
    for (i, a) in candidates.iter().enumerate() {
        for b in &candidates[i + 1..] {
            if a == b {
                let label = RegBinKey::weighted_zeta(a, lines).to_string();
                return Err(Error::DegenerateRegulators(label.clone(), label));
            }
        }
    }
    let mut result = u.clone();
    for h in candidates {
        if h == target {
            continue;
        }
        let key = RegBinKey { p, c: vec![0; lines.len()], h: h.clone() };
        let shift = key.coeff_degree(degree, lines);
        result = apply_euler(&result, false)?
            .add(&result.scale(&Coeff::from_poly(shift.to_poly())));
        let mut den = LinForm::zero();
        for ((t, c), slot) in target.iter().zip(h).zip(&lines.slots) {
            let w = rat_int(2) * (rat_int(*t as i64) - rat_int(*c as i64));
            if !w.is_zero() {
                den = den.add(&LinForm::reg_term(&slot.zeta, w));
            }
        }
        if den.is_zero() {
            let label = RegBinKey::weighted_zeta(target, lines).to_string();
            return Err(Error::DegenerateRegulators(
                label,
                RegBinKey::weighted_zeta(h, lines).to_string(),
            ));
        }
        result = result.scale(&Coeff::new(CoeffPoly::one(), den.to_poly()));
    }
    Ok(result)
}

/// Structural report on a regulated expansion: head bins free of analytic
/// branches, massless-count-zero bins smooth, every bin exactly homogeneous
/// at its labelled degree, brackets jointly homogeneous, and remainder
/// invariant powers within the order bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegCheckReport {
    pub head_bins_ok: bool,
    pub smooth_bins_ok: bool,
    pub bin_homogeneity_ok: bool,
    pub joint_homogeneity_ok: bool,
    pub remainder_bound_ok: bool,
    pub counts_ok: bool,
    pub failures: Vec<String>,
}

impl RegCheckReport {
    pub fn all_ok(&self) -> bool {
        self.head_bins_ok
            && self.smooth_bins_ok
            && self.bin_homogeneity_ok
            && self.joint_homogeneity_ok
            && self.remainder_bound_ok
            && self.counts_ok
    }

    pub fn to_json(&self) -> Value {
        obj(vec![
            ("head_bins_ok", self.head_bins_ok.into()),
            ("smooth_bins_ok", self.smooth_bins_ok.into()),
            ("bin_homogeneity_ok", self.bin_homogeneity_ok.into()),
            ("joint_homogeneity_ok", self.joint_homogeneity_ok.into()),
            ("remainder_bound_ok", self.remainder_bound_ok.into()),
            ("counts_ok", self.counts_ok.into()),
            ("all_ok", self.all_ok().into()),
            (
                "failures",
                Value::Array(self.failures.iter().map(|s| Value::String(s.clone())).collect()),
            ),
        ])
    }
}

pub fn reg_check(r: &RegSmExpansion) -> Result<RegCheckReport> {
    let mut report = RegCheckReport {
        head_bins_ok: true,
        smooth_bins_ok: true,
        bin_homogeneity_ok: true,
        joint_homogeneity_ok: true,
        remainder_bound_ok: true,
        counts_ok: true,
        failures: Vec::new(),
    };
    let groups = r.lines.groups();

    for (key, u) in &r.bins {
        let label = key.label();
        if key.c_total() + key.h_total() != r.q_factors {
            report.counts_ok = false;
            report.failures.push(format!("bin {label}: branch counts miss the factor count"));
        }
        if key.p == 0 && key.c_total() != 0 {
            report.head_bins_ok = false;
            report.failures.push(format!("bin {label}: analytic branch at mass order zero"));
        }
        if key.h_total() == 0 {
            let smooth = u.terms().iter().all(|t| {
                t.factors.is_empty() && t.mono.smooth_in(&groups)
            });
            if !smooth {
                report.smooth_bins_ok = false;
                report.failures.push(format!("bin {label}: massless-free bin is not smooth"));
            }
        }
        let deg = key.coeff_degree(&r.degree, &r.lines);
        let residual = apply_euler(u, false)?
            .add(&u.scale(&Coeff::from_poly(deg.to_poly())));
        if !residual.is_zero() {
            report.bin_homogeneity_ok = false;
            report.failures.push(format!("bin {label}: not homogeneous of degree {deg}"));
        }
        let bracket = attach_mass(u, &key.mass_form(&r.lines));
        let joint = key.joint_degree(&r.degree, &r.lines);
        let residual = apply_euler(&bracket, true)?
            .add(&bracket.scale(&Coeff::from_poly(joint.to_poly())));
        if !residual.is_zero() {
            report.joint_homogeneity_ok = false;
            report.failures.push(format!("bin {label}: bracket misses joint degree {joint}"));
        }
    }

    let bound = r.degree.rat.clone() - rat_int(2 * (r.order as i64 + 1));
    for (key, rem) in &r.remainders {
        let label = key.label();
        if key.c_total() + key.h_total() != r.q_factors {
            report.counts_ok = false;
            report.failures.push(format!("remainder {label}: branch counts miss the factor count"));
        }
        for t in rem.terms() {
            let mut sd = Rat::zero();
            let mut sd_reg = LinForm::zero();
            for pows in t.mono.groups.values() {
                sd -= pows.inv.rat.clone() * rat_int(2);
                sd_reg = sd_reg.sub(&LinForm { rat: Rat::zero(), reg: pows.inv.reg.clone() });
            }
            let expected_reg = RegBinKey::weighted_zeta(&key.h, &r.lines).scale(&rat(-2, 1));
            if sd > bound || sd_reg.scale(&rat_int(2)).reg != expected_reg.reg {
                report.remainder_bound_ok = false;
                report
                    .failures
                    .push(format!("remainder {label}: invariant power outside the order bound"));
                break;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_int;

    fn conv4() -> MetricConvention {
        MetricConvention::euclidean(4, 3)
    }

    #[test]
    fn propagator_rejects_bad_dimensions() {
        assert!(matches!(reg_propagator(3, 0, "z12", 1, 1), Err(Error::OddDimension(3))));
        assert!(matches!(reg_propagator(5, 0, "z12", 1, 1), Err(Error::OddDimension(5))));
        assert!(matches!(reg_propagator(2, 0, "z12", 1, 1), Err(Error::OddDimension(2))));
    }

    #[test]
    fn propagator_term_grading() {
        let e = reg_propagator(4, 0, "z12", 2, 1).unwrap();
        assert_eq!(e.terms().len(), 5);
        for t in e.terms() {
            let gp = t.mono.group(0);
            assert_eq!(t.mono.scale, LinForm::reg_term("z12", rat_int(2)));
            let h_weight = gp.inv.reg.get("z12").cloned().unwrap_or_else(Rat::zero);
            if h_weight == rat_int(1) {
                let l = rat_to_i64(&t.mono.mass.rat).unwrap() / 2;
                assert_eq!(gp.inv.rat, rat_int(l - 1));
                assert!(t.mono.mass.reg.is_empty());
            } else {
                let l = rat_to_i64(&gp.inv.rat).unwrap();
                assert_eq!(t.mono.mass.rat, rat_int(2 + 2 * l));
                assert_eq!(t.mono.mass.reg.get("z12"), Some(&rat_int(-2)));
            }
        }
    }

    #[test]
    fn propagator_joint_homogeneity_is_exact() {
        for d in [4u32, 6] {
            let e = reg_propagator(d, 0, "z12", 3, 2).unwrap();
            let joint = LinForm::reg_term("z12", rat_int(-2)).add_int(d as i64 - 2);
            let residual = apply_euler(&e, true)
                .unwrap()
                .add(&e.scale(&Coeff::from_poly(joint.to_poly())));
            assert!(residual.is_zero());
        }
    }

    #[test]
    fn two_line_product_bins() {
        let lines = LineIndexing::complete(3);
        let factors = [RegFactor::plain(0), RegFactor::plain(1)];
        let r = reg_product_sm(&conv4(), &lines, &factors, 2, 2, 2).unwrap();
        assert_eq!(r.degree, LinForm::from_int(4));
        assert_eq!(r.q_factors, 2);
        let profile = r.branch_profile();
        for want in [(2, 0), (1, 1), (0, 2)] {
            assert!(profile.contains(&want), "missing branch profile {want:?}");
        }
        for key in r.bins.keys() {
            if key.p == 0 {
                assert_eq!(key.c_total(), 0);
            }
        }
        let report = reg_check(&r).unwrap();
        assert!(report.all_ok(), "failures: {:?}", report.failures);
    }

    #[test]
    fn single_line_product_round_trips() {
        let lines = LineIndexing::complete(2);
        let prop = reg_propagator(4, 0, "z12", 2, 2).unwrap();
        let r = reg_product_sm(&conv4(), &lines, &[RegFactor::plain(0)], 2, 2, 8).unwrap();
        assert!(r.remainders.is_empty());
        assert_eq!(r.to_expr(), prop);
        let report = reg_check(&r).unwrap();
        assert!(report.all_ok(), "failures: {:?}", report.failures);
    }

    #[test]
    fn triple_factor_counts_add_up() {
        let lines = LineIndexing::complete(2);
        let factors = [RegFactor::plain(0), RegFactor::plain(0), RegFactor::plain(0)];
        let r = reg_product_sm(&conv4(), &lines, &factors, 1, 1, 1).unwrap();
        for key in r.bins.keys().chain(r.remainders.keys()) {
            assert_eq!(key.c_total() + key.h_total(), 3);
        }
        assert!(!r.remainders.is_empty());
        let report = reg_check(&r).unwrap();
        assert!(report.all_ok(), "failures: {:?}", report.failures);
    }

    #[test]
    fn ordering_does_not_change_bins() {
        let lines = LineIndexing::complete(3);
        let a = reg_product_sm(
            &conv4(),
            &lines,
            &[RegFactor::plain(0), RegFactor::plain(2), RegFactor::plain(0)],
            1,
            1,
            2,
        )
        .unwrap();
        let b = reg_product_sm(
            &conv4(),
            &lines,
            &[RegFactor::plain(2), RegFactor::plain(0), RegFactor::plain(0)],
            1,
            1,
            2,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn box_shifts_degree_by_two() {
        let lines = LineIndexing::complete(2);
        let r = reg_product_sm(&conv4(), &lines, &[RegFactor::plain(0)], 1, 1, 4).unwrap();
        let boxed = reg_box(&conv4(), &r, 0).unwrap();
        assert_eq!(boxed.degree, LinForm::from_int(4));
        let report = reg_check(&boxed).unwrap();
        assert!(report.all_ok(), "failures: {:?}", report.failures);
    }

    #[test]
    fn boxed_factor_enters_the_degree() {
        let lines = LineIndexing::complete(2);
        let factors = [RegFactor { slot: 0, boxes: 1 }, RegFactor::plain(0)];
        let r = reg_product_sm(&conv4(), &lines, &factors, 1, 1, 2).unwrap();
        assert_eq!(r.degree, LinForm::from_int(6));
        let report = reg_check(&r).unwrap();
        assert!(report.all_ok(), "failures: {:?}", report.failures);
    }

    #[test]
    fn projection_recovers_planted_component() {
        let lines = LineIndexing::complete(2);
        let degree = LinForm::from_int(4);
        let u_a = Expr::from_mono(
            Monomial::one()
                .with_coeff(Coeff::var("uA"))
                .with_x_pow(0, LinForm::reg_var("z12").add_int(-2)),
        );
        let u_b = Expr::from_mono(
            Monomial::one()
                .with_coeff(Coeff::var("uB"))
                .with_x_pow(0, LinForm::reg_term("z12", rat_int(2)).add_int(-2)),
        );
        let mixed = u_a.add(&u_b);
        let candidates = vec![vec![1], vec![2]];
        let got = reg_project_coeff(&mixed, &[1], &candidates, &degree, 0, &lines).unwrap();
        assert_eq!(got, u_a);
        let kill = reg_project_coeff(&u_a, &[2], &candidates, &degree, 0, &lines).unwrap();
        assert!(kill.is_zero());
        let single = reg_project_coeff(&u_b, &[2], &[vec![2]], &degree, 0, &lines).unwrap();
        assert_eq!(single, u_b);
    }

    #[test]
    fn projection_rejects_coincident_exponents() {
        let lines = LineIndexing::complete(2);
        let u = Expr::from_int(1);
        let err = reg_project_coeff(
            &u,
            &[1],
            &[vec![1], vec![1]],
            &LinForm::from_int(2),
            0,
            &lines,
        );
        assert!(matches!(err, Err(Error::DegenerateRegulators(_, _))));
    }

    #[test]
    fn planted_violation_is_flagged() {
        let lines = LineIndexing::complete(2);
        let mut r = reg_product_sm(&conv4(), &lines, &[RegFactor::plain(0)], 1, 1, 4).unwrap();
        r.bins.insert(
            RegBinKey { p: 0, c: vec![1], h: vec![0] },
            Expr::from_int(1),
        );
        let report = reg_check(&r).unwrap();
        assert!(!report.head_bins_ok);
        assert!(!report.all_ok());
    }

    #[test]
    fn serialization_uses_bin_labels() {
        let lines = LineIndexing::complete(2);
        let r = reg_product_sm(&conv4(), &lines, &[RegFactor::plain(0)], 1, 0, 0).unwrap();
        let json = r.to_json();
        let bins = json.get("bins").and_then(Value::as_object).unwrap();
        assert!(bins.contains_key("0:0:1"));
        let rems = json.get("remainders").and_then(Value::as_object).unwrap();
        assert!(rems.keys().all(|k| k.starts_with("1:")));
    }
}
