//! Euclidean pairings of engine expressions against radial test functions.
//!
//! Works term by term in the convention X = |x|^2, M = 1. Marked structure
//! is peeled by parts onto the test-function side: a wave operator becomes
//! the radial Laplacian of the weight, an l-fold moment contraction becomes
//! (-1)^l r^l times the l-th radial derivative, and monomials met along the
//! way multiply the weight pointwise. What remains is a one-dimensional
//! radial integral against r^(k-1) times the sphere volume.
//!
//! Genuinely multi-variable structure (markers or deltas spanning several
//! groups) pairs symbolically only; plain separable products split into
//! one-dimensional factors, each taken against the same radial test
//! function.

use crate::error::{Error, Result};
use crate::expr::{DeltaOp, Expr, Factor, Term};
use crate::json::obj;
use crate::numeric::jet::{Jet, JET_ORDER};
use crate::numeric::quad::{integrate, DEFAULT_MAX_SEGMENTS};
use crate::numeric::testfn::TestFunction;
use crate::rat::{rat_int, rat_string, rat_to_f64, Rat};
use crate::scaling::{scaling_degree, ScalingDegree};
use num::Zero;
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug)]
pub struct PairingReport {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
    pub converged: bool,
}

impl PairingReport {
    pub fn to_json(&self) -> Value {
        obj(vec![
            ("converged", Value::Bool(self.converged)),
            ("error", Value::from(self.error)),
            ("nodes", Value::from(self.nodes as u64)),
            ("value", Value::from(self.value)),
        ])
    }
}

/// A test function together with the two deformations the limit protocols
/// need: argument rescaling h(r/s), and an infrared cutoff that vanishes
/// below rho and equals one above 2*rho.
pub(crate) struct Probe<'a> {
    pub h: &'a TestFunction,
    pub arg_scale: f64,
    pub cutoff: Option<f64>,
}

impl<'a> Probe<'a> {
    pub fn plain(h: &'a TestFunction) -> Self {
        Probe { h, arg_scale: 1.0, cutoff: None }
    }

    pub fn jet(&self, r: f64) -> Jet {
        let base = self.h.jet(r / self.arg_scale);
        let mut d = base.d;
        let mut chain = 1.0;
        for v in d.iter_mut() {
            *v *= chain;
            chain /= self.arg_scale;
        }
        let mut out = Jet { d };
        if let Some(rho) = self.cutoff {
            out = out.mul(&chi_jet(r, rho));
        }
        out
    }

    pub fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.h.support();
        let mut lo = lo * self.arg_scale;
        let hi = hi * self.arg_scale;
        if let Some(rho) = self.cutoff {
            lo = lo.max(rho);
        }
        (lo, hi)
    }
}

/// Smooth transition 0 -> 1 on [rho, 2*rho], built from exp(-1/u). Outside
/// a thin margin the factor is exactly 0 or 1 in f64, so the jets are too.
fn chi_jet(r: f64, rho: f64) -> Jet {
    let u = r / rho - 1.0;
    if u <= 1e-3 {
        return Jet::zero();
    }
    if u >= 1.0 - 1e-3 {
        return Jet::constant(1.0);
    }
    let uj = Jet::var(r).scale(1.0 / rho).sub(&Jet::constant(1.0));
    let g = uj.recip().scale(-1.0).exp();
    let g_mirror = Jet::constant(1.0).sub(&uj).recip().scale(-1.0).exp();
    g.div(&g.add(&g_mirror))
}

/// One peeled weight transformation, applied to the test side in the order
/// the structure was unwrapped (outermost first).
#[derive(Clone, Debug)]
enum Step {
    /// Multiply by X^pow log(M^2 X)^logs at the integration variable.
    Mul { pow: Rat, logs: u32 },
    /// Radial wave operator W'' + (k-1) W'/r.
    Wave,
    /// l-fold moment contraction (-1)^l r^l W^(l).
    Moment(u32),
}

fn mono_step(gp: &crate::expr::GroupPows) -> Step {
    Step::Mul { pow: gp.inv.rat.clone(), logs: gp.log }
}

fn derivative_cost(steps: &[Step]) -> usize {
    steps
        .iter()
        .map(|s| match s {
            Step::Mul { .. } => 0,
            Step::Wave => 2,
            Step::Moment(l) => *l as usize,
        })
        .sum()
}

/// Lowest power of r of the weight near the origin, tracked exactly. A box
/// only deepens the singularity once some singular monomial has been mixed
/// in; before that the weight is a smooth radial profile and stays one.
fn origin_power(steps: &[Step]) -> Rat {
    let mut p = Rat::zero();
    let mut smooth = true;
    for s in steps {
        match s {
            Step::Mul { pow, logs } => {
                p += &(pow * &rat_int(2));
                if !pow.is_zero() || *logs > 0 {
                    smooth = false;
                }
            }
            Step::Wave => {
                if !smooth {
                    p -= &rat_int(2);
                }
            }
            Step::Moment(_) => {}
        }
    }
    p
}

fn apply_steps(steps: &[Step], probe: &Probe, r: f64, k: u32) -> Jet {
    let mut w = probe.jet(r);
    for s in steps {
        match s {
            Step::Mul { pow, logs } => {
                let x = Jet::var(r).mul(&Jet::var(r));
                let mut c = x.powf(rat_to_f64(pow));
                for _ in 0..*logs {
                    c = c.mul(&x.ln());
                }
                w = w.mul(&c);
            }
            Step::Wave => {
                let lap = w.dshift().dshift();
                let slope = w.dshift().mul(&Jet::var(r).recip()).scale((k - 1) as f64);
                w = lap.add(&slope);
            }
            Step::Moment(l) => {
                let mut dl = w;
                for _ in 0..*l {
                    dl = dl.dshift();
                }
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                w = dl.mul(&Jet::var(r).powi(*l as i32)).scale(sign);
            }
        }
    }
    w
}

/// Surface area of the unit sphere in k dimensions, 2 pi^(k/2) / Gamma(k/2).
pub fn sphere_area(k: u32) -> f64 {
    let half = k as f64 / 2.0;
    let mut gamma;
    let mut x;
    if k.is_multiple_of(2) {
        gamma = 1.0;
        x = 1.0;
    } else {
        gamma = std::f64::consts::PI.sqrt();
        x = 0.5;
    }
    while x < half {
        gamma *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(half) / gamma
}

struct Accum {
    value: f64,
    error: f64,
    nodes: usize,
    converged: bool,
}

impl Accum {
    fn new() -> Self {
        Accum { value: 0.0, error: 0.0, nodes: 0, converged: true }
    }

    fn add(&mut self, coeff: f64, value: f64, error: f64, nodes: usize, converged: bool) {
        self.value += coeff * value;
        self.error += coeff.abs() * error;
        self.nodes += nodes;
        self.converged &= converged;
    }
}

fn guard_regulator_free(t: &Term) -> Result<()> {
    let clean = t.mono.mass.reg.is_empty()
        && t.mono.scale.reg.is_empty()
        && t.mono.groups.values().all(|gp| gp.inv.reg.is_empty());
    if !clean {
        return Err(Error::UnsupportedForm(
            "regulator symbols must be expanded away before numeric pairing".into(),
        ));
    }
    for f in &t.factors {
        if let Some(child) = f.child() {
            for ct in child.terms() {
                guard_regulator_free(ct)?;
            }
        }
    }
    Ok(())
}

fn radial_integral(steps: &[Step], probe: &Probe, tol: f64) -> Result<(f64, f64, usize, bool)> {
    let k = probe.h.k;
    let cost = derivative_cost(steps);
    if cost > JET_ORDER {
        return Err(Error::UnsupportedOperation(format!(
            "pairing weight needs {cost} derivative orders, jets carry {JET_ORDER}"
        )));
    }
    let (lo, hi) = probe.support();
    if lo <= 0.0 {
        let p = origin_power(steps);
        let critical = -rat_int(k as i64);
        if p <= critical {
            return Err(Error::NonIntegrable { sd: rat_string(&-p), k });
        }
    }
    let mut f = |r: f64| apply_steps(steps, probe, r, k).value() * r.powi(k as i32 - 1);
    let q = integrate(&mut f, lo.max(0.0), hi, tol, DEFAULT_MAX_SEGMENTS);
    let area = sphere_area(k);
    Ok((area * q.value, area * q.error, q.nodes, q.converged))
}

fn delta_value(op: &DeltaOp, probe: &Probe) -> Result<f64> {
    let j = probe.jet(0.0);
    match op {
        DeltaOp::Id => Ok(j.value()),
        DeltaOp::Box(_) => {
            if j.d[1].abs() > 1e-9 * (1.0 + j.d[2].abs()) {
                return Err(Error::UnsupportedOperation(
                    "delta derivatives need a test function with vanishing slope at the origin"
                        .into(),
                ));
            }
            Ok(probe.h.k as f64 * j.d[2])
        }
        other => Err(Error::UnsupportedOperation(format!(
            "no numeric rule for the delta operator `{other:?}`"
        ))),
    }
}

/// Unwraps one marked factor, extending the peeled weight steps, and sums
/// the resulting radial integrals.
fn eval_factor(
    f: &Factor,
    steps: &[Step],
    probe: &Probe,
    env: &BTreeMap<String, f64>,
    tol: f64,
    out: &mut Accum,
) -> Result<()> {
    let k = probe.h.k;
    match f {
        Factor::Overline { k: fk, z_moment: 0, child } => {
            if *fk != k {
                return Err(Error::UnsupportedGeometry(format!(
                    "extension marker lives in dimension {fk}, test function in {k}"
                )));
            }
            match scaling_degree(child, k)? {
                ScalingDegree::NegInf => Ok(()),
                ScalingDegree::Finite(sd) => {
                    if sd >= rat_int(k as i64) {
                        return Err(Error::NonIntegrable { sd: rat_string(&sd), k });
                    }
                    eval_leaves(child, steps, probe, env, tol, out)
                }
            }
        }
        Factor::Overline { .. } => Err(Error::UnsupportedForm(
            "bare moment marker outside its contraction".into(),
        )),
        Factor::MomentDiv { l, k: fk, child } => {
            if *fk != k {
                return Err(Error::UnsupportedGeometry(format!(
                    "moment contraction lives in dimension {fk}, test function in {k}"
                )));
            }
            for ct in child.terms() {
                let coeff = ct.mono.coeff.eval(env)?;
                let inner = match ct.factors.as_slice() {
                    [Factor::Overline { k: ok, z_moment, child: inner }]
                        if *ok == k && *z_moment == *l =>
                    {
                        inner
                    }
                    _ => {
                        return Err(Error::UnsupportedForm(
                            "moment contraction without a matching moment marker".into(),
                        ))
                    }
                };
                match scaling_degree(inner, k)? {
                    ScalingDegree::NegInf => continue,
                    ScalingDegree::Finite(sd) => {
                        let effective = &sd - &rat_int(*l as i64);
                        if effective >= rat_int(k as i64) {
                            return Err(Error::NonIntegrable {
                                sd: rat_string(&effective),
                                k,
                            });
                        }
                    }
                }
                let mut steps2 = steps.to_vec();
                steps2.push(Step::Moment(*l));
                if let Some(s) = single_group_steps(ct)? {
                    steps2.push(s);
                }
                let mut sub = Accum::new();
                eval_leaves(inner, &steps2, probe, env, tol, &mut sub)?;
                out.add(coeff, sub.value, sub.error, sub.nodes, sub.converged);
            }
            Ok(())
        }
        Factor::BoxOp { child, .. } => {
            let mut steps2 = steps.to_vec();
            steps2.push(Step::Wave);
            let mut sub = Accum::new();
            eval_marked(child, &steps2, probe, env, tol, &mut sub)?;
            out.add(1.0, sub.value, sub.error, sub.nodes, sub.converged);
            Ok(())
        }
        Factor::Delta { .. } => Err(Error::UnsupportedForm(
            "delta under a marked factor has no numeric pairing".into(),
        )),
        Factor::Remainder { .. } => Err(Error::UnsupportedForm(
            "opaque remainder terms have no numeric value".into(),
        )),
    }
}

/// The single monomial weight step of a term known to touch at most one
/// group.
fn single_group_steps(t: &Term) -> Result<Option<Step>> {
    match t.mono.groups.len() {
        0 => Ok(None),
        1 => Ok(Some(mono_step(t.mono.groups.values().next().unwrap()))),
        _ => Err(Error::UnsupportedGeometry(
            "multi-variable content inside a marked factor pairs symbolically only".into(),
        )),
    }
}

/// Marker-free leaves: every term contributes its monomial as a final weight
/// multiplication and one radial integral.
fn eval_leaves(
    e: &Expr,
    steps: &[Step],
    probe: &Probe,
    env: &BTreeMap<String, f64>,
    tol: f64,
    out: &mut Accum,
) -> Result<()> {
    for t in e.terms() {
        guard_mass_free(t)?;
        if !t.factors.is_empty() {
            return Err(Error::UnsupportedForm(
                "nested markers below a direct-extension marker".into(),
            ));
        }
        let coeff = t.mono.coeff.eval(env)?;
        let mut steps2 = steps.to_vec();
        if let Some(s) = single_group_steps(t)? {
            steps2.push(s);
        }
        let (v, err, n, conv) = radial_integral(&steps2, probe, tol)?;
        out.add(coeff, v, err, n, conv);
    }
    Ok(())
}

/// Terms that may still carry one marked factor each.
fn eval_marked(
    e: &Expr,
    steps: &[Step],
    probe: &Probe,
    env: &BTreeMap<String, f64>,
    tol: f64,
    out: &mut Accum,
) -> Result<()> {
    for t in e.terms() {
        guard_mass_free(t)?;
        let coeff = t.mono.coeff.eval(env)?;
        let mut steps2 = steps.to_vec();
        if let Some(s) = single_group_steps(t)? {
            steps2.push(s);
        }
        match t.factors.as_slice() {
            [] => {
                let (v, err, n, conv) = radial_integral(&steps2, probe, tol)?;
                out.add(coeff, v, err, n, conv);
            }
            [f] => {
                let mut sub = Accum::new();
                eval_factor(f, &steps2, probe, env, tol, &mut sub)?;
                out.add(coeff, sub.value, sub.error, sub.nodes, sub.converged);
            }
            _ => {
                return Err(Error::UnsupportedForm(
                    "products of marked factors have no direct pairing rule".into(),
                ))
            }
        }
    }
    Ok(())
}

fn guard_mass_free(t: &Term) -> Result<()> {
    if !t.mono.mass.is_zero() || t.mono.log_m > 0 {
        return Err(Error::UnsupportedForm(
            "mass factors must be expanded away before numeric pairing".into(),
        ));
    }
    Ok(())
}

pub(crate) fn pair_with_probe(
    e: &Expr,
    probe: &Probe,
    env: &BTreeMap<String, f64>,
    tol: f64,
) -> Result<PairingReport> {
    let mut out = Accum::new();
    for t in e.terms() {
        guard_regulator_free(t)?;
        guard_mass_free(t)?;
        let coeff = t.mono.coeff.eval(env)?;
        if let [Factor::Delta { op, k: dk, groups }] = t.factors.as_slice() {
            if groups.len() > 1 {
                return Err(Error::UnsupportedGeometry(
                    "deltas spanning several groups pair symbolically only".into(),
                ));
            }
            if *dk != probe.h.k {
                return Err(Error::UnsupportedGeometry(format!(
                    "delta of dimension {dk} against a test function in {}",
                    probe.h.k
                )));
            }
            if !t.mono.groups.is_empty() {
                let vanishes = t.mono.groups.values().all(|gp| {
                    gp.log == 0 && gp.inv.rat > Rat::zero()
                });
                if vanishes {
                    continue;
                }
                return Err(Error::UnsupportedForm(
                    "singular monomial multiplying a delta".into(),
                ));
            }
            out.add(coeff, delta_value(op, probe)?, 0.0, 0, true);
            continue;
        }
        let groups = t.groups();
        if t.factors.is_empty() && groups.len() != 1 {
            // Plain product: split into one-dimensional radial factors, the
            // empty product being the pairing of the constant function.
            let parts: Vec<Step> = if groups.is_empty() {
                vec![Step::Mul { pow: Rat::zero(), logs: 0 }]
            } else {
                t.mono.groups.values().map(mono_step).collect()
            };
            let mut results = Vec::with_capacity(parts.len());
            let mut nodes = 0;
            let mut conv = true;
            for s in parts {
                let (v, err, n, c) = radial_integral(&[s], probe, tol)?;
                results.push((v, err));
                nodes += n;
                conv &= c;
            }
            let value: f64 = results.iter().map(|(v, _)| v).product();
            let mut error = 0.0;
            for i in 0..results.len() {
                let others: f64 =
                    results.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, (v, _))| v.abs()).product();
                error += results[i].1 * others;
            }
            out.add(coeff, value, error, nodes, conv);
            continue;
        }
        if groups.len() > 1 {
            return Err(Error::UnsupportedGeometry(
                "multi-variable marker structure pairs symbolically only".into(),
            ));
        }
        let mut steps = Vec::new();
        if let Some(s) = single_group_steps(t)? {
            steps.push(s);
        }
        match t.factors.as_slice() {
            [] => {
                let (v, err, n, conv) = radial_integral(&steps, probe, tol)?;
                out.add(coeff, v, err, n, conv);
            }
            [f] => {
                let mut sub = Accum::new();
                eval_factor(f, &steps, probe, env, tol, &mut sub)?;
                out.add(coeff, sub.value, sub.error, sub.nodes, sub.converged);
            }
            _ => {
                return Err(Error::UnsupportedForm(
                    "products of marked factors have no direct pairing rule".into(),
                ))
            }
        }
    }
    Ok(PairingReport {
        value: out.value,
        error: out.error,
        nodes: out.nodes,
        converged: out.converged,
    })
}

/// Pairs an expression against a radial test function in the Euclidean
/// convention X = |x|^2 with M = 1. Coefficient symbols are looked up in
/// `env`; unresolved symbols are an error.
pub fn pair_numeric(
    e: &Expr,
    h: &TestFunction,
    env: &BTreeMap<String, f64>,
    tol: f64,
) -> Result<PairingReport> {
    pair_with_probe(e, &Probe::plain(h), env, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Coeff;
    use crate::expr::Monomial;
    use crate::linform::LinForm;

    fn env() -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    fn x_pow(g: u8, n: i64) -> Expr {
        Expr::from_mono(Monomial::one().with_x_int(g, n))
    }

    fn x_pow_log(g: u8, n: i64, q: u32) -> Expr {
        Expr::from_mono(Monomial::one().with_x_int(g, n).with_log_x(g, q))
    }

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn constant_pairs_to_the_plain_radial_integral() {
        let h = TestFunction::bump(4, 1.5, 0.5);
        let got = pair_numeric(&Expr::one(), &h, &env(), 1e-12).unwrap();
        let want =
            sphere_area(4) * simpson(&|r| h.value(r) * r.powi(3), 1.0, 2.0, 20_000);
        assert!((got.value - want).abs() < 1e-9, "{} vs {want}", got.value);
        assert!(got.converged);
        assert!(got.nodes > 0);
    }

    #[test]
    fn inverse_power_matches_an_independent_quadrature() {
        let h = TestFunction::bump(4, 1.5, 0.5);
        let got = pair_numeric(&x_pow(0, -1), &h, &env(), 1e-12).unwrap();
        let want = sphere_area(4) * simpson(&|r| h.value(r) * r, 1.0, 2.0, 20_000);
        assert!((got.value - want).abs() < 1e-9);
    }

    #[test]
    fn log_factors_multiply_into_the_radial_content() {
        let h = TestFunction::gaussian(4, 0.0, 1.0);
        let got = pair_numeric(&x_pow_log(0, -1, 1), &h, &env(), 1e-12).unwrap();
        let want = sphere_area(4)
            * simpson(&|r| 2.0 * r.ln() * h.value(r) * r, 1e-12, 14.0, 400_000);
        assert!((got.value - want).abs() < 1e-6, "{} vs {want}", got.value);
    }

    #[test]
    fn integrable_extension_marker_unwraps() {
        let h = TestFunction::bump(4, 1.5, 0.5);
        let inner = x_pow_log(0, -1, 1);
        let wrapped = inner.clone().overline(4).unwrap();
        let a = pair_numeric(&wrapped, &h, &env(), 1e-12).unwrap();
        let b = pair_numeric(&inner, &h, &env(), 1e-12).unwrap();
        assert!((a.value - b.value).abs() < 1e-10);
    }

    #[test]
    fn critical_power_is_rejected_only_when_the_origin_is_reached() {
        let at_origin = TestFunction::gaussian(4, 0.0, 1.0);
        let away = TestFunction::bump(4, 1.5, 0.5);
        let e = x_pow(0, -2);
        match pair_numeric(&e, &at_origin, &env(), 1e-10) {
            Err(Error::NonIntegrable { sd, k }) => {
                assert_eq!(sd, "4");
                assert_eq!(k, 4);
            }
            other => panic!("expected a non-integrable rejection, got {other:?}"),
        }
        let ok = pair_numeric(&e, &away, &env(), 1e-10).unwrap();
        assert!(ok.value.is_finite());
    }

    #[test]
    fn wave_operator_moves_onto_the_test_function() {
        // box ov(log(M^2 X)/4X) agrees with its classical value -X^(-2)
        // away from the origin.
        let h = TestFunction::bump(4, 1.5, 0.5);
        let quarter_log = Expr::from_mono(
            Monomial::one()
                .with_coeff(Coeff::from_rat(Rat::new(1.into(), 4.into())))
                .with_x_int(0, -1)
                .with_log_x(0, 1),
        );
        let boxed = Expr::box_op(0, quarter_log.overline(4).unwrap());
        let lhs = pair_numeric(&boxed, &h, &env(), 1e-12).unwrap();
        let rhs = pair_numeric(&x_pow(0, -2).scale(&Coeff::from_int(-1)), &h, &env(), 1e-12)
            .unwrap();
        assert!(
            (lhs.value - rhs.value).abs() < 1e-6 * (1.0 + rhs.value.abs()),
            "{} vs {}",
            lhs.value,
            rhs.value
        );
    }

    #[test]
    fn moment_contraction_integrates_by_parts() {
        // d(z ov(X^-1)) pairs as -int r^-2 * r h'(r) * r^3 dr.
        let h = TestFunction::bump(4, 1.5, 0.5);
        let e = x_pow(0, -1).moment_extension(1, 4).unwrap();
        let got = pair_numeric(&e, &h, &env(), 1e-12).unwrap();
        let deriv = |r: f64| h.derivative(r, 1).unwrap();
        let want = -sphere_area(4) * simpson(&|r| r.powi(2) * deriv(r), 1.0, 2.0, 20_000);
        assert!((got.value - want).abs() < 1e-9, "{} vs {want}", got.value);
    }

    #[test]
    fn delta_terms_read_jet_values_at_the_origin() {
        let h = TestFunction::gaussian(4, 0.0, 1.0);
        let d = pair_numeric(&Expr::delta(DeltaOp::Id, 4, vec![0]), &h, &env(), 1e-10)
            .unwrap();
        assert!((d.value - h.value(0.0)).abs() < 1e-14);
        assert_eq!(d.nodes, 0);
        let boxed =
            pair_numeric(&Expr::delta(DeltaOp::Box(0), 4, vec![0]), &h, &env(), 1e-10)
                .unwrap();
        let want = 4.0 * h.derivative(0.0, 2).unwrap();
        assert!((boxed.value - want).abs() < 1e-12);
    }

    #[test]
    fn separable_plain_products_split_per_group() {
        let h = TestFunction::bump(4, 1.5, 0.5);
        let two = Expr::from_mono(Monomial::one().with_x_int(0, -1).with_x_int(1, -1));
        let got = pair_numeric(&two, &h, &env(), 1e-12).unwrap();
        let one = pair_numeric(&x_pow(0, -1), &h, &env(), 1e-12).unwrap();
        assert!((got.value - one.value * one.value).abs() < 1e-8);
    }

    #[test]
    fn regulators_and_masses_are_rejected() {
        let h = TestFunction::bump(4, 1.5, 0.5);
        let reg = Expr::from_mono(
            Monomial::one().with_x_pow(0, LinForm::from_int(-1).add(&LinForm::reg_var("zeta"))),
        );
        assert!(matches!(
            pair_numeric(&reg, &h, &env(), 1e-10),
            Err(Error::UnsupportedForm(_))
        ));
        let massive = Expr::from_mono(Monomial::one().with_mass(2).with_x_int(0, -1));
        assert!(matches!(
            pair_numeric(&massive, &h, &env(), 1e-10),
            Err(Error::UnsupportedForm(_))
        ));
    }

    #[test]
    fn unresolved_symbols_are_an_error() {
        let h = TestFunction::bump(4, 1.5, 0.5);
        let e = x_pow(0, -1).scale(&Coeff::var("a0"));
        assert!(pair_numeric(&e, &h, &env(), 1e-10).is_err());
        let mut with = env();
        with.insert("a0".into(), 2.0);
        let v = pair_numeric(&e, &h, &with, 1e-10).unwrap();
        let base = pair_numeric(&x_pow(0, -1), &h, &with, 1e-10).unwrap();
        assert!((v.value - 2.0 * base.value).abs() < 1e-9);
    }

    #[test]
    fn tighter_tolerance_shrinks_the_error_estimate() {
        let h = TestFunction::gaussian(4, 0.0, 1.0);
        let e = x_pow_log(0, -1, 1);
        let loose = pair_numeric(&e, &h, &env(), 1e-4).unwrap();
        let tight = pair_numeric(&e, &h, &env(), 1e-11).unwrap();
        assert!(tight.error < loose.error);
        assert!(tight.nodes > loose.nodes);
    }

    #[test]
    fn remainders_are_opaque() {
        let h = TestFunction::bump(4, 1.5, 0.5);
        let e = Expr::remainder("r", LinForm::from_int(4), 3);
        assert!(matches!(
            pair_numeric(&e, &h, &env(), 1e-10),
            Err(Error::UnsupportedForm(_))
        ));
    }

    #[test]
    fn report_serializes_with_sorted_keys() {
        let r = PairingReport { value: 1.5, error: 1e-9, nodes: 45, converged: true };
        let s = crate::json::to_json_string(&r.to_json());
        assert!(s.starts_with("{\"converged\":true,\"error\":"));
        assert!(s.contains("\"nodes\":45"));
    }
}
