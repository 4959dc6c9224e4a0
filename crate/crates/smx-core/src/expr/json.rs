//! Tree serialization of expressions. Node kinds: `Sum`, `Product`, `Mono`,
//! `Overline`, `MomentDiv`, `BoxOp`, `DeltaCT`, `Remainder`. Delta
//! counterterms absorb their term's coefficient and mass factors into a
//! single `DeltaCT` node so counterterm lists read naturally.

use super::{DeltaOp, Expr, Factor, Group, GroupPows, Monomial, Term};
use crate::error::{Error, Result};
use crate::json::{coeff_from, coeff_value, get_str, get_u32, get_u32_or, linform_from, linform_value, obj};
use crate::linform::LinForm;
use serde_json::{Map, Value};

pub fn expr_value(e: &Expr) -> Value {
    obj(vec![
        ("kind", Value::String("Sum".into())),
        ("terms", Value::Array(e.terms().iter().map(term_value).collect())),
    ])
}

fn term_value(t: &Term) -> Value {
    if t.factors.len() == 1 && t.mono.groups.is_empty() && t.mono.scale.is_zero() {
        if let Factor::Delta { op, k, groups } = &t.factors[0] {
            let mut pairs = vec![
                ("kind", Value::String("DeltaCT".into())),
                ("op", delta_op_value(op)),
                ("k", Value::from(*k)),
                ("groups", Value::Array(groups.iter().map(|g| Value::from(*g)).collect())),
                ("coeff", coeff_value(&t.mono.coeff)),
            ];
            if !t.mono.mass.is_zero() {
                pairs.push(("mass_power", linform_value(&t.mono.mass)));
            }
            if t.mono.log_m > 0 {
                pairs.push(("log_m_power", Value::from(t.mono.log_m)));
            }
            return obj(pairs);
        }
    }
    let mono_trivial = t.mono == Monomial::one();
    if t.factors.is_empty() {
        return mono_value(&t.mono);
    }
    if t.factors.len() == 1 && mono_trivial {
        return factor_value(&t.factors[0]);
    }
    let mut parts: Vec<Value> = Vec::new();
    if !mono_trivial {
        parts.push(mono_value(&t.mono));
    }
    parts.extend(t.factors.iter().map(factor_value));
    obj(vec![("kind", Value::String("Product".into())), ("factors", Value::Array(parts))])
}

fn mono_value(m: &Monomial) -> Value {
    let mut pairs = vec![("kind", Value::String("Mono".into())), ("coeff", coeff_value(&m.coeff))];
    if !m.mass.is_zero() {
        pairs.push(("mass_power", linform_value(&m.mass)));
    }
    if m.log_m > 0 {
        pairs.push(("log_m_power", Value::from(m.log_m)));
    }
    if !m.scale.is_zero() {
        pairs.push(("scale_power", linform_value(&m.scale)));
    }
    if !m.groups.is_empty() {
        let mut gm = Map::new();
        for (g, gp) in &m.groups {
            let mut entry = Vec::new();
            if !gp.inv.is_zero() {
                entry.push(("inv_power", linform_value(&gp.inv)));
            }
            if gp.log > 0 {
                entry.push(("log_power", Value::from(gp.log)));
            }
            gm.insert(g.to_string(), obj(entry));
        }
        pairs.push(("groups", Value::Object(gm)));
    }
    obj(pairs)
}

fn factor_value(f: &Factor) -> Value {
    match f {
        Factor::Overline { k, z_moment, child } => {
            let mut pairs = vec![
                ("kind", Value::String("Overline".into())),
                ("k", Value::from(*k)),
                ("child", expr_value(child)),
            ];
            if *z_moment > 0 {
                pairs.push(("z_moment", Value::from(*z_moment)));
            }
            obj(pairs)
        }
        Factor::MomentDiv { l, k, child } => obj(vec![
            ("kind", Value::String("MomentDiv".into())),
            ("l", Value::from(*l)),
            ("k", Value::from(*k)),
            ("child", expr_value(child)),
        ]),
        Factor::BoxOp { group, child } => obj(vec![
            ("kind", Value::String("BoxOp".into())),
            ("group", Value::from(*group)),
            ("child", expr_value(child)),
        ]),
        Factor::Delta { op, k, groups } => obj(vec![
            ("kind", Value::String("DeltaCT".into())),
            ("op", delta_op_value(op)),
            ("k", Value::from(*k)),
            ("groups", Value::Array(groups.iter().map(|g| Value::from(*g)).collect())),
            ("coeff", Value::String("1".into())),
        ]),
        Factor::Remainder { tag, degree, order } => obj(vec![
            ("kind", Value::String("Remainder".into())),
            ("tag", Value::String(tag.clone())),
            ("degree", linform_value(degree)),
            ("order", Value::from(*order)),
        ]),
    }
}

fn delta_op_value(op: &DeltaOp) -> Value {
    match op {
        DeltaOp::Id => Value::String("id".into()),
        DeltaOp::Box(g) => obj(vec![("box", Value::from(*g))]),
        DeltaOp::GradDot(g, h) => {
            obj(vec![("grad_dot", Value::Array(vec![Value::from(*g), Value::from(*h)]))])
        }
        DeltaOp::Partial(n) => obj(vec![("partial", Value::from(*n))]),
    }
}

pub fn expr_from_value(v: &Value) -> Result<Expr> {
    let m = as_obj(v)?;
    match get_str(m, "kind")? {
        "Sum" => {
            let terms = m
                .get("terms")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::UnsupportedForm("Sum without terms array".into()))?;
            let mut acc = Expr::zero();
            for t in terms {
                acc = acc.add(&node_from_value(t)?);
            }
            Ok(acc)
        }
        _ => node_from_value(v),
    }
}

fn node_from_value(v: &Value) -> Result<Expr> {
    let m = as_obj(v)?;
    match get_str(m, "kind")? {
        "Sum" => expr_from_value(v),
        "Mono" => Ok(Expr::from_mono(mono_from_value(m)?)),
        "Product" => {
            let parts = m
                .get("factors")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::UnsupportedForm("Product without factors array".into()))?;
            let mut acc = Expr::one();
            for p in parts {
                acc = acc.multiply(&node_from_value(p)?)?;
            }
            Ok(acc)
        }
        "Overline" => {
            let child = expr_from_value(
                m.get("child").ok_or_else(|| Error::UnsupportedForm("Overline without child".into()))?,
            )?;
            let k = get_u32(m, "k")?;
            let z_moment = get_u32_or(m, "z_moment", 0)?;
            Ok(Expr::from_term(Term::from_factor(Factor::Overline { k, z_moment, child })))
        }
        "MomentDiv" => {
            let child = expr_from_value(
                m.get("child").ok_or_else(|| Error::UnsupportedForm("MomentDiv without child".into()))?,
            )?;
            Ok(Expr::moment_div(child, get_u32(m, "l")?, get_u32(m, "k")?))
        }
        "BoxOp" => {
            let child = expr_from_value(
                m.get("child").ok_or_else(|| Error::UnsupportedForm("BoxOp without child".into()))?,
            )?;
            Ok(Expr::box_op(get_u32(m, "group")? as Group, child))
        }
        "DeltaCT" => {
            let op = delta_op_from_value(
                m.get("op").ok_or_else(|| Error::UnsupportedForm("DeltaCT without op".into()))?,
            )?;
            let k = get_u32(m, "k")?;
            let groups: Vec<Group> = m
                .get("groups")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(Value::as_u64).map(|g| g as Group).collect())
                .unwrap_or_default();
            let coeff = match m.get("coeff") {
                Some(c) => coeff_from(c)?,
                None => crate::coeff::Coeff::one(),
            };
            let mass = match m.get("mass_power") {
                Some(l) => linform_from(l)?,
                None => LinForm::zero(),
            };
            let log_m = get_u32_or(m, "log_m_power", 0)?;
            let mono = Monomial::one().with_coeff(coeff).with_mass_form(mass).with_log_m(log_m);
            Ok(Expr::from_term(Term {
                mono,
                factors: vec![Factor::Delta { op, k, groups }],
            }))
        }
        "Remainder" => {
            let degree = linform_from(
                m.get("degree").ok_or_else(|| Error::UnsupportedForm("Remainder without degree".into()))?,
            )?;
            Ok(Expr::remainder(get_str(m, "tag")?, degree, get_u32(m, "order")?))
        }
        other => Err(Error::UnsupportedForm(format!("unknown node kind `{other}`"))),
    }
}

fn mono_from_value(m: &Map<String, Value>) -> Result<Monomial> {
    let coeff = match m.get("coeff") {
        Some(c) => coeff_from(c)?,
        None => crate::coeff::Coeff::one(),
    };
    let mass = match m.get("mass_power") {
        Some(l) => linform_from(l)?,
        None => LinForm::zero(),
    };
    let scale = match m.get("scale_power") {
        Some(l) => linform_from(l)?,
        None => LinForm::zero(),
    };
    let log_m = get_u32_or(m, "log_m_power", 0)?;
    let mut mono = Monomial::one()
        .with_coeff(coeff)
        .with_mass_form(mass)
        .with_log_m(log_m)
        .with_scale_form(scale);
    if let Some(Value::Object(gm)) = m.get("groups") {
        for (g, entry) in gm {
            let g: Group = g
                .parse()
                .map_err(|_| Error::UnsupportedForm(format!("bad group key `{g}`")))?;
            let em = as_obj(entry)?;
            let inv = match em.get("inv_power") {
                Some(l) => linform_from(l)?,
                None => LinForm::zero(),
            };
            let log = get_u32_or(em, "log_power", 0)?;
            mono.groups.insert(g, GroupPows { inv, log });
        }
        mono.groups.retain(|_, gp| !gp.is_trivial());
    }
    Ok(mono)
}

fn delta_op_from_value(v: &Value) -> Result<DeltaOp> {
    match v {
        Value::String(s) if s == "id" => Ok(DeltaOp::Id),
        Value::Object(m) => {
            if let Some(g) = m.get("box").and_then(Value::as_u64) {
                return Ok(DeltaOp::Box(g as Group));
            }
            if let Some(a) = m.get("grad_dot").and_then(Value::as_array) {
                if let [g, h] = a.as_slice() {
                    if let (Some(g), Some(h)) = (g.as_u64(), h.as_u64()) {
                        return Ok(DeltaOp::GradDot(g as Group, h as Group));
                    }
                }
            }
            if let Some(n) = m.get("partial").and_then(Value::as_u64) {
                return Ok(DeltaOp::Partial(n as u32));
            }
            Err(Error::UnsupportedForm(format!("bad delta operator `{v}`")))
        }
        other => Err(Error::UnsupportedForm(format!("bad delta operator `{other}`"))),
    }
}

fn as_obj(v: &Value) -> Result<&Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::UnsupportedForm(format!("expected object node, got `{v}`")))
}

impl Expr {
    pub fn to_json(&self) -> Value {
        expr_value(self)
    }

    pub fn to_json_string(&self) -> String {
        crate::json::to_json_string(&self.to_json())
    }

    pub fn from_json(v: &Value) -> Result<Expr> {
        expr_from_value(v)
    }

    pub fn from_json_str(s: &str) -> Result<Expr> {
        let v: Value = serde_json::from_str(s)
            .map_err(|e| Error::UnsupportedForm(format!("invalid JSON: {e}")))?;
        expr_from_value(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Coeff;
    use crate::rat::{rat, rat_int};

    fn sample() -> Expr {
        let inner = Expr::from_mono(
            Monomial::one().with_coeff(Coeff::from_rat(rat(1, 4))).with_x_int(0, -1).with_log_x(0, 1),
        );
        let u21 = Expr::box_op(0, inner.overline(4).unwrap());
        let ct = Expr::delta(DeltaOp::Id, 4, vec![0]).scale(&Coeff::var("C1"));
        let mono = Expr::from_mono(
            Monomial::one()
                .with_coeff(Coeff::var("a0").pow(2))
                .with_x_int(1, -1)
                .with_x_int(2, -1),
        );
        u21.add(&ct).multiply(&mono).unwrap()
    }

    #[test]
    fn round_trip_preserves_structure() {
        let e = sample();
        let back = Expr::from_json_str(&e.to_json_string()).unwrap();
        assert_eq!(e, back);
    }

    #[test]
    fn serialization_is_deterministic() {
        let e = sample();
        assert_eq!(e.to_json_string(), sample().to_json_string());
        let rebuilt = Expr::from_json_str(&e.to_json_string()).unwrap();
        assert_eq!(rebuilt.to_json_string(), e.to_json_string());
    }

    #[test]
    fn regulator_exponents_round_trip() {
        let zpow = LinForm::from_int(-1).add(&LinForm::reg_var("zeta"));
        let e = Expr::from_mono(
            Monomial::one()
                .with_x_pow(0, zpow)
                .with_mass_form(LinForm::from_int(2).sub(&LinForm::reg_var("zeta").scale(&rat_int(2))))
                .with_scale_form(LinForm::reg_var("zeta").scale(&rat_int(2))),
        );
        let back = Expr::from_json_str(&e.to_json_string()).unwrap();
        assert_eq!(e, back);
        assert!(e.to_json_string().contains(r#""zeta""#));
    }

    #[test]
    fn delta_ct_nodes_carry_mass_factors() {
        let ct = Expr::delta(DeltaOp::Box(0), 4, vec![0])
            .multiply(&Expr::from_mono(Monomial::one().with_mass(2).with_log_m(1)))
            .unwrap()
            .scale(&Coeff::var("C0"));
        let v = ct.to_json();
        let s = crate::json::to_json_string(&v);
        assert!(s.contains(r#""kind":"DeltaCT""#));
        assert!(s.contains(r#""mass_power":2"#));
        let back = Expr::from_json(&v).unwrap();
        assert_eq!(ct, back);
    }
}
