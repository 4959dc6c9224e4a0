//! Shared JSON plumbing: deterministic serialization (sorted object keys,
//! floats always written with 17 significant digits), and codecs for the
//! exact scalar types. Rationals travel as "p/q" strings, exponent forms as
//! either a bare rational string or `{"rat": "p/q", "zeta": {"name": n}}`.

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::linform::LinForm;
use crate::poly::{CoeffPoly, VarPows};
use crate::rat::{rat_is_int, rat_parse, rat_string, rat_to_i64, Rat};
use num::Zero;
use serde::Serialize;
use serde_json::{Map, Value};
use std::io;

pub const SCHEMA: &str = "smx/1";

/// Serializes a value compactly with every float rendered at 17 significant
/// digits, so equal documents are byte-identical across runs and platforms.
pub fn to_json_string(v: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    v.serialize(&mut ser).expect("JSON serialization of a Value cannot fail");
    String::from_utf8(out).expect("serializer emits UTF-8")
}

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, value as f64)
    }
}

pub fn obj(pairs: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in pairs {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

pub fn rat_value(r: &Rat) -> Value {
    Value::String(rat_string(r))
}

pub fn rat_from(v: &Value) -> Result<Rat> {
    match v {
        Value::String(s) => {
            rat_parse(s).ok_or_else(|| Error::UnsupportedForm(format!("bad rational `{s}`")))
        }
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(crate::rat::rat_int(i))
            } else {
                Err(Error::UnsupportedForm(format!("non-integer numeric rational `{n}`")))
            }
        }
        other => Err(Error::UnsupportedForm(format!("expected rational, got `{other}`"))),
    }
}

/// Integer-valued rationals serialize as JSON numbers, everything else as
/// "p/q" strings.
fn rat_compact(r: &Rat) -> Value {
    if rat_is_int(r) {
        if let Some(i) = rat_to_i64(r) {
            return Value::Number(i.into());
        }
    }
    rat_value(r)
}

pub fn linform_value(l: &LinForm) -> Value {
    if l.is_pure_rat() {
        return rat_compact(&l.rat);
    }
    let mut regs = Map::new();
    for (name, c) in &l.reg {
        regs.insert(name.clone(), rat_compact(c));
    }
    obj(vec![("rat", rat_value(&l.rat)), ("zeta", Value::Object(regs))])
}

pub fn linform_from(v: &Value) -> Result<LinForm> {
    match v {
        Value::String(_) | Value::Number(_) => Ok(LinForm::from_rat(rat_from(v)?)),
        Value::Object(m) => {
            let mut l = LinForm::zero();
            if let Some(r) = m.get("rat") {
                l.rat = rat_from(r)?;
            }
            if let Some(Value::Object(regs)) = m.get("zeta") {
                for (name, c) in regs {
                    let c = rat_from(c)?;
                    if !c.is_zero() {
                        l.reg.insert(name.clone(), c);
                    }
                }
            }
            Ok(l)
        }
        other => Err(Error::UnsupportedForm(format!("expected exponent form, got `{other}`"))),
    }
}

fn poly_value(p: &CoeffPoly) -> Value {
    Value::Array(
        p.0.iter()
            .map(|(vars, c)| {
                let mut vm = Map::new();
                for (name, pow) in &vars.0 {
                    vm.insert(name.clone(), Value::Number((*pow).into()));
                }
                obj(vec![("coeff", rat_value(c)), ("vars", Value::Object(vm))])
            })
            .collect(),
    )
}

fn poly_from(v: &Value) -> Result<CoeffPoly> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::UnsupportedForm(format!("expected polynomial array, got `{v}`")))?;
    let mut p = CoeffPoly::zero();
    for item in arr {
        let m = item
            .as_object()
            .ok_or_else(|| Error::UnsupportedForm("polynomial entry must be an object".into()))?;
        let c = rat_from(m.get("coeff").unwrap_or(&Value::Null))?;
        let mut vars = VarPows::unit();
        if let Some(Value::Object(vm)) = m.get("vars") {
            for (name, pow) in vm {
                let pow = pow
                    .as_u64()
                    .ok_or_else(|| Error::UnsupportedForm(format!("bad power `{pow}`")))?;
                vars = vars.mul(&VarPows::var(name, pow as u32));
            }
        }
        p = p.add(&CoeffPoly::monomial(vars, c));
    }
    Ok(p)
}

pub fn coeff_value(c: &Coeff) -> Value {
    if let Some(r) = c.as_rat() {
        return rat_value(&r);
    }
    if c.den.is_one() {
        return poly_value(&c.num);
    }
    obj(vec![("num", poly_value(&c.num)), ("den", poly_value(&c.den))])
}

pub fn coeff_from(v: &Value) -> Result<Coeff> {
    match v {
        Value::String(_) | Value::Number(_) => Ok(Coeff::from_rat(rat_from(v)?)),
        Value::Array(_) => Ok(Coeff::from_poly(poly_from(v)?)),
        Value::Object(m) => {
            let num = poly_from(m.get("num").unwrap_or(&Value::Array(vec![])))?;
            let den = match m.get("den") {
                Some(d) => poly_from(d)?,
                None => CoeffPoly::one(),
            };
            Ok(Coeff::new(num, den))
        }
        other => Err(Error::UnsupportedForm(format!("expected coefficient, got `{other}`"))),
    }
}

pub fn get_u32(m: &Map<String, Value>, key: &str) -> Result<u32> {
    m.get(key)
        .and_then(Value::as_u64)
        .map(|n| n as u32)
        .ok_or_else(|| Error::UnsupportedForm(format!("missing or bad field `{key}`")))
}

pub fn get_u32_or(m: &Map<String, Value>, key: &str, default: u32) -> Result<u32> {
    match m.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .map(|n| n as u32)
            .ok_or_else(|| Error::UnsupportedForm(format!("bad field `{key}`"))),
    }
}

pub fn get_str<'a>(m: &'a Map<String, Value>, key: &str) -> Result<&'a str> {
    m.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| Error::UnsupportedForm(format!("missing or bad field `{key}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    #[test]
    fn float_formatting_is_17_digits() {
        let v = obj(vec![("x", Value::from(0.1f64)), ("y", Value::from(2.0f64))]);
        let s = to_json_string(&v);
        assert_eq!(s, r#"{"x":1.0000000000000001e-1,"y":2.0000000000000000e0}"#);
    }

    #[test]
    fn object_keys_sorted() {
        let mut m = Map::new();
        m.insert("zz".into(), Value::Null);
        m.insert("aa".into(), Value::Null);
        assert_eq!(to_json_string(&Value::Object(m)), r#"{"aa":null,"zz":null}"#);
    }

    #[test]
    fn linform_round_trip() {
        let l = LinForm::from_rat(rat(3, 2)).add(&LinForm::reg_var("zeta").scale(&rat_int(-2)));
        let v = linform_value(&l);
        assert_eq!(to_json_string(&v), r#"{"rat":"3/2","zeta":{"zeta":-2}}"#);
        assert_eq!(linform_from(&v).unwrap(), l);
        let pure = LinForm::from_int(-3);
        assert_eq!(to_json_string(&linform_value(&pure)), "-3");
        assert_eq!(linform_from(&linform_value(&pure)).unwrap(), pure);
    }

    #[test]
    fn coeff_round_trip() {
        let c = Coeff::var("a0").mul(&Coeff::var("a1")).scale(&rat(3, 4));
        let v = coeff_value(&c);
        assert_eq!(coeff_from(&v).unwrap(), c);
        let q = Coeff::one().div(&Coeff::var("eta")).unwrap();
        let v = coeff_value(&q);
        assert_eq!(coeff_from(&v).unwrap(), q);
    }
}
