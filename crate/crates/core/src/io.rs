//! JSON encodings for measures and model triples.
//!
//! ```json
//! {"atoms": [{"pos": 0.0, "mass": 1.0}],
//!  "pieces": [{"support": [1, "inf"], "power": {"c": 1.27, "nu": -2, "anchor": 0}},
//!             {"support": [0, 1], "tabulated": {"grid": [0, 1], "values": [1, 2]}}],
//!  "normalize": true,
//!  "kappa": {"re": 0.3, "im": 0.0}}
//! ```
//!
//! Infinite endpoints are written as the strings `"inf"` and `"-inf"`.
//! `kappa` is only read for triples; measure documents may carry it and it
//! is ignored there.

use serde_json::{json, Map, Value};

use crate::charfn::VonNeumannParameter;
use crate::measure::{Atom, DensityForm, DensityPiece, RealMeasure};
use crate::transform::ModelTriple;
use crate::{Complex, Error, Result};

fn schema(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidMeasure(format!("{path}: {msg}"))
}

fn number(v: &Value, path: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| schema(path, "not representable as f64")),
        Value::String(s) => match s.as_str() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            other => Err(schema(path, format!("expected number or \"inf\"/\"-inf\", got {other:?}"))),
        },
        other => Err(schema(path, format!("expected number, got {other}"))),
    }
}

fn finite(v: &Value, path: &str) -> Result<f64> {
    let x = number(v, path)?;
    if !x.is_finite() {
        return Err(schema(path, "must be finite"));
    }
    Ok(x)
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| schema(path, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| schema(path, format!("missing field \"{key}\"")))
}

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(path, format!("unknown field \"{k}\""))),
        None => Ok(()),
    }
}

fn number_array(v: &Value, path: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| schema(path, "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(k, x)| finite(x, &format!("{path}[{k}]")))
        .collect()
}

fn encode(x: f64) -> Value {
    if x == f64::INFINITY {
        json!("inf")
    } else if x == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(x)
    }
}

fn parse_piece(v: &Value, path: &str) -> Result<DensityPiece> {
    let obj = object(v, path)?;
    reject_unknown(obj, &["support", "power", "tabulated"], path)?;
    let support = field(obj, "support", path)?
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| schema(&format!("{path}.support"), "expected [lo, hi]"))?;
    let lo = number(&support[0], &format!("{path}.support[0]"))?;
    let hi = number(&support[1], &format!("{path}.support[1]"))?;
    match (obj.get("power"), obj.get("tabulated")) {
        (Some(p), None) => {
            let pp = format!("{path}.power");
            let p = object(p, &pp)?;
            reject_unknown(p, &["c", "nu", "anchor"], &pp)?;
            let c = finite(field(p, "c", &pp)?, &format!("{pp}.c"))?;
            let nu = finite(field(p, "nu", &pp)?, &format!("{pp}.nu"))?;
            let anchor = match p.get("anchor") {
                Some(a) => finite(a, &format!("{pp}.anchor"))?,
                None => 0.0,
            };
            Ok(DensityPiece::power(lo, hi, c, nu, anchor))
        }
        (None, Some(t)) => {
            let tp = format!("{path}.tabulated");
            let t = object(t, &tp)?;
            reject_unknown(t, &["grid", "values"], &tp)?;
            let grid = number_array(field(t, "grid", &tp)?, &format!("{tp}.grid"))?;
            let values = number_array(field(t, "values", &tp)?, &format!("{tp}.values"))?;
            Ok(DensityPiece::tabulated(lo, hi, grid, values))
        }
        (Some(_), Some(_)) => Err(schema(path, "a piece has exactly one of \"power\" or \"tabulated\"")),
        (None, None) => Err(schema(path, "a piece needs \"power\" or \"tabulated\"")),
    }
}

fn parse_measure_object(obj: &Map<String, Value>) -> Result<RealMeasure> {
    let atoms = match obj.get("atoms") {
        None => vec![],
        Some(v) => v
            .as_array()
            .ok_or_else(|| schema("atoms", "expected an array"))?
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let path = format!("atoms[{k}]");
                let a = object(a, &path)?;
                reject_unknown(a, &["pos", "mass"], &path)?;
                Ok(Atom {
                    position: finite(field(a, "pos", &path)?, &format!("{path}.pos"))?,
                    mass: finite(field(a, "mass", &path)?, &format!("{path}.mass"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let pieces = match obj.get("pieces") {
        None => vec![],
        Some(v) => v
            .as_array()
            .ok_or_else(|| schema("pieces", "expected an array"))?
            .iter()
            .enumerate()
            .map(|(k, p)| parse_piece(p, &format!("pieces[{k}]")))
            .collect::<Result<Vec<_>>>()?,
    };
    let normalize = match obj.get("normalize") {
        None => false,
        Some(Value::Bool(b)) => *b,
        Some(other) => return Err(schema("normalize", format!("expected a boolean, got {other}"))),
    };
    let m = RealMeasure::new(atoms, pieces)?;
    if normalize {
        m.normalize()
    } else {
        Ok(m)
    }
}

/// Parses a measure document. A triple document is also accepted.
pub fn parse_measure(text: &str) -> Result<RealMeasure> {
    let v: Value = serde_json::from_str(text).map_err(|e| schema("<document>", e))?;
    let obj = object(&v, "<document>")?;
    reject_unknown(obj, &["atoms", "pieces", "normalize", "kappa"], "<document>")?;
    parse_measure_object(obj)
}

/// Parses a triple document: a measure plus `kappa`. The measure must end up
/// normalized, either as written or through `"normalize": true`.
pub fn parse_triple(text: &str) -> Result<ModelTriple> {
    let v: Value = serde_json::from_str(text).map_err(|e| schema("<document>", e))?;
    let obj = object(&v, "<document>")?;
    reject_unknown(obj, &["atoms", "pieces", "normalize", "kappa"], "<document>")?;
    let measure = parse_measure_object(obj)?;
    let kappa = match obj.get("kappa") {
        None => VonNeumannParameter::zero(),
        Some(k) => {
            let k = object(k, "kappa")?;
            reject_unknown(k, &["re", "im"], "kappa")?;
            let re = match k.get("re") {
                Some(x) => finite(x, "kappa.re")?,
                None => 0.0,
            };
            let im = match k.get("im") {
                Some(x) => finite(x, "kappa.im")?,
                None => 0.0,
            };
            VonNeumannParameter::new(Complex::new(re, im))?
        }
    };
    ModelTriple::new(measure, kappa)
}

/// Encodes a measure with its overall scale folded into the masses and
/// coefficients, so that parsing the result reproduces the same measure.
pub fn measure_to_json(m: &RealMeasure) -> Value {
    let s = m.scale();
    let atoms: Vec<Value> = m
        .atoms()
        .iter()
        .map(|a| json!({"pos": a.position, "mass": a.mass * s}))
        .collect();
    let pieces: Vec<Value> = m
        .pieces()
        .iter()
        .map(|p| {
            let support = json!([encode(p.lo), encode(p.hi)]);
            match &p.form {
                DensityForm::PowerLaw {
                    coefficient,
                    exponent,
                    anchor,
                } => json!({
                    "support": support,
                    "power": {"c": coefficient * s, "nu": exponent, "anchor": anchor},
                }),
                DensityForm::Tabulated { grid, values } => json!({
                    "support": support,
                    "tabulated": {"grid": grid, "values": values.iter().map(|v| v * s).collect::<Vec<_>>()},
                }),
            }
        })
        .collect();
    json!({"atoms": atoms, "pieces": pieces, "normalize": false})
}

pub fn triple_to_json(t: &ModelTriple) -> Value {
    let mut v = measure_to_json(t.measure());
    let k = t.kappa().value();
    v["kappa"] = json!({"re": k.re, "im": k.im});
    v
}
