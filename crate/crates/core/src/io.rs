//! JSON reading of measures and JSON rendering of every report type.
//!
//! Measures look like
//! `{"dimension": 1, "mass": "1", "atoms": [{"id": "x1", "coords": ["0"], "weight": "1/2"}]}`.
//! Rationals are strings `"p/q"` or integers. Every output object carries
//! `"schema": "1"`.

use std::collections::BTreeSet;

use serde_json::{json, Map, Value};

use crate::continuum::DemoReport;
use crate::equalizer::{EqualizerReport, EqualizerVerdict, Structure};
use crate::error::{Error, Result};
use crate::loss::NonconvexityCertificate;
use crate::measure::{coords_label, DiscreteMeasure, FiniteMap, Point};
use crate::oracle::OracleVerdict;
use crate::rational::Rational;
use crate::transport::{TransportCount, TransportMap, TransportReport, TransportVerdict};
use crate::witness::{ConstraintKind, WitnessPair};

pub const SCHEMA: &str = "1";

fn invalid(field: &str, what: &str) -> Error {
    Error::InvalidParameter(format!("{field}: {what}"))
}

fn parse_rational(value: &Value, field: &str) -> Result<Rational> {
    match value {
        Value::String(s) => s.parse().map_err(|source| Error::Rational { field: field.to_string(), source }),
        Value::Number(n) => match n.as_i64() {
            Some(i) => Ok(Rational::integer(i)),
            None => Err(invalid(field, "numbers must be integers; write fractions as \"p/q\" strings")),
        },
        _ => Err(invalid(field, "expected a rational as \"p/q\" or an integer")),
    }
}

/// Reads and validates a measure. Weights must be strictly positive, points
/// and ids distinct, and the weights must sum to the declared `mass`
/// (default `1`).
pub fn parse_measure(text: &str) -> Result<DiscreteMeasure> {
    let value: Value = serde_json::from_str(text)?;
    measure_from_value(&value)
}

pub fn measure_from_value(value: &Value) -> Result<DiscreteMeasure> {
    let obj = value.as_object().ok_or_else(|| invalid("$", "expected an object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "dimension" | "mass" | "atoms" | "schema") {
            return Err(invalid(&format!("$.{key}"), "unknown field"));
        }
    }
    let atoms =
        obj.get("atoms").and_then(Value::as_array).ok_or_else(|| invalid("$.atoms", "expected an array of atoms"))?;
    let dimension = match obj.get("dimension") {
        Some(d) => {
            d.as_u64().filter(|d| *d > 0).ok_or_else(|| invalid("$.dimension", "expected a positive integer"))? as usize
        }
        None => atoms
            .first()
            .and_then(|a| a.get("coords"))
            .map(|c| c.as_array().map_or(1, Vec::len))
            .ok_or_else(|| invalid("$.dimension", "missing and cannot be inferred"))?,
    };
    let declared = match obj.get("mass") {
        Some(m) => parse_rational(m, "$.mass")?,
        None => Rational::one(),
    };
    let mut ids = BTreeSet::new();
    let mut entries = Vec::with_capacity(atoms.len());
    for (i, atom) in atoms.iter().enumerate() {
        let at = format!("$.atoms[{i}]");
        let atom = atom.as_object().ok_or_else(|| invalid(&at, "expected an object"))?;
        for key in atom.keys() {
            if !matches!(key.as_str(), "id" | "coords" | "weight") {
                return Err(invalid(&format!("{at}.{key}"), "unknown field"));
            }
        }
        let coords = match atom.get("coords") {
            Some(Value::Array(cs)) => cs
                .iter()
                .enumerate()
                .map(|(k, c)| parse_rational(c, &format!("{at}.coords[{k}]")))
                .collect::<Result<Vec<_>>>()?,
            Some(single @ (Value::String(_) | Value::Number(_))) => {
                vec![parse_rational(single, &format!("{at}.coords"))?]
            }
            _ => return Err(invalid(&format!("{at}.coords"), "expected an array of rationals")),
        };
        if coords.len() != dimension {
            return Err(invalid(
                &format!("{at}.coords"),
                &format!("has {} coordinates, dimension is {dimension}", coords.len()),
            ));
        }
        let weight = parse_rational(
            atom.get("weight").ok_or_else(|| invalid(&format!("{at}.weight"), "missing"))?,
            &format!("{at}.weight"),
        )?;
        if !weight.is_positive() {
            return Err(invalid(&format!("{at}.weight"), &format!("weight {weight} must be positive")));
        }
        let id = match atom.get("id") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(_) => return Err(invalid(&format!("{at}.id"), "expected a nonempty string")),
            None => coords_label(&coords),
        };
        if !ids.insert(id.clone()) {
            return Err(invalid(&format!("{at}.id"), &format!("duplicate id `{id}`")));
        }
        entries.push((Point::new(id, coords), weight));
    }
    let measure = DiscreteMeasure::new(dimension, entries)?;
    let actual = measure.mass();
    if actual != declared {
        return Err(Error::MassMismatch { declared, actual });
    }
    Ok(measure)
}

fn rational(x: &Rational) -> Value {
    Value::String(x.to_string())
}

fn coords_value(coords: &[Rational]) -> Value {
    Value::Array(coords.iter().map(rational).collect())
}

pub fn measure_to_value(mu: &DiscreteMeasure) -> Value {
    json!({
        "dimension": mu.dimension(),
        "mass": rational(&mu.mass()),
        "atoms": mu.atoms().iter().map(|a| json!({
            "id": a.point.id(),
            "coords": coords_value(a.point.coords()),
            "weight": rational(&a.weight),
        })).collect::<Vec<_>>(),
    })
}

pub fn measure_to_json(mu: &DiscreteMeasure) -> String {
    serde_json::to_string_pretty(&measure_to_value(mu)).expect("measure JSON")
}

fn image_value(value: &[Rational]) -> Value {
    match value {
        [x] => rational(x),
        _ => coords_value(value),
    }
}

/// `{"map": {id: value}}`; scalar values are plain rationals.
pub fn map_to_value(f: &FiniteMap) -> Value {
    let map: Map<String, Value> = f.entries().map(|(p, v)| (p.id().to_string(), image_value(v))).collect();
    json!({ "map": map })
}

/// `{"map": {source id: target id}}`.
pub fn transport_map_to_value(m: &TransportMap, p: &DiscreteMeasure, q: &DiscreteMeasure) -> Value {
    let map: Map<String, Value> =
        m.id_pairs(p, q).into_iter().map(|(x, y)| (x.to_string(), Value::String(y.to_string()))).collect();
    json!({ "map": map })
}

fn law_value(mu: &DiscreteMeasure) -> Value {
    Value::Array(
        mu.atoms()
            .iter()
            .map(|a| json!({ "value": image_value(a.point.coords()), "weight": rational(&a.weight) }))
            .collect(),
    )
}

fn kind_str(kind: ConstraintKind) -> &'static str {
    match kind {
        ConstraintKind::Equalizer => "equalizer",
        ConstraintKind::Transport => "transport",
    }
}

pub fn witness_to_value(w: &WitnessPair) -> Value {
    json!({
        "kind": kind_str(w.kind),
        "t": rational(&w.t),
        "f": map_to_value(&w.f),
        "g": map_to_value(&w.g),
        "f_push_p": law_value(&w.f_p),
        "f_push_q": law_value(&w.f_q),
        "g_push_p": law_value(&w.g_p),
        "g_push_q": law_value(&w.g_q),
        "mid_push_p": law_value(&w.mid_p),
        "mid_push_q": law_value(&w.mid_q),
    })
}

fn ids(points: &[Point]) -> Value {
    Value::Array(points.iter().map(|p| Value::String(p.id().to_string())).collect())
}

fn structure_value(s: &Structure) -> Value {
    json!({
        "blocks": s.blocks.iter().map(|b| json!({
            "gamma": rational(&b.gamma),
            "p": ids(&b.p_points),
            "q": ids(&b.q_points),
        })).collect::<Vec<_>>(),
        "free_points": ids(&s.free_points),
    })
}

pub fn equalizer_report_to_value(r: &EqualizerReport) -> Value {
    let mut out = json!({
        "schema": SCHEMA,
        "analysis": "equalizer",
        "verdict": r.verdict.label(),
        "decided_by": r.decided_by.as_str(),
        "gamma": rational(&r.reduction.gamma),
        "residual_p": ids(&r.reduction.p_residual.support().cloned().collect::<Vec<_>>()),
        "residual_q": ids(&r.reduction.q_residual.support().cloned().collect::<Vec<_>>()),
    });
    let obj = out.as_object_mut().expect("object");
    match &r.verdict {
        EqualizerVerdict::AllFunctions => {}
        EqualizerVerdict::ConvexTrivial { constant_on } => {
            obj.insert("constant_on".into(), ids(constant_on));
        }
        EqualizerVerdict::ConvexStructured { assignment, structure } => {
            obj.insert("structure".into(), structure_value(structure));
            obj.insert("assignment".into(), serde_json::to_value(assignment).expect("assignment JSON"));
        }
        EqualizerVerdict::Nonconvex { violation, witness } => {
            obj.insert("violation".into(), serde_json::to_value(violation).expect("violation JSON"));
            obj.insert("witness".into(), witness_to_value(witness));
        }
    }
    out
}

fn count_value(c: &TransportCount) -> Value {
    match c {
        TransportCount::Exact(n) => json!({ "exact": n.to_string() }),
        TransportCount::LowerBound(k) => json!({ "lower_bound": k }),
    }
}

/// At most `max_maps` enumerated maps are listed.
pub fn transport_report_to_value(
    r: &TransportReport,
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
    max_maps: usize,
) -> Value {
    let mut out = json!({
        "schema": SCHEMA,
        "analysis": "transport",
        "verdict": r.verdict.label(),
        "decided_by": r.decided_by.as_str(),
        "count": count_value(&r.count),
        "maps": r.maps.iter().take(max_maps).map(|m| transport_map_to_value(m, p, q)).collect::<Vec<_>>(),
    });
    let obj = out.as_object_mut().expect("object");
    match &r.verdict {
        TransportVerdict::Empty => {}
        TransportVerdict::Singleton(m) => {
            obj.insert("map".into(), transport_map_to_value(m, p, q)["map"].clone());
        }
        TransportVerdict::Nonconvex(w) => {
            obj.insert("witness".into(), witness_to_value(w));
        }
    }
    out
}

pub fn oracle_verdict_to_value(v: &OracleVerdict, kind: ConstraintKind) -> Value {
    let mut out = json!({
        "schema": SCHEMA,
        "analysis": format!("oracle_{}", kind_str(kind)),
        "verdict": v.label(),
    });
    let obj = out.as_object_mut().expect("object");
    match v {
        OracleVerdict::CounterexampleFound(w) => {
            obj.insert("witness".into(), witness_to_value(w));
        }
        OracleVerdict::NoCounterexampleInFamily { family, members, pairs_checked } => {
            obj.insert("family".into(), Value::String(family.clone()));
            obj.insert("members".into(), json!(members));
            obj.insert("pairs_checked".into(), json!(pairs_checked));
        }
    }
    out
}

pub fn certificate_to_value(c: &NonconvexityCertificate) -> Value {
    json!({
        "loss": c.loss.name(),
        "f": map_to_value(&c.f),
        "g": map_to_value(&c.g),
        "t": rational(&c.t),
        "loss_f": rational(&c.loss_f),
        "loss_g": rational(&c.loss_g),
        "loss_mid": rational(&c.loss_mid),
    })
}

pub fn demo_report_to_value(r: &DemoReport) -> Value {
    let mut out = serde_json::to_value(r).expect("demo JSON");
    if let Value::Object(obj) = &mut out {
        obj.insert("schema".into(), Value::String(SCHEMA.into()));
    }
    out
}
