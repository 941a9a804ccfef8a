//! Canonical JSON documents for scenarios, behaviours and functionals.
//!
//! Every document carries `"version": "lfic/1"` and a `"kind"` tag. Rationals
//! are `"num/den"` strings, float entries are shortest round-trip decimal
//! strings, and table coordinates use the labels `a`, `b`, `x`, `y`.
//!
//! ```json
//! {
//!   "version": "lfic/1",
//!   "kind": "behavior",
//!   "scenario": {"alice_inputs": 3, "alice_outputs": 3, "bob_inputs": 2,
//!                "bob_outputs": 2, "charlie_outputs": 3},
//!   "backing": "exact",
//!   "entries": [{"a": 0, "b": 0, "x": 0, "y": 0, "p": "1/6"}, ...]
//! }
//! ```
//!
//! Behaviour entries may be omitted, in which case they are zero. Functionals
//! list only their nonzero `terms` (`"coefficient"` field) plus `offset` and
//! `sense`.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use serde_json::{json, Map, Value as Json};

use crate::error::{Error, Result};
use crate::rational::{format_q, parse_q, Q};
use crate::scenario::{Behavior, BellFunctional, Scenario, Sense, Table};

pub const VERSION: &str = "lfic/1";

#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Scenario(Scenario),
    Behavior(Behavior),
    Functional(BellFunctional),
}

pub fn scenario_json(s: &Scenario) -> Json {
    json!({
        "alice_inputs": s.alice_inputs,
        "alice_outputs": s.alice_outputs,
        "bob_inputs": s.bob_inputs,
        "bob_outputs": s.bob_outputs,
        "charlie_outputs": s.charlie_outputs,
    })
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn behavior_json(p: &Behavior) -> Json {
    let s = p.scenario();
    let mut entries = Vec::with_capacity(s.dim());
    let backing = match p.table() {
        Table::Exact(v) => {
            for (i, e) in s.entries().enumerate() {
                entries.push(json!({"a": e.a, "b": e.b, "x": e.x, "y": e.y, "p": format_q(&v[i])}));
            }
            "exact"
        }
        Table::Float(v) => {
            for (i, e) in s.entries().enumerate() {
                entries.push(json!({"a": e.a, "b": e.b, "x": e.x, "y": e.y, "p": format_f64(v[i])}));
            }
            "float"
        }
    };
    json!({
        "version": VERSION,
        "kind": "behavior",
        "scenario": scenario_json(s),
        "backing": backing,
        "entries": entries,
    })
}

pub fn functional_json(f: &BellFunctional) -> Json {
    let terms: Vec<Json> = f
        .terms()
        .into_iter()
        .map(|(e, c)| json!({"a": e.a, "b": e.b, "x": e.x, "y": e.y, "coefficient": format_q(&c)}))
        .collect();
    json!({
        "version": VERSION,
        "kind": "functional",
        "scenario": scenario_json(f.scenario()),
        "sense": match f.sense() { Sense::LowerBound => "lower-bound", Sense::UpperBound => "upper-bound" },
        "offset": format_q(f.offset()),
        "terms": terms,
    })
}

pub fn to_json(doc: &Document) -> Json {
    match doc {
        Document::Scenario(s) => json!({"version": VERSION, "kind": "scenario", "scenario": scenario_json(s)}),
        Document::Behavior(p) => behavior_json(p),
        Document::Functional(f) => functional_json(f),
    }
}

/// Pretty-printed document followed by a newline.
pub fn to_string(doc: &Document) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(doc)).expect("json values always serialize");
    s.push('\n');
    s
}

pub fn serialize_behavior(p: &Behavior) -> String {
    to_string(&Document::Behavior(p.clone()))
}

pub fn serialize_functional(f: &BellFunctional) -> String {
    to_string(&Document::Functional(f.clone()))
}

pub fn serialize_scenario(s: &Scenario) -> String {
    to_string(&Document::Scenario(*s))
}

/// Parses JSON text, mapping syntax errors to [`Error::Parse`] with location.
pub fn parse_json(text: &str) -> Result<Json> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn from_str(text: &str) -> Result<Document> {
    from_json(&parse_json(text)?)
}

pub fn from_json(v: &Json) -> Result<Document> {
    let obj = as_object(v, "document")?;
    check_version(obj)?;
    match get_str(obj, "kind")? {
        "scenario" => Ok(Document::Scenario(scenario_from(get(obj, "scenario")?)?)),
        "behavior" => Ok(Document::Behavior(behavior_from(obj)?)),
        "functional" => Ok(Document::Functional(functional_from(obj)?)),
        other => Err(Error::Schema(format!("unknown document kind {other:?}"))),
    }
}

pub fn deserialize_behavior(text: &str) -> Result<Behavior> {
    match from_str(text)? {
        Document::Behavior(p) => Ok(p),
        _ => Err(Error::Schema("expected a behavior document".into())),
    }
}

pub fn deserialize_functional(text: &str) -> Result<BellFunctional> {
    match from_str(text)? {
        Document::Functional(f) => Ok(f),
        _ => Err(Error::Schema("expected a functional document".into())),
    }
}

pub fn deserialize_scenario(text: &str) -> Result<Scenario> {
    match from_str(text)? {
        Document::Scenario(s) => Ok(s),
        _ => Err(Error::Schema("expected a scenario document".into())),
    }
}

pub(crate) fn check_version(obj: &Map<String, Json>) -> Result<()> {
    let v = get_str(obj, "version")?;
    if v != VERSION {
        return Err(Error::Schema(format!("unsupported version {v:?}, expected {VERSION:?}")));
    }
    Ok(())
}

pub(crate) fn as_object<'a>(v: &'a Json, what: &str) -> Result<&'a Map<String, Json>> {
    v.as_object().ok_or_else(|| Error::Schema(format!("{what} must be an object")))
}

pub(crate) fn get<'a>(obj: &'a Map<String, Json>, key: &str) -> Result<&'a Json> {
    obj.get(key).ok_or_else(|| Error::Schema(format!("missing field {key:?}")))
}

pub(crate) fn get_str<'a>(obj: &'a Map<String, Json>, key: &str) -> Result<&'a str> {
    get(obj, key)?
        .as_str()
        .ok_or_else(|| Error::Schema(format!("field {key:?} must be a string")))
}

pub(crate) fn get_usize(obj: &Map<String, Json>, key: &str) -> Result<usize> {
    get(obj, key)?
        .as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| Error::Schema(format!("field {key:?} must be a nonnegative integer")))
}

pub(crate) fn get_array<'a>(obj: &'a Map<String, Json>, key: &str) -> Result<&'a Vec<Json>> {
    get(obj, key)?
        .as_array()
        .ok_or_else(|| Error::Schema(format!("field {key:?} must be an array")))
}

pub fn scenario_from(v: &Json) -> Result<Scenario> {
    let o = as_object(v, "scenario")?;
    Scenario::new(
        get_usize(o, "alice_inputs")?,
        get_usize(o, "alice_outputs")?,
        get_usize(o, "bob_inputs")?,
        get_usize(o, "bob_outputs")?,
        get_usize(o, "charlie_outputs")?,
    )
    .map_err(|e| Error::Schema(e.to_string()))
}

fn index_of(s: &Scenario, o: &Map<String, Json>) -> Result<usize> {
    s.checked_index(get_usize(o, "a")?, get_usize(o, "b")?, get_usize(o, "x")?, get_usize(o, "y")?)
}

fn parse_f64(text: &str) -> Result<f64> {
    let x: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::Schema(format!("malformed float {text:?}")))?;
    if !x.is_finite() {
        return Err(Error::Schema(format!("non-finite float {text:?}")));
    }
    Ok(x)
}

fn behavior_from(obj: &Map<String, Json>) -> Result<Behavior> {
    let s = scenario_from(get(obj, "scenario")?)?;
    let entries = get_array(obj, "entries")?;
    let mut seen = BTreeSet::new();
    let backing = get_str(obj, "backing")?;
    let mut exact = vec![Q::zero(); s.dim()];
    let mut float = vec![0.0; s.dim()];
    for e in entries {
        let o = as_object(e, "entry")?;
        let i = index_of(&s, o)?;
        if !seen.insert(i) {
            return Err(Error::Schema(format!("duplicate entry {:?}", s.entry(i))));
        }
        let text = get_str(o, "p")?;
        match backing {
            "exact" => {
                let v = parse_q(text)?;
                if v.is_negative() {
                    return Err(Error::Schema(format!("negative probability {text} at {:?}", s.entry(i))));
                }
                exact[i] = v;
            }
            "float" => {
                let v = parse_f64(text)?;
                if v < 0.0 {
                    return Err(Error::Schema(format!("negative probability {text} at {:?}", s.entry(i))));
                }
                float[i] = v;
            }
            other => return Err(Error::Schema(format!("unknown backing {other:?}"))),
        }
    }
    match backing {
        "exact" => Behavior::exact(s, exact),
        "float" => Behavior::float(s, float),
        other => Err(Error::Schema(format!("unknown backing {other:?}"))),
    }
}

fn functional_from(obj: &Map<String, Json>) -> Result<BellFunctional> {
    let s = scenario_from(get(obj, "scenario")?)?;
    let sense = match get_str(obj, "sense")? {
        "lower-bound" => Sense::LowerBound,
        "upper-bound" => Sense::UpperBound,
        other => return Err(Error::Schema(format!("unknown sense {other:?}"))),
    };
    let offset = parse_q(get_str(obj, "offset")?)?;
    let mut coefficients = vec![Q::zero(); s.dim()];
    let mut seen = BTreeSet::new();
    for t in get_array(obj, "terms")? {
        let o = as_object(t, "term")?;
        let i = index_of(&s, o)?;
        if !seen.insert(i) {
            return Err(Error::Schema(format!("duplicate term {:?}", s.entry(i))));
        }
        coefficients[i] = parse_q(get_str(o, "coefficient")?)?;
    }
    BellFunctional::new(s, coefficients, offset, sense)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn float_strings_round_trip_bitwise() {
        for x in [0.1, 1.0 / 3.0, 2f64.sqrt() / 4.0, 1e-300, 0.0] {
            let s = format_f64(x);
            assert_eq!(parse_f64(&s).unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn behavior_round_trip() {
        let p = Behavior::uniform(Scenario::main());
        let back = deserialize_behavior(&serialize_behavior(&p)).unwrap();
        assert_eq!(back, p);
        let f = p.to_float();
        assert_eq!(deserialize_behavior(&serialize_behavior(&f)).unwrap(), f);
    }

    #[test]
    fn negative_probability_rejected() {
        let p = Behavior::uniform(Scenario::main());
        let text = serialize_behavior(&p).replacen("\"1/6\"", "\"-1/6\"", 1);
        assert!(matches!(deserialize_behavior(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn syntax_error_has_location() {
        match from_str("{\n  \"version\": \"lfic/1\",\n  oops\n}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_index_is_schema_error() {
        let s = Scenario::main();
        let f = BellFunctional::from_terms(s, &[(0, 0, 0, 0, 1)], q(0, 1)).unwrap();
        let text = serialize_functional(&f).replace("\"a\": 0", "\"a\": 7");
        assert!(matches!(deserialize_functional(&text), Err(Error::Schema(_))));
    }
}
