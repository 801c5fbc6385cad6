//! JSON documents (`"format": "auxetica/1"`) and machine-readable reports.
//!
//! Numbers are written as strings: `"p/q"` for exact values. On input, JSON
//! numbers and decimal strings are read as exact rationals.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::cubic::{InvariantRecord, LinearForm, TernaryCubic, MONOMIAL_LABELS};
use crate::decision::{DecisionReport, InfinitesimalDeformation, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::framework::{EdgeOrbit, PeriodicFramework, SymmetricMatrix3, SYM_LABELS};
use crate::scalar::{format_float, format_rational, parse_rational, Rational, Scalar};

pub const FORMAT: &str = "auxetica/1";

/// Parsed input document.
#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Framework(PeriodicFramework<Rational>),
    /// Six linear forms in `(X, Y, Z)`, one per `ω̇` entry in storage order.
    Pencil([LinearForm<Rational>; 6]),
    Cubic(TernaryCubic<Rational>),
}

fn err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Document { location: location.into(), message: message.into() }
}

fn number(v: &Value, at: &str) -> Result<Rational> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(err(at, "expected a number or a \"p/q\" string")),
    };
    parse_rational(&text).map_err(|e| err(at, e.to_string()))
}

fn array<'a>(v: &'a Value, at: &str, len: Option<usize>) -> Result<&'a Vec<Value>> {
    let a = v.as_array().ok_or_else(|| err(at, "expected an array"))?;
    if let Some(len) = len {
        if a.len() != len {
            return Err(err(at, format!("expected {len} entries, found {}", a.len())));
        }
    }
    Ok(a)
}

fn triple(v: &Value, at: &str) -> Result<[Rational; 3]> {
    let a = array(v, at, Some(3))?;
    Ok([number(&a[0], &format!("{at}[0]"))?, number(&a[1], &format!("{at}[1]"))?, number(&a[2], &format!("{at}[2]"))?])
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, at: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| err(at, format!("missing field `{key}`")))
}

fn integer(v: &Value, at: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| err(at, "expected an integer"))
}

fn gram(v: &Value) -> Result<SymmetricMatrix3<Rational>> {
    let a = v.as_array().ok_or_else(|| err("gram", "expected an array"))?;
    match a.len() {
        6 => {
            let mut entries = Vec::with_capacity(6);
            for (i, x) in a.iter().enumerate() {
                entries.push(number(x, &format!("gram[{i}]"))?);
            }
            Ok(SymmetricMatrix3::new(entries.try_into().expect("six entries")))
        }
        3 => {
            let rows = [triple(&a[0], "gram[0]")?, triple(&a[1], "gram[1]")?, triple(&a[2], "gram[2]")?];
            SymmetricMatrix3::from_full(&rows).ok_or_else(|| err("gram", "full Gram matrix is not symmetric"))
        }
        n => Err(err("gram", format!("expected 6 entries or 3 rows, found {n}"))),
    }
}

/// Parses any document kind.
pub fn parse_document(text: &str) -> Result<Document> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| err(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    let obj = root.as_object().ok_or_else(|| err("document", "expected a JSON object"))?;
    match obj.get("format") {
        Some(Value::String(f)) if f == FORMAT => {}
        Some(other) => return Err(err("format", format!("unsupported format {other}, expected \"{FORMAT}\""))),
        None => return Err(err("format", format!("missing field `format` (expected \"{FORMAT}\")"))),
    }
    let kind = match obj.get("kind") {
        None => "framework",
        Some(Value::String(k)) => k.as_str(),
        Some(_) => return Err(err("kind", "expected a string")),
    };
    match kind {
        "framework" => parse_framework_object(obj).map(Document::Framework),
        "pencil" => {
            let forms = array(field(obj, "forms", "document")?, "forms", Some(6))?;
            let mut out = Vec::with_capacity(6);
            for (i, f) in forms.iter().enumerate() {
                out.push(LinearForm(triple(f, &format!("forms[{i}]"))?));
            }
            Ok(Document::Pencil(out.try_into().expect("six forms")))
        }
        "cubic" => {
            let cs = array(field(obj, "coefficients", "document")?, "coefficients", Some(10))?;
            let mut out = Vec::with_capacity(10);
            for (i, c) in cs.iter().enumerate() {
                out.push(number(c, &format!("coefficients[{i}]"))?);
            }
            Ok(Document::Cubic(TernaryCubic::new(out.try_into().expect("ten coefficients"))))
        }
        other => Err(err("kind", format!("unknown kind `{other}` (expected framework, pencil or cubic)"))),
    }
}

fn parse_framework_object(obj: &Map<String, Value>) -> Result<PeriodicFramework<Rational>> {
    match field(obj, "dimension", "document")?.as_u64() {
        Some(3) => {}
        _ => return Err(err("dimension", "only dimension 3 is supported")),
    }
    let vs = array(field(obj, "vertices", "document")?, "vertices", None)?;
    if vs.is_empty() {
        return Err(err("vertices", "at least one vertex is required"));
    }
    let mut vertices = Vec::with_capacity(vs.len());
    for (i, v) in vs.iter().enumerate() {
        vertices.push(triple(v, &format!("vertices[{i}]"))?);
    }
    let es = array(field(obj, "edges", "document")?, "edges", None)?;
    let mut edges = Vec::with_capacity(es.len());
    for (i, e) in es.iter().enumerate() {
        let at = format!("edges[{i}]");
        let eo = e.as_object().ok_or_else(|| err(&at, "expected an object"))?;
        let index = |key: &str| -> Result<usize> {
            let v = integer(field(eo, key, &at)?, &format!("{at}.{key}"))?;
            usize::try_from(v)
                .ok()
                .filter(|&u| u < vertices.len())
                .ok_or_else(|| err(format!("{at}.{key}"), format!("vertex index {v} out of range (n = {})", vertices.len())))
        };
        let (tail, head) = (index("tail")?, index("head")?);
        let sa = array(field(eo, "shift", &at)?, &format!("{at}.shift"), Some(3))?;
        let mut shift = [0i64; 3];
        for k in 0..3 {
            shift[k] = integer(&sa[k], &format!("{at}.shift[{k}]"))?;
        }
        edges.push(EdgeOrbit::new(tail, head, shift));
    }
    let g = gram(field(obj, "gram", "document")?)?;
    let fw = PeriodicFramework::new(vertices, edges, g)?;
    let report = fw.validate();
    if let Some(v) = report.violations.first() {
        return Err(err("framework", v.clone()));
    }
    Ok(fw)
}

/// Parses a framework document.
pub fn parse_framework(text: &str) -> Result<PeriodicFramework<Rational>> {
    match parse_document(text)? {
        Document::Framework(fw) => Ok(fw),
        _ => Err(err("kind", "expected a framework document")),
    }
}

pub fn read_document(path: &Path) -> Result<Document> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_document(&text)
}

pub fn read_framework(path: &Path) -> Result<PeriodicFramework<Rational>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_framework(&text)
}

pub fn framework_to_json(fw: &PeriodicFramework<Rational>) -> Value {
    let vertices: Vec<Value> = fw.vertices().iter().map(|q| json!(q.iter().map(format_rational).collect::<Vec<_>>())).collect();
    let edges: Vec<Value> =
        fw.edges().iter().map(|e| json!({"tail": e.tail, "head": e.head, "shift": e.shift})).collect();
    json!({
        "format": FORMAT,
        "dimension": 3,
        "vertices": vertices,
        "edges": edges,
        "gram": fw.gram().entries.iter().map(format_rational).collect::<Vec<_>>(),
    })
}

pub fn write_framework(fw: &PeriodicFramework<Rational>) -> String {
    let mut s = serde_json::to_string_pretty(&framework_to_json(fw)).expect("JSON values serialize");
    s.push('\n');
    s
}

/// A float rounded to 12 significant digits, as a JSON number.
pub fn float_value(v: f64) -> Value {
    format_float(v).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number)
}

fn reprs<T: Scalar>(vs: &[T]) -> Value {
    json!(vs.iter().map(Scalar::repr).collect::<Vec<_>>())
}

fn symmetric_json<T: Scalar>(m: &SymmetricMatrix3<T>) -> Value {
    let mut obj = Map::new();
    for (label, v) in SYM_LABELS.iter().zip(&m.entries) {
        obj.insert(label.to_string(), json!(v.repr()));
    }
    Value::Object(obj)
}

pub fn cubic_json<T: Scalar>(c: &TernaryCubic<T>) -> Value {
    let mut obj = Map::new();
    for (label, v) in MONOMIAL_LABELS.iter().zip(&c.coeffs) {
        obj.insert(label.to_string(), json!(v.repr()));
    }
    Value::Object(obj)
}

/// `k` at four decimals.
pub fn k_short(k: f64) -> String {
    format!("{k:.4}")
}

pub fn invariants_json<T: Scalar>(inv: &InvariantRecord<T>) -> Value {
    let mut obj = json!({
        "S": inv.s.repr(),
        "T": inv.t.repr(),
        "delta": inv.delta.repr(),
        "delta_sign": inv.delta_sign,
        "singular": inv.j.is_none(),
        "J": inv.j.as_ref().map(Scalar::repr),
    });
    if let Some(k) = &inv.k {
        let o = obj.as_object_mut().expect("object");
        o.insert("k".into(), float_value(k.k));
        o.insert("k_4dp".into(), json!(k_short(k.k)));
        o.insert("k_interval".into(), json!([float_value(k.interval.0), float_value(k.interval.1)]));
        o.insert("k_candidates".into(), json!(k.candidates.iter().map(|c| float_value(*c)).collect::<Vec<_>>()));
        o.insert("k_merged_roots".into(), json!(k.merged_roots));
    }
    obj
}

pub fn certificate_json<T: Scalar>(c: &InfinitesimalDeformation<T>) -> Value {
    json!({
        "xyz": reprs(&c.xyz),
        "gram_velocity": symmetric_json(&c.gram_velocity),
        "vertex_velocities": c.vertex_velocities.iter().map(|q| reprs(q)).collect::<Vec<_>>(),
        "residual": float_value(c.residual),
    })
}

pub fn report_json<T: Scalar>(r: &DecisionReport<T>) -> Value {
    let mut obj = Map::new();
    obj.insert("format".into(), json!(FORMAT));
    obj.insert("verdict".into(), json!(r.verdict));
    obj.insert("mode".into(), json!(r.mode));
    obj.insert("n".into(), json!(r.n));
    obj.insert("m".into(), json!(r.m));
    obj.insert("rank".into(), json!(r.rank));
    obj.insert(
        "diagnosis".into(),
        r.diagnosis
            .as_ref()
            .map_or(Value::Null, |d| json!({"condition": d.condition.to_string(), "detail": d.detail})),
    );
    if let Some(p) = &r.pencil {
        obj.insert("free_variables".into(), json!(p.free_variable_labels()));
        let forms: Map<String, Value> =
            SYM_LABELS.iter().zip(&p.forms).map(|(l, f)| (l.to_string(), reprs(&f.0))).collect();
        obj.insert("pencil".into(), Value::Object(forms));
    }
    if let Some(c) = &r.cubic {
        obj.insert("cubic".into(), cubic_json(c));
    }
    if let Some(inv) = &r.invariants {
        obj.insert("invariants".into(), invariants_json(inv));
        if let Some(k) = &inv.k {
            obj.insert("k".into(), float_value(k.k));
        }
    }
    if let Some(s) = &r.step4 {
        obj.insert(
            "step4".into(),
            json!({
                "point": s.point.map(float_value),
                "matrix": s.matrix.map(float_value),
                "eigenvalues": s.eigenvalues.map(float_value),
                "class": s.class,
                "inflections": s.frame.inflections.iter().map(|p| p.0.map(float_value)).collect::<Vec<_>>(),
                "tangents": s.frame.tangents.iter().map(|l| l.0.map(float_value)).collect::<Vec<_>>(),
                "transform": s.frame.transform.matrix.map(|row| row.map(float_value)),
                "transform_condition": float_value(s.frame.transform.condition),
                "transform_deviation": float_value(s.frame.transform.deviation),
            }),
        );
    }
    obj.insert("certificate".into(), r.certificate.as_ref().map_or(Value::Null, certificate_json));
    obj.insert("warnings".into(), json!(r.warnings));
    obj.insert(
        "timing".into(),
        json!({
            "elimination_secs": float_value(r.timing.elimination_secs),
            "total_secs": float_value(r.timing.total_secs),
            "elimination_ops": r.timing.elimination_ops,
        }),
    );
    Value::Object(obj)
}

/// One trajectory line: time, the nine Gram entries (row-major), the
/// coordinates of vertices `1..n` and the edge-length drift.
pub fn trajectory_record_json(r: &TrajectoryRecord) -> Value {
    let full = r.framework.gram().full();
    json!({
        "tau": float_value(r.tau),
        "gram": full.iter().flatten().map(|v| float_value(*v)).collect::<Vec<_>>(),
        "coordinates": r.framework.vertices()[1..].iter().flatten().map(|v| float_value(*v)).collect::<Vec<_>>(),
        "drift": float_value(r.drift),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::family_framework;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let fw = family_framework(&q("5/12"));
        let text = write_framework(&fw);
        assert_eq!(parse_framework(&text).unwrap(), fw);
    }

    #[test]
    fn accepts_decimals_and_full_gram() {
        let text = r#"{"format":"auxetica/1","dimension":3,
            "vertices":[[0,0,0],["0.25","1/4",0.25]],
            "edges":[{"tail":1,"head":0,"shift":[1,0,0]}],
            "gram":[[2,0,0],[0,2,"0.5"],[0,"1/2",2]]}"#;
        let fw = parse_framework(text).unwrap();
        assert_eq!(fw.vertices()[1], [q("1/4"), q("1/4"), q("1/4")]);
        assert_eq!(fw.gram().entries[3], q("1/2"));
    }

    #[test]
    fn errors_carry_locations() {
        let cases = [
            (r#"{"format":"auxetica/1","dimension":2}"#, "dimension"),
            (r#"{"format":"x","dimension":3}"#, "format"),
            (
                r#"{"format":"auxetica/1","dimension":3,"vertices":[[0,0,0]],"edges":[{"tail":0,"head":4,"shift":[1,0,0]}],"gram":[1,1,1,0,0,0]}"#,
                "edges[0].head",
            ),
            (
                r#"{"format":"auxetica/1","dimension":3,"vertices":[[0,"x",0]],"edges":[],"gram":[1,1,1,0,0,0]}"#,
                "vertices[0][1]",
            ),
            (
                r#"{"format":"auxetica/1","dimension":3,"vertices":[[0,0,0]],"edges":[],"gram":[[1,0,0],[1,1,0],[0,0,1]]}"#,
                "gram",
            ),
            ("{\n\"format\": ", "line 2"),
        ];
        for (text, loc) in cases {
            match parse_document(text) {
                Err(Error::Document { location, .. }) => assert!(location.starts_with(loc), "{location} vs {loc}"),
                other => panic!("expected a located error for {loc}, got {other:?}"),
            }
        }
    }

    #[test]
    fn pencil_and_cubic_documents() {
        let text = r#"{"format":"auxetica/1","kind":"cubic","coefficients":[1,1,1,0,0,0,0,0,0,0]}"#;
        let Document::Cubic(c) = parse_document(text).unwrap() else { panic!() };
        assert_eq!(c.coeffs[0], q("1"));
        let text = r#"{"format":"auxetica/1","kind":"pencil","forms":[[1,0,0],[0,1,0],[0,0,1],[0,0,0],[0,0,0],[0,0,0]]}"#;
        assert!(matches!(parse_document(text).unwrap(), Document::Pencil(_)));
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(float_value(1.0 / 3.0), json!(0.333333333333));
        assert_eq!(k_short(25.640712), "25.6407");
    }
}
