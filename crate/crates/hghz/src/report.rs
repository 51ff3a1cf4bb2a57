//! Machine-readable reports: a stamped envelope, deterministic JSON, and a
//! validator for the checked-in schemas.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const VACUOUS_BANNER: &str = "security: vacuous (toy parameters, functional verification only)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportRegime {
    Toy,
    Secure,
}

#[derive(Debug, Clone, Serialize)]
pub struct Envelope<T: Serialize> {
    pub kind: &'static str,
    pub seed: u64,
    pub regime: ReportRegime,
    pub code_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub security: Option<&'static str>,
    pub body: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(kind: &'static str, seed: u64, regime: ReportRegime, body: T) -> Self {
        let security = (regime == ReportRegime::Toy).then_some(VACUOUS_BANNER);
        Self {
            kind,
            seed,
            regime,
            code_version: CODE_VERSION,
            security,
            body,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("report types serialize")
    }

    /// Pretty JSON with a trailing newline. serde_json keeps struct field
    /// order, so equal inputs give equal bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report types serialize");
        s.push('\n');
        s
    }
}

/// Sibling file holding the wall-clock fields kept out of the report itself.
pub fn timing_path(report: &Path) -> PathBuf {
    let mut name = report
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".timing.json");
    report.with_file_name(name)
}

/// Writes rendered report text to `path` and the timing sidecar beside it.
pub fn write_report(path: &Path, rendered: &str, elapsed: Duration) -> io::Result<()> {
    fs::write(path, rendered)?;
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default();
    let timing =
        json!({ "generated_unix_s": now.as_secs(), "elapsed_ms": elapsed.as_millis() as u64 });
    fs::write(timing_path(path), format!("{timing}\n"))
}

/// Checked-in schema for a report kind.
pub fn schema_for(kind: &str) -> Option<&'static str> {
    Some(match kind {
        "plan" => include_str!("../schemas/plan.schema.json"),
        "keygen" => include_str!("../schemas/keygen.schema.json"),
        "eval" => include_str!("../schemas/eval.schema.json"),
        "invert" => include_str!("../schemas/invert.schema.json"),
        "estimate-delta" => include_str!("../schemas/estimate-delta.schema.json"),
        "run" => include_str!("../schemas/run.schema.json"),
        "games" => include_str!("../schemas/games.schema.json"),
        "attacks" => include_str!("../schemas/attacks.schema.json"),
        _ => return None,
    })
}

pub const REPORT_KINDS: [&str; 8] = [
    "plan",
    "keygen",
    "eval",
    "invert",
    "estimate-delta",
    "run",
    "games",
    "attacks",
];

/// Validates a report against the schema named by its `kind`.
pub fn validate_report(report: &Value) -> Result<(), Vec<String>> {
    let kind = report
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| vec!["missing kind".to_string()])?;
    let schema = schema_for(kind).ok_or_else(|| vec![format!("unknown report kind {kind:?}")])?;
    let schema: Value =
        serde_json::from_str(schema).map_err(|e| vec![format!("schema for {kind}: {e}")])?;
    validate(&schema, report)
}

/// Checks `value` against a JSON Schema subset: type (string or list),
/// required, properties, additionalProperties = false, items, enum, const,
/// minimum, maximum, and anyOf. Returns every violation with its JSON pointer.
pub fn validate(schema: &Value, value: &Value) -> Result<(), Vec<String>> {
    let mut errs = Vec::new();
    check(schema, value, "", &mut errs);
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn type_matches(t: &str, v: &Value) -> bool {
    match t {
        "null" => v.is_null(),
        "boolean" => v.is_boolean(),
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64(),
        _ => false,
    }
}

fn check(schema: &Value, v: &Value, at: &str, errs: &mut Vec<String>) {
    let Some(s) = schema.as_object() else { return };
    if let Some(t) = s.get("type") {
        let ok = match t {
            Value::String(t) => type_matches(t, v),
            Value::Array(ts) => ts
                .iter()
                .filter_map(Value::as_str)
                .any(|t| type_matches(t, v)),
            _ => true,
        };
        if !ok {
            errs.push(format!("{at}: expected type {t}, got {v}"));
            return;
        }
    }
    if let Some(c) = s.get("const") {
        if c != v {
            errs.push(format!("{at}: expected {c}"));
        }
    }
    if let Some(Value::Array(options)) = s.get("enum") {
        if !options.contains(v) {
            errs.push(format!("{at}: {v} not in enum"));
        }
    }
    if let Some(Value::Array(any)) = s.get("anyOf") {
        let passes = any.iter().any(|sub| {
            let mut e = Vec::new();
            check(sub, v, at, &mut e);
            e.is_empty()
        });
        if !passes {
            errs.push(format!("{at}: matches no alternative"));
        }
    }
    if let (Some(min), Some(x)) = (s.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            errs.push(format!("{at}: {x} below minimum {min}"));
        }
    }
    if let (Some(max), Some(x)) = (s.get("maximum").and_then(Value::as_f64), v.as_f64()) {
        if x > max {
            errs.push(format!("{at}: {x} above maximum {max}"));
        }
    }
    if let Some(obj) = v.as_object() {
        if let Some(Value::Array(req)) = s.get("required") {
            for r in req.iter().filter_map(Value::as_str) {
                if !obj.contains_key(r) {
                    errs.push(format!("{at}: missing required {r:?}"));
                }
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, child) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(sub) => check(sub, child, &format!("{at}/{k}"), errs),
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    errs.push(format!("{at}: unexpected property {k:?}"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (s.get("items"), v.as_array()) {
        for (i, child) in arr.iter().enumerate() {
            check(items, child, &format!("{at}/{i}"), errs);
        }
    }
}
