//! Append-only event log: one canonical JSON object per line.
//!
//! Keys are emitted in sorted order (the JSON map is ordered), so two runs
//! that produce the same records produce the same bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::domain::Timestamp;

#[derive(Debug, Error)]
pub enum EventLogError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("cannot write event log {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLogRecord {
    pub at: Timestamp,
    pub kind: String,
    pub payload: BTreeMap<String, Value>,
}

impl EventLogRecord {
    pub fn new(at: Timestamp, kind: impl Into<String>) -> Self {
        EventLogRecord { at, kind: kind.into(), payload: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.payload.insert(key.to_string(), value.into());
        self
    }

    /// Merges the fields of a JSON object into the payload; other values are
    /// stored under `value`.
    pub fn with_fields(mut self, value: Value) -> Self {
        match value {
            Value::Object(map) => self.payload.extend(map),
            other => {
                self.payload.insert("value".into(), other);
            }
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.payload.get(key)
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("at".into(), Value::from(self.at.secs()));
        obj.insert("kind".into(), Value::from(self.kind.clone()));
        obj.insert("payload".into(), Value::Object(self.payload.clone().into_iter().collect()));
        Value::Object(obj)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("JSON values always serialise")
    }

    pub fn from_line(line: &str) -> Result<Self, String> {
        let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        let Value::Object(mut obj) = value else {
            return Err("record is not an object".into());
        };
        let at = obj
            .remove("at")
            .and_then(|v| v.as_f64())
            .ok_or("missing numeric `at`")?;
        let at = Timestamp::new(at).map_err(|e| e.to_string())?;
        let kind = match obj.remove("kind") {
            Some(Value::String(s)) => s,
            _ => return Err("missing string `kind`".into()),
        };
        let payload = match obj.remove("payload") {
            Some(Value::Object(m)) => m.into_iter().collect(),
            _ => return Err("missing object `payload`".into()),
        };
        if let Some(extra) = obj.keys().next() {
            return Err(format!("unexpected field `{extra}`"));
        }
        Ok(EventLogRecord { at, kind, payload })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub records: Vec<EventLogRecord>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: EventLogRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EventLogRecord> {
        self.records.iter()
    }

    pub fn of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a EventLogRecord> + 'a {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, EventLogError> {
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                EventLogRecord::from_line(l).map_err(|reason| EventLogError::Malformed { line: i + 1, reason })
            })
            .collect::<Result<_, _>>()?;
        Ok(EventLog { records })
    }

    pub fn write_to(&self, path: &Path) -> Result<(), EventLogError> {
        let io = |source| EventLogError::Io { path: path.display().to_string(), source };
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        f.write_all(self.to_text().as_bytes()).map_err(io)?;
        f.flush().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_line() {
        let r = EventLogRecord::new(Timestamp::from_secs(1.5), "lid")
            .with("open", true)
            .with("a_first", 3);
        assert_eq!(r.to_line(), r#"{"at":1.5,"kind":"lid","payload":{"a_first":3,"open":true}}"#);
        assert_eq!(EventLogRecord::from_line(&r.to_line()).unwrap(), r);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(EventLog::parse("{}\n").is_err());
        assert!(EventLog::parse("not json").is_err());
        let err = EventLog::parse("{\"at\":0.0,\"kind\":\"x\",\"payload\":{}}\n[1]").unwrap_err();
        assert!(matches!(err, EventLogError::Malformed { line: 2, .. }));
    }

    fn value() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![
            Just(Value::Null),
            any::<bool>().prop_map(Value::from),
            any::<i64>().prop_map(Value::from),
            (-1.0e9f64..1.0e9).prop_map(Value::from),
            "[ -~]{0,12}".prop_map(Value::from),
        ];
        leaf.prop_recursive(3, 16, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(Value::from),
                prop::collection::btree_map("[a-z]{1,6}", inner, 0..4)
                    .prop_map(|m| Value::Object(m.into_iter().collect())),
            ]
        })
    }

    proptest! {
        #[test]
        fn serialise_parse_is_identity_on_canonical_bytes(
            at in 0u32..1_000_000,
            kind in "[a-z_]{1,10}",
            payload in prop::collection::btree_map("[a-z]{1,6}", value(), 0..5),
        ) {
            let r = EventLogRecord { at: Timestamp::from_secs(at as f64 / 10.0), kind, payload };
            let log = EventLog { records: vec![r.clone(), r] };
            let text = log.to_text();
            let back = EventLog::parse(&text).unwrap();
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
