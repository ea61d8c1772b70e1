//! Check reports and the fixed-precision JSON writer used for run reports.

use serde::Serialize;
use serde_json::Value;

/// A single failed sample of an inequality or axiom check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    pub detail: String,
    /// How far the inequality missed, after slack (always positive).
    pub excess: f64,
}

/// Outcome of a sampled check. Failures are data, not errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    /// Smallest slack observed over all samples; negative iff something failed.
    pub worst_slack: f64,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            samples: 0,
            worst_slack: f64::INFINITY,
            violations: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Records one sample whose slack was computed by [`crate::numeric::slack`].
    pub fn record(&mut self, check: &str, slack: f64, detail: impl FnOnce() -> String) {
        self.samples += 1;
        if slack < self.worst_slack {
            self.worst_slack = slack;
        }
        if slack < 0.0 || slack.is_nan() {
            self.violations.push(Violation {
                check: check.to_string(),
                detail: detail(),
                excess: -slack,
            });
        }
    }

    /// Records a boolean sub-check.
    pub fn record_flag(&mut self, check: &str, ok: bool, detail: impl FnOnce() -> String) {
        self.samples += 1;
        if !ok {
            self.violations.push(Violation {
                check: check.to_string(),
                detail: detail(),
                excess: f64::NAN,
            });
        }
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.samples += other.samples;
        self.worst_slack = self.worst_slack.min(other.worst_slack);
        self.violations.extend(other.violations);
    }
}

/// Serializes `value` as indented JSON with every float printed to 17
/// significant digits. Non-finite floats become `null`.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report types serialize infallibly");
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    out
}

/// Formats a float with 17 significant digits (or `null`).
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_f64(n.as_f64().unwrap()));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(indent + 1, out);
                write_value(item, indent + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(indent + 1, out);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(item, indent + 1, out);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(indent, out);
            out.push('}');
        }
    }
}

fn pad(indent: usize, out: &mut String) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        x: f64,
        n: usize,
        bad: f64,
        tags: Vec<&'static str>,
    }

    #[test]
    fn floats_use_seventeen_digits_and_parse_back() {
        let s = to_json_string(&Sample {
            x: 0.1,
            n: 3,
            bad: f64::NAN,
            tags: vec!["a"],
        });
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"bad\": null"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
        assert_eq!(back["n"].as_u64().unwrap(), 3);
    }

    #[test]
    fn record_tracks_worst_slack() {
        let mut r = CheckReport::new("demo");
        r.record("a", 0.5, || unreachable!());
        r.record("b", -0.25, || "bad".into());
        assert_eq!(r.samples, 2);
        assert_eq!(r.worst_slack, -0.25);
        assert!(!r.passed());
        assert_eq!(r.violations[0].excess, 0.25);
    }
}
