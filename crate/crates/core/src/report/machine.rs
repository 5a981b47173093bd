use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::explore::{Stats, Verdict, VerdictResult};

/// The one-line `key=value` summary of a run, for scripts.
///
/// Fields appear in a fixed order: `result`, `executions`, `blocked`, then
/// `evA`, `evB` and `diagnostic` when present. Values containing spaces,
/// quotes, backslashes or `=` are double-quoted with backslash escapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineRecord {
    /// `OK`, an error code such as `race`, or `budget` when exploration ran
    /// out of executions before finding anything.
    pub result: String,
    pub executions: usize,
    pub blocked: usize,
    pub ev_a: Option<String>,
    pub ev_b: Option<String>,
    pub diagnostic: Option<String>,
}

impl MachineRecord {
    pub fn from_verdict(v: &Verdict) -> MachineRecord {
        let src = |i: usize| {
            v.witness
                .as_ref()
                .and_then(|w| w.events.get(i))
                .map(|e| e.src.to_string())
        };
        let (ev_a, ev_b, diagnostic) = match &v.result {
            VerdictResult::Ok => (None, None, None),
            VerdictResult::DataRace { first, second } => (src(*first), src(*second), None),
            VerdictResult::AssertViolation { event }
            | VerdictResult::OutOfBounds { event }
            | VerdictResult::UninitializedRead { event }
            | VerdictResult::Panic { event } => (src(*event), None, None),
            VerdictResult::Unsupported { diagnostic } => (None, None, Some(diagnostic.clone())),
        };
        MachineRecord {
            result: v.result.code().to_string(),
            executions: v.stats.executions,
            blocked: v.stats.blocked,
            ev_a,
            ev_b,
            diagnostic,
        }
    }

    /// Record for an exploration that hit its execution budget.
    pub fn budget(stats: &Stats) -> MachineRecord {
        MachineRecord {
            result: "budget".into(),
            executions: stats.executions,
            blocked: stats.blocked,
            ev_a: None,
            ev_b: None,
            diagnostic: None,
        }
    }
}

pub fn machine_report(v: &Verdict) -> String {
    MachineRecord::from_verdict(v).to_string()
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty() || s.chars().any(|c| c.is_whitespace() || matches!(c, '"' | '\\' | '='))
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl fmt::Display for MachineRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut fields = vec![
            ("result", self.result.clone()),
            ("executions", self.executions.to_string()),
            ("blocked", self.blocked.to_string()),
        ];
        for (k, v) in [
            ("evA", &self.ev_a),
            ("evB", &self.ev_b),
            ("diagnostic", &self.diagnostic),
        ] {
            if let Some(v) = v {
                fields.push((k, v.clone()));
            }
        }
        let parts: Vec<String> = fields
            .into_iter()
            .map(|(k, v)| {
                if needs_quotes(&v) {
                    format!("{k}={}", quote(&v))
                } else {
                    format!("{k}={v}")
                }
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("malformed field at byte {0}")]
    Malformed(usize),
    #[error("unterminated quoted value")]
    Unterminated,
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("duplicate key {0:?}")]
    Duplicate(String),
    #[error("missing key {0:?}")]
    Missing(&'static str),
    #[error("bad number for {key}: {value:?}")]
    BadNumber { key: String, value: String },
}

fn split_fields(s: &str) -> Result<Vec<(String, String)>, RecordError> {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        if chars[i].1.is_whitespace() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut key = String::new();
        while i < chars.len() && chars[i].1 != '=' && !chars[i].1.is_whitespace() {
            key.push(chars[i].1);
            i += 1;
        }
        if key.is_empty() || i >= chars.len() || chars[i].1 != '=' {
            return Err(RecordError::Malformed(start));
        }
        i += 1;
        let mut value = String::new();
        if i < chars.len() && chars[i].1 == '"' {
            i += 1;
            loop {
                let Some(&(_, c)) = chars.get(i) else {
                    return Err(RecordError::Unterminated);
                };
                i += 1;
                match c {
                    '"' => break,
                    '\\' => {
                        let Some(&(_, e)) = chars.get(i) else {
                            return Err(RecordError::Unterminated);
                        };
                        i += 1;
                        value.push(match e {
                            'n' => '\n',
                            't' => '\t',
                            'r' => '\r',
                            other => other,
                        });
                    }
                    c => value.push(c),
                }
            }
            if i < chars.len() && !chars[i].1.is_whitespace() {
                return Err(RecordError::Malformed(chars[i].0));
            }
        } else {
            while i < chars.len() && !chars[i].1.is_whitespace() {
                value.push(chars[i].1);
                i += 1;
            }
        }
        out.push((key, value));
    }
    Ok(out)
}

impl FromStr for MachineRecord {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, RecordError> {
        let mut result = None;
        let mut executions = None;
        let mut blocked = None;
        let mut ev_a = None;
        let mut ev_b = None;
        let mut diagnostic = None;
        for (k, v) in split_fields(s)? {
            let num = |v: &str| {
                v.parse::<usize>().map_err(|_| RecordError::BadNumber {
                    key: k.clone(),
                    value: v.to_string(),
                })
            };
            let slot_taken = match k.as_str() {
                "result" => result.replace(v).is_some(),
                "executions" => executions.replace(num(&v)?).is_some(),
                "blocked" => blocked.replace(num(&v)?).is_some(),
                "evA" => ev_a.replace(v).is_some(),
                "evB" => ev_b.replace(v).is_some(),
                "diagnostic" => diagnostic.replace(v).is_some(),
                _ => return Err(RecordError::UnknownKey(k)),
            };
            if slot_taken {
                return Err(RecordError::Duplicate(k));
            }
        }
        Ok(MachineRecord {
            result: result.ok_or(RecordError::Missing("result"))?,
            executions: executions.ok_or(RecordError::Missing("executions"))?,
            blocked: blocked.ok_or(RecordError::Missing("blocked"))?,
            ev_a,
            ev_b,
            diagnostic,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_values_round_trip() {
        let r = MachineRecord {
            result: "unsupported".into(),
            executions: 0,
            blocked: 0,
            ev_a: None,
            ev_b: None,
            diagnostic: Some("a \"b\" = c\\d\nnext".into()),
        };
        let text = r.to_string();
        assert!(!text.contains('\n'));
        assert_eq!(text.parse::<MachineRecord>().unwrap(), r);
    }

    #[test]
    fn rejects_garbage() {
        assert!("result=OK".parse::<MachineRecord>().is_err());
        assert!("result=OK executions=1 blocked=x".parse::<MachineRecord>().is_err());
        assert!("result=OK executions=1 blocked=0 foo=1".parse::<MachineRecord>().is_err());
        assert!("result=\"OK executions=1".parse::<MachineRecord>().is_err());
    }
}
