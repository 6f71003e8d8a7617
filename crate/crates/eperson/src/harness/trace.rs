//! Line-delimited trace records: one self-describing record per agent per
//! step, append-safe and diff-friendly. Numbers are rounded to nine
//! significant digits before serialization so written records re-parse
//! into equal records.

use crate::planning::PolicyEvaluation;
use crate::uncertainty::{Level, Person, UncertaintyMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bumped on any backward-incompatible record layout change.
pub const SCHEMA_VERSION: u32 = 1;

/// Significant digits kept in serialized numerics.
pub const TRACE_SIG_DIGITS: usize = 9;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("non-finite value in field {0}")]
    NonFinite(&'static str),
    #[error("record schema {found}, expected {SCHEMA_VERSION}")]
    SchemaMismatch { found: u32 },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Rounds to [`TRACE_SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", TRACE_SIG_DIGITS - 1, x)
        .parse()
        .expect("formatted float reparses")
}

/// One uncertainty cell: a number, or the literal token `NA` for cells
/// the agent's topology does not support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UCell(pub Option<f64>);

impl Serialize for UCell {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("NA"),
        }
    }
}

impl<'de> Deserialize<'de> for UCell {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Token(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(UCell(Some(v))),
            Raw::Token(t) if t == "NA" => Ok(UCell(None)),
            Raw::Token(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"NA\", got {t:?}"
            ))),
        }
    }
}

/// The nine named uncertainty fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyFields {
    pub l1_first: UCell,
    pub l1_second: UCell,
    pub l1_third: UCell,
    pub l2_first: UCell,
    pub l2_second: UCell,
    pub l2_third: UCell,
    pub l3_first: UCell,
    pub l3_second: UCell,
    pub l3_third: UCell,
}

impl UncertaintyFields {
    pub fn from_matrix(m: &UncertaintyMatrix) -> Self {
        let cell = |l, p| UCell(m.cell(l, p).map(round_sig));
        Self {
            l1_first: cell(Level::Observable, Person::First),
            l1_second: cell(Level::Observable, Person::Second),
            l1_third: cell(Level::Observable, Person::Third),
            l2_first: cell(Level::HiddenLow, Person::First),
            l2_second: cell(Level::HiddenLow, Person::Second),
            l2_third: cell(Level::HiddenLow, Person::Third),
            l3_first: cell(Level::HiddenHigh, Person::First),
            l3_second: cell(Level::HiddenHigh, Person::Second),
            l3_third: cell(Level::HiddenHigh, Person::Third),
        }
    }

    pub fn get(&self, level: usize, person: usize) -> Option<f64> {
        let cell = match (level, person) {
            (1, 1) => &self.l1_first,
            (1, 2) => &self.l1_second,
            (1, 3) => &self.l1_third,
            (2, 1) => &self.l2_first,
            (2, 2) => &self.l2_second,
            (2, 3) => &self.l2_third,
            (3, 1) => &self.l3_first,
            (3, 2) => &self.l3_second,
            (3, 3) => &self.l3_third,
            _ => return None,
        };
        cell.0
    }
}

/// Per-policy value decomposition as recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyValues {
    pub efe: f64,
    pub epistemic: f64,
    pub pragmatic: f64,
}

/// One timestep of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub schema: u32,
    pub run_id: String,
    pub step: usize,
    pub agent_id: usize,
    /// Committed control; absent on initial-state records.
    pub control: Option<usize>,
    /// Observation index; absent on initial-state records.
    pub observation: Option<usize>,
    /// Per-factor belief vectors after inference.
    pub beliefs: Vec<Vec<f64>>,
    /// Variational free energy at the posterior; absent before the first
    /// observation.
    pub free_energy: Option<f64>,
    /// Per-policy expected free energy decomposition from this step's
    /// planning; empty on initial-state records.
    pub policies: Vec<PolicyValues>,
    pub u: UncertaintyFields,
    /// Social emotional value of the committed control, when regulated.
    pub valence: Option<f64>,
}

impl TraceRecord {
    /// Validates finiteness and applies significant-digit rounding.
    pub fn finalize(mut self) -> Result<Self, TraceError> {
        for beliefs in &mut self.beliefs {
            for v in beliefs.iter_mut() {
                if !v.is_finite() {
                    return Err(TraceError::NonFinite("beliefs"));
                }
                *v = round_sig(*v);
            }
        }
        if let Some(f) = &mut self.free_energy {
            if !f.is_finite() {
                return Err(TraceError::NonFinite("free_energy"));
            }
            *f = round_sig(*f);
        }
        for p in &mut self.policies {
            if ![p.efe, p.epistemic, p.pragmatic].iter().all(|v| v.is_finite()) {
                return Err(TraceError::NonFinite("policies"));
            }
            p.efe = round_sig(p.efe);
            p.epistemic = round_sig(p.epistemic);
            p.pragmatic = round_sig(p.pragmatic);
        }
        if let Some(v) = &mut self.valence {
            if !v.is_finite() {
                return Err(TraceError::NonFinite("valence"));
            }
            *v = round_sig(*v);
        }
        Ok(self)
    }

    pub fn to_json_line(&self) -> Result<String, TraceError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn policy_values(evals: &[PolicyEvaluation]) -> Vec<PolicyValues> {
        evals
            .iter()
            .map(|e| PolicyValues {
                efe: e.efe,
                epistemic: e.epistemic,
                pragmatic: e.pragmatic,
            })
            .collect()
    }
}

/// Parses a line-delimited trace, rejecting schema mismatches.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord =
            serde_json::from_str(line).map_err(|source| TraceError::Parse {
                line: i + 1,
                source,
            })?;
        if record.schema != SCHEMA_VERSION {
            return Err(TraceError::SchemaMismatch {
                found: record.schema,
            });
        }
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_nine_significant_digits() {
        assert_eq!(round_sig(std::f64::consts::PI), 3.14159265);
        assert_eq!(round_sig(0.0), 0.0);
        assert_eq!(round_sig(-1.234567891234e-7), -1.23456789e-7);
        assert_eq!(round_sig(123456789123.0), 123456789000.0);
    }

    #[test]
    fn record_round_trips() {
        let record = TraceRecord {
            schema: SCHEMA_VERSION,
            run_id: "tmaze-s7".into(),
            step: 3,
            agent_id: 0,
            control: Some(2),
            observation: Some(11),
            beliefs: vec![vec![0.123456789123, 0.876543210877]],
            free_energy: Some(1.203972804325936),
            policies: vec![PolicyValues {
                efe: 0.325082973391448,
                epistemic: 0.368064207168497,
                pragmatic: -std::f64::consts::LN_2,
            }],
            u: UncertaintyFields {
                l1_first: UCell(Some(0.69314718055994)),
                l1_second: UCell(None),
                l1_third: UCell(None),
                l2_first: UCell(Some(0.0)),
                l2_second: UCell(None),
                l2_third: UCell(None),
                l3_first: UCell(None),
                l3_second: UCell(None),
                l3_third: UCell(None),
            },
            valence: None,
        }
        .finalize()
        .unwrap();
        let line = record.to_json_line().unwrap();
        assert!(line.contains("\"NA\""));
        let parsed = parse_trace(&line).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0], record);
    }

    #[test]
    fn non_finite_fields_are_rejected() {
        let record = TraceRecord {
            schema: SCHEMA_VERSION,
            run_id: "x".into(),
            step: 0,
            agent_id: 0,
            control: None,
            observation: None,
            beliefs: vec![vec![f64::NAN]],
            free_energy: None,
            policies: vec![],
            u: UncertaintyFields {
                l1_first: UCell(None),
                l1_second: UCell(None),
                l1_third: UCell(None),
                l2_first: UCell(None),
                l2_second: UCell(None),
                l2_third: UCell(None),
                l3_first: UCell(None),
                l3_second: UCell(None),
                l3_third: UCell(None),
            },
            valence: None,
        };
        assert!(matches!(
            record.finalize(),
            Err(TraceError::NonFinite("beliefs"))
        ));
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let line = r#"{"schema":99,"run_id":"x","step":0,"agent_id":0,"control":null,"observation":null,"beliefs":[],"free_energy":null,"policies":[],"u":{"l1_first":"NA","l1_second":"NA","l1_third":"NA","l2_first":"NA","l2_second":"NA","l2_third":"NA","l3_first":"NA","l3_second":"NA","l3_third":"NA"},"valence":null}"#;
        assert!(matches!(
            parse_trace(line),
            Err(TraceError::SchemaMismatch { found: 99 })
        ));
    }
}
