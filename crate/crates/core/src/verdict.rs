//! Three-valued outcomes shared by the checkers and membership search.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

/// Position in an `ℕ`- or `ℕ²`-indexed trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TraceIndex {
    Single(u64),
    Double(u64, u64),
}

impl fmt::Display for TraceIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceIndex::Single(n) => write!(f, "{n}"),
            TraceIndex::Double(m, n) => write!(f, "{m},{n}"),
        }
    }
}

/// One checkpoint: the checked quantity and the threshold it is compared to,
/// both in the same units (squares for `l2` seminorms).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub index: TraceIndex,
    pub value: Rational,
    pub threshold: Rational,
    pub ok: bool,
    /// Coordinate or functional attaining the value, when it is a maximum.
    pub arg: Option<String>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "index": self.index.to_string(),
            "value": rational::fmt(&self.value),
            "threshold": rational::fmt(&self.threshold),
            "ok": self.ok,
        });
        if let Some(a) = &self.arg {
            v["arg"] = Value::String(a.clone());
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    /// First violating checkpoint; present on every failure.
    pub witness: Option<Checkpoint>,
    pub trace_tail: Vec<Checkpoint>,
    /// Whether values are exact squares of the underlying seminorm.
    pub squared: bool,
}

impl Verdict {
    /// Pass iff every checkpoint is ok.
    pub fn from_checkpoints(trace_tail: Vec<Checkpoint>, squared: bool) -> Self {
        let witness = trace_tail.iter().find(|c| !c.ok).cloned();
        let status = if witness.is_some() { Status::Fail } else { Status::Pass };
        Verdict {
            status,
            witness,
            trace_tail,
            squared,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json(&self) -> Value {
        json!({
            "status": self.status,
            "witness": self.witness.as_ref().map(Checkpoint::to_json),
            "squared": self.squared,
            "trace_tail": self.trace_tail.iter().map(Checkpoint::to_json).collect::<Vec<_>>(),
        })
    }
}
