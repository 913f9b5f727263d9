//! `check-lemmas`: every registered claim, exhaustively and at random.

use std::collections::BTreeMap;
use std::path::Path;

use riesz_core::oracle::{AuditClaim, AuditStatus, ClaimId};
use serde_json::Value;

use crate::runner::{self, AuditOutcome};
use crate::CliError;

/// Expected outcome per claim; starts from the built-in registry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectRegistry(pub BTreeMap<ClaimId, AuditStatus>);

impl Default for ExpectRegistry {
    fn default() -> Self {
        ExpectRegistry(ClaimId::ALL.iter().map(|&id| (id, id.expected())).collect())
    }
}

impl ExpectRegistry {
    /// Reads `{"claim_id": "verified-on-space" | "falsified", ...}`; claims
    /// not listed keep their built-in expectation.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let m = v
            .as_object()
            .ok_or_else(|| CliError::Schema("expectation registry must be an object".into()))?;
        let mut reg = Self::default();
        for (k, s) in m {
            let id: ClaimId = k
                .parse()
                .map_err(|_| CliError::Schema(format!("unknown claim `{k}`")))?;
            let st: AuditStatus = s
                .as_str()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CliError::Schema(format!("bad expected status for `{k}`")))?;
            reg.0.insert(id, st);
        }
        Ok(reg)
    }
}

#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub audits: Vec<AuditOutcome>,
}

impl LemmaReport {
    pub fn exit_code(&self) -> i32 {
        if self.audits.iter().all(AuditOutcome::matches) {
            0
        } else {
            1
        }
    }

    /// Combined status per claim: falsified if any audit of it found a
    /// witness.
    pub fn status_of(&self, id: ClaimId) -> Option<AuditStatus> {
        let mut it = self.audits.iter().filter(|a| a.result.claim_id == id).peekable();
        it.peek()?;
        Some(if it.any(|a| a.result.status == AuditStatus::Falsified) {
            AuditStatus::Falsified
        } else {
            AuditStatus::VerifiedOnSpace
        })
    }
}

pub fn check_lemmas(trials: u64, seed: u64, out: &Path, expect: &ExpectRegistry) -> Result<LemmaReport, CliError> {
    if trials == 0 {
        return Err(CliError::Input("--trials must be at least 1".into()));
    }
    let mut audits = Vec::new();
    for id in ClaimId::ALL {
        let expected = expect.0[&id];
        audits.push(runner::run_audit(
            &format!("{id}:exhaustive"),
            &AuditClaim::exhaustive(id),
            expected,
        )?);
        audits.push(runner::run_audit(
            &format!("{id}:randomized"),
            &AuditClaim::randomized(id, trials, seed),
            expected,
        )?);
    }
    runner::write_ledger(out, &audits)?;
    Ok(LemmaReport { audits })
}
