//! Executes a loaded scenario and writes its reports.

use std::path::{Path, PathBuf};

use riesz_core::convergence::{self as cv};
use riesz_core::fremlin::{self, SearchOptions};
use riesz_core::oracle::{self, AuditResult, AuditStatus};
use riesz_core::rational;
use riesz_core::topology;
use riesz_core::{Checkpoint, Status, Verdict};
use serde_json::{json, Value};

use crate::scenario::{Audit, Check, Op, Scenario};
use crate::{write_file, CliError};

pub const LEDGER_PATH: &str = "reports/audit-ledger.json";

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub check_id: String,
    pub index: String,
    pub quantity: String,
    pub threshold: String,
    pub verdict: String,
}

impl Row {
    fn summary(check_id: &str, quantity: String, threshold: String, verdict: impl ToString) -> Self {
        Row {
            check_id: check_id.to_string(),
            index: "-".into(),
            quantity,
            threshold,
            verdict: verdict.to_string(),
        }
    }
}

fn rows_of(check_id: &str, cps: &[Checkpoint]) -> Vec<Row> {
    cps.iter()
        .map(|c| Row {
            check_id: check_id.to_string(),
            index: c.index.to_string(),
            quantity: rational::fmt(&c.value),
            threshold: rational::fmt(&c.threshold),
            verdict: if c.ok { "pass" } else { "fail" }.into(),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub id: String,
    pub status: String,
    pub expected: String,
    pub matches: bool,
    pub json: Value,
    pub rows: Vec<Row>,
}

fn verdict_outcome(check: &Check, v: &Verdict) -> (Status, Value, Vec<Row>) {
    (v.status, v.to_json(), rows_of(&check.id, &v.trace_tail))
}

pub fn run_check(check: &Check) -> Result<CheckOutcome, CliError> {
    let id = check.id.as_str();
    let (status, detail, rows) = match &check.op {
        Op::Single { kind, trace, cfg } => verdict_outcome(check, &cv::check(*kind, trace, cfg)?),
        Op::Pointwise { trace, cfg } => verdict_outcome(check, &cv::is_pointwise_null(trace, cfg)?),
        Op::Metric { trace, cfg } => verdict_outcome(check, &cv::is_metric_null(trace, cfg)?),
        Op::Double {
            kind,
            xs,
            ys,
            target,
            cfg,
            mode,
        } => {
            let dt = cv::tensor_double_trace(target, xs, ys)?;
            verdict_outcome(check, &cv::check_double(*kind, &dt, cfg, *mode)?)
        }
        Op::Preservation {
            kind,
            xs,
            ys,
            target,
            cfg_x,
            cfg_y,
            cfg_t,
            mode,
        } => {
            let r = cv::preservation_experiment(*kind, target, xs, ys, cfg_x, cfg_y, cfg_t, *mode)?;
            let mut rows = rows_of(&format!("{id}.factor_x"), &r.factor_x.trace_tail);
            rows.extend(rows_of(&format!("{id}.factor_y"), &r.factor_y.trace_tail));
            rows.extend(rows_of(&format!("{id}.tensor"), &r.tensor.trace_tail));
            (r.status(), r.to_json(), rows)
        }
        Op::TauNull { xs, ys, nbhd, horizon } => {
            let r = topology::tau_null(xs, ys, nbhd, *horizon)?;
            let mut rows = rows_of(&format!("{id}.x"), &r.x_trace);
            rows.extend(rows_of(&format!("{id}.y"), &r.y_trace));
            (r.status, r.to_json(), rows)
        }
        Op::Contains { nbhd, x } => {
            let rho = nbhd.rho(x)?;
            let inside = nbhd.contains(x)?;
            let status = if inside { Status::Pass } else { Status::Fail };
            let detail = json!({
                "status": status,
                "rho": rational::fmt(&rho.value),
                "squared": rho.squared,
                "nbhd": nbhd.to_json(),
            });
            let row = Row::summary(
                id,
                rational::fmt(&rho.value),
                rational::fmt(&rho.scaled_threshold(&nbhd.eps)),
                status,
            );
            (status, detail, vec![row])
        }
        Op::Membership { nbhd, z } => {
            let v = fremlin::sol_membership(z, &nbhd.u, &nbhd.v, &SearchOptions::default())?;
            // Only re-validated answers are reported as decided.
            let status = match (&v.status, &v.witness, &v.certificate) {
                (Status::Pass, Some(w), _) if nbhd.witness_validates(z, w)? => Status::Pass,
                (Status::Fail, _, Some(c)) if c.validates(z, &nbhd.u, &nbhd.v)? => Status::Fail,
                _ => Status::Inconclusive,
            };
            let row = Row::summary(
                id,
                "-".into(),
                rational::fmt(&nbhd.u.eps.clone().min(nbhd.v.eps.clone())),
                status,
            );
            (status, v.to_json(), vec![row])
        }
        Op::Separation { z } => {
            let s = topology::hausdorff_separation(z)?;
            let status = if s.certificate.validates(z, &s.u, &s.v)? {
                Status::Pass
            } else {
                Status::Fail
            };
            let row = Row::summary(id, "-".into(), rational::fmt(&s.u.eps), status);
            (status, s.to_json(), vec![row])
        }
        Op::Refinement {
            w_un,
            u,
            v,
            samples,
            seed,
        } => {
            let r = topology::un_refinement_check(w_un, u, v, *samples, *seed)?;
            let rows = r
                .samples
                .iter()
                .map(|s| Row {
                    check_id: id.to_string(),
                    index: s.sample.to_string(),
                    quantity: rational::fmt(&s.value.value),
                    threshold: rational::fmt(&s.threshold),
                    verdict: if s.in_w { "pass" } else { "fail" }.into(),
                })
                .collect();
            let detail = json!({"status": r.status, "violations": r.violations, "samples": r.to_json()});
            (r.status, detail, rows)
        }
    };
    Ok(CheckOutcome {
        id: check.id.clone(),
        status: status.to_string(),
        expected: check.expect.to_string(),
        matches: status == check.expect,
        json: json!({
            "id": check.id,
            "op": check.op.name(),
            "property": check.op.property(),
            "status": status.to_string(),
            "expected": check.expect.to_string(),
            "matches": status == check.expect,
            "detail": detail,
        }),
        rows,
    })
}

/// Audit result plus the outcome of re-checking every witness.
#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub id: String,
    pub result: AuditResult,
    pub expected: AuditStatus,
    pub witnesses_revalidated: bool,
}

impl AuditOutcome {
    /// A sampled audit that finds no witness does not contradict an
    /// expected falsification.
    pub fn matches(&self) -> bool {
        let sampled_miss = matches!(self.result.mode, oracle::AuditMode::Randomized { .. })
            && self.expected == AuditStatus::Falsified
            && self.result.status == AuditStatus::VerifiedOnSpace;
        self.witnesses_revalidated && (self.result.status == self.expected || sampled_miss)
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.result.to_json();
        v["id"] = Value::String(self.id.clone());
        v["expected"] = Value::String(self.expected.to_string());
        v["witnesses_revalidated"] = Value::Bool(self.witnesses_revalidated);
        v["matches"] = Value::Bool(self.matches());
        v
    }
}

pub fn run_audit(id: &str, claim: &oracle::AuditClaim, expected: AuditStatus) -> Result<AuditOutcome, CliError> {
    let result = oracle::audit(claim)?;
    let mut ok = true;
    for w in &result.witnesses {
        ok &= !oracle::evaluate(w, claim.id)?.0;
    }
    Ok(AuditOutcome {
        id: id.to_string(),
        result,
        expected,
        witnesses_revalidated: ok,
    })
}

fn audit_row(a: &AuditOutcome) -> Row {
    Row::summary(&a.id, a.result.cases.to_string(), "-".into(), a.result.status)
}

pub fn ledger_json(audits: &[AuditOutcome]) -> Value {
    json!({"entries": audits.iter().map(AuditOutcome::to_json).collect::<Vec<_>>()})
}

pub fn write_ledger(out: &Path, audits: &[AuditOutcome]) -> Result<PathBuf, CliError> {
    let path = out.join(LEDGER_PATH);
    write_file(&path, &pretty(&ledger_json(audits)))?;
    Ok(path)
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn csv_text(rows: &[Row]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["check_id", "index", "quantity", "threshold", "verdict"])
        .map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record([&r.check_id, &r.index, &r.quantity, &r.threshold, &r.verdict])
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"))
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub checks: Vec<CheckOutcome>,
    pub audits: Vec<AuditOutcome>,
    pub summary: Value,
    pub csv: String,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

impl RunReport {
    /// Every check and audit came out as the scenario declares.
    pub fn all_match(&self) -> bool {
        self.checks.iter().all(|c| c.matches) && self.audits.iter().all(AuditOutcome::matches)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_match() {
            0
        } else {
            1
        }
    }
}

fn run_audit_entry(a: &Audit) -> Result<AuditOutcome, CliError> {
    run_audit(&a.id, &a.claim, a.expect)
}

/// Runs every check and audit in file order and writes the CSV table, the
/// JSON summary and, when the scenario has audits, the audit ledger.
pub fn run_scenario(s: &Scenario, out: &Path) -> Result<RunReport, CliError> {
    let checks = s.checks.iter().map(run_check).collect::<Result<Vec<_>, _>>()?;
    let audits = s.audits.iter().map(run_audit_entry).collect::<Result<Vec<_>, _>>()?;

    let mut rows: Vec<Row> = checks.iter().flat_map(|c| c.rows.iter().cloned()).collect();
    rows.extend(audits.iter().map(audit_row));
    let csv = csv_text(&rows)?;

    let ledger_ref = if audits.is_empty() {
        Value::Null
    } else {
        write_ledger(out, &audits)?;
        Value::String(LEDGER_PATH.into())
    };
    let mut results: Vec<Value> = checks.iter().map(|c| c.json.clone()).collect();
    results.extend(audits.iter().map(|a| {
        json!({
            "id": a.id,
            "op": "audit",
            "property": a.result.claim_id.statement(),
            "status": a.result.status.to_string(),
            "expected": a.expected.to_string(),
            "matches": a.matches(),
            "detail": a.result.to_json(),
        })
    }));
    let summary = json!({
        "scenario": s.name,
        "results": results,
        "ledger_ref": ledger_ref,
    });

    let csv_path = out.join(&s.csv);
    let json_path = out.join(&s.json);
    write_file(&csv_path, &csv)?;
    write_file(&json_path, &pretty(&summary))?;
    Ok(RunReport {
        checks,
        audits,
        summary,
        csv,
        csv_path,
        json_path,
    })
}
