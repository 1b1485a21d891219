//! File formats: the moment-series CSV schema shared by ensembles and the
//! enumeration oracle, line-delimited structured summaries, and the
//! aligned plain-text scenario report.
//!
//! CSV columns are `step`, then `mean_P{i},se_P{i}` per branch, then
//! `cross_{i}{j},se_{i}{j}` per pair i<j. The oracle writes the identical
//! schema with zero standard errors so the two files diff directly.

use std::fmt::Write as FmtWrite;

use serde::Serialize;

use crate::ensemble::{pair_list, EnsembleStats};
use crate::oracle::EventTreeMoments;
use crate::scenarios::ScenarioResult;
use crate::validate::CheckOutcome;

fn csv_header(levels: usize) -> String {
    let mut header = String::from("step");
    for i in 0..levels {
        write!(header, ",mean_P{i},se_P{i}").unwrap();
    }
    for (i, j) in pair_list(levels) {
        write!(header, ",cross_{i}{j},se_{i}{j}").unwrap();
    }
    header.push('\n');
    header
}

/// Render ensemble statistics in the moment-series CSV schema.
pub fn ensemble_csv(stats: &EnsembleStats) -> String {
    let mut out = csv_header(stats.levels);
    for (r, step) in stats.recorded_steps.iter().enumerate() {
        write!(out, "{step}").unwrap();
        for i in 0..stats.levels {
            write!(out, ",{},{}", stats.mean_diag[r][i], stats.se_diag[r][i]).unwrap();
        }
        for p in 0..stats.mean_cross[r].len() {
            write!(out, ",{},{}", stats.mean_cross[r][p], stats.se_cross[r][p]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Render exact moments in the same schema (standard errors are zero).
pub fn oracle_csv(moments: &EventTreeMoments) -> String {
    let mut out = csv_header(moments.levels);
    for step in 0..=(moments.steps as usize) {
        write!(out, "{step}").unwrap();
        for i in 0..moments.levels {
            write!(out, ",{},0", moments.mean_diag[step][i]).unwrap();
        }
        for p in 0..moments.mean_cross[step].len() {
            write!(out, ",{},0", moments.mean_cross[step][p]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// One line of a structured (JSON Lines) summary.
#[derive(Debug, Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum SummaryRecord<'a> {
    Run {
        mode: String,
        levels: usize,
        steps: u64,
        trajectories: u64,
        seed: u64,
        record_stride: u64,
        absorption_threshold: f64,
    },
    Absorption {
        histogram: &'a [u64],
        fractions: Vec<f64>,
        unabsorbed: u64,
    },
    HalfDecay {
        pair: (usize, usize),
        measured_steps: Option<f64>,
        fixed_k_prediction: Option<f64>,
        ratio: Option<f64>,
    },
    Check(&'a CheckOutcome),
    Scenario(&'a ScenarioResult),
    Oracle {
        levels: usize,
        steps: u64,
        node_count: u64,
    },
}

/// Serialize records as line-delimited JSON.
pub fn summary_lines(records: &[SummaryRecord<'_>]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("summary records serialize"));
        out.push('\n');
    }
    out
}

/// Line-delimited structured form of the moment series: one record per
/// recorded step.
pub fn ensemble_jsonl(stats: &EnsembleStats) -> String {
    let mut out = String::new();
    for (r, step) in stats.recorded_steps.iter().enumerate() {
        let record = serde_json::json!({
            "record": "moments",
            "step": step,
            "mean_diag": stats.mean_diag[r],
            "se_diag": stats.se_diag[r],
            "mean_cross": stats.mean_cross[r],
            "se_cross": stats.se_cross[r],
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

/// Line-delimited structured form of exact moments.
pub fn oracle_jsonl(moments: &EventTreeMoments) -> String {
    let mut out = String::new();
    for step in 0..=(moments.steps as usize) {
        let record = serde_json::json!({
            "record": "moments",
            "step": step,
            "mean_diag": moments.mean_diag[step],
            "mean_cross": moments.mean_cross[step],
        });
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

/// Line-delimited structured form of the scenario table.
pub fn scenarios_jsonl(rows: &[ScenarioResult]) -> String {
    let records: Vec<SummaryRecord<'_>> = rows.iter().map(SummaryRecord::Scenario).collect();
    summary_lines(&records)
}

/// CSV form of the scenario table.
pub fn scenarios_csv(rows: &[ScenarioResult]) -> String {
    let mut out =
        String::from("name,computed,unit,reference,ratio,flagged,derived_value,within_tolerance\n");
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.name,
            row.computed.value,
            row.computed.unit,
            row.reference.value,
            row.ratio,
            row.flagged,
            row.derived_value.map(|v| v.to_string()).unwrap_or_default(),
            row.within_tolerance
        )
        .unwrap();
    }
    out
}

/// Aligned plain-text scenario report.
pub fn scenarios_text(rows: &[ScenarioResult]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<26} {:>13} {:>13} {:>10}  {:<5} status",
        "scenario", "computed", "reference", "ratio", "unit"
    )
    .unwrap();
    writeln!(out, "{}", "-".repeat(78)).unwrap();
    for row in rows {
        let status = match (row.within_tolerance, row.flagged) {
            (true, false) => "ok".to_string(),
            (true, true) => "ok (flagged)".to_string(),
            (false, _) => "FAIL".to_string(),
        };
        writeln!(
            out,
            "{:<26} {:>13.4e} {:>13.4e} {:>10.3e} {:<5} {}",
            row.name, row.computed.value, row.reference.value, row.ratio, row.computed.unit, status
        )
        .unwrap();
    }
    out
}

/// Aligned plain-text verification report.
pub fn checks_text(outcomes: &[CheckOutcome]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<26} {:>12} {:>12}  {:<6} detail",
        "check", "statistic", "threshold", "status"
    )
    .unwrap();
    writeln!(out, "{}", "-".repeat(90)).unwrap();
    for o in outcomes {
        writeln!(
            out,
            "{:<26} {:>12.4} {:>12.4}  {:<6} {}",
            o.name,
            o.statistic,
            o.threshold,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        )
        .unwrap();
    }
    out
}
