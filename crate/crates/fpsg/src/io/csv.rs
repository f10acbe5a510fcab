//! CSV and report rendering.
//!
//! CSV is the machine-readable output; the human report is derived from the
//! same data. Formatting goes through `Display` only, so identical inputs
//! produce byte-identical files.

use std::fmt::Write as _;

use crate::eval::ValueTable;
use crate::rational::Rational;
use crate::solver::Certificate;

fn goal_headers(n: usize) -> String {
    (0..n).map(|k| format!("goal{k}")).collect::<Vec<_>>().join(",")
}

/// Value-table export: one row per (stage, state, goal) cell with the value
/// and its stage-appropriate truncation bound (empty when uncertified).
pub fn value_table_csv(table: &ValueTable, num_players: usize, beta: &Rational) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "stage,state,{},player,value,bound", goal_headers(num_players));
    for (n, stage) in table.stages().iter().enumerate() {
        for (state, goal, v) in stage.iter() {
            let bound = table
                .bound_at(n, beta)
                .map(|b| b.to_string())
                .unwrap_or_default();
            let goal_cols = goal
                .components()
                .iter()
                .map(Rational::to_string)
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(out, "{n},{state},{goal_cols},{},{v},{bound}", table.player);
        }
    }
    out
}

/// Certificate export: `#`-prefixed header lines with the parameters and
/// verdict, then one row per (player, state, goal) gap.
pub fn certificate_csv(cert: &Certificate) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# epsilon={}", cert.epsilon);
    let _ = writeln!(out, "# beta={}", cert.beta);
    let _ = writeln!(out, "# horizon={}", cert.horizon);
    let _ = writeln!(out, "# grid_k={}", cert.grid_k);
    let _ = writeln!(out, "# delta={}", cert.delta);
    let _ = writeln!(out, "# truncation_bound={}", cert.truncation_bound);
    let _ = writeln!(out, "# max_gap={}", cert.max_gap);
    let _ = writeln!(out, "# verdict={}", if cert.pass { "pass" } else { "fail" });
    let _ = writeln!(
        out,
        "# strategy={} candidate_index={} candidates_tried={} seed={}",
        cert.provenance.strategy,
        cert.provenance.candidate_index,
        cert.provenance.candidates_tried,
        cert.provenance
            .seed
            .map(|s| s.to_string())
            .unwrap_or_else(|| "none".into()),
    );
    let _ = writeln!(out, "# enumeration_bound_digits={}", cert.enumeration_bound_digits);
    let _ = writeln!(out, "# note: {}", cert.guarantee);
    let players = cert.rows.iter().map(|r| r.goal.len()).max().unwrap_or(0);
    let _ = writeln!(
        out,
        "player,state,{},policy_value,best_response_value,gap",
        goal_headers(players)
    );
    for row in &cert.rows {
        let goal_cols = row
            .goal
            .components()
            .iter()
            .map(Rational::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(
            out,
            "{},{},{goal_cols},{},{},{}",
            row.player, row.state, row.policy_value, row.best_response_value, row.gap
        );
    }
    out
}

/// Human-readable certificate summary.
pub fn certificate_report(cert: &Certificate) -> String {
    let mut out = String::new();
    let verdict = if cert.pass { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "certificate: {verdict}");
    let _ = writeln!(
        out,
        "  epsilon {}  beta {}  horizon {}  grid 1/{}",
        cert.epsilon, cert.beta, cert.horizon, cert.grid_k
    );
    let _ = writeln!(
        out,
        "  max gap {} against threshold {}",
        cert.max_gap,
        cert.threshold()
    );
    let _ = writeln!(out, "  truncation bound {}", cert.truncation_bound);
    let _ = writeln!(
        out,
        "  strategy {} (candidate {}, {} tried{})",
        cert.provenance.strategy,
        cert.provenance.candidate_index,
        cert.provenance.candidates_tried,
        cert.provenance
            .seed
            .map(|s| format!(", seed {s}"))
            .unwrap_or_default()
    );
    let _ = writeln!(
        out,
        "  exhaustive enumeration bound: a {}-digit candidate count",
        cert.enumeration_bound_digits
    );
    let _ = writeln!(out, "  {}", cert.guarantee);
    let worst = cert
        .rows
        .iter()
        .max_by(|a, b| a.gap.total_cmp(&b.gap));
    if let Some(w) = worst {
        let _ = writeln!(
            out,
            "  worst cell: player {} at ({}, {}) with gap {}",
            w.player, w.state, w.goal, w.gap
        );
    }
    out
}

/// The (epsilon, period length) table as CSV. Epsilon labels are rendered
/// as given.
pub fn table1_csv(rows: &[(String, usize)]) -> String {
    let mut out = String::from("epsilon,period_length\n");
    for (eps, t) in rows {
        let _ = writeln!(out, "{eps},{t}");
    }
    out
}
