//! Deterministic report serialization: one CSV across the run plus a text
//! report per scenario. Floats are printed with 17 significant digits so a
//! value read back from the CSV is bit-identical to the one computed.

use std::fmt::Write as _;

use entroprod::scenario::ScenarioReport;

/// Lossless float formatting (17 significant digits); −0.0 prints as 0.0.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        let v = if v == 0.0 { 0.0 } else { v };
        format!("{v:.16e}")
    }
}

/// CSV over all reports: `scenario,quantity,value,oracle_delta,seed`.
///
/// Quantities and oracle deltas are keyed rows; a row missing one of the two
/// leaves that column empty. A final `converged` row per scenario records the
/// overall verdict.
pub fn render_csv(reports: &[(String, ScenarioReport)]) -> String {
    let mut out = String::from("scenario,quantity,value,oracle_delta,seed\n");
    for (name, report) in reports {
        let seed = report.seed.map(|s| s.to_string()).unwrap_or_default();
        let mut keys: Vec<&String> = report.quantities.keys().collect();
        for k in report.oracle_deltas.keys() {
            if !report.quantities.contains_key(k) {
                keys.push(k);
            }
        }
        keys.sort();
        for key in keys {
            let value = report
                .quantities
                .get(key)
                .map(|v| fmt_f64(*v))
                .unwrap_or_default();
            let delta = report
                .oracle_deltas
                .get(key)
                .map(|v| fmt_f64(*v))
                .unwrap_or_default();
            let _ = writeln!(out, "{name},{key},{value},{delta},{seed}");
        }
        let _ = writeln!(
            out,
            "{name},converged,{},,{seed}",
            if report.converged { 1 } else { 0 }
        );
    }
    out
}

/// Human-readable report for one scenario.
pub fn render_report(name: &str, report: &ScenarioReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario   : {name} ({})", report.scenario_id);
    let _ = writeln!(out, "inputs     : {}", report.inputs_digest);
    if let Some(seed) = report.seed {
        let _ = writeln!(out, "seed       : {seed}");
    }
    let _ = writeln!(out, "converged  : {}", report.converged);
    let _ = writeln!(out, "quantities :");
    for (k, v) in &report.quantities {
        let _ = writeln!(out, "  {k:<32} = {}", fmt_f64(*v));
    }
    if !report.oracle_deltas.is_empty() {
        let _ = writeln!(out, "oracle deltas :");
        for (k, v) in &report.oracle_deltas {
            let _ = writeln!(out, "  {k:<32} = {}", fmt_f64(*v));
        }
    }
    out
}
