//! Machine-readable run records and the sweep fit.

use disperse_core::{Metrics, SchedulerPolicy};
use serde_json::{json, Value};

/// Outcome of one run as it appears in the `status` field.
pub fn status(code: u8) -> &'static str {
    match code {
        0 => "ok",
        3 => "epoch_cap",
        4 => "invariant",
        _ => "error",
    }
}

/// One JSON line per run. Field names are fixed; serde_json keeps them sorted.
pub fn record(graph: &str, algo: &str, sched: SchedulerPolicy, seed: u64, code: u8, m: &Metrics) -> Value {
    let hist: serde_json::Map<String, Value> =
        m.probe_histogram.iter().map(|(d, c)| (d.to_string(), json!(c))).collect();
    json!({
        "graph": graph,
        "algo": algo,
        "sched": sched.to_string(),
        "seed": seed,
        "status": status(code),
        "k": m.k,
        "n": m.n,
        "max_degree": m.max_degree,
        "epochs": m.epochs,
        "events": m.events,
        "null_events": m.null_events,
        "moves": m.moves,
        "total_moves": m.total_moves(),
        "max_memory_bits": m.max_memory_bits,
        "bits_per_log": bits_per_log(m),
        "probes": m.probes,
        "tuples_checked": m.tuples_checked,
        "tuples_stale": m.tuples_stale,
        "max_probe_epochs": m.max_probe_epochs(),
        "probe_histogram": hist,
        "vacated_timeline": m.vacated_timeline,
        "max_label": m.max_label.map(|l| l.to_string()),
        "dispersed": m.dispersed,
    })
}

/// max memory bits / log2(k + delta).
pub fn bits_per_log(m: &Metrics) -> f64 {
    let x = ((m.k + m.max_degree) as f64).log2();
    if x > 0.0 {
        m.max_memory_bits as f64 / x
    } else {
        0.0
    }
}

/// Least-squares line through the points: (slope, intercept, r2).
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if points.len() < 2 || sxx == 0.0 {
        return None;
    }
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some((slope, intercept, r2))
}
