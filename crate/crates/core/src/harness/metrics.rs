//! Per-run records and the per-method summary table.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Method;

/// Outcome of one method on one test variation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    /// False when the hinted problem had no feasible solution.
    pub feasible: bool,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub constraints_per_period: f64,
    /// Hint construction plus solve, seconds.
    pub wall_time: f64,
    pub hint_time: f64,
    pub warm_starts_offered: usize,
    pub warm_start_accepted: bool,
    pub warm_start_gap: Option<f64>,
    /// `(objective - zero objective) / zero objective` on the same variation.
    pub gap_vs_zero: Option<f64>,
    pub time_limited: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub runs: usize,
    pub mean_iterations: f64,
    pub mean_constraints_per_period: f64,
    pub mean_wall_time: f64,
    pub speedup: f64,
    pub warm_start_success_rate: Option<f64>,
    pub warm_start_mean_gap: Option<f64>,
    pub feasible_rate: f64,
    pub gap_p50: Option<f64>,
    pub gap_p80: Option<f64>,
    pub gap_p95: Option<f64>,
    pub gap_p100: Option<f64>,
    /// Runs stopped by the time limit; their gaps use the best objective found.
    pub time_limited: usize,
}

/// Nearest-rank percentile of `values` (any order), `q` in (0, 100].
pub fn nearest_rank(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// One summary row per method, in `roster` order. Iteration, constraint and
/// gap statistics cover feasible runs only.
pub fn summarize(roster: &[Method], runs: &[RunRecord]) -> Vec<MetricsRow> {
    let zero_time = mean(
        runs.iter()
            .filter(|r| r.method == Method::Zero)
            .map(|r| r.wall_time),
    );
    roster
        .iter()
        .map(|m| {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.method == *m).collect();
            let ok: Vec<&RunRecord> = mine.iter().copied().filter(|r| r.feasible).collect();
            let time = mean(mine.iter().map(|r| r.wall_time));
            let gaps: Vec<f64> = ok.iter().filter_map(|r| r.gap_vs_zero).collect();
            let ws_gaps: Vec<f64> = ok.iter().filter_map(|r| r.warm_start_gap).collect();
            let (ws_rate, ws_gap) = if m.is_warm_start() {
                (
                    Some(mean(mine.iter().map(|r| f64::from(u8::from(r.warm_start_accepted))))),
                    (!ws_gaps.is_empty()).then(|| mean(ws_gaps.iter().copied())),
                )
            } else {
                (None, None)
            };
            MetricsRow {
                method: m.to_string(),
                runs: mine.len(),
                mean_iterations: mean(ok.iter().map(|r| r.iterations as f64)),
                mean_constraints_per_period: mean(ok.iter().map(|r| r.constraints_per_period)),
                mean_wall_time: time,
                speedup: if time > 0.0 { zero_time / time } else { 0.0 },
                warm_start_success_rate: ws_rate,
                warm_start_mean_gap: ws_gap,
                feasible_rate: if mine.is_empty() {
                    0.0
                } else {
                    ok.len() as f64 / mine.len() as f64
                },
                gap_p50: nearest_rank(&gaps, 50.0),
                gap_p80: nearest_rank(&gaps, 80.0),
                gap_p95: nearest_rank(&gaps, 95.0),
                gap_p100: nearest_rank(&gaps, 100.0),
                time_limited: mine.iter().filter(|r| r.time_limited).count(),
            }
        })
        .collect()
}

/// Writes one CSV row per method under a header row.
pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
