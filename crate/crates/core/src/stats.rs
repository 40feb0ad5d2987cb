//! Phase-wise RMSE, peak-to-peak difference and median/IQR summaries.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{GaitPhase, PhaseTable};
use crate::io::{self, fmt_csv};

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (ss / a.len() as f64).sqrt()
}

pub fn peak_to_peak(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// `100·(ptp(a) − ptp(b))/ptp(a)`; `None` when `a` is flat.
pub fn ptp_difference(a: &[f64], b: &[f64]) -> Option<f64> {
    let pa = peak_to_peak(a);
    if !(pa > 0.0) {
        return None;
    }
    Some(100.0 * (pa - peak_to_peak(b)) / pa)
}

/// RMSE and peak-to-peak difference over one sample window. `None` marks an
/// undefined value (empty window, or flat reference for the ptp difference).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub rmse: Option<f64>,
    pub ptp_diff: Option<f64>,
}

impl WindowStats {
    pub fn of(a: &[f64], b: &[f64]) -> Self {
        if a.is_empty() {
            return WindowStats { rmse: None, ptp_diff: None };
        }
        WindowStats {
            rmse: Some(rmse(a, b)),
            ptp_diff: ptp_difference(a, b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub whole: WindowStats,
    /// In [`GaitPhase::ALL`] order.
    pub phases: [WindowStats; 7],
}

pub fn rmse_per_phase(a: &[f64], b: &[f64], pct: &[f64], phases: &PhaseTable) -> Result<PhaseStats> {
    if a.len() != b.len() || a.len() != pct.len() {
        return Err(Error::Domain(format!(
            "series lengths differ: {}, {} and grid {}",
            a.len(),
            b.len(),
            pct.len()
        )));
    }
    let pick = |s: &[f64], idx: &[usize]| idx.iter().map(|&i| s[i]).collect::<Vec<_>>();
    let mut per = [WindowStats { rmse: None, ptp_diff: None }; 7];
    for (slot, phase) in per.iter_mut().zip(GaitPhase::ALL) {
        let idx = phases.sample_indices(pct, phase);
        *slot = WindowStats::of(&pick(a, &idx), &pick(b, &idx));
    }
    Ok(PhaseStats {
        whole: WindowStats::of(a, b),
        phases: per,
    })
}

/// Quantile with linear interpolation between order statistics
/// (position `q·(n − 1)` in the sorted sample).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(median, Q3 − Q1)`.
pub fn median_iqr(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Domain("median of an empty set".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("median of a set containing NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((quantile(&sorted, 0.5), quantile(&sorted, 0.75) - quantile(&sorted, 0.25)))
}

/// Median/IQR of one metric across a design set; `None` if no design had
/// it defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub iqr: f64,
    pub count: usize,
}

fn spread(values: impl Iterator<Item = Option<f64>>) -> Result<Option<Spread>> {
    let defined: Vec<f64> = values.flatten().collect();
    if defined.is_empty() {
        return Ok(None);
    }
    let (median, iqr) = median_iqr(&defined)?;
    Ok(Some(Spread {
        median,
        iqr,
        count: defined.len(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    /// Phase name, or `whole_cycle`.
    pub window: String,
    pub rmse: Option<Spread>,
    pub ptp_diff: Option<Spread>,
}

impl WindowSummary {
    /// Summary of a single comparison: the value itself with zero spread.
    pub fn single(window: &str, w: &WindowStats) -> Self {
        let one = |v: Option<f64>| v.map(|median| Spread { median, iqr: 0.0, count: 1 });
        WindowSummary {
            window: window.into(),
            rmse: one(w.rmse),
            ptp_diff: one(w.ptp_diff),
        }
    }
}

/// Median/IQR of each window's metrics over a set of comparisons.
pub fn summarize(stats: &[PhaseStats]) -> Result<Vec<WindowSummary>> {
    let mut out = Vec::with_capacity(8);
    let window = |name: &str, get: &dyn Fn(&PhaseStats) -> WindowStats| -> Result<WindowSummary> {
        Ok(WindowSummary {
            window: name.to_string(),
            rmse: spread(stats.iter().map(|s| get(s).rmse))?,
            ptp_diff: spread(stats.iter().map(|s| get(s).ptp_diff))?,
        })
    };
    out.push(window("whole_cycle", &|s| s.whole)?);
    for (k, phase) in GaitPhase::ALL.iter().enumerate() {
        out.push(window(phase.name(), &|s| s.phases[k])?);
    }
    Ok(out)
}

/// One row of a stats CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub condition: String,
    pub series: String,
    pub window: String,
    pub rmse_median: Option<f64>,
    pub rmse_iqr: Option<f64>,
    pub ptp_diff_median_pct: Option<f64>,
    pub ptp_diff_iqr_pct: Option<f64>,
    pub count: usize,
}

pub const STATS_COLUMNS: [&str; 8] = [
    "condition",
    "series",
    "window",
    "rmse_median",
    "rmse_iqr",
    "ptp_diff_median_pct",
    "ptp_diff_iqr_pct",
    "count",
];

impl StatsRow {
    pub fn new(condition: &str, series: &str, s: &WindowSummary) -> Self {
        StatsRow {
            condition: condition.into(),
            series: series.into(),
            window: s.window.clone(),
            rmse_median: s.rmse.map(|x| x.median),
            rmse_iqr: s.rmse.map(|x| x.iqr),
            ptp_diff_median_pct: s.ptp_diff.map(|x| x.median),
            ptp_diff_iqr_pct: s.ptp_diff.map(|x| x.iqr),
            count: s.rmse.map_or(0, |x| x.count),
        }
    }
}

/// Undefined values are written as empty cells.
pub fn stats_csv_string(rows: &[StatsRow]) -> String {
    let cell = |v: Option<f64>| v.map(fmt_csv).unwrap_or_default();
    let mut out = STATS_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let cells = [
            r.condition.clone(),
            r.series.clone(),
            r.window.clone(),
            cell(r.rmse_median),
            cell(r.rmse_iqr),
            cell(r.ptp_diff_median_pct),
            cell(r.ptp_diff_iqr_pct),
            r.count.to_string(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_stats_csv(path: &Path, rows: &[StatsRow]) -> Result<()> {
    io::write_string(path, &stats_csv_string(rows))
}

pub fn read_stats_csv(path: &Path) -> Result<Vec<StatsRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    for col in STATS_COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::MissingColumn { column: col.into() });
        }
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(row, r)| {
            r.map_err(|e| Error::Data {
                row,
                message: e.to_string(),
            })
        })
        .collect()
}
