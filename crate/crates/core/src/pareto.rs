//! Torque-limit sweep (ε-constraint through actuator saturation) and the
//! non-dominated filter over (metabolic reduction ↑, device power ↓).

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energetics::{energy_report, EnergyReport};
use crate::error::{Error, Result};
use crate::gait::{Condition, GaitCycle, Subject};
use crate::io::{self, fmt_csv};
use crate::kinematics::{ExoDesign, ExoVariant, JointVec, PEAK_TORQUE_GRID};
use crate::redundancy::{solve_cycle, AssistSolution, MuscleSet, SolverWeights};

/// One evaluated design on the torque grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub label: String,
    pub condition: Condition,
    pub design: ExoDesign,
    pub report: EnergyReport,
    /// Unassisted metabolic rate of the same condition, W/kg.
    pub unassisted_rate: f64,
    /// Objective 1 (maximized), %.
    pub metabolic_reduction: f64,
    /// Objective 2 (minimized), W/kg.
    pub abs_power: f64,
    /// Per-sample optimizer cost.
    pub objective: Vec<f64>,
    /// Largest torque-balance residual over the cycle, N·m.
    pub max_residual: f64,
    /// Joint-space device moments per sample, N·m.
    pub assist_moments: Vec<JointVec>,
}

impl DesignPoint {
    pub fn variant(&self) -> ExoVariant {
        self.design.variant
    }

    fn from_solution(label: String, sol: &AssistSolution, unassisted_rate: f64) -> Result<Self> {
        let report = energy_report(sol, Some(unassisted_rate))?;
        Ok(DesignPoint {
            label,
            condition: sol.condition,
            design: sol.design.clone().expect("assisted solution has a design"),
            metabolic_reduction: report.metabolic_reduction,
            abs_power: report.total_abs_power,
            report,
            unassisted_rate,
            objective: sol.objective.clone(),
            max_residual: sol.max_residual(),
            assist_moments: sol.exo_joint_moments(),
        })
    }
}

/// Sweep output for one gait condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub condition: Condition,
    pub variant: ExoVariant,
    pub unassisted: AssistSolution,
    pub unassisted_report: EnergyReport,
    /// 25 points in label order `Aa, Ab, …, Ee`.
    pub points: Vec<DesignPoint>,
}

/// Evaluates the 5 × 5 torque grid for one variant and every gait given.
pub fn sweep(gaits: &[GaitCycle], muscles: &MuscleSet, variant: ExoVariant, subject: &Subject, weights: &SolverWeights) -> Result<Vec<Sweep>> {
    gaits
        .iter()
        .map(|gait| {
            let unassisted = solve_cycle(gait, muscles, None, weights)
                .map_err(|e| e.context(format!("unassisted {}", gait.condition)))?;
            let unassisted_report = energy_report(&unassisted, None)?;
            let rate = unassisted_report.gross_metabolic_rate;
            let cells: Vec<(f64, f64)> = PEAK_TORQUE_GRID
                .iter()
                .flat_map(|&h| PEAK_TORQUE_GRID.iter().map(move |&k| (h, k)))
                .collect();
            let points = cells
                .par_iter()
                .map(|&(hip, knee)| {
                    let design = ExoDesign::new(variant, hip, knee, subject);
                    let label = design.label().expect("grid torques have labels");
                    let sol = solve_cycle(gait, muscles, Some(&design), weights).map_err(|e| {
                        e.context(format!("{} {} grid cell {} (hip {} N·m, knee {} N·m)", variant, gait.condition, label, hip, knee))
                    })?;
                    DesignPoint::from_solution(label, &sol, rate)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Sweep {
                condition: gait.condition,
                variant,
                unassisted,
                unassisted_report,
                points,
            })
        })
        .collect()
}

/// Indices of the non-dominated members of `(reduction, power)` pairs.
///
/// `p` is dropped iff some `q` has `reduction(q) ≥ reduction(p)` and
/// `power(q) ≤ power(p)` with at least one strict. Exact ties on both
/// objectives are all kept. Returned indices are ascending. O(n log n).
pub fn non_dominated(objectives: &[(f64, f64)]) -> Result<Vec<usize>> {
    if objectives.is_empty() {
        return Err(Error::Domain("dominance filter needs at least one point".into()));
    }
    if objectives.iter().any(|(r, p)| r.is_nan() || p.is_nan()) {
        return Err(Error::Domain("objectives must not be NaN".into()));
    }
    let mut order: Vec<usize> = (0..objectives.len()).collect();
    // Power ascending, then reduction descending.
    order.sort_by(|&i, &j| {
        let (ri, pi) = objectives[i];
        let (rj, pj) = objectives[j];
        pi.partial_cmp(&pj).unwrap().then(rj.partial_cmp(&ri).unwrap()).then(i.cmp(&j))
    });

    let mut keep = Vec::new();
    // Best reduction among points with strictly lower power.
    let mut best_lower = f64::NEG_INFINITY;
    let mut start = 0;
    while start < order.len() {
        let power = objectives[order[start]].1;
        let mut end = start;
        while end < order.len() && objectives[order[end]].1 == power {
            end += 1;
        }
        // Group max reduction sits first.
        let group_best = objectives[order[start]].0;
        for &i in &order[start..end] {
            let r = objectives[i].0;
            if r == group_best && r > best_lower {
                keep.push(i);
            }
        }
        best_lower = best_lower.max(group_best);
        start = end;
    }
    keep.sort_unstable();
    Ok(keep)
}

/// Non-dominated design points ordered by power ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Front {
    pub points: Vec<DesignPoint>,
}

impl Front {
    pub fn labels(&self) -> Vec<&str> {
        self.points.iter().map(|p| p.label.as_str()).collect()
    }
}

/// Filters `points` to the Pareto front. The result is independent of the
/// input order.
pub fn dominance_filter(points: &[DesignPoint]) -> Result<Front> {
    let objectives: Vec<(f64, f64)> = points.iter().map(|p| (p.metabolic_reduction, p.abs_power)).collect();
    let mut members: Vec<DesignPoint> = non_dominated(&objectives)?.into_iter().map(|i| points[i].clone()).collect();
    members.sort_by(compare_front_order);
    Ok(Front { points: members })
}

fn compare_front_order(a: &DesignPoint, b: &DesignPoint) -> Ordering {
    a.abs_power
        .partial_cmp(&b.abs_power)
        .unwrap()
        .then(a.metabolic_reduction.partial_cmp(&b.metabolic_reduction).unwrap())
        .then(a.variant().cmp(&b.variant()))
        .then(a.condition.cmp(&b.condition))
        .then(a.label.cmp(&b.label))
}

pub const FRONT_COLUMNS: [&str; 11] = [
    "label",
    "variant",
    "condition",
    "hip_peak_nm",
    "knee_peak_nm",
    "metabolic_reduction_pct",
    "abs_power_w_kg",
    "hip_abs_power_w_kg",
    "knee_abs_power_w_kg",
    "neg_power_w_kg",
    "max_pos_power_w_kg",
];

/// One row of a fronts CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub label: String,
    pub variant: String,
    pub condition: String,
    pub hip_peak_nm: f64,
    pub knee_peak_nm: f64,
    pub metabolic_reduction_pct: f64,
    pub abs_power_w_kg: f64,
    pub hip_abs_power_w_kg: f64,
    pub knee_abs_power_w_kg: f64,
    pub neg_power_w_kg: f64,
    pub max_pos_power_w_kg: f64,
}

impl From<&DesignPoint> for FrontRow {
    fn from(p: &DesignPoint) -> Self {
        FrontRow {
            label: p.label.clone(),
            variant: p.variant().to_string(),
            condition: p.condition.to_string(),
            hip_peak_nm: p.design.peak.hip,
            knee_peak_nm: p.design.peak.knee,
            metabolic_reduction_pct: p.metabolic_reduction,
            abs_power_w_kg: p.abs_power,
            hip_abs_power_w_kg: p.report.actuator_abs_power.hip,
            knee_abs_power_w_kg: p.report.actuator_abs_power.knee,
            neg_power_w_kg: p.report.negative_power,
            max_pos_power_w_kg: p.report.max_positive_power,
        }
    }
}

pub fn front_csv_string<'a>(points: impl IntoIterator<Item = &'a DesignPoint>) -> String {
    let mut out = FRONT_COLUMNS.join(",");
    out.push('\n');
    for p in points {
        let r = FrontRow::from(p);
        let nums = [
            r.hip_peak_nm,
            r.knee_peak_nm,
            r.metabolic_reduction_pct,
            r.abs_power_w_kg,
            r.hip_abs_power_w_kg,
            r.knee_abs_power_w_kg,
            r.neg_power_w_kg,
            r.max_pos_power_w_kg,
        ];
        let mut cells = vec![r.label, r.variant, r.condition];
        cells.extend(nums.iter().map(|&v| fmt_csv(v)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_front_csv<'a>(path: &Path, points: impl IntoIterator<Item = &'a DesignPoint>) -> Result<()> {
    io::write_string(path, &front_csv_string(points))
}

pub fn read_front_csv(path: &Path) -> Result<Vec<FrontRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    for col in FRONT_COLUMNS {
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
