//! Muscle redundancy resolution with assistive and reserve torques.
//!
//! At every sample the net joint moments are split between lumped muscle
//! groups (torque = activation × capacity), exoskeleton actuators and
//! reserve torques by minimizing
//!
//! ```text
//! Σ a_i² + Σ (τ_exo,i / w_exo,i)² + Σ (τ_r,j / w_r,j)²
//! ```
//!
//! subject to `R a + E τ_exo + τ_r = τ_net`, `0 ≤ a ≤ 1`, `|τ_exo| ≤ peak`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{Condition, GaitCycle, Joint};
use crate::kinematics::{actuator_velocities, ExoDesign, JointVec};
use crate::qp::{QpOptions, SeparableQp};

const DEFAULT_MUSCLES_CSV: &str = include_str!("../fixtures/muscles.csv");

/// A lumped sagittal muscle group acting as a linear torque generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuscleGroup {
    pub name: String,
    pub mass: f64,
    /// Signed joint torque at full activation, N·m, indexed by [`Joint::index`].
    pub capacity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuscleSet {
    pub groups: Vec<MuscleGroup>,
}

impl Default for MuscleSet {
    /// Nine groups spanning hip, knee and ankle.
    fn default() -> Self {
        MuscleSet::parse_csv(DEFAULT_MUSCLES_CSV).expect("bundled muscle fixture is valid")
    }
}

impl MuscleSet {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MuscleSet::parse_csv(&text)
    }

    /// Parses `name,mass_kg,cap_hip_nm,cap_knee_nm,cap_ankle_nm`.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Format(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let expected = ["name", "mass_kg", "cap_hip_nm", "cap_knee_nm", "cap_ankle_nm"];
        for col in expected {
            if !headers.iter().any(|h| h == col) {
                return Err(Error::MissingColumn { column: col.into() });
            }
        }
        let idx = |c: &str| headers.iter().position(|h| h == c).unwrap();
        let mut groups = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Format(e.to_string()))?;
            let num = |c: &str| -> Result<f64> {
                let cell = record.get(idx(c)).unwrap_or("");
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Data {
                        row,
                        message: format!("column `{}`: `{}` is not a finite number", c, cell),
                    })
            };
            let group = MuscleGroup {
                name: record.get(idx("name")).unwrap_or("").to_string(),
                mass: num("mass_kg")?,
                capacity: [num("cap_hip_nm")?, num("cap_knee_nm")?, num("cap_ankle_nm")?],
            };
            if !(group.mass > 0.0) {
                return Err(Error::Data {
                    row,
                    message: format!("muscle `{}` mass must be positive", group.name),
                });
            }
            groups.push(group);
        }
        let set = MuscleSet { groups };
        if set.is_empty() {
            return Err(Error::Format("muscle set is empty".into()));
        }
        Ok(set)
    }

    /// 3 × M matrix of joint torque per unit activation.
    pub fn capacity_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(3, self.len(), |j, i| self.groups[i].capacity[j])
    }

    /// Rank of the capacity matrix.
    pub fn rank(&self) -> usize {
        self.capacity_matrix().rank(1e-9)
    }
}

/// Objective weights. Larger weights make the corresponding torques cheaper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverWeights {
    /// `w_exo`, N·m.
    pub exo: f64,
    /// `w_r`, N·m.
    pub reserve: f64,
}

impl Default for SolverWeights {
    fn default() -> Self {
        SolverWeights {
            exo: 1000.0,
            reserve: 1.0,
        }
    }
}

/// One sample of the redundancy problem over `n` joints, `M` muscles and `K`
/// exoskeleton actuators.
#[derive(Debug, Clone)]
pub struct StepProblem {
    /// Net joint moments, N·m (length n).
    pub net: Vec<f64>,
    /// n × M.
    pub capacities: DMatrix<f64>,
    /// n × K joint moment per unit actuator torque.
    pub exo_map: DMatrix<f64>,
    /// Symmetric actuator torque bounds, N·m (length K).
    pub exo_bounds: Vec<f64>,
    /// `w_exo` per actuator (length K).
    pub exo_weights: Vec<f64>,
    /// `w_r` per joint; `None` disables reserve torques.
    pub reserve_weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSolution {
    pub activations: Vec<f64>,
    pub exo: Vec<f64>,
    /// Reserve torques per joint, zero when reserves are disabled.
    pub reserves: Vec<f64>,
    pub objective: f64,
    /// ‖R a + E τ_exo + τ_r − τ_net‖∞, N·m.
    pub residual: f64,
}

impl StepProblem {
    fn joints(&self) -> usize {
        self.net.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.joints();
        let k = self.exo_bounds.len();
        if self.capacities.nrows() != n || self.exo_map.nrows() != n || self.exo_map.ncols() != k || self.exo_weights.len() != k {
            return Err(Error::Domain("step problem dimensions are inconsistent".into()));
        }
        if let Some(w) = &self.reserve_weights {
            if w.len() != n {
                return Err(Error::Domain("one reserve weight per joint is required".into()));
            }
        }
        if self.exo_bounds.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::Domain("exoskeleton torque bounds must be non-negative".into()));
        }
        Ok(())
    }

    fn to_qp(&self) -> SeparableQp {
        let n = self.joints();
        let m = self.capacities.ncols();
        let k = self.exo_bounds.len();
        let reserves = self.reserve_weights.as_ref().map_or(0, |_| n);
        let cols = m + k + reserves;

        let mut a = DMatrix::zeros(n, cols);
        a.columns_mut(0, m).copy_from(&self.capacities);
        a.columns_mut(m, k).copy_from(&self.exo_map);
        for j in 0..reserves {
            a[(j, m + k + j)] = 1.0;
        }
        let mut scales = vec![1.0; m];
        let mut lower = vec![0.0; m];
        let mut upper = vec![1.0; m];
        scales.extend(&self.exo_weights);
        lower.extend(self.exo_bounds.iter().map(|b| -b));
        upper.extend(&self.exo_bounds);
        if let Some(w) = &self.reserve_weights {
            scales.extend(w);
            lower.extend(std::iter::repeat_n(f64::NEG_INFINITY, n));
            upper.extend(std::iter::repeat_n(f64::INFINITY, n));
        }
        SeparableQp {
            scales,
            a,
            b: DVector::from_column_slice(&self.net),
            lower,
            upper,
        }
    }
}

pub fn solve_step(problem: &StepProblem) -> Result<StepSolution> {
    problem.check()?;
    let qp = problem.to_qp();
    let sol = qp.solve(&QpOptions::default())?;
    let m = problem.capacities.ncols();
    let k = problem.exo_bounds.len();
    let n = problem.joints();
    let reserves = if problem.reserve_weights.is_some() {
        sol.x[m + k..].to_vec()
    } else {
        vec![0.0; n]
    };
    Ok(StepSolution {
        activations: sol.x[..m].to_vec(),
        exo: sol.x[m..m + k].to_vec(),
        reserves,
        objective: sol.objective,
        residual: sol.residual,
    })
}

/// Per-sample solution of one stride, one leg; the other leg mirrors it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssistSolution {
    pub pct: Vec<f64>,
    pub stride: f64,
    pub subject_mass: f64,
    pub condition: Condition,
    pub muscles: MuscleSet,
    pub design: Option<ExoDesign>,
    /// Joint angular velocities from the gait, rad/s.
    pub joint_velocities: [Vec<f64>; 3],
    /// `[sample][muscle]`.
    pub activations: Vec<Vec<f64>>,
    /// Actuator-space torques, N·m.
    pub exo_torques: Vec<JointVec>,
    /// Actuator velocities, rad/s.
    pub actuator_velocities: Vec<JointVec>,
    pub reserves: Vec<[f64; 3]>,
    pub objective: Vec<f64>,
    pub residual: Vec<f64>,
}

impl AssistSolution {
    pub fn len(&self) -> usize {
        self.pct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pct.is_empty()
    }

    /// Joint-space moments delivered by the device, N·m.
    pub fn exo_joint_moments(&self) -> Vec<JointVec> {
        match &self.design {
            Some(d) => self.exo_torques.iter().map(|t| d.variant.joint_moments(*t)).collect(),
            None => vec![JointVec::ZERO; self.len()],
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residual.iter().copied().fold(0.0, f64::max)
    }

    /// Muscle torque of group `i` at joint `j` and sample `k`, N·m.
    pub fn muscle_torque(&self, k: usize, i: usize, joint: Joint) -> f64 {
        self.activations[k][i] * self.muscles.groups[i].capacity[joint.index()]
    }
}

/// Solves every sample of `gait`. `design = None` is the unassisted case.
pub fn solve_cycle(
    gait: &GaitCycle,
    muscles: &MuscleSet,
    design: Option<&ExoDesign>,
    weights: &SolverWeights,
) -> Result<AssistSolution> {
    let capacities = muscles.capacity_matrix();
    let (exo_map, exo_bounds) = match design {
        Some(d) => {
            let e = d.variant.joint_torque_matrix();
            let map = DMatrix::from_row_slice(3, 2, &[e[0][0], e[0][1], e[1][0], e[1][1], 0.0, 0.0]);
            (map, vec![d.peak.hip, d.peak.knee])
        }
        None => (DMatrix::zeros(3, 0), Vec::new()),
    };
    let exo_weights = vec![weights.exo; exo_bounds.len()];
    let reserve_weights = Some(vec![weights.reserve; 3]);

    let steps: Vec<StepSolution> = (0..gait.len())
        .into_par_iter()
        .map(|k| {
            let problem = StepProblem {
                net: Joint::ALL.iter().map(|&j| gait.moment_nm(j, k)).collect(),
                capacities: capacities.clone(),
                exo_map: exo_map.clone(),
                exo_bounds: exo_bounds.clone(),
                exo_weights: exo_weights.clone(),
                reserve_weights: reserve_weights.clone(),
            };
            solve_step(&problem).map_err(|e| e.context(format!("sample {} ({}%)", k, gait.pct[k])))
        })
        .collect::<Result<_>>()?;

    let exo_torques = steps
        .iter()
        .map(|s| if s.exo.len() == 2 { JointVec::new(s.exo[0], s.exo[1]) } else { JointVec::ZERO })
        .collect();
    let actuator_vel = match design {
        Some(d) => actuator_velocities(d, gait),
        None => vec![JointVec::ZERO; gait.len()],
    };
    Ok(AssistSolution {
        pct: gait.pct.clone(),
        stride: gait.stride,
        subject_mass: gait.subject_mass,
        condition: gait.condition,
        muscles: muscles.clone(),
        design: design.cloned(),
        joint_velocities: gait.velocities.clone(),
        activations: steps.iter().map(|s| s.activations.clone()).collect(),
        exo_torques,
        actuator_velocities: actuator_vel,
        reserves: steps.iter().map(|s| [s.reserves[0], s.reserves[1], s.reserves[2]]).collect(),
        objective: steps.iter().map(|s| s.objective).collect(),
        residual: steps.iter().map(|s| s.residual).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::{synth_gait, Subject};
    use crate::kinematics::ExoVariant;

    fn one_joint(net: f64, exo_bound: f64) -> StepProblem {
        StepProblem {
            net: vec![net],
            capacities: DMatrix::from_element(1, 1, 100.0),
            exo_map: DMatrix::from_element(1, 1, 1.0),
            exo_bounds: vec![exo_bound],
            exo_weights: vec![1000.0],
            reserve_weights: None,
        }
    }

    #[test]
    fn closed_form_stationarity() {
        let s = solve_step(&one_joint(50.0, f64::INFINITY)).unwrap();
        assert!((s.exo[0] - 5000.0 / 101.0).abs() < 1e-6);
        assert!((s.activations[0] - 0.0049505).abs() < 1e-7);
    }

    #[test]
    fn zero_demand_is_zero_solution() {
        let mut p = one_joint(0.0, 20.0);
        p.reserve_weights = Some(vec![1.0]);
        let s = solve_step(&p).unwrap();
        assert_eq!(s.activations, vec![0.0]);
        assert_eq!(s.exo, vec![0.0]);
        assert_eq!(s.reserves, vec![0.0]);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn saturated_exo_matches_grid_search() {
        let s = solve_step(&one_joint(50.0, 20.0)).unwrap();
        assert_eq!(s.exo[0], 20.0);
        assert!((s.activations[0] - 0.3).abs() < 1e-12);

        // Grid over (a, τ_exo) at 1e-3 resolution; the torque balance is
        // enforced by picking the best feasible pair within a band.
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for ia in 0..=1000 {
            let a = ia as f64 * 1e-3;
            // Only grid points near the balance line can pass the band test.
            let centre = ((50.0 - 100.0 * a + 20.0) / 1e-3).round() as i64;
            for it in (centre - 1).max(0)..=(centre + 1).min(40_000) {
                let tau = -20.0 + it as f64 * 1e-3;
                if (100.0 * a + tau - 50.0).abs() > 5e-4 {
                    continue;
                }
                let j = a * a + (tau / 1000.0).powi(2);
                if j < best.0 {
                    best = (j, a, tau);
                }
            }
        }
        assert!((best.1 - s.activations[0]).abs() < 1e-2);
        assert!((best.2 - s.exo[0]).abs() < 1e-2);
    }

    #[test]
    fn default_muscles_have_full_rank() {
        let m = MuscleSet::default();
        assert_eq!(m.len(), 9);
        assert_eq!(m.rank(), 3);
    }

    #[test]
    fn muscle_csv_missing_column() {
        let err = MuscleSet::parse_csv("name,mass_kg,cap_hip_nm,cap_knee_nm\nx,1,1,1\n").unwrap_err();
        assert_eq!(err.field(), Some("cap_ankle_nm"));
    }

    #[test]
    fn unassisted_cycle_has_no_exo_torque() {
        let gait = synth_gait(7, Condition::NoLoad);
        let sol = solve_cycle(&gait, &MuscleSet::default(), None, &SolverWeights::default()).unwrap();
        assert!(sol.exo_torques.iter().all(|t| *t == JointVec::ZERO));
        for k in 0..gait.len() {
            let net_nonzero = Joint::ALL.iter().any(|&j| gait.moment_nm(j, k) != 0.0);
            if net_nonzero {
                assert!(sol.activations[k].iter().any(|&a| a > 0.0));
            }
        }
        assert!(sol.max_residual() < 1e-8);
    }

    #[test]
    fn larger_bounds_never_cost_more() {
        let gait = synth_gait(7, Condition::Loaded);
        let subject = Subject::default();
        let muscles = MuscleSet::default();
        let w = SolverWeights::default();
        let strong = ExoDesign::new(ExoVariant::Bi, 70.0, 70.0, &subject);
        let weak = ExoDesign::new(ExoVariant::Bi, 30.0, 30.0, &subject);
        let a = solve_cycle(&gait, &muscles, Some(&strong), &w).unwrap();
        let b = solve_cycle(&gait, &muscles, Some(&weak), &w).unwrap();
        for (ja, jb) in a.objective.iter().zip(&b.objective) {
            assert!(*ja <= *jb * (1.0 + 1e-12) + 1e-15);
        }
    }
}
