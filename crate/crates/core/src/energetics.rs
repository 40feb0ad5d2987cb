//! Metabolic rate of the simulated subject and actuator power bookkeeping.
//!
//! Average muscle power follows `P_avg = m / (t1 − t0) ∫ Ė dt`, summed over
//! muscles and both legs and normalized by body mass. The normalized muscle
//! power `Ė` is supplied by a [`MuscleEnergetics`] model; the bundled
//! [`ActivationWorkModel`] uses activation-squared heat plus positive
//! mechanical work.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::Joint;
use crate::kinematics::JointVec;
use crate::redundancy::AssistSolution;

/// Normalized metabolic power of one muscle, W per kg of muscle.
pub trait MuscleEnergetics {
    /// `activation` in [0, 1], `mechanical_power` in W, `muscle_mass` in kg.
    fn normalized_power(&self, activation: f64, mechanical_power: f64, muscle_mass: f64) -> f64;
}

/// `Ė = c_act a² + max(0, P_mech) / m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationWorkModel {
    /// W per kg of muscle at full activation.
    pub activation_heat: f64,
}

/// Sized so the bundled muscle set walking the synthetic gait costs 3–5 W/kg.
pub const DEFAULT_ACTIVATION_HEAT: f64 = 950.0;

impl Default for ActivationWorkModel {
    fn default() -> Self {
        ActivationWorkModel {
            activation_heat: DEFAULT_ACTIVATION_HEAT,
        }
    }
}

impl MuscleEnergetics for ActivationWorkModel {
    fn normalized_power(&self, activation: f64, mechanical_power: f64, muscle_mass: f64) -> f64 {
        self.activation_heat * activation * activation + mechanical_power.max(0.0) / muscle_mass
    }
}

/// Number of legs a single-leg solution stands for.
pub const LEGS: f64 = 2.0;

/// Time-average of a series sampled on a % gait grid, trapezoidal rule.
/// Returns ∫f dt / (t1 − t0), which is independent of the stride duration.
pub fn cycle_average(pct: &[f64], values: &[f64]) -> f64 {
    let span = pct[pct.len() - 1] - pct[0];
    let mut acc = 0.0;
    for k in 0..pct.len() - 1 {
        acc += 0.5 * (values[k] + values[k + 1]) * (pct[k + 1] - pct[k]);
    }
    acc / span
}

/// Whole-body metabolic rate, W/kg, counting `legs` mirrored legs.
pub fn muscle_metabolic_rate_with(sol: &AssistSolution, model: &impl MuscleEnergetics, legs: f64) -> f64 {
    let mut total = 0.0;
    for (i, group) in sol.muscles.groups.iter().enumerate() {
        let edot: Vec<f64> = (0..sol.len())
            .map(|k| {
                let power: f64 = Joint::ALL
                    .iter()
                    .map(|&j| sol.muscle_torque(k, i, j) * sol.joint_velocities[j.index()][k])
                    .sum();
                model.normalized_power(sol.activations[k][i], power, group.mass)
            })
            .collect();
        total += group.mass * cycle_average(&sol.pct, &edot);
    }
    legs * total / sol.subject_mass
}

/// Whole-body metabolic rate with the default model, both legs, W/kg.
pub fn muscle_metabolic_rate(sol: &AssistSolution) -> f64 {
    muscle_metabolic_rate_with(sol, &ActivationWorkModel::default(), LEGS)
}

/// Per-sample actuator power of one leg, W/kg: `τ ω / m_subject`.
pub fn actuator_power(sol: &AssistSolution) -> [Vec<f64>; 2] {
    let series = |f: fn(JointVec) -> f64| -> Vec<f64> {
        sol.exo_torques
            .iter()
            .zip(&sol.actuator_velocities)
            .map(|(t, w)| f(*t) * f(*w) / sol.subject_mass)
            .collect()
    };
    [series(|v| v.hip), series(|v| v.knee)]
}

/// Cycle averages of one power series, W/kg.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerIntegrals {
    pub absolute: f64,
    pub positive: f64,
    pub negative: f64,
    pub max_positive: f64,
}

pub fn power_integrals(pct: &[f64], power: &[f64]) -> PowerIntegrals {
    let abs: Vec<f64> = power.iter().map(|p| p.abs()).collect();
    let pos: Vec<f64> = power.iter().map(|p| p.max(0.0)).collect();
    let neg: Vec<f64> = power.iter().map(|p| (-p).max(0.0)).collect();
    PowerIntegrals {
        absolute: cycle_average(pct, &abs),
        positive: cycle_average(pct, &pos),
        negative: cycle_average(pct, &neg),
        max_positive: pos.iter().copied().fold(0.0, f64::max),
    }
}

pub fn metabolic_reduction(assisted: f64, unassisted: f64) -> Result<f64> {
    if !(unassisted > 0.0) {
        return Err(Error::Domain(format!(
            "unassisted metabolic rate must be positive, got {}",
            unassisted
        )));
    }
    Ok(100.0 * (unassisted - assisted) / unassisted)
}

/// Energetic summary of one solved cycle. Device powers cover both legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// W/kg.
    pub gross_metabolic_rate: f64,
    /// % relative to the unassisted rate.
    pub metabolic_reduction: f64,
    /// Average absolute power per actuator, W/kg.
    pub actuator_abs_power: JointVec,
    pub total_abs_power: f64,
    pub positive_power: f64,
    /// Regeneratable power, W/kg.
    pub negative_power: f64,
    /// Cost of carrying: peak positive device power, W/kg.
    pub max_positive_power: f64,
}

/// Builds the report; `unassisted_rate = None` means `sol` is the baseline.
pub fn energy_report(sol: &AssistSolution, unassisted_rate: Option<f64>) -> Result<EnergyReport> {
    let rate = muscle_metabolic_rate(sol);
    let reduction = metabolic_reduction(rate, unassisted_rate.unwrap_or(rate))?;
    let [hip, knee] = actuator_power(sol);
    let hi = power_integrals(&sol.pct, &hip);
    let ki = power_integrals(&sol.pct, &knee);
    let peak = hip
        .iter()
        .zip(&knee)
        .map(|(h, k)| h.max(0.0) + k.max(0.0))
        .fold(0.0, f64::max);
    Ok(EnergyReport {
        gross_metabolic_rate: rate,
        metabolic_reduction: reduction,
        actuator_abs_power: JointVec::new(LEGS * hi.absolute, LEGS * ki.absolute),
        total_abs_power: LEGS * (hi.absolute + ki.absolute),
        positive_power: LEGS * (hi.positive + ki.positive),
        negative_power: LEGS * (hi.negative + ki.negative),
        max_positive_power: LEGS * peak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::{synth_gait, uniform_grid, Condition, Subject};
    use crate::kinematics::{ExoDesign, ExoVariant};
    use crate::redundancy::{solve_cycle, MuscleGroup, MuscleSet, SolverWeights};
    use std::f64::consts::{PI, TAU};

    fn single_muscle(activation: f64, mass: f64, samples: usize) -> AssistSolution {
        let pct = uniform_grid(samples);
        AssistSolution {
            stride: 1.0,
            subject_mass: mass,
            condition: Condition::NoLoad,
            muscles: MuscleSet {
                groups: vec![MuscleGroup {
                    name: "m".into(),
                    mass: 1.0,
                    capacity: [100.0, 0.0, 0.0],
                }],
            },
            design: None,
            joint_velocities: [vec![0.0; samples], vec![0.0; samples], vec![0.0; samples]],
            activations: vec![vec![activation]; samples],
            exo_torques: vec![JointVec::ZERO; samples],
            actuator_velocities: vec![JointVec::ZERO; samples],
            reserves: vec![[0.0; 3]; samples],
            objective: vec![0.0; samples],
            residual: vec![0.0; samples],
            pct,
        }
    }

    #[test]
    fn zero_activation_zero_rate() {
        let sol = single_muscle(0.0, 80.0, 101);
        assert_eq!(muscle_metabolic_rate(&sol), 0.0);
    }

    #[test]
    fn constant_half_activation_hand_integral() {
        let sol = single_muscle(0.5, 80.0, 101);
        let model = ActivationWorkModel { activation_heat: 60.0 };
        let rate = muscle_metabolic_rate_with(&sol, &model, 1.0);
        assert!((rate - 15.0 / 80.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_activation_quadruples_rate() {
        let a = muscle_metabolic_rate(&single_muscle(0.2, 70.0, 101));
        let b = muscle_metabolic_rate(&single_muscle(0.4, 70.0, 101));
        assert!((b - 4.0 * a).abs() < 1e-12);
    }

    #[test]
    fn actuator_power_arithmetic_and_sign() {
        let mut sol = single_muscle(0.0, 80.0, 3);
        sol.exo_torques = vec![JointVec::new(10.0, 10.0), JointVec::ZERO, JointVec::new(10.0, 0.0)];
        sol.actuator_velocities = vec![JointVec::new(2.0, -1.0), JointVec::new(5.0, 5.0), JointVec::new(1.0, 1.0)];
        let [hip, knee] = actuator_power(&sol);
        assert!((hip[0] - 0.25).abs() < 1e-15);
        assert!(knee[0] < 0.0);
        assert_eq!(hip[1], 0.0);
        assert_eq!(knee[2], 0.0);
    }

    #[test]
    fn sine_power_integrals() {
        let pct = uniform_grid(10001);
        let p: Vec<f64> = pct.iter().map(|x| (TAU * x / 100.0).sin()).collect();
        let i = power_integrals(&pct, &p);
        assert!((i.positive - 1.0 / PI).abs() < 1e-6);
        assert!((i.negative - 1.0 / PI).abs() < 1e-6);
        assert!((i.absolute - 2.0 / PI).abs() < 1e-6);
        assert!((i.max_positive - 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_negative_and_constant_power() {
        let pct = uniform_grid(101);
        let ones = vec![1.0; 101];
        let i = power_integrals(&pct, &ones);
        assert_eq!(i.negative, 0.0);
        assert!((i.absolute - 1.0).abs() < 1e-15);
        assert_eq!(i.max_positive, 1.0);
        assert_eq!(i.absolute, i.positive);
    }

    #[test]
    fn reduction_examples() {
        assert!((metabolic_reduction(7.76, 10.0).unwrap() - 22.4).abs() < 1e-12);
        assert_eq!(metabolic_reduction(10.0, 10.0).unwrap(), 0.0);
        assert!((metabolic_reduction(11.0, 10.0).unwrap() + 10.0).abs() < 1e-12);
        assert!(matches!(metabolic_reduction(1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn assisted_rate_below_unassisted_on_synthetic_gait() {
        let subject = Subject::default();
        let muscles = MuscleSet::default();
        let w = SolverWeights::default();
        for condition in Condition::ALL {
            let gait = synth_gait(7, condition);
            let base = solve_cycle(&gait, &muscles, None, &w).unwrap();
            let base_rate = muscle_metabolic_rate(&base);
            for variant in [ExoVariant::Mono, ExoVariant::Bi] {
                let d = ExoDesign::new(variant, 30.0, 30.0, &subject);
                let sol = solve_cycle(&gait, &muscles, Some(&d), &w).unwrap();
                assert!(muscle_metabolic_rate(&sol) <= base_rate);
            }
        }
    }

    #[test]
    fn unassisted_synthetic_rate_in_walking_range() {
        for condition in Condition::ALL {
            for seed in [1, 7, 42] {
                let gait = synth_gait(seed, condition);
                let sol = solve_cycle(&gait, &MuscleSet::default(), None, &SolverWeights::default()).unwrap();
                let rate = muscle_metabolic_rate(&sol);
                assert!((3.0..=5.0).contains(&rate), "{condition} seed {seed}: {rate}");
            }
        }
    }

    #[test]
    fn report_serializes_with_field_names() {
        let gait = synth_gait(7, Condition::NoLoad);
        let d = ExoDesign::new(ExoVariant::Mono, 50.0, 50.0, &Subject::default());
        let sol = solve_cycle(&gait, &MuscleSet::default(), Some(&d), &SolverWeights::default()).unwrap();
        let report = energy_report(&sol, Some(4.0)).unwrap();
        assert!(report.total_abs_power + 1e-12 >= (report.positive_power - report.negative_power).abs());
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "gross_metabolic_rate",
            "metabolic_reduction",
            "actuator_abs_power",
            "total_abs_power",
            "positive_power",
            "negative_power",
            "max_positive_power",
        ] {
            assert!(json.get(key).is_some(), "{}", key);
        }
    }
}
