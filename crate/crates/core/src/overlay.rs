//! Regeneration credit, Browning-style mass and inertia penalties, and the
//! modified augmentation factor (MAF), superposed on swept design points.

use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::energetics::{metabolic_reduction, EnergyReport, LEGS};
use crate::error::{Error, Result};
use crate::gait::Subject;
use crate::kinematics::ExoDesign;
use crate::pareto::{dominance_filter, DesignPoint, Front};

pub const MAX_REGEN_ETA: f64 = 0.65;

/// Metabolic cost of carried mass, W/kg per kg, by location.
pub const MASS_COEFF_WAIST: f64 = 0.045;
pub const MASS_COEFF_THIGH: f64 = 0.075;
pub const MASS_COEFF_SHANK: f64 = 0.076;

/// Inertia-ratio regressions, `ΔMC/MC = offset + slope·I_ratio − 1`.
pub const THIGH_INERTIA_FIT: (f64, f64) = (-0.74, 1.81);
pub const SHANK_INERTIA_FIT: (f64, f64) = (0.63749, 0.40916);

/// Overlay settings. `beta` is ordered foot, shank, thigh, waist and
/// `gamma` foot, shank, thigh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayParams {
    pub regen_eta: f64,
    pub muscle_tendon_eta: f64,
    pub beta: [f64; 4],
    pub gamma: [f64; 3],
    /// Add the mass and inertia penalties to the assisted metabolic rate.
    pub mass_inertia: bool,
}

impl Default for OverlayParams {
    fn default() -> Self {
        OverlayParams {
            regen_eta: 0.0,
            muscle_tendon_eta: 0.41,
            beta: [14.8, 5.6, 5.6, 3.3],
            gamma: [47.22, 27.78, 125.07],
            mass_inertia: true,
        }
    }
}

impl OverlayParams {
    pub fn validate(&self) -> Result<()> {
        check_eta(self.regen_eta)?;
        if !(self.muscle_tendon_eta > 0.0 && self.muscle_tendon_eta.is_finite()) {
            return Err(Error::config("muscle_tendon_eta", "must be positive"));
        }
        if self.beta.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::config("beta", "location factors must be positive"));
        }
        if self.gamma.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Error::config("gamma", "location factors must be positive"));
        }
        Ok(())
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=MAX_REGEN_ETA).contains(&eta) {
        return Err(Error::Domain(format!("regeneration efficiency {eta} outside [0, {MAX_REGEN_ETA}]")));
    }
    Ok(())
}

/// Added masses and inertias of a device. Thigh and shank entries are per
/// leg; the waist mass is carried once.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct InertiaSpec {
    pub waist_mass: f64,
    pub thigh_mass: f64,
    pub shank_mass: f64,
    pub foot_mass: f64,
    pub thigh_com: f64,
    pub shank_com: f64,
    /// Exo thigh inertia about the hip incl. reflected actuator inertia, kg·m².
    pub thigh_inertia: f64,
    /// Exo shank inertia about the hip incl. reflected actuator inertia, kg·m².
    pub shank_inertia: f64,
}

impl InertiaSpec {
    /// Point-mass layout of the design plus rotor inertia reflected through
    /// the transmission (hip motor on the thigh, knee motor on the shank).
    pub fn from_design(design: &ExoDesign) -> Self {
        let m = &design.masses;
        let reflected = design.reflected_inertia();
        InertiaSpec {
            waist_mass: m.waist_mass,
            thigh_mass: m.thigh_mass,
            shank_mass: m.shank_mass,
            foot_mass: 0.0,
            thigh_com: m.thigh_com,
            shank_com: m.shank_com,
            thigh_inertia: m.thigh_mass * m.thigh_com * m.thigh_com + reflected.hip,
            shank_inertia: m.shank_mass * m.shank_com * m.shank_com + reflected.knee,
        }
    }

    /// Masses by location foot, shank, thigh, waist, summed over both legs.
    pub fn location_masses(&self) -> [f64; 4] {
        [LEGS * self.foot_mass, LEGS * self.shank_mass, LEGS * self.thigh_mass, self.waist_mass]
    }

    /// Inertias by location foot, shank, thigh, summed over both legs.
    pub fn location_inertias(&self) -> [f64; 3] {
        [0.0, LEGS * self.shank_inertia, LEGS * self.thigh_inertia]
    }
}

impl Add for InertiaSpec {
    type Output = InertiaSpec;

    /// Masses and inertias add; CoM fields are mass-weighted.
    fn add(self, o: InertiaSpec) -> InertiaSpec {
        let com = |m1: f64, c1: f64, m2: f64, c2: f64| if m1 + m2 > 0.0 { (m1 * c1 + m2 * c2) / (m1 + m2) } else { 0.0 };
        InertiaSpec {
            waist_mass: self.waist_mass + o.waist_mass,
            thigh_mass: self.thigh_mass + o.thigh_mass,
            shank_mass: self.shank_mass + o.shank_mass,
            foot_mass: self.foot_mass + o.foot_mass,
            thigh_com: com(self.thigh_mass, self.thigh_com, o.thigh_mass, o.thigh_com),
            shank_com: com(self.shank_mass, self.shank_com, o.shank_mass, o.shank_com),
            thigh_inertia: self.thigh_inertia + o.thigh_inertia,
            shank_inertia: self.shank_inertia + o.shank_inertia,
        }
    }
}

/// Mass penalty broken down by location, W/kg. `thigh`/`shank` are per leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassDelta {
    pub waist: f64,
    pub thigh: f64,
    pub shank: f64,
    pub total: f64,
}

pub fn browning_mass_delta(spec: &InertiaSpec) -> MassDelta {
    let waist = MASS_COEFF_WAIST * spec.waist_mass;
    let thigh = MASS_COEFF_THIGH * spec.thigh_mass;
    let shank = MASS_COEFF_SHANK * spec.shank_mass;
    MassDelta {
        waist,
        thigh,
        shank,
        total: waist + LEGS * (thigh + shank),
    }
}

/// Inertia penalty, W/kg. `thigh`/`shank` are per leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InertiaDelta {
    pub thigh: f64,
    pub shank: f64,
    pub total: f64,
}

pub fn inertia_ratio(exo_inertia: f64, unloaded: f64) -> Result<f64> {
    if !(unloaded > 0.0) {
        return Err(Error::Domain(format!("unloaded leg inertia must be positive, got {unloaded}")));
    }
    Ok((exo_inertia + unloaded) / unloaded)
}

pub fn browning_inertia_delta(spec: &InertiaSpec, subject: &Subject, mc_unassisted: f64) -> Result<InertiaDelta> {
    let fit = |(offset, slope): (f64, f64), ratio: f64| (offset + slope * ratio) * mc_unassisted - mc_unassisted;
    let thigh = fit(THIGH_INERTIA_FIT, inertia_ratio(spec.thigh_inertia, subject.unloaded_leg_inertia)?);
    let shank = fit(SHANK_INERTIA_FIT, inertia_ratio(spec.shank_inertia, subject.unloaded_leg_inertia)?);
    Ok(InertiaDelta {
        thigh,
        shank,
        total: LEGS * (thigh + shank),
    })
}

/// `γ = A·m·MC / I_unloaded`, W/(kg·m²).
pub fn location_factor(a: f64, subject_mass: f64, mc_unloaded: f64, unloaded_inertia: f64) -> Result<f64> {
    if !(unloaded_inertia > 0.0) {
        return Err(Error::Domain(format!("unloaded leg inertia must be positive, got {unloaded_inertia}")));
    }
    Ok(a * subject_mass * mc_unloaded / unloaded_inertia)
}

/// Dissipated power: the shortfall of positive against negative power.
pub fn dissipated_power(p_plus: f64, p_minus: f64) -> f64 {
    if p_plus < p_minus {
        p_minus - p_plus
    } else {
        0.0
    }
}

/// Modified augmentation factor, W/kg.
///
/// Powers are mass-normalized; masses (kg, foot→waist) and inertias
/// (kg·m², foot→thigh) are divided by `subject_mass` so every term is W/kg.
pub fn maf(p_plus: f64, p_minus: f64, masses: [f64; 4], inertias: [f64; 3], subject_mass: f64, params: &OverlayParams) -> f64 {
    let delivered = (p_plus + dissipated_power(p_plus, p_minus)) / params.muscle_tendon_eta;
    let mass_cost: f64 = params.beta.iter().zip(masses).map(|(b, m)| b * m).sum();
    let inertia_cost: f64 = params.gamma.iter().zip(inertias).map(|(g, i)| g * i).sum();
    delivered - (mass_cost + inertia_cost) / subject_mass
}

/// Absolute power after crediting regenerated negative work, W/kg.
pub fn regen_adjust(report: &EnergyReport, eta: f64) -> Result<f64> {
    regen_adjust_values(report.total_abs_power, report.negative_power, eta)
}

pub fn regen_adjust_values(absolute: f64, negative: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(absolute - eta * negative)
}

/// Overlay result for one design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlaidPoint {
    pub point: DesignPoint,
    pub mass_delta: MassDelta,
    pub inertia_delta: InertiaDelta,
    pub maf: f64,
}

/// Applies overlays to every point with specs from [`InertiaSpec::from_design`].
pub fn apply_overlays(points: &[DesignPoint], subject: &Subject, params: &OverlayParams) -> Result<(Vec<OverlaidPoint>, Front)> {
    apply_overlays_with(points, subject, params, InertiaSpec::from_design)
}

/// Recomputes each point's reduction with the mass/inertia penalties added
/// to its assisted rate, swaps in regeneration-adjusted power, then refilters
/// the whole set.
pub fn apply_overlays_with(
    points: &[DesignPoint],
    subject: &Subject,
    params: &OverlayParams,
    spec_of: impl Fn(&ExoDesign) -> InertiaSpec,
) -> Result<(Vec<OverlaidPoint>, Front)> {
    params.validate()?;
    let overlaid = points
        .iter()
        .map(|p| {
            let spec = spec_of(&p.design);
            let mass_delta = browning_mass_delta(&spec);
            let inertia_delta = browning_inertia_delta(&spec, subject, p.unassisted_rate)?;
            let penalty = if params.mass_inertia { mass_delta.total + inertia_delta.total } else { 0.0 };
            let mut point = p.clone();
            point.metabolic_reduction = metabolic_reduction(p.report.gross_metabolic_rate + penalty, p.unassisted_rate)?;
            point.abs_power = regen_adjust(&p.report, params.regen_eta)?;
            let maf = maf(
                p.report.positive_power,
                p.report.negative_power,
                spec.location_masses(),
                spec.location_inertias(),
                subject.mass,
                params,
            );
            Ok(OverlaidPoint {
                point,
                mass_delta,
                inertia_delta,
                maf,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let adjusted: Vec<DesignPoint> = overlaid.iter().map(|o| o.point.clone()).collect();
    let front = dominance_filter(&adjusted)?;
    Ok((overlaid, front))
}
