//! Mono- and bi-articular exoskeleton configurations.
//!
//! The bi-articular device drives the femur and the tibia from the torso
//! through a parallelogram, so its actuator coordinates are absolute segment
//! rotations. The mono-articular device drives the hip and knee joints
//! directly. With `J = [[1, 0], [-1, 1]]`:
//!
//! ```text
//! ω_mono = J ω_bi        τ_bi = Jᵀ τ_mono
//! ```

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{GaitCycle, Joint, Subject};
use crate::io;

/// A (hip, knee) pair: velocities in rad/s or torques in N·m.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointVec {
    pub hip: f64,
    pub knee: f64,
}

impl JointVec {
    pub const ZERO: JointVec = JointVec { hip: 0.0, knee: 0.0 };

    pub fn new(hip: f64, knee: f64) -> Self {
        JointVec { hip, knee }
    }

    pub fn dot(self, other: JointVec) -> f64 {
        self.hip * other.hip + self.knee * other.knee
    }

    pub fn is_finite(self) -> bool {
        self.hip.is_finite() && self.knee.is_finite()
    }

    pub fn get(self, i: usize) -> f64 {
        match i {
            0 => self.hip,
            1 => self.knee,
            _ => panic!("JointVec index {} out of range", i),
        }
    }
}

impl Add for JointVec {
    type Output = JointVec;
    fn add(self, rhs: JointVec) -> JointVec {
        JointVec::new(self.hip + rhs.hip, self.knee + rhs.knee)
    }
}

impl Sub for JointVec {
    type Output = JointVec;
    fn sub(self, rhs: JointVec) -> JointVec {
        JointVec::new(self.hip - rhs.hip, self.knee - rhs.knee)
    }
}

impl Mul<f64> for JointVec {
    type Output = JointVec;
    fn mul(self, rhs: f64) -> JointVec {
        JointVec::new(self.hip * rhs, self.knee * rhs)
    }
}

/// Mono-articular actuator velocities from bi-articular ones: `J ω_bi`.
pub fn velocity_map(bi_vel: JointVec) -> JointVec {
    JointVec::new(bi_vel.hip, bi_vel.knee - bi_vel.hip)
}

/// Inverse of [`velocity_map`]: `J⁻¹ ω_mono`.
pub fn inverse_velocity_map(mono_vel: JointVec) -> JointVec {
    JointVec::new(mono_vel.hip, mono_vel.hip + mono_vel.knee)
}

/// Bi-articular actuator torques from mono-articular ones: `Jᵀ τ_mono`.
pub fn torque_map(mono_tau: JointVec) -> JointVec {
    JointVec::new(mono_tau.hip - mono_tau.knee, mono_tau.knee)
}

/// Joint-space moments produced by bi-articular actuator torques: `J⁻ᵀ τ_bi`.
pub fn inverse_torque_map(bi_tau: JointVec) -> JointVec {
    JointVec::new(bi_tau.hip + bi_tau.knee, bi_tau.knee)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExoVariant {
    /// Mono-articular, knee actuator at the knee.
    Mono,
    /// Bi-articular, both actuators at the waist.
    Bi,
    /// Mono-articular, knee actuator on the thigh near the hip.
    MonoKneeOnThigh,
    /// Mono-articular, knee actuator on the shank below the knee.
    MonoKneeOnShank,
}

impl ExoVariant {
    pub const ALL: [ExoVariant; 4] = [
        ExoVariant::Mono,
        ExoVariant::Bi,
        ExoVariant::MonoKneeOnThigh,
        ExoVariant::MonoKneeOnShank,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExoVariant::Mono => "mono",
            ExoVariant::Bi => "bi",
            ExoVariant::MonoKneeOnThigh => "mono_knee_on_thigh",
            ExoVariant::MonoKneeOnShank => "mono_knee_on_shank",
        }
    }

    pub fn is_bi(self) -> bool {
        self == ExoVariant::Bi
    }

    /// Joint-space moment produced per unit actuator torque; rows are
    /// (hip, knee) joints, columns are (hip, knee) actuators.
    pub fn joint_torque_matrix(self) -> [[f64; 2]; 2] {
        if self.is_bi() {
            [[1.0, 1.0], [0.0, 1.0]]
        } else {
            [[1.0, 0.0], [0.0, 1.0]]
        }
    }

    /// Joint-space moments from actuator torques.
    pub fn joint_moments(self, actuator: JointVec) -> JointVec {
        if self.is_bi() {
            inverse_torque_map(actuator)
        } else {
            actuator
        }
    }

    /// Actuator velocities from joint velocities.
    pub fn actuator_velocity(self, joint_vel: JointVec) -> JointVec {
        if self.is_bi() {
            inverse_velocity_map(joint_vel)
        } else {
            joint_vel
        }
    }
}

impl fmt::Display for ExoVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExoVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExoVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s.trim())
            .ok_or_else(|| Error::config("variant", format!("unknown variant `{}`", s.trim())))
    }
}

/// Link lengths of the exoskeleton mechanism, m. `a` is the thigh link and
/// `d + e` the shank-side link; `b` and `c` close the bi-articular
/// parallelogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkLengths {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl LinkLengths {
    pub fn from_subject(subject: &Subject) -> Self {
        let crank = 0.1;
        LinkLengths {
            a: subject.thigh.length,
            b: crank,
            c: subject.thigh.length,
            d: crank,
            e: subject.shank.length - crank,
        }
    }
}

/// Peak torque of the direct-drive motor, N·m.
pub const MOTOR_PEAK_TORQUE: f64 = 2.0;
/// Rotor inertia of the direct-drive motor, kg·m².
pub const MOTOR_ROTOR_INERTIA: f64 = 5.06e-4;
/// Mass of one actuation module, kg.
pub const ACTUATOR_MODULE_MASS: f64 = 1.5;
/// Distance of the shank link CoM below the knee, m.
const SHANK_LINK_COM_BELOW_KNEE: f64 = 0.18;

/// Mass placement of a device on one leg (the waist mass is for the whole
/// device). CoM distances are measured from the hip, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassPlacement {
    pub waist_mass: f64,
    pub thigh_mass: f64,
    pub thigh_com: f64,
    pub shank_mass: f64,
    pub shank_com: f64,
}

impl MassPlacement {
    /// Inertial layout of each variant given the subject's thigh length.
    pub fn for_variant(variant: ExoVariant, thigh_length: f64) -> Self {
        let shank_com = SHANK_LINK_COM_BELOW_KNEE + thigh_length;
        match variant {
            ExoVariant::Bi => MassPlacement {
                waist_mass: 4.5,
                thigh_mass: 1.0,
                thigh_com: 0.23,
                shank_mass: 0.9,
                shank_com,
            },
            ExoVariant::Mono => MassPlacement {
                waist_mass: 3.0,
                thigh_mass: 2.5,
                thigh_com: 0.30,
                shank_mass: 0.9,
                shank_com,
            },
            // Knee module moved from the distal thigh to 0.10 m below the hip.
            ExoVariant::MonoKneeOnThigh => {
                let link = 2.5 - ACTUATOR_MODULE_MASS;
                MassPlacement {
                    waist_mass: 3.0,
                    thigh_mass: 2.5,
                    thigh_com: (link * 0.23 + ACTUATOR_MODULE_MASS * 0.10) / 2.5,
                    shank_mass: 0.9,
                    shank_com,
                }
            }
            // Knee module moved onto the shank, 0.05 m below the knee.
            ExoVariant::MonoKneeOnShank => {
                let shank_mass = 0.9 + ACTUATOR_MODULE_MASS;
                MassPlacement {
                    waist_mass: 3.0,
                    thigh_mass: 1.0,
                    thigh_com: 0.23,
                    shank_mass,
                    shank_com: (0.9 * shank_com + ACTUATOR_MODULE_MASS * (thigh_length + 0.05)) / shank_mass,
                }
            }
        }
    }
}

/// One exoskeleton design: kinematics, torque limits and inertial layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExoDesign {
    pub variant: ExoVariant,
    /// Peak actuator torque limits (hip, knee), N·m. Infinite for an ideal device.
    pub peak: JointVec,
    pub links: Option<LinkLengths>,
    pub masses: MassPlacement,
    pub rotor_inertia: f64,
    pub motor_peak_torque: f64,
}

/// Torque grid of the sweep, N·m, in label order A..E.
pub const PEAK_TORQUE_GRID: [f64; 5] = [70.0, 60.0, 50.0, 40.0, 30.0];

impl ExoDesign {
    pub fn new(variant: ExoVariant, hip_peak: f64, knee_peak: f64, subject: &Subject) -> Self {
        ExoDesign {
            variant,
            peak: JointVec::new(hip_peak, knee_peak),
            links: Some(LinkLengths::from_subject(subject)),
            masses: MassPlacement::for_variant(variant, subject.thigh.length),
            rotor_inertia: MOTOR_ROTOR_INERTIA,
            motor_peak_torque: MOTOR_PEAK_TORQUE,
        }
    }

    /// Torque-unbounded device.
    pub fn ideal(variant: ExoVariant, subject: &Subject) -> Self {
        ExoDesign::new(variant, f64::INFINITY, f64::INFINITY, subject)
    }

    /// Two-character grid label, e.g. `Db` for (40, 60) N·m; `None` off-grid.
    pub fn label(&self) -> Option<String> {
        grid_label(self.peak.hip, self.peak.knee)
    }

    /// Gear ratio needed to reach the peak joint torque with the motor, at least 1.
    pub fn transmission_ratio(&self) -> JointVec {
        let ratio = |peak: f64| (peak / self.motor_peak_torque).max(1.0);
        JointVec::new(ratio(self.peak.hip), ratio(self.peak.knee))
    }

    /// Rotor inertia reflected through the transmission, kg·m².
    pub fn reflected_inertia(&self) -> JointVec {
        let r = self.transmission_ratio();
        JointVec::new(self.rotor_inertia * r.hip * r.hip, self.rotor_inertia * r.knee * r.knee)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak.hip >= 0.0 && self.peak.knee >= 0.0) {
            return Err(Error::config("peak", "peak torques must be non-negative"));
        }
        if !(self.rotor_inertia >= 0.0 && self.motor_peak_torque > 0.0) {
            return Err(Error::config("motor", "motor constants must be positive"));
        }
        let m = &self.masses;
        if [m.waist_mass, m.thigh_mass, m.thigh_com, m.shank_mass, m.shank_com].iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::config("masses", "masses and CoM distances must be non-negative"));
        }
        Ok(())
    }

    /// Loads a `key=value` design file. Unspecified keys fall back to the
    /// variant defaults for `subject`.
    pub fn load(path: &Path, subject: &Subject) -> Result<ExoDesign> {
        let kv = io::read_key_values(path)?;
        let variant: ExoVariant = kv
            .get("variant")
            .ok_or_else(|| Error::config("variant", "missing from design file"))?
            .parse()?;
        let num = |key: &str| -> Result<Option<f64>> { kv.get(key).map(|v| io::parse_f64(key, v)).transpose() };
        let hip = num("hip_peak_nm")?.unwrap_or(f64::INFINITY);
        let knee = num("knee_peak_nm")?.unwrap_or(f64::INFINITY);
        let mut design = ExoDesign::new(variant, hip, knee, subject);
        let mut links = design.links.unwrap();
        for (key, slot) in [
            ("l_a", &mut links.a),
            ("l_b", &mut links.b),
            ("l_c", &mut links.c),
            ("l_d", &mut links.d),
            ("l_e", &mut links.e),
        ] {
            if let Some(v) = num(key)? {
                *slot = v;
            }
        }
        design.links = Some(links);
        let m = &mut design.masses;
        for (key, slot) in [
            ("waist_mass_kg", &mut m.waist_mass),
            ("thigh_mass_kg", &mut m.thigh_mass),
            ("thigh_com_m", &mut m.thigh_com),
            ("shank_mass_kg", &mut m.shank_mass),
            ("shank_com_m", &mut m.shank_com),
        ] {
            if let Some(v) = num(key)? {
                *slot = v;
            }
        }
        if let Some(v) = num("rotor_inertia_kgm2")? {
            design.rotor_inertia = v;
        }
        const KNOWN: [&str; 14] = [
            "variant",
            "hip_peak_nm",
            "knee_peak_nm",
            "l_a",
            "l_b",
            "l_c",
            "l_d",
            "l_e",
            "waist_mass_kg",
            "thigh_mass_kg",
            "thigh_com_m",
            "shank_mass_kg",
            "shank_com_m",
            "rotor_inertia_kgm2",
        ];
        if let Some(unknown) = kv.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Error::config(unknown.clone(), "unknown design key"));
        }
        design.validate()?;
        Ok(design)
    }
}

/// Grid label for a (hip, knee) torque pair: 70→A/a … 30→E/e.
pub fn grid_label(hip: f64, knee: f64) -> Option<String> {
    let letter = |peak: f64| PEAK_TORQUE_GRID.iter().position(|&g| g == peak).map(|i| (b'A' + i as u8) as char);
    Some(format!("{}{}", letter(hip)?, letter(knee)?.to_ascii_lowercase()))
}

/// Inverse of [`grid_label`].
pub fn label_torques(label: &str) -> Option<JointVec> {
    let mut chars = label.chars();
    let (h, k) = (chars.next()?, chars.next()?);
    if chars.next().is_some() || !h.is_ascii_uppercase() || !k.is_ascii_lowercase() {
        return None;
    }
    let hi = (h as u8).checked_sub(b'A')? as usize;
    let ki = (k as u8).checked_sub(b'a')? as usize;
    Some(JointVec::new(*PEAK_TORQUE_GRID.get(hi)?, *PEAK_TORQUE_GRID.get(ki)?))
}

fn require_links(design: &ExoDesign) -> Result<LinkLengths> {
    design
        .links
        .ok_or_else(|| Error::config("lengths", "exoskeleton link lengths are not set"))
}

/// Planar endpoint position of the leg-side link, m.
///
/// For the bi-articular device `q` holds the absolute femur and tibia link
/// angles; for mono-articular devices the hip angle and the knee flexion,
/// the tibia link lying at `q.hip - q.knee`.
pub fn forward_kinematics(design: &ExoDesign, q: JointVec) -> Result<(f64, f64)> {
    let l = require_links(design)?;
    let distal = l.e + l.d;
    let distal_angle = if design.variant.is_bi() { q.knee } else { q.hip - q.knee };
    Ok((
        l.a * q.hip.cos() + distal * distal_angle.cos(),
        l.a * q.hip.sin() + distal * distal_angle.sin(),
    ))
}

/// Analytic 2×2 Jacobian of [`forward_kinematics`], rows (x, y), columns (q_hip, q_knee).
pub fn fk_jacobian(design: &ExoDesign, q: JointVec) -> Result<[[f64; 2]; 2]> {
    let l = require_links(design)?;
    let distal = l.e + l.d;
    Ok(if design.variant.is_bi() {
        [
            [-l.a * q.hip.sin(), -distal * q.knee.sin()],
            [l.a * q.hip.cos(), distal * q.knee.cos()],
        ]
    } else {
        let rel = q.hip - q.knee;
        [
            [-l.a * q.hip.sin() - distal * rel.sin(), distal * rel.sin()],
            [l.a * q.hip.cos() + distal * rel.cos(), -distal * rel.cos()],
        ]
    })
}

/// Per-sample actuator velocities (hip, knee actuators) for a gait cycle.
pub fn actuator_velocities(design: &ExoDesign, gait: &GaitCycle) -> Vec<JointVec> {
    let hip = &gait.velocities[Joint::Hip.index()];
    let knee = &gait.velocities[Joint::Knee.index()];
    hip.iter()
        .zip(knee)
        .map(|(&h, &k)| design.variant.actuator_velocity(JointVec::new(h, k)))
        .collect()
}
