//! Gait-cycle trajectories, subject anthropometry and gait phases.
//!
//! Angle convention: all joint angles are relative rotations measured in one
//! planar sense (counter-clockwise positive, subject walking toward +x).
//! The hip angle rotates the femur relative to the torso, the knee angle the
//! tibia relative to the femur, the ankle angle the foot relative to the tibia.
//! Hip flexion, knee extension and ankle dorsiflexion are therefore positive,
//! and a flexed knee has a negative angle.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, NumericTable};

pub const DEFAULT_SAMPLES: usize = 101;
pub const GRAVITY: f64 = 9.81;

/// Joints of the sagittal leg model, ordered hip to ankle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Joint {
    Hip,
    Knee,
    Ankle,
}

impl Joint {
    pub const ALL: [Joint; 3] = [Joint::Hip, Joint::Knee, Joint::Ankle];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Joint::Hip => "hip",
            Joint::Knee => "knee",
            Joint::Ankle => "ankle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    NoLoad,
    Loaded,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::NoLoad, Condition::Loaded];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::NoLoad => "noload",
            Condition::Loaded => "loaded",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "noload" => Ok(Condition::NoLoad),
            "loaded" => Ok(Condition::Loaded),
            other => Err(Error::config("condition", format!("unknown condition `{}`", other))),
        }
    }
}

/// One rigid body segment of the leg. `com` is measured from the proximal joint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length: f64,
    pub mass: f64,
    pub com: f64,
    /// Moment of inertia about the proximal joint, kg·m².
    pub inertia_proximal: f64,
}

impl Segment {
    pub fn inertia_com(&self) -> f64 {
        self.inertia_proximal - self.mass * self.com * self.com
    }
}

/// Subject anthropometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub mass: f64,
    pub height: f64,
    pub thigh: Segment,
    pub shank: Segment,
    pub foot: Segment,
    /// Inertia of the whole unloaded leg about the hip, kg·m².
    pub unloaded_leg_inertia: f64,
}

impl Default for Subject {
    fn default() -> Self {
        Subject::from_anthropometry(75.0, 1.75)
    }
}

impl Subject {
    /// Builds a subject from body mass and height using standard segment
    /// proportions (length/height, mass/body mass, CoM and radius of gyration
    /// as fractions of segment length).
    pub fn from_anthropometry(mass: f64, height: f64) -> Self {
        let segment = |len_frac: f64, mass_frac: f64, com_frac: f64, gyration_frac: f64| {
            let length = len_frac * height;
            let m = mass_frac * mass;
            let com = com_frac * length;
            let k = gyration_frac * length;
            Segment {
                length,
                mass: m,
                com,
                inertia_proximal: m * (k * k + com * com),
            }
        };
        let thigh = segment(0.245, 0.100, 0.433, 0.323);
        let shank = segment(0.246, 0.0465, 0.433, 0.302);
        let foot = segment(0.152, 0.0145, 0.5, 0.475);

        // Straight leg, foot horizontal.
        let shank_com_from_hip = thigh.length + shank.com;
        let leg_length = thigh.length + shank.length;
        let foot_com_sq = leg_length * leg_length + foot.com * foot.com;
        let unloaded_leg_inertia = thigh.inertia_proximal
            + shank.inertia_com()
            + shank.mass * shank_com_from_hip * shank_com_from_hip
            + foot.inertia_com()
            + foot.mass * foot_com_sq;

        Subject {
            mass,
            height,
            thigh,
            shank,
            foot,
            unloaded_leg_inertia,
        }
    }

    pub fn leg_mass(&self) -> f64 {
        self.thigh.mass + self.shank.mass + self.foot.mass
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("height", self.height),
            ("unloaded_leg_inertia", self.unloaded_leg_inertia),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("subject {} must be positive, got {}", name, v)));
            }
        }
        for (name, s) in [("thigh", &self.thigh), ("shank", &self.shank), ("foot", &self.foot)] {
            if !(s.length > 0.0 && s.mass > 0.0 && s.inertia_proximal > 0.0) {
                return Err(Error::Domain(format!("subject {} segment must have positive length, mass and inertia", name)));
            }
        }
        Ok(())
    }
}

/// Units of the net joint moment columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentUnits {
    /// N·m per kg body mass.
    PerKg,
    /// Raw N·m.
    Raw,
}

/// One time-normalized stride.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitCycle {
    /// Sample grid, % gait cycle, 0 to 100 inclusive.
    pub pct: Vec<f64>,
    /// Joint angles, rad, indexed by [`Joint::index`].
    pub angles: [Vec<f64>; 3],
    /// Joint angular velocities, rad/s.
    pub velocities: [Vec<f64>; 3],
    /// Net joint moments, see `moment_units`.
    pub moments: [Vec<f64>; 3],
    /// Ground reaction force, N/kg.
    pub grf_x: Vec<f64>,
    pub grf_y: Vec<f64>,
    /// Toe-off, % gait cycle.
    pub toe_off: f64,
    /// Stride duration, s.
    pub stride: f64,
    pub condition: Condition,
    pub subject_mass: f64,
    pub moment_units: MomentUnits,
}

pub const GAIT_COLUMNS: [&str; 12] = [
    "pct",
    "hip_angle_rad",
    "knee_angle_rad",
    "ankle_angle_rad",
    "hip_vel_rad_s",
    "knee_vel_rad_s",
    "ankle_vel_rad_s",
    "hip_moment_nm_kg",
    "knee_moment_nm_kg",
    "ankle_moment_nm_kg",
    "grf_x_n_kg",
    "grf_y_n_kg",
];

/// Column set for files carrying raw N·m moments; normalized by subject mass on load.
pub const GAIT_COLUMNS_RAW_MOMENTS: [&str; 12] = [
    "pct",
    "hip_angle_rad",
    "knee_angle_rad",
    "ankle_angle_rad",
    "hip_vel_rad_s",
    "knee_vel_rad_s",
    "ankle_vel_rad_s",
    "hip_moment_nm",
    "knee_moment_nm",
    "ankle_moment_nm",
    "grf_x_n_kg",
    "grf_y_n_kg",
];

impl GaitCycle {
    pub fn len(&self) -> usize {
        self.pct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pct.is_empty()
    }

    /// Time of each sample, s.
    pub fn times(&self) -> Vec<f64> {
        self.pct.iter().map(|p| p / 100.0 * self.stride).collect()
    }

    /// Net joint moment in N·m at sample `i`.
    pub fn moment_nm(&self, joint: Joint, i: usize) -> f64 {
        let m = self.moments[joint.index()][i];
        match self.moment_units {
            MomentUnits::PerKg => m * self.subject_mass,
            MomentUnits::Raw => m,
        }
    }

    /// Returns a copy with mass-normalized moments. Idempotent.
    pub fn normalized(&self) -> GaitCycle {
        let mut out = self.clone();
        if self.moment_units == MomentUnits::Raw {
            for series in out.moments.iter_mut() {
                for v in series.iter_mut() {
                    *v /= self.subject_mass;
                }
            }
            out.moment_units = MomentUnits::PerKg;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n < 3 {
            return Err(Error::Format(format!("gait cycle needs at least 3 samples, got {}", n)));
        }
        let lens = self
            .angles
            .iter()
            .chain(&self.velocities)
            .chain(&self.moments)
            .map(Vec::len)
            .chain([self.grf_x.len(), self.grf_y.len()]);
        for len in lens {
            if len != n {
                return Err(Error::Format(format!("trajectory length {} differs from grid length {}", len, n)));
            }
        }
        check_grid(&self.pct)?;
        for row in 0..n {
            let mut values = vec![self.pct[row], self.grf_x[row], self.grf_y[row]];
            for j in 0..3 {
                values.extend([self.angles[j][row], self.velocities[j][row], self.moments[j][row]]);
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data {
                    row,
                    message: "non-finite value in trajectory".into(),
                });
            }
        }
        if !(self.toe_off > 50.0 && self.toe_off < 75.0) {
            return Err(Error::Domain(format!("toe-off {}% outside (50, 75)", self.toe_off)));
        }
        if !(self.stride > 0.0) {
            return Err(Error::Domain(format!("stride duration must be positive, got {}", self.stride)));
        }
        if !(self.subject_mass > 0.0) {
            return Err(Error::Domain(format!("subject mass must be positive, got {}", self.subject_mass)));
        }
        Ok(())
    }

    /// Linear resampling onto a uniform `n`-point grid over 0–100 %.
    pub fn resample(&self, n: usize) -> GaitCycle {
        let grid = uniform_grid(n);
        let interp = |ys: &Vec<f64>| -> Vec<f64> { grid.iter().map(|&x| interp_linear(&self.pct, ys, x)).collect() };
        GaitCycle {
            angles: [interp(&self.angles[0]), interp(&self.angles[1]), interp(&self.angles[2])],
            velocities: [interp(&self.velocities[0]), interp(&self.velocities[1]), interp(&self.velocities[2])],
            moments: [interp(&self.moments[0]), interp(&self.moments[1]), interp(&self.moments[2])],
            grf_x: interp(&self.grf_x),
            grf_y: interp(&self.grf_y),
            pct: grid,
            ..self.clone()
        }
    }

    /// Largest deviation between the stored velocities and a periodic central
    /// difference of the angles, rad/s.
    pub fn max_velocity_inconsistency(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..3 {
            let fd = periodic_derivative(&self.angles[j], self.stride);
            for (a, b) in fd.iter().zip(&self.velocities[j]) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    pub fn phases(&self) -> Result<PhaseTable> {
        phase_bounds(self.toe_off)
    }
}

/// `n` evenly spaced samples from 0 to 100 %.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 100.0 * i as f64 / (n - 1) as f64).collect()
}

fn check_grid(pct: &[f64]) -> Result<()> {
    for (i, w) in pct.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            let what = if w[1] == w[0] { "duplicate sample" } else { "decreasing grid" };
            return Err(Error::Format(format!("% grid not strictly increasing at row {} ({}: {} then {})", i + 1, what, w[0], w[1])));
        }
    }
    let (first, last) = (pct[0], pct[pct.len() - 1]);
    if first.abs() > 1e-9 || (last - 100.0).abs() > 1e-9 {
        return Err(Error::Format(format!("% grid must span 0 to 100, got {} to {}", first, last)));
    }
    Ok(())
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let hi = xs.partition_point(|&v| v < x).clamp(1, xs.len() - 1);
    let lo = hi - 1;
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}

/// Central difference of a periodic series sampled on a closed 0–100 % grid
/// (first and last samples coincide). `period` is the stride duration.
pub fn periodic_derivative(values: &[f64], period: f64) -> Vec<f64> {
    let n = values.len();
    let m = n - 1; // distinct samples
    let dt = period / m as f64;
    (0..n)
        .map(|i| {
            let k = i % m;
            let next = values[(k + 1) % m];
            let prev = values[(k + m - 1) % m];
            (next - prev) / (2.0 * dt)
        })
        .collect()
}

fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta")
}

/// Loads a gait CSV and its `.meta` sidecar, validates it and resamples it to
/// [`DEFAULT_SAMPLES`] if needed.
pub fn load_gait_csv(path: &Path) -> Result<GaitCycle> {
    let table = NumericTable::read(path)?;
    let raw = table.headers.iter().any(|h| h == "hip_moment_nm");
    let expected: &[&str] = if raw { &GAIT_COLUMNS_RAW_MOMENTS } else { &GAIT_COLUMNS };
    for col in expected {
        table.column_index(col)?;
    }
    if table.headers.len() != expected.len() || table.headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Schema(format!("header must be exactly `{}`", expected.join(","))));
    }
    if table.rows.len() < 3 {
        return Err(Error::Format(format!("need at least 3 samples, got {}", table.rows.len())));
    }
    for (row, values) in table.rows.iter().enumerate() {
        if let Some(col) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::Data {
                row,
                message: format!("NaN in column `{}`", expected[col]),
            });
        }
    }
    let col = |i: usize| -> Vec<f64> { table.rows.iter().map(|r| r[i]).collect() };
    let pct = col(0);
    check_grid(&pct)?;

    let meta = io::read_key_values(&meta_path(path))?;
    let get = |key: &str| -> Result<&String> { meta.get(key).ok_or_else(|| Error::config(key, "missing from gait metadata")) };
    let subject_mass = io::parse_f64("subject_mass_kg", get("subject_mass_kg")?)?;
    let toe_off = io::parse_f64("toe_off_pct", get("toe_off_pct")?)?;
    let stride = io::parse_f64("stride_s", get("stride_s")?)?;
    let condition: Condition = get("condition")?.parse()?;

    let gait = GaitCycle {
        pct,
        angles: [col(1), col(2), col(3)],
        velocities: [col(4), col(5), col(6)],
        moments: [col(7), col(8), col(9)],
        grf_x: col(10),
        grf_y: col(11),
        toe_off,
        stride,
        condition,
        subject_mass,
        moment_units: if raw { MomentUnits::Raw } else { MomentUnits::PerKg },
    }
    .normalized();
    gait.validate()?;
    Ok(if gait.len() == DEFAULT_SAMPLES { gait } else { gait.resample(DEFAULT_SAMPLES) })
}

/// Writes the gait CSV and its `.meta` sidecar next to it.
pub fn write_gait_csv(gait: &GaitCycle, path: &Path) -> Result<()> {
    let headers = match gait.moment_units {
        MomentUnits::PerKg => GAIT_COLUMNS,
        MomentUnits::Raw => GAIT_COLUMNS_RAW_MOMENTS,
    };
    let rows = (0..gait.len())
        .map(|i| {
            vec![
                gait.pct[i],
                gait.angles[0][i],
                gait.angles[1][i],
                gait.angles[2][i],
                gait.velocities[0][i],
                gait.velocities[1][i],
                gait.velocities[2][i],
                gait.moments[0][i],
                gait.moments[1][i],
                gait.moments[2][i],
                gait.grf_x[i],
                gait.grf_y[i],
            ]
        })
        .collect();
    NumericTable {
        headers: headers.iter().map(|s| s.to_string()).collect(),
        rows,
    }
    .write(path)?;
    io::write_key_values(
        &meta_path(path),
        &[
            ("subject_mass_kg", io::fmt_csv(gait.subject_mass)),
            ("toe_off_pct", io::fmt_csv(gait.toe_off)),
            ("stride_s", io::fmt_csv(gait.stride)),
            ("condition", gait.condition.to_string()),
        ],
    )
}

/// Truncated Fourier series `c0 + Σ A_k cos(kφ − φ_k)`.
#[derive(Debug, Clone, Copy)]
struct Harmonics {
    offset: f64,
    terms: [(f64, f64); 3],
}

impl Harmonics {
    fn value(&self, phi: f64) -> f64 {
        self.offset
            + self
                .terms
                .iter()
                .enumerate()
                .map(|(k, &(amp, phase))| amp * ((k + 1) as f64 * phi - phase).cos())
                .sum::<f64>()
    }

    /// d/dφ
    fn slope(&self, phi: f64) -> f64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(k, &(amp, phase))| {
                let k = (k + 1) as f64;
                -k * amp * (k * phi - phase).sin()
            })
            .sum()
    }

    fn perturbed(&self, rng: &mut ChaCha8Rng) -> Harmonics {
        let mut out = *self;
        for term in out.terms.iter_mut() {
            term.0 *= 1.0 + rng.gen_range(-0.03..0.03);
            term.1 += rng.gen_range(-0.03..0.03);
        }
        out
    }
}

// Hip flexion angle, rad.
const HIP_ANGLE: Harmonics = Harmonics {
    offset: 0.08,
    terms: [(0.36, 0.2), (0.04, 1.0), (0.0, 0.0)],
};
// Knee flexion, rad; the stored knee angle is its negative.
const KNEE_FLEXION: Harmonics = Harmonics {
    offset: 0.3797,
    terms: [(0.3125, -1.8805), (0.1978, 2.4008), (0.0207, 1.9599)],
};
const ANKLE_ANGLE: Harmonics = Harmonics {
    offset: -0.0179,
    terms: [(0.0463, 1.6895), (0.1104, -1.4787), (0.0393, 1.8402)],
};
// Net moments, N·m/kg, same sign convention as the angles.
const HIP_MOMENT: Harmonics = Harmonics {
    offset: 0.0025,
    terms: [(0.5947, -2.9187), (0.1478, -1.1339), (0.0543, -2.1518)],
};
const KNEE_MOMENT: Harmonics = Harmonics {
    offset: 0.0182,
    terms: [(0.1304, 1.2152), (0.2320, 1.9837), (0.0799, 2.4990)],
};
const ANKLE_MOMENT: Harmonics = Harmonics {
    offset: -0.4345,
    terms: [(0.6388, -0.7134), (0.2186, 2.0583), (0.1383, -0.6539)],
};

const LOAD_MASS_KG: f64 = 38.0;
const LOADED_MOMENT_SCALE: f64 = 1.35;
const LOADED_PHASE_SHIFT_PCT: f64 = 2.0;

/// Deterministic synthetic stride on the default 101-sample grid.
pub fn synth_gait(seed: u64, condition: Condition) -> GaitCycle {
    synth_gait_with_samples(seed, condition, DEFAULT_SAMPLES)
}

/// Deterministic synthetic stride; velocities are the exact time derivatives
/// of the generated angle curves.
pub fn synth_gait_with_samples(seed: u64, condition: Condition, samples: usize) -> GaitCycle {
    let subject_mass = Subject::default().mass;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hip = HIP_ANGLE.perturbed(&mut rng);
    let knee = KNEE_FLEXION.perturbed(&mut rng);
    let ankle = ANKLE_ANGLE.perturbed(&mut rng);
    let hip_m = HIP_MOMENT.perturbed(&mut rng);
    let knee_m = KNEE_MOMENT.perturbed(&mut rng);
    let ankle_m = ANKLE_MOMENT.perturbed(&mut rng);

    let (stride, toe_off, shift, moment_scale, grf_scale) = match condition {
        Condition::NoLoad => (1.10, 60.0, 0.0, 1.0, 1.0),
        Condition::Loaded => (
            1.15,
            62.0,
            LOADED_PHASE_SHIFT_PCT,
            LOADED_MOMENT_SCALE,
            1.0 + LOAD_MASS_KG / subject_mass,
        ),
    };
    let phase_rate = TAU / stride; // dφ/dt

    let pct = uniform_grid(samples);
    let n = pct.len();
    let mut gait = GaitCycle {
        pct: pct.clone(),
        angles: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        velocities: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        moments: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        grf_x: vec![0.0; n],
        grf_y: vec![0.0; n],
        toe_off,
        stride,
        condition,
        subject_mass,
        moment_units: MomentUnits::PerKg,
    };
    for (i, &p) in pct.iter().enumerate() {
        let phi = TAU * (p - shift) / 100.0;
        gait.angles[0][i] = hip.value(phi);
        gait.angles[1][i] = -knee.value(phi);
        gait.angles[2][i] = ankle.value(phi);
        gait.velocities[0][i] = phase_rate * hip.slope(phi);
        gait.velocities[1][i] = -phase_rate * knee.slope(phi);
        gait.velocities[2][i] = phase_rate * ankle.slope(phi);
        gait.moments[0][i] = moment_scale * hip_m.value(phi);
        gait.moments[1][i] = moment_scale * knee_m.value(phi);
        gait.moments[2][i] = moment_scale * ankle_m.value(phi);

        // Double-hump vertical force and braking/propulsion shear during stance.
        if p < toe_off {
            let s = p / toe_off;
            gait.grf_y[i] = grf_scale * GRAVITY * (1.0 * (PI * s).sin() + 0.15 * (3.0 * PI * s).sin());
            gait.grf_x[i] = -grf_scale * GRAVITY * 0.2 * (TAU * s).sin();
        }
    }
    gait
}

/// Perry's seven gait sub-phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitPhase {
    LoadingResponse,
    MidStance,
    TerminalStance,
    PreSwing,
    InitialSwing,
    MidSwing,
    TerminalSwing,
}

impl GaitPhase {
    pub const ALL: [GaitPhase; 7] = [
        GaitPhase::LoadingResponse,
        GaitPhase::MidStance,
        GaitPhase::TerminalStance,
        GaitPhase::PreSwing,
        GaitPhase::InitialSwing,
        GaitPhase::MidSwing,
        GaitPhase::TerminalSwing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GaitPhase::LoadingResponse => "loading_response",
            GaitPhase::MidStance => "mid_stance",
            GaitPhase::TerminalStance => "terminal_stance",
            GaitPhase::PreSwing => "pre_swing",
            GaitPhase::InitialSwing => "initial_swing",
            GaitPhase::MidSwing => "mid_swing",
            GaitPhase::TerminalSwing => "terminal_swing",
        }
    }
}

/// Stance sub-phase boundaries at the reference 60 % toe-off.
const PERRY_STANCE: [f64; 5] = [0.0, 10.0, 30.0, 50.0, 60.0];
const PERRY_TOE_OFF: f64 = 60.0;

/// Contiguous `[start, end)` intervals of the seven phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTable {
    pub toe_off: f64,
    /// Eight boundaries; phase `k` spans `[bounds[k], bounds[k + 1])`.
    pub bounds: [f64; 8],
}

impl PhaseTable {
    pub fn interval(&self, phase: GaitPhase) -> (f64, f64) {
        let k = phase as usize;
        (self.bounds[k], self.bounds[k + 1])
    }

    /// Phase containing `pct`; the closing 100 % sample belongs to terminal swing.
    pub fn phase_at(&self, pct: f64) -> GaitPhase {
        let k = self.bounds[1..7].partition_point(|&b| b <= pct);
        GaitPhase::ALL[k]
    }

    /// Indices of `grid` samples inside `phase`.
    pub fn sample_indices(&self, grid: &[f64], phase: GaitPhase) -> Vec<usize> {
        grid.iter()
            .enumerate()
            .filter(|(_, &p)| self.phase_at(p) == phase)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Phase table for a toe-off in (50, 75) %: stance boundaries scale linearly
/// with toe-off, swing is split into thirds.
pub fn phase_bounds(toe_off: f64) -> Result<PhaseTable> {
    if !(toe_off > 50.0 && toe_off < 75.0) {
        return Err(Error::Domain(format!("toe-off {}% outside (50, 75)", toe_off)));
    }
    let scale = toe_off / PERRY_TOE_OFF;
    let mut bounds = [0.0; 8];
    for (b, &perry) in bounds.iter_mut().zip(&PERRY_STANCE) {
        *b = perry * scale;
    }
    bounds[4] = toe_off;
    let swing = 100.0 - toe_off;
    bounds[5] = toe_off + swing / 3.0;
    bounds[6] = toe_off + 2.0 * swing / 3.0;
    bounds[7] = 100.0;
    Ok(PhaseTable { toe_off, bounds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_gait_is_deterministic() {
        let a = synth_gait(7, Condition::NoLoad);
        let b = synth_gait(7, Condition::NoLoad);
        assert_eq!(a, b);
        let c = synth_gait(8, Condition::NoLoad);
        assert_ne!(a, c);
        a.validate().unwrap();
        assert_eq!(a.len(), 101);
    }

    #[test]
    fn loaded_moment_peak_exceeds_noload() {
        let peak = |g: &GaitCycle| {
            g.moments
                .iter()
                .flatten()
                .fold(0.0_f64, |m, v| m.max(v.abs()))
        };
        let noload = synth_gait(7, Condition::NoLoad);
        let loaded = synth_gait(7, Condition::Loaded);
        assert!(peak(&loaded) > peak(&noload));
        assert_ne!(noload.toe_off, loaded.toe_off);
    }

    #[test]
    fn synthetic_angles_stay_in_walking_bands() {
        for seed in 0..50 {
            let g = synth_gait(seed, Condition::Loaded);
            let deg = |v: f64| v.to_degrees();
            for i in 0..g.len() {
                assert!(deg(g.angles[0][i]).abs() <= 30.0);
                let knee_flexion = -deg(g.angles[1][i]);
                assert!((0.0..=60.0).contains(&knee_flexion), "{}", knee_flexion);
                assert!(deg(g.angles[2][i]).abs() <= 20.0);
            }
        }
    }

    #[test]
    fn velocities_match_finite_differences() {
        let g = synth_gait_with_samples(7, Condition::NoLoad, 10001);
        assert!(g.max_velocity_inconsistency() < 1e-6, "{}", g.max_velocity_inconsistency());
    }

    #[test]
    fn phase_bounds_at_reference_toe_off() {
        let t = phase_bounds(60.0).unwrap();
        assert_eq!(t.interval(GaitPhase::PreSwing), (50.0, 60.0));
        assert_eq!(t.interval(GaitPhase::LoadingResponse), (0.0, 10.0));
        let (s, e) = t.interval(GaitPhase::InitialSwing);
        assert!((s - 60.0).abs() < 1e-12 && (e - 73.333_333_333_333_33).abs() < 1e-9);
    }

    #[test]
    fn phase_bounds_scale_with_toe_off() {
        let t = phase_bounds(66.0).unwrap();
        let expected = [0.0, 11.0, 33.0, 55.0, 66.0];
        for (b, e) in t.bounds.iter().zip(expected) {
            assert!((b - e).abs() < 1e-12);
        }
        assert_eq!(t.phase_at(10.9), GaitPhase::LoadingResponse);
        assert_eq!(t.phase_at(11.0), GaitPhase::MidStance);
        assert_eq!(t.phase_at(100.0), GaitPhase::TerminalSwing);
    }

    #[test]
    fn phase_bounds_reject_out_of_range() {
        assert!(matches!(phase_bounds(50.0), Err(Error::Domain(_))));
        assert!(matches!(phase_bounds(80.0), Err(Error::Domain(_))));
    }

    #[test]
    fn normalization_is_idempotent() {
        let mut g = synth_gait(3, Condition::NoLoad);
        g.moment_units = MomentUnits::Raw;
        let once = g.normalized();
        assert_eq!(once.normalized(), once);
        assert!((once.moments[0][5] * g.subject_mass - g.moments[0][5]).abs() < 1e-12);
    }

    #[test]
    fn subject_anthropometry_is_positive() {
        let s = Subject::default();
        s.validate().unwrap();
        assert!(s.unloaded_leg_inertia > s.thigh.inertia_proximal);
        assert!(s.thigh.inertia_com() > 0.0);
    }

    #[test]
    fn resampling_preserves_linear_data() {
        let mut g = synth_gait_with_samples(1, Condition::NoLoad, 51);
        g.grf_x = g.pct.iter().map(|p| 2.0 * p + 1.0).collect();
        let r = g.resample(101);
        assert_eq!(r.len(), 101);
        for (p, v) in r.pct.iter().zip(&r.grf_x) {
            assert!((v - (2.0 * p + 1.0)).abs() < 1e-9);
        }
    }
}
