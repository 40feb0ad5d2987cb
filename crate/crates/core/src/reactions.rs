//! Planar Newton-Euler joint reaction loads of a foot–shank–thigh chain.
//!
//! The recursion runs distal to proximal, starting at the foot with the
//! ground reaction force applied at the foot CoM. Assistive actuator torques
//! are appended as external torques on the segments they act on:
//!
//! * hip actuator (both devices): action on the thigh, reaction on the torso
//! * mono-articular knee actuator: action on the shank, reaction on the thigh
//! * bi-articular knee actuator: action on the shank, reaction on the torso
//!
//! Reported loads are what the distal segment exerts on the proximal one at
//! each joint, in the lab frame (x anterior, y vertical), normalized by body
//! mass. The moment is the intersegmental moment carried by the biological
//! joint, i.e. net moment minus the device share. The hip joint centre is
//! treated as non-accelerating.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{periodic_derivative, GaitCycle, GaitPhase, Joint, PhaseTable, Subject, GRAVITY};
use crate::io::NumericTable;
use crate::kinematics::ExoVariant;
use crate::redundancy::AssistSolution;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointLoad {
    /// Anterior/posterior force, N/kg.
    pub fx: f64,
    /// Vertical force, N/kg.
    pub fy: f64,
    /// Sagittal moment, N·m/kg.
    pub mz: f64,
}

impl JointLoad {
    pub fn component(&self, c: LoadComponent) -> f64 {
        match c {
            LoadComponent::Fx => self.fx,
            LoadComponent::Fy => self.fy,
            LoadComponent::Mz => self.mz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadComponent {
    Fx,
    Fy,
    Mz,
}

impl LoadComponent {
    pub const ALL: [LoadComponent; 3] = [LoadComponent::Fx, LoadComponent::Fy, LoadComponent::Mz];

    fn column_suffix(self) -> &'static str {
        match self {
            LoadComponent::Fx => "fx_n_kg",
            LoadComponent::Fy => "fy_n_kg",
            LoadComponent::Mz => "mz_nm_kg",
        }
    }
}

/// Reaction loads over a gait cycle, indexed `[sample][Joint::index]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionSeries {
    pub pct: Vec<f64>,
    pub loads: Vec<[JointLoad; 3]>,
}

impl ReactionSeries {
    pub fn len(&self) -> usize {
        self.pct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pct.is_empty()
    }

    pub fn series(&self, joint: Joint, component: LoadComponent) -> Vec<f64> {
        self.loads.iter().map(|l| l[joint.index()].component(component)).collect()
    }

    pub fn columns() -> Vec<String> {
        let mut cols = vec!["pct".to_string()];
        for j in Joint::ALL {
            for c in LoadComponent::ALL {
                cols.push(format!("{}_{}", j.name(), c.column_suffix()));
            }
        }
        cols
    }

    pub fn to_table(&self) -> NumericTable {
        let rows = self
            .pct
            .iter()
            .zip(&self.loads)
            .map(|(p, l)| {
                let mut row = vec![*p];
                for j in Joint::ALL {
                    row.extend([l[j.index()].fx, l[j.index()].fy, l[j.index()].mz]);
                }
                row
            })
            .collect();
        NumericTable {
            headers: Self::columns(),
            rows,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.to_table().write(path)
    }

    pub fn read_csv(path: &Path) -> Result<ReactionSeries> {
        let table = NumericTable::read(path)?;
        let cols = Self::columns();
        let idx: Vec<usize> = cols.iter().map(|c| table.column_index(c)).collect::<Result<_>>()?;
        let pct = table.rows.iter().map(|r| r[idx[0]]).collect();
        let loads = table
            .rows
            .iter()
            .map(|r| {
                let load = |j: usize| JointLoad {
                    fx: r[idx[1 + 3 * j]],
                    fy: r[idx[2 + 3 * j]],
                    mz: r[idx[3 + 3 * j]],
                };
                [load(0), load(1), load(2)]
            })
            .collect();
        Ok(ReactionSeries { pct, loads })
    }
}

type Vec2 = [f64; 2];

fn cross(r: Vec2, f: Vec2) -> f64 {
    r[0] * f[1] - r[1] * f[0]
}

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// Newton-Euler reactions with standard gravity.
pub fn newton_euler_reactions(gait: &GaitCycle, subject: &Subject, sol: Option<&AssistSolution>) -> Result<ReactionSeries> {
    newton_euler_reactions_with(gait, subject, sol, GRAVITY)
}

pub fn newton_euler_reactions_with(
    gait: &GaitCycle,
    subject: &Subject,
    sol: Option<&AssistSolution>,
    gravity: f64,
) -> Result<ReactionSeries> {
    let n = gait.len();
    if let Some(s) = sol {
        if s.len() != n || s.pct.iter().zip(&gait.pct).any(|(a, b)| a != b) {
            return Err(Error::Data {
                row: 0,
                message: format!("solution grid ({} samples) does not match gait grid ({} samples)", s.len(), n),
            });
        }
    }

    // Absolute segment angles and their rates.
    let q = &gait.angles;
    let qd = &gait.velocities;
    let theta_t: Vec<f64> = q[0].iter().map(|h| -FRAC_PI_2 + h).collect();
    let theta_s: Vec<f64> = theta_t.iter().zip(&q[1]).map(|(t, k)| t + k).collect();
    let theta_f: Vec<f64> = theta_s.iter().zip(&q[2]).map(|(s, a)| s + FRAC_PI_2 + a).collect();
    let omega_t = qd[0].clone();
    let omega_s: Vec<f64> = omega_t.iter().zip(&qd[1]).map(|(a, b)| a + b).collect();
    let omega_f: Vec<f64> = omega_s.iter().zip(&qd[2]).map(|(a, b)| a + b).collect();
    let alpha_t = periodic_derivative(&omega_t, gait.stride);
    let alpha_s = periodic_derivative(&omega_s, gait.stride);
    let alpha_f = periodic_derivative(&omega_f, gait.stride);

    let body = subject.mass;
    let g: Vec2 = [0.0, -gravity];
    let (th, sh, ft) = (&subject.thigh, &subject.shank, &subject.foot);
    let variant = sol.and_then(|s| s.design.as_ref()).map(|d| d.variant);

    let mut loads = Vec::with_capacity(n);
    for k in 0..n {
        // Point kinematics along one segment: position and acceleration at
        // distance r from its proximal joint.
        let along = |theta: f64, omega: f64, alpha: f64, r: f64| -> (Vec2, Vec2) {
            let (s, c) = theta.sin_cos();
            let pos = [r * c, r * s];
            let acc = [r * (-alpha * s - omega * omega * c), r * (alpha * c - omega * omega * s)];
            (pos, acc)
        };
        let (tt, ts, tf) = (theta_t[k], theta_s[k], theta_f[k]);
        let (wt, ws, wf) = (omega_t[k], omega_s[k], omega_f[k]);
        let (at, as_, af) = (alpha_t[k], alpha_s[k], alpha_f[k]);

        let p_hip: Vec2 = [0.0, 0.0];
        let (p_knee, a_knee) = along(tt, wt, at, th.length);
        let (c_t, a_ct) = along(tt, wt, at, th.com);
        let (d_ankle, da_ankle) = along(ts, ws, as_, sh.length);
        let p_ankle = [p_knee[0] + d_ankle[0], p_knee[1] + d_ankle[1]];
        let a_ankle = [a_knee[0] + da_ankle[0], a_knee[1] + da_ankle[1]];
        let (d_cs, da_cs) = along(ts, ws, as_, sh.com);
        let c_s = [p_knee[0] + d_cs[0], p_knee[1] + d_cs[1]];
        let a_cs = [a_knee[0] + da_cs[0], a_knee[1] + da_cs[1]];
        let (d_cf, da_cf) = along(tf, wf, af, ft.com);
        let c_f = [p_ankle[0] + d_cf[0], p_ankle[1] + d_cf[1]];
        let a_cf = [a_ankle[0] + da_cf[0], a_ankle[1] + da_cf[1]];

        let grf = [gait.grf_x[k] * body, gait.grf_y[k] * body];

        // Device torques on thigh and shank.
        let (tau_thigh, tau_shank) = match (sol, variant) {
            (Some(s), Some(v)) => {
                let t = s.exo_torques[k];
                if v == ExoVariant::Bi {
                    (t.hip, t.knee)
                } else {
                    (t.hip - t.knee, t.knee)
                }
            }
            _ => (0.0, 0.0),
        };

        // Weight minus inertial force of each segment.
        let net = |m: f64, a: Vec2| -> Vec2 { [m * g[0] - m * a[0], m * g[1] - m * a[1]] };
        let f_foot = net(ft.mass, a_cf);
        let f_shank = net(sh.mass, a_cs);
        let f_thigh = net(th.mass, a_ct);

        let l_ankle = [grf[0] + f_foot[0], grf[1] + f_foot[1]];
        let m_ankle = cross(sub(c_f, p_ankle), grf) + cross(sub(c_f, p_ankle), f_foot) - ft.inertia_com() * af + 0.0;

        let l_knee = [l_ankle[0] + f_shank[0], l_ankle[1] + f_shank[1]];
        let m_knee = m_ankle + cross(sub(p_ankle, p_knee), l_ankle) + cross(sub(c_s, p_knee), f_shank)
            - sh.inertia_com() * as_
            + tau_shank;

        let l_hip = [l_knee[0] + f_thigh[0], l_knee[1] + f_thigh[1]];
        let m_hip = m_knee + cross(sub(p_knee, p_hip), l_knee) + cross(sub(c_t, p_hip), f_thigh)
            - th.inertia_com() * at
            + tau_thigh;

        let per_kg = |f: Vec2, m: f64| JointLoad {
            fx: f[0] / body,
            fy: f[1] / body,
            mz: m / body,
        };
        loads.push([per_kg(l_hip, m_hip), per_kg(l_knee, m_knee), per_kg(l_ankle, m_ankle)]);
    }
    Ok(ReactionSeries {
        pct: gait.pct.clone(),
        loads,
    })
}

/// Peak reduction of one component in one phase; `None` when the unassisted
/// peak is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakReduction {
    pub joint: Joint,
    pub component: LoadComponent,
    pub phase: GaitPhase,
    pub percent: Option<f64>,
}

/// `100 (peak|unassisted| − peak|assisted|) / peak|unassisted|` per joint,
/// component and phase.
pub fn peak_reduction(assisted: &ReactionSeries, unassisted: &ReactionSeries, phases: &PhaseTable) -> Result<Vec<PeakReduction>> {
    if assisted.pct != unassisted.pct {
        return Err(Error::Data {
            row: 0,
            message: "assisted and unassisted reactions use different grids".into(),
        });
    }
    let mut out = Vec::new();
    for joint in Joint::ALL {
        for component in LoadComponent::ALL {
            let a = assisted.series(joint, component);
            let u = unassisted.series(joint, component);
            for phase in GaitPhase::ALL {
                let idx = phases.sample_indices(&unassisted.pct, phase);
                let peak = |s: &[f64]| idx.iter().map(|&i| s[i].abs()).fold(0.0, f64::max);
                let (pa, pu) = (peak(&a), peak(&u));
                let percent = if pu > 0.0 { Some(100.0 * (pu - pa) / pu) } else { None };
                out.push(PeakReduction {
                    joint,
                    component,
                    phase,
                    percent,
                });
            }
        }
    }
    Ok(out)
}
