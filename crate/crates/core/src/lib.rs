//! Simulation-based multi-criteria design of lower-limb exoskeletons.
//!
//! The crate resolves muscle redundancy under assistive torques, sweeps the
//! actuator torque limits of mono- and bi-articular devices to build Pareto
//! fronts of metabolic reduction against device power, and superposes
//! regeneration and mass/inertia effects on those fronts.
//!
//! Pipeline, module by module:
//!
//! * [`gait`] – gait cycles, anthropometry, gait phases, synthetic data
//! * [`kinematics`] – device variants, velocity/torque maps, forward kinematics
//! * [`redundancy`] – per-sample static optimization (built on [`qp`])
//! * [`energetics`] – metabolic rate and actuator power bookkeeping
//! * [`reactions`] – planar Newton-Euler joint reaction loads
//! * [`pareto`] – torque-limit sweep and dominance filter
//! * [`overlay`] – regeneration, mass/inertia penalties and augmentation factor
//! * [`stats`] – phase-wise RMSE, peak-to-peak difference, median/IQR
//! * [`pipeline`] – end-to-end run writing CSV, JSON and SVG artifacts

pub mod energetics;
pub mod error;
pub mod gait;
pub mod io;
pub mod kinematics;
pub mod overlay;
pub mod pareto;
pub mod pipeline;
pub mod qp;
pub mod reactions;
pub mod redundancy;
pub mod stats;
pub mod svg;

pub use error::{Error, Result};
pub use gait::{Condition, GaitCycle, GaitPhase, Joint, PhaseTable, Subject};
pub use kinematics::{ExoDesign, ExoVariant, JointVec};
pub use redundancy::{AssistSolution, MuscleSet, SolverWeights};
