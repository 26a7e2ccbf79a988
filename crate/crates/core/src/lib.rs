//! Dual quaternion pose-based visual servoing for grasping moving objects.
//!
//! * [`dq`]: quaternion and dual quaternion algebra ([`Pose`], [`Twist`]).
//! * [`kinematics`]: serial-chain FK, geometric Jacobian, damped inverse.
//! * [`servo`]: the logarithmic pose controller with null-space joint-limit
//!   avoidance and a Lyapunov monitor.
//! * [`grasp`]: LoCoMo scoring, vp-tree search, re-ranking and hysteresis.
//! * [`sim`]: scripted object trajectories and the closed-loop episode engine.
//! * [`io`]: file formats, CSV telemetry and the command line.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dq;
pub mod error;
pub mod grasp;
pub mod io;
pub mod kinematics;
pub mod servo;
pub mod sim;

pub use dq::{Pose, Twist};
pub use error::{Error, Result};
pub use kinematics::KinematicChain;
