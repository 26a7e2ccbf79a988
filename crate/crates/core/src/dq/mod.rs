//! Quaternion and dual quaternion algebra.
//!
//! Unit dual quaternions ([`Pose`]) represent rigid displacements and pure
//! dual quaternions ([`Twist`]) represent velocities. Every other module in the
//! crate is written in terms of these types.

mod dual;
mod quaternion;

pub use dual::{adjoint, dq_distance, DualQuaternion, Pose, Twist, RENORMALIZE_EVERY};
pub use quaternion::{Quaternion, UnitQuaternion};

/// Tolerance used when checking that an axis or a quaternion has unit norm.
pub const UNIT_TOLERANCE: f64 = 1e-9;
