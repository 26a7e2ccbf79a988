//! Serial-chain kinematics of a redundant revolute manipulator.

mod chain;
mod check;
mod pinv;

pub use chain::{JointModel, KinematicChain};
pub use check::{finite_difference_jacobian, max_jacobian_error};
pub use pinv::{damped_pinv, null_space_projector};

use nalgebra::{DVector, Matrix6xX, Vector6};

use crate::dq::Twist;

/// Default damping of the pseudo-inverse.
pub const DEFAULT_DAMPING: f64 = 1e-3;

/// Geometric Jacobian: maps joint rates to the end-effector twist
/// `(ω; ṗ)` in the base frame, where `ṗ` is the velocity of the tool origin.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub matrix: Matrix6xX<f64>,
}

impl Jacobian {
    pub fn dof(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, qdot: &DVector<f64>) -> Vector6<f64> {
        &self.matrix * qdot
    }

    pub fn twist(&self, qdot: &DVector<f64>) -> Twist {
        Twist::from_vec6(&self.apply(qdot))
    }
}
