use crate::dq::Pose;

/// `V = V1 + V2` evaluated on an error pose.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LyapunovSample {
    pub v: f64,
    /// `‖1 − ê_P‖² = 2(1 − η_P)`
    pub v1: f64,
    /// `‖ê_D‖² = η_D² + ‖μ_D‖²`
    pub v2: f64,
}

impl LyapunovSample {
    pub fn of_error(e: &Pose) -> Self {
        let dq = e.dual_quaternion();
        // canonical sign keeps η_P in [0, 1]; max() absorbs rounding above 1
        let v1 = (2.0 * (1.0 - dq.primary.re)).max(0.0);
        let v2 = dq.dual.norm_squared();
        Self { v: v1 + v2, v1, v2 }
    }
}
