use nalgebra::{DVector, Matrix6xX, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::KinematicChain;
use crate::error::Result;

/// Central-difference Jacobian: the angular rows come from the rotation
/// vector of `R(q + h e_i) R(q − h e_i)ᵀ`, the linear rows from the tool
/// translation.
pub fn finite_difference_jacobian(chain: &KinematicChain, q: &DVector<f64>, h: f64) -> Result<Matrix6xX<f64>> {
    let mut m = Matrix6xX::zeros(chain.dof());
    for i in 0..chain.dof() {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[i] += h;
        qm[i] -= h;
        let (rp, tp) = chain.forward_kinematics(&qp)?.to_rt();
        let (rm, tm) = chain.forward_kinematics(&qm)?.to_rt();
        let (angle, axis) = (rp * rm.inverse()).angle_axis();
        let w: Vector3<f64> = axis * (angle / (2.0 * h));
        let v = (tp - tm) / (2.0 * h);
        m.fixed_view_mut::<3, 1>(0, i).copy_from(&w);
        m.fixed_view_mut::<3, 1>(3, i).copy_from(&v);
    }
    Ok(m)
}

/// Largest absolute entry of `J_geometric − J_fd` over `trials` joint
/// configurations drawn uniformly within the limits.
pub fn max_jacobian_error(chain: &KinematicChain, trials: usize, h: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let q = DVector::from_iterator(
            chain.dof(),
            chain.joints().iter().map(|j| rng.random_range(j.lower..=j.upper)),
        );
        let analytic = chain.geometric_jacobian(&q)?.matrix;
        let fd = finite_difference_jacobian(chain, &q, h)?;
        worst = worst.max((analytic - fd).amax());
    }
    Ok(worst)
}
