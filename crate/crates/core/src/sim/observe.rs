use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dq::{Pose, UnitQuaternion};

/// Zero-mean Gaussian perturbation of a tracked pose, standing in for the
/// marker tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationModel {
    /// Per-axis translation noise (m).
    pub sigma_t: f64,
    /// Per-axis rotation-vector noise (rad).
    pub sigma_r: f64,
    pub seed: u64,
}

impl ObservationModel {
    pub fn exact() -> Self {
        Self {
            sigma_t: 0.0,
            sigma_r: 0.0,
            seed: 0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.sigma_t == 0.0 && self.sigma_r == 0.0
    }
}

/// One generator per (seed, sample time) so a sample never depends on how
/// many were drawn before it.
fn sample_rng(seed: u64, t: f64) -> ChaCha8Rng {
    let mut z = seed ^ t.to_bits().wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn gaussian3(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3<f64> {
    if sigma == 0.0 {
        return Vector3::zeros();
    }
    let n = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng))
}

/// The pose reported by the tracker at time `t`. Noise-free models return
/// `true_pose` unchanged.
pub fn observe(true_pose: &Pose, model: &ObservationModel, t: f64) -> Pose {
    if model.is_exact() {
        return *true_pose;
    }
    let mut rng = sample_rng(model.seed, t);
    let dt = gaussian3(&mut rng, model.sigma_t);
    let dr = gaussian3(&mut rng, model.sigma_r);
    let (r, p) = true_pose.to_rt();
    let r = UnitQuaternion::from_rotation_vector(&dr) * r;
    Pose::from_rt(&r, &(p + dt))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose() -> Pose {
        let r = UnitQuaternion::from_axis_angle(&Vector3::z(), 0.3).unwrap();
        Pose::from_rt(&r, &Vector3::new(0.5, 0.0, 0.1))
    }

    #[test]
    fn exact_model_is_identity() {
        let p = pose();
        assert_eq!(observe(&p, &ObservationModel::exact(), 1.25), p);
    }

    #[test]
    fn same_seed_same_noise() {
        let m = ObservationModel {
            sigma_t: 0.002,
            sigma_r: 0.01,
            seed: 42,
        };
        for i in 0..20 {
            let t = i as f64 * 0.05;
            assert_eq!(observe(&pose(), &m, t), observe(&pose(), &m, t));
        }
        let other = ObservationModel { seed: 43, ..m };
        assert_ne!(observe(&pose(), &m, 0.5), observe(&pose(), &other, 0.5));
    }

    #[test]
    fn translation_noise_has_requested_spread() {
        let m = ObservationModel {
            sigma_t: 0.002,
            sigma_r: 0.0,
            seed: 7,
        };
        let p = pose();
        let n = 10_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for i in 0..n {
            let d = observe(&p, &m, i as f64 * 0.01).translation() - p.translation();
            sum += d.x;
            sum_sq += d.x * d.x;
        }
        let mean = sum / n as f64;
        let std = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!((std - 0.002).abs() < 0.1 * 0.002, "std = {std}");
    }
}
