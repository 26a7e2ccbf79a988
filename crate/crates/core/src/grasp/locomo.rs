use nalgebra::{DMatrix, DVector, Vector3};

use crate::dq::Pose;
use crate::error::{invalid, Result};

/// Contact features of one finger: zero-moment-shift differences `Ψ_j`
/// between gripper and object surface, sampled on `n` patches.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerFeatures {
    /// Exponent `ω_i` of this finger's contact moment.
    pub weight: f64,
    /// `Σ`, symmetric positive definite, `d × d`.
    pub covariance: DMatrix<f64>,
    /// The `n` feature vectors, each of dimension `d`.
    pub psi: Vec<DVector<f64>>,
}

impl FingerFeatures {
    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.covariance.nrows();
        if d == 0 || self.covariance.ncols() != d {
            return Err(invalid(format!(
                "covariance must be square and nonempty, got {}x{}",
                self.covariance.nrows(),
                self.covariance.ncols()
            )));
        }
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(invalid(format!("finger weight must be >= 0, got {}", self.weight)));
        }
        if let Some(bad) = self.psi.iter().find(|p| p.len() != d) {
            return Err(invalid(format!(
                "feature vector of dimension {} does not match covariance dimension {d}",
                bad.len()
            )));
        }
        self.cholesky().map(|_| ())
    }

    fn cholesky(&self) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        let s = &self.covariance;
        let scale = s.amax().max(1.0);
        if (s - s.transpose()).amax() > 1e-12 * scale {
            return Err(invalid("covariance is not symmetric"));
        }
        s.clone()
            .cholesky()
            .ok_or_else(|| invalid("covariance is not positive definite"))
    }

    /// `𝒞_i = (1/N_s) Σ_j ((2π)^d |Σ|)^{1/2} 𝒩(Ψ_j; 0, Σ)`. The prefactor
    /// cancels the Gaussian normalization, leaving a mean of
    /// `exp(−½ Ψ_jᵀ Σ⁻¹ Ψ_j)` terms.
    pub fn contact_moment(&self, ns: f64) -> Result<f64> {
        self.validate()?;
        let chol = self.cholesky()?;
        let l = chol.l();
        let sum: f64 = self
            .psi
            .iter()
            .map(|p| {
                let y = l
                    .solve_lower_triangular(p)
                    .expect("Cholesky factor has a positive diagonal");
                (-0.5 * y.norm_squared()).exp()
            })
            .sum();
        Ok(sum / ns)
    }
}

/// A grasp proposed on the object, expressed in the object frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspCandidate {
    pub id: u32,
    /// Gripper pose at grasp time. The tool z-axis is the approach axis.
    pub grasp: Pose,
    /// Retreat of the pre-grasp pose along the approach axis (m).
    pub pregrasp_offset: f64,
    /// Overall weight `γ`.
    pub gamma: f64,
    /// Normalizing term `N_s`.
    pub ns: f64,
    pub fingers: Vec<FingerFeatures>,
    /// Bypasses the feature evaluation when set.
    pub precomputed_score: Option<f64>,
}

impl GraspCandidate {
    /// Pre-grasp pose in the object frame, the grasp pose moved back by
    /// `pregrasp_offset` along its own z-axis.
    pub fn pregrasp(&self) -> Pose {
        self.grasp * Pose::from_translation(&Vector3::new(0.0, 0.0, -self.pregrasp_offset))
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |e: crate::Error| invalid(format!("candidate {}: {e}", self.id));
        if !(self.ns > 0.0 && self.ns.is_finite()) {
            return Err(ctx(invalid(format!("N_s must be > 0, got {}", self.ns))));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(ctx(invalid(format!("gamma must be >= 0, got {}", self.gamma))));
        }
        if !(self.pregrasp_offset >= 0.0 && self.pregrasp_offset.is_finite()) {
            return Err(ctx(invalid(format!(
                "pregrasp offset must be >= 0, got {}",
                self.pregrasp_offset
            ))));
        }
        if let Some(s) = self.precomputed_score {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(ctx(invalid(format!("precomputed score must be >= 0, got {s}"))));
            }
        }
        for (i, f) in self.fingers.iter().enumerate() {
            f.validate()
                .map_err(|e| ctx(invalid(format!("finger {}: {e}", i + 1))))?;
        }
        Ok(())
    }

    /// Ranking score: the precomputed value when present, otherwise
    /// [`locomo_score`].
    pub fn score(&self) -> Result<f64> {
        match self.precomputed_score {
            Some(s) => {
                self.validate()?;
                Ok(s)
            }
            None => locomo_score(self),
        }
    }
}

/// `ℛ = γ Π_i 𝒞_i^{ω_i}` evaluated from the finger features.
pub fn locomo_score(candidate: &GraspCandidate) -> Result<f64> {
    candidate.validate()?;
    let mut r = candidate.gamma;
    for f in &candidate.fingers {
        r *= f.contact_moment(candidate.ns)?.powf(f.weight);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finger(psi: Vec<Vec<f64>>, cov: DMatrix<f64>) -> FingerFeatures {
        FingerFeatures {
            weight: 1.0,
            covariance: cov,
            psi: psi.into_iter().map(DVector::from_vec).collect(),
        }
    }

    fn candidate(fingers: Vec<FingerFeatures>, ns: f64) -> GraspCandidate {
        GraspCandidate {
            id: 7,
            grasp: Pose::identity(),
            pregrasp_offset: 0.1,
            gamma: 1.0,
            ns,
            fingers,
            precomputed_score: None,
        }
    }

    #[test]
    fn zero_features_score_one() {
        let f = || finger(vec![vec![0.0; 3]; 4], DMatrix::identity(3, 3) * 0.2);
        let c = candidate(vec![f(), f()], 4.0);
        assert_eq!(locomo_score(&c).unwrap(), 1.0);
    }

    #[test]
    fn scalar_gaussian() {
        let c = candidate(vec![finger(vec![vec![1.0]], DMatrix::identity(1, 1))], 1.0);
        let expected = (-0.5f64).exp();
        assert!((locomo_score(&c).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn score_decays_with_feature_magnitude() {
        let mut last = f64::INFINITY;
        for m in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let c = candidate(vec![finger(vec![vec![m, 0.0]], DMatrix::identity(2, 2))], 1.0);
            let s = locomo_score(&c).unwrap();
            assert!(s < last || m == 0.0);
            last = s;
        }
        assert!(last < 1e-10);
    }

    #[test]
    fn non_pd_covariance_names_candidate() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let c = candidate(vec![finger(vec![vec![0.0, 0.0]], cov)], 1.0);
        let err = locomo_score(&c).unwrap_err().to_string();
        assert!(err.contains("candidate 7") && err.contains("positive definite"), "{err}");
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        let c = candidate(vec![finger(vec![vec![0.0, 0.0]], cov)], 1.0);
        assert!(locomo_score(&c).is_err());
    }

    #[test]
    fn pregrasp_backs_off_along_tool_z() {
        let c = candidate(vec![], 1.0);
        let t = c.pregrasp().translation();
        assert!((t - Vector3::new(0.0, 0.0, -0.1)).norm() < 1e-16);
    }
}
