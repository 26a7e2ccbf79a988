use nalgebra::{DMatrix, Matrix6, MatrixXx6};

use super::Jacobian;

/// Damped least-squares inverse `Jᵀ(JJᵀ + λI₆)⁻¹`.
///
/// Defined for every `J` as long as `lambda > 0`, singular configurations
/// included.
pub fn damped_pinv(j: &Jacobian, lambda: f64) -> MatrixXx6<f64> {
    assert!(lambda > 0.0, "damping must be positive, got {lambda}");
    let a: Matrix6<f64> = &j.matrix * j.matrix.transpose() + Matrix6::identity() * lambda;
    let chol = a
        .cholesky()
        .expect("JJᵀ + λI is symmetric positive definite for λ > 0");
    // A is symmetric, so Jᵀ A⁻¹ = (A⁻¹ J)ᵀ
    chol.solve(&j.matrix).transpose()
}

/// Null-space projector `I − J†J` built from the damped inverse.
pub fn null_space_projector(j: &Jacobian, lambda: f64) -> DMatrix<f64> {
    let n = j.dof();
    let pinv = damped_pinv(j, lambda);
    DMatrix::identity(n, n) - pinv * &j.matrix
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DVector, Matrix6xX};

    fn jac(m: Matrix6xX<f64>) -> Jacobian {
        Jacobian { matrix: m }
    }

    #[test]
    fn zero_jacobian() {
        let j = jac(Matrix6xX::zeros(7));
        assert_eq!(damped_pinv(&j, 1e-3), MatrixXx6::zeros(7));
        assert_eq!(null_space_projector(&j, 1e-3), DMatrix::identity(7, 7));
    }

    #[test]
    fn padded_identity_inverts() {
        let mut m = Matrix6xX::zeros(7);
        for i in 0..6 {
            m[(i, i)] = 1.0;
        }
        let j = jac(m);
        let p = damped_pinv(&j, 1e-12);
        let prod = &j.matrix * &p;
        assert!((prod - Matrix6::identity()).abs().max() < 1e-6);
        // the unused joint gets nothing
        assert!(p.row(6).abs().max() == 0.0);
    }

    #[test]
    fn square_invertible_has_trivial_null_space() {
        let m = Matrix6xX::from_fn(6, |r, c| if r == c { 2.0 } else { 0.1 * (r + c) as f64 });
        let p = null_space_projector(&jac(m), 1e-12);
        assert!(p.abs().max() < 1e-9);
    }

    #[test]
    fn projector_annihilated_by_jacobian() {
        let m = Matrix6xX::from_fn(7, |r, c| ((r * 7 + c) as f64 * 0.37).sin());
        let j = jac(m);
        let p = null_space_projector(&j, 1e-12);
        let v = DVector::from_fn(7, |i, _| (i as f64 - 3.0) * 0.5);
        assert!((&j.matrix * (&p * v)).abs().max() < 1e-6);
    }
}
