use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};

use super::UNIT_TOLERANCE;
use crate::error::{invalid, Result};

/// Tolerance on the real part when an operation requires a pure quaternion.
const PURE_TOLERANCE: f64 = 1e-12;

/// A quaternion `re + im.x ı̂ + im.y ȷ̂ + im.z k̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub re: f64,
    pub im: Vector3<f64>,
}

impl Quaternion {
    pub const fn new(re: f64, i: f64, j: f64, k: f64) -> Self {
        Self {
            re,
            im: Vector3::new(i, j, k),
        }
    }

    pub fn from_parts(re: f64, im: Vector3<f64>) -> Self {
        Self { re, im }
    }

    /// Pure quaternion (zero real part) holding a 3-vector.
    pub fn pure(v: Vector3<f64>) -> Self {
        Self { re: 0.0, im: v }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub const fn one() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub fn conjugate(&self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.re * self.re + self.im.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Euclidean inner product of the 4 coefficients.
    pub fn dot(&self, other: &Self) -> f64 {
        self.re * other.re + self.im.dot(&other.im)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            re: self.re * s,
            im: self.im * s,
        }
    }

    pub fn coeffs(&self) -> [f64; 4] {
        [self.re, self.im.x, self.im.y, self.im.z]
    }

    pub fn from_coeffs(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn is_pure(&self) -> bool {
        self.re.abs() <= PURE_TOLERANCE
    }

    /// Inner product of two pure quaternions, `−(ab + ba)/2`.
    pub fn inner(a: &Self, b: &Self) -> Result<f64> {
        require_pure(a, "inner")?;
        require_pure(b, "inner")?;
        Ok(-(*a * *b + *b * *a).re / 2.0)
    }

    /// Vector product of two pure quaternions, `(ab − ba)/2`.
    pub fn cross(a: &Self, b: &Self) -> Result<Self> {
        require_pure(a, "cross")?;
        require_pure(b, "cross")?;
        let c = (*a * *b - *b * *a).scale(0.5);
        Ok(Self::pure(c.im))
    }
}

fn require_pure(q: &Quaternion, op: &str) -> Result<()> {
    if q.is_pure() {
        Ok(())
    } else {
        Err(invalid(format!(
            "{op} requires pure quaternions, got real part {}",
            q.re
        )))
    }
}

impl Mul for Quaternion {
    type Output = Self;

    /// Hamilton product.
    fn mul(self, rhs: Self) -> Self {
        Self {
            re: self.re * rhs.re - self.im.dot(&rhs.im),
            im: rhs.im * self.re + self.im * rhs.re + self.im.cross(&rhs.im),
        }
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            im: -self.im,
        }
    }
}

/// A unit-norm quaternion representing a rotation.
///
/// The norm is restored on every construction, so `|‖q‖ − 1|` stays at
/// rounding level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion(Quaternion);

impl UnitQuaternion {
    pub fn identity() -> Self {
        Self(Quaternion::one())
    }

    /// Normalizes `q`. Fails on a zero or non-finite quaternion.
    pub fn new_normalize(q: Quaternion) -> Result<Self> {
        let n = q.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(invalid(format!("cannot normalize quaternion of norm {n}")));
        }
        Ok(Self(q.scale(1.0 / n)))
    }

    /// Wraps `q` without checking; callers guarantee unit norm.
    pub(crate) fn new_unchecked(q: Quaternion) -> Self {
        Self(q)
    }

    /// `cos(φ/2) + n̂ sin(φ/2)`. The axis must have unit norm.
    pub fn from_axis_angle(axis: &Vector3<f64>, phi: f64) -> Result<Self> {
        let n = axis.norm();
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(invalid(format!("rotation axis has norm {n}, expected 1")));
        }
        let (s, c) = (phi / 2.0).sin_cos();
        Self::new_normalize(Quaternion::from_parts(c, axis * s))
    }

    /// Rotation about `axis` by the angle `‖axis‖` (a rotation vector).
    pub fn from_rotation_vector(v: &Vector3<f64>) -> Self {
        let angle = v.norm();
        if angle < 1e-12 {
            // second-order accurate for tiny angles
            let q = Quaternion::from_parts(1.0 - angle * angle / 8.0, v * 0.5);
            return Self(q.scale(1.0 / q.norm()));
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let q = Quaternion::from_parts(c, v * (s / angle));
        Self(q.scale(1.0 / q.norm()))
    }

    pub fn quaternion(&self) -> &Quaternion {
        &self.0
    }

    pub fn into_inner(self) -> Quaternion {
        self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.conjugate())
    }

    /// Rotation angle in `[0, 2π]` and unit axis. The axis is `ı̂` when the
    /// angle is zero.
    pub fn angle_axis(&self) -> (f64, Vector3<f64>) {
        let s = self.0.im.norm();
        if s == 0.0 {
            return (0.0, Vector3::x());
        }
        (2.0 * s.atan2(self.0.re), self.0.im / s)
    }

    /// Rotates a 3-vector, `q v q*`.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        (self.0 * Quaternion::pure(*v) * self.0.conjugate()).im
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.0.re, self.0.im.x, self.0.im.y, self.0.im.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }
}

impl Mul for UnitQuaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let q = self.0 * rhs.0;
        Self(q.scale(1.0 / q.norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn identity_is_neutral() {
        let b = Quaternion::new(0.3, -1.0, 2.0, 0.5);
        assert_eq!(Quaternion::one() * b, b);
        assert_eq!(b * Quaternion::one(), b);
    }

    #[test]
    fn basis_relations() {
        let i = Quaternion::new(0.0, 1.0, 0.0, 0.0);
        let j = Quaternion::new(0.0, 0.0, 1.0, 0.0);
        let k = Quaternion::new(0.0, 0.0, 0.0, 1.0);
        assert_eq!(i * j, k);
        assert_eq!(j * k, i);
        assert_eq!(i * j * k, Quaternion::new(-1.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn axis_angle_cases() {
        let z = Vector3::z();
        let q = UnitQuaternion::from_axis_angle(&Vector3::y(), 0.0).unwrap();
        assert_eq!(q.quaternion().coeffs(), [1.0, 0.0, 0.0, 0.0]);

        let q = UnitQuaternion::from_axis_angle(&z, PI).unwrap();
        let c = q.quaternion().coeffs();
        assert!(c[0].abs() < 1e-16 && (c[3] - 1.0).abs() < 1e-16);

        let q = UnitQuaternion::from_axis_angle(&Vector3::x(), FRAC_PI_2).unwrap();
        let c = q.quaternion().coeffs();
        assert!((c[0] - FRAC_PI_4.cos()).abs() < 1e-15);
        assert!((c[1] - FRAC_PI_4.sin()).abs() < 1e-15);
    }

    #[test]
    fn non_unit_axis_rejected() {
        assert!(UnitQuaternion::from_axis_angle(&Vector3::new(1.0, 1.0, 0.0), 0.2).is_err());
    }

    #[test]
    fn inner_and_cross_on_basis() {
        let i = Quaternion::new(0.0, 1.0, 0.0, 0.0);
        let j = Quaternion::new(0.0, 0.0, 1.0, 0.0);
        assert_eq!(Quaternion::inner(&i, &i).unwrap(), 1.0);
        assert_eq!(
            Quaternion::cross(&i, &j).unwrap(),
            Quaternion::new(0.0, 0.0, 0.0, 1.0)
        );
    }

    #[test]
    fn inner_rejects_non_pure() {
        let a = Quaternion::new(0.5, 1.0, 0.0, 0.0);
        let b = Quaternion::new(0.0, 0.0, 1.0, 0.0);
        assert!(Quaternion::inner(&a, &b).is_err());
        assert!(Quaternion::cross(&b, &a).is_err());
    }

    #[test]
    fn double_conjugate_is_identity() {
        let q = Quaternion::new(0.1, 0.2, -0.3, 0.4);
        assert_eq!(q.conjugate().conjugate(), q);
    }

    #[test]
    fn rotation_vector_small_angle() {
        let q = UnitQuaternion::from_rotation_vector(&Vector3::new(1e-14, 0.0, 0.0));
        assert!((q.quaternion().norm() - 1.0).abs() < 1e-15);
        assert!((q.quaternion().im.x - 5e-15).abs() < 1e-25);
    }
}
