use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix4, Vector3, Vector6};

use super::{Quaternion, UnitQuaternion};
use crate::error::{invalid, Result};

/// Long composition chains restore the unit condition after this many products.
pub const RENORMALIZE_EVERY: usize = 10;

/// Below this `sin(φ/2)` the log switches to a series expansion for the axis.
const LOG_SMALL_ANGLE: f64 = 1e-7;

/// `primary + ε dual` with `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualQuaternion {
    pub primary: Quaternion,
    pub dual: Quaternion,
}

impl DualQuaternion {
    pub const fn new(primary: Quaternion, dual: Quaternion) -> Self {
        Self { primary, dual }
    }

    pub const fn one() -> Self {
        Self::new(Quaternion::one(), Quaternion::zero())
    }

    pub const fn zero() -> Self {
        Self::new(Quaternion::zero(), Quaternion::zero())
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.primary.conjugate(), self.dual.conjugate())
    }

    /// Coefficients in serialization order
    /// `(η_P, μ_P1, μ_P2, μ_P3, η_D, μ_D1, μ_D2, μ_D3)`.
    pub fn coeffs(&self) -> [f64; 8] {
        let p = self.primary.coeffs();
        let d = self.dual.coeffs();
        [p[0], p[1], p[2], p[3], d[0], d[1], d[2], d[3]]
    }

    pub fn from_coeffs(c: [f64; 8]) -> Self {
        Self::new(
            Quaternion::new(c[0], c[1], c[2], c[3]),
            Quaternion::new(c[4], c[5], c[6], c[7]),
        )
    }

    /// Euclidean norm of the 8 coefficients.
    pub fn coeff_norm(&self) -> f64 {
        (self.primary.norm_squared() + self.dual.norm_squared()).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.primary.scale(s), self.dual.scale(s))
    }

    /// Flips the sign so the primary real part is non-negative; on a zero
    /// real part the first nonzero imaginary component is made positive.
    fn canonical(self) -> Self {
        let p = &self.primary;
        let flip = if p.re != 0.0 {
            p.re < 0.0
        } else {
            p.im.iter().find(|c| **c != 0.0).is_some_and(|c| *c < 0.0)
        };
        if flip {
            -self
        } else {
            self
        }
    }
}

impl Mul for DualQuaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.primary * rhs.primary,
            self.primary * rhs.dual + self.dual * rhs.primary,
        )
    }
}

impl Add for DualQuaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.primary + rhs.primary, self.dual + rhs.dual)
    }
}

impl Sub for DualQuaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.primary - rhs.primary, self.dual - rhs.dual)
    }
}

impl Neg for DualQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.primary, -self.dual)
    }
}

/// A unit dual quaternion `r + ε ½ t r`: rotation `r` followed by
/// translation `t` in the parent frame.
///
/// Always stored in canonical sign (primary real part `≥ 0`), which picks one
/// of the two representatives of the double cover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose(DualQuaternion);

impl Pose {
    pub fn identity() -> Self {
        Self(DualQuaternion::one())
    }

    /// Builds the displacement "rotate by `rotation`, then translate by
    /// `translation`" (meters).
    pub fn from_rt(rotation: &UnitQuaternion, translation: &Vector3<f64>) -> Self {
        let r = *rotation.quaternion();
        let dual = (Quaternion::pure(*translation) * r).scale(0.5);
        Self(DualQuaternion::new(r, dual).canonical())
    }

    pub fn from_translation(t: &Vector3<f64>) -> Self {
        Self::from_rt(&UnitQuaternion::identity(), t)
    }

    pub fn from_rotation(r: &UnitQuaternion) -> Self {
        Self::from_rt(r, &Vector3::zeros())
    }

    /// Rotation and translation, with `t = 2 x_D x_P*`.
    pub fn to_rt(&self) -> (UnitQuaternion, Vector3<f64>) {
        (self.rotation(), self.translation())
    }

    pub fn rotation(&self) -> UnitQuaternion {
        UnitQuaternion::new_unchecked(self.0.primary)
    }

    pub fn translation(&self) -> Vector3<f64> {
        (self.0.dual * self.0.primary.conjugate()).im * 2.0
    }

    /// Projects an arbitrary dual quaternion onto the unit set: the primary
    /// part is normalized and the dual part made orthogonal to it.
    pub fn new_normalize(x: DualQuaternion) -> Result<Self> {
        let n = x.primary.norm();
        if !n.is_finite() || n == 0.0 || !x.dual.norm().is_finite() {
            return Err(invalid(format!(
                "cannot normalize dual quaternion with primary norm {n}"
            )));
        }
        let p = x.primary.scale(1.0 / n);
        let d = x.dual.scale(1.0 / n);
        let d = d - p.scale(p.dot(&d));
        Ok(Self(DualQuaternion::new(p, d).canonical()))
    }

    /// Validates the unit dual quaternion condition within `tol` and then
    /// renormalizes.
    pub fn try_from_dual(x: DualQuaternion, tol: f64) -> Result<Self> {
        let n = x.primary.norm();
        let orth = x.primary.dot(&x.dual);
        if (n - 1.0).abs() > tol || orth.abs() > tol {
            return Err(invalid(format!(
                "not a unit dual quaternion (primary norm {n}, <primary, dual> = {orth})"
            )));
        }
        Self::new_normalize(x)
    }

    /// Like [`Self::try_from_dual`] on coefficients, except that input
    /// already unit to within a few ulps is kept as given (up to the sign
    /// convention), so printed poses read back bit-exactly.
    pub fn from_coeffs(c: [f64; 8], tol: f64) -> Result<Self> {
        let x = DualQuaternion::from_coeffs(c);
        let exact = 4.0 * f64::EPSILON;
        if (x.primary.norm_squared() - 1.0).abs() <= exact && x.primary.dot(&x.dual).abs() <= exact {
            return Ok(Self(x.canonical()));
        }
        Self::try_from_dual(x, tol)
    }

    pub fn dual_quaternion(&self) -> &DualQuaternion {
        &self.0
    }

    pub fn coeffs(&self) -> [f64; 8] {
        self.0.coeffs()
    }

    /// Group inverse.
    pub fn conjugate(&self) -> Self {
        Self(self.0.conjugate().canonical())
    }

    pub fn inverse(&self) -> Self {
        self.conjugate()
    }

    /// Restores the unit condition after accumulated rounding.
    pub fn renormalized(&self) -> Self {
        Self::new_normalize(self.0).expect("pose primary part is nonzero")
    }

    /// Composes poses left to right, renormalizing every
    /// [`RENORMALIZE_EVERY`] products.
    pub fn compose_all<'a>(poses: impl IntoIterator<Item = &'a Pose>) -> Pose {
        let mut acc = DualQuaternion::one();
        for (i, p) in poses.into_iter().enumerate() {
            acc = acc * p.0;
            if (i + 1) % RENORMALIZE_EVERY == 0 {
                acc = Self::new_normalize(acc)
                    .expect("pose primary part is nonzero")
                    .0;
            }
        }
        Self(acc.canonical())
    }

    /// Logarithm `φn̂/2 + ε p/2`, with `φ ∈ [0, π]` thanks to the canonical
    /// sign and `p` the translation.
    pub fn log(&self) -> Twist {
        let r = &self.0.primary;
        let s = r.im.norm();
        let half_angle_over_sin = if s < LOG_SMALL_ANGLE {
            1.0 + s * s / 6.0
        } else {
            s.atan2(r.re) / s
        };
        Twist::new(r.im * half_angle_over_sin, self.translation() * 0.5)
    }

    /// Rotation angle in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        let r = &self.0.primary;
        2.0 * r.im.norm().atan2(r.re.abs())
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        let rot = self.rotation().to_rotation_matrix();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation());
        m
    }

    /// Applies the displacement to a point.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation().rotate(p) + self.translation()
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        Pose((self.0 * rhs.0).canonical())
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        *self * *rhs
    }
}

/// Dual quaternion distance `‖1 − a* b‖` over the 8 coefficients, with the
/// relative displacement `a* b` taken in canonical sign.
///
/// Squared, this is `2(1 − |cos(φ/2)|) + ‖Δt‖²/4`, the sum of squares of two
/// metrics (chordal on rotations, scaled Euclidean on translations).
pub fn dq_distance(a: &Pose, b: &Pose) -> f64 {
    // exact zero on identical input rather than product rounding
    if a == b {
        return 0.0;
    }
    let rel = (a.0.conjugate() * b.0).canonical();
    (DualQuaternion::one() - rel).coeff_norm()
}

/// A pure dual quaternion `angular + ε linear`, the dual quaternion form of a
/// twist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Twist {
    /// rad/s
    pub angular: Vector3<f64>,
    /// m/s
    pub linear: Vector3<f64>,
}

impl Twist {
    pub fn new(angular: Vector3<f64>, linear: Vector3<f64>) -> Self {
        Self { angular, linear }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    /// Stacks angular first, linear second.
    pub fn vec6(&self) -> Vector6<f64> {
        let a = &self.angular;
        let l = &self.linear;
        Vector6::new(a.x, a.y, a.z, l.x, l.y, l.z)
    }

    pub fn from_vec6(v: &Vector6<f64>) -> Self {
        Self::new(
            Vector3::new(v[0], v[1], v[2]),
            Vector3::new(v[3], v[4], v[5]),
        )
    }

    pub fn to_dual(&self) -> DualQuaternion {
        DualQuaternion::new(Quaternion::pure(self.angular), Quaternion::pure(self.linear))
    }

    /// Accepts a dual quaternion whose real parts are zero (within
    /// rounding).
    pub fn try_from_dual(x: &DualQuaternion) -> Result<Self> {
        if !x.primary.is_pure() || !x.dual.is_pure() {
            return Err(invalid(format!(
                "not a pure dual quaternion (real parts {}, {})",
                x.primary.re, x.dual.re
            )));
        }
        Ok(Self::new(x.primary.im, x.dual.im))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.angular * s, self.linear * s)
    }
}

impl Neg for Twist {
    type Output = Twist;
    fn neg(self) -> Twist {
        Twist::new(-self.angular, -self.linear)
    }
}

/// `Ad(x) y = x y x*`, re-expressing the twist `y` in the parent frame of `x`.
pub fn adjoint(x: &Pose, y: &Twist) -> Twist {
    let d = x.0 * y.to_dual() * x.0.conjugate();
    Twist::new(d.primary.im, d.dual.im)
}

impl From<&Pose> for DualQuaternion {
    fn from(p: &Pose) -> Self {
        p.0
    }
}
