use nalgebra::{DVector, Matrix6xX, Vector3};

use super::Jacobian;
use crate::dq::{Pose, UnitQuaternion, RENORMALIZE_EVERY, UNIT_TOLERANCE};
use crate::error::{invalid, Result};

/// A revolute joint: a fixed transform from the previous joint frame, then a
/// rotation about `axis` by the joint angle.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModel {
    pub axis: Vector3<f64>,
    pub origin: Pose,
    /// rad
    pub lower: f64,
    /// rad
    pub upper: f64,
    /// Rest position the null-space task pulls toward (rad).
    pub mean: f64,
}

impl JointModel {
    /// Joint with `mean` at the middle of its range.
    pub fn new(axis: Vector3<f64>, origin: Pose, lower: f64, upper: f64) -> Result<Self> {
        Self::with_mean(axis, origin, lower, upper, 0.5 * (lower + upper))
    }

    pub fn with_mean(
        axis: Vector3<f64>,
        origin: Pose,
        lower: f64,
        upper: f64,
        mean: f64,
    ) -> Result<Self> {
        let joint = Self {
            axis,
            origin,
            lower,
            upper,
            mean,
        };
        joint.validate()?;
        Ok(joint)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.axis.norm();
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(invalid(format!("joint axis has norm {n}, expected 1")));
        }
        if !(self.lower < self.upper) {
            return Err(invalid(format!(
                "joint limits must satisfy lower < upper, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        if !(self.lower..=self.upper).contains(&self.mean) {
            return Err(invalid(format!(
                "joint mean {} outside [{}, {}]",
                self.mean, self.lower, self.upper
            )));
        }
        Ok(())
    }

    fn motion(&self, angle: f64) -> Pose {
        let r = UnitQuaternion::from_axis_angle(&self.axis, angle)
            .expect("joint axis validated as unit");
        self.origin * Pose::from_rotation(&r)
    }
}

/// Joint axis and a point on it, both in the base frame.
type Screw = (Vector3<f64>, Vector3<f64>);

/// An ordered list of revolute joints followed by a fixed tool transform.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    joints: Vec<JointModel>,
    tool: Pose,
}

impl KinematicChain {
    pub fn new(joints: Vec<JointModel>, tool: Pose) -> Result<Self> {
        if joints.is_empty() {
            return Err(invalid("a kinematic chain needs at least one joint"));
        }
        for (i, j) in joints.iter().enumerate() {
            j.validate()
                .map_err(|e| invalid(format!("joint {}: {e}", i + 1)))?;
        }
        Ok(Self { joints, tool })
    }

    /// The bundled 7-DoF anthropomorphic arm: alternating z/y axes, a 0.34 m
    /// shoulder column, 0.40 m upper arm and forearm, and a 0.126 m flange
    /// to tool offset. Limits alternate ±170° (z joints) and ±120° (y
    /// joints).
    pub fn reference_7dof() -> Self {
        let z_limit = 170f64.to_radians();
        let y_limit = 120f64.to_radians();
        let offsets = [0.0, 0.34, 0.0, 0.40, 0.0, 0.40, 0.0];
        let joints = offsets
            .iter()
            .enumerate()
            .map(|(i, &dz)| {
                let (axis, limit) = if i % 2 == 0 {
                    (Vector3::z(), z_limit)
                } else {
                    (Vector3::y(), y_limit)
                };
                let origin = Pose::from_translation(&Vector3::new(0.0, 0.0, dz));
                JointModel::new(axis, origin, -limit, limit).expect("reference joint is valid")
            })
            .collect();
        let tool = Pose::from_translation(&Vector3::new(0.0, 0.0, 0.126));
        Self::new(joints, tool).expect("reference chain is valid")
    }

    /// A comfortable elbow-up configuration of [`Self::reference_7dof`] with
    /// the tool pointing down at roughly (0.59, 0, 0.38) m.
    pub fn reference_home() -> DVector<f64> {
        DVector::from_vec(vec![0.0, 0.6, 0.0, 1.4, 0.0, 1.14, 0.0])
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[JointModel] {
        &self.joints
    }

    pub fn tool(&self) -> &Pose {
        &self.tool
    }

    pub fn means(&self) -> DVector<f64> {
        DVector::from_iterator(self.dof(), self.joints.iter().map(|j| j.mean))
    }

    pub fn within_limits(&self, q: &DVector<f64>) -> bool {
        q.len() == self.dof()
            && self
                .joints
                .iter()
                .zip(q.iter())
                .all(|(j, &v)| v >= j.lower && v <= j.upper)
    }

    /// Clamps `q` into the joint limits; the flag reports whether any joint
    /// was moved.
    pub fn clamp(&self, q: &DVector<f64>) -> (DVector<f64>, bool) {
        let mut clamped = false;
        let out = DVector::from_iterator(
            q.len(),
            self.joints.iter().zip(q.iter()).map(|(j, &v)| {
                let c = v.clamp(j.lower, j.upper);
                clamped |= c != v;
                c
            }),
        );
        (out, clamped)
    }

    fn check_len(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.dof() {
            return Err(invalid(format!(
                "joint vector has {} entries, chain has {} joints",
                q.len(),
                self.dof()
            )));
        }
        Ok(())
    }

    pub fn forward_kinematics(&self, q: &DVector<f64>) -> Result<Pose> {
        self.check_len(q)?;
        let mut x = Pose::identity();
        for (i, (joint, &angle)) in self.joints.iter().zip(q.iter()).enumerate() {
            x = x * joint.motion(angle);
            if (i + 1) % RENORMALIZE_EVERY == 0 {
                x = x.renormalized();
            }
        }
        Ok(x * self.tool)
    }

    /// World-frame axis and position of every joint, plus the tool pose.
    fn joint_screws(&self, q: &DVector<f64>) -> (Vec<Screw>, Pose) {
        let mut screws = Vec::with_capacity(self.dof());
        let mut x = Pose::identity();
        for (i, (joint, &angle)) in self.joints.iter().zip(q.iter()).enumerate() {
            let frame = x * joint.origin;
            screws.push((frame.rotation().rotate(&joint.axis), frame.translation()));
            x = x * joint.motion(angle);
            if (i + 1) % RENORMALIZE_EVERY == 0 {
                x = x.renormalized();
            }
        }
        (screws, x * self.tool)
    }

    /// Column `i` is `(zᵢ; zᵢ × (p_tool − pᵢ))` with `zᵢ`, `pᵢ` the world axis
    /// and position of joint `i`.
    pub fn geometric_jacobian(&self, q: &DVector<f64>) -> Result<Jacobian> {
        Ok(self.fk_and_jacobian(q)?.1)
    }

    /// Forward kinematics and Jacobian from a single pass over the chain.
    pub fn fk_and_jacobian(&self, q: &DVector<f64>) -> Result<(Pose, Jacobian)> {
        self.check_len(q)?;
        let (screws, tool) = self.joint_screws(q);
        let p = tool.translation();
        let mut m = Matrix6xX::zeros(self.dof());
        for (i, (z, origin)) in screws.iter().enumerate() {
            let lin = z.cross(&(p - origin));
            m.fixed_view_mut::<3, 1>(0, i).copy_from(z);
            m.fixed_view_mut::<3, 1>(3, i).copy_from(&lin);
        }
        Ok((tool, Jacobian { matrix: m }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector6;

    fn single_joint(tool: Vector3<f64>) -> KinematicChain {
        let j = JointModel::new(Vector3::z(), Pose::identity(), -3.0, 3.0).unwrap();
        KinematicChain::new(vec![j], Pose::from_translation(&tool)).unwrap()
    }

    #[test]
    fn zero_config_is_product_of_offsets() {
        let chain = KinematicChain::reference_7dof();
        let x = chain.forward_kinematics(&DVector::zeros(7)).unwrap();
        let t = x.translation();
        assert!((t - Vector3::new(0.0, 0.0, 0.34 + 0.40 + 0.40 + 0.126)).norm() < 1e-15);
        assert_eq!(x.rotation(), UnitQuaternion::identity());
    }

    #[test]
    fn one_joint_fk() {
        let chain = single_joint(Vector3::zeros());
        let x = chain.forward_kinematics(&DVector::from_element(1, 0.4)).unwrap();
        let r = UnitQuaternion::from_axis_angle(&Vector3::z(), 0.4).unwrap();
        assert_eq!(x, Pose::from_rotation(&r));
    }

    #[test]
    fn one_joint_jacobian_column() {
        let chain = single_joint(Vector3::new(1.0, 0.0, 0.0));
        let j = chain.geometric_jacobian(&DVector::zeros(1)).unwrap();
        let col: Vector6<f64> = j.matrix.column(0).into();
        assert!((col - Vector6::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_rates_give_zero_twist() {
        let chain = KinematicChain::reference_7dof();
        let j = chain
            .geometric_jacobian(&KinematicChain::reference_home())
            .unwrap();
        assert_eq!(j.apply(&DVector::zeros(7)), Vector6::zeros());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let chain = KinematicChain::reference_7dof();
        assert!(chain.forward_kinematics(&DVector::zeros(6)).is_err());
        assert!(chain.geometric_jacobian(&DVector::zeros(8)).is_err());
    }

    #[test]
    fn invalid_joints_rejected() {
        assert!(JointModel::new(Vector3::new(0.0, 0.0, 2.0), Pose::identity(), -1.0, 1.0).is_err());
        assert!(JointModel::new(Vector3::z(), Pose::identity(), 1.0, -1.0).is_err());
        assert!(
            JointModel::with_mean(Vector3::z(), Pose::identity(), -1.0, 1.0, 1.5).is_err()
        );
        assert!(KinematicChain::new(vec![], Pose::identity()).is_err());
    }

    #[test]
    fn clamp_reports_events() {
        let chain = KinematicChain::reference_7dof();
        let mut q = KinematicChain::reference_home();
        let (c, hit) = chain.clamp(&q);
        assert!(!hit && c == q);
        q[1] = 3.0;
        let (c, hit) = chain.clamp(&q);
        assert!(hit);
        assert!((c[1] - 120f64.to_radians()).abs() < 1e-15);
        assert!(chain.within_limits(&c));
    }

    #[test]
    fn home_points_down() {
        let chain = KinematicChain::reference_7dof();
        let x = chain
            .forward_kinematics(&KinematicChain::reference_home())
            .unwrap();
        let tool_z = x.rotation().rotate(&Vector3::z());
        assert!(tool_z.z < -0.99, "tool z = {tool_z}");
    }
}
