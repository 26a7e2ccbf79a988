use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::dq::{Pose, UnitQuaternion};
use crate::error::{invalid, Error, Result};

/// The scripted object motions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrajectoryKind {
    /// Left to right across the table (−y).
    HLine,
    /// Away from the robot (+x).
    VLine,
    /// From the near-left to the far-right corner.
    Diagonal,
    /// Closed ellipse in the table plane, starting at `(+a, 0)`.
    Ellipse,
    /// Lateral sine wave superimposed on a left-to-right line.
    Sine,
}

impl TrajectoryKind {
    pub const ALL: [TrajectoryKind; 5] = [
        TrajectoryKind::HLine,
        TrajectoryKind::VLine,
        TrajectoryKind::Diagonal,
        TrajectoryKind::Ellipse,
        TrajectoryKind::Sine,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TrajectoryKind::HLine => "h_line",
            TrajectoryKind::VLine => "v_line",
            TrajectoryKind::Diagonal => "diagonal",
            TrajectoryKind::Ellipse => "ellipse",
            TrajectoryKind::Sine => "sine",
        }
    }

    /// Unit direction of travel for the line-like kinds.
    fn direction(&self) -> Vector3<f64> {
        match self {
            TrajectoryKind::HLine | TrajectoryKind::Sine => -Vector3::y(),
            TrajectoryKind::VLine => Vector3::x(),
            TrajectoryKind::Diagonal => Vector3::new(1.0, -1.0, 0.0).normalize(),
            TrajectoryKind::Ellipse => Vector3::zeros(),
        }
    }
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrajectoryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TrajectoryKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown trajectory kind '{s}' (expected h_line, v_line, diagonal, ellipse or sine)"
                ))
            })
    }
}

/// Constant-rate spin of the object about an axis of its own frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationSpec {
    pub axis: Vector3<f64>,
    /// rad/s
    pub rate: f64,
}

impl Default for RotationSpec {
    fn default() -> Self {
        Self {
            axis: Vector3::z(),
            rate: 5f64.to_radians(),
        }
    }
}

/// An analytic object trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryScript {
    pub kind: TrajectoryKind,
    pub start: Pose,
    /// Travel speed along the line (m/s); lines and sine.
    pub speed: f64,
    /// Travel distance after which the object stops (m); lines and sine.
    pub length: f64,
    /// Ellipse semi-axes along x and y (m).
    pub radii: (f64, f64),
    /// Lateral sine amplitude (m).
    pub amplitude: f64,
    /// Ellipse revolution or sine oscillation frequency (Hz).
    pub frequency: f64,
    pub rotation: Option<RotationSpec>,
}

impl TrajectoryScript {
    /// Default parameters for `kind`: 1 cm/s over 0.30 m for the lines, a
    /// (0.15, 0.08) m ellipse at 0.01 Hz, and a 0.15 m / 0.02 Hz sine.
    pub fn new(kind: TrajectoryKind, start: Pose) -> Self {
        let frequency = match kind {
            TrajectoryKind::Sine => 0.02,
            _ => 0.01,
        };
        Self {
            kind,
            start,
            speed: 0.01,
            length: 0.30,
            radii: (0.15, 0.08),
            amplitude: 0.15,
            frequency,
            rotation: None,
        }
    }

    /// A static object at `start`.
    pub fn stationary(start: Pose) -> Self {
        Self {
            speed: 0.0,
            ..Self::new(TrajectoryKind::HLine, start)
        }
    }

    /// Like [`Self::new`], with the start shifted so the path is centred on
    /// `center` (the ellipse already is).
    pub fn centered(kind: TrajectoryKind, center: Pose) -> Self {
        Self::new(kind, center).centered_on(center)
    }

    /// Moves the start so the path of the current parameters is centred on
    /// `center`.
    pub fn centered_on(mut self, center: Pose) -> Self {
        let back = self.kind.direction() * (-0.5 * self.length);
        self.start = Pose::from_translation(&back) * center;
        self
    }

    pub fn with_rotation(mut self, rotation: Option<RotationSpec>) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            problems.push(format!("speed must be >= 0, got {}", self.speed));
        }
        if !(self.length >= 0.0 && self.length.is_finite()) {
            problems.push(format!("length must be >= 0, got {}", self.length));
        }
        if !(self.radii.0 >= 0.0 && self.radii.1 >= 0.0) {
            problems.push(format!("radii must be >= 0, got {:?}", self.radii));
        }
        if !(self.frequency >= 0.0 && self.frequency.is_finite()) {
            problems.push(format!("frequency must be >= 0, got {}", self.frequency));
        }
        if let Some(r) = &self.rotation {
            if (r.axis.norm() - 1.0).abs() > 1e-9 {
                problems.push("rotation axis must be a unit vector".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(invalid(problems.join("; ")))
        }
    }

    /// World-frame translation applied to the start pose at time `t`.
    pub fn offset(&self, t: f64) -> Vector3<f64> {
        let phase = TAU * self.frequency * t;
        match self.kind {
            TrajectoryKind::Ellipse => {
                Vector3::new(self.radii.0 * phase.cos(), self.radii.1 * phase.sin(), 0.0)
            }
            TrajectoryKind::Sine => {
                let travel = (self.speed * t).min(self.length);
                self.kind.direction() * travel + Vector3::x() * (self.amplitude * phase.sin())
            }
            _ => self.kind.direction() * (self.speed * t).min(self.length),
        }
    }

    /// Object pose at time `t ≥ 0`.
    pub fn pose(&self, t: f64) -> Pose {
        let mut x = Pose::from_translation(&self.offset(t)) * self.start;
        if let Some(r) = &self.rotation {
            let q = UnitQuaternion::from_axis_angle(&r.axis, r.rate * t)
                .expect("rotation axis validated as unit");
            x = x * Pose::from_rotation(&q);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start() -> Pose {
        Pose::from_translation(&Vector3::new(0.5, 0.1, 0.05))
    }

    fn close(a: &Pose, b: &Pose) -> bool {
        crate::dq::dq_distance(a, b) < 1e-12
    }

    #[test]
    fn ellipse_phase_convention() {
        let s = TrajectoryScript::new(TrajectoryKind::Ellipse, start());
        let expected = Pose::from_translation(&Vector3::new(0.15, 0.0, 0.0)) * start();
        assert!(close(&s.pose(0.0), &expected));
        let quarter = 0.25 / s.frequency;
        assert!((s.offset(quarter) - Vector3::new(0.0, 0.08, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sine_and_lines_start_at_start_pose() {
        for kind in [
            TrajectoryKind::Sine,
            TrajectoryKind::HLine,
            TrajectoryKind::VLine,
            TrajectoryKind::Diagonal,
        ] {
            let s = TrajectoryScript::new(kind, start());
            assert_eq!(s.pose(0.0), start(), "{kind}");
        }
    }

    #[test]
    fn lines_stop_after_length() {
        let s = TrajectoryScript::new(TrajectoryKind::VLine, start());
        assert!((s.offset(10.0) - Vector3::new(0.1, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(s.offset(30.0), s.offset(100.0));
    }

    #[test]
    fn rotation_variant_spins_in_place() {
        let s = TrajectoryScript::stationary(start()).with_rotation(Some(RotationSpec::default()));
        let x = s.pose(18.0);
        assert!((x.translation() - start().translation()).norm() < 1e-15);
        assert!((x.rotation_angle() - 90f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn continuity() {
        for kind in TrajectoryKind::ALL {
            let s = TrajectoryScript::new(kind, start()).with_rotation(Some(RotationSpec::default()));
            for i in 0..200 {
                let t = i as f64 * 0.37;
                let d = crate::dq::dq_distance(&s.pose(t), &s.pose(t + 1e-6));
                assert!(d < 1e-6, "{kind} jumps at t={t}: {d}");
            }
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in TrajectoryKind::ALL {
            assert_eq!(k.name().parse::<TrajectoryKind>().unwrap(), k);
        }
        assert!("circle".parse::<TrajectoryKind>().is_err());
    }
}
