//! The desk-scale reference setup used by the bundled scenarios and the
//! acceptance runs: the 7-DoF reference arm, a block on the table and a
//! fixed set of grasp candidates.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector, Vector3};

use crate::dq::{Pose, UnitQuaternion};
use crate::grasp::{FingerFeatures, GraspCandidate, DEFAULT_PREGRASP_OFFSET};
use crate::kinematics::KinematicChain;
use crate::servo::{ControllerGains, SpeedLimit};

use super::episode::{EpisodeConfig, SelectionConfig};
use super::observe::ObservationModel;
use super::trajectory::{RotationSpec, TrajectoryKind, TrajectoryScript};

/// Centre of the object paths on the table.
pub fn object_center() -> Pose {
    Pose::from_translation(&Vector3::new(0.5, 0.0, 0.1))
}

/// Gains of the moving-target episodes.
pub fn episode_gains() -> ControllerGains {
    ControllerGains {
        k: 50.0,
        ks: -0.5,
        lambda: 1e-3,
        dt: 0.01,
    }
}

fn rot(axis: Vector3<f64>, angle: f64) -> UnitQuaternion {
    UnitQuaternion::from_axis_angle(&axis, angle).expect("unit axis")
}

/// Two fingers whose features all have magnitude `m` against a 0.01 I
/// covariance, so the score is `exp(−50 m²)²`.
fn fingers(m: f64) -> Vec<FingerFeatures> {
    let psi = (0..4)
        .map(|j| {
            let a = j as f64 * FRAC_PI_2;
            DVector::from_vec(vec![m * a.cos(), m * a.sin(), 0.0])
        })
        .collect::<Vec<_>>();
    let finger = FingerFeatures {
        weight: 1.0,
        covariance: DMatrix::identity(3, 3) * 0.01,
        psi,
    };
    vec![finger.clone(), finger]
}

fn candidate(id: u32, r: UnitQuaternion, p: Vector3<f64>, m: f64) -> GraspCandidate {
    GraspCandidate {
        id,
        grasp: Pose::from_rt(&r, &p),
        pregrasp_offset: DEFAULT_PREGRASP_OFFSET,
        gamma: 1.0,
        ns: 4.0,
        fingers: fingers(m),
        precomputed_score: None,
    }
}

/// Eight top-down grasps at 45° yaw steps (ids 0-7), four side grasps
/// (ids 8-11, approaching along +x, −x, +y, −y of the object) and, as a
/// grasp sampler would produce, a near-duplicate of every top-down grasp
/// shifted 3 mm along the object x-axis (ids 12-19). The side grasp from the
/// far side (id 9) has the best score.
pub fn reference_grasps() -> Vec<GraspCandidate> {
    let down = rot(Vector3::x(), PI);
    let mut out: Vec<GraspCandidate> = (0..8)
        .map(|i| {
            let yaw = rot(Vector3::z(), i as f64 * FRAC_PI_4);
            candidate(i, yaw * down, Vector3::new(0.0, 0.0, 0.05), 0.03 + 0.01 * i as f64)
        })
        .collect();
    let sides = [
        // approach axis = tool z
        (rot(Vector3::y(), FRAC_PI_2), Vector3::new(-0.04, 0.0, 0.0), 0.06),
        (rot(Vector3::y(), -FRAC_PI_2), Vector3::new(0.04, 0.0, 0.0), 0.01),
        (rot(Vector3::x(), -FRAC_PI_2), Vector3::new(0.0, -0.04, 0.0), 0.08),
        (rot(Vector3::x(), FRAC_PI_2), Vector3::new(0.0, 0.04, 0.0), 0.08),
    ];
    for (i, (r, p, m)) in sides.into_iter().enumerate() {
        out.push(candidate(8 + i as u32, r, p, m));
    }
    for i in 0..8 {
        let mut dup = out[i].clone();
        dup.id = 12 + i as u32;
        dup.grasp = Pose::from_translation(&Vector3::new(0.003, 0.0, 0.0)) * dup.grasp;
        dup.fingers = fingers(0.035 + 0.01 * i as f64);
        out.push(dup);
    }
    out
}

/// Home with the wrist roll (joint 7) about 0.1 rad inside its lower limit.
/// Tracking the rising line with rotation drives it into the stop unless
/// the null-space task pulls it back.
pub fn near_limit_start() -> DVector<f64> {
    DVector::from_vec(vec![0.0, 0.6, 0.0, 1.4, 0.0, 1.14, -2.86])
}

/// Tool speed cap of the moving-target episodes.
pub fn speed_limit() -> SpeedLimit {
    SpeedLimit {
        linear: 0.1,
        angular: 0.8,
    }
}

/// Base episode for the moving-target grid: `kind` centred on
/// [`object_center`], optionally spinning at 5°/s.
pub fn desk_episode(kind: TrajectoryKind, rotation: bool, seed: u64) -> EpisodeConfig {
    let center = object_center();
    let trajectory = TrajectoryScript::centered(kind, center)
        .with_rotation(rotation.then(RotationSpec::default));
    EpisodeConfig {
        chain: KinematicChain::reference_7dof(),
        grasps: reference_grasps(),
        gains: episode_gains(),
        speed_limit: Some(speed_limit()),
        trajectory,
        observation: ObservationModel {
            sigma_t: 5e-4,
            sigma_r: 2e-3,
            seed,
        },
        selection: SelectionConfig::default(),
        nullspace: true,
        rerank: true,
        q0: near_limit_start(),
        max_duration: 60.0,
        hold_after_grasp: 1.0,
    }
}

/// The object slides away from the robot until the best-scoring grasp
/// (approaching from the far side) leaves the workspace, while the top-down
/// grasps stay reachable.
pub fn drift_out_of_reach(seed: u64) -> EpisodeConfig {
    let start = Pose::from_translation(&Vector3::new(0.55, 0.0, 0.1));
    let mut trajectory = TrajectoryScript::new(TrajectoryKind::VLine, start);
    trajectory.speed = 0.02;
    trajectory.length = 0.17;
    EpisodeConfig {
        trajectory,
        max_duration: 30.0,
        q0: KinematicChain::reference_home(),
        ..desk_episode(TrajectoryKind::VLine, false, seed)
    }
}

/// Base of the ablation grid: default path parameters with the start at
/// [`object_center`], which every grid path is centred on.
pub fn grid_base(seed: u64) -> EpisodeConfig {
    EpisodeConfig {
        trajectory: TrajectoryScript::new(TrajectoryKind::HLine, object_center()),
        ..desk_episode(TrajectoryKind::HLine, false, seed)
    }
}

/// A resting object, exact observation and the home configuration.
pub fn static_episode() -> EpisodeConfig {
    EpisodeConfig {
        trajectory: TrajectoryScript::stationary(object_center()),
        observation: ObservationModel::exact(),
        q0: KinematicChain::reference_home(),
        max_duration: 30.0,
        ..desk_episode(TrajectoryKind::HLine, false, 0)
    }
}

/// An 8 cm circle with 2 mm translation noise and the pre-grasp phase held
/// for one full revolution, to exercise the switching hysteresis.
pub fn noisy_circle(seed: u64, delta: f64) -> EpisodeConfig {
    let mut c = desk_episode(TrajectoryKind::Ellipse, true, seed);
    c.trajectory.radii = (0.08, 0.08);
    c.observation.sigma_t = 0.002;
    c.observation.sigma_r = 0.0;
    c.selection.delta = delta;
    c.selection.pregrasp_threshold = 1e-12;
    c.max_duration = 100.0;
    c
}
