use std::fmt;

use nalgebra::DVector;

use crate::dq::Pose;
use crate::error::{invalid, Result};
use crate::grasp::{
    GraspCandidate, GraspSelector, Selection, SelectionParams, SwitchState, DEFAULT_DELTA, DEFAULT_K, DEFAULT_SEED,
};
use crate::kinematics::KinematicChain;
use crate::servo::{
    error_magnitudes, pose_error, step_limited, ControllerGains, ControllerState, LyapunovSample, SpeedLimit,
};

use super::observe::{observe, ObservationModel};
use super::trajectory::TrajectoryScript;

/// Pre-grasp to grasp switch: `‖1 − ê‖²` over the eight coefficients.
pub const DEFAULT_PREGRASP_THRESHOLD: f64 = 1e-4;
/// Grasp convergence: translation (m).
pub const DEFAULT_GRASP_TRANSLATION: f64 = 2e-3;
/// Grasp convergence: rotation (rad).
pub const DEFAULT_GRASP_ROTATION: f64 = 0.5 * std::f64::consts::PI / 180.0;

/// Grasp selection settings of an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionConfig {
    pub k: usize,
    pub delta: f64,
    pub pregrasp_threshold: f64,
    pub grasp_translation: f64,
    pub grasp_rotation: f64,
    pub ik_gains: ControllerGains,
    pub ik_max_iter: usize,
    pub vptree_seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        let p = SelectionParams::default();
        Self {
            k: DEFAULT_K,
            delta: DEFAULT_DELTA,
            pregrasp_threshold: DEFAULT_PREGRASP_THRESHOLD,
            grasp_translation: DEFAULT_GRASP_TRANSLATION,
            grasp_rotation: DEFAULT_GRASP_ROTATION,
            ik_gains: p.ik_gains,
            ik_max_iter: p.ik_max_iter,
            vptree_seed: DEFAULT_SEED,
        }
    }
}

impl SelectionConfig {
    fn params(&self) -> SelectionParams {
        SelectionParams {
            k: self.k,
            ik_gains: self.ik_gains,
            ik_max_iter: self.ik_max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub chain: KinematicChain,
    pub grasps: Vec<GraspCandidate>,
    pub gains: ControllerGains,
    /// Cap on the commanded tool speed, if any.
    pub speed_limit: Option<SpeedLimit>,
    pub trajectory: TrajectoryScript,
    pub observation: ObservationModel,
    pub selection: SelectionConfig,
    pub nullspace: bool,
    pub rerank: bool,
    /// Initial joint configuration.
    pub q0: DVector<f64>,
    /// Simulated time limit (s).
    pub max_duration: f64,
    /// Simulated time kept after a successful grasp (s).
    pub hold_after_grasp: f64,
}

impl EpisodeConfig {
    /// Every problem with the configuration, one message each.
    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = self.gains.problems();
        if let Some(l) = &self.speed_limit {
            out.extend(l.problems());
        }
        let s = &self.selection;
        for (name, v) in [
            ("delta", s.delta),
            ("pregrasp_threshold", s.pregrasp_threshold),
            ("grasp_translation", s.grasp_translation),
            ("grasp_rotation", s.grasp_rotation),
            ("max_duration", self.max_duration),
        ] {
            let ok = if name == "delta" { v >= 0.0 } else { v > 0.0 };
            if !(ok && v.is_finite()) {
                out.push(format!("{name} must be {} 0, got {v}", if name == "delta" { ">=" } else { ">" }));
            }
        }
        if !(self.hold_after_grasp >= 0.0 && self.hold_after_grasp.is_finite()) {
            out.push(format!("hold_after_grasp must be >= 0, got {}", self.hold_after_grasp));
        }
        if s.k == 0 {
            out.push("k must be >= 1".into());
        }
        if s.ik_max_iter == 0 {
            out.push("ik_max_iter must be >= 1".into());
        }
        out.extend(s.ik_gains.problems().into_iter().map(|p| format!("ik {p}")));
        if !(self.observation.sigma_t >= 0.0 && self.observation.sigma_r >= 0.0) {
            out.push("observation noise must be >= 0".into());
        }
        if self.q0.len() != self.chain.dof() {
            out.push(format!(
                "q0 has {} entries, the chain has {} joints",
                self.q0.len(),
                self.chain.dof()
            ));
        } else if !self.chain.within_limits(&self.q0) {
            out.push("q0 is outside the joint limits".into());
        }
        if self.grasps.is_empty() {
            out.push("at least one grasp candidate is required".into());
        }
        for g in &self.grasps {
            if let Err(e) = g.validate() {
                out.push(e.to_string());
            }
        }
        if let Err(e) = self.trajectory.validate() {
            out.push(format!("trajectory: {e}"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(invalid(p.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    PreGrasp,
    Grasp,
    /// Grasp reached; the object is held still.
    Grasped,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::PreGrasp => "pregrasp",
            Phase::Grasp => "grasp",
            Phase::Grasped => "grasped",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// State at the start of one control iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRow {
    pub iteration: u64,
    pub t: f64,
    pub q: Vec<f64>,
    /// Coefficients of `ê = x_c* x_d`.
    pub error: [f64; 8],
    pub translation_error: f64,
    pub rotation_error: f64,
    pub lyapunov: LyapunovSample,
    /// Whether this iteration's joint update hit a limit.
    pub clamped: bool,
    /// True object pose.
    pub object: [f64; 8],
    pub active_grasp: Option<u32>,
    pub phase: Phase,
    /// `Υ` of the active grasp.
    pub upsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub success: bool,
    /// Reference changes made by the re-ranking; `None` when it was disabled.
    pub switches: Option<usize>,
    pub time_to_grasp: Option<f64>,
    pub telemetry: Vec<TelemetryRow>,
    /// Iterations whose update was clamped.
    pub clamp_events: Vec<u64>,
    /// `[start, end)` times during which no feasible grasp was available.
    pub no_grasp_intervals: Vec<(f64, f64)>,
}

fn coeffs8(x: &Pose) -> [f64; 8] {
    let c = x.coeffs();
    std::array::from_fn(|i| c[i])
}

/// Runs one closed-loop episode.
pub fn run_episode(config: &EpisodeConfig) -> Result<EpisodeResult> {
    config.validate()?;
    let chain = &config.chain;
    let gains = &config.gains;
    let sel = &config.selection;
    let params = sel.params();
    let selector = GraspSelector::new(config.grasps.clone(), sel.vptree_seed)?;
    let fixed = (!config.rerank).then(|| selector.top_ranked());

    let x0 = chain.forward_kinematics(&config.q0)?;
    let mut state = ControllerState::new(chain, config.q0.clone(), x0)?;
    let mut switch = SwitchState::new(sel.delta);
    let mut phase = Phase::PreGrasp;
    let mut active: Option<u32> = fixed;
    let mut upsilon: Option<f64> = None;
    let mut switches = 0usize;
    let mut held_object: Option<Pose> = None;
    let mut time_to_grasp = None;
    let mut release_at = f64::INFINITY;
    let mut no_grasp_since: Option<f64> = None;
    let mut no_grasp_intervals = Vec::new();
    let mut telemetry = Vec::new();
    let mut clamp_events = Vec::new();

    let steps = (config.max_duration / gains.dt).ceil() as u64;
    for i in 0..=steps {
        let t = i as f64 * gains.dt;
        if t >= release_at {
            break;
        }
        let object = held_object.unwrap_or_else(|| config.trajectory.pose(t));
        let observed = observe(&object, &config.observation, t);

        if phase == Phase::PreGrasp && config.rerank {
            let (next, selection) = selector.select(&switch, &observed, &state.x_c, chain, &state.q, &params)?;
            switch = next;
            match selection {
                Selection::Chosen { grasp, upsilon: u, switched, .. } => {
                    if switched {
                        switches += 1;
                    }
                    active = Some(grasp.id);
                    upsilon = Some(u);
                    if let Some(start) = no_grasp_since.take() {
                        no_grasp_intervals.push((start, t));
                    }
                }
                Selection::NoGraspAvailable => {
                    no_grasp_since.get_or_insert(t);
                }
            }
        }

        // reference from the observed object; convergence judged on the true one
        let reference = |x_o: &Pose| {
            active.and_then(|id| selector.world(id, x_o)).map(|g| match phase {
                Phase::PreGrasp => g.world_pregrasp,
                _ => g.world_grasp,
            })
        };
        if let Some(x_d) = reference(&observed) {
            state.x_d = x_d;
        }
        // with no grasp yet the gripper holds its pose: x_d stays at x0

        let report = step_limited(&state, chain, gains, config.nullspace, config.speed_limit.as_ref());
        let (te, re) = error_magnitudes(&report.error);
        telemetry.push(TelemetryRow {
            iteration: state.iteration,
            t,
            q: state.q.iter().copied().collect(),
            error: coeffs8(&report.error),
            translation_error: te,
            rotation_error: re,
            lyapunov: report.lyapunov,
            clamped: report.clamped,
            object: coeffs8(&object),
            active_grasp: active,
            phase,
            upsilon,
        });
        if report.clamped {
            clamp_events.push(state.iteration);
        }

        match phase {
            Phase::PreGrasp => {
                if active.is_some() && report.lyapunov.v < sel.pregrasp_threshold {
                    phase = Phase::Grasp;
                }
            }
            Phase::Grasp => {
                let true_ref = reference(&object).expect("grasp phase has an active grasp");
                let (te, re) = error_magnitudes(&pose_error(&state.x_c, &true_ref));
                if te < sel.grasp_translation && re < sel.grasp_rotation {
                    phase = Phase::Grasped;
                    time_to_grasp = Some(t);
                    held_object = Some(object);
                    release_at = t + config.hold_after_grasp;
                }
            }
            Phase::Grasped => {}
        }
        state = report.state;
    }
    if let Some(start) = no_grasp_since {
        let end = telemetry.last().map_or(start, |r| r.t + gains.dt);
        no_grasp_intervals.push((start, end));
    }

    Ok(EpisodeResult {
        success: time_to_grasp.is_some(),
        switches: config.rerank.then_some(switches),
        time_to_grasp,
        telemetry,
        clamp_events,
        no_grasp_intervals,
    })
}
