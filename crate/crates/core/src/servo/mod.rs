//! Closed-loop pose regulation with the dual quaternion logarithmic
//! controller.
//!
//! One control step computes the error `ê = x_c* x_d`, the body-frame twist
//! `log(ê)`, moves it to the base frame with the adjoint, and maps it to joint
//! space through the damped pseudo-inverse of the geometric Jacobian. An
//! optional secondary task pulls the joints toward their mean positions inside
//! the null space of the primary task.

mod lyapunov;

pub use lyapunov::LyapunovSample;

use nalgebra::{DVector, Vector6};

use crate::dq::{adjoint, dq_distance, Pose, Twist};
use crate::error::{invalid, Result};
use crate::kinematics::{damped_pinv, null_space_projector, KinematicChain, DEFAULT_DAMPING};

/// IK runs that end closer than this (dual quaternion distance) are feasible.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-3;
/// Static regulation is converged below 1 mm of translation error ...
pub const CONVERGED_TRANSLATION: f64 = 1e-3;
/// ... and 0.1° of rotation error.
pub const CONVERGED_ROTATION: f64 = 0.1 * std::f64::consts::PI / 180.0;

/// Relative twist residual `‖JJ†v − v‖/‖v‖` above which a step is annotated
/// as damping-limited.
pub const DAMPING_ANNOTATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    /// Proportional gain (1/s).
    pub k: f64,
    /// Secondary task gain, non-positive (1/s).
    pub ks: f64,
    /// Damping of the pseudo-inverse.
    pub lambda: f64,
    /// Loop period (s).
    pub dt: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            k: 2.0,
            ks: -0.5,
            lambda: DEFAULT_DAMPING,
            dt: 0.05,
        }
    }
}

impl ControllerGains {
    pub fn new(k: f64, ks: f64, lambda: f64, dt: f64) -> Result<Self> {
        let gains = Self { k, ks, lambda, dt };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(invalid(problems.join("; ")))
        }
    }

    /// Every violated constraint as `field: message`.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.k > 0.0 && self.k.is_finite()) {
            out.push(format!("K: must be > 0, got {}", self.k));
        }
        if !(self.ks <= 0.0 && self.ks.is_finite()) {
            out.push(format!("Ks: must be <= 0, got {}", self.ks));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            out.push(format!("lambda: must be > 0, got {}", self.lambda));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("dt: must be > 0, got {}", self.dt));
        }
        out
    }

    /// Effective per-step gain `K·dt`.
    pub fn step_size(&self) -> f64 {
        self.k * self.dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub q: DVector<f64>,
    /// Current end-effector pose, always `FK(q)`.
    pub x_c: Pose,
    /// Reference pose.
    pub x_d: Pose,
    pub iteration: u64,
}

impl ControllerState {
    pub fn new(chain: &KinematicChain, q: DVector<f64>, x_d: Pose) -> Result<Self> {
        let x_c = chain.forward_kinematics(&q)?;
        Ok(Self {
            q,
            x_c,
            x_d,
            iteration: 0,
        })
    }

    pub fn with_reference(mut self, x_d: Pose) -> Self {
        self.x_d = x_d;
        self
    }
}

/// `ê = x_c* x_d`, in canonical sign.
pub fn pose_error(x_c: &Pose, x_d: &Pose) -> Pose {
    x_c.conjugate() * *x_d
}

/// Body-frame twist `log(ê)` commanded by the logarithmic controller.
pub fn control_twist(e: &Pose) -> Twist {
    e.log()
}

/// `Ad(x_c) ω^B`: the commanded twist in the base frame.
pub fn twist_to_base(x_c: &Pose, w_body: &Twist) -> Twist {
    adjoint(x_c, w_body)
}

/// Converts a base-frame dual quaternion twist, whose linear part is the
/// velocity of the point at the base origin, into `(ω; ṗ)` at the tool
/// origin: the quantity the geometric Jacobian produces.
pub fn tool_point_twist(x_c: &Pose, inertial: &Twist) -> Vector6<f64> {
    let w = inertial.angular;
    let v = inertial.linear + w.cross(&x_c.translation());
    Vector6::new(w.x, w.y, w.z, v.x, v.y, v.z)
}

/// Optional cap on the commanded tool speed. When `K·ω` or `K·ṗ` would
/// exceed it, the whole twist is scaled down uniformly, which keeps its
/// direction (and the descent of `V`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedLimit {
    /// m/s at the tool origin.
    pub linear: f64,
    /// rad/s
    pub angular: f64,
}

impl SpeedLimit {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.linear > 0.0) {
            out.push(format!("max_linear_speed: must be > 0, got {}", self.linear));
        }
        if !(self.angular > 0.0) {
            out.push(format!("max_angular_speed: must be > 0, got {}", self.angular));
        }
        out
    }

    /// Factor in (0, 1] applied to a tool-point twist commanded with gain `k`.
    pub fn scale(&self, k: f64, commanded: &Vector6<f64>) -> f64 {
        let w = k * commanded.fixed_rows::<3>(0).norm();
        let v = k * commanded.fixed_rows::<3>(3).norm();
        let mut s: f64 = 1.0;
        if w > self.angular {
            s = s.min(self.angular / w);
        }
        if v > self.linear {
            s = s.min(self.linear / v);
        }
        s
    }
}

/// Everything one control step needs, computed from a single FK/Jacobian
/// pass.
struct UpdateTerms {
    error: Pose,
    inertial: Twist,
    primary: DVector<f64>,
    commanded: Vector6<f64>,
    realized: Vector6<f64>,
    jacobian: crate::kinematics::Jacobian,
}

fn update_terms(state: &ControllerState, chain: &KinematicChain, gains: &ControllerGains) -> UpdateTerms {
    update_terms_limited(state, chain, gains, None)
}

fn update_terms_limited(
    state: &ControllerState,
    chain: &KinematicChain,
    gains: &ControllerGains,
    limit: Option<&SpeedLimit>,
) -> UpdateTerms {
    let jacobian = chain
        .geometric_jacobian(&state.q)
        .expect("controller state has chain-sized q");
    let error = pose_error(&state.x_c, &state.x_d);
    let inertial = twist_to_base(&state.x_c, &control_twist(&error));
    let commanded = tool_point_twist(&state.x_c, &inertial);
    let pinv = damped_pinv(&jacobian, gains.lambda);
    let scale = limit.map_or(1.0, |l| l.scale(gains.k, &commanded));
    let primary = &pinv * commanded * (gains.step_size() * scale);
    let realized = &jacobian.matrix * (&pinv * commanded);
    UpdateTerms {
        error,
        inertial,
        primary,
        commanded,
        realized,
        jacobian,
    }
}

/// `q_{k+1} = q_k + K·dt·J† vec6(Ad(x_c) log ê)`, without clamping.
pub fn joint_update(state: &ControllerState, chain: &KinematicChain, gains: &ControllerGains) -> DVector<f64> {
    let terms = update_terms(state, chain, gains);
    &state.q + terms.primary
}

/// Joint-limit secondary task `Ks·dt·P·(q − q̄)`, the projected gradient of
/// `½Σ(q − q̄)²`.
fn secondary_term(
    state: &ControllerState,
    chain: &KinematicChain,
    gains: &ControllerGains,
    jacobian: &crate::kinematics::Jacobian,
) -> DVector<f64> {
    let p = null_space_projector(jacobian, gains.lambda);
    p * (&state.q - chain.means()) * (gains.ks * gains.dt)
}

/// [`joint_update`] plus the null-space joint-limit term. With `Ks = 0` the
/// result is identical to [`joint_update`].
pub fn joint_update_nullspace(
    state: &ControllerState,
    chain: &KinematicChain,
    gains: &ControllerGains,
) -> DVector<f64> {
    let terms = update_terms(state, chain, gains);
    let q = &state.q + terms.primary;
    if gains.ks == 0.0 {
        return q;
    }
    q + secondary_term(state, chain, gains, &terms.jacobian)
}

/// `C_null = ½Σ(q − q̄)²`.
pub fn null_space_cost(chain: &KinematicChain, q: &DVector<f64>) -> f64 {
    0.5 * (q - chain.means()).norm_squared()
}

/// Lyapunov function of the error, `V1 = 2(1 − η_P)`, `V2 = η_D² + ‖μ_D‖²`.
pub fn lyapunov_value(e: &Pose) -> LyapunovSample {
    LyapunovSample::of_error(e)
}

/// Translation (m) and rotation (rad) magnitude of an error pose.
pub fn error_magnitudes(e: &Pose) -> (f64, f64) {
    (e.translation().norm(), e.rotation_angle())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub state: ControllerState,
    /// Error before the step.
    pub error: Pose,
    /// Lyapunov value of the error before the step.
    pub lyapunov: LyapunovSample,
    /// Lyapunov value of the error after the step (same reference).
    pub lyapunov_after: LyapunovSample,
    /// Commanded base-frame twist `Ad(x_c) log ê`.
    pub twist: Twist,
    /// A joint hit its limit and was clamped.
    pub clamped: bool,
    /// `‖JJ†v − v‖/‖v‖`: how much of the commanded twist the damped inverse
    /// fails to realize.
    pub damping_residual: f64,
    /// `‖J·Δq_secondary‖∞`, the end-effector twist produced by the null-space
    /// term (zero without it).
    pub secondary_twist: f64,
}

impl StepReport {
    pub fn damping_limited(&self) -> bool {
        self.damping_residual > DAMPING_ANNOTATION
    }
}

/// One control iteration: error, twist, joint update (clamped to the
/// limits) and FK refresh.
pub fn step(
    state: &ControllerState,
    chain: &KinematicChain,
    gains: &ControllerGains,
    use_nullspace: bool,
) -> StepReport {
    step_limited(state, chain, gains, use_nullspace, None)
}

/// [`step`] with the commanded twist capped by `limit`.
pub fn step_limited(
    state: &ControllerState,
    chain: &KinematicChain,
    gains: &ControllerGains,
    use_nullspace: bool,
    limit: Option<&SpeedLimit>,
) -> StepReport {
    let terms = update_terms_limited(state, chain, gains, limit);
    let mut q = &state.q + &terms.primary;
    let mut secondary_twist = 0.0;
    if use_nullspace && gains.ks != 0.0 {
        let sec = secondary_term(state, chain, gains, &terms.jacobian);
        secondary_twist = terms.jacobian.apply(&sec).amax();
        q += sec;
    }
    let (q, clamped) = chain.clamp(&q);
    let x_c = chain.forward_kinematics(&q).expect("chain-sized q");

    let cmd_norm = terms.commanded.norm();
    let damping_residual = if cmd_norm > 0.0 {
        (terms.realized - terms.commanded).norm() / cmd_norm
    } else {
        0.0
    };
    let next = ControllerState {
        q,
        x_c,
        x_d: state.x_d,
        iteration: state.iteration + 1,
    };
    StepReport {
        lyapunov: lyapunov_value(&terms.error),
        lyapunov_after: lyapunov_value(&pose_error(&next.x_c, &next.x_d)),
        error: terms.error,
        twist: terms.inertial,
        clamped,
        damping_residual,
        secondary_twist,
        state: next,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkOutcome {
    pub feasible: bool,
    pub q: DVector<f64>,
    /// Joint updates performed.
    pub iterations: usize,
    /// Final dual quaternion distance to the target.
    pub distance: f64,
}

/// Runs the joint-space controller toward `target` for at most `max_iter`
/// updates, clamping to the joint limits after each one. Feasible iff it
/// ends within [`FEASIBILITY_TOLERANCE`].
pub fn ik_feasible(
    chain: &KinematicChain,
    q_start: &DVector<f64>,
    target: &Pose,
    gains: &ControllerGains,
    max_iter: usize,
) -> Result<IkOutcome> {
    let mut state = ControllerState::new(chain, q_start.clone(), *target)?;
    let mut distance = dq_distance(&state.x_c, target);
    let mut iterations = 0;
    while distance >= FEASIBILITY_TOLERANCE && iterations < max_iter {
        state.q = chain.clamp(&joint_update(&state, chain, gains)).0;
        state.x_c = chain.forward_kinematics(&state.q)?;
        distance = dq_distance(&state.x_c, target);
        iterations += 1;
        if !distance.is_finite() {
            break;
        }
    }
    let feasible = distance < FEASIBILITY_TOLERANCE && chain.within_limits(&state.q);
    Ok(IkOutcome {
        feasible,
        q: state.q,
        iterations,
        distance,
    })
}
