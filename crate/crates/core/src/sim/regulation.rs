use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dq::Pose;
use crate::error::{invalid, Result};
use crate::kinematics::KinematicChain;
use crate::servo::{error_magnitudes, step, ControllerGains, ControllerState, CONVERGED_ROTATION, CONVERGED_TRANSLATION};

use super::episode::{Phase, TelemetryRow};

/// One iteration of a static regulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulationStep {
    pub row: TelemetryRow,
    /// `V` after the step, against the same target.
    pub v_after: f64,
    /// The damped inverse did not realize the commanded twist (see
    /// [`crate::servo::StepReport::damping_limited`]).
    pub damping_limited: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegulationResult {
    pub steps: Vec<RegulationStep>,
    /// First iteration at which the error was within 1 mm and 0.1°.
    pub converged_at: Option<u64>,
    /// Final translation (m) and rotation (rad) errors.
    pub final_error: (f64, f64),
    pub q: DVector<f64>,
}

impl RegulationResult {
    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }
}

/// Drives the arm from `q0` toward the fixed `target` for `iterations`
/// control steps and records every step.
pub fn run_regulation(
    chain: &KinematicChain,
    q0: &DVector<f64>,
    target: &Pose,
    gains: &ControllerGains,
    nullspace: bool,
    iterations: usize,
) -> Result<RegulationResult> {
    gains.validate()?;
    let mut state = ControllerState::new(chain, q0.clone(), *target)?;
    let mut steps = Vec::with_capacity(iterations);
    let mut converged_at = None;
    let target_coeffs = {
        let c = target.coeffs();
        std::array::from_fn(|i| c[i])
    };
    for _ in 0..iterations {
        let report = step(&state, chain, gains, nullspace);
        let (te, re) = error_magnitudes(&report.error);
        if converged_at.is_none() && te < CONVERGED_TRANSLATION && re < CONVERGED_ROTATION {
            converged_at = Some(state.iteration);
        }
        let c = report.error.coeffs();
        steps.push(RegulationStep {
            row: TelemetryRow {
                iteration: state.iteration,
                t: state.iteration as f64 * gains.dt,
                q: state.q.iter().copied().collect(),
                error: std::array::from_fn(|i| c[i]),
                translation_error: te,
                rotation_error: re,
                lyapunov: report.lyapunov,
                clamped: report.clamped,
                object: target_coeffs,
                active_grasp: None,
                phase: Phase::PreGrasp,
                upsilon: None,
            },
            v_after: report.lyapunov_after.v,
            damping_limited: report.damping_limited(),
        });
        state = report.state;
    }
    let (te, re) = error_magnitudes(&crate::servo::pose_error(&state.x_c, target));
    if converged_at.is_none() && te < CONVERGED_TRANSLATION && re < CONVERGED_ROTATION {
        converged_at = Some(state.iteration);
    }
    Ok(RegulationResult {
        steps,
        converged_at,
        final_error: (te, re),
        q: state.q,
    })
}

/// Tolerance on a per-step increase of `V` before it counts as one.
pub const LYAPUNOV_SLACK: f64 = 1e-12;

/// Gains of the static regulation suite: `K·dt = 0.1` and damping small
/// enough that the null-space term does not bias the converged pose.
pub fn regulation_gains() -> ControllerGains {
    ControllerGains {
        k: 2.0,
        ks: -0.5,
        lambda: 1e-6,
        dt: 0.05,
    }
}

/// `n` seeded start/target pairs: the start is `center` perturbed by up to
/// `spread` rad per joint, the target the pose of the start perturbed by up
/// to `reach` rad per joint (both clamped to the limits).
pub fn regulation_pairs(
    chain: &KinematicChain,
    center: &DVector<f64>,
    spread: f64,
    reach: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<(DVector<f64>, Pose)>> {
    if center.len() != chain.dof() {
        return Err(invalid(format!(
            "center has {} entries, chain has {} joints",
            center.len(),
            chain.dof()
        )));
    }
    if !(spread >= 0.0 && reach >= 0.0 && spread.is_finite() && reach.is_finite()) {
        return Err(invalid("spread and reach must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |q: &DVector<f64>, a: f64| {
        let moved = q.map(|v| v + if a > 0.0 { rng.random_range(-a..=a) } else { 0.0 });
        chain.clamp(&moved).0
    };
    (0..n)
        .map(|_| {
            let q0 = jitter(center, spread);
            let qt = jitter(&q0, reach);
            Ok((q0, chain.forward_kinematics(&qt)?))
        })
        .collect()
}

/// Aggregate of [`run_regulation`] over many pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub runs: usize,
    pub converged: usize,
    /// Latest first-convergence iteration among the converged runs.
    pub slowest: Option<u64>,
    pub steps: usize,
    /// Steps where `V` grew by more than [`LYAPUNOV_SLACK`].
    pub increases: usize,
    /// Increases on steps that were neither clamped nor damping-limited.
    pub unexplained: usize,
}

impl SuiteSummary {
    pub fn non_increasing_fraction(&self) -> f64 {
        if self.steps == 0 {
            1.0
        } else {
            1.0 - self.increases as f64 / self.steps as f64
        }
    }
}

pub fn regulation_suite(
    chain: &KinematicChain,
    pairs: &[(DVector<f64>, Pose)],
    gains: &ControllerGains,
    nullspace: bool,
    iterations: usize,
) -> Result<SuiteSummary> {
    let mut s = SuiteSummary {
        runs: pairs.len(),
        converged: 0,
        slowest: None,
        steps: 0,
        increases: 0,
        unexplained: 0,
    };
    for (q0, target) in pairs {
        let r = run_regulation(chain, q0, target, gains, nullspace, iterations)?;
        if let Some(at) = r.converged_at {
            s.converged += 1;
            s.slowest = s.slowest.max(Some(at));
        }
        for st in &r.steps {
            s.steps += 1;
            if st.v_after > st.row.lyapunov.v + LYAPUNOV_SLACK {
                s.increases += 1;
                if !(st.row.clamped || st.damping_limited) {
                    s.unexplained += 1;
                }
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn reaches_nearby_target() {
        let chain = KinematicChain::reference_7dof();
        let q0 = KinematicChain::reference_home();
        let start = chain.forward_kinematics(&q0).unwrap();
        let target = Pose::from_translation(&Vector3::new(0.05, -0.05, 0.02)) * start;
        let r = run_regulation(&chain, &q0, &target, &ControllerGains::default(), true, 300).unwrap();
        assert!(r.converged(), "{:?}", r.final_error);
        assert_eq!(r.steps.len(), 300);
    }

    #[test]
    fn pairs_are_seeded_and_in_limits() {
        let chain = KinematicChain::reference_7dof();
        let home = KinematicChain::reference_home();
        let a = regulation_pairs(&chain, &home, 0.8, 0.6, 5, 3).unwrap();
        assert_eq!(a, regulation_pairs(&chain, &home, 0.8, 0.6, 5, 3).unwrap());
        assert_ne!(a, regulation_pairs(&chain, &home, 0.8, 0.6, 5, 4).unwrap());
        assert!(a.iter().all(|(q, _)| chain.within_limits(q)));
        let still = regulation_pairs(&chain, &home, 0.0, 0.0, 1, 0).unwrap();
        assert_eq!(still[0].0, home);
        assert!(regulation_pairs(&chain, &home.rows(0, 3).into(), 0.1, 0.1, 1, 0).is_err());
    }
}
