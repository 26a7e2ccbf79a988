use std::collections::HashMap;

use nalgebra::DVector;

use super::locomo::GraspCandidate;
use super::vptree::{Neighbor, VpTree};
use crate::dq::{dq_distance, Pose};
use crate::error::{invalid, Result};
use crate::kinematics::KinematicChain;
use crate::servo::{ik_feasible, ControllerGains};

/// Default number of nearest grasps considered per step.
pub const DEFAULT_K: usize = 5;
/// Default switching threshold on the re-rank value.
pub const DEFAULT_DELTA: f64 = 0.05;
/// Re-rank values closer than this count as a tie, settled by LoCoMo score.
const TIE_TOLERANCE: f64 = 1e-9;

/// Normalized distances `Υ_i = dq_i / (dq_max − dq_min)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rerank {
    pub values: Vec<f64>,
    /// Set when `dq_max = dq_min`; all values are then 0.
    pub degenerate: bool,
}

pub fn rerank(distances: &[f64]) -> Rerank {
    let max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if distances.is_empty() || !(range > 0.0) {
        return Rerank {
            values: vec![0.0; distances.len()],
            degenerate: true,
        };
    }
    Rerank {
        values: distances.iter().map(|d| d / range).collect(),
        degenerate: false,
    }
}

/// A candidate placed in the world by the current object pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedGrasp {
    pub id: u32,
    pub locomo_score: f64,
    pub world_grasp: Pose,
    pub world_pregrasp: Pose,
}

/// World grasp and pre-grasp poses for object pose `x_o`.
pub fn to_world(candidate: &GraspCandidate, x_o: &Pose) -> Result<RankedGrasp> {
    Ok(RankedGrasp {
        id: candidate.id,
        locomo_score: candidate.score()?,
        world_grasp: *x_o * candidate.grasp,
        world_pregrasp: *x_o * candidate.pregrasp(),
    })
}

/// Hysteresis state of the grasp currently used as reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchState {
    pub active: Option<u32>,
    /// `Υ` of the active grasp at the last selection.
    pub active_value: f64,
    /// Minimum improvement of `Υ` required to switch.
    pub delta: f64,
}

impl SwitchState {
    pub fn new(delta: f64) -> Self {
        Self {
            active: None,
            active_value: 0.0,
            delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    /// Number of nearest grasps re-ranked per step.
    pub k: usize,
    /// Gains of the feasibility IK run.
    pub ik_gains: ControllerGains,
    pub ik_max_iter: usize,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            ik_gains: ControllerGains {
                k: 20.0,
                dt: 0.05,
                ..ControllerGains::default()
            },
            ik_max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    Chosen {
        grasp: RankedGrasp,
        upsilon: f64,
        switched: bool,
        degenerate: bool,
    },
    /// No candidate near the gripper passed the feasibility check.
    NoGraspAvailable,
}

/// Per-candidate data the decision needs.
#[derive(Debug, Clone, Copy)]
struct Scored {
    id: u32,
    score: f64,
    distance: f64,
    feasible: bool,
}

fn better(a: &Scored, ua: f64, b: &Scored, ub: f64) -> bool {
    if (ua - ub).abs() > TIE_TOLERANCE {
        return ua < ub;
    }
    if a.score != b.score {
        return a.score > b.score;
    }
    a.id < b.id
}

/// Hysteresis decision over the re-ranked feasible neighbors. `active` is
/// the currently active candidate's data when it has one.
fn decide(state: &SwitchState, near: &[Scored], active: Option<&Scored>) -> Option<(u32, f64, bool, bool)> {
    let feasible: Vec<&Scored> = near.iter().filter(|s| s.feasible).collect();
    if feasible.is_empty() {
        return match active {
            Some(a) if a.feasible => Some((a.id, state.active_value, false, true)),
            _ => None,
        };
    }
    let distances: Vec<f64> = feasible.iter().map(|s| s.distance).collect();
    let rr = rerank(&distances);
    let mut best = 0;
    for i in 1..feasible.len() {
        if better(feasible[i], rr.values[i], feasible[best], rr.values[best]) {
            best = i;
        }
    }
    let (best_id, best_value) = (feasible[best].id, rr.values[best]);

    let Some(a) = active.filter(|a| a.feasible) else {
        // first selection, or the active grasp became infeasible
        let switched = state.active.is_some() && state.active != Some(best_id);
        return Some((best_id, best_value, switched, rr.degenerate));
    };
    let active_value = if rr.degenerate {
        0.0
    } else {
        let range = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - distances.iter().copied().fold(f64::INFINITY, f64::min);
        a.distance / range
    };
    if rr.degenerate || best_id == a.id {
        return Some((a.id, active_value, false, rr.degenerate));
    }
    let gap = active_value - best_value;
    if gap > 0.0 && gap >= state.delta {
        Some((best_id, best_value, true, false))
    } else {
        Some((a.id, active_value, false, false))
    }
}

fn apply(
    state: &SwitchState,
    decision: Option<(u32, f64, bool, bool)>,
    world: impl Fn(u32) -> RankedGrasp,
) -> (SwitchState, Selection) {
    match decision {
        None => (*state, Selection::NoGraspAvailable),
        Some((id, upsilon, switched, degenerate)) => (
            SwitchState {
                active: Some(id),
                active_value: upsilon,
                delta: state.delta,
            },
            Selection::Chosen {
                grasp: world(id),
                upsilon,
                switched,
                degenerate,
            },
        ),
    }
}

/// Picks the reference grasp: the `k` pre-grasp poses nearest the gripper are
/// checked for IK feasibility from `q`, re-ranked, and the active grasp is
/// replaced only when the best one improves `Υ` by at least `δ` or the active
/// grasp became infeasible.
pub fn select_grasp(
    state: &SwitchState,
    gripper: &Pose,
    grasps: &[RankedGrasp],
    chain: &KinematicChain,
    q: &DVector<f64>,
    params: &SelectionParams,
) -> Result<(SwitchState, Selection)> {
    if grasps.is_empty() {
        return Err(invalid("grasp selection needs at least one candidate"));
    }
    let by_id: HashMap<u32, &RankedGrasp> = grasps.iter().map(|g| (g.id, g)).collect();
    if by_id.len() != grasps.len() {
        return Err(invalid("grasp ids must be unique"));
    }
    let tree = VpTree::build(
        grasps.iter().map(|g| (g.id, g.world_pregrasp)).collect(),
        super::vptree::DEFAULT_SEED,
    )?;
    let k = params.k.clamp(1, grasps.len());
    let near = tree.k_nearest(gripper, k)?;
    let feasible = |g: &RankedGrasp| -> Result<bool> {
        Ok(ik_feasible(chain, q, &g.world_pregrasp, &params.ik_gains, params.ik_max_iter)?.feasible)
    };
    let mut scored = Vec::with_capacity(near.len());
    for n in &near {
        let g = by_id[&n.id];
        scored.push(Scored {
            id: n.id,
            score: g.locomo_score,
            distance: n.distance,
            feasible: feasible(g)?,
        });
    }
    let active = match state.active.and_then(|id| by_id.get(&id)) {
        Some(g) => Some(match scored.iter().find(|s| s.id == g.id) {
            Some(s) => *s,
            None => Scored {
                id: g.id,
                score: g.locomo_score,
                distance: dq_distance(gripper, &g.world_pregrasp),
                feasible: feasible(g)?,
            },
        }),
        None => None,
    };
    let decision = decide(state, &scored, active.as_ref());
    Ok(apply(state, decision, |id| *by_id[&id]))
}

/// Grasp selection over a fixed candidate set, with the vp-tree built once
/// in the object frame.
///
/// The dual quaternion distance is left-invariant, `d(x a, x b) = d(a, b)`,
/// so querying the object-frame tree with `x_o* x_gripper` returns the same
/// neighbors as a tree over the world pre-grasp poses.
#[derive(Debug, Clone)]
pub struct GraspSelector {
    candidates: Vec<GraspCandidate>,
    scores: Vec<f64>,
    index: HashMap<u32, usize>,
    tree: VpTree,
}

impl GraspSelector {
    pub fn new(candidates: Vec<GraspCandidate>, seed: u64) -> Result<Self> {
        if candidates.is_empty() {
            return Err(invalid("grasp selection needs at least one candidate"));
        }
        let scores = candidates.iter().map(|c| c.score()).collect::<Result<Vec<_>>>()?;
        let index: HashMap<u32, usize> = candidates.iter().enumerate().map(|(i, c)| (c.id, i)).collect();
        if index.len() != candidates.len() {
            return Err(invalid("grasp ids must be unique"));
        }
        let tree = VpTree::build(candidates.iter().map(|c| (c.id, c.pregrasp())).collect(), seed)?;
        Ok(Self {
            candidates,
            scores,
            index,
            tree,
        })
    }

    pub fn candidates(&self) -> &[GraspCandidate] {
        &self.candidates
    }

    pub fn score(&self, id: u32) -> Option<f64> {
        self.index.get(&id).map(|&i| self.scores[i])
    }

    /// Id of the candidate with the highest LoCoMo score (lowest id on ties).
    pub fn top_ranked(&self) -> u32 {
        let mut best = 0;
        for i in 1..self.candidates.len() {
            if self.scores[i] > self.scores[best] {
                best = i;
            }
        }
        self.candidates[best].id
    }

    pub fn world(&self, id: u32, x_o: &Pose) -> Option<RankedGrasp> {
        let &i = self.index.get(&id)?;
        let c = &self.candidates[i];
        Some(RankedGrasp {
            id,
            locomo_score: self.scores[i],
            world_grasp: *x_o * c.grasp,
            world_pregrasp: *x_o * c.pregrasp(),
        })
    }

    /// The `k` pre-grasp poses nearest `gripper` with the object at `x_o`.
    pub fn nearest(&self, x_o: &Pose, gripper: &Pose, k: usize) -> Result<Vec<Neighbor>> {
        let query = x_o.conjugate() * *gripper;
        self.tree.k_nearest(&query, k.clamp(1, self.tree.len()))
    }

    /// Same decision as [`select_grasp`] with the object at `x_o`.
    #[allow(clippy::too_many_arguments)]
    pub fn select(
        &self,
        state: &SwitchState,
        x_o: &Pose,
        gripper: &Pose,
        chain: &KinematicChain,
        q: &DVector<f64>,
        params: &SelectionParams,
    ) -> Result<(SwitchState, Selection)> {
        let near = self.nearest(x_o, gripper, params.k)?;
        let feasible = |id: u32| -> Result<bool> {
            let g = self.world(id, x_o).expect("known id");
            Ok(ik_feasible(chain, q, &g.world_pregrasp, &params.ik_gains, params.ik_max_iter)?.feasible)
        };
        let mut scored = Vec::with_capacity(near.len());
        for n in &near {
            scored.push(Scored {
                id: n.id,
                score: self.score(n.id).expect("known id"),
                distance: n.distance,
                feasible: feasible(n.id)?,
            });
        }
        let active = match state.active.filter(|id| self.index.contains_key(id)) {
            Some(id) => Some(match scored.iter().find(|s| s.id == id) {
                Some(s) => *s,
                None => {
                    let g = self.world(id, x_o).expect("known id");
                    Scored {
                        id,
                        score: g.locomo_score,
                        distance: dq_distance(gripper, &g.world_pregrasp),
                        feasible: feasible(id)?,
                    }
                }
            }),
            None => None,
        };
        let decision = decide(state, &scored, active.as_ref());
        Ok(apply(state, decision, |id| self.world(id, x_o).expect("known id")))
    }
}
