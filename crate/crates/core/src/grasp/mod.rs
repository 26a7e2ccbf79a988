//! Grasp scoring, nearest-grasp search and dynamic re-ranking.

mod locomo;
mod ranking;
mod vptree;

pub use locomo::{locomo_score, FingerFeatures, GraspCandidate};
pub use ranking::{
    rerank, select_grasp, to_world, GraspSelector, RankedGrasp, Rerank, Selection,
    SelectionParams, SwitchState, DEFAULT_DELTA, DEFAULT_K,
};
pub use vptree::{Neighbor, VpTree, DEFAULT_SEED};

/// Default pre-grasp retreat along the approach axis (m).
pub const DEFAULT_PREGRASP_OFFSET: f64 = 0.10;
