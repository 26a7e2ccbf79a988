//! Closed-loop simulation: scripted object motion, noisy observation, the
//! pre-grasp/grasp episode and the ablation grid.

pub mod ablation;
pub mod desk;
pub mod episode;
pub mod observe;
pub mod regulation;
pub mod trajectory;

pub use ablation::{ablation_grid, ablation_suite, cell_config, grid_cells, AblationRow, AblationSummary, GridCell, Variant};
pub use episode::{
    run_episode, EpisodeConfig, EpisodeResult, Phase, SelectionConfig, TelemetryRow, DEFAULT_GRASP_ROTATION,
    DEFAULT_GRASP_TRANSLATION, DEFAULT_PREGRASP_THRESHOLD,
};
pub use observe::{observe, ObservationModel};
pub use regulation::{
    regulation_gains, regulation_pairs, regulation_suite, run_regulation, RegulationResult, RegulationStep,
    SuiteSummary, LYAPUNOV_SLACK,
};
pub use trajectory::{RotationSpec, TrajectoryKind, TrajectoryScript};
