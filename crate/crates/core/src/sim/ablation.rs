use std::fmt;

use rayon::prelude::*;

use super::episode::{run_episode, EpisodeConfig};
use super::trajectory::{TrajectoryKind, TrajectoryScript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Full,
    NoNullspace,
    NoRerank,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::NoNullspace, Variant::NoRerank];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoNullspace => "no-nullspace",
            Variant::NoRerank => "no-rerank",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One cell of the trajectory × rotation × variant grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridCell {
    pub kind: TrajectoryKind,
    pub rotation: bool,
    pub variant: Variant,
}

/// All 30 cells, variant-major so each variant's rows stay together.
pub fn grid_cells() -> Vec<GridCell> {
    let mut out = Vec::with_capacity(30);
    for variant in Variant::ALL {
        for kind in TrajectoryKind::ALL {
            for rotation in [false, true] {
                out.push(GridCell { kind, rotation, variant });
            }
        }
    }
    out
}

/// The episode for `cell` derived from `base`: the path is centred on the
/// base trajectory's start pose and keeps its speed, length, radii and
/// amplitude; frequency takes the kind's default.
pub fn cell_config(base: &EpisodeConfig, cell: GridCell) -> EpisodeConfig {
    let b = &base.trajectory;
    let traj = TrajectoryScript {
        speed: b.speed,
        length: b.length,
        radii: b.radii,
        amplitude: b.amplitude,
        rotation: cell.rotation.then(|| b.rotation.unwrap_or_default()),
        ..TrajectoryScript::new(cell.kind, b.start)
    }
    .centered_on(b.start);
    let mut cfg = base.clone();
    cfg.trajectory = traj;
    cfg.nullspace = cell.variant != Variant::NoNullspace;
    cfg.rerank = cell.variant != Variant::NoRerank;
    cfg
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub cell: GridCell,
    pub success: bool,
    pub switches: Option<usize>,
    pub time_to_grasp: Option<f64>,
    pub clamp_events: usize,
    /// Set when the episode could not run at all.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationSummary {
    pub rows: Vec<AblationRow>,
}

impl AblationSummary {
    pub fn successes(&self, variant: Variant) -> (usize, usize) {
        let rows: Vec<_> = self.rows.iter().filter(|r| r.cell.variant == variant).collect();
        (rows.iter().filter(|r| r.success).count(), rows.len())
    }

    /// Tab-separated table with a header row.
    pub fn to_table(&self) -> String {
        let mut s = String::from("trajectory\trotation\tvariant\tswitches\ttime_s\tsuccess\tclamp_events\n");
        for r in &self.rows {
            let switches = r.switches.map_or("NA".to_string(), |n| n.to_string());
            let time = r.time_to_grasp.map_or("-".to_string(), |t| format!("{t:.2}"));
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.cell.kind,
                if r.cell.rotation { "rot" } else { "no-rot" },
                r.cell.variant,
                switches,
                time,
                if r.success { "yes" } else { "no" },
                r.clamp_events,
            ));
        }
        s
    }
}

/// Runs every configuration, in parallel, and reports the rows in input
/// order. A failing or invalid episode becomes an unsuccessful row.
pub fn ablation_suite(configs: &[(GridCell, EpisodeConfig)]) -> AblationSummary {
    let rows = configs
        .par_iter()
        .map(|(cell, cfg)| match run_episode(cfg) {
            Ok(r) => AblationRow {
                cell: *cell,
                success: r.success,
                switches: r.switches,
                time_to_grasp: r.time_to_grasp,
                clamp_events: r.clamp_events.len(),
                error: None,
            },
            Err(e) => AblationRow {
                cell: *cell,
                success: false,
                switches: None,
                time_to_grasp: None,
                clamp_events: 0,
                error: Some(e.to_string()),
            },
        })
        .collect();
    AblationSummary { rows }
}

/// The full grid derived from `base`.
pub fn ablation_grid(base: &EpisodeConfig) -> Vec<(GridCell, EpisodeConfig)> {
    grid_cells().into_iter().map(|c| (c, cell_config(base, c))).collect()
}
