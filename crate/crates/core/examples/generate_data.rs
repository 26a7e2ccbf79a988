//! Regenerates the bundled files in `crates/core/data` from the desk setup.

use std::fs;
use std::path::Path;

use dqvs::io::format_scenario;
use dqvs::sim::{desk, TrajectoryKind};

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    fs::create_dir_all(&dir)?;
    let scenarios = [
        ("static", desk::static_episode()),
        ("ellipse", desk::desk_episode(TrajectoryKind::Ellipse, false, 1)),
        ("sine_rot", desk::desk_episode(TrajectoryKind::Sine, true, 1)),
        ("desk_grid", desk::grid_base(1)),
        ("drift_out_of_reach", desk::drift_out_of_reach(1)),
        ("noisy_circle", desk::noisy_circle(1, 0.05)),
    ];
    for (i, (name, cfg)) in scenarios.iter().enumerate() {
        let (text, chain, grasps) = format_scenario(cfg, "reference_7dof.chain", "block.grasps");
        if i == 0 {
            fs::write(dir.join("reference_7dof.chain"), chain)?;
            fs::write(dir.join("block.grasps"), grasps)?;
        }
        fs::write(dir.join(format!("{name}.scenario")), text)?;
    }
    Ok(())
}
