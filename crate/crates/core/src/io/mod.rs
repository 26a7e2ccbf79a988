//! Text file formats, telemetry CSV and the command line.

mod chain;
pub mod cli;
mod grasps;
mod scenario;
mod telemetry;
mod text;

pub use chain::{format_chain, parse_chain, parse_chain_file};
pub use grasps::{format_grasps, parse_grasps, parse_grasps_file};
pub use scenario::{format_scenario, parse_scenario, parse_scenario_str};
pub use telemetry::{read_telemetry, telemetry_header, write_telemetry};
pub use text::POSE_TOLERANCE;
