use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use super::{parse_chain_file, parse_grasps_file, parse_scenario, write_telemetry};
use crate::dq::{dq_distance, Pose};
use crate::error::{invalid, Error, Result};
use crate::grasp::{rerank, GraspSelector, Selection, SwitchState, DEFAULT_SEED};
use crate::kinematics::max_jacobian_error;
use crate::sim::{ablation_grid, ablation_suite, run_episode, run_regulation, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_EPISODE_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dqvs", version, about = "Dual quaternion visual servoing toward moving grasp targets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one episode and write its telemetry CSV.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory, created if absent.
        #[arg(long)]
        out: PathBuf,
        /// Observation noise seed.
        #[arg(long)]
        seed: u64,
    },
    /// Run the trajectory × rotation × variant grid and write a summary table.
    Ablate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
    },
    /// Print LoCoMo scores and the re-ranked nearest grasps.
    Rank {
        #[arg(long)]
        grasps: PathBuf,
        /// Object pose, 8 dual quaternion coefficients.
        #[arg(long, num_args = 8, allow_negative_numbers = true, value_name = "C")]
        pose: Vec<f64>,
        /// Gripper pose, 8 coefficients (default: identity).
        #[arg(long, num_args = 8, allow_negative_numbers = true, value_name = "C")]
        gripper: Option<Vec<f64>>,
        /// Number of nearest pre-grasp poses to re-rank (default: all).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Compare the geometric Jacobian with central differences.
    CheckJacobian {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Regulate to the scenario's initial pre-grasp with a static object and
    /// write the error-vs-iteration CSV.
    Convergence {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        iterations: usize,
    },
}

/// Runs the command line `args` (program name first) and returns the exit
/// code: 0 success, 1 episode failure, 2 usage error, 3 bad input file.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == EXIT_OK { stdout } else { stderr };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn out(stdout: &mut dyn Write, text: &str) -> Result<()> {
    stdout.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

fn pose_arg(name: &str, c: &[f64]) -> Result<Pose> {
    let c: [f64; 8] = c.try_into().map_err(|_| invalid(format!("--{name} needs 8 values")))?;
    Pose::from_coeffs(c, super::text::POSE_TOLERANCE).map_err(|e| invalid(format!("--{name}: {e}")))
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Simulate { scenario, out: dir, seed } => {
            let mut cfg = parse_scenario(&scenario)?;
            cfg.observation.seed = seed;
            let r = run_episode(&cfg)?;
            create_out(&dir)?;
            let path = dir.join("telemetry.csv");
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            write_telemetry(std::io::BufWriter::new(file), cfg.chain.dof(), &r.telemetry)?;
            let mut s = format!("success: {}\n", r.success);
            s += &format!(
                "time_to_grasp: {}\n",
                r.time_to_grasp.map_or("-".into(), |t| format!("{t:.2} s"))
            );
            s += &format!("switches: {}\n", r.switches.map_or("NA".into(), |n| n.to_string()));
            s += &format!("clamp_events: {}\n", r.clamp_events.len());
            s += &format!("no_grasp_intervals: {}\n", r.no_grasp_intervals.len());
            s += &format!("steps: {}\ntelemetry: {}\n", r.telemetry.len(), path.display());
            out(stdout, &s)?;
            Ok(if r.success { EXIT_OK } else { EXIT_EPISODE_FAILED })
        }
        Command::Ablate { scenario, out: dir, seed } => {
            let mut base = parse_scenario(&scenario)?;
            base.observation.seed = seed;
            let summary = ablation_suite(&ablation_grid(&base));
            create_out(&dir)?;
            let table = summary.to_table();
            let path = dir.join("ablation.tsv");
            fs::write(&path, &table).map_err(io_err(&path))?;
            let mut s = table;
            for v in Variant::ALL {
                let (ok, n) = summary.successes(v);
                s += &format!("# {v}: {ok}/{n} successes\n");
            }
            for r in summary.rows.iter().filter(|r| r.error.is_some()) {
                s += &format!(
                    "# {} {} {}: {}\n",
                    r.cell.kind,
                    r.cell.rotation,
                    r.cell.variant,
                    r.error.as_deref().unwrap_or_default()
                );
            }
            out(stdout, &s)?;
            Ok(EXIT_OK)
        }
        Command::Rank { grasps, pose, gripper, k } => {
            let candidates = parse_grasps_file(&grasps)?;
            let x_o = pose_arg("pose", &pose)?;
            let gripper = match gripper {
                Some(g) => pose_arg("gripper", &g)?,
                None => Pose::identity(),
            };
            let selector = GraspSelector::new(candidates, DEFAULT_SEED)?;
            let mut scores: Vec<(u32, f64)> = selector
                .candidates()
                .iter()
                .map(|c| (c.id, selector.score(c.id).expect("known id")))
                .collect();
            scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let mut s = String::from("# LoCoMo score, descending\nid\tscore\n");
            for (id, r) in &scores {
                s += &format!("{id}\t{r:?}\n");
            }
            let k = k.unwrap_or(scores.len()).clamp(1, scores.len());
            let near = selector.nearest(&x_o, &gripper, k)?;
            let rr = rerank(&near.iter().map(|n| n.distance).collect::<Vec<_>>());
            s += &format!("# {k} nearest pre-grasp poses, re-ranked\nid\tdistance\tupsilon\n");
            for (n, u) in near.iter().zip(&rr.values) {
                s += &format!("{}\t{:?}\t{:?}\n", n.id, n.distance, u);
            }
            if rr.degenerate {
                s += "# all distances tie\n";
            }
            out(stdout, &s)?;
            Ok(EXIT_OK)
        }
        Command::CheckJacobian { chain, trials, step, seed } => {
            let chain = parse_chain_file(&chain)?;
            if trials == 0 || !(step > 0.0 && step.is_finite()) {
                return Err(invalid("--trials must be >= 1 and --step > 0"));
            }
            let err = max_jacobian_error(&chain, trials, step, seed)?;
            out(
                stdout,
                &format!("trials: {trials}\nstep: {step:e}\nmax_error: {err:e}\n"),
            )?;
            Ok(EXIT_OK)
        }
        Command::Convergence { scenario, out: dir, iterations } => {
            let cfg = parse_scenario(&scenario)?;
            let selector = GraspSelector::new(cfg.grasps.clone(), cfg.selection.vptree_seed)?;
            let x_o = cfg.trajectory.pose(0.0);
            let x_c = cfg.chain.forward_kinematics(&cfg.q0)?;
            let params = crate::grasp::SelectionParams {
                k: cfg.selection.k,
                ik_gains: cfg.selection.ik_gains,
                ik_max_iter: cfg.selection.ik_max_iter,
            };
            let (_, sel) = selector.select(
                &SwitchState::new(cfg.selection.delta),
                &x_o,
                &x_c,
                &cfg.chain,
                &cfg.q0,
                &params,
            )?;
            let Selection::Chosen { grasp, .. } = sel else {
                out(stdout, "no feasible grasp near the start pose\n")?;
                return Ok(EXIT_EPISODE_FAILED);
            };
            let r = run_regulation(&cfg.chain, &cfg.q0, &grasp.world_pregrasp, &cfg.gains, cfg.nullspace, iterations)?;
            create_out(&dir)?;
            let path = dir.join("convergence.csv");
            let rows: Vec<_> = r.steps.iter().map(|s| s.row.clone()).collect();
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            write_telemetry(std::io::BufWriter::new(file), cfg.chain.dof(), &rows)?;
            out(
                stdout,
                &format!(
                    "grasp: {}\ninitial_distance: {:?}\nconverged_at: {}\nfinal_translation_error: {:e}\nfinal_rotation_error: {:e}\ncsv: {}\n",
                    grasp.id,
                    dq_distance(&x_c, &grasp.world_pregrasp),
                    r.converged_at.map_or("-".into(), |i| i.to_string()),
                    r.final_error.0,
                    r.final_error.1,
                    path.display()
                ),
            )?;
            Ok(if r.converged() { EXIT_OK } else { EXIT_EPISODE_FAILED })
        }
    }
}
