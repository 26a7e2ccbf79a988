mod common;

use std::fs;

use common::{cli, data_dir};
use dqvs::grasp::{FingerFeatures, GraspCandidate};
use dqvs::io::{
    format_chain, format_grasps, parse_chain, parse_chain_file, parse_grasps, parse_grasps_file, parse_scenario,
    read_telemetry, telemetry_header, write_telemetry,
};
use dqvs::sim::{desk, run_episode, TrajectoryKind};
use dqvs::{KinematicChain, Pose};
use nalgebra::{DMatrix, DVector};

fn path(name: &str) -> String {
    data_dir().join(name).display().to_string()
}

#[test]
fn bundled_files_match_the_desk_setup() {
    assert_eq!(parse_chain_file(&data_dir().join("reference_7dof.chain")).unwrap(), KinematicChain::reference_7dof());
    assert_eq!(parse_grasps_file(&data_dir().join("block.grasps")).unwrap(), desk::reference_grasps());
    let cases = [
        ("static", desk::static_episode()),
        ("ellipse", desk::desk_episode(TrajectoryKind::Ellipse, false, 1)),
        ("sine_rot", desk::desk_episode(TrajectoryKind::Sine, true, 1)),
        ("desk_grid", desk::grid_base(1)),
        ("drift_out_of_reach", desk::drift_out_of_reach(1)),
        ("noisy_circle", desk::noisy_circle(1, 0.05)),
    ];
    for (name, cfg) in cases {
        let parsed = parse_scenario(&data_dir().join(format!("{name}.scenario"))).unwrap();
        assert!(parsed == cfg, "{name} differs from its builder");
    }
}

#[test]
fn text_formats_round_trip() {
    let chain = KinematicChain::reference_7dof();
    let p = std::path::Path::new("mem");
    assert_eq!(parse_chain(&format_chain(&chain), p).unwrap(), chain);
    let grasps = desk::reference_grasps();
    assert_eq!(parse_grasps(&format_grasps(&grasps), p).unwrap(), grasps);
}

#[test]
fn parse_errors_carry_line_numbers() {
    let p = std::path::Path::new("bad.chain");
    let text = format_chain(&KinematicChain::reference_7dof()).replacen("0.17", "abc", 1);
    let err = parse_chain(&text, p).unwrap_err().to_string();
    assert!(err.contains("bad.chain") && err.contains("line"), "{err}");
    assert!(parse_chain("not a chain\n", p).is_err());
}

#[test]
fn telemetry_round_trips_bit_exactly() {
    let r = run_episode(&desk::static_episode()).unwrap();
    let mut buf = Vec::new();
    write_telemetry(&mut buf, 7, &r.telemetry).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), telemetry_header(7).join(","));
    assert_eq!(read_telemetry(buf.as_slice()).unwrap(), r.telemetry);
    assert!(write_telemetry(Vec::new(), 6, &r.telemetry).is_err());
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["--help"]).0, 0);
    assert_eq!(cli(&[]).0, 2);
    assert_eq!(cli(&["simulate", "--scenario", "x"]).0, 2);
    let (code, _, err) = cli(&["check-jacobian", "--chain", "/nonexistent/arm.chain"]);
    assert_eq!(code, 3);
    assert!(err.contains("/nonexistent/arm.chain"), "{err}");
    assert_eq!(cli(&["check-jacobian", "--chain", &path("reference_7dof.chain"), "--trials", "0"]).0, 3);
}

#[test]
fn simulate_writes_telemetry() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (code, stdout, _) = cli(&["simulate", "--scenario", &path("static.scenario"), "--out", out.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("success: true") && stdout.contains("switches: 0"), "{stdout}");
    let rows = read_telemetry(fs::File::open(out.join("telemetry.csv")).unwrap()).unwrap();
    assert!(!rows.is_empty());

    // without re-ranking the drifting block is never grasped
    let text = fs::read_to_string(data_dir().join("drift_out_of_reach.scenario")).unwrap().replace("rerank = on", "rerank = off");
    let local = dir.path().join("drift.scenario");
    fs::write(&local, text).unwrap();
    for f in ["reference_7dof.chain", "block.grasps"] {
        fs::copy(data_dir().join(f), dir.path().join(f)).unwrap();
    }
    let (code, stdout, _) = cli(&["simulate", "--scenario", local.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("switches: NA"), "{stdout}");
}

#[test]
fn check_jacobian_reports_small_error() {
    let (code, stdout, _) = cli(&["check-jacobian", "--chain", &path("reference_7dof.chain")]);
    assert_eq!(code, 0);
    let line = stdout.lines().find(|l| l.starts_with("max_error:")).unwrap();
    let err: f64 = line["max_error:".len()..].trim().parse().unwrap();
    assert!(err < 1e-5, "{err}");
}

fn zero_feature_grasp(id: u32, gamma: f64, ns: f64, weights: &[f64], samples: usize) -> GraspCandidate {
    GraspCandidate {
        id,
        grasp: Pose::identity(),
        pregrasp_offset: 0.1,
        gamma,
        ns,
        fingers: weights
            .iter()
            .map(|&w| FingerFeatures {
                weight: w,
                covariance: DMatrix::from_diagonal_element(2, 2, 0.02),
                psi: vec![DVector::zeros(2); samples],
            })
            .collect(),
        precomputed_score: None,
    }
}

#[test]
fn rank_prints_closed_form_scores() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("g.grasps");
    let grasps = [zero_feature_grasp(0, 0.7, 4.0, &[1.5, 0.5], 3), zero_feature_grasp(1, 0.9, 5.0, &[1.0], 2)];
    fs::write(&file, format_grasps(&grasps)).unwrap();
    let identity = ["1", "0", "0", "0", "0", "0", "0", "0"];
    let mut args = vec!["rank", "--grasps", file.to_str().unwrap(), "--pose"];
    args.extend(identity);
    let (code, stdout, err) = cli(&args);
    assert_eq!(code, 0, "{err}");
    let score = |id: &str| -> f64 {
        let line = stdout.lines().skip(2).find(|l| l.split('\t').next() == Some(id)).unwrap();
        line.split('\t').nth(1).unwrap().parse().unwrap()
    };
    assert!((score("0") - 0.7 * 0.75f64.powi(2)).abs() < 1e-12);
    assert!((score("1") - 0.9 * 0.4).abs() < 1e-12);
    assert!(stdout.contains("all distances tie"), "{stdout}");

    let mut bad = args.clone();
    bad[4] = "2";
    assert_eq!(cli(&bad).0, 3);
}

#[test]
fn convergence_writes_a_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = cli(&["convergence", "--scenario", &path("static.scenario"), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    let rows = read_telemetry(fs::File::open(dir.path().join("convergence.csv")).unwrap()).unwrap();
    assert!(rows.len() <= 500);
    let last = rows.last().unwrap();
    assert!(last.translation_error < 1e-3 && last.rotation_error < 0.1f64.to_radians());
}
