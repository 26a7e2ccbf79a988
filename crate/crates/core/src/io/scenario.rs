//! `dqvs-scenario v1`: `key = value` lines grouped in `[sections]`. Paths
//! are relative to the scenario file.
//!
//! ```text
//! dqvs-scenario v1
//! chain = reference_7dof.chain
//! grasps = block.grasps
//!
//! [gains]
//! k = 50
//! ks = -0.5
//! lambda = 1e-3
//! dt = 0.01
//! max_linear_speed = 0.1          # optional tool speed cap, both or neither
//! max_angular_speed = 0.8
//!
//! [trajectory]
//! kind = ellipse
//! center = 1 0 0 0 0 0.25 0 0.05
//! rotation = on
//!
//! [observation]
//! sigma_t = 0.0005
//! sigma_r = 0.002
//! seed = 7
//!
//! [selection]
//! k = 5
//! delta = 0.05
//!
//! [episode]
//! q0 = 0 0.6 0 1.4 0 1.14 0
//! max_duration = 60
//! ```
//!
//! Everything but `chain` and `grasps` has a default: the gains of
//! [`crate::sim::desk::episode_gains`], a static object at the desk centre,
//! exact observation with seed 0, [`SelectionConfig::default`], both the
//! null-space task and re-ranking on, `q0` at the joint means, 60 s with a
//! 1 s hold after the grasp. Without a `kind` the object stays at `start`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{DVector, Vector3};

use super::chain::{format_chain, parse_chain_file};
use super::grasps::{format_grasps, parse_grasps_file};
use super::text::{content_lines, fmt_floats, fmt_pose, read_file, tokens, Issues};
use crate::dq::Pose;
use crate::servo::SpeedLimit;
use crate::error::{Error, Result};
use crate::sim::desk::{episode_gains, object_center};
use crate::sim::{EpisodeConfig, ObservationModel, RotationSpec, SelectionConfig, TrajectoryKind, TrajectoryScript};

const SECTIONS: &[(&str, &[&str])] = &[
    ("", &["chain", "grasps"]),
    ("gains", &["k", "ks", "lambda", "dt", "max_linear_speed", "max_angular_speed"]),
    (
        "trajectory",
        &[
            "kind",
            "start",
            "center",
            "speed",
            "length",
            "radii",
            "amplitude",
            "frequency",
            "rotation",
            "rotation_axis",
            "rotation_rate",
        ],
    ),
    ("observation", &["sigma_t", "sigma_r", "seed"]),
    (
        "selection",
        &[
            "k",
            "delta",
            "pregrasp_offset",
            "pregrasp_threshold",
            "grasp_translation",
            "grasp_rotation",
            "ik_k",
            "ik_dt",
            "ik_max_iter",
            "vptree_seed",
        ],
    ),
    ("episode", &["q0", "nullspace", "rerank", "max_duration", "hold_after_grasp"]),
];

type Entries<'a> = BTreeMap<(&'a str, &'a str), (usize, &'a str)>;

/// Typed access to the collected entries; every failure lands in `issues`.
struct Reader<'a, 'b> {
    entries: &'b Entries<'a>,
    issues: &'b mut Issues,
}

#[derive(Clone, Copy)]
enum Bound {
    Positive,
    NonNegative,
    NonPositive,
    Any,
}

impl<'a> Reader<'a, '_> {
    fn field(section: &str, key: &str) -> String {
        if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        }
    }

    fn raw(&self, section: &str, key: &str) -> Option<(usize, &'a str)> {
        self.entries.get(&(section, key)).copied()
    }

    fn floats(&mut self, section: &str, key: &str, n: usize) -> Option<Vec<f64>> {
        let (line, v) = self.raw(section, key)?;
        self.issues.floats(line, &Self::field(section, key), &tokens(v), n)
    }

    fn f64(&mut self, section: &str, key: &str, default: f64, bound: Bound) -> f64 {
        let Some((line, _)) = self.raw(section, key) else {
            return default;
        };
        let Some(v) = self.floats(section, key, 1).map(|v| v[0]) else {
            return default;
        };
        let msg = match bound {
            Bound::Positive if v <= 0.0 => Some("must be > 0"),
            Bound::NonNegative if v < 0.0 => Some("must be >= 0"),
            Bound::NonPositive if v > 0.0 => Some("must be <= 0"),
            _ => None,
        };
        if let Some(m) = msg {
            self.issues.push(Some(line), Self::field(section, key), format!("{m}, got {v}"));
        }
        v
    }

    fn uint(&mut self, section: &str, key: &str, default: u64, min: u64) -> u64 {
        let Some((line, v)) = self.raw(section, key) else {
            return default;
        };
        match v.parse::<u64>() {
            Ok(n) if n >= min => n,
            _ => {
                self.issues.push(
                    Some(line),
                    Self::field(section, key),
                    format!("expected an integer >= {min}, found '{v}'"),
                );
                default
            }
        }
    }

    fn flag(&mut self, section: &str, key: &str, default: bool) -> bool {
        let Some((line, v)) = self.raw(section, key) else {
            return default;
        };
        match v {
            "on" | "true" | "yes" => true,
            "off" | "false" | "no" => false,
            _ => {
                self.issues.push(Some(line), Self::field(section, key), format!("expected on/off, found '{v}'"));
                default
            }
        }
    }

    fn pose(&mut self, section: &str, key: &str) -> Option<Pose> {
        let (line, v) = self.raw(section, key)?;
        self.issues.pose(line, &Self::field(section, key), &tokens(v))
    }
}

/// Reads and validates a scenario, loading the chain and grasp files it
/// names. All problems, including those of the referenced files, are
/// reported together.
pub fn parse_scenario(path: &Path) -> Result<EpisodeConfig> {
    parse_scenario_str(&read_file(path)?, path)
}

/// Like [`parse_scenario`] on text; relative paths resolve against the
/// directory of `path`.
pub fn parse_scenario_str(text: &str, path: &Path) -> Result<EpisodeConfig> {
    let mut issues = Issues::new(path);
    let mut lines = content_lines(text);
    if !issues.header(&mut lines, "scenario") {
        return Err(issues.finish(()).unwrap_err());
    }

    let mut entries: Entries = BTreeMap::new();
    let mut section = "";
    for (n, line) in lines {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            match SECTIONS.iter().find(|(s, _)| *s == name && !s.is_empty()) {
                Some((s, _)) => section = s,
                None => {
                    issues.push(Some(n), name, "unknown section");
                    section = "?";
                }
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.push(Some(n), line, "expected 'key = value'");
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if section == "?" {
            continue;
        }
        let known = SECTIONS
            .iter()
            .find(|(s, _)| *s == section)
            .is_some_and(|(_, keys)| keys.contains(&key));
        if !known {
            issues.push(Some(n), Reader::field(section, key), "unknown key");
            continue;
        }
        if let Some((first, _)) = entries.insert((section, key), (n, value)) {
            issues.push(Some(n), Reader::field(section, key), format!("duplicate key, first set on line {first}"));
        }
    }

    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |v: &str| -> PathBuf {
        let p = Path::new(v);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let mut load_errors = Vec::new();
    let chain = match entries.get(&("", "chain")) {
        Some(&(_, v)) => match parse_chain_file(&resolve(v)) {
            Ok(c) => Some(c),
            Err(e) => {
                load_errors.push(e);
                None
            }
        },
        None => {
            issues.push(None, "chain", "missing");
            None
        }
    };
    let grasps = match entries.get(&("", "grasps")) {
        Some(&(_, v)) => match parse_grasps_file(&resolve(v)) {
            Ok(g) => Some(g),
            Err(e) => {
                load_errors.push(e);
                None
            }
        },
        None => {
            issues.push(None, "grasps", "missing");
            None
        }
    };
    for e in load_errors {
        match e {
            Error::Validation { path, issues: sub } => {
                for i in sub {
                    issues.push(None, format!("{}: {}", path.display(), i.field), match i.line {
                        Some(l) => format!("line {l}: {}", i.message),
                        None => i.message,
                    });
                }
            }
            other => issues.push(None, "file", other.to_string()),
        }
    }

    let mut r = Reader {
        entries: &entries,
        issues: &mut issues,
    };
    let defaults = episode_gains();
    let gains = crate::servo::ControllerGains {
        k: r.f64("gains", "k", defaults.k, Bound::Positive),
        ks: r.f64("gains", "ks", defaults.ks, Bound::NonPositive),
        lambda: r.f64("gains", "lambda", defaults.lambda, Bound::Positive),
        dt: r.f64("gains", "dt", defaults.dt, Bound::Positive),
    };

    let speed_limit = match (r.raw("gains", "max_linear_speed"), r.raw("gains", "max_angular_speed")) {
        (None, None) => None,
        (Some(_), Some(_)) => Some(SpeedLimit {
            linear: r.f64("gains", "max_linear_speed", 1.0, Bound::Positive),
            angular: r.f64("gains", "max_angular_speed", 1.0, Bound::Positive),
        }),
        (Some((line, _)), None) | (None, Some((line, _))) => {
            r.issues.push(Some(line), "gains", "max_linear_speed and max_angular_speed go together");
            None
        }
    };

    let trajectory = read_trajectory(&mut r);

    let observation = ObservationModel {
        sigma_t: r.f64("observation", "sigma_t", 0.0, Bound::NonNegative),
        sigma_r: r.f64("observation", "sigma_r", 0.0, Bound::NonNegative),
        seed: r.uint("observation", "seed", 0, 0),
    };

    let sd = SelectionConfig::default();
    let selection = SelectionConfig {
        k: r.uint("selection", "k", sd.k as u64, 1) as usize,
        delta: r.f64("selection", "delta", sd.delta, Bound::NonNegative),
        pregrasp_threshold: r.f64("selection", "pregrasp_threshold", sd.pregrasp_threshold, Bound::Positive),
        grasp_translation: r.f64("selection", "grasp_translation", sd.grasp_translation, Bound::Positive),
        grasp_rotation: r.f64("selection", "grasp_rotation", sd.grasp_rotation, Bound::Positive),
        ik_gains: crate::servo::ControllerGains {
            k: r.f64("selection", "ik_k", sd.ik_gains.k, Bound::Positive),
            dt: r.f64("selection", "ik_dt", sd.ik_gains.dt, Bound::Positive),
            ..sd.ik_gains
        },
        ik_max_iter: r.uint("selection", "ik_max_iter", sd.ik_max_iter as u64, 1) as usize,
        vptree_seed: r.uint("selection", "vptree_seed", sd.vptree_seed, 0),
    };
    let offset_override = r
        .raw("selection", "pregrasp_offset")
        .is_some()
        .then(|| r.f64("selection", "pregrasp_offset", 0.0, Bound::NonNegative));

    let nullspace = r.flag("episode", "nullspace", true);
    let rerank = r.flag("episode", "rerank", true);
    let max_duration = r.f64("episode", "max_duration", 60.0, Bound::Positive);
    let hold_after_grasp = r.f64("episode", "hold_after_grasp", 1.0, Bound::NonNegative);
    let q0 = match (&chain, r.raw("episode", "q0")) {
        (Some(c), Some(_)) => r.floats("episode", "q0", c.dof()).map(DVector::from_vec),
        (Some(c), None) => Some(c.means()),
        _ => None,
    };

    let (Some(chain), Some(mut grasps), Some(trajectory), Some(q0)) = (chain, grasps, trajectory, q0) else {
        return Err(issues.finish(()).unwrap_err());
    };
    if let Some(off) = offset_override {
        for g in &mut grasps {
            g.pregrasp_offset = off;
        }
    }
    let config = EpisodeConfig {
        chain,
        grasps,
        gains,
        speed_limit,
        trajectory,
        observation,
        selection,
        nullspace,
        rerank,
        q0,
        max_duration,
        hold_after_grasp,
    };
    if issues.is_empty() {
        let q0_line = entries.get(&("episode", "q0")).map(|&(l, _)| l);
        for p in config.problems() {
            let line = p.starts_with("q0").then_some(q0_line).flatten();
            issues.push(line, "scenario", p);
        }
    }
    issues.finish(config)
}

fn read_trajectory(r: &mut Reader) -> Option<TrajectoryScript> {
    let s = "trajectory";
    let start = r.pose(s, "start");
    let center = r.pose(s, "center");
    if r.raw(s, "start").is_some() && r.raw(s, "center").is_some() {
        let line = r.raw(s, "center").map(|(l, _)| l);
        r.issues.push(line, "trajectory.center", "give either start or center, not both");
    }
    let kind = match r.raw(s, "kind") {
        Some((line, v)) => match v.parse::<TrajectoryKind>() {
            Ok(k) => Some(k),
            Err(e) => {
                r.issues.push(Some(line), "trajectory.kind", e.to_string());
                return None;
            }
        },
        None => None,
    };
    let anchor = start.or(center).unwrap_or_else(object_center);
    if (r.raw(s, "start").is_some() && start.is_none()) || (r.raw(s, "center").is_some() && center.is_none()) {
        return None;
    }
    let mut t = match kind {
        Some(k) => TrajectoryScript::new(k, anchor),
        None => TrajectoryScript::stationary(anchor),
    };
    t.speed = r.f64(s, "speed", t.speed, Bound::NonNegative);
    t.length = r.f64(s, "length", t.length, Bound::NonNegative);
    if let Some(v) = r.floats(s, "radii", 2) {
        t.radii = (v[0], v[1]);
        if v[0] < 0.0 || v[1] < 0.0 {
            let line = r.raw(s, "radii").map(|(l, _)| l);
            r.issues.push(line, "trajectory.radii", "must be >= 0");
        }
    }
    t.amplitude = r.f64(s, "amplitude", t.amplitude, Bound::NonNegative);
    t.frequency = r.f64(s, "frequency", t.frequency, Bound::NonNegative);
    if r.flag(s, "rotation", false) {
        let mut spec = RotationSpec::default();
        if let Some(a) = r.floats(s, "rotation_axis", 3) {
            let axis = Vector3::new(a[0], a[1], a[2]);
            if axis.norm() == 0.0 {
                let line = r.raw(s, "rotation_axis").map(|(l, _)| l);
                r.issues.push(line, "trajectory.rotation_axis", "must be nonzero");
            } else {
                spec.axis = axis.normalize();
            }
        }
        spec.rate = r.f64(s, "rotation_rate", spec.rate, Bound::Any);
        t.rotation = Some(spec);
    }
    if center.is_some() {
        t = t.centered_on(anchor);
    }
    Some(t)
}

/// Writes `config` as scenario text, with its chain and grasps stored at the
/// given paths (as written into the file). Returns the scenario text and the
/// chain and grasp file contents.
pub fn format_scenario(config: &EpisodeConfig, chain_path: &str, grasps_path: &str) -> (String, String, String) {
    let g = &config.gains;
    let t = &config.trajectory;
    let o = &config.observation;
    let s = &config.selection;
    let flag = |b: bool| if b { "on" } else { "off" };
    let mut out = format!(
        "dqvs-scenario v1\nchain = {chain_path}\ngrasps = {grasps_path}\n\n\
         [gains]\nk = {:?}\nks = {:?}\nlambda = {:?}\ndt = {:?}\n{}\n\
         [trajectory]\nkind = {}\nstart = {}\nspeed = {:?}\nlength = {:?}\nradii = {}\namplitude = {:?}\nfrequency = {:?}\n",
        g.k,
        g.ks,
        g.lambda,
        g.dt,
        config.speed_limit.map_or(String::new(), |l| format!(
            "max_linear_speed = {:?}\nmax_angular_speed = {:?}\n",
            l.linear, l.angular
        )),
        t.kind,
        fmt_pose(&t.start),
        t.speed,
        t.length,
        fmt_floats([t.radii.0, t.radii.1]),
        t.amplitude,
        t.frequency,
    );
    match &t.rotation {
        Some(r) => out.push_str(&format!(
            "rotation = on\nrotation_axis = {}\nrotation_rate = {:?}\n",
            fmt_floats(r.axis.iter().copied()),
            r.rate
        )),
        None => out.push_str("rotation = off\n"),
    }
    out.push_str(&format!(
        "\n[observation]\nsigma_t = {:?}\nsigma_r = {:?}\nseed = {}\n\n\
         [selection]\nk = {}\ndelta = {:?}\npregrasp_threshold = {:?}\ngrasp_translation = {:?}\n\
         grasp_rotation = {:?}\nik_k = {:?}\nik_dt = {:?}\nik_max_iter = {}\nvptree_seed = {}\n\n\
         [episode]\nq0 = {}\nnullspace = {}\nrerank = {}\nmax_duration = {:?}\nhold_after_grasp = {:?}\n",
        o.sigma_t,
        o.sigma_r,
        o.seed,
        s.k,
        s.delta,
        s.pregrasp_threshold,
        s.grasp_translation,
        s.grasp_rotation,
        s.ik_gains.k,
        s.ik_gains.dt,
        s.ik_max_iter,
        s.vptree_seed,
        fmt_floats(config.q0.iter().copied()),
        flag(config.nullspace),
        flag(config.rerank),
        config.max_duration,
        config.hold_after_grasp,
    ));
    (out, format_chain(&config.chain), format_grasps(&config.grasps))
}
