//! `dqvs-grasps v1`: one block per candidate.
//!
//! ```text
//! dqvs-grasps v1
//! grasp 3
//! pose 0 1 0 0 0 0 0 -0.025       # object frame
//! pregrasp_offset 0.1
//! gamma 1
//! ns 4
//! score 0.8                       # optional, bypasses the feature model
//! finger 1.0 2 3                  # omega, d, n
//! 0.01 0                          # covariance, d rows of d
//! 0 0.01
//! 0.02 0.0                        # features, n rows of d
//! 0.0 0.02
//! -0.02 0.0
//! end
//! ```

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::text::{content_lines, fmt_floats, fmt_pose, read_file, tokens, Issues};
use crate::dq::Pose;
use crate::error::Result;
use crate::grasp::{FingerFeatures, GraspCandidate, DEFAULT_PREGRASP_OFFSET};

pub fn parse_grasps_file(path: &Path) -> Result<Vec<GraspCandidate>> {
    parse_grasps(&read_file(path)?, path)
}

struct Block {
    line: usize,
    candidate: GraspCandidate,
    has_pose: bool,
    ok: bool,
}

/// Parses candidate text; `path` only labels the errors.
pub fn parse_grasps(text: &str, path: &Path) -> Result<Vec<GraspCandidate>> {
    let mut issues = Issues::new(path);
    let mut lines = content_lines(text).peekable();
    if !issues.header(&mut lines, "grasps") {
        return issues.finish(Vec::new());
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut block: Option<Block> = None;

    while let Some((n, line)) = lines.next() {
        let toks = tokens(line);
        let key = toks[0];
        if key == "grasp" {
            if block.is_some() {
                issues.push(Some(n), "grasp", "previous block not closed with 'end'");
            }
            let id = match toks.get(1).map(|t| t.parse::<u32>()) {
                Some(Ok(id)) if toks.len() == 2 => id,
                _ => {
                    issues.push(Some(n), "grasp", "expected 'grasp <id>' with a non-negative integer id");
                    u32::MAX
                }
            };
            if id != u32::MAX && !seen.insert(id) {
                issues.push(Some(n), "grasp", format!("duplicate candidate id {id}"));
            }
            block = Some(Block {
                line: n,
                candidate: GraspCandidate {
                    id,
                    grasp: Pose::identity(),
                    pregrasp_offset: DEFAULT_PREGRASP_OFFSET,
                    gamma: 1.0,
                    ns: 1.0,
                    fingers: Vec::new(),
                    precomputed_score: None,
                },
                has_pose: false,
                ok: id != u32::MAX,
            });
            continue;
        }
        let Some(b) = block.as_mut() else {
            issues.push(Some(n), key, "record outside a 'grasp' block");
            continue;
        };
        let field = format!("candidate {} {key}", b.candidate.id);
        let scalar = |issues: &mut Issues| issues.floats(n, &field, &toks[1..], 1).map(|v| v[0]);
        match key {
            "pose" => match issues.pose(n, &field, &toks[1..]) {
                Some(p) => {
                    b.candidate.grasp = p;
                    b.has_pose = true;
                }
                None => b.ok = false,
            },
            "pregrasp_offset" => match scalar(&mut issues) {
                Some(v) => b.candidate.pregrasp_offset = v,
                None => b.ok = false,
            },
            "gamma" => match scalar(&mut issues) {
                Some(v) => b.candidate.gamma = v,
                None => b.ok = false,
            },
            "ns" => match scalar(&mut issues) {
                Some(v) => b.candidate.ns = v,
                None => b.ok = false,
            },
            "score" => match scalar(&mut issues) {
                Some(v) => b.candidate.precomputed_score = Some(v),
                None => b.ok = false,
            },
            "finger" => {
                let head = issues.floats(n, &field, &toks[1..], 3);
                let Some(head) = head else {
                    b.ok = false;
                    continue;
                };
                let (omega, d, count) = (head[0], head[1], head[2]);
                if d < 1.0 || d.fract() != 0.0 || count < 0.0 || count.fract() != 0.0 {
                    issues.push(Some(n), &field, "dimension must be a positive integer and the patch count a non-negative integer");
                    b.ok = false;
                    continue;
                }
                let (d, count) = (d as usize, count as usize);
                let mut rows = Vec::with_capacity(d + count);
                let mut complete = true;
                for r in 0..d + count {
                    let what = if r < d { "covariance row" } else { "feature row" };
                    match lines.next_if(|(_, l)| !starts_with_keyword(l)) {
                        Some((rn, rl)) => match issues.floats(rn, &format!("{field} {what}"), &tokens(rl), d) {
                            Some(v) => rows.push(v),
                            None => complete = false,
                        },
                        None => {
                            issues.push(Some(n), &field, format!("expected {d} covariance and {count} feature rows, found {r}"));
                            complete = false;
                            break;
                        }
                    }
                }
                if !complete {
                    b.ok = false;
                    continue;
                }
                let covariance = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                let psi = rows[d..].iter().map(|r| DVector::from_vec(r.clone())).collect();
                b.candidate.fingers.push(FingerFeatures {
                    weight: omega,
                    covariance,
                    psi,
                });
            }
            "end" => {
                let b = block.take().expect("inside a block");
                close_block(b, &mut issues, &mut out);
            }
            other => {
                issues.push(Some(n), other, "unknown record");
                b.ok = false;
            }
        }
    }
    if let Some(b) = block {
        issues.push(Some(b.line), "grasp", "block not closed with 'end'");
    }
    if out.is_empty() && issues.is_empty() {
        issues.push(None, "grasp", "no candidates");
    }
    issues.finish(out)
}

fn starts_with_keyword(line: &str) -> bool {
    line.starts_with(|c: char| c.is_ascii_alphabetic())
}

fn close_block(b: Block, issues: &mut Issues, out: &mut Vec<GraspCandidate>) {
    if !b.has_pose {
        issues.push(Some(b.line), format!("candidate {}", b.candidate.id), "missing pose");
        return;
    }
    if !b.ok {
        return;
    }
    match b.candidate.validate() {
        Ok(()) => out.push(b.candidate),
        Err(e) => issues.push(Some(b.line), format!("candidate {}", b.candidate.id), e.to_string()),
    }
}

pub fn format_grasps(grasps: &[GraspCandidate]) -> String {
    let mut s = String::from("dqvs-grasps v1\n");
    for g in grasps {
        s.push_str(&format!("\ngrasp {}\n", g.id));
        s.push_str(&format!("pose {}\n", fmt_pose(&g.grasp)));
        s.push_str(&format!("pregrasp_offset {:?}\n", g.pregrasp_offset));
        s.push_str(&format!("gamma {:?}\nns {:?}\n", g.gamma, g.ns));
        if let Some(score) = g.precomputed_score {
            s.push_str(&format!("score {score:?}\n"));
        }
        for f in &g.fingers {
            s.push_str(&format!("finger {:?} {} {}\n", f.weight, f.dim(), f.psi.len()));
            for r in f.covariance.row_iter() {
                s.push_str(&fmt_floats(r.iter().copied()));
                s.push('\n');
            }
            for p in &f.psi {
                s.push_str(&fmt_floats(p.iter().copied()));
                s.push('\n');
            }
        }
        s.push_str("end\n");
    }
    s
}
