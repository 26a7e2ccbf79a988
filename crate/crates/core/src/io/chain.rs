//! `dqvs-chain v1`: one `joint` line per joint, base to tip, then a `tool`
//! line.
//!
//! ```text
//! dqvs-chain v1
//! # joint <axis: 3> <origin pose: 8> <lower> <upper> <mean>
//! joint 0 0 1  1 0 0 0 0 0 0 0  -2.9671 2.9671 0
//! tool 1 0 0 0 0 0 0 0.063
//! ```

use std::path::Path;

use nalgebra::Vector3;

use super::text::{content_lines, fmt_floats, fmt_pose, read_file, tokens, Issues};
use crate::error::Result;
use crate::kinematics::{JointModel, KinematicChain};

pub fn parse_chain_file(path: &Path) -> Result<KinematicChain> {
    parse_chain(&read_file(path)?, path)
}

/// Parses chain text; `path` only labels the errors.
pub fn parse_chain(text: &str, path: &Path) -> Result<KinematicChain> {
    let mut issues = Issues::new(path);
    let mut lines = content_lines(text);
    if !issues.header(&mut lines, "chain") {
        return issues.finish(KinematicChain::reference_7dof());
    }
    let mut joints = Vec::new();
    let mut tool = None;
    for (n, line) in lines {
        let toks = tokens(line);
        match toks[0] {
            "joint" => {
                let field = format!("joint {}", joints.len() + 1);
                let Some(v) = issues.floats(n, &field, &toks[1..], 14) else {
                    joints.push(None);
                    continue;
                };
                let Some(origin) = issues.pose(n, &field, &toks[4..12]) else {
                    joints.push(None);
                    continue;
                };
                let axis = Vector3::new(v[0], v[1], v[2]);
                match JointModel::with_mean(axis, origin, v[11], v[12], v[13]) {
                    Ok(j) => joints.push(Some(j)),
                    Err(e) => {
                        issues.push(Some(n), &field, e.to_string());
                        joints.push(None);
                    }
                }
            }
            "tool" => {
                if tool.is_some() {
                    issues.push(Some(n), "tool", "duplicate tool line");
                }
                tool = Some(issues.pose(n, "tool", &toks[1..]));
            }
            other => issues.push(Some(n), other, "unknown record, expected 'joint' or 'tool'"),
        }
    }
    if joints.is_empty() {
        issues.push(None, "joint", "at least one joint is required");
    }
    if tool.is_none() {
        issues.push(None, "tool", "missing tool line");
    }
    if !issues.is_empty() {
        return issues.finish(KinematicChain::reference_7dof());
    }
    let joints = joints.into_iter().map(|j| j.expect("no issues")).collect();
    let tool = tool.flatten().expect("no issues");
    match KinematicChain::new(joints, tool) {
        Ok(c) => Ok(c),
        Err(e) => {
            issues.push(None, "chain", e.to_string());
            issues.finish(KinematicChain::reference_7dof())
        }
    }
}

pub fn format_chain(chain: &KinematicChain) -> String {
    let mut s = String::from("dqvs-chain v1\n# joint <axis: 3> <origin pose: 8> <lower> <upper> <mean>\n");
    for j in chain.joints() {
        s.push_str(&format!(
            "joint {}  {}  {}\n",
            fmt_floats(j.axis.iter().copied()),
            fmt_pose(&j.origin),
            fmt_floats([j.lower, j.upper, j.mean])
        ));
    }
    s.push_str(&format!("tool {}\n", fmt_pose(chain.tool())));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    fn p() -> &'static Path {
        Path::new("test.chain")
    }

    #[test]
    fn reference_round_trip() {
        let c = KinematicChain::reference_7dof();
        assert_eq!(parse_chain(&format_chain(&c), p()).unwrap(), c);
    }

    #[test]
    fn all_errors_are_reported() {
        let text = "dqvs-chain v1\n\
                    joint 0 0 2 1 0 0 0 0 0 0 0 -1 1 0\n\
                    joint 0 0 1 1 0 0 0 0 0 0 0 1 -1 0\n\
                    joint 0 0 1 1 0 0\n\
                    wrist 1\n";
        let Err(Error::Validation { issues, .. }) = parse_chain(text, p()) else {
            panic!("expected validation error");
        };
        let lines: Vec<_> = issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![Some(2), Some(3), Some(4), Some(5), None]);
        assert!(issues[0].message.contains("norm"));
        assert_eq!(issues[4].field, "tool");
    }

    #[test]
    fn version_mismatch() {
        let err = parse_chain("dqvs-chain v2\ntool 1 0 0 0 0 0 0 0\n", p()).unwrap_err();
        assert!(err.to_string().contains("unsupported version"));
    }

    #[test]
    fn non_unit_origin_rejected() {
        let text = "dqvs-chain v1\njoint 0 0 1 2 0 0 0 0 0 0 0 -1 1 0\ntool 1 0 0 0 0 0 0 0\n";
        let err = parse_chain(text, p()).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("joint 1"), "{err}");
    }
}
