//! Shared plumbing of the line-oriented text formats: comment stripping,
//! version headers, number parsing and issue collection.

use std::fs;
use std::path::{Path, PathBuf};

use crate::dq::Pose;
use crate::error::{Error, Issue, Result};

/// Pose coefficients in files are checked against the unit condition with
/// this tolerance, then renormalized.
pub const POSE_TOLERANCE: f64 = 1e-6;

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-blank lines with `#` comments removed, numbered from 1.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

/// Collects every problem of one file before failing.
#[derive(Debug)]
pub(crate) struct Issues {
    path: PathBuf,
    list: Vec<Issue>,
}

impl Issues {
    pub fn new(path: &Path) -> Self {
        Self {
            path: path.to_path_buf(),
            list: Vec::new(),
        }
    }

    pub fn push(&mut self, line: Option<usize>, field: impl Into<String>, message: impl Into<String>) {
        self.list.push(Issue {
            line,
            field: field.into(),
            message: message.into(),
        });
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn finish<T>(self, value: T) -> Result<T> {
        if self.list.is_empty() {
            Ok(value)
        } else {
            Err(Error::Validation {
                path: self.path,
                issues: self.list,
            })
        }
    }

    /// Checks the first content line against `dqvs-<kind> v1`.
    pub fn header<'a>(&mut self, lines: &mut impl Iterator<Item = (usize, &'a str)>, kind: &str) -> bool {
        let expected = format!("dqvs-{kind} v1");
        match lines.next() {
            Some((_, l)) if l == expected => true,
            Some((n, l)) => {
                let msg = if l.starts_with(&format!("dqvs-{kind} ")) {
                    format!("unsupported version '{l}', expected '{expected}'")
                } else {
                    format!("expected header '{expected}', found '{l}'")
                };
                self.push(Some(n), "header", msg);
                false
            }
            None => {
                self.push(None, "header", format!("empty file, expected header '{expected}'"));
                false
            }
        }
    }

    pub fn f64(&mut self, line: usize, field: &str, tok: &str) -> Option<f64> {
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.push(Some(line), field, format!("expected a finite number, found '{tok}'"));
                None
            }
        }
    }

    pub fn floats(&mut self, line: usize, field: &str, toks: &[&str], n: usize) -> Option<Vec<f64>> {
        if toks.len() != n {
            self.push(
                Some(line),
                field,
                format!("expected {n} number(s), found {}", toks.len()),
            );
            return None;
        }
        let vals: Vec<Option<f64>> = toks.iter().map(|t| self.f64(line, field, t)).collect();
        vals.into_iter().collect()
    }

    pub fn pose(&mut self, line: usize, field: &str, toks: &[&str]) -> Option<Pose> {
        let c = self.floats(line, field, toks, 8)?;
        match Pose::from_coeffs(c.try_into().expect("8 values"), POSE_TOLERANCE) {
            Ok(p) => Some(p),
            Err(e) => {
                self.push(Some(line), field, e.to_string());
                None
            }
        }
    }
}

pub(crate) fn tokens(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

/// Shortest decimal text that parses back to the same value.
pub(crate) fn fmt_floats(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

pub(crate) fn fmt_pose(p: &Pose) -> String {
    fmt_floats(p.coeffs())
}
