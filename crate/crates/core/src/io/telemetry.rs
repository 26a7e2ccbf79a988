//! Per-step episode telemetry as CSV. Floats use Rust's shortest
//! round-trip formatting, so output is locale independent and parses back
//! bit-exactly.

use std::io::{Read, Write};

use crate::error::{invalid, Result};
use crate::servo::LyapunovSample;
use crate::sim::{Phase, TelemetryRow};

/// Column names for a chain with `dof` joints.
pub fn telemetry_header(dof: usize) -> Vec<String> {
    let mut h = vec!["iteration".to_string(), "t".to_string()];
    h.extend((1..=dof).map(|i| format!("q{i}")));
    h.extend((0..8).map(|i| format!("e{i}")));
    h.extend(
        ["translation_error", "rotation_error", "V", "V1", "V2", "clamped"]
            .iter()
            .map(|s| s.to_string()),
    );
    h.extend((0..8).map(|i| format!("object{i}")));
    h.extend(["active_grasp", "phase", "upsilon"].iter().map(|s| s.to_string()));
    h
}

fn csv_err(e: csv::Error) -> crate::Error {
    invalid(format!("csv: {e}"))
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_telemetry<W: Write>(out: W, dof: usize, rows: &[TelemetryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(telemetry_header(dof)).map_err(csv_err)?;
    for r in rows {
        if r.q.len() != dof {
            return Err(invalid(format!("row {} has {} joints, expected {dof}", r.iteration, r.q.len())));
        }
        let mut rec = vec![r.iteration.to_string(), f(r.t)];
        rec.extend(r.q.iter().map(|&x| f(x)));
        rec.extend(r.error.iter().map(|&x| f(x)));
        rec.extend([
            f(r.translation_error),
            f(r.rotation_error),
            f(r.lyapunov.v),
            f(r.lyapunov.v1),
            f(r.lyapunov.v2),
            u8::from(r.clamped).to_string(),
        ]);
        rec.extend(r.object.iter().map(|&x| f(x)));
        rec.push(r.active_grasp.map_or(String::new(), |id| id.to_string()));
        rec.push(r.phase.name().to_string());
        rec.push(r.upsilon.map_or(String::new(), f));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| invalid(format!("csv: {e}")))?;
    Ok(())
}

/// Reads telemetry written by [`write_telemetry`]; the joint count comes
/// from the header.
pub fn read_telemetry<R: Read>(input: R) -> Result<Vec<TelemetryRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    let dof = header.iter().filter(|h| h.starts_with('q')).count();
    let expected = telemetry_header(dof);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(invalid("unexpected telemetry header"));
    }
    let mut rows = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = |col: usize| invalid(format!("row {}: bad value in column '{}'", n + 1, expected[col]));
        let num = |col: usize| rec[col].parse::<f64>().map_err(|_| bad(col));
        let arr8 = |from: usize| -> Result<[f64; 8]> {
            let mut a = [0.0; 8];
            for (i, v) in a.iter_mut().enumerate() {
                *v = num(from + i)?;
            }
            Ok(a)
        };
        let e0 = 2 + dof;
        let s0 = e0 + 8;
        let o0 = s0 + 6;
        let a0 = o0 + 8;
        rows.push(TelemetryRow {
            iteration: rec[0].parse().map_err(|_| bad(0))?,
            t: num(1)?,
            q: (0..dof).map(|i| num(2 + i)).collect::<Result<_>>()?,
            error: arr8(e0)?,
            translation_error: num(s0)?,
            rotation_error: num(s0 + 1)?,
            lyapunov: LyapunovSample {
                v: num(s0 + 2)?,
                v1: num(s0 + 3)?,
                v2: num(s0 + 4)?,
            },
            clamped: match &rec[s0 + 5] {
                "0" => false,
                "1" => true,
                _ => return Err(bad(s0 + 5)),
            },
            object: arr8(o0)?,
            active_grasp: match &rec[a0] {
                "" => None,
                s => Some(s.parse().map_err(|_| bad(a0))?),
            },
            phase: match &rec[a0 + 1] {
                "pregrasp" => Phase::PreGrasp,
                "grasp" => Phase::Grasp,
                "grasped" => Phase::Grasped,
                _ => return Err(bad(a0 + 1)),
            },
            upsilon: match &rec[a0 + 2] {
                "" => None,
                _ => Some(num(a0 + 2)?),
            },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(i: u64) -> TelemetryRow {
        TelemetryRow {
            iteration: i,
            t: i as f64 * 0.01,
            q: vec![0.1, -1.0 / 3.0, 2.5e-17],
            error: [1.0, 0.0, 1e-300, -0.0, 0.1, 0.2, 0.3, 0.4],
            translation_error: 0.123,
            rotation_error: 1e-9,
            lyapunov: LyapunovSample { v: 3.0, v1: 1.0, v2: 2.0 },
            clamped: i.is_multiple_of(2),
            object: [1.0, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.05],
            active_grasp: (i > 0).then_some(7),
            phase: [Phase::PreGrasp, Phase::Grasp, Phase::Grasped][i as usize % 3],
            upsilon: (i > 1).then_some(0.5),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let rows: Vec<_> = (0..4).map(row).collect();
        let mut buf = Vec::new();
        write_telemetry(&mut buf, 3, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("iteration,t,q1,q2,q3,e0,"));
        assert!(!text.contains(" "));
        let back = read_telemetry(&buf[..]).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a, b);
            assert_eq!(a.error[3].to_bits(), b.error[3].to_bits());
        }
    }

    #[test]
    fn wrong_dof_rejected() {
        assert!(write_telemetry(Vec::new(), 7, &[row(0)]).is_err());
    }
}
