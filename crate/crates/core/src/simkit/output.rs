//! CSV emission. Every number uses 12 significant digits; files end with a
//! newline and always carry a header row.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::LyapunovSample;
use crate::simkit::scenario::SimTrace;
use crate::simkit::sweep::SweepResult;
use crate::simkit::SimError;

/// 12 significant digits, exponent form.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

fn push_nums(line: &mut String, xs: impl IntoIterator<Item = f64>) {
    for x in xs {
        line.push(',');
        line.push_str(&fmt_num(x));
    }
}

pub fn trace_header(full: bool) -> String {
    let mut cols: Vec<String> = [
        "t", "ep_x", "ep_y", "ep_z", "ev_x", "ev_y", "ev_z", "norm_e", "V", "Vdot_fd", "dd_x",
        "dd_y", "dd_z",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    if full {
        for i in 1..=2 {
            let mut block: Vec<String> = Vec::new();
            for axis in ["x", "y", "z"] {
                block.push(format!("p{axis}"));
            }
            for axis in ["x", "y", "z"] {
                block.push(format!("v{axis}"));
            }
            for r in 1..=3 {
                for c in 1..=3 {
                    block.push(format!("R{r}{c}"));
                }
            }
            for axis in ["x", "y", "z"] {
                block.push(format!("Omega{axis}"));
            }
            block.push("f".into());
            for axis in ["x", "y", "z"] {
                block.push(format!("tau{axis}"));
            }
            cols.extend(block.into_iter().map(|c| format!("{c}_{i}")));
        }
    }
    cols.join(",")
}

pub fn trace_to_string(trace: &SimTrace) -> String {
    let full = trace.rows.first().is_some_and(|r| r.uavs.is_some());
    let mut out = trace_header(full);
    out.push('\n');
    for row in &trace.rows {
        let mut line = fmt_num(row.t);
        push_nums(&mut line, row.ep.iter().copied());
        push_nums(&mut line, row.ev.iter().copied());
        push_nums(&mut line, [row.norm_e, row.v, row.vdot_fd]);
        push_nums(&mut line, row.delta.iter().copied());
        if full {
            if let Some(uavs) = &row.uavs {
                for u in uavs.iter() {
                    push_nums(&mut line, u.position.iter().copied());
                    push_nums(&mut line, u.velocity.iter().copied());
                    for r in 0..3 {
                        push_nums(&mut line, (0..3).map(|c| u.attitude[(r, c)]));
                    }
                    push_nums(&mut line, u.omega.iter().copied());
                    push_nums(&mut line, [u.thrust]);
                    push_nums(&mut line, u.torque.iter().copied());
                }
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub const SWEEP_HEADER: &str = "param,tail_metric,lambda_hat,status";

pub fn sweep_to_string(sweep: &SweepResult) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in &sweep.rows {
        // status is free text; keep the column count fixed
        let status = row.status.replace([',', '\n', '\r'], ";");
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(row.param),
            fmt_num(row.tail_metric),
            fmt_num(row.lambda_hat),
            status
        );
    }
    out
}

pub const LYAPUNOV_HEADER: &str = "t,V,Vdot_fd,norm_e,norm_Delta";

pub fn lyapunov_to_string(samples: &[LyapunovSample]) -> String {
    let mut out = String::from(LYAPUNOV_HEADER);
    out.push('\n');
    for s in samples {
        let mut line = fmt_num(s.t);
        push_nums(&mut line, [s.v, s.vdot_fd, s.norm_e, s.norm_delta]);
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), SimError> {
    std::fs::write(path, text).map_err(|source| SimError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_trace_csv(trace: &SimTrace, path: &Path) -> Result<(), SimError> {
    write_file(path, &trace_to_string(trace))
}

pub fn write_sweep_csv(sweep: &SweepResult, path: &Path) -> Result<(), SimError> {
    write_file(path, &sweep_to_string(sweep))
}

pub fn write_lyapunov_csv(samples: &[LyapunovSample], path: &Path) -> Result<(), SimError> {
    write_file(path, &lyapunov_to_string(samples))
}
