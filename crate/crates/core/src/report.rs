//! Solver outcomes and their CSV rows.

use std::fmt;
use std::io::Write;
use std::time::Duration;

use crate::error::Result;
use crate::laguerre::Potentials;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    StandardNewton,
    DampedNewton,
    NestedBisection,
    NestedNewton,
    HedonicNewton,
    HedonicDampedNewton,
    HedonicNestedBisection,
    HedonicNestedNewton,
}

impl Method {
    pub const CONGESTION: [Method; 4] =
        [Method::StandardNewton, Method::DampedNewton, Method::NestedBisection, Method::NestedNewton];

    pub fn name(&self) -> &'static str {
        match self {
            Method::StandardNewton => "standard_newton",
            Method::DampedNewton => "damped_newton",
            Method::NestedBisection => "nested_bisection",
            Method::NestedNewton => "nested_newton",
            Method::HedonicNewton => "hedonic_newton",
            Method::HedonicDampedNewton => "hedonic_damped_newton",
            Method::HedonicNestedBisection => "hedonic_nested_bisection",
            Method::HedonicNestedNewton => "hedonic_nested_newton",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Success,
    Failed,
    NotNested,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Success => "SUCCESS",
            Status::Failed => "FAILED",
            Status::NotNested => "NOT_NESTED",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub method: Method,
    pub n: usize,
    /// Final iterate, gauge fixed by `v[0] = 0`; `c` set whenever it is defined.
    pub potentials: Potentials,
    pub masses: Vec<f64>,
    pub iterations: usize,
    pub damping_steps: usize,
    /// Verdict of the adjacency test on the final tessellation, if computed.
    pub nested: Option<bool>,
    pub residual_inf: f64,
    pub elapsed: Duration,
    pub status: Status,
    pub message: Option<String>,
}

impl SolveReport {
    pub fn is_success(&self) -> bool {
        self.status == Status::Success
    }

    pub fn c(&self) -> Option<f64> {
        self.potentials.c
    }
}

pub const REPORT_HEADER: [&str; 8] =
    ["method", "N", "C", "time_s", "iterations", "damping_steps", "residual", "status"];

/// Fixed-precision text for a float; non-finite values spelled out.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.10e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// One row per report; `include_time = false` makes output bit-reproducible.
pub fn write_reports<W: Write>(out: W, method_label: impl Fn(&SolveReport) -> String, reports: &[SolveReport], include_time: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        let time = if include_time { format!("{:.6}", r.elapsed.as_secs_f64()) } else { "0".into() };
        w.write_record([
            method_label(r),
            r.n.to_string(),
            r.c().map(fmt_float).unwrap_or_else(|| "nan".into()),
            time,
            r.iterations.to_string(),
            r.damping_steps.to_string(),
            fmt_float(r.residual_inf),
            r.status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
