//! Subcommand bodies. Each writes its primary output to the given sink.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use nestot::congestion::{
    error_func, nested_bisection, nested_newton, newton_damped, newton_standard, NestedOptions, NewtonOptions,
};
use nestot::geometry::{CostSpec, DensityKind, GridSpec, Profile, TargetSet};
use nestot::hedonic::{hedonic_nested, hedonic_nestedness, hedonic_newton, HedonicNestedOptions};
use nestot::laguerre::{check_nested, tessellate, Instance, Potentials};
use nestot::nest::{certify_nested_apriori, NestCertificate};
use nestot::numerics::RootMode;
use nestot::report::{fmt_float, write_reports, Method, SolveReport, Status};
use nestot::svg::{paired_svg, tessellation_svg};
use nestot::geometry::build_density;

use crate::config::{MethodArg, Problem, Resolved};
use crate::CliError;

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn newton_options(cfg: &Resolved) -> NewtonOptions {
    NewtonOptions { maxit: cfg.maxit, ..NewtonOptions::default() }.with_tol(cfg.tol)
}

pub fn solve(cfg: &Resolved, method: MethodArg) -> Result<SolveReport, CliError> {
    let n = cfg.n;
    let zeros = vec![0.0; n];
    let report = match cfg.problem {
        Problem::Congestion => {
            let inst = cfg.instance()?;
            let nested = NestedOptions::default().with_tol(cfg.tol);
            match method {
                MethodArg::Newton => newton_standard(&inst, &zeros, &newton_options(cfg))?,
                MethodArg::Damped => newton_damped(&inst, &zeros, &newton_options(cfg))?,
                MethodArg::NestedBisection => nested_bisection(&inst, cfg.c_interval(), &nested)?,
                MethodArg::NestedNewton => nested_newton(&inst, cfg.c0(), &nested)?,
            }
        }
        Problem::Hedonic => {
            let p = cfg.hedonic()?;
            let nested = |mode| {
                let mut o = HedonicNestedOptions { tol: cfg.tol, ..Default::default() };
                o.inner.mode = mode;
                o
            };
            match method {
                MethodArg::Newton => hedonic_newton(&p, &zeros, &newton_options(cfg), false)?,
                MethodArg::Damped => hedonic_newton(&p, &zeros, &newton_options(cfg), true)?,
                MethodArg::NestedBisection => hedonic_nested(&p, &nested(RootMode::Bisection))?,
                MethodArg::NestedNewton => hedonic_nested(&p, &nested(RootMode::SafeguardedNewton))?,
            }
        }
    };
    Ok(report)
}

/// Placeholder row for a benchmark cell whose setup itself failed.
fn failed_row(cfg: &Resolved, method: MethodArg, err: &CliError) -> SolveReport {
    let method = match (cfg.problem, method) {
        (Problem::Congestion, MethodArg::Newton) => Method::StandardNewton,
        (Problem::Congestion, MethodArg::Damped) => Method::DampedNewton,
        (Problem::Congestion, MethodArg::NestedBisection) => Method::NestedBisection,
        (Problem::Congestion, MethodArg::NestedNewton) => Method::NestedNewton,
        (Problem::Hedonic, MethodArg::Newton) => Method::HedonicNewton,
        (Problem::Hedonic, MethodArg::Damped) => Method::HedonicDampedNewton,
        (Problem::Hedonic, MethodArg::NestedBisection) => Method::HedonicNestedBisection,
        (Problem::Hedonic, MethodArg::NestedNewton) => Method::HedonicNestedNewton,
    };
    SolveReport {
        method,
        n: cfg.n,
        potentials: Potentials::new(Vec::new()),
        masses: Vec::new(),
        iterations: 0,
        damping_steps: 0,
        nested: None,
        residual_inf: f64::NAN,
        elapsed: Duration::ZERO,
        status: Status::Failed,
        message: Some(err.to_string()),
    }
}

pub fn write_solve_csv(out: impl Write, reports: &[SolveReport], timing: bool) -> Result<(), CliError> {
    write_reports(out, |r| r.method.name().to_string(), reports, timing)?;
    Ok(())
}

/// Tessellation picture for a finished run; hedonic runs draw both sides.
pub fn render_svg(cfg: &Resolved, report: &SolveReport) -> Result<String, CliError> {
    let v = &report.potentials.v;
    if v.len() != cfg.n {
        return Err(CliError::Solver(format!("{} produced no potentials to draw", report.method)));
    }
    let targets = cfg.target_set()?;
    let pts: Vec<[f64; 2]> = targets.points().iter().map(|t| t.y).collect();
    match cfg.problem {
        Problem::Congestion => {
            let inst = cfg.instance()?;
            let tess = tessellate(&inst, &report.potentials)?;
            Ok(tessellation_svg(inst.grid(), &tess.labels, &pts))
        }
        Problem::Hedonic => {
            let p = cfg.hedonic()?;
            let c = report.potentials.c.unwrap_or(p.c());
            let t1 = tessellate(p.side1(), &Potentials::new(v.clone()))?;
            let t2 = tessellate(p.side2(), &Potentials::new(v.iter().map(|x| c - x).collect()))?;
            Ok(paired_svg(p.side1().grid(), &t1.labels, &t2.labels, &pts))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub nested: bool,
    pub verdict: &'static str,
    pub detail: String,
}

/// Solve, then run the adjacency test on the solved tessellation(s).
pub fn check(cfg: &Resolved, method: MethodArg) -> Result<(SolveReport, CheckOutcome), CliError> {
    let report = solve(cfg, method)?;
    let v = &report.potentials.v;
    if v.len() != cfg.n || v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Solver(format!(
            "{} returned no usable potentials: {}",
            report.method,
            report.message.clone().unwrap_or_default()
        )));
    }
    let outcome = match cfg.problem {
        Problem::Congestion => {
            let inst = cfg.instance()?;
            let verdict = check_nested(&tessellate(&inst, &report.potentials)?);
            CheckOutcome {
                nested: verdict.nested,
                verdict: if verdict.nested { "nested" } else { "not nested" },
                detail: format!("{} adjacency violation(s)", verdict.violations.len()),
            }
        }
        Problem::Hedonic => {
            let p = cfg.hedonic()?.with_c(report.potentials.c.unwrap_or(cfg.hedonic_c));
            let h = hedonic_nestedness(&p, v)?;
            CheckOutcome {
                nested: h.hedonically_nested,
                verdict: if h.hedonically_nested { "hedonically nested" } else { "not hedonically nested" },
                detail: format!(
                    "side 1: {} violation(s), side 2: {} violation(s)",
                    h.side1.violations.len(),
                    h.side2.violations.len()
                ),
            }
        }
    };
    Ok((report, outcome))
}

/// Bilinear instance with `F(y) = y²/A` and targets `y_i = i/N`.
pub fn quadratic_profile_instance(cfg: &Resolved, a: f64) -> Result<Instance, CliError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(CliError::Config(format!("A must be positive, got {a}")));
    }
    let profile = Profile::Quadratic { divisor: a };
    let targets = TargetSet::profile_graph(&profile, cfg.n)?;
    let grid = GridSpec::unit_square(cfg.grid)?;
    let kind = match cfg.measure {
        crate::config::Measure::Uniform => DensityKind::Uniform,
        crate::config::Measure::ProductXy => DensityKind::ProductXY,
    };
    let density = build_density(grid, kind)?.with_rule(cfg.rule);
    Ok(Instance::new(density, CostSpec::Bilinear { profile }, targets)?)
}

pub fn certify(cfg: &Resolved, a: Option<f64>) -> Result<NestCertificate, CliError> {
    let inst = match a {
        Some(a) => quadratic_profile_instance(cfg, a)?,
        None => cfg.instance()?,
    };
    Ok(certify_nested_apriori(&inst)?)
}

/// Every method × N cell; failures become rows, never aborts.
pub fn benchmark(cfg: &Resolved, ns: &[usize], methods: &[MethodArg]) -> Vec<SolveReport> {
    let mut rows = Vec::with_capacity(ns.len() * methods.len());
    for &n in ns {
        let cell = cfg.with_n(n);
        for &m in methods {
            let row = solve(&cell, m).unwrap_or_else(|e| failed_row(&cell, m, &e));
            rows.push(row);
        }
    }
    rows
}

/// `(C, Error)` samples; `None` marks an infeasible `C`.
pub fn sweep(cfg: &Resolved, cs: &[f64]) -> Result<Vec<(f64, Option<f64>)>, CliError> {
    if cfg.problem != Problem::Congestion {
        return Err(CliError::Config("the error-curve sweep applies to the congestion problem only".into()));
    }
    let inst = cfg.instance()?;
    cs.iter().map(|&c| Ok((c, error_func(&inst, c)?.value))).collect()
}

pub fn write_sweep_csv(out: impl Write, rows: &[(f64, Option<f64>)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["C", "error"])?;
    for (c, e) in rows {
        w.write_record([fmt_float(*c), e.map(fmt_float).unwrap_or_else(|| "INFEASIBLE".into())])?;
    }
    w.flush()?;
    Ok(())
}

/// `lo, lo + step, …` up to and including `hi` (within rounding).
pub fn c_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && lo <= hi && lo.is_finite() && hi.is_finite()) {
        return Err(CliError::Config(format!("invalid sweep grid [{lo}, {hi}] step {step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| lo + i as f64 * step).collect())
}

/// Plain verdict for `certify`.
pub fn certificate_verdict(cert: &NestCertificate) -> &'static str {
    if cert.guaranteed_nested {
        "guaranteed nested"
    } else {
        "not certified"
    }
}
