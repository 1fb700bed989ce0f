//! Run configuration: JSON file, overridden field by field by command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use nestot::geometry::{
    build_density, CostSpec, CurveFamily, DensityField, DensityKind, GridSpec, MassRule, Target, TargetSet,
};
use nestot::congestion::default_c_interval;
use nestot::hedonic::HedonicProblem;
use nestot::laguerre::Instance;

use crate::CliError;

pub const GRID_ENV: &str = "NESTOT_GRID";
pub const DEFAULT_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    #[default]
    Congestion,
    Hedonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
pub enum Example {
    /// Straight line (t, t).
    #[default]
    #[serde(rename = "E1", alias = "e1")]
    #[value(name = "E1", alias = "e1")]
    E1,
    /// Scaled parabola (t, (t/e)²).
    #[serde(rename = "E2", alias = "e2")]
    #[value(name = "E2", alias = "e2")]
    E2,
    /// Quarter circle (cos t, sin t).
    #[serde(rename = "E3", alias = "e3")]
    #[value(name = "E3", alias = "e3")]
    E3,
    /// Parabola (t, t²).
    #[serde(rename = "E4", alias = "e4")]
    #[value(name = "E4", alias = "e4")]
    E4,
    /// Curve (t, t^1.5).
    #[serde(rename = "curve-x^1.5", alias = "curve-x1.5")]
    #[value(name = "curve-x1.5", alias = "curve-x^1.5")]
    CurvePow,
    /// Targets listed in the config file.
    #[serde(rename = "explicit")]
    #[value(name = "explicit")]
    Explicit,
}

impl Example {
    fn family(&self) -> Option<CurveFamily> {
        match self {
            Example::E1 => Some(CurveFamily::Line),
            Example::E2 => Some(CurveFamily::ScaledParabola),
            Example::E3 => Some(CurveFamily::QuarterCircle),
            Example::E4 => Some(CurveFamily::Parabola),
            Example::CurvePow => Some(CurveFamily::Power(1.5)),
            Example::Explicit => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[default]
    Uniform,
    #[serde(alias = "product-xy")]
    #[value(name = "product_xy", alias = "product-xy")]
    ProductXy,
}

impl Measure {
    fn kind(&self) -> DensityKind {
        match self {
            Measure::Uniform => DensityKind::Uniform,
            Measure::ProductXy => DensityKind::ProductXY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Newton,
    Damped,
    #[default]
    NestedBisection,
    NestedNewton,
}

impl MethodArg {
    pub const ALL: [MethodArg; 4] =
        [MethodArg::Newton, MethodArg::Damped, MethodArg::NestedBisection, MethodArg::NestedNewton];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    #[default]
    CellFraction,
    Midpoint,
}

/// Every field optional in the file; absent fields fall back to defaults
/// that depend on the problem (tolerance) and on `N` (the `C` interval).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Option<Problem>,
    pub example: Option<Example>,
    #[serde(rename = "N", alias = "n")]
    pub n: Option<usize>,
    pub measure: Option<Measure>,
    pub measure2: Option<Measure>,
    pub method: Option<MethodArg>,
    pub grid: Option<usize>,
    pub mass_rule: Option<RuleArg>,
    pub tol: Option<f64>,
    pub maxit: Option<usize>,
    #[serde(rename = "C0", alias = "c0")]
    pub c0: Option<f64>,
    #[serde(rename = "C_interval", alias = "c_interval")]
    pub c_interval: Option<[f64; 2]>,
    /// Fixed gauge constant of the hedonic problem.
    #[serde(rename = "C", alias = "c")]
    pub c: Option<f64>,
    /// `[x1, x2]` points for the explicit example, in curve order.
    pub targets: Option<Vec<[f64; 2]>>,
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub error_curve: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            problem, example, n, measure, measure2, method, grid, mass_rule, tol, maxit, c0, c_interval, c, targets,
            csv, svg, error_curve
        )
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let problem = self.problem.unwrap_or_default();
        let example = self.example.unwrap_or_default();
        let n = match (self.n, &self.targets) {
            (Some(n), _) => n,
            (None, Some(t)) if example == Example::Explicit => t.len(),
            (None, _) => 3,
        };
        if n == 0 {
            return Err(CliError::Config("N must be at least 1".into()));
        }
        let grid = match self.grid {
            Some(m) => m,
            None => match std::env::var(GRID_ENV) {
                Ok(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{GRID_ENV} must be an integer, got {s:?}")))?,
                Err(_) => DEFAULT_GRID,
            },
        };
        if grid < 8 {
            return Err(CliError::Config(format!("grid must be at least 8, got {grid}")));
        }
        let tol = self.tol.unwrap_or(match problem {
            Problem::Congestion => 1e-5,
            Problem::Hedonic => 1e-7,
        });
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Config(format!("tol must be positive, got {tol}")));
        }
        let maxit = self.maxit.unwrap_or(20);
        if maxit == 0 {
            return Err(CliError::Config("maxit must be positive".into()));
        }
        if self.c0.is_some_and(|c| !c.is_finite()) {
            return Err(CliError::Config("C0 must be finite".into()));
        }
        if let Some([lo, hi]) = self.c_interval {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(CliError::Config(format!("invalid C interval [{lo}, {hi}]")));
            }
        }
        if example == Example::Explicit {
            match &self.targets {
                Some(t) if t.len() == n => {}
                Some(t) => {
                    return Err(CliError::Config(format!("explicit example lists {} targets but N = {n}", t.len())))
                }
                None => return Err(CliError::Config("explicit example needs a \"targets\" list".into())),
            }
        } else if self.targets.is_some() {
            return Err(CliError::Config("\"targets\" is only valid with the explicit example".into()));
        }
        Ok(Resolved {
            problem,
            example,
            n,
            measure: self.measure.unwrap_or_default(),
            measure2: self.measure2.unwrap_or(Measure::ProductXy),
            method: self.method.unwrap_or_default(),
            grid,
            rule: match self.mass_rule.unwrap_or_default() {
                RuleArg::CellFraction => MassRule::CellFraction,
                RuleArg::Midpoint => MassRule::Midpoint,
            },
            tol,
            maxit,
            c0_set: self.c0,
            c_interval_set: self.c_interval.map(|[a, b]| (a, b)),
            hedonic_c: self.c.unwrap_or(0.0),
            targets: self.targets.clone(),
        })
    }
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub problem: Problem,
    pub example: Example,
    pub n: usize,
    pub measure: Measure,
    pub measure2: Measure,
    pub method: MethodArg,
    pub grid: usize,
    pub rule: MassRule,
    pub tol: f64,
    pub maxit: usize,
    c0_set: Option<f64>,
    c_interval_set: Option<(f64, f64)>,
    pub hedonic_c: f64,
    pub targets: Option<Vec<[f64; 2]>>,
}

impl Resolved {
    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    /// Initial `C` for nested Newton: −5, or −7.5 from 192 targets on.
    pub fn c0(&self) -> f64 {
        self.c0_set.unwrap_or(default_c_interval(self.n).0)
    }

    pub fn c_interval(&self) -> (f64, f64) {
        self.c_interval_set.unwrap_or(default_c_interval(self.n))
    }

    pub fn target_set(&self) -> Result<TargetSet, CliError> {
        let set = match self.example.family() {
            Some(family) => TargetSet::on_curve(family, self.n)?,
            None => {
                let pts = self.targets.as_ref().ok_or_else(|| CliError::Config("missing targets".into()))?;
                TargetSet::explicit(pts.iter().enumerate().map(|(i, &y)| Target { t: i as f64, y }).collect())?
            }
        };
        Ok(set)
    }

    fn density(&self, measure: Measure) -> Result<DensityField, CliError> {
        let grid = GridSpec::unit_square(self.grid)?;
        Ok(build_density(grid, measure.kind())?.with_rule(self.rule))
    }

    pub fn instance(&self) -> Result<Instance, CliError> {
        Ok(Instance::new(self.density(self.measure)?, CostSpec::SquaredDistance, self.target_set()?)?)
    }

    pub fn hedonic(&self) -> Result<HedonicProblem, CliError> {
        Ok(HedonicProblem::new(
            self.density(self.measure)?,
            self.density(self.measure2)?,
            CostSpec::SquaredDistance,
            self.target_set()?,
            self.hedonic_c,
        )?)
    }
}
