//! Hedonic pricing: `min_ν W_c(μ₁, ν) + W_c(μ₂, ν)` over a shared discrete
//! marginal `ν`. With `v¹ = v` and `v² = C − v`, optimality is
//! `μ₁(Lag_i(v)) = μ₂(Lag_i(C − v))` for every `i`.

use std::time::Instant;

use crate::congestion::{InnerSolver, NewtonOptions};
use crate::error::{Error, Result};
use crate::geometry::{CostSpec, DensityField, MassRule, TargetSet};
use crate::laguerre::{
    cell_masses, check_nested, tessellate, IncrementalTessellation, Instance, NestedVerdict, Potentials,
};
use crate::numerics::{fd_jacobian, restricted_solve, scalar_root, RootMode};
use crate::report::{Method, SolveReport, Status};

#[derive(Debug, Clone)]
pub struct HedonicProblem {
    side1: Instance,
    side2: Instance,
    c: f64,
}

impl HedonicProblem {
    pub fn new(mu1: DensityField, mu2: DensityField, cost: CostSpec, targets: TargetSet, c: f64) -> Result<Self> {
        if mu1.grid() != mu2.grid() {
            return Err(Error::InvalidGrid("both densities must live on the same grid".into()));
        }
        if !c.is_finite() {
            return Err(Error::NonFinite("C"));
        }
        let side1 = Instance::new(mu1, cost, targets)?;
        let side2 = side1.with_density(mu2)?;
        Ok(Self { side1, side2, c })
    }

    pub fn side1(&self) -> &Instance {
        &self.side1
    }

    pub fn side2(&self) -> &Instance {
        &self.side2
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn n(&self) -> usize {
        self.side1.n()
    }

    pub fn with_rule(&self, rule: MassRule) -> Self {
        Self { side1: self.side1.with_rule(rule), side2: self.side2.with_rule(rule), c: self.c }
    }

    /// Same problem with `C` replaced (the tessellations move with the gauge).
    pub fn with_c(&self, c: f64) -> Self {
        Self { c, ..self.clone() }
    }

    fn side2_potentials(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| self.c - x).collect()
    }
}

/// `R_i = μ₁(Lag_i(v)) − μ₂(Lag_i(C − v))`.
pub fn hedonic_residual(p: &HedonicProblem, v: &[f64]) -> Result<Vec<f64>> {
    let m1 = cell_masses(&p.side1, v)?;
    let m2 = cell_masses(&p.side2, &p.side2_potentials(v))?;
    Ok(m1.iter().zip(&m2).map(|(a, b)| a - b).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HedonicVerdict {
    pub hedonically_nested: bool,
    pub side1: NestedVerdict,
    pub side2: NestedVerdict,
}

/// Both tessellations (for `v` and for `C − v`) must pass the nestedness test.
pub fn hedonic_nestedness(p: &HedonicProblem, v: &[f64]) -> Result<HedonicVerdict> {
    let t1 = tessellate(&p.side1, &Potentials::new(v.to_vec()))?;
    let t2 = tessellate(&p.side2, &Potentials::new(p.side2_potentials(v)))?;
    let side1 = check_nested(&t1);
    let side2 = check_nested(&t2);
    Ok(HedonicVerdict { hedonically_nested: side1.nested && side2.nested, side1, side2 })
}

fn inf_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |a, x| a.max(x.abs()))
}

#[allow(clippy::too_many_arguments)]
fn report(
    p: &HedonicProblem,
    method: Method,
    v: Vec<f64>,
    iterations: usize,
    damping_steps: usize,
    status: Status,
    message: Option<String>,
    started: Instant,
) -> SolveReport {
    let n = p.n();
    let usable = v.len() == n && v.iter().all(|x| x.is_finite());
    let (masses, nested, residual_inf) = if usable {
        let r = hedonic_residual(p, &v).ok();
        let masses = cell_masses(&p.side1, &v).unwrap_or_default();
        let nested = hedonic_nestedness(p, &v).ok().map(|h| h.hedonically_nested);
        (masses, nested, r.map(|r| inf_norm(&r)).unwrap_or(f64::NAN))
    } else {
        (Vec::new(), None, f64::NAN)
    };
    // Report in the gauge v_1 = 0, shifting C by twice the offset.
    let (v, c) = if usable {
        let s = v[0];
        (v.iter().map(|x| x - s).collect(), p.c - 2.0 * s)
    } else {
        (v, p.c)
    };
    SolveReport {
        method,
        n,
        potentials: Potentials::new(v).with_c(c),
        masses,
        iterations,
        damping_steps,
        nested,
        residual_inf,
        elapsed: started.elapsed(),
        status,
        message,
    }
}

/// Newton on the hedonic residual with the gauge-restricted step; the damped
/// variant halves until both tessellations pass the nestedness test.
pub fn hedonic_newton(p: &HedonicProblem, v0: &[f64], opts: &NewtonOptions, damped: bool) -> Result<SolveReport> {
    p.side1.check_len(v0)?;
    let started = Instant::now();
    let method = if damped { Method::HedonicDampedNewton } else { Method::HedonicNewton };
    let mut v = v0.to_vec();
    let mut damping = 0;
    let mut r = hedonic_residual(p, &v)?;
    for it in 0..=opts.maxit {
        if inf_norm(&r) <= opts.tol {
            return Ok(report(p, method, v, it, damping, Status::Success, None, started));
        }
        if it == opts.maxit {
            break;
        }
        let step = fd_jacobian(|x| hedonic_residual(p, x), &v, &opts.linear)
            .and_then(|j| restricted_solve(&j, &r, &opts.linear));
        let step = match step {
            Ok(s) => s,
            Err(e) => return Ok(report(p, method, v, it, damping, Status::Failed, Some(e.to_string()), started)),
        };
        let mut scale = 1.0;
        let mut trial: Vec<f64> = v.iter().zip(&step).map(|(a, s)| a - s).collect();
        if damped {
            let mut halvings = 0;
            while !hedonic_nestedness(p, &trial)?.hedonically_nested {
                halvings += 1;
                if halvings > opts.max_halvings {
                    return Ok(report(
                        p,
                        method,
                        v,
                        it + 1,
                        damping + halvings,
                        Status::NotNested,
                        Some("solution is not hedonically nested".into()),
                        started,
                    ));
                }
                scale *= 0.5;
                trial = v.iter().zip(&step).map(|(a, s)| a - scale * s).collect();
            }
            damping += halvings;
        }
        v = trial;
        if v.iter().any(|x| !x.is_finite()) {
            return Ok(report(p, method, v, it + 1, damping, Status::Failed, Some("non-finite iterate".into()), started));
        }
        r = hedonic_residual(p, &v)?;
    }
    // Damping only engages when the full step would leave the nested set; a
    // damped run that stalls against that constraint is reported as such.
    let status = if damped && damping > 0 { Status::NotNested } else { Status::Failed };
    let message = match status {
        Status::NotNested => format!("no convergence in {} iterations; solution is not hedonically nested", opts.maxit),
        _ => format!("no convergence in {} iterations", opts.maxit),
    };
    Ok(report(p, method, v, opts.maxit, damping, status, Some(message), started))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedonicNestedOptions {
    pub tol: f64,
    pub inner: InnerSolver,
}

impl Default for HedonicNestedOptions {
    fn default() -> Self {
        Self { tol: 1e-7, inner: InnerSolver::default() }
    }
}

/// Sequential solve: with `v_1 = 0`, each `v_{i+1}` balances the masses of
/// cell `i` on both sides. The last equation is left unsolved; it holds
/// automatically when both tessellations are nested.
pub fn hedonic_nested(p: &HedonicProblem, opts: &HedonicNestedOptions) -> Result<SolveReport> {
    let started = Instant::now();
    let method = match opts.inner.mode {
        RootMode::Bisection => Method::HedonicNestedBisection,
        _ => Method::HedonicNestedNewton,
    };
    let n = p.n();
    let c = p.c;
    let mut t1 = IncrementalTessellation::new(&p.side1, 0.0);
    let mut t2 = IncrementalTessellation::new(&p.side2, c);
    for j in 1..n {
        let (lo1, hi1) = t1.next_bracket();
        let (lo2, hi2) = t2.next_bracket();
        let lo = lo1.min(c - hi2);
        let hi = hi1.max(c - lo2);
        let cfg = opts.inner.config(lo, hi, p.side1.rule().max_rule(p.side2.rule()));
        let balance = |t: f64| t1.trial_mass(t) - t2.trial_mass(c - t);
        let t = match scalar_root(balance, &cfg) {
            Ok(r) => r.root,
            Err(Error::NoSignChange { .. }) => {
                let v = t1.potentials().to_vec();
                return Ok(report(
                    p,
                    method,
                    v,
                    j,
                    0,
                    Status::NotNested,
                    Some(format!("no sign change while placing potential {}", j + 1)),
                    started,
                ));
            }
            Err(e) => return Err(e),
        };
        t1.commit(t);
        t2.commit(c - t);
    }
    let v = t1.potentials().to_vec();
    let verdict = hedonic_nestedness(p, &v)?;
    let r = hedonic_residual(p, &v)?;
    let (status, message) = if !verdict.hedonically_nested {
        (Status::NotNested, Some("solution is not hedonically nested".to_string()))
    } else if inf_norm(&r) <= 10.0 * opts.tol {
        (Status::Success, None)
    } else {
        (Status::Failed, Some(format!("final residual {:.3e} above tolerance", inf_norm(&r))))
    };
    Ok(report(p, method, v, n.saturating_sub(1), 0, status, message, started))
}

trait RuleJoin {
    fn max_rule(self, other: MassRule) -> MassRule;
}

impl RuleJoin for MassRule {
    /// Midpoint masses are piecewise constant: bisection is then the only safe mode.
    fn max_rule(self, other: MassRule) -> MassRule {
        if self == MassRule::Midpoint || other == MassRule::Midpoint {
            MassRule::Midpoint
        } else {
            MassRule::CellFraction
        }
    }
}
