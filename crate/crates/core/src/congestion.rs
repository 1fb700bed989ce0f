//! The entropic congestion problem `min_ν W_c(μ, ν) + Σ ν_i ln ν_i`.
//!
//! Optimality reads `v_i + ln ν_i = C` with `ν_i = μ(Lag_i(v))`. Two families
//! of solvers are provided: Newton on the full potential vector (standard and
//! nestedness-damped), and the sequential nested methods that reduce the
//! system to a scalar equation in `C`.

use std::time::Instant;

use crate::energy::{softmin, Entropy, InternalEnergy};
use crate::error::{Error, Result};
use crate::geometry::MassRule;
use crate::laguerre::{
    cell_masses, check_nested, tessellate, transport_cost, IncrementalTessellation, Instance,
    Potentials, Tessellation,
};
use crate::nest::{entropy_weight_bounds, k_max, level_for_mass, lipschitz_mc, superlevel_mass};
use crate::numerics::{fd_jacobian, restricted_solve, scalar_root, LinearStepConfig, RootMode, ScalarRootConfig};
use crate::report::{Method, SolveReport, Status};

/// `G_i(v) = μ(Lag_i(v)) − e^{−v_i} / Σ_k e^{−v_k}`.
pub fn residual_g(inst: &Instance, v: &[f64]) -> Result<Vec<f64>> {
    let masses = cell_masses(inst, v)?;
    Ok(masses.iter().zip(softmin(v)).map(|(m, p)| m - p).collect())
}

/// `H_i(v, C) = μ(Lag_i(v)) − e^{C − v_i}`.
pub fn residual_h(inst: &Instance, v: &[f64], c: f64) -> Result<Vec<f64>> {
    let masses = cell_masses(inst, v)?;
    Ok(masses.iter().zip(v).map(|(m, vi)| m - (c - vi).exp()).collect())
}

fn inf_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Success threshold: the requested tolerance, floored by the resolution of
/// piecewise-constant masses when cells count all-or-nothing.
pub fn effective_tol(inst: &Instance, tol: f64) -> f64 {
    match inst.rule() {
        MassRule::CellFraction => tol,
        MassRule::Midpoint => {
            let m = inst.grid().resolution() as f64;
            tol.max(2.0 * inst.n() as f64 / (m * m))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub maxit: usize,
    /// Cap on step halvings per iteration (damped variant).
    pub max_halvings: usize,
    pub linear: LinearStepConfig,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            maxit: 20,
            max_halvings: 40,
            linear: LinearStepConfig::default(),
        }
    }
}

impl NewtonOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

fn entropy_c(v: &[f64]) -> f64 {
    Entropy.normalizing_constant(v)
}

fn finish(
    method: Method,
    inst: &Instance,
    v: Vec<f64>,
    c: Option<f64>,
    iterations: usize,
    damping_steps: usize,
    status: Status,
    message: Option<String>,
    started: Instant,
) -> SolveReport {
    let n = inst.n();
    let finite = v.iter().all(|x| x.is_finite());
    let mut potentials = Potentials::new(v);
    potentials.c = c;
    let (masses, nested, residual_inf) = if finite && potentials.len() == n {
        let pot = potentials.normalized();
        let tess = tessellate(inst, &pot).ok();
        let nested = tess.as_ref().map(|t| check_nested(t).nested);
        let masses = tess.map(|t| t.masses).unwrap_or_default();
        let residual = match pot.c {
            Some(c) => inf_norm(
                &masses.iter().zip(&pot.v).map(|(m, vi)| m - (c - vi).exp()).collect::<Vec<_>>(),
            ),
            None => f64::NAN,
        };
        potentials = pot;
        (masses, nested, residual)
    } else {
        (Vec::new(), None, f64::NAN)
    };
    SolveReport {
        method,
        n,
        potentials,
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

/// Newton on `G` with the gauge-restricted step. The damped variant halves
/// the step until the trial tessellation passes the nestedness test.
fn newton(inst: &Instance, v0: &[f64], opts: &NewtonOptions, damped: bool) -> Result<SolveReport> {
    inst.check_len(v0)?;
    let started = Instant::now();
    let method = if damped { Method::DampedNewton } else { Method::StandardNewton };
    let tol = effective_tol(inst, opts.tol);
    let mut v = v0.to_vec();
    let mut damping = 0;
    let fail = |v: Vec<f64>, it: usize, damping: usize, why: String| {
        let c = v.iter().all(|x| x.is_finite()).then(|| entropy_c(&v));
        finish(method, inst, v, c, it, damping, Status::Failed, Some(why), started)
    };
    let mut g = residual_g(inst, &v)?;
    for it in 0..=opts.maxit {
        if inf_norm(&g) <= tol {
            let c = entropy_c(&v);
            return Ok(finish(method, inst, v, Some(c), it, damping, Status::Success, None, started));
        }
        if it == opts.maxit {
            break;
        }
        let jac = match fd_jacobian(|x| residual_g(inst, x), &v, &opts.linear) {
            Ok(j) => j,
            Err(e) => return Ok(fail(v, it, damping, e.to_string())),
        };
        let step = match restricted_solve(&jac, &g, &opts.linear) {
            Ok(s) => s,
            Err(e) => return Ok(fail(v, it, damping, e.to_string())),
        };
        let mut scale = 1.0;
        let mut trial: Vec<f64> = v.iter().zip(&step).map(|(a, s)| a - s).collect();
        if damped {
            let mut halvings = 0;
            loop {
                let tess = tessellate(inst, &Potentials::new(trial.clone()))?;
                if check_nested(&tess).nested {
                    break;
                }
                halvings += 1;
                if halvings > opts.max_halvings {
                    return Ok(fail(v, it + 1, damping + halvings, "damping cap exceeded".into()));
                }
                scale *= 0.5;
                trial = v.iter().zip(&step).map(|(a, s)| a - scale * s).collect();
            }
            damping += halvings;
        }
        let shift = trial[0];
        v = trial.iter().map(|x| x - shift).collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Ok(fail(v, it + 1, damping, "non-finite iterate".into()));
        }
        g = residual_g(inst, &v)?;
    }
    Ok(fail(v, opts.maxit, damping, format!("no convergence in {} iterations", opts.maxit)))
}

pub fn newton_standard(inst: &Instance, v0: &[f64], opts: &NewtonOptions) -> Result<SolveReport> {
    newton(inst, v0, opts, false)
}

pub fn newton_damped(inst: &Instance, v0: &[f64], opts: &NewtonOptions) -> Result<SolveReport> {
    newton(inst, v0, opts, true)
}

/// Outcome of the sequential construction for one `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEval {
    /// `μ(Lag_N) − e^{C − v_N}`; `None` when some stage was infeasible.
    pub value: Option<f64>,
    /// Potentials determined so far (all `N` when feasible).
    pub v: Vec<f64>,
    /// Masses of the committed labels at the last completed stage.
    pub masses: Vec<f64>,
}

impl ErrorEval {
    pub fn is_feasible(&self) -> bool {
        self.value.is_some()
    }
}

/// Inner scalar solver used by the sequential constructions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSolver {
    pub mode: RootMode,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for InnerSolver {
    fn default() -> Self {
        Self { mode: RootMode::Illinois, rel_tol: 1e-14, max_iter: 300 }
    }
}

impl InnerSolver {
    pub fn config(&self, lo: f64, hi: f64, rule: MassRule) -> ScalarRootConfig {
        let mode = if rule == MassRule::Midpoint { RootMode::Bisection } else { self.mode };
        ScalarRootConfig::bisection(lo, hi, self.rel_tol * (1.0 + lo.abs().max(hi.abs())))
            .with_mode(mode)
            .with_max_iter(self.max_iter)
    }
}

/// Sequential construction for fixed `C`: with `v_1 = 0`, each `v_j` solves
/// `μ(Lag_{j−1}(v_1..v_j)) = e^{C − v_{j−1}}`; an intermediate stage whose new
/// cell already holds less than `e^{C − v_j}` makes `C` infeasible.
pub fn error_func(inst: &Instance, c: f64) -> Result<ErrorEval> {
    error_func_with(inst, c, &InnerSolver::default())
}

pub fn error_func_with(inst: &Instance, c: f64, inner: &InnerSolver) -> Result<ErrorEval> {
    if !c.is_finite() {
        return Err(Error::NonFinite("C"));
    }
    let n = inst.n();
    let mut inc = IncrementalTessellation::new(inst, 0.0);
    let mut masses = vec![1.0];
    for j in 1..n {
        let prev = inc.potentials()[j - 1];
        let target = (c - prev).exp();
        if masses[j - 1] < target {
            return Ok(ErrorEval { value: None, v: inc.potentials().to_vec(), masses });
        }
        let (lo, hi) = inc.next_bracket();
        let cfg = inner.config(lo, hi, inst.rule());
        let t = match scalar_root(|t| inc.trial_mass(t) - target, &cfg) {
            Ok(r) => r.root,
            // Equality at the low end: the previous cell holds exactly the target.
            Err(Error::NoSignChange { f_lo, .. }) if f_lo.abs() <= 1e-15 => lo,
            Err(e) => return Err(e),
        };
        masses = inc.commit(t);
        // The last cell is the error itself and may fall short of its target.
        if j + 1 < n && (c - t).exp() - masses[j] > 0.0 {
            return Ok(ErrorEval { value: None, v: inc.potentials().to_vec(), masses });
        }
    }
    let v = inc.potentials().to_vec();
    let value = masses[n - 1] - (c - v[n - 1]).exp();
    Ok(ErrorEval { value: Some(value), v, masses })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NestedOptions {
    pub tol: f64,
    pub max_outer: usize,
    /// Newton halving cap for the infeasibility / sign safeguards.
    pub max_halvings: usize,
    pub inner: InnerSolver,
}

impl Default for NestedOptions {
    fn default() -> Self {
        Self { tol: 1e-5, max_outer: 60, max_halvings: 60, inner: InnerSolver::default() }
    }
}

impl NestedOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Default initial interval for `C` (wider for very many targets).
pub fn default_c_interval(n: usize) -> (f64, f64) {
    if n >= 192 {
        (-7.5, 0.0)
    } else {
        (-5.0, 0.0)
    }
}

fn nested_finish(
    method: Method,
    inst: &Instance,
    eval: Option<(f64, ErrorEval)>,
    iterations: usize,
    success: bool,
    message: Option<String>,
    started: Instant,
) -> SolveReport {
    let Some((c, e)) = eval else {
        return finish(method, inst, Vec::new(), None, iterations, 0, Status::Failed, message, started);
    };
    let complete = e.v.len() == inst.n();
    let v = if complete { e.v } else { Vec::new() };
    let mut report = finish(method, inst, v, Some(c), iterations, 0, Status::Failed, message, started);
    report.status = match (success, report.nested) {
        (_, Some(false)) => Status::NotNested,
        (true, _) => Status::Success,
        (false, _) => Status::Failed,
    };
    if report.status == Status::NotNested && report.message.is_none() {
        report.message = Some("solution is not nested".into());
    }
    report
}

/// Bisection on `C`: positive error raises the lower end, negative or
/// infeasible lowers the upper end.
pub fn nested_bisection(inst: &Instance, interval: (f64, f64), opts: &NestedOptions) -> Result<SolveReport> {
    let started = Instant::now();
    let tol = effective_tol(inst, opts.tol);
    let (mut lo, mut hi) = interval;
    if !(lo < hi) {
        return Err(Error::Config(format!("empty C interval [{lo}, {hi}]")));
    }
    let mut last: Option<(f64, ErrorEval)> = None;
    for it in 1..=opts.max_outer {
        let mid = 0.5 * (lo + hi);
        let e = error_func_with(inst, mid, &opts.inner)?;
        match e.value {
            Some(val) if val.abs() <= tol => {
                return Ok(nested_finish(Method::NestedBisection, inst, Some((mid, e)), it, true, None, started));
            }
            Some(val) if val > 0.0 => lo = mid,
            _ => hi = mid,
        }
        if e.is_feasible() {
            last = Some((mid, e));
        }
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + lo.abs()) {
            return Ok(nested_finish(
                Method::NestedBisection,
                inst,
                last,
                it,
                false,
                Some("C interval exhausted without reaching tolerance".into()),
                started,
            ));
        }
    }
    Ok(nested_finish(
        Method::NestedBisection,
        inst,
        last,
        opts.max_outer,
        false,
        Some(format!("no convergence in {} bisection steps", opts.max_outer)),
        started,
    ))
}

/// One-dimensional Newton on `C` with a centered-difference slope
/// (`h = ε^{1/3}`); trial steps are halved while `C ≥ 0` or infeasible.
pub fn nested_newton(inst: &Instance, c0: f64, opts: &NestedOptions) -> Result<SolveReport> {
    let started = Instant::now();
    let tol = effective_tol(inst, opts.tol);
    let h = f64::EPSILON.cbrt();
    let method = Method::NestedNewton;
    let mut c = c0;
    let mut e = error_func_with(inst, c, &opts.inner)?;
    let Some(mut val) = e.value else {
        return Ok(nested_finish(method, inst, None, 0, false, Some(format!("C0 = {c0} is infeasible")), started));
    };
    for it in 0..=opts.max_outer {
        if val.abs() <= tol {
            return Ok(nested_finish(method, inst, Some((c, e)), it, true, None, started));
        }
        if it == opts.max_outer {
            break;
        }
        let ep = error_func_with(inst, c + h, &opts.inner)?.value;
        let em = error_func_with(inst, c - h, &opts.inner)?.value;
        let slope = match (ep, em) {
            (Some(p), Some(m)) => (p - m) / (2.0 * h),
            (None, Some(m)) => (val - m) / h,
            _ => f64::NAN,
        };
        if !slope.is_finite() || slope == 0.0 {
            return Ok(nested_finish(
                method,
                inst,
                Some((c, e)),
                it,
                false,
                Some("non-finite or vanishing derivative of the error function".into()),
                started,
            ));
        }
        let mut step = -val / slope;
        let mut halvings = 0;
        while c + step >= 0.0 {
            step *= 0.5;
            halvings += 1;
        }
        let mut trial = error_func_with(inst, c + step, &opts.inner)?;
        while !trial.is_feasible() {
            halvings += 1;
            if halvings > opts.max_halvings {
                return Ok(nested_finish(
                    method,
                    inst,
                    Some((c, e)),
                    it + 1,
                    false,
                    Some("step halving could not restore feasibility".into()),
                    started,
                ));
            }
            step *= 0.5;
            trial = error_func_with(inst, c + step, &opts.inner)?;
        }
        c += step;
        e = trial;
        val = e.value.expect("feasible");
    }
    Ok(nested_finish(
        method,
        inst,
        Some((c, e)),
        opts.max_outer,
        false,
        Some(format!("no convergence in {} Newton steps", opts.max_outer)),
        started,
    ))
}

/// Forward pass with levels clamped at `k_max`, whose error is monotone in `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalH {
    /// `−∞` when mass runs out before the last index.
    pub value: f64,
    pub v: Vec<f64>,
    pub nu: Vec<f64>,
    pub levels: Vec<f64>,
    /// Indices (0-based) whose level was clamped at `k_max`.
    pub clamped: Vec<usize>,
}

pub fn theoretical_h(inst: &Instance, c: f64) -> Result<TheoreticalH> {
    let n = inst.n();
    let fi = |t: f64| Entropy.f_prime_inv(t);
    let mut v = vec![0.0];
    let mut nu = Vec::with_capacity(n);
    let mut levels = Vec::new();
    let mut clamped = Vec::new();
    if n == 1 {
        return Ok(TheoreticalH { value: 1.0 - fi(c), v, nu: vec![1.0], levels, clamped });
    }
    let neg = |v: Vec<f64>, nu: Vec<f64>, levels: Vec<f64>, clamped: Vec<usize>| {
        Ok(TheoreticalH { value: f64::NEG_INFINITY, v, nu, levels, clamped })
    };
    // Mass of X_≥(y_{i−1}, k_{i−1}), i.e. of the cells fixed so far.
    let mut covered;
    {
        let target = fi(c).min(1.0);
        let k0 = level_for_mass(inst, &inst.difference(0), target)?;
        covered = superlevel_mass(inst, 0, k0);
        nu.push(covered);
        levels.push(k0);
        v.push(k0);
    }
    for i in 1..n - 1 {
        let want = fi(c - v[i]);
        if 1.0 - covered < want {
            return neg(v, nu, levels, clamped);
        }
        let kbar = level_for_mass(inst, &inst.difference(i), want + covered)?;
        let cap = k_max(inst, i - 1, levels[i - 1])?;
        let k = if kbar < cap {
            kbar
        } else {
            clamped.push(i);
            cap
        };
        let mass = superlevel_mass(inst, i, k);
        nu.push((mass - covered).max(0.0));
        covered = covered.max(mass);
        levels.push(k);
        v.push(v[i] + k);
    }
    let value = 1.0 - covered - fi(c - v[n - 1]);
    nu.push(1.0 - covered);
    Ok(TheoreticalH { value, v, nu, levels, clamped })
}

/// Interval guaranteed to contain the optimal `C`, from the weight bounds on `ν_2`.
pub fn c_search_bounds(inst: &Instance) -> Result<(f64, f64)> {
    let n = inst.n();
    if n < 2 {
        return Err(Error::InvalidTargets("C bounds need at least two targets".into()));
    }
    let mc = lipschitz_mc(inst);
    let d: Vec<f64> = (0..n).map(|i| mc * inst.cost().target_distance(inst.targets(), i, 0)).collect();
    let lse = |sign: f64| {
        let m = d.iter().map(|x| sign * x).fold(f64::NEG_INFINITY, f64::max);
        m + d.iter().map(|x| (sign * x - m).exp()).sum::<f64>().ln()
    };
    let d2 = d[1];
    Ok((-lse(1.0) - d2, -lse(-1.0) + d2))
}

/// `W_c(μ, ν) + Σ ν_i ln ν_i` for the plan induced by a tessellation.
pub fn objective_value(inst: &Instance, tess: &Tessellation) -> Result<f64> {
    Ok(transport_cost(inst, tess)? + Entropy.total(&tess.masses))
}

/// Re-exported weight sandwich for solved instances.
pub fn weight_bounds(inst: &Instance) -> Vec<(f64, f64)> {
    entropy_weight_bounds(inst, lipschitz_mc(inst))
}
