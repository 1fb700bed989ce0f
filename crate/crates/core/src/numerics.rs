//! Finite-difference Jacobians, gauge-restricted Newton steps and bracketed
//! scalar root finders.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative finite-difference step `h_i = base · (1 + |v_i|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearStepConfig {
    pub fd_base: f64,
    /// Largest acceptable condition number of the gauge-augmented system.
    pub max_condition: f64,
}

impl Default for LinearStepConfig {
    fn default() -> Self {
        Self { fd_base: f64::EPSILON.cbrt(), max_condition: 1e12 }
    }
}

impl LinearStepConfig {
    #[inline]
    pub fn step(&self, vi: f64) -> f64 {
        self.fd_base * (1.0 + vi.abs())
    }
}

/// Centered differences: column `i` is `(R(v + h e_i) − R(v − h e_i)) / 2h`.
pub fn fd_jacobian<F>(mut residual: F, v: &[f64], cfg: &LinearStepConfig) -> Result<DMatrix<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = v.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = v.to_vec();
    for i in 0..n {
        let h = cfg.step(v[i]);
        probe[i] = v[i] + h;
        let plus = residual(&probe)?;
        probe[i] = v[i] - h;
        let minus = residual(&probe)?;
        probe[i] = v[i];
        if plus.len() != n || minus.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: plus.len().min(minus.len()) });
        }
        for r in 0..n {
            let d = (plus[r] - minus[r]) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::NonFinite("finite-difference Jacobian"));
            }
            jac[(r, i)] = d;
        }
    }
    Ok(jac)
}

/// Least-squares solution of `J s = rhs` restricted to `s ⊥ 1`.
///
/// The all-ones row is appended to `J` with target `0`, the stacked system is
/// solved by SVD, and the mean is projected out.
pub fn restricted_solve(jac: &DMatrix<f64>, rhs: &[f64], cfg: &LinearStepConfig) -> Result<Vec<f64>> {
    let n = jac.ncols();
    if jac.nrows() != n {
        return Err(Error::LengthMismatch { expected: n, found: jac.nrows() });
    }
    if rhs.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: rhs.len() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut aug = DMatrix::zeros(n + 1, n);
    aug.view_mut((0, 0), (n, n)).copy_from(jac);
    aug.row_mut(n).fill(1.0);
    let mut b = DVector::zeros(n + 1);
    b.rows_mut(0, n).copy_from_slice(rhs);

    let svd = aug.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition.is_finite() && condition <= cfg.max_condition) {
        return Err(Error::RankDeficient { condition });
    }
    let sol = svd
        .solve(&b, 0.0)
        .map_err(|_| Error::NonFinite("restricted least-squares solve"))?;
    let mean = sol.mean();
    let s: Vec<f64> = sol.iter().map(|x| x - mean).collect();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("restricted least-squares solve"));
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMode {
    Bisection,
    /// Regula falsi with the Illinois modification; bracket always kept.
    Illinois,
    /// Newton with centered-difference slope; bisection whenever the trial
    /// leaves the bracket or fails to shrink it fast enough.
    SafeguardedNewton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRootConfig {
    pub bracket: (f64, f64),
    pub tol_x: f64,
    /// Stop as soon as `|f| ≤ tol_f`; zero disables the test.
    pub tol_f: f64,
    pub max_iter: usize,
    pub mode: RootMode,
    /// Sign assigned to a non-finite (infeasible) function value.
    pub nan_sign: f64,
}

impl ScalarRootConfig {
    pub fn bisection(lo: f64, hi: f64, tol_x: f64) -> Self {
        Self {
            bracket: (lo, hi),
            tol_x,
            tol_f: 0.0,
            max_iter: 200,
            mode: RootMode::Bisection,
            nan_sign: -1.0,
        }
    }

    pub fn with_mode(mut self, mode: RootMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_tol_f(mut self, tol_f: f64) -> Self {
        self.tol_f = tol_f;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_nan_sign(mut self, nan_sign: f64) -> Self {
        self.nan_sign = nan_sign;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRoot {
    pub root: f64,
    /// `f(root)`; NaN when the root was never evaluated (bracket endpoint midpoint).
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn signum(v: f64, nan_sign: f64) -> f64 {
    if v.is_finite() {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    } else {
        nan_sign
    }
}

/// Bracketed root of `f` on `config.bracket`.
pub fn scalar_root<F: FnMut(f64) -> f64>(mut f: F, config: &ScalarRootConfig) -> Result<ScalarRoot> {
    let (mut lo, mut hi) = config.bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Config(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !(config.tol_x > 0.0) {
        return Err(Error::Config("tol_x must be positive".into()));
    }
    let mut evals = 2;
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    let nan = config.nan_sign;
    let (s_lo, s_hi) = (signum(f_lo, nan), signum(f_hi, nan));
    let done = |x: f64, fx: f64, it: usize, ev: usize| ScalarRoot {
        root: x,
        value: fx,
        iterations: it,
        evaluations: ev,
        converged: true,
    };
    if s_lo == 0.0 || (config.tol_f > 0.0 && f_lo.abs() <= config.tol_f) {
        return Ok(done(lo, f_lo, 0, evals));
    }
    if s_hi == 0.0 || (config.tol_f > 0.0 && f_hi.abs() <= config.tol_f) {
        return Ok(done(hi, f_hi, 0, evals));
    }
    if s_lo == s_hi {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }

    let mut side = 0i8; // Illinois: which end was retained last
    let mut best = (0.5 * (lo + hi), f64::NAN);
    for it in 1..=config.max_iter {
        if hi - lo <= config.tol_x {
            return Ok(ScalarRoot { root: best.0, value: best.1, iterations: it - 1, evaluations: evals, converged: true });
        }
        let mid = 0.5 * (lo + hi);
        let mut x = match config.mode {
            RootMode::Bisection => mid,
            RootMode::Illinois => {
                if f_lo.is_finite() && f_hi.is_finite() && f_hi != f_lo {
                    hi - f_hi * (hi - lo) / (f_hi - f_lo)
                } else {
                    mid
                }
            }
            RootMode::SafeguardedNewton => {
                let h = f64::EPSILON.cbrt() * (1.0 + best.0.abs());
                let (a, b) = (f(best.0 + h), f(best.0 - h));
                evals += 2;
                let fx = if best.1.is_finite() { best.1 } else { f(best.0) };
                if !best.1.is_finite() {
                    evals += 1;
                }
                let slope = (a - b) / (2.0 * h);
                if slope.is_finite() && slope != 0.0 && fx.is_finite() {
                    best.0 - fx / slope
                } else {
                    mid
                }
            }
        };
        // Keep trials strictly inside and away from the ends.
        let margin = 1e-3 * (hi - lo);
        if !(x > lo + margin && x < hi - margin) {
            x = if config.mode == RootMode::Illinois {
                x.clamp(lo + margin, hi - margin)
            } else {
                mid
            };
        }
        let fx = f(x);
        evals += 1;
        best = (x, fx);
        let sx = signum(fx, nan);
        if sx == 0.0 || (config.tol_f > 0.0 && fx.is_finite() && fx.abs() <= config.tol_f) {
            return Ok(done(x, fx, it, evals));
        }
        let width_before = hi - lo;
        if sx == s_lo {
            lo = x;
            f_lo = fx;
            if config.mode == RootMode::Illinois && side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if config.mode == RootMode::Illinois && side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        // Safeguarded Newton: force a bisection step when progress stalls.
        if config.mode == RootMode::SafeguardedNewton && hi - lo > 0.5 * width_before {
            let m = 0.5 * (lo + hi);
            let fm = f(m);
            evals += 1;
            best = (m, fm);
            let sm = signum(fm, nan);
            if sm == 0.0 || (config.tol_f > 0.0 && fm.is_finite() && fm.abs() <= config.tol_f) {
                return Ok(done(m, fm, it, evals));
            }
            if sm == s_lo {
                lo = m;
                f_lo = fm;
            } else {
                hi = m;
                f_hi = fm;
            }
        }
    }
    let converged = hi - lo <= config.tol_x;
    Ok(ScalarRoot { root: best.0, value: best.1, iterations: config.max_iter, evaluations: evals, converged })
}
