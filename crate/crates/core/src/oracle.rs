//! Brute-force cross-checks: a direct search over the simplex of weights, a
//! Monte Carlo estimate of Laguerre masses and a grid-refinement study.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::congestion::{default_c_interval, nested_bisection, NestedOptions};
use crate::energy::{Entropy, InternalEnergy};
use crate::error::{Error, Result};
use crate::geometry::{trapezoid_positive_part, DensityKind, MassRule, Rect};
use crate::laguerre::{argmin_label, common_cell_mean, Instance};
use crate::nest::splitting_levels;

/// `W_c(μ, ν) + Σ ν_i ln ν_i`, with `W_c` taken from the nested plan:
/// `W_c = ∫ c_N dμ − Σ_r ∫_{g_r ≥ k_r} g_r dμ`, `g_r = c_{r+1} − c_r`.
/// Exact for nested configurations; elsewhere it prices a plan that may not be admissible.
pub fn sweep_objective(inst: &Instance, nu: &[f64]) -> Result<f64> {
    inst.check_len(nu)?;
    let levels = splitting_levels(inst, nu)?.k;
    let grid = inst.grid();
    let m = grid.resolution();
    let (dx, dy) = grid.cell_size();
    let w = inst.density().weights();
    let rule = inst.rule();
    let last = inst.scores()[inst.n() - 1];
    let mut total = 0.0;
    for p in 0..grid.len() {
        let x = grid.midpoint(p);
        let q = match rule {
            MassRule::Midpoint => inst.cost().common(x),
            MassRule::CellFraction => common_cell_mean(inst.cost(), x, dx, dy),
        };
        total += w[p] * (q + last.eval(x));
    }
    let mut cum = 0.0;
    for (r, &k) in levels.iter().enumerate() {
        cum += nu[r];
        let g = inst.difference(r);
        let (a, b) = g.cell_reach(dx, dy);
        if k == f64::INFINITY {
            continue;
        }
        let mut part = 0.0;
        for row in 0..m {
            let y = grid.y_mid(row);
            for col in 0..m {
                let d = g.eval([grid.x_mid(col), y]);
                let wp = w[row * m + col];
                part += wp
                    * if k == f64::NEG_INFINITY {
                        d
                    } else {
                        match rule {
                            MassRule::Midpoint => (d - k).max(0.0),
                            MassRule::CellFraction => trapezoid_positive_part(d - k, a, b),
                        }
                    };
            }
        }
        if k.is_finite() {
            part += k * cum;
        }
        total -= part;
    }
    Ok(total + Entropy.total(nu))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub nu: Vec<f64>,
    pub objective: f64,
    pub evaluations: usize,
    /// Spacing of the finest lattice searched.
    pub step: f64,
}

/// Grid search of [`sweep_objective`] over the simplex (`N ≤ 3`), `resolution`
/// points per axis, then successive zooms around the best point; for `N = 2` a
/// golden-section pass finishes the search.
pub fn simplex_sweep_min(inst: &Instance, resolution: usize) -> Result<SweepResult> {
    let n = inst.n();
    if n > 3 {
        return Err(Error::Config(format!("simplex sweep supports N ≤ 3, got {n}")));
    }
    if !(2..=400).contains(&resolution) {
        return Err(Error::Config(format!("sweep resolution must lie in [2, 400], got {resolution}")));
    }
    if n == 1 {
        let objective = sweep_objective(inst, &[1.0])?;
        return Ok(SweepResult { nu: vec![1.0], objective, evaluations: 1, step: 0.0 });
    }
    let mut evaluations = 0;
    let mut eval = |a: f64, b: f64| -> Result<f64> {
        evaluations += 1;
        let nu = if n == 2 { vec![a, 1.0 - a] } else { vec![a, b, (1.0 - a - b).max(0.0)] };
        sweep_objective(inst, &nu)
    };
    let inside = |a: f64, b: f64| a >= 0.0 && b >= 0.0 && a + b <= 1.0 + 1e-12;
    let mut step = 1.0 / resolution as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=resolution {
        let a = i as f64 * step;
        let js = if n == 2 { 0 } else { resolution - i };
        for j in 0..=js {
            let b = j as f64 * step;
            let f = eval(a, b)?;
            if f < best.0 {
                best = (f, a, b);
            }
        }
    }
    const ZOOM: usize = 5;
    for _ in 0..4 {
        let (_, a0, b0) = best;
        let fine = step / ZOOM as f64;
        let span = ZOOM as i64;
        for i in -span..=span {
            let js = if n == 2 { 0..=0 } else { -span..=span };
            for j in js {
                let (a, b) = (a0 + i as f64 * fine, b0 + j as f64 * fine);
                let b = if n == 2 { 0.0 } else { b };
                if !inside(a, b) || (n == 2 && a > 1.0) {
                    continue;
                }
                let f = eval(a, b)?;
                if f < best.0 {
                    best = (f, a, b);
                }
            }
        }
        step = fine;
    }
    if n == 2 {
        let (mut lo, mut hi) = ((best.1 - step).max(0.0), (best.1 + step).min(1.0));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, mut f2) = (eval(x1, 0.0)?, eval(x2, 0.0)?);
        while hi - lo > 1e-9 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = eval(x1, 0.0)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = eval(x2, 0.0)?;
            }
        }
        let a = 0.5 * (lo + hi);
        let f = eval(a, 0.0)?;
        if f < best.0 {
            best = (f, a, 0.0);
        }
        step = hi - lo;
    }
    let (objective, a, b) = best;
    let nu = if n == 2 { vec![a, 1.0 - a] } else { vec![a, b, (1.0 - a - b).max(0.0)] };
    Ok(SweepResult { nu, objective, evaluations, step })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub nu: Vec<f64>,
    /// Binomial standard error per component.
    pub stderr: Vec<f64>,
    pub samples: usize,
}

/// Draws `samples` points from the continuous density behind `inst`, assigns
/// each to its Laguerre cell and returns the label frequencies.
pub fn monte_carlo_masses(inst: &Instance, v: &[f64], samples: usize, seed: u64) -> Result<MonteCarloEstimate> {
    inst.check_len(v)?;
    if samples == 0 {
        return Err(Error::Config("Monte Carlo needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = inst.grid().bounds();
    let kind = inst.density().kind().clone();
    let bound = rejection_bound(&kind, &bounds);
    let mut counts = vec![0usize; inst.n()];
    for _ in 0..samples {
        let x = sample(&mut rng, &kind, &bounds, bound);
        counts[argmin_label(inst, v, x)] += 1;
    }
    let s = samples as f64;
    let nu: Vec<f64> = counts.iter().map(|&c| c as f64 / s).collect();
    let stderr = nu.iter().map(|&p| (p * (1.0 - p) / s).sqrt()).collect();
    Ok(MonteCarloEstimate { nu, stderr, samples })
}

/// Generous upper bound of the density over the rectangle, for rejection sampling.
fn rejection_bound(kind: &DensityKind, r: &Rect) -> f64 {
    const PROBES: usize = 64;
    let mut hi: f64 = 0.0;
    for i in 0..=PROBES {
        for j in 0..=PROBES {
            let x = r.x0 + r.width() * i as f64 / PROBES as f64;
            let y = r.y0 + r.height() * j as f64 / PROBES as f64;
            hi = hi.max(kind.eval(x, y));
        }
    }
    1.25 * hi
}

fn sample<R: Rng>(rng: &mut R, kind: &DensityKind, r: &Rect, bound: f64) -> [f64; 2] {
    let uniform = |rng: &mut R| [r.x0 + r.width() * rng.random::<f64>(), r.y0 + r.height() * rng.random::<f64>()];
    match kind {
        DensityKind::Uniform => uniform(rng),
        // Marginals with density 2s on [0, 1]: inverse CDF √U.
        DensityKind::ProductXY if *r == Rect::UNIT => [rng.random::<f64>().sqrt(), rng.random::<f64>().sqrt()],
        _ => loop {
            let x = uniform(rng);
            if rng.random::<f64>() * bound <= kind.eval(x[0], x[1]) {
                break x;
            }
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedReference {
    /// `(M, C)` per resolution, in the order given.
    pub levels: Vec<(usize, f64)>,
    /// Observed convergence order from the last three levels, when defined.
    pub order: Option<f64>,
    /// Richardson extrapolation from the last two levels using `order`.
    pub extrapolated: Option<f64>,
}

impl RefinedReference {
    /// `|C(M_k) − C(M_{k+1})|` for consecutive levels.
    pub fn increments(&self) -> Vec<f64> {
        self.levels.windows(2).map(|w| (w[0].1 - w[1].1).abs()).collect()
    }
}

/// Nested bisection at each resolution of `m_list` (increasing).
pub fn refined_reference(
    make: impl Fn(usize) -> Result<Instance>,
    m_list: &[usize],
    opts: &NestedOptions,
) -> Result<RefinedReference> {
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("grid resolutions must be strictly increasing".into()));
    }
    let mut levels = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let inst = make(m)?;
        let report = nested_bisection(&inst, default_c_interval(inst.n()), opts)?;
        let c = report.c().filter(|_| report.is_success()).ok_or_else(|| {
            Error::Config(format!("reference solve failed at M = {m}: {}", report.message.unwrap_or_default()))
        })?;
        levels.push((m, c));
    }
    let (order, extrapolated) = match levels.as_slice() {
        [.., (_, c1), (m2, c2), (m3, c3)] => {
            let (d1, d2) = ((c2 - c1).abs(), (c3 - c2).abs());
            let ratio = (*m3 as f64 / *m2 as f64).max(1.0 + 1e-12);
            if d2 > 0.0 && d1 > d2 {
                let p = (d1 / d2).ln() / ratio.ln();
                (Some(p), Some(c3 + (c3 - c2) / (ratio.powf(p) - 1.0)))
            } else {
                (None, None)
            }
        }
        _ => (None, None),
    };
    Ok(RefinedReference { levels, order, extrapolated })
}
