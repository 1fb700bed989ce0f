//! Nestedness theory: splitting levels, `k_max`, minimal mass differences,
//! weight bounds for the entropic congestion problem and the a-priori
//! certificate built from them.
//!
//! Indices are 0-based: `g_i = c(·, y_{i+1}) − c(·, y_i)` for `i < N − 1`,
//! and `X_≥(y_i, k) = {g_i ≥ k}` is the region preferring some label `≤ i`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{AffineField, CostSpec, DensityKind, MassRule, Rect};
use crate::laguerre::Instance;
use crate::numerics::{scalar_root, RootMode, ScalarRootConfig};

/// `μ(X_≥(y_i, k))` under the instance's mass rule.
pub fn superlevel_mass(inst: &Instance, i: usize, k: f64) -> f64 {
    inst.density().superlevel_mass(&inst.difference(i), k)
}

/// Level `k` with `μ({field ≥ k}) = target`; `±∞` sentinels at the ends.
pub fn level_for_mass(inst: &Instance, field: &AffineField, target: f64) -> Result<f64> {
    const EDGE: f64 = 1e-15;
    if target >= 1.0 - EDGE {
        return Ok(f64::NEG_INFINITY);
    }
    if target <= EDGE {
        return Ok(f64::INFINITY);
    }
    let (lo, hi) = field_bracket(inst, field);
    let density = inst.density();
    let mode = match inst.rule() {
        MassRule::Midpoint => RootMode::Bisection,
        MassRule::CellFraction => RootMode::Illinois,
    };
    let cfg = ScalarRootConfig::bisection(lo, hi, 4.0 * f64::EPSILON * (1.0 + lo.abs().max(hi.abs())))
        .with_mode(mode)
        .with_max_iter(400);
    Ok(scalar_root(|k| density.superlevel_mass(field, k) - target, &cfg)?.root)
}

/// Interval of `k` beyond which `{field ≥ k}` is full or empty, cell spread included.
fn field_bracket(inst: &Instance, field: &AffineField) -> (f64, f64) {
    let (lo, hi) = field.range_over(&inst.grid().bounds());
    let pad = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
    (lo - pad, hi + pad)
}

/// Splitting levels `k_r` with `μ(X_≥(y_r, k_r)) = Σ_{i≤r} ν_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingLevels {
    pub k: Vec<f64>,
}

pub fn splitting_levels(inst: &Instance, nu: &[f64]) -> Result<SplittingLevels> {
    if nu.len() != inst.n() {
        return Err(Error::LengthMismatch { expected: inst.n(), found: nu.len() });
    }
    if nu.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Config("weights must be finite and nonnegative".into()));
    }
    let mut cum = 0.0;
    let mut k = Vec::with_capacity(inst.n().saturating_sub(1));
    for r in 0..inst.n().saturating_sub(1) {
        cum += nu[r];
        k.push(level_for_mass(inst, &inst.difference(r), cum)?);
    }
    Ok(SplittingLevels { k })
}

/// Largest `k` with `X_≥(y_i, k_i) ⊆ X_≥(y_{i+1}, k)`: the minimum of
/// `g_{i+1}` over `X_≥(y_i, k_i)`, `+∞` when that set is empty.
pub fn k_max(inst: &Instance, i: usize, k_i: f64) -> Result<f64> {
    let n = inst.n();
    if n < 3 || i + 2 >= n {
        return Err(Error::IndexOutOfRange { index: i, lo: 0, hi: n.saturating_sub(3) });
    }
    if k_i == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let gi = inst.difference(i);
    let gn = inst.difference(i + 1);
    let grid = inst.grid();
    Ok(match inst.rule() {
        MassRule::CellFraction => gn.min_over_superlevel(&grid.bounds(), &gi, k_i),
        MassRule::Midpoint => (0..grid.len())
            .map(|p| grid.midpoint(p))
            .filter(|&x| gi.eval(x) >= k_i)
            .map(|x| gn.eval(x))
            .fold(f64::INFINITY, f64::min),
    })
}

/// `μ(X_≥(y_{i+1}, k_max(y_i, k_i)) \ X_≥(y_i, k_i))`.
pub fn d_min(inst: &Instance, i: usize, k_i: f64) -> Result<f64> {
    let km = k_max(inst, i, k_i)?;
    if km == f64::INFINITY {
        return Ok(0.0);
    }
    let gi = inst.difference(i);
    let gn = inst.difference(i + 1);
    let value = match inst.rule() {
        MassRule::CellFraction => {
            let d = inst.density();
            d.superlevel_mass(&gn, km) - d.superlevel_mass(&gi, k_i)
        }
        MassRule::Midpoint => {
            let grid = inst.grid();
            let w = inst.density().weights();
            (0..grid.len())
                .filter(|&p| {
                    let x = grid.midpoint(p);
                    gn.eval(x) >= km && gi.eval(x) < k_i
                })
                .map(|p| w[p])
                .sum()
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Sampled supremum of `D_min(y_i, ·)`; a lower estimate of the true sup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupEstimate {
    pub value: f64,
    pub argmax: f64,
    pub samples: usize,
}

/// Levels at `samples` interior quantiles of `g_i` under the density.
pub fn quantile_levels(inst: &Instance, i: usize, samples: usize) -> Vec<f64> {
    let g = inst.difference(i);
    let grid = inst.grid();
    let w = inst.density().weights();
    let mut vals: Vec<(f64, f64)> = (0..grid.len()).map(|p| (g.eval(grid.midpoint(p)), w[p])).collect();
    vals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = w.iter().sum();
    let mut out = Vec::with_capacity(samples);
    let mut acc = 0.0;
    let mut idx = 0;
    for s in 0..samples {
        let q = total * (s as f64 + 0.5) / samples as f64;
        while idx + 1 < vals.len() && acc + vals[idx].1 < q {
            acc += vals[idx].1;
            idx += 1;
        }
        out.push(vals[idx].0);
    }
    out.dedup();
    out
}

pub const DEFAULT_SUP_SAMPLES: usize = 256;

pub fn sup_d_min(inst: &Instance, i: usize, samples: usize) -> Result<SupEstimate> {
    let mut best = SupEstimate { value: 0.0, argmax: f64::NAN, samples };
    for k in quantile_levels(inst, i, samples) {
        let d = d_min(inst, i, k)?;
        if d > best.value {
            best.value = d;
            best.argmax = k;
        }
    }
    Ok(best)
}

/// Closed-form bound `½(s_{i+1,i+2} − s_{i,i+1})` on `sup_k D_min(y_i, k)` for
/// the bilinear cost under the uniform measure on the unit square, where
/// `s_{a,b}` is the secant slope of the profile between targets `a` and `b`.
pub fn analytic_sup_bound_bilinear(inst: &Instance, i: usize) -> Result<f64> {
    let CostSpec::Bilinear { profile } = inst.cost() else {
        return Err(Error::UnsupportedCost("closed-form bound needs the bilinear cost"));
    };
    let n = inst.n();
    if n < 3 || i + 2 >= n {
        return Err(Error::IndexOutOfRange { index: i, lo: 0, hi: n.saturating_sub(3) });
    }
    let t: Vec<f64> = inst.targets().points()[i..i + 3].iter().map(|p| p.t).collect();
    let slope = |a: usize, b: usize| (profile.eval(t[b]) - profile.eval(t[a])) / (t[b] - t[a]);
    Ok((0.5 * (slope(1, 2) - slope(0, 1))).max(0.0))
}

/// Target distance used by the Lipschitz constant.
fn target_distance(inst: &Instance, j: usize, k: usize) -> f64 {
    inst.cost().target_distance(inst.targets(), j, k)
}

/// `M_c = max |c(x, y_j) − c(x, y_k)| / |y_j − y_k|` over grid midpoints and
/// target pairs. The numerator is affine in `x`, so its maximum over the grid
/// is attained at one of the four corner midpoints.
pub fn lipschitz_mc(inst: &Instance) -> f64 {
    let grid = inst.grid();
    let m = grid.resolution();
    let corners = [
        [grid.x_mid(0), grid.y_mid(0)],
        [grid.x_mid(m - 1), grid.y_mid(0)],
        [grid.x_mid(0), grid.y_mid(m - 1)],
        [grid.x_mid(m - 1), grid.y_mid(m - 1)],
    ];
    let scores = inst.scores();
    let mut best: f64 = 0.0;
    for j in 0..inst.n() {
        for k in j + 1..inst.n() {
            let dist = target_distance(inst, j, k);
            if dist == 0.0 {
                continue;
            }
            let diff = scores[k].sub(&scores[j]);
            for x in corners {
                best = best.max(diff.eval(x).abs() / dist);
            }
        }
    }
    best
}

/// Sandwich `lower_i ≤ ν_i ≤ upper_i` for the entropic problem:
/// `lower_i = e^{−M d_i} / Σ_p e^{M d_p}`, `upper_i = e^{M d_i} / Σ_p e^{−M d_p}`
/// with `d_i = |y_i − y_1|` and `M = M_c`.
pub fn entropy_weight_bounds(inst: &Instance, mc: f64) -> Vec<(f64, f64)> {
    let d: Vec<f64> = (0..inst.n()).map(|i| mc * target_distance(inst, i, 0)).collect();
    let dmax = d.iter().cloned().fold(0.0, f64::max);
    // Scale numerators and denominators by e^{−dmax} to avoid overflow.
    let s_plus: f64 = d.iter().map(|&x| (x - dmax).exp()).sum();
    let s_minus: f64 = d.iter().map(|&x| (-x).exp()).sum();
    d.iter()
        .map(|&x| {
            let lower = (-x - dmax).exp() / s_plus;
            let upper = (x.exp() / s_minus).min(1.0);
            (lower, upper)
        })
        .collect()
}

/// The coarser lower bound `e^{−2 t} / N` in the target parameter `t`.
pub fn coarse_lower_bound(t: f64, n: usize) -> f64 {
    (-2.0 * t).exp() / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateRecord {
    /// 0-based `i` of the pair `(g_i, g_{i+1})`; its weight index is `i + 1`.
    pub index: usize,
    pub sup_d_min: f64,
    /// True when the sup is a sample maximum rather than a closed-form bound.
    pub sampled: bool,
    pub lower_bound: f64,
    pub coarse_bound: f64,
    pub margin: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestCertificate {
    pub mc: f64,
    pub records: Vec<CertificateRecord>,
    pub guaranteed_nested: bool,
}

impl NestCertificate {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "sup_d_min", "lower_bound", "margin", "verdict", "sampled"])?;
        for r in &self.records {
            w.write_record([
                (r.index + 1).to_string(),
                format!("{:.10e}", r.sup_d_min),
                format!("{:.10e}", r.lower_bound),
                format!("{:.10e}", r.margin),
                if r.verdict { "nested" } else { "not_certified" }.to_string(),
                r.sampled.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn closed_form_applies(inst: &Instance) -> bool {
    match inst.cost() {
        CostSpec::Bilinear { profile } => {
            profile.is_known_convex_increasing()
                && matches!(inst.density().kind(), DensityKind::Uniform)
                && inst.grid().bounds() == Rect::UNIT
        }
        CostSpec::SquaredDistance => false,
    }
}

/// Sufficient condition for nestedness of the entropic congestion solution:
/// every `sup_k D_min(y_i, k)` must lie strictly below the lower bound on `ν_{i+1}`.
pub fn certify_nested_apriori(inst: &Instance) -> Result<NestCertificate> {
    let n = inst.n();
    let mc = lipschitz_mc(inst);
    let bounds = entropy_weight_bounds(inst, mc);
    let analytic = closed_form_applies(inst);
    let mut records = Vec::new();
    for i in 0..n.saturating_sub(2) {
        let (sup, sampled) = if analytic {
            (analytic_sup_bound_bilinear(inst, i)?, false)
        } else {
            (sup_d_min(inst, i, DEFAULT_SUP_SAMPLES)?.value, true)
        };
        let lower = bounds[i + 1].0;
        let margin = lower - sup;
        records.push(CertificateRecord {
            index: i,
            sup_d_min: sup,
            sampled,
            lower_bound: lower,
            coarse_bound: coarse_lower_bound(inst.targets().points()[i + 1].t, n),
            margin,
            verdict: margin > 0.0,
        });
    }
    let guaranteed_nested = records.iter().all(|r| r.verdict);
    Ok(NestCertificate { mc, records, guaranteed_nested })
}
