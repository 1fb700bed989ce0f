//! Shared property checks, driven by proptest from `properties.rs` and by a
//! fixed-seed runner from the acceptance suite.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use nestot::congestion::{c_search_bounds, nested_bisection, newton_damped, weight_bounds, NestedOptions, NewtonOptions};
use nestot::geometry::{build_density, CostSpec, CurveFamily, DensityKind, GridSpec, TargetSet};
use nestot::hedonic::{hedonic_residual, HedonicProblem};
use nestot::laguerre::{cell_masses, tessellate, Instance, Potentials};
use nestot::nest::superlevel_mass;
use nestot::numerics::{fd_jacobian, LinearStepConfig};
use nestot::report::SolveReport;

pub const CASES: u32 = 24;

pub type Check = Result<(), TestCaseError>;

pub fn family(i: usize) -> CurveFamily {
    match i % 5 {
        0 => CurveFamily::Line,
        1 => CurveFamily::ScaledParabola,
        2 => CurveFamily::QuarterCircle,
        3 => CurveFamily::Parabola,
        _ => CurveFamily::Power(1.5),
    }
}

fn kind(product: bool) -> DensityKind {
    if product {
        DensityKind::ProductXY
    } else {
        DensityKind::Uniform
    }
}

pub fn instance(f: usize, n: usize, product: bool, m: usize) -> Instance {
    let grid = GridSpec::unit_square(m).unwrap();
    Instance::new(
        build_density(grid, kind(product)).unwrap(),
        CostSpec::SquaredDistance,
        TargetSet::on_curve(family(f), n).unwrap(),
    )
    .unwrap()
}

/// `(curve family, N, product measure?)`.
pub fn config() -> impl Strategy<Value = (usize, usize, bool)> {
    (0usize..5, 2usize..8, any::<bool>())
}

/// Potential vectors long enough for any `N` drawn by [`config`].
pub fn potentials() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.5f64..0.5, 8)
}

/// Any successful solve: damped Newton first, nested bisection otherwise.
pub fn solved(inst: &Instance) -> Option<SolveReport> {
    let r = newton_damped(inst, &vec![0.0; inst.n()], &NewtonOptions::default()).ok()?;
    if r.is_success() {
        return Some(r);
    }
    let r = nested_bisection(inst, (-5.0, 0.0), &NestedOptions::default()).ok()?;
    r.is_success().then_some(r)
}

pub fn labels_shift_invariant((f, n, product): (usize, usize, bool), seed: &[f64], delta: f64) -> Check {
    let inst = instance(f, n, product, 40);
    let p = Potentials::new(seed[..n].to_vec());
    let a = tessellate(&inst, &p).unwrap();
    let b = tessellate(&inst, &p.shifted(delta)).unwrap();
    let differing = a.labels.iter().zip(&b.labels).filter(|(x, y)| x != y).count();
    prop_assert!(differing == 0, "{differing} labels changed");
    for (x, y) in a.masses.iter().zip(&b.masses) {
        prop_assert!((x - y).abs() < 1e-12);
    }
    Ok(())
}

pub fn masses_partition_unity((f, n, product): (usize, usize, bool), seed: &[f64]) -> Check {
    let inst = instance(f, n, product, 40);
    let m = cell_masses(&inst, &seed[..n]).unwrap();
    prop_assert!(m.iter().all(|&x| x >= 0.0));
    prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    Ok(())
}

pub fn cell_grows_with_potential((f, n, product): (usize, usize, bool), seed: &[f64], i: usize, bump: f64) -> Check {
    let inst = instance(f, n, product, 40);
    let i = i % n;
    let v = seed[..n].to_vec();
    let mut w = v.clone();
    w[i] += bump;
    let (a, b) = (cell_masses(&inst, &v).unwrap(), cell_masses(&inst, &w).unwrap());
    prop_assert!(b[i] >= a[i] - 1e-14);
    for j in (0..n).filter(|&j| j != i) {
        prop_assert!(b[j] <= a[j] + 1e-14);
    }
    Ok(())
}

pub fn superlevel_nonincreasing((f, n, product): (usize, usize, bool), k: f64, dk: f64) -> Check {
    let inst = instance(f, n, product, 40);
    for i in 0..n - 1 {
        prop_assert!(superlevel_mass(&inst, i, k + dk) <= superlevel_mass(&inst, i, k) + 1e-15);
    }
    Ok(())
}

/// Weight sandwich and `C` bracket at a solved configuration.
pub fn sandwich_and_c_bounds((f, n, product): (usize, usize, bool)) -> Check {
    let inst = instance(f, n, product, 48);
    let Some(r) = solved(&inst) else {
        return Err(TestCaseError::reject("no solver succeeded"));
    };
    let bounds = weight_bounds(&inst);
    for (nu, (lo, hi)) in r.masses.iter().zip(&bounds) {
        prop_assert!(*lo - 1e-5 <= *nu && *nu <= *hi + 1e-5, "{nu} not in [{lo}, {hi}]");
    }
    let (lo, hi) = c_search_bounds(&inst).unwrap();
    let c = r.c().unwrap();
    prop_assert!(lo - 1e-5 <= c && c <= hi + 1e-5, "C = {c} outside [{lo}, {hi}]");
    Ok(())
}

/// `J·1 = 0` for both the congestion masses and the hedonic residual.
pub fn jacobian_kernel((f, n, product): (usize, usize, bool), seed: &[f64]) -> Check {
    let inst = instance(f, n, product, 40);
    let v = &seed[..n];
    let cfg = LinearStepConfig::default();
    let j = fd_jacobian(|x| cell_masses(&inst, x), v, &cfg).unwrap();
    let scale = j.abs().max().max(1.0);
    for row in j.row_iter() {
        prop_assert!(row.sum().abs() <= 1e-6 * scale, "row sum {}", row.sum());
    }
    let grid = GridSpec::unit_square(40).unwrap();
    let p = HedonicProblem::new(
        build_density(grid, DensityKind::Uniform).unwrap(),
        build_density(grid, DensityKind::ProductXY).unwrap(),
        CostSpec::SquaredDistance,
        TargetSet::on_curve(family(f), n).unwrap(),
        0.0,
    )
    .unwrap();
    let j = fd_jacobian(|x| hedonic_residual(&p, x), v, &cfg).unwrap();
    let scale = j.abs().max().max(1.0);
    for row in j.row_iter() {
        prop_assert!(row.sum().abs() <= 1e-6 * scale, "hedonic row sum {}", row.sum());
    }
    Ok(())
}
