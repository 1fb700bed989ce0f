//! Laguerre tessellations on the quadrature grid.
//!
//! Labels are 0-based internally (`0..N`); CSV output shifts them to `1..=N`.
//! Every grid cell is labelled by the argmin at its midpoint. Under
//! [`MassRule::CellFraction`] the cell's weight is split between its two best
//! labels by the exact area fraction on each side of their (straight) common
//! boundary, which makes the cell masses continuous in the potentials.

use crate::error::{Error, Result};
use crate::geometry::{
    trapezoid_cdf, trapezoid_positive_part, AffineField, CostSpec, DensityField, GridSpec,
    MassRule, TargetSet,
};

/// Dual weights `v` plus the optional constant `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potentials {
    pub v: Vec<f64>,
    pub c: Option<f64>,
}

impl Potentials {
    pub fn zeros(n: usize) -> Self {
        Self { v: vec![0.0; n], c: None }
    }

    pub fn new(v: Vec<f64>) -> Self {
        Self { v, c: None }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = Some(c);
        self
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Same tessellation, gauge fixed by `v[0] = 0` (`C` shifted alongside).
    pub fn normalized(&self) -> Self {
        let shift = self.v.first().copied().unwrap_or(0.0);
        Self {
            v: self.v.iter().map(|x| x - shift).collect(),
            c: self.c.map(|c| c - shift),
        }
    }

    pub fn shifted(&self, delta: f64) -> Self {
        Self { v: self.v.iter().map(|x| x + delta).collect(), c: self.c.map(|c| c + delta) }
    }
}

/// A density, a cost and targets, with the affine target scores cached.
#[derive(Debug, Clone)]
pub struct Instance {
    density: DensityField,
    cost: CostSpec,
    targets: TargetSet,
    scores: Vec<AffineField>,
}

impl Instance {
    pub fn new(density: DensityField, cost: CostSpec, targets: TargetSet) -> Result<Self> {
        cost.validate(&targets)?;
        let scores = cost.score_fields(&targets);
        Ok(Self { density, cost, targets, scores })
    }

    /// Same cost and targets over another density on the identical grid.
    pub fn with_density(&self, density: DensityField) -> Result<Self> {
        if density.grid() != self.density.grid() {
            return Err(Error::InvalidGrid("densities must share one grid".into()));
        }
        Ok(Self { density, ..self.clone() })
    }

    pub fn with_rule(&self, rule: MassRule) -> Self {
        Self { density: self.density.clone().with_rule(rule), ..self.clone() }
    }

    pub fn n(&self) -> usize {
        self.targets.len()
    }

    pub fn grid(&self) -> &GridSpec {
        self.density.grid()
    }

    pub fn density(&self) -> &DensityField {
        &self.density
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn targets(&self) -> &TargetSet {
        &self.targets
    }

    pub fn rule(&self) -> MassRule {
        self.density.rule()
    }

    /// Target-dependent affine parts `l_i` of the cost.
    pub fn scores(&self) -> &[AffineField] {
        &self.scores
    }

    /// `g_i = c(·, y_{i+1}) − c(·, y_i)` as an exact affine function (0-based `i`).
    pub fn difference(&self, i: usize) -> AffineField {
        self.scores[i + 1].sub(&self.scores[i])
    }

    pub fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::LengthMismatch { expected: self.n(), found: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("potentials"));
        }
        Ok(())
    }
}

/// Per-cell labels, cell masses and the potentials that produced them.
#[derive(Debug, Clone)]
pub struct Tessellation {
    pub labels: Vec<u32>,
    pub masses: Vec<f64>,
    pub potentials: Potentials,
    pub grid: GridSpec,
}

const NO_LABEL: u32 = u32::MAX;

/// Best and runner-up label of one cell with their scores `l_i(x) − v_i`.
#[derive(Debug, Clone, Copy)]
struct Top2 {
    best: u32,
    s_best: f64,
    second: u32,
    s_second: f64,
}

impl Top2 {
    const EMPTY: Top2 =
        Top2 { best: NO_LABEL, s_best: f64::INFINITY, second: NO_LABEL, s_second: f64::INFINITY };

    /// Offer a label; labels must be offered in increasing index order so that
    /// strict comparison breaks ties toward the smaller index.
    #[inline]
    fn offer(&mut self, label: u32, s: f64) {
        if s < self.s_best {
            self.second = self.best;
            self.s_second = self.s_best;
            self.best = label;
            self.s_best = s;
        } else if s < self.s_second {
            self.second = label;
            self.s_second = s;
        }
    }
}

/// Share of a cell's weight going to its best label.
#[inline]
fn best_share(scores: &[AffineField], t: &Top2, dx: f64, dy: f64) -> f64 {
    if t.second == NO_LABEL {
        return 1.0;
    }
    let gb = &scores[t.best as usize];
    let gs = &scores[t.second as usize];
    let (a, b) = AffineField { gx: gs.gx - gb.gx, gy: gs.gy - gb.gy, c: 0.0 }.cell_reach(dx, dy);
    trapezoid_cdf(t.s_second - t.s_best, a, b)
}

/// Walk every grid cell with its top-two labels under potentials `v`.
fn for_each_cell(inst: &Instance, v: &[f64], mut visit: impl FnMut(usize, f64, &Top2)) {
    let grid = inst.grid();
    let m = grid.resolution();
    let scores = inst.scores();
    let n = scores.len();
    let mut row_c = vec![0.0; n];
    let xs: Vec<f64> = (0..m).map(|c| grid.x_mid(c)).collect();
    for row in 0..m {
        let y = grid.y_mid(row);
        for i in 0..n {
            row_c[i] = scores[i].gy * y + scores[i].c - v[i];
        }
        for (col, &x) in xs.iter().enumerate() {
            let mut t = Top2::EMPTY;
            for i in 0..n {
                t.offer(i as u32, scores[i].gx * x + row_c[i]);
            }
            visit(row * m + col, x, &t);
        }
    }
}

/// Cell masses `ν_i = μ(Lag_i(v))` without materializing labels.
pub fn cell_masses(inst: &Instance, v: &[f64]) -> Result<Vec<f64>> {
    inst.check_len(v)?;
    let mut masses = vec![0.0; inst.n()];
    let (dx, dy) = inst.grid().cell_size();
    let w = inst.density().weights();
    let rule = inst.rule();
    let scores = inst.scores();
    for_each_cell(inst, v, |p, _, t| {
        let wp = w[p];
        match rule {
            MassRule::Midpoint => masses[t.best as usize] += wp,
            MassRule::CellFraction => {
                let f = best_share(scores, t, dx, dy);
                masses[t.best as usize] += wp * f;
                if f < 1.0 {
                    masses[t.second as usize] += wp * (1.0 - f);
                }
            }
        }
    });
    Ok(masses)
}

/// Laguerre tessellation of the grid for potentials `v`.
pub fn tessellate(inst: &Instance, potentials: &Potentials) -> Result<Tessellation> {
    inst.check_len(&potentials.v)?;
    let mut labels = vec![0u32; inst.grid().len()];
    let mut masses = vec![0.0; inst.n()];
    let (dx, dy) = inst.grid().cell_size();
    let w = inst.density().weights();
    let rule = inst.rule();
    let scores = inst.scores();
    for_each_cell(inst, &potentials.v, |p, _, t| {
        labels[p] = t.best;
        let wp = w[p];
        match rule {
            MassRule::Midpoint => masses[t.best as usize] += wp,
            MassRule::CellFraction => {
                let f = best_share(scores, t, dx, dy);
                masses[t.best as usize] += wp * f;
                if f < 1.0 {
                    masses[t.second as usize] += wp * (1.0 - f);
                }
            }
        }
    });
    Ok(Tessellation { labels, masses, potentials: potentials.clone(), grid: *inst.grid() })
}

/// Whether adding `delta` to every potential leaves all labels unchanged.
pub fn shift_invariance_check(inst: &Instance, potentials: &Potentials, delta: f64) -> Result<bool> {
    let a = tessellate(inst, potentials)?;
    let b = tessellate(inst, &potentials.shifted(delta))?;
    Ok(a.labels == b.labels)
}

/// Index minimizing `c(x, y_i) − v_i`, smallest index on ties.
pub fn argmin_label(inst: &Instance, v: &[f64], x: [f64; 2]) -> usize {
    let mut best = 0;
    let mut s_best = f64::INFINITY;
    for (i, g) in inst.scores().iter().enumerate() {
        let s = g.eval(x) - v[i];
        if s < s_best {
            best = i;
            s_best = s;
        }
    }
    best
}

/// `u(x) = c(x, y_i) − v_i` on the Laguerre cell containing `x`.
pub fn dual_u(inst: &Instance, tess: &Tessellation, x: [f64; 2]) -> f64 {
    let v = &tess.potentials.v;
    let i = argmin_label(inst, v, x);
    inst.cost().eval(x, inst.targets(), i) - v[i]
}

/// Cell average of the target-independent cost term.
pub(crate) fn common_cell_mean(cost: &CostSpec, x: [f64; 2], dx: f64, dy: f64) -> f64 {
    match cost {
        CostSpec::SquaredDistance => cost.common(x) + (dx * dx + dy * dy) / 12.0,
        CostSpec::Bilinear { .. } => cost.common(x),
    }
}

/// `∫ c(x, T(x)) dμ` for the map sending each Laguerre cell to its target.
pub fn transport_cost(inst: &Instance, tess: &Tessellation) -> Result<f64> {
    let v = &tess.potentials.v;
    inst.check_len(v)?;
    let grid = inst.grid();
    let (dx, dy) = grid.cell_size();
    let w = inst.density().weights();
    let scores = inst.scores();
    let cost = inst.cost();
    let rule = inst.rule();
    let m = grid.resolution();
    let mut total = 0.0;
    for_each_cell(inst, v, |p, x, t| {
        let y = grid.y_mid(p / m);
        let mid = [x, y];
        let b = t.best as usize;
        let value = match rule {
            MassRule::Midpoint => cost.common(mid) + scores[b].eval(mid),
            MassRule::CellFraction => {
                let q = common_cell_mean(cost, mid, dx, dy);
                if t.second == NO_LABEL {
                    q + scores[b].eval(mid)
                } else {
                    // l_label = l_s − (l_s − l_b)·1{b wins}, and l_s − l_b = D + v_s − v_b
                    // with D ≥ 0 exactly where b wins.
                    let s = t.second as usize;
                    let gs = &scores[s];
                    let gb = &scores[b];
                    let (ra, rb) = AffineField { gx: gs.gx - gb.gx, gy: gs.gy - gb.gy, c: 0.0 }
                        .cell_reach(dx, dy);
                    let d = t.s_second - t.s_best;
                    q + gs.eval(mid)
                        - trapezoid_positive_part(d, ra, rb)
                        - (v[s] - v[b]) * trapezoid_cdf(d, ra, rb)
                }
            }
        };
        total += w[p] * value;
    });
    Ok(total)
}

/// Outcome of the adjacency nestedness test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedVerdict {
    pub nested: bool,
    /// 4-adjacent cell pairs whose labels differ by two or more.
    pub violations: Vec<(usize, usize)>,
}

/// Nested iff every 4-adjacent pair of distinct labels differs by exactly one.
pub fn check_nested(tess: &Tessellation) -> NestedVerdict {
    check_labels_nested(&tess.labels, tess.grid.resolution())
}

pub fn check_labels_nested(labels: &[u32], m: usize) -> NestedVerdict {
    let mut violations = Vec::new();
    let far = |a: u32, b: u32| a.abs_diff(b) >= 2;
    for row in 0..m {
        for col in 0..m {
            let p = row * m + col;
            if col + 1 < m && far(labels[p], labels[p + 1]) {
                violations.push((p, p + 1));
            }
            if row + 1 < m && far(labels[p], labels[p + m]) {
                violations.push((p, p + m));
            }
        }
    }
    NestedVerdict { nested: violations.is_empty(), violations }
}

/// Tessellation built one label at a time, for the sequential solvers.
///
/// After labels `0..=last` are committed, each cell holds its best and
/// runner-up among them. A trial adds label `last + 1` at a candidate
/// potential and returns the mass of label `last`, touching only the cells
/// where `last` is among the top two (a new label can only push it down).
#[derive(Debug, Clone)]
pub struct IncrementalTessellation<'a> {
    inst: &'a Instance,
    v: Vec<f64>,
    top: Vec<Top2>,
    touched: Vec<u32>,
    /// `l_next(x_p)` for each touched cell, aligned with `touched`.
    next_base: Vec<f64>,
}

impl<'a> IncrementalTessellation<'a> {
    /// Start with label 0 at potential `v0`.
    pub fn new(inst: &'a Instance, v0: f64) -> Self {
        let grid = inst.grid();
        let g = &inst.scores()[0];
        let top = (0..grid.len())
            .map(|p| Top2 { best: 0, s_best: g.eval(grid.midpoint(p)) - v0, ..Top2::EMPTY })
            .collect();
        let mut s = Self { inst, v: vec![v0], top, touched: Vec::new(), next_base: Vec::new() };
        s.prepare_next();
        s
    }

    /// Committed potentials.
    pub fn potentials(&self) -> &[f64] {
        &self.v
    }

    /// Index of the most recently committed label.
    pub fn last(&self) -> usize {
        self.v.len() - 1
    }

    fn prepare_next(&mut self) {
        self.touched.clear();
        self.next_base.clear();
        let next = self.v.len();
        if next >= self.inst.n() {
            return;
        }
        let last = (next - 1) as u32;
        let grid = self.inst.grid();
        let g = &self.inst.scores()[next];
        for (p, t) in self.top.iter().enumerate() {
            if t.best == last || t.second == last {
                self.touched.push(p as u32);
                self.next_base.push(g.eval(grid.midpoint(p)));
            }
        }
    }

    /// Interval of potentials for the next label outside which the trial mass
    /// is constant: at the low end the new label wins nowhere against `last`,
    /// at the high end everywhere.
    pub fn next_bracket(&self) -> (f64, f64) {
        let j = self.last();
        let g = self.inst.difference(j);
        let (lo, hi) = g.range_over(&self.inst.grid().bounds());
        let pad = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        (lo + self.v[j] - pad, hi + self.v[j] + pad)
    }

    /// Mass of the last committed label if the next label enters at potential `t`.
    pub fn trial_mass(&self, t: f64) -> f64 {
        let inst = self.inst;
        let last = self.last() as u32;
        let next = last + 1;
        let w = inst.density().weights();
        let scores = inst.scores();
        let (dx, dy) = inst.grid().cell_size();
        let rule = inst.rule();
        let mut mass = 0.0;
        for (k, &p) in self.touched.iter().enumerate() {
            let mut top = self.top[p as usize];
            top.offer(next, self.next_base[k] - t);
            let wp = w[p as usize];
            match rule {
                MassRule::Midpoint => {
                    if top.best == last {
                        mass += wp;
                    }
                }
                MassRule::CellFraction => {
                    if top.best == last {
                        mass += wp * best_share(scores, &top, dx, dy);
                    } else if top.second == last {
                        mass += wp * (1.0 - best_share(scores, &top, dx, dy));
                    }
                }
            }
        }
        mass
    }

    /// Fix the next label at potential `t`; returns the masses of all committed labels.
    pub fn commit(&mut self, t: f64) -> Vec<f64> {
        let inst = self.inst;
        let next = self.v.len();
        assert!(next < inst.n(), "all labels already committed");
        let grid = inst.grid();
        let g = &inst.scores()[next];
        let w = inst.density().weights();
        let scores = inst.scores();
        let (dx, dy) = grid.cell_size();
        let rule = inst.rule();
        let mut masses = vec![0.0; next + 1];
        for (p, top) in self.top.iter_mut().enumerate() {
            top.offer(next as u32, g.eval(grid.midpoint(p)) - t);
            let wp = w[p];
            match rule {
                MassRule::Midpoint => masses[top.best as usize] += wp,
                MassRule::CellFraction => {
                    let f = best_share(scores, top, dx, dy);
                    masses[top.best as usize] += wp * f;
                    if f < 1.0 {
                        masses[top.second as usize] += wp * (1.0 - f);
                    }
                }
            }
        }
        self.v.push(t);
        self.prepare_next();
        masses
    }

    /// Labels of the committed partial tessellation.
    pub fn labels(&self) -> Vec<u32> {
        self.top.iter().map(|t| t.best).collect()
    }
}
