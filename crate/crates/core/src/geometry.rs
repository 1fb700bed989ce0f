//! Source domain, quadrature grid, densities, cost families and target curves.
//!
//! Every shipped cost has the form `c(x, y_i) = q(x) + l_i(x)` where `q` is
//! shared by all targets and `l_i` is affine in `x`. Cost differences, and so
//! every Laguerre boundary and every level set used by the nestedness theory,
//! are therefore straight lines. The mass routines exploit this: a density is
//! held as per-cell weights (midpoint rule), and under [`MassRule::CellFraction`]
//! each grid cell contributes its weight times the exact fraction of the cell
//! lying on the requested side of a line.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        [
            [self.x0, self.y0],
            [self.x1, self.y0],
            [self.x1, self.y1],
            [self.x0, self.y1],
        ]
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        x[0] >= self.x0 && x[0] <= self.x1 && x[1] >= self.y0 && x[1] <= self.y1
    }
}

/// Uniform `M × M` midpoint grid over a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    bounds: Rect,
    resolution: usize,
}

impl GridSpec {
    pub const MIN_RESOLUTION: usize = 8;
    pub const DEFAULT_RESOLUTION: usize = 512;

    pub fn new(bounds: Rect, resolution: usize) -> Result<Self> {
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "bounds must have positive width and height, got {bounds:?}"
            )));
        }
        if ![bounds.x0, bounds.x1, bounds.y0, bounds.y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if resolution < Self::MIN_RESOLUTION {
            return Err(Error::InvalidGrid(format!(
                "resolution must be at least {}, got {resolution}",
                Self::MIN_RESOLUTION
            )));
        }
        Ok(Self { bounds, resolution })
    }

    pub fn unit_square(resolution: usize) -> Result<Self> {
        Self::new(Rect::UNIT, resolution)
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Number of cells, `M²`.
    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell widths `(dx, dy)`.
    pub fn cell_size(&self) -> (f64, f64) {
        let m = self.resolution as f64;
        (self.bounds.width() / m, self.bounds.height() / m)
    }

    pub fn cell_area(&self) -> f64 {
        let (dx, dy) = self.cell_size();
        dx * dy
    }

    /// Midpoint x-coordinate of column `col`.
    #[inline]
    pub fn x_mid(&self, col: usize) -> f64 {
        self.bounds.x0 + (col as f64 + 0.5) * self.bounds.width() / self.resolution as f64
    }

    /// Midpoint y-coordinate of row `row`.
    #[inline]
    pub fn y_mid(&self, row: usize) -> f64 {
        self.bounds.y0 + (row as f64 + 0.5) * self.bounds.height() / self.resolution as f64
    }

    /// Midpoint of flat cell index `p = row * M + col`.
    #[inline]
    pub fn midpoint(&self, p: usize) -> [f64; 2] {
        let row = p / self.resolution;
        let col = p % self.resolution;
        [self.x_mid(col), self.y_mid(row)]
    }

    /// Flat index of the cell containing `x`, if inside the bounds.
    pub fn cell_of(&self, x: [f64; 2]) -> Option<usize> {
        if !self.bounds.contains(x) {
            return None;
        }
        let m = self.resolution;
        let (dx, dy) = self.cell_size();
        let col = (((x[0] - self.bounds.x0) / dx) as usize).min(m - 1);
        let row = (((x[1] - self.bounds.y0) / dy) as usize).min(m - 1);
        Some(row * m + col)
    }
}

/// How the measure of a set bounded by straight lines is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassRule {
    /// A cell counts fully or not at all, decided at its midpoint.
    Midpoint,
    /// A cell contributes the exact area fraction on the requested side of the
    /// line; masses are continuous and piecewise smooth in the potentials.
    #[default]
    CellFraction,
}

pub type DensityFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DensityKind {
    Uniform,
    /// `4 x1 x2` (a probability density on the unit square).
    ProductXY,
    Custom(DensityFn),
}

impl fmt::Debug for DensityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensityKind::Uniform => f.write_str("Uniform"),
            DensityKind::ProductXY => f.write_str("ProductXY"),
            DensityKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl DensityKind {
    pub fn name(&self) -> &'static str {
        match self {
            DensityKind::Uniform => "uniform",
            DensityKind::ProductXY => "product_xy",
            DensityKind::Custom(_) => "custom",
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            DensityKind::Uniform => 1.0,
            DensityKind::ProductXY => 4.0 * x * y,
            DensityKind::Custom(f) => f(x, y),
        }
    }
}

/// Probability measure on the grid as per-cell masses.
#[derive(Debug, Clone)]
pub struct DensityField {
    grid: GridSpec,
    weights: Vec<f64>,
    kind: DensityKind,
    rule: MassRule,
}

/// Midpoint-rule cell integrals of the density, renormalized to total mass one.
pub fn build_density(grid: GridSpec, kind: DensityKind) -> Result<DensityField> {
    let m = grid.resolution();
    let area = grid.cell_area();
    let mut weights = Vec::with_capacity(grid.len());
    for row in 0..m {
        let y = grid.y_mid(row);
        for col in 0..m {
            let x = grid.x_mid(col);
            let value = kind.eval(x, y);
            if !value.is_finite() {
                return Err(Error::NonFinite("density value"));
            }
            if value < 0.0 {
                return Err(Error::NegativeDensity { x, y, value });
            }
            weights.push(value * area);
        }
    }
    let total = neumaier_sum(weights.iter().copied());
    if total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(DensityField { grid, weights, kind, rule: MassRule::default() })
}

impl DensityField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn rule(&self) -> MassRule {
        self.rule
    }

    pub fn with_rule(mut self, rule: MassRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, DensityKind::Uniform)
    }

    pub fn total(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied())
    }

    /// Masked sum of cell weights.
    pub fn mask_mass(&self, mask: &Mask) -> f64 {
        debug_assert_eq!(mask.cells.len(), self.weights.len());
        self.weights
            .iter()
            .zip(&mask.cells)
            .filter(|(_, &inside)| inside)
            .map(|(w, _)| *w)
            .sum()
    }

    /// `μ({x : field(x) ≥ k})` under this density's mass rule.
    pub fn superlevel_mass(&self, field: &AffineField, k: f64) -> f64 {
        if k == f64::NEG_INFINITY {
            return 1.0;
        }
        if k == f64::INFINITY {
            return 0.0;
        }
        let grid = &self.grid;
        let m = grid.resolution();
        let (dx, dy) = grid.cell_size();
        let (ax, ay) = ((field.gx * dx * 0.5).abs(), (field.gy * dy * 0.5).abs());
        let reach = ax + ay;
        let mut total = 0.0;
        for row in 0..m {
            let y = grid.y_mid(row);
            let base = field.gy * y + field.c - k;
            let offset = row * m;
            let mut acc = 0.0;
            for col in 0..m {
                let d = base + field.gx * grid.x_mid(col);
                let w = self.weights[offset + col];
                match self.rule {
                    MassRule::Midpoint => {
                        if d >= 0.0 {
                            acc += w;
                        }
                    }
                    MassRule::CellFraction => {
                        if d >= reach {
                            acc += w;
                        } else if d > -reach {
                            acc += w * trapezoid_cdf(d, ax, ay);
                        }
                    }
                }
            }
            total += acc;
        }
        total
    }
}

/// Compensated summation, used where a total must be reproducible to the last bits.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Fraction of a cell with half-extents `(a, b)` along the field's gradient
/// components (`a = |gx| dx / 2`, `b = |gy| dy / 2`) on which an affine
/// function with midpoint value `d` is nonnegative.
///
/// This is the CDF at `d` of the sum of two centred uniforms on `[-a, a]` and
/// `[-b, b]` (a trapezoid law). Zero gradient with `d == 0` counts as inside.
#[inline]
pub fn trapezoid_cdf(d: f64, a: f64, b: f64) -> f64 {
    let (a, b) = if a >= b { (a, b) } else { (b, a) };
    let reach = a + b;
    if d >= reach {
        return 1.0;
    }
    if d <= -reach {
        return 0.0;
    }
    if b <= a * 1e-14 {
        return (d + a) / (2.0 * a);
    }
    if d <= b - a {
        let t = d + reach;
        t * t / (8.0 * a * b)
    } else if d <= a - b {
        (d + a) / (2.0 * a)
    } else {
        let t = reach - d;
        1.0 - t * t / (8.0 * a * b)
    }
}

/// `E[(d + U)_+]` for the same trapezoid law `U` as [`trapezoid_cdf`]: the
/// cell-average of the positive part of an affine function whose midpoint
/// value is `d`. It is the antiderivative of `trapezoid_cdf` in `d`.
#[inline]
pub fn trapezoid_positive_part(d: f64, a: f64, b: f64) -> f64 {
    let (a, b) = if a >= b { (a, b) } else { (b, a) };
    let reach = a + b;
    if d >= reach {
        return d;
    }
    if d <= -reach {
        return 0.0;
    }
    if b <= a * 1e-14 {
        let t = d + a;
        return t * t / (4.0 * a);
    }
    if d <= b - a {
        let t = d + reach;
        t * t * t / (24.0 * a * b)
    } else if d <= a - b {
        b * b / (3.0 * a) + ((d + a) * (d + a) - b * b) / (4.0 * a)
    } else {
        let t = reach - d;
        d + t * t * t / (24.0 * a * b)
    }
}

/// `x ↦ gx·x1 + gy·x2 + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineField {
    pub gx: f64,
    pub gy: f64,
    pub c: f64,
}

impl AffineField {
    pub const ZERO: AffineField = AffineField { gx: 0.0, gy: 0.0, c: 0.0 };

    #[inline]
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.gx * x[0] + self.gy * x[1] + self.c
    }

    pub fn sub(&self, other: &AffineField) -> AffineField {
        AffineField { gx: self.gx - other.gx, gy: self.gy - other.gy, c: self.c - other.c }
    }

    pub fn shifted(&self, dc: f64) -> AffineField {
        AffineField { c: self.c + dc, ..*self }
    }

    /// Smallest and largest value over a rectangle (attained at corners).
    pub fn range_over(&self, rect: &Rect) -> (f64, f64) {
        rect.corners().iter().map(|&x| self.eval(x)).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), v| (lo.min(v), hi.max(v)),
        )
    }

    /// Half-extents `(|gx| dx / 2, |gy| dy / 2)` for a grid cell.
    #[inline]
    pub fn cell_reach(&self, dx: f64, dy: f64) -> (f64, f64) {
        ((self.gx * dx * 0.5).abs(), (self.gy * dy * 0.5).abs())
    }

    /// Minimum over `rect ∩ {constraint ≥ k}`; `+∞` when that set is empty.
    pub fn min_over_superlevel(&self, rect: &Rect, constraint: &AffineField, k: f64) -> f64 {
        clip_rect_halfplane(rect, constraint, k)
            .iter()
            .map(|&x| self.eval(x))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Vertices of `rect ∩ {field ≥ k}` (Sutherland–Hodgman against one half-plane).
pub fn clip_rect_halfplane(rect: &Rect, field: &AffineField, k: f64) -> Vec<[f64; 2]> {
    let corners = rect.corners();
    let mut out = Vec::with_capacity(5);
    for idx in 0..4 {
        let p = corners[idx];
        let q = corners[(idx + 1) % 4];
        let fp = field.eval(p) - k;
        let fq = field.eval(q) - k;
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// Scalar profile `F` of the bilinear cost `c(x, y) = -x1·y - x2·F(y)`.
#[derive(Clone)]
pub enum Profile {
    /// `F(y) = slope · y + intercept`.
    Linear { slope: f64, intercept: f64 },
    /// `F(y) = y² / divisor`.
    Quadratic { divisor: f64 },
    /// Any function; convexity is not known to the analysis routines.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Linear { slope, intercept } => {
                write!(f, "Linear {{ slope: {slope}, intercept: {intercept} }}")
            }
            Profile::Quadratic { divisor } => write!(f, "Quadratic {{ divisor: {divisor} }}"),
            Profile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Profile {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Profile::Linear { slope, intercept } => slope * y + intercept,
            Profile::Quadratic { divisor } => y * y / divisor,
            Profile::Custom(f) => f(y),
        }
    }

    /// Whether the profile is known to be convex and nondecreasing on `[0, ∞)`.
    pub fn is_known_convex_increasing(&self) -> bool {
        match self {
            Profile::Linear { slope, .. } => *slope >= 0.0,
            Profile::Quadratic { divisor } => *divisor > 0.0,
            Profile::Custom(_) => false,
        }
    }
}

/// Cost family `c(x, y_i)`.
#[derive(Debug, Clone)]
pub enum CostSpec {
    /// `|x - y_i|²` with `y_i` the planar embedding of the target.
    SquaredDistance,
    /// `-x1·y_i - x2·F(y_i)` with `y_i` the scalar target parameter.
    Bilinear { profile: Profile },
}

impl CostSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CostSpec::SquaredDistance => "squared_distance",
            CostSpec::Bilinear { .. } => "bilinear",
        }
    }

    /// The target-dependent affine part `l_i` with `c(x, y_i) = q(x) + l_i(x)`.
    pub fn score_field(&self, targets: &TargetSet, i: usize) -> AffineField {
        match self {
            CostSpec::SquaredDistance => {
                let y = targets.points[i].y;
                AffineField { gx: -2.0 * y[0], gy: -2.0 * y[1], c: y[0] * y[0] + y[1] * y[1] }
            }
            CostSpec::Bilinear { profile } => {
                let t = targets.points[i].t;
                AffineField { gx: -t, gy: -profile.eval(t), c: 0.0 }
            }
        }
    }

    pub fn score_fields(&self, targets: &TargetSet) -> Vec<AffineField> {
        (0..targets.len()).map(|i| self.score_field(targets, i)).collect()
    }

    /// The target-independent part `q(x)`.
    #[inline]
    pub fn common(&self, x: [f64; 2]) -> f64 {
        match self {
            CostSpec::SquaredDistance => x[0] * x[0] + x[1] * x[1],
            CostSpec::Bilinear { .. } => 0.0,
        }
    }

    pub fn eval(&self, x: [f64; 2], targets: &TargetSet, i: usize) -> f64 {
        self.common(x) + self.score_field(targets, i).eval(x)
    }

    /// Distance between two targets in the space the cost reads them from.
    pub fn target_distance(&self, targets: &TargetSet, j: usize, k: usize) -> f64 {
        match self {
            CostSpec::SquaredDistance => {
                let (a, b) = (targets.points[j].y, targets.points[k].y);
                (a[0] - b[0]).hypot(a[1] - b[1])
            }
            CostSpec::Bilinear { .. } => (targets.points[j].t - targets.points[k].t).abs(),
        }
    }

    /// Check the non-degeneracy hypothesis on consecutive targets: the
    /// x-gradient of `c(·, y_{i+1}) - c(·, y_i)` must not vanish.
    pub fn validate(&self, targets: &TargetSet) -> Result<()> {
        for i in 0..targets.len().saturating_sub(1) {
            let g = self.score_field(targets, i + 1).sub(&self.score_field(targets, i));
            if g.gx == 0.0 && g.gy == 0.0 {
                return Err(Error::InvalidTargets(format!(
                    "cost difference between targets {} and {} has zero gradient",
                    i + 1,
                    i + 2
                )));
            }
            if !(g.gx.is_finite() && g.gy.is_finite() && g.c.is_finite()) {
                return Err(Error::NonFinite("cost difference"));
            }
        }
        Ok(())
    }
}

/// Named target curves; the first four match the standard numerical examples.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveFamily {
    /// `(t, t)`, `t ∈ [1/10, 9/10]`.
    Line,
    /// `(t, (t/e)²)`, `t ∈ [0, 1]`.
    ScaledParabola,
    /// `(cos t, sin t)`, `t ∈ [π/8, 3π/8]`.
    QuarterCircle,
    /// `(t, t²)`, `t ∈ [1/(N+1), N/(N+1)]`.
    Parabola,
    /// `(t, t^p)`, `t ∈ [1/(N+1), N/(N+1)]`.
    Power(f64),
    /// `(t, F(t))` for a bilinear-cost profile, `t = i/N`.
    ProfileGraph,
    Explicit,
}

impl CurveFamily {
    pub fn parameter_interval(&self, n: usize) -> (f64, f64) {
        let nf = n as f64;
        match self {
            CurveFamily::Line => (0.1, 0.9),
            CurveFamily::ScaledParabola => (0.0, 1.0),
            CurveFamily::QuarterCircle => (PI / 8.0, 3.0 * PI / 8.0),
            CurveFamily::Parabola | CurveFamily::Power(_) => (1.0 / (nf + 1.0), nf / (nf + 1.0)),
            CurveFamily::ProfileGraph => (1.0 / nf, 1.0),
            CurveFamily::Explicit => (0.0, 1.0),
        }
    }

    fn embed(&self, t: f64) -> [f64; 2] {
        match self {
            CurveFamily::Line => [t, t],
            CurveFamily::ScaledParabola => [t, (t / E) * (t / E)],
            CurveFamily::QuarterCircle => [t.cos(), t.sin()],
            CurveFamily::Parabola => [t, t * t],
            CurveFamily::Power(p) => [t, t.powf(*p)],
            CurveFamily::ProfileGraph | CurveFamily::Explicit => [t, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    /// Scalar parameter along the curve.
    pub t: f64,
    /// Planar embedding.
    pub y: [f64; 2],
}

/// Ordered discrete targets `y_1 < … < y_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSet {
    points: Vec<Target>,
    family: CurveFamily,
}

impl TargetSet {
    /// `n` points placed equidistantly in parameter over the family's interval.
    pub fn on_curve(family: CurveFamily, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTargets("at least one target is required".into()));
        }
        if matches!(family, CurveFamily::Explicit | CurveFamily::ProfileGraph) {
            return Err(Error::InvalidTargets(
                "explicit and profile targets are built with TargetSet::explicit / ::profile_graph"
                    .into(),
            ));
        }
        let (a, b) = family.parameter_interval(n);
        let points = (0..n)
            .map(|i| {
                let t = if n == 1 { 0.5 * (a + b) } else { a + (b - a) * i as f64 / (n - 1) as f64 };
                Target { t, y: family.embed(t) }
            })
            .collect();
        Self::from_points(points, family)
    }

    /// `y_i = i / N` for `i = 1..N`, embedded as `(y_i, F(y_i))`.
    pub fn profile_graph(profile: &Profile, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTargets("at least one target is required".into()));
        }
        let points = (1..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                Target { t, y: [t, profile.eval(t)] }
            })
            .collect();
        Self::from_points(points, CurveFamily::ProfileGraph)
    }

    pub fn explicit(points: Vec<Target>) -> Result<Self> {
        Self::from_points(points, CurveFamily::Explicit)
    }

    fn from_points(points: Vec<Target>, family: CurveFamily) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidTargets("at least one target is required".into()));
        }
        for p in &points {
            if !(p.t.is_finite() && p.y[0].is_finite() && p.y[1].is_finite()) {
                return Err(Error::NonFinite("target coordinates"));
            }
        }
        if points.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidTargets("parameters must be strictly increasing".into()));
        }
        Ok(Self { points, family })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Target] {
        &self.points
    }

    pub fn family(&self) -> &CurveFamily {
        &self.family
    }
}

/// `g_i(x) = c(x, y_{i+1}) - c(x, y_i)`: exact affine form plus its grid samples.
#[derive(Debug, Clone)]
pub struct DifferenceField {
    pub index: usize,
    pub affine: AffineField,
    pub values: Vec<f64>,
}

/// Cost difference between consecutive targets `i` and `i + 1` (0-based `i`).
pub fn cost_difference_field(
    cost: &CostSpec,
    targets: &TargetSet,
    i: usize,
    grid: &GridSpec,
) -> Result<DifferenceField> {
    let n = targets.len();
    if n < 2 || i + 1 >= n {
        return Err(Error::IndexOutOfRange { index: i, lo: 0, hi: n.saturating_sub(2) });
    }
    let affine = cost.score_field(targets, i + 1).sub(&cost.score_field(targets, i));
    let values = (0..grid.len()).map(|p| affine.eval(grid.midpoint(p))).collect();
    Ok(DifferenceField { index: i, affine, values })
}

/// Boolean grid mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub cells: Vec<bool>,
}

impl Mask {
    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }
}

/// Cells whose midpoint satisfies `g_i(x) ≥ k`.
pub fn superlevel_mask(field: &DifferenceField, k: f64) -> Mask {
    Mask { cells: field.values.iter().map(|&g| g >= k).collect() }
}
