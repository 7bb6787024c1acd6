//! Quantile functions on a uniform grid of `[0, 1)`.
//!
//! A [`QuantileGrid`] stores function values at `p_k = k / M`, `k = 0..M`. Between
//! nodes the function is linear; on `[1 - h, 1]` it is held constant at the last
//! stored value. Every operation here (evaluation, composition, inversion,
//! quadrature) uses that same interpolant, so identities such as
//! `compose(F, left_inverse(F)) = id` hold up to the grid resolution.
//!
//! Measures on `[0, 1]` are represented by their left-continuous quantile
//! function `F^{-1}(p) = inf{x : F(x) >= p}`. The tangent space at the Lebesgue
//! measure is reached with [`log_leb`] (`F^{-1} - id`) and left with [`exp_leb`].

use serde::{Deserialize, Serialize};

use crate::error::{Result, WmarError};

/// Absolute tolerance used for every monotonicity and range check.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Uniform grid `0, h, 2h, ..., 1 - h` with `h = 1 / M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    size: usize,
}

impl Grid {
    /// Grid with granularity `h`. `1 / h` must be an integer `M >= 2`.
    pub fn new(h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(WmarError::InvalidGrid(format!(
                "granularity {h} not in (0, 1)"
            )));
        }
        let m = (1.0 / h).round();
        if (h * m - 1.0).abs() > MONOTONE_TOL {
            return Err(WmarError::InvalidGrid(format!(
                "granularity {h} does not divide [0, 1] evenly"
            )));
        }
        Self::with_size(m as usize)
    }

    pub fn with_size(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(WmarError::InvalidGrid(format!(
                "need at least 2 points, got {size}"
            )));
        }
        Ok(Grid { size })
    }

    /// Number of stored points `M`.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        k as f64 / self.size as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.size).map(move |k| self.point(k))
    }

    /// Trapezoid weights on `[0, 1 - h]` plus the constant piece on `[1 - h, 1]`.
    /// They sum to one.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.size];
        w[0] = 0.5 * h;
        w[self.size - 1] = 1.5 * h;
        w
    }
}

/// What a grid function is allowed to be.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Nondecreasing with values in `[0, 1]`.
    Quantile,
    /// Nondecreasing, any range (cdf-like helpers, spline output before clamping).
    Monotone,
    /// No shape constraint (tangent vectors).
    Unconstrained,
}

/// Values of a function on a [`Grid`], tagged with its [`Role`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileGrid {
    grid: Grid,
    values: Vec<f64>,
    role: Role,
}

impl QuantileGrid {
    pub fn new(grid: Grid, values: Vec<f64>, role: Role) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(WmarError::GridMismatch {
                left: grid.len(),
                right: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(WmarError::OutOfRange { index, value });
        }
        match role {
            Role::Quantile => {
                check_monotone(&values)?;
                check_unit_range(&values)?;
            }
            Role::Monotone => check_monotone(&values)?,
            Role::Unconstrained => {}
        }
        Ok(QuantileGrid { grid, values, role })
    }

    pub fn quantile(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, Role::Quantile)
    }

    pub fn monotone(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, Role::Monotone)
    }

    pub fn unconstrained(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, Role::Unconstrained)
    }

    /// Quantile function of the uniform law (the Lebesgue measure on `[0, 1]`).
    pub fn identity(grid: Grid) -> Self {
        QuantileGrid {
            grid,
            values: grid.points().collect(),
            role: Role::Quantile,
        }
    }

    /// Quantile function of a point mass at `a`.
    pub fn dirac(grid: Grid, a: f64) -> Result<Self> {
        Self::quantile(grid, vec![a; grid.len()])
    }

    pub fn zero(grid: Grid) -> Self {
        QuantileGrid {
            grid,
            values: vec![0.0; grid.len()],
            role: Role::Unconstrained,
        }
    }

    pub fn from_fn(grid: Grid, role: Role, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect(), role)
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<f64>, role: Role) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        QuantileGrid { grid, values, role }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Evaluate the piecewise-linear interpolant at `x`, constant outside `[0, 1 - h]`.
    pub fn eval(&self, x: f64) -> f64 {
        interp_nodes(&self.values, self.grid.len(), x)
    }

    /// True when the values are nondecreasing within [`MONOTONE_TOL`].
    pub fn is_monotone(&self) -> bool {
        check_monotone(&self.values).is_ok()
    }

    /// Pointwise difference, as a tangent vector.
    pub fn sub(&self, other: &QuantileGrid) -> Result<QuantileGrid> {
        same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_parts_unchecked(self.grid, values, Role::Unconstrained))
    }

    pub fn add(&self, other: &QuantileGrid) -> Result<QuantileGrid> {
        same_grid(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_parts_unchecked(self.grid, values, Role::Unconstrained))
    }

    pub fn scale(&self, c: f64) -> QuantileGrid {
        let values = self.values.iter().map(|v| c * v).collect();
        Self::from_parts_unchecked(self.grid, values, Role::Unconstrained)
    }

    /// Largest absolute pointwise difference.
    pub fn sup_distance(&self, other: &QuantileGrid) -> Result<f64> {
        same_grid(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

pub(crate) fn same_grid(a: &QuantileGrid, b: &QuantileGrid) -> Result<()> {
    if a.grid != b.grid {
        return Err(WmarError::GridMismatch {
            left: a.grid.len(),
            right: b.grid.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_monotone(values: &[f64]) -> Result<()> {
    for (index, w) in values.windows(2).enumerate() {
        if w[1] < w[0] - MONOTONE_TOL {
            return Err(WmarError::NotMonotone {
                index: index + 1,
                prev: w[0],
                next: w[1],
            });
        }
    }
    Ok(())
}

fn check_unit_range(values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !(-MONOTONE_TOL..=1.0 + MONOTONE_TOL).contains(&value) {
            return Err(WmarError::OutOfRange { index, value });
        }
    }
    Ok(())
}

/// Linear interpolation through `(k / m, values[k])`, constant beyond either end.
pub(crate) fn interp_nodes(values: &[f64], m: usize, x: f64) -> f64 {
    let last = values.len() - 1;
    if x.is_nan() || x <= 0.0 {
        return values[0];
    }
    let s = x * m as f64;
    // grid points return their node value exactly despite rounding in k / m * m
    let r = s.round();
    if (s - r).abs() <= 4.0 * f64::EPSILON * s {
        return values[(r as usize).min(last)];
    }
    let k = s.floor() as usize;
    if k >= last {
        return values[last];
    }
    let frac = s - k as f64;
    values[k] + frac * (values[k + 1] - values[k])
}

/// `inf{x in [0, last node] : f(x) >= q}` for the nondecreasing interpolant
/// through `(k / m, values[k])`; `beyond` when `q` exceeds every value.
pub(crate) fn lower_inverse_at(values: &[f64], m: usize, q: f64, beyond: f64) -> f64 {
    let idx = values.partition_point(|&v| v < q);
    if idx == 0 {
        return 0.0;
    }
    if idx == values.len() {
        return beyond;
    }
    let (lo, hi) = (values[idx - 1], values[idx]);
    let frac = (q - lo) / (hi - lo);
    ((idx - 1) as f64 + frac) / m as f64
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// Empirical quantile function of a sample on `[0, 1]`.
///
/// `v_k` is the smallest order statistic `x_(j)` whose empirical cdf `j / n`
/// reaches `p_k`; at `p = 0` this is the sample minimum.
pub fn empirical_quantile(samples: &[f64], grid: Grid) -> Result<QuantileGrid> {
    if samples.is_empty() {
        return Err(WmarError::Empty("samples"));
    }
    if let Some((index, &value)) = samples
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(WmarError::OutOfRange { index, value });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let m = grid.len();
    let values = (0..m)
        .map(|k| {
            // smallest j >= 1 with j / n >= k / m, in exact integer arithmetic
            let j = ((k * n).div_ceil(m)).max(1);
            sorted[j - 1]
        })
        .collect();
    Ok(QuantileGrid::from_parts_unchecked(grid, values, Role::Quantile))
}

/// Knots of a natural cubic spline on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineSpec {
    knots: Vec<(f64, f64)>,
}

impl SplineSpec {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 3 {
            return Err(WmarError::InvalidSpline(format!(
                "need at least 3 knots, got {}",
                knots.len()
            )));
        }
        for (i, &(x, y)) in knots.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                return Err(WmarError::InvalidSpline(format!(
                    "knot {i} = ({x}, {y}) outside the unit square"
                )));
            }
        }
        for (i, w) in knots.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(WmarError::InvalidSpline(format!(
                    "abscissae not strictly increasing at knot {}",
                    i + 1
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(WmarError::InvalidSpline(format!(
                    "ordinates decreasing at knot {}",
                    i + 1
                )));
            }
        }
        Ok(SplineSpec { knots })
    }

    /// Base function for the distortion generator: through
    /// `(0,0), (0.2,0.1), (0.6,0.2), (1,1)`.
    pub fn distortion_default() -> Self {
        SplineSpec {
            knots: vec![(0.0, 0.0), (0.2, 0.1), (0.6, 0.2), (1.0, 1.0)],
        }
    }

    /// Population Fréchet mean used for feature `i` (1-based) of `n` in synthetic
    /// studies: through `(0,0), (0.2,0.1), (0.6, 0.2 + 0.2 i / n), (1,1)`.
    pub fn feature_mean(i: usize, n: usize) -> Result<Self> {
        if i == 0 || i > n {
            return Err(WmarError::InvalidArgument(format!(
                "feature index {i} not in 1..={n}"
            )));
        }
        Self::new(vec![
            (0.0, 0.0),
            (0.2, 0.1),
            (0.6, 0.2 + 0.2 * i as f64 / n as f64),
            (1.0, 1.0),
        ])
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }
}

/// Natural cubic spline (zero second derivative at both ends).
struct NaturalCubic<'a> {
    knots: &'a [(f64, f64)],
    second: Vec<f64>,
}

impl<'a> NaturalCubic<'a> {
    fn new(knots: &'a [(f64, f64)]) -> Self {
        let n = knots.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            let h: Vec<f64> = knots.windows(2).map(|w| w[1].0 - w[0].0).collect();
            let slope: Vec<f64> = knots
                .windows(2)
                .zip(&h)
                .map(|(w, hi)| (w[1].1 - w[0].1) / hi)
                .collect();
            // Thomas algorithm on the interior unknowns 1..n-1
            let inner = n - 2;
            let mut diag = vec![0.0; inner];
            let mut rhs = vec![0.0; inner];
            for r in 0..inner {
                diag[r] = 2.0 * (h[r] + h[r + 1]);
                rhs[r] = 6.0 * (slope[r + 1] - slope[r]);
            }
            for r in 1..inner {
                let factor = h[r] / diag[r - 1];
                diag[r] -= factor * h[r];
                rhs[r] -= factor * rhs[r - 1];
            }
            second[inner] = rhs[inner - 1] / diag[inner - 1];
            for r in (0..inner - 1).rev() {
                second[r + 1] = (rhs[r] - h[r + 1] * second[r + 2]) / diag[r];
            }
        }
        NaturalCubic { knots, second }
    }

    fn eval(&self, x: f64) -> f64 {
        let k = self.knots;
        let n = k.len();
        let m = &self.second;
        if x <= k[0].0 {
            let h = k[1].0 - k[0].0;
            let slope = (k[1].1 - k[0].1) / h - h * m[1] / 6.0;
            return k[0].1 + slope * (x - k[0].0);
        }
        if x >= k[n - 1].0 {
            let h = k[n - 1].0 - k[n - 2].0;
            let slope = (k[n - 1].1 - k[n - 2].1) / h + h * m[n - 2] / 6.0;
            return k[n - 1].1 + slope * (x - k[n - 1].0);
        }
        let i = k.partition_point(|&(kx, _)| kx <= x) - 1;
        let (x0, y0) = k[i];
        let (x1, y1) = k[i + 1];
        let h = x1 - x0;
        let a = x1 - x;
        let b = x - x0;
        m[i] * a.powi(3) / (6.0 * h)
            + m[i + 1] * b.powi(3) / (6.0 * h)
            + (y0 / h - m[i] * h / 6.0) * a
            + (y1 / h - m[i + 1] * h / 6.0) * b
    }
}

/// Pool-adjacent-violators: the closest nondecreasing sequence in least squares.
pub(crate) fn isotonic(values: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, w2) = blocks[blocks.len() - 1];
            let (m1, w1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().unwrap() = ((m1 * w1 as f64 + m2 * w2 as f64) / w as f64, w);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, w)| std::iter::repeat_n(m, w))
        .collect()
}

/// Spline values at `k / m` for `k = 0..count`, repaired to be nondecreasing and
/// within `[0, 1]`. The flag reports whether any repair was needed.
pub(crate) fn spline_nodes(spec: &SplineSpec, m: usize, count: usize) -> (Vec<f64>, bool) {
    let spline = NaturalCubic::new(&spec.knots);
    let raw: Vec<f64> = (0..count).map(|k| spline.eval(k as f64 / m as f64)).collect();
    let mut adjusted = false;
    let mut values = if raw.windows(2).any(|w| w[1] < w[0]) {
        adjusted = true;
        isotonic(&raw)
    } else {
        raw
    };
    for v in values.iter_mut() {
        let c = v.clamp(0.0, 1.0);
        if c != *v {
            adjusted = true;
            *v = c;
        }
    }
    (values, adjusted)
}

/// Output of [`spline_monotone`].
#[derive(Clone, Debug)]
pub struct SplineFit {
    pub values: QuantileGrid,
    /// The raw spline overshot (decreasing or outside `[0, 1]`) and was repaired.
    pub adjusted: bool,
}

/// Natural cubic spline through the knots, sampled on the grid and projected
/// onto nondecreasing `[0, 1]`-valued sequences when it overshoots.
pub fn spline_monotone(spec: &SplineSpec, grid: Grid) -> SplineFit {
    let (values, adjusted) = spline_nodes(spec, grid.len(), grid.len());
    SplineFit {
        values: QuantileGrid::from_parts_unchecked(grid, values, Role::Quantile),
        adjusted,
    }
}

// ---------------------------------------------------------------------------
// Composition and inversion
// ---------------------------------------------------------------------------

/// Left-continuous inverse `q -> inf{x : f(x) >= q}` of the interpolant of `f`,
/// sampled at the grid points. Values of `q` above `max f` map to 1.
pub fn left_inverse(f: &QuantileGrid) -> Result<QuantileGrid> {
    if f.role == Role::Unconstrained {
        check_monotone(&f.values)?;
    }
    let m = f.grid.len();
    let values = f
        .grid
        .points()
        .map(|q| lower_inverse_at(&f.values, m, q, 1.0))
        .collect();
    Ok(QuantileGrid::from_parts_unchecked(f.grid, values, Role::Quantile))
}

/// `(f ∘ g)(p_k) = f(g(p_k))` with `f` interpolated.
pub fn compose(f: &QuantileGrid, g: &QuantileGrid) -> Result<QuantileGrid> {
    same_grid(f, g)?;
    let values = g.values.iter().map(|&x| f.eval(x)).collect();
    let role = if f.role == Role::Unconstrained || g.role == Role::Unconstrained {
        Role::Unconstrained
    } else {
        f.role
    };
    Ok(QuantileGrid::from_parts_unchecked(f.grid, values, role))
}

/// Centering `F ⊖ G = F ∘ G^{-1}`: the optimal map pushing `G`'s law onto `F`'s.
pub fn ominus(f: &QuantileGrid, g: &QuantileGrid) -> Result<QuantileGrid> {
    compose(f, &left_inverse(g)?)
}

/// Un-centering `F̃ ⊕ G = F̃ ∘ G`.
pub fn oplus(f_centered: &QuantileGrid, g: &QuantileGrid) -> Result<QuantileGrid> {
    compose(f_centered, g)
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// `∫_0^1 f g dp` with the grid's quadrature weights.
pub fn inner_leb(f: &QuantileGrid, g: &QuantileGrid) -> Result<f64> {
    same_grid(f, g)?;
    Ok(weighted_dot(&f.grid.quadrature_weights(), &f.values, &g.values))
}

pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

/// 2-Wasserstein distance: the L2 distance between quantile functions.
pub fn wasserstein(f: &QuantileGrid, g: &QuantileGrid) -> Result<f64> {
    same_grid(f, g)?;
    let w = f.grid.quadrature_weights();
    let sq: f64 = w
        .iter()
        .zip(&f.values)
        .zip(&g.values)
        .map(|((w, a), b)| w * (a - b) * (a - b))
        .sum();
    Ok(sq.max(0.0).sqrt())
}

/// Empirical Fréchet mean: the pointwise average of quantile functions.
pub fn frechet_mean(grids: &[QuantileGrid]) -> Result<QuantileGrid> {
    let first = grids.first().ok_or(WmarError::Empty("frechet_mean input"))?;
    let mut acc = vec![0.0; first.len()];
    for g in grids {
        same_grid(first, g)?;
        for (a, v) in acc.iter_mut().zip(&g.values) {
            *a += v;
        }
    }
    let n = grids.len() as f64;
    for a in acc.iter_mut() {
        *a /= n;
    }
    let role = if grids.iter().all(|g| g.role == Role::Quantile) {
        Role::Quantile
    } else {
        Role::Unconstrained
    };
    Ok(QuantileGrid::from_parts_unchecked(first.grid, acc, role))
}

/// `Log_Leb μ = F^{-1} - id`.
pub fn log_leb(f: &QuantileGrid) -> QuantileGrid {
    let values = f
        .values
        .iter()
        .zip(f.grid.points())
        .map(|(v, p)| v - p)
        .collect();
    QuantileGrid::from_parts_unchecked(f.grid, values, Role::Unconstrained)
}

/// `Exp_Leb g = g + id`, defined only when the result is a quantile function.
pub fn exp_leb(g: &QuantileGrid) -> Result<QuantileGrid> {
    let values: Vec<f64> = g
        .values
        .iter()
        .zip(g.grid.points())
        .map(|(v, p)| v + p)
        .collect();
    if let Err(e) = check_monotone(&values).and_then(|_| check_unit_range(&values)) {
        return Err(WmarError::OutsideLogImage(e.to_string()));
    }
    Ok(QuantileGrid::from_parts_unchecked(g.grid, values, Role::Quantile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(h: f64) -> Grid {
        Grid::new(h).unwrap()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn grid_construction() {
        let g = grid(0.01);
        assert_eq!(g.len(), 100);
        assert_eq!(g.point(0), 0.0);
        assert!((g.point(99) - 0.99).abs() < 1e-15);
        assert!((g.quadrature_weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(Grid::new(0.3).is_err());
        assert!(Grid::new(0.0).is_err());
        assert!(Grid::new(1.0).is_err());
        assert_eq!(grid(0.002).len(), 500);
    }

    #[test]
    fn quantile_role_is_validated() {
        let g = Grid::with_size(4).unwrap();
        assert!(QuantileGrid::quantile(g, vec![0.0, 0.5, 0.4, 1.0]).is_err());
        assert!(QuantileGrid::quantile(g, vec![0.0, 0.5, 0.6, 1.2]).is_err());
        assert!(QuantileGrid::monotone(g, vec![-1.0, 0.5, 0.6, 1.2]).is_ok());
        assert!(QuantileGrid::unconstrained(g, vec![1.0, 0.0, 1.0, 0.0]).is_ok());
        assert!(QuantileGrid::quantile(g, vec![0.0; 3]).is_err());
    }

    /// Brute-force inversion of the empirical cdf: scan candidates in order.
    fn ecdf_inverse_oracle(samples: &[f64], p: f64) -> f64 {
        let mut cands = samples.to_vec();
        cands.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        for &x in &cands {
            let cdf = samples.iter().filter(|&&s| s <= x).count() as f64 / n;
            if cdf >= p - 1e-12 {
                return x;
            }
        }
        unreachable!()
    }

    #[test]
    fn empirical_quantile_point_mass() {
        let q = empirical_quantile(&[0.5], grid(0.1)).unwrap();
        assert!(q.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn empirical_quantile_two_points() {
        let samples = [0.0, 1.0];
        let g = grid(0.25);
        let q = empirical_quantile(&samples, g).unwrap();
        let oracle: Vec<f64> = g.points().map(|p| ecdf_inverse_oracle(&samples, p)).collect();
        assert_eq!(oracle, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(q.values(), oracle.as_slice());
    }

    #[test]
    fn empirical_quantile_matches_oracle_on_uneven_sample() {
        let samples = [0.3, 0.1, 0.9, 0.1, 0.75, 0.42, 0.05];
        let g = grid(0.05);
        let q = empirical_quantile(&samples, g).unwrap();
        for (k, p) in g.points().enumerate() {
            assert_eq!(q.values()[k], ecdf_inverse_oracle(&samples, p), "p = {p}");
        }
    }

    #[test]
    fn empirical_quantile_of_uniform_grid() {
        let samples: Vec<f64> = (0..1000).map(|k| k as f64 / 999.0).collect();
        let g = grid(0.01);
        let q = empirical_quantile(&samples, g).unwrap();
        let id = QuantileGrid::identity(g);
        assert!(q.sup_distance(&id).unwrap() <= 1e-2);
    }

    #[test]
    fn empirical_quantile_errors() {
        assert!(matches!(
            empirical_quantile(&[], grid(0.1)),
            Err(WmarError::Empty(_))
        ));
        assert!(matches!(
            empirical_quantile(&[0.2, 1.2], grid(0.1)),
            Err(WmarError::OutOfRange { index: 1, .. })
        ));
    }

    #[test]
    fn spline_reproduces_line() {
        let spec = SplineSpec::new(vec![(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)]).unwrap();
        let g = grid(0.01);
        let fit = spline_monotone(&spec, g);
        assert!(!fit.adjusted);
        let id = QuantileGrid::identity(g);
        assert!(fit.values.sup_distance(&id).unwrap() < 1e-9);
    }

    #[test]
    fn spline_through_distortion_knots() {
        let g = grid(0.01);
        let fit = spline_monotone(&SplineSpec::distortion_default(), g);
        assert!(fit.values.is_monotone());
        assert!((fit.values.values()[20] - 0.1).abs() < 1e-9);
        assert!((fit.values.values()[60] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn spline_feature_mean_last_feature() {
        let g = grid(0.01);
        let spec = SplineSpec::feature_mean(10, 10).unwrap();
        let fit = spline_monotone(&spec, g);
        assert!(fit.values.is_monotone());
        assert!((fit.values.values()[60] - 0.4).abs() < 1e-9);
        assert!(SplineSpec::feature_mean(0, 10).is_err());
    }

    #[test]
    fn spline_interpolates_knots_exactly() {
        // non-uniform spacing exercises the tridiagonal solve
        let knots = vec![(0.0, 0.0), (0.1, 0.3), (0.35, 0.4), (0.8, 0.7), (1.0, 1.0)];
        let spec = SplineSpec::new(knots.clone()).unwrap();
        let s = NaturalCubic::new(spec.knots());
        for &(x, y) in &knots {
            assert!((s.eval(x) - y).abs() < 1e-12);
        }
        // natural end conditions: second difference vanishes at the ends
        let d = 1e-6;
        let sd0 = (s.eval(2.0 * d) - 2.0 * s.eval(d) + s.eval(0.0)) / (d * d);
        let sd1 = (s.eval(1.0) - 2.0 * s.eval(1.0 - d) + s.eval(1.0 - 2.0 * d)) / (d * d);
        assert!(sd0.abs() < 1e-2 && sd1.abs() < 1e-2, "{sd0} {sd1}");
    }

    #[test]
    fn spline_overshoot_is_repaired() {
        // steep rise then flat: the natural spline dips after the second knot
        let spec = SplineSpec::new(vec![(0.0, 0.0), (0.1, 0.9), (0.5, 0.9), (1.0, 1.0)]).unwrap();
        let fit = spline_monotone(&spec, grid(0.01));
        assert!(fit.adjusted);
        assert!(fit.values.is_monotone());
        assert!(fit.values.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn spline_spec_errors() {
        assert!(SplineSpec::new(vec![(0.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(SplineSpec::new(vec![(0.0, 0.0), (0.5, 0.2), (0.5, 0.3), (1.0, 1.0)]).is_err());
        assert!(SplineSpec::new(vec![(0.0, 0.0), (0.5, 0.6), (0.7, 0.3), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn isotonic_pools_violators() {
        assert_eq!(isotonic(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn left_inverse_of_identity() {
        let g = grid(0.01);
        let id = QuantileGrid::identity(g);
        let inv = left_inverse(&id).unwrap();
        assert!(max_abs_diff(inv.values(), id.values()) < 1e-12);
    }

    #[test]
    fn left_inverse_of_square() {
        let g = grid(0.01);
        let f = QuantileGrid::from_fn(g, Role::Quantile, |p| p * p).unwrap();
        let inv = left_inverse(&f).unwrap();
        // f only reaches 0.99^2 on the grid; beyond that the inverse is 1
        for (k, p) in g.points().enumerate() {
            if p <= 0.99 * 0.99 {
                assert!((inv.values()[k] - p.sqrt()).abs() <= g.h(), "p = {p}");
            }
        }
    }

    #[test]
    fn left_inverse_plateau_resolves_left() {
        let g = Grid::with_size(4).unwrap();
        let f = QuantileGrid::quantile(g, vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        let inv = left_inverse(&f).unwrap();
        // direct inf-definition on the interpolant: q=.25 -> .125, q=.5 -> .25, q=.75 -> .625
        assert_eq!(inv.values(), &[0.0, 0.125, 0.25, 0.625]);
    }

    #[test]
    fn compose_identities() {
        let g = grid(0.01);
        let id = QuantileGrid::identity(g);
        let f = QuantileGrid::from_fn(g, Role::Quantile, |p| p * p).unwrap();
        let r = QuantileGrid::from_fn(g, Role::Quantile, |p| p.sqrt() * 0.99).unwrap();
        assert!(compose(&id, &r).unwrap().sup_distance(&r).unwrap() < 1e-12);
        assert!(compose(&f, &id).unwrap().sup_distance(&f).unwrap() < 1e-12);
        let sq = QuantileGrid::from_fn(g, Role::Quantile, |p| p.sqrt()).unwrap();
        let c = compose(&f, &sq).unwrap();
        // f is held constant past 0.99, so only points with sqrt(p) <= 0.99 are exact-ish
        for (k, p) in g.points().enumerate() {
            if p.sqrt() <= 0.99 {
                assert!((c.values()[k] - p).abs() < 2.0 * g.h() * g.h() + 1e-12);
            }
        }
        let dirac = QuantileGrid::dirac(g, 0.5).unwrap();
        assert!(compose(&dirac, &sq).unwrap().values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn compose_grid_mismatch() {
        let a = QuantileGrid::identity(grid(0.01));
        let b = QuantileGrid::identity(grid(0.1));
        assert!(matches!(compose(&a, &b), Err(WmarError::GridMismatch { .. })));
    }

    #[test]
    fn ominus_examples() {
        let g = grid(0.01);
        let id = QuantileGrid::identity(g);
        let f = QuantileGrid::from_fn(g, Role::Quantile, |p| 0.1 + 0.8 * p + 0.1 * p * p).unwrap();
        let c = ominus(&f, &f).unwrap();
        // exact on [f(0), f(1-h)], held at f(1-h) above it
        for (k, p) in g.points().enumerate() {
            let expect = p.clamp(f.values()[0], f.values()[99]);
            assert!((c.values()[k] - expect).abs() < 1e-12);
        }
        let sq = QuantileGrid::from_fn(g, Role::Quantile, |p| p * p).unwrap();
        assert!(ominus(&sq, &id).unwrap().sup_distance(&sq).unwrap() < 1e-12);
        let root = QuantileGrid::from_fn(g, Role::Quantile, f64::sqrt).unwrap();
        let back = ominus(&id, &root).unwrap();
        for (k, p) in g.points().enumerate() {
            if p <= 0.99f64.sqrt() {
                assert!((back.values()[k] - p * p).abs() <= 2.0 * g.h(), "p = {p}");
            }
        }
    }

    #[test]
    fn ominus_self_is_identity_for_full_range_f() {
        let g = grid(0.01);
        let f = QuantileGrid::from_fn(g, Role::Quantile, |p| (p / 0.99).powf(1.5)).unwrap();
        let c = ominus(&f, &f).unwrap();
        assert!(c.sup_distance(&QuantileGrid::identity(g)).unwrap() <= 2.0 * g.h());
    }

    #[test]
    fn oplus_examples() {
        let g = grid(0.01);
        let id = QuantileGrid::identity(g);
        let gg = QuantileGrid::from_fn(g, Role::Quantile, |p| p * p * p).unwrap();
        assert!(oplus(&id, &gg).unwrap().sup_distance(&gg).unwrap() < 1e-12);
        assert!(oplus(&gg, &id).unwrap().sup_distance(&gg).unwrap() < 1e-12);
        let f = QuantileGrid::from_fn(g, Role::Quantile, |p| p * p).unwrap();
        let round = oplus(&ominus(&f, &gg).unwrap(), &gg).unwrap();
        assert!(round.sup_distance(&f).unwrap() <= 2.0 * g.h());
    }

    #[test]
    fn inner_products() {
        let g = grid(0.01);
        let id = QuantileGrid::identity(g);
        let one = QuantileGrid::dirac(g, 1.0).unwrap();
        assert!((inner_leb(&id, &id).unwrap() - 1.0 / 3.0).abs() < 1e-3);
        assert_eq!(inner_leb(&id, &QuantileGrid::zero(g)).unwrap(), 0.0);
        assert!((inner_leb(&id, &one).unwrap() - 0.5).abs() < 1e-3);
        assert!(inner_leb(&id, &QuantileGrid::identity(grid(0.1))).is_err());
    }

    #[test]
    fn quadrature_converges_quadratically() {
        let errs: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&h| {
                let id = QuantileGrid::identity(grid(h));
                (inner_leb(&id, &id).unwrap() - 1.0 / 3.0).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((80.0..=120.0).contains(&ratio), "ratio {ratio}, errs {errs:?}");
        }
    }

    #[test]
    fn wasserstein_examples() {
        let g = grid(0.01);
        let id = QuantileGrid::identity(g);
        assert_eq!(wasserstein(&id, &id).unwrap(), 0.0);
        let a = QuantileGrid::dirac(g, 0.2).unwrap();
        let b = QuantileGrid::dirac(g, 0.7).unwrap();
        assert!((wasserstein(&a, &b).unwrap() - 0.5).abs() < 1e-9);
        let half = QuantileGrid::dirac(g, 0.5).unwrap();
        assert!((wasserstein(&id, &half).unwrap() - (1.0f64 / 12.0).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn frechet_mean_examples() {
        let g = grid(0.01);
        let id = QuantileGrid::identity(g);
        assert_eq!(frechet_mean(std::slice::from_ref(&id)).unwrap(), id);
        let a = QuantileGrid::dirac(g, 0.2).unwrap();
        let b = QuantileGrid::dirac(g, 0.6).unwrap();
        let m = frechet_mean(&[a, b]).unwrap();
        assert!(m.values().iter().all(|v| (v - 0.4).abs() < 1e-15));
        let half = QuantileGrid::dirac(g, 0.5).unwrap();
        let m = frechet_mean(&[id, half]).unwrap();
        for (k, p) in g.points().enumerate() {
            assert!((m.values()[k] - (p / 2.0 + 0.25)).abs() < 1e-15);
        }
        assert!(frechet_mean(&[]).is_err());
    }

    #[test]
    fn log_exp_examples() {
        let g = grid(0.01);
        let id = QuantileGrid::identity(g);
        assert!(log_leb(&id).values().iter().all(|&v| v == 0.0));
        let half = QuantileGrid::dirac(g, 0.5).unwrap();
        let l = log_leb(&half);
        for (k, p) in g.points().enumerate() {
            assert!((l.values()[k] - (0.5 - p)).abs() < 1e-15);
        }
        assert!(exp_leb(&l).unwrap().sup_distance(&half).unwrap() < 1e-15);
        assert_eq!(exp_leb(&QuantileGrid::zero(g)).unwrap(), id);
        let bad = QuantileGrid::from_fn(g, Role::Unconstrained, |p| -2.0 * p).unwrap();
        assert!(matches!(exp_leb(&bad), Err(WmarError::OutsideLogImage(_))));
    }

    fn arb_quantile(m: usize) -> impl Strategy<Value = QuantileGrid> {
        prop::collection::vec(0.0f64..1.0, m).prop_map(move |mut v| {
            v.sort_by(f64::total_cmp);
            QuantileGrid::quantile(Grid::with_size(m).unwrap(), v).unwrap()
        })
    }

    fn objective(mean: &[f64], grids: &[QuantileGrid]) -> f64 {
        let g = grids[0].grid();
        let m = QuantileGrid::from_parts_unchecked(g, mean.to_vec(), Role::Quantile);
        grids.iter().map(|x| wasserstein(&m, x).unwrap().powi(2)).sum()
    }

    proptest! {
        #[test]
        fn isometry_two_code_paths(f in arb_quantile(20), g in arb_quantile(20)) {
            let d = f.sub(&g).unwrap();
            let via_inner = inner_leb(&d, &d).unwrap().sqrt();
            prop_assert!((wasserstein(&f, &g).unwrap() - via_inner).abs() < 1e-15);
        }

        #[test]
        fn log_image_is_convex(f in arb_quantile(16), g in arb_quantile(16), lambda in 0.0f64..=1.0) {
            let comb = log_leb(&f).scale(lambda).add(&log_leb(&g).scale(1.0 - lambda)).unwrap();
            prop_assert!(exp_leb(&comb).is_ok());
        }

        #[test]
        fn round_trip_strictly_increasing(
            b in 0.3f64..3.0, ratio in 1.0f64..2.0, lo in 0.0f64..0.2,
        ) {
            // f ∘ g⁻¹ behaves like q^(a / b): keep it Lipschitz with slope at most 2,
            // since the flat last cell costs slope * h
            let a = ratio * b;
            let grid = Grid::new(0.01).unwrap();
            let f = QuantileGrid::from_fn(grid, Role::Quantile, |p| lo + (1.0 - lo) * p.powf(a)).unwrap();
            let g = QuantileGrid::from_fn(grid, Role::Quantile, |p| (p / 0.99).powf(b)).unwrap();
            let back = oplus(&ominus(&f, &g).unwrap(), &g).unwrap();
            prop_assert!(back.sup_distance(&f).unwrap() <= 2.0 * grid.h());
        }

        #[test]
        fn frechet_mean_is_local_minimizer(
            grids in (2usize..=8).prop_flat_map(|m| prop::collection::vec(arb_quantile(m), 1..=4)),
            coord in 0usize..8,
            up in any::<bool>(),
        ) {
            let mean = frechet_mean(&grids).unwrap();
            let h = mean.grid().h();
            let base = objective(mean.values(), &grids);
            let mut v = mean.values().to_vec();
            let c = coord % v.len();
            v[c] += if up { h } else { -h };
            let v: Vec<f64> = isotonic(&v).into_iter().map(|x| x.clamp(0.0, 1.0)).collect();
            prop_assert!(objective(&v, &grids) >= base - 1e-12);
        }
    }
}
