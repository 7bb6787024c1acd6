//! Synthetic data for the Wasserstein autoregression.
//!
//! The centered process follows
//!
//! ```text
//! F̃_{i,t} = ε_{i,t} ∘ [ Σ_j A_ij (F̃_{j,t-1} - id) + id ]
//! ```
//!
//! with i.i.d. random distortions `ε = (1+ξ)/2 · g∘h⁻¹ + (1-ξ)/2 · h⁻¹`,
//! `h = (g + id)/2`, `ξ ~ U(-1, 1)`. Every `ε` is nondecreasing, 2-Lipschitz and
//! satisfies `E[ε] = id`.
//!
//! Random streams are ChaCha8 ([`SimRng`]) seeded through `seed_from_u64`, which
//! is portable across platforms. Simulation replicate `r` of a study with base
//! seed `s` uses seed `s + r` on stream 0; coefficient matrices are drawn from
//! seed `s` on stream [`COEFF_STREAM`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WmarError};
use crate::linalg::{spectral_norm, SquareMatrix};
use crate::qfun::{
    check_monotone, interp_nodes, lower_inverse_at, oplus, spline_monotone, spline_nodes, Grid,
    QuantileGrid, Role, SplineSpec, MONOTONE_TOL,
};
use crate::series::DistSeries;

pub type SimRng = ChaCha8Rng;

/// ChaCha stream reserved for coefficient-matrix draws.
pub const COEFF_STREAM: u64 = 1;

/// Simulation stream for `seed` (stream 0).
pub fn sim_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Coefficient stream for `seed`.
pub fn coeff_rng(seed: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(COEFF_STREAM);
    rng
}

/// Base function `g` of the distortion generator and its cached transforms.
#[derive(Clone, Debug)]
pub struct DistortionSpec {
    g: QuantileGrid,
    h_inv: QuantileGrid,
    g_h_inv: QuantileGrid,
    adjusted: bool,
}

impl DistortionSpec {
    /// Build from a spline through `spec`'s knots. The spline is sampled on the
    /// grid plus the right endpoint `x = 1`, so `h` reaches `h(1)` instead of
    /// being held flat on the last cell.
    pub fn from_spline(spec: &SplineSpec, grid: Grid) -> Result<Self> {
        let m = grid.len();
        let (closed, adjusted) = spline_nodes(spec, m, m + 1);
        Self::from_closed_nodes(grid, closed, adjusted)
    }

    /// Distortion family collapsing to the identity (`g = id`).
    pub fn identity(grid: Grid) -> Self {
        let m = grid.len();
        let closed = (0..=m).map(|k| k as f64 / m as f64).collect();
        Self::from_closed_nodes(grid, closed, false).expect("identity is a valid base")
    }

    /// `closed[k] = g(k / M)` for `k = 0..=M`.
    fn from_closed_nodes(grid: Grid, closed: Vec<f64>, adjusted: bool) -> Result<Self> {
        let m = grid.len();
        debug_assert_eq!(closed.len(), m + 1);
        check_monotone(&closed)?;
        if closed[0].abs() > MONOTONE_TOL {
            return Err(WmarError::InvalidSpline(format!(
                "distortion base must start at 0, got {}",
                closed[0]
            )));
        }
        if closed[m] > 1.0 + MONOTONE_TOL {
            return Err(WmarError::InvalidSpline(format!(
                "distortion base exceeds 1 at the right end: {}",
                closed[m]
            )));
        }
        let h: Vec<f64> = closed
            .iter()
            .enumerate()
            .map(|(k, g)| 0.5 * (g + k as f64 / m as f64))
            .collect();
        let h_inv: Vec<f64> = grid
            .points()
            .map(|q| lower_inverse_at(&h, m, q, 1.0))
            .collect();
        let g_h_inv: Vec<f64> = h_inv.iter().map(|&x| interp_nodes(&closed, m, x)).collect();
        Ok(DistortionSpec {
            g: QuantileGrid::from_parts_unchecked(grid, closed[..m].to_vec(), Role::Quantile),
            h_inv: QuantileGrid::from_parts_unchecked(grid, h_inv, Role::Quantile),
            g_h_inv: QuantileGrid::from_parts_unchecked(grid, g_h_inv, Role::Quantile),
            adjusted,
        })
    }

    pub fn grid(&self) -> Grid {
        self.g.grid()
    }

    pub fn g(&self) -> &QuantileGrid {
        &self.g
    }

    pub fn h_inv(&self) -> &QuantileGrid {
        &self.h_inv
    }

    pub fn g_h_inv(&self) -> &QuantileGrid {
        &self.g_h_inv
    }

    /// Whether the spline needed monotone repair.
    pub fn adjusted(&self) -> bool {
        self.adjusted
    }
}

/// One distortion `ε = (1+ξ)/2 · g∘h⁻¹ + (1-ξ)/2 · h⁻¹`.
pub fn gen_distortion(spec: &DistortionSpec, xi: f64) -> Result<QuantileGrid> {
    if !(-1.0..=1.0).contains(&xi) {
        return Err(WmarError::InvalidArgument(format!("xi = {xi} not in [-1, 1]")));
    }
    let a = 0.5 * (1.0 + xi);
    let b = 0.5 * (1.0 - xi);
    let values = spec
        .g_h_inv
        .values()
        .iter()
        .zip(spec.h_inv.values())
        .map(|(gh, hi)| (a * gh + b * hi).clamp(0.0, 1.0))
        .collect();
    Ok(QuantileGrid::from_parts_unchecked(spec.grid(), values, Role::Quantile))
}

/// `ξ ~ U(-1, 1)`.
pub fn sample_xi<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-1.0..=1.0)
}

/// Nonnegative `N × N` matrix whose rows lie in the nonnegative ℓ1 unit ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SquareMatrix", into = "SquareMatrix")]
pub struct CoeffMatrix(SquareMatrix);

impl CoeffMatrix {
    pub fn new(m: SquareMatrix) -> Result<Self> {
        if let Some(v) = m.data().iter().find(|&&v| v < 0.0) {
            return Err(WmarError::InvalidArgument(format!(
                "negative coefficient {v}"
            )));
        }
        for (i, r) in m.rows().enumerate() {
            let s: f64 = r.iter().sum();
            if s > 1.0 + MONOTONE_TOL {
                return Err(WmarError::InvalidArgument(format!(
                    "row {i} sums to {s} > 1"
                )));
            }
        }
        Ok(CoeffMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    pub fn zeros(n: usize) -> Self {
        CoeffMatrix(SquareMatrix::zeros(n))
    }

    pub fn identity(n: usize) -> Self {
        CoeffMatrix(SquareMatrix::identity(n))
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.0)
    }
}

impl AsRef<SquareMatrix> for CoeffMatrix {
    fn as_ref(&self) -> &SquareMatrix {
        &self.0
    }
}

impl TryFrom<SquareMatrix> for CoeffMatrix {
    type Error = WmarError;
    fn try_from(m: SquareMatrix) -> Result<Self> {
        CoeffMatrix::new(m)
    }
}

impl From<CoeffMatrix> for SquareMatrix {
    fn from(c: CoeffMatrix) -> Self {
        c.0
    }
}

/// Flat simulation configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Number of features `N`.
    pub n: usize,
    /// Series length is `t + 1` instants.
    pub t: usize,
    pub burn_in: usize,
    pub alpha: f64,
    /// Expected fraction of nonzero off-diagonal coefficients.
    pub density: f64,
    pub seed: u64,
    pub grid_h: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 10,
            t: 200,
            burn_in: 200,
            alpha: 0.5,
            density: 0.2,
            seed: 0,
            grid_h: 0.01,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(WmarError::InvalidArgument("n must be positive".into()));
        }
        if self.t == 0 {
            return Err(WmarError::InvalidArgument("t must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(WmarError::InvalidArgument(format!(
                "alpha = {} must be positive",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(WmarError::InvalidArgument(format!(
                "density = {} not in [0, 1]",
                self.density
            )));
        }
        self.grid()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid_h)
    }
}

/// Random sparse coefficient matrix with spectral norm exactly `1 / (2 + α)`.
///
/// Diagonal entries are always drawn, off-diagonal ones with probability
/// `density`; values are `U(0, 1]`. Rows are normalized to sum to one, then the
/// whole matrix is divided by `(2 + α) ‖A⁰‖₂`.
pub fn gen_coeffs<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<CoeffMatrix> {
    cfg.validate()?;
    let n = cfg.n;
    let mut a0 = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let draw = i == j || rng.random_bool(cfg.density);
            if draw {
                a0.set(i, j, 1.0 - rng.random::<f64>());
            }
        }
    }
    for i in 0..n {
        let s: f64 = a0.row(i).iter().sum();
        for j in 0..n {
            a0.set(i, j, a0.get(i, j) / s);
        }
    }
    let scale = (2.0 + cfg.alpha) * spectral_norm(&a0);
    let data = a0.data().iter().map(|v| v / scale).collect();
    CoeffMatrix::new(SquareMatrix::new(n, data)?)
}

/// One transition of the centered process.
pub fn step(
    a: &CoeffMatrix,
    prev: &[QuantileGrid],
    eps: &[QuantileGrid],
) -> Result<Vec<QuantileGrid>> {
    let n = a.n();
    if prev.len() != n || eps.len() != n {
        return Err(WmarError::InvalidArgument(format!(
            "expected {n} grids, got {} states and {} distortions",
            prev.len(),
            eps.len()
        )));
    }
    let grid = prev[0].grid();
    for q in prev.iter().chain(eps) {
        if q.grid() != grid {
            return Err(WmarError::GridMismatch {
                left: grid.len(),
                right: q.len(),
            });
        }
    }
    let points: Vec<f64> = grid.points().collect();
    let mut out = Vec::with_capacity(n);
    for (i, e) in eps.iter().enumerate() {
        let row = a.row(i);
        let keep: f64 = 1.0 - row.iter().sum::<f64>();
        let mut inner: Vec<f64> = points.iter().map(|p| keep * p).collect();
        for (x, &w) in prev.iter().zip(row) {
            if w != 0.0 {
                for (u, v) in inner.iter_mut().zip(x.values()) {
                    *u += w * v;
                }
            }
        }
        check_monotone(&inner).map_err(|e| {
            WmarError::OutsideLogImage(format!("regression of feature {i}: {e}"))
        })?;
        let values = inner.iter().map(|&u| e.eval(u)).collect();
        out.push(QuantileGrid::from_parts_unchecked(grid, values, Role::Quantile));
    }
    Ok(out)
}

/// Run the centered process from `id` for `burn_in` discarded steps and keep
/// the next `t + 1` states.
pub fn simulate_centered<R: Rng + ?Sized>(
    a: &CoeffMatrix,
    spec: &DistortionSpec,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<DistSeries> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    if spec.grid() != grid {
        return Err(WmarError::GridMismatch {
            left: grid.len(),
            right: spec.grid().len(),
        });
    }
    if a.n() != cfg.n {
        return Err(WmarError::InvalidArgument(format!(
            "coefficient matrix is {0}x{0} but n = {1}",
            a.n(),
            cfg.n
        )));
    }
    let n = cfg.n;
    let keep = cfg.t + 1;
    let mut state = vec![QuantileGrid::identity(grid); n];
    let mut data: Vec<Vec<QuantileGrid>> = (0..n).map(|_| Vec::with_capacity(keep)).collect();
    for s in 0..cfg.burn_in + keep {
        let eps = (0..n)
            .map(|_| gen_distortion(spec, sample_xi(rng)))
            .collect::<Result<Vec<_>>>()?;
        state = step(a, &state, &eps)?;
        if s >= cfg.burn_in {
            for (row, x) in data.iter_mut().zip(&state) {
                row.push(x.clone());
            }
        }
    }
    DistSeries::with_default_labels(grid, data)
}

/// Raw series `F_{i,t} = F̃_{i,t} ∘ F_{i,⊕}` from centered data and feature means.
pub fn synthesize_raw(centered: &DistSeries, means: &[QuantileGrid]) -> Result<DistSeries> {
    if means.len() != centered.n_features() {
        return Err(WmarError::InvalidArgument(format!(
            "{} means for {} features",
            means.len(),
            centered.n_features()
        )));
    }
    let data = centered
        .data()
        .iter()
        .zip(means)
        .map(|(row, m)| row.iter().map(|x| oplus(x, m)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    DistSeries::new(
        centered.grid(),
        centered.labels().to_vec(),
        centered.times().to_vec(),
        data,
    )
}

/// Spline Fréchet means for features `1..=n` used by synthetic studies.
pub fn feature_means(n: usize, grid: Grid) -> Result<Vec<QuantileGrid>> {
    (1..=n)
        .map(|i| Ok(spline_monotone(&SplineSpec::feature_mean(i, n)?, grid).values))
        .collect()
}

/// Everything produced by one synthetic run.
#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub coeffs: CoeffMatrix,
    pub means: Vec<QuantileGrid>,
    pub centered: DistSeries,
    pub raw: DistSeries,
}

/// Coefficients from the coefficient stream of `cfg.seed`, series from its
/// simulation stream, default distortion base and spline feature means.
pub fn simulate_dataset(cfg: &SimConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let coeffs = gen_coeffs(cfg, &mut coeff_rng(cfg.seed))?;
    simulate_with_coeffs(coeffs, cfg)
}

/// Like [`simulate_dataset`] with a given coefficient matrix; only the
/// simulation stream of `cfg.seed` is used.
pub fn simulate_with_coeffs(coeffs: CoeffMatrix, cfg: &SimConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let spec = DistortionSpec::from_spline(&SplineSpec::distortion_default(), grid)?;
    let centered = simulate_centered(&coeffs, &spec, cfg, &mut sim_rng(cfg.seed))?;
    let means = feature_means(cfg.n, grid)?;
    let raw = synthesize_raw(&centered, &means)?;
    Ok(SyntheticData {
        coeffs,
        means,
        centered,
        raw,
    })
}
