//! Least-squares estimation of the coefficient matrix.
//!
//! Raw observations are centered by their empirical Fréchet means, mapped to
//! the tangent space at the Lebesgue measure, and summarized by the lag-0 and
//! lag-1 Gram matrices
//!
//! ```text
//! Γ0[j,l] = 1/T Σ_{t=1..T} ⟨X_{j,t-1} - id, X_{l,t-1} - id⟩
//! Γ1[j,l] = 1/T Σ_{t=1..T} ⟨X_{j,t}   - id, X_{l,t-1} - id⟩
//! ```
//!
//! Row `i` of the estimate minimizes `½ a Γ0 aᵀ - Γ1[i,:] aᵀ` over the
//! nonnegative part of the ℓ1 unit ball, solved by accelerated projected
//! gradient descent started at zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WmarError};
use crate::linalg::{spectral_norm, symmetric_eigenvalues, SquareMatrix};
use crate::qfun::{
    compose, frechet_mean, left_inverse, ominus, oplus, Grid, QuantileGrid, Role,
};
use crate::series::DistSeries;
use crate::simulate::CoeffMatrix;

/// Reciprocal condition number below which Γ0 counts as singular.
pub const MIN_RECIPROCAL_CONDITION: f64 = 1e-12;

/// Γ0 with no eigenvalue above this is treated as zero.
pub const GRAM_ZERO: f64 = 1e-20;

/// Feasibility tolerance for rows of an estimate.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Lag-0 and lag-1 Gram matrices of a centered series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramPair {
    pub gamma0: SquareMatrix,
    pub gamma1: SquareMatrix,
    /// Number of transitions `T` the averages run over.
    pub t: usize,
}

impl GramPair {
    pub fn n(&self) -> usize {
        self.gamma0.n()
    }

    /// Smallest and largest eigenvalue of Γ0, or `GramSingular` when Γ0 is not
    /// safely invertible.
    pub fn check_invertible(&self) -> Result<(f64, f64)> {
        let ev = symmetric_eigenvalues(&self.gamma0);
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        if !(hi > GRAM_ZERO) || lo <= hi * MIN_RECIPROCAL_CONDITION {
            return Err(WmarError::GramSingular {
                min_eigenvalue: lo,
                max_eigenvalue: hi,
            });
        }
        Ok((lo, hi))
    }

    fn with_ridge(&self, ridge: f64) -> GramPair {
        let mut g = self.clone();
        for i in 0..g.n() {
            g.gamma0.set(i, i, g.gamma0.get(i, i) + ridge);
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// Stop a row once consecutive iterates are within this ℓ2 distance.
    pub tol: f64,
    pub max_iter: usize,
    /// Added to Γ0's diagonal only when Γ0 is singular; 0 turns singularity into an error.
    pub ridge: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-4,
            max_iter: 50_000,
            ridge: 0.0,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(WmarError::InvalidArgument(format!("tol = {} must be positive", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(WmarError::InvalidArgument("max_iter must be positive".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(WmarError::InvalidArgument(format!(
                "ridge = {} must be nonnegative",
                self.ridge
            )));
        }
        Ok(())
    }
}

/// A series centered at the Lebesgue measure, with the means that were removed.
#[derive(Clone, Debug)]
pub struct Centered {
    pub series: DistSeries,
    pub means: Vec<QuantileGrid>,
    /// Feature whose mean has a flat stretch, so centering is not invertible there.
    pub degenerate: Vec<bool>,
}

/// Remove each feature's empirical Fréchet mean: `F̂_{i,t} = F_{i,t} ∘ F̄_i^{-1}`.
///
/// The mean runs over every stored instant, so the centered features average
/// to `id` over the same instants.
pub fn center_series(raw: &DistSeries) -> Result<Centered> {
    if raw.len() < 2 {
        return Err(WmarError::InvalidArgument(
            "need at least two instants (T >= 1)".into(),
        ));
    }
    let grid = raw.grid();
    let per_feature = raw
        .data()
        .par_iter()
        .map(|row| {
            if row.iter().all(|x| x == &row[0]) {
                // F ∘ F⁻¹ = id exactly; the grid version loses the flat last cell
                let id = QuantileGrid::identity(grid);
                let degenerate = has_plateau(row[0].values());
                return Ok((vec![id; row.len()], row[0].clone(), degenerate));
            }
            let mean = frechet_mean(row)?;
            let degenerate = has_plateau(mean.values());
            let inv = left_inverse(&mean)?;
            let centered = row
                .iter()
                .map(|x| compose(x, &inv))
                .collect::<Result<Vec<_>>>()?;
            Ok((centered, mean, degenerate))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Vec::with_capacity(per_feature.len());
    let mut means = Vec::with_capacity(per_feature.len());
    let mut degenerate = Vec::with_capacity(per_feature.len());
    for (c, m, d) in per_feature {
        data.push(c);
        means.push(m);
        degenerate.push(d);
    }
    let series = DistSeries::new(grid, raw.labels().to_vec(), raw.times().to_vec(), data)?;
    Ok(Centered {
        series,
        means,
        degenerate,
    })
}

fn has_plateau(values: &[f64]) -> bool {
    values.windows(2).any(|w| w[1] - w[0] <= 1e-12)
}

/// Gram matrices of a centered series (`T + 1` instants, `T >= 1`).
pub fn gram(centered: &DistSeries) -> Result<GramPair> {
    let len = centered.len();
    if len < 2 {
        return Err(WmarError::InvalidArgument(
            "need at least two instants (T >= 1)".into(),
        ));
    }
    let t = len - 1;
    let n = centered.n_features();
    let grid = centered.grid();
    let w = grid.quadrature_weights();
    let points: Vec<f64> = grid.points().collect();
    // weighted tangent vectors: logs[i][s] = X_{i,s} - id
    let logs: Vec<Vec<Vec<f64>>> = centered
        .data()
        .iter()
        .map(|row| {
            row.iter()
                .map(|x| x.values().iter().zip(&points).map(|(v, p)| v - p).collect())
                .collect()
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
    };
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut g0 = vec![0.0; n];
            let mut g1 = vec![0.0; n];
            for l in 0..n {
                let mut s0 = 0.0;
                let mut s1 = 0.0;
                for s in 1..=t {
                    s0 += dot(&logs[j][s - 1], &logs[l][s - 1]);
                    s1 += dot(&logs[j][s], &logs[l][s - 1]);
                }
                g0[l] = s0 / t as f64;
                g1[l] = s1 / t as f64;
            }
            (g0, g1)
        })
        .collect();
    let (g0, g1): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let gamma0 = SquareMatrix::new(n, g0.concat())?;
    let gamma1 = SquareMatrix::new(n, g1.concat())?;
    let gt = gamma0.transpose();
    let sym = gamma0
        .data()
        .iter()
        .zip(gt.data())
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    Ok(GramPair {
        gamma0: SquareMatrix::new(n, sym)?,
        gamma1,
        t,
    })
}

/// Unconstrained least squares `Â_o = Γ1 Γ0⁻¹`.
pub fn lse_unconstrained(gram: &GramPair) -> Result<SquareMatrix> {
    gram.check_invertible()?;
    let n = gram.n();
    let lu = gram.gamma0.to_nalgebra().lu();
    // Γ0 is symmetric, so A Γ0 = Γ1  <=>  Γ0 Aᵀ = Γ1ᵀ
    let at = lu
        .solve(&gram.gamma1.transpose().to_nalgebra())
        .ok_or(WmarError::GramSingular {
            min_eigenvalue: 0.0,
            max_eigenvalue: 0.0,
        })?;
    let mut a = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            a.set(i, j, at[(j, i)]);
        }
    }
    Ok(a)
}

/// Euclidean projection onto `{x : x >= 0, Σ x <= 1}`.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return clipped;
    }
    // active constraint Σ x = 1: threshold τ from the sorted values
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Whether a row lies in the nonnegative ℓ1 unit ball within `tol`.
pub fn row_feasible(row: &[f64], tol: f64) -> bool {
    row.iter().all(|&x| x >= -tol) && row.iter().sum::<f64>() <= 1.0 + tol
}

/// Result of solving one row.
#[derive(Clone, Debug, PartialEq)]
pub struct RowFit {
    pub coeffs: Vec<f64>,
    pub iters: usize,
    pub objective: f64,
    pub converged: bool,
    /// Objective value at each momentum restart, in order.
    pub restart_objectives: Vec<f64>,
}

fn row_objective(g0: &SquareMatrix, b: &[f64], a: &[f64]) -> f64 {
    let ga = g0.mul_vec(a);
    let quad: f64 = a.iter().zip(&ga).map(|(x, y)| x * y).sum();
    let lin: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    0.5 * quad - lin
}

/// Accelerated projected gradient for row `i`.
///
/// Fixed step `1 / λ_max(Γ0)`, FISTA momentum, zero start. When a step would
/// increase the objective the step is discarded and momentum restarts from the
/// last accepted iterate, so accepted objectives never increase.
///
/// A short step taken under momentum can sit far from the optimum, so when
/// consecutive iterates come within `tol` the momentum is reset and the run
/// stops only once a plain projected-gradient step also moves less than `tol`.
pub fn fit_row(gram: &GramPair, i: usize, opts: &FitOptions) -> Result<RowFit> {
    opts.validate()?;
    let n = gram.n();
    if i >= n {
        return Err(WmarError::InvalidArgument(format!("row {i} out of range for N = {n}")));
    }
    let g0 = &gram.gamma0;
    let b = gram.gamma1.row(i);
    let lipschitz = spectral_norm(g0);
    let mut x = vec![0.0; n];
    if lipschitz == 0.0 {
        return Ok(RowFit {
            coeffs: x,
            iters: 0,
            objective: 0.0,
            converged: true,
            restart_objectives: Vec::new(),
        });
    }
    let step = 1.0 / lipschitz;
    let mut y = x.clone();
    let mut theta = 1.0f64;
    let mut f_x = 0.0;
    let mut restarts = Vec::new();
    let mut just_restarted = false;
    let mut converged = false;
    let mut iters = 0;
    while iters < opts.max_iter {
        iters += 1;
        let grad: Vec<f64> = g0.mul_vec(&y).iter().zip(b).map(|(g, b)| g - b).collect();
        let trial: Vec<f64> = y.iter().zip(&grad).map(|(y, g)| y - step * g).collect();
        let x_new = project_simplex(&trial);
        let f_new = row_objective(g0, b, &x_new);
        if !just_restarted && f_new > f_x {
            restarts.push(f_x);
            theta = 1.0;
            y.clone_from(&x);
            just_restarted = true;
            continue;
        }
        just_restarted = false;
        let plain = theta == 1.0;
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let momentum = (theta - 1.0) / theta_next;
        let moved: f64 = x_new
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        y = x_new
            .iter()
            .zip(&x)
            .map(|(xn, xo)| xn + momentum * (xn - xo))
            .collect();
        x = x_new;
        f_x = f_new;
        theta = theta_next;
        if moved <= opts.tol {
            if plain {
                converged = true;
                break;
            }
            theta = 1.0;
            y.clone_from(&x);
        }
    }
    Ok(RowFit {
        coeffs: x,
        iters,
        objective: f_x,
        converged,
        restart_objectives: restarts,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitFlags {
    /// Γ0 was singular and the ridge was added.
    pub ridge_used: bool,
    /// `Some(true)` when the unconstrained estimate exists and already satisfies the constraint.
    pub unconstrained_feasible: Option<bool>,
    /// Fewer transitions than features.
    pub small_sample: bool,
    /// Per feature: the empirical mean has a flat stretch.
    pub degenerate_centering: Vec<bool>,
    pub all_converged: bool,
}

/// Everything produced by [`fit`].
#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub labels: Vec<String>,
    pub grid: Grid,
    pub coeffs: CoeffMatrix,
    pub unconstrained: Option<SquareMatrix>,
    pub gram: GramPair,
    pub means: Vec<QuantileGrid>,
    pub iters: Vec<usize>,
    pub objective: Vec<f64>,
    pub converged: Vec<bool>,
    pub flags: FitFlags,
    pub options: FitOptions,
}

impl FitReport {
    pub fn n(&self) -> usize {
        self.coeffs.n()
    }
}

/// Full estimator on raw data: center, build Gram matrices, solve every row.
pub fn fit(raw: &DistSeries, opts: &FitOptions) -> Result<FitReport> {
    opts.validate()?;
    let centered = center_series(raw)?;
    fit_with_means(&centered.series, centered.means, centered.degenerate, opts)
}

/// Estimator on data that is already centered at the Lebesgue measure.
pub fn fit_centered(centered: &DistSeries, opts: &FitOptions) -> Result<FitReport> {
    opts.validate()?;
    let n = centered.n_features();
    let means = vec![QuantileGrid::identity(centered.grid()); n];
    fit_with_means(centered, means, vec![false; n], opts)
}

fn fit_with_means(
    centered: &DistSeries,
    means: Vec<QuantileGrid>,
    degenerate: Vec<bool>,
    opts: &FitOptions,
) -> Result<FitReport> {
    let n = centered.n_features();
    let mut gram = gram(centered)?;
    let small_sample = gram.t < n;
    let mut ridge_used = false;
    if let Err(e) = gram.check_invertible() {
        if opts.ridge > 0.0 {
            gram = gram.with_ridge(opts.ridge);
            gram.check_invertible()?;
            ridge_used = true;
        } else {
            return Err(e);
        }
    }
    let unconstrained = lse_unconstrained(&gram).ok();
    let unconstrained_feasible = unconstrained
        .as_ref()
        .map(|a| a.rows().all(|r| row_feasible(r, 0.0)));
    let rows = (0..n)
        .into_par_iter()
        .map(|i| fit_row(&gram, i, opts))
        .collect::<Result<Vec<_>>>()?;
    let coeffs = CoeffMatrix::new(SquareMatrix::new(
        n,
        rows.iter().flat_map(|r| r.coeffs.iter().copied()).collect(),
    )?)?;
    let converged: Vec<bool> = rows.iter().map(|r| r.converged).collect();
    Ok(FitReport {
        labels: centered.labels().to_vec(),
        grid: centered.grid(),
        coeffs,
        unconstrained,
        gram,
        means,
        iters: rows.iter().map(|r| r.iters).collect(),
        objective: rows.iter().map(|r| r.objective).collect(),
        flags: FitFlags {
            ridge_used,
            unconstrained_feasible,
            small_sample,
            degenerate_centering: degenerate,
            all_converged: converged.iter().all(|&c| c),
        },
        converged,
        options: opts.clone(),
    })
}

/// Relative Frobenius error `‖Â - A‖_F / ‖A‖_F`.
pub fn rmsd(a_hat: &SquareMatrix, a: &SquareMatrix) -> Result<f64> {
    if a_hat.n() != a.n() {
        return Err(WmarError::InvalidArgument(format!(
            "shapes differ: {} vs {}",
            a_hat.n(),
            a.n()
        )));
    }
    let denom = a.frobenius_norm();
    if denom == 0.0 {
        return Err(WmarError::InvalidArgument("reference matrix is zero".into()));
    }
    let num = a_hat
        .data()
        .iter()
        .zip(a.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

/// One-step forecast of every feature from the last raw observations.
pub fn forecast(report: &FitReport, last_raw: &[QuantileGrid]) -> Result<Vec<QuantileGrid>> {
    Ok(forecast_horizon(report, last_raw, 1)?.pop().expect("horizon 1"))
}

/// Forecasts for `1..=horizon` steps ahead. Because distortions have mean
/// `id`, the conditional mean iterates linearly in the tangent space.
pub fn forecast_horizon(
    report: &FitReport,
    last_raw: &[QuantileGrid],
    horizon: usize,
) -> Result<Vec<Vec<QuantileGrid>>> {
    let n = report.n();
    if last_raw.len() != n {
        return Err(WmarError::InvalidArgument(format!(
            "{} observations for {n} features",
            last_raw.len()
        )));
    }
    if horizon == 0 {
        return Err(WmarError::InvalidArgument("horizon must be at least 1".into()));
    }
    let grid = report.grid;
    let points: Vec<f64> = grid.points().collect();
    let mut state: Vec<Vec<f64>> = last_raw
        .iter()
        .zip(&report.means)
        .map(|(x, m)| {
            if x.grid() != grid {
                return Err(WmarError::GridMismatch {
                    left: grid.len(),
                    right: x.len(),
                });
            }
            Ok(ominus(x, m)?.into_values())
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let row = report.coeffs.row(i);
                let keep = 1.0 - row.iter().sum::<f64>();
                let mut u: Vec<f64> = points.iter().map(|p| keep * p).collect();
                for (x, &w) in state.iter().zip(row) {
                    for (ui, xi) in u.iter_mut().zip(x) {
                        *ui += w * xi;
                    }
                }
                u
            })
            .collect();
        let step = next
            .iter()
            .zip(&report.means)
            .map(|(u, m)| {
                let centered = QuantileGrid::new(grid, u.clone(), Role::Quantile).map_err(|e| {
                    WmarError::OutsideLogImage(format!("forecast left the quantile space: {e}"))
                })?;
                oplus(&centered, m)
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(step);
        state = next;
    }
    Ok(out)
}

/// Largest deviation of the time-averaged centered series from `id`.
pub fn centering_defect(centered: &DistSeries) -> Result<f64> {
    let id = QuantileGrid::identity(centered.grid());
    let mut worst = 0.0f64;
    for row in centered.data() {
        worst = worst.max(frechet_mean(row)?.sup_distance(&id)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfun::{inner_leb, log_leb};
    use crate::simulate::{simulate_dataset, SimConfig};
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::new(0.01).unwrap()
    }

    fn gram_from(g0: &[Vec<f64>], g1: &[Vec<f64>]) -> GramPair {
        GramPair {
            gamma0: SquareMatrix::from_rows(g0).unwrap(),
            gamma1: SquareMatrix::from_rows(g1).unwrap(),
            t: 100,
        }
    }

    fn series(rows: Vec<Vec<QuantileGrid>>) -> DistSeries {
        DistSeries::with_default_labels(rows[0][0].grid(), rows).unwrap()
    }

    /// Minimize ‖x - v‖ over a fine grid of the feasible set (N <= 3).
    pub(crate) fn brute_force_projection(v: &[f64], step: f64) -> Vec<f64> {
        let k = (1.0 / step).round() as usize;
        let mut best = (f64::INFINITY, vec![0.0; v.len()]);
        let mut idx = vec![0usize; v.len()];
        loop {
            if idx.iter().sum::<usize>() <= k {
                let x: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
                let d: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.0 {
                    best = (d, x);
                }
            }
            let mut c = 0;
            loop {
                if c == idx.len() {
                    return best.1;
                }
                idx[c] += 1;
                if idx[c] <= k {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
        }
    }

    #[test]
    fn center_constant_series() {
        let g = grid();
        let f = QuantileGrid::from_fn(g, Role::Quantile, |p| (p / 0.99).powi(2)).unwrap();
        let c = center_series(&series(vec![vec![f.clone(); 5]])).unwrap();
        assert_eq!(c.means[0], f);
        let id = QuantileGrid::identity(g);
        assert!(c.series.feature(0).iter().all(|x| x == &id));
        assert!(!c.degenerate[0]);
    }

    #[test]
    fn center_two_diracs_is_degenerate() {
        let g = grid();
        let a = QuantileGrid::dirac(g, 0.25).unwrap();
        let b = QuantileGrid::dirac(g, 0.75).unwrap();
        let c = center_series(&series(vec![vec![a, b]])).unwrap();
        assert!(c.means[0].values().iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert!(c.degenerate[0]);
    }

    #[test]
    fn centering_recovers_true_means() {
        let cfg = SimConfig {
            n: 3,
            t: 2000,
            ..SimConfig::default()
        };
        let data = simulate_dataset(&cfg).unwrap();
        let c = center_series(&data.raw).unwrap();
        for (est, truth) in c.means.iter().zip(&data.means) {
            assert!(est.sup_distance(truth).unwrap() < 0.05);
        }
        assert!(centering_defect(&c.series).unwrap() <= 2.0 * grid().h());
    }

    #[test]
    fn gram_examples() {
        let g = grid();
        let id = QuantileGrid::identity(g);
        let z = gram(&series(vec![vec![id.clone(); 4], vec![id.clone(); 4]])).unwrap();
        assert!(z.gamma0.data().iter().chain(z.gamma1.data()).all(|&v| v == 0.0));

        let f = QuantileGrid::from_fn(g, Role::Quantile, |p| p * p).unwrap();
        let gp = gram(&series(vec![vec![f.clone(); 3]])).unwrap();
        let l = log_leb(&f);
        let e = inner_leb(&l, &l).unwrap();
        assert!((gp.gamma0.get(0, 0) - e).abs() < 1e-15);
        assert!((gp.gamma1.get(0, 0) - e).abs() < 1e-15);
    }

    #[test]
    fn gram_matches_quadrature_oracle() {
        let g = grid();
        let mk = |f: &dyn Fn(f64) -> f64| QuantileGrid::from_fn(g, Role::Quantile, f).unwrap();
        let a = vec![mk(&|p| p * p), mk(&|p| p.sqrt()), mk(&|p| 0.5 * p + 0.2)];
        let b = vec![mk(&|p| p), mk(&|p| p.powi(3)), mk(&|p| 0.1 + 0.8 * p)];
        let s = series(vec![a.clone(), b.clone()]);
        let gp = gram(&s).unwrap();
        // oracle: plain loops over the quadrature rule
        let w = g.quadrature_weights();
        let ip = |x: &QuantileGrid, y: &QuantileGrid| -> f64 {
            (0..g.len())
                .map(|k| w[k] * (x.values()[k] - g.point(k)) * (y.values()[k] - g.point(k)))
                .sum()
        };
        let feats = [&a, &b];
        for j in 0..2 {
            for l in 0..2 {
                let g0 = (ip(&feats[j][0], &feats[l][0]) + ip(&feats[j][1], &feats[l][1])) / 2.0;
                let g1 = (ip(&feats[j][1], &feats[l][0]) + ip(&feats[j][2], &feats[l][1])) / 2.0;
                assert!((gp.gamma0.get(j, l) - g0).abs() < 1e-12);
                assert!((gp.gamma1.get(j, l) - g1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lse_examples() {
        let g0 = vec![vec![2.0, 0.3], vec![0.3, 1.0]];
        let a = lse_unconstrained(&gram_from(&g0, &g0)).unwrap();
        assert!(a.data().iter().zip(SquareMatrix::identity(2).data()).all(|(x, y)| (x - y).abs() < 1e-12));

        let g1 = vec![vec![0.2, 0.1], vec![0.0, 0.3]];
        let a = lse_unconstrained(&gram_from(&[vec![1.0, 0.0], vec![0.0, 1.0]], &g1)).unwrap();
        assert_eq!(a, SquareMatrix::from_rows(&g1).unwrap());

        let singular = gram_from(&[vec![1.0, 1.0], vec![1.0, 1.0]], &g1);
        assert!(matches!(lse_unconstrained(&singular), Err(WmarError::GramSingular { .. })));
    }

    fn noiseless_chain(a: f64, t: usize) -> DistSeries {
        let g = grid();
        let start = QuantileGrid::from_fn(g, Role::Quantile, |p| p * p).unwrap();
        let mut d = log_leb(&start);
        let mut row = Vec::new();
        for _ in 0..=t {
            row.push(crate::qfun::exp_leb(&d).unwrap());
            d = d.scale(a);
        }
        series(vec![row])
    }

    #[test]
    fn lse_on_noiseless_chain() {
        let gp = gram(&noiseless_chain(0.4, 50)).unwrap();
        let a = lse_unconstrained(&gp).unwrap();
        assert!((a.get(0, 0) - 0.4).abs() < 1e-6);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.2, 0.3]), vec![0.2, 0.3]);
        let p = project_simplex(&[1.0, 1.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert_eq!(project_simplex(&[-0.5, 0.4]), vec![0.0, 0.4]);
        for v in [[1.0, 1.0], [-0.5, 0.4]] {
            let bf = brute_force_projection(&v, 1e-3);
            let p = project_simplex(&v);
            assert!(p.iter().zip(&bf).all(|(a, b)| (a - b).abs() <= 2e-3));
        }
    }

    #[test]
    fn fit_row_examples() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let opts = FitOptions {
            tol: 1e-10,
            ..FitOptions::default()
        };
        let cases = [
            ([0.2, 0.1], [0.2, 0.1]),
            ([1.0, 1.0], [0.5, 0.5]),
            ([-1.0, 0.3], [0.0, 0.3]),
        ];
        for (b, expect) in cases {
            let gp = gram_from(&id, &[b.to_vec(), vec![0.0, 0.0]]);
            let r = fit_row(&gp, 0, &opts).unwrap();
            assert!(r.converged);
            for (x, e) in r.coeffs.iter().zip(expect) {
                assert!((x - e).abs() < 1e-8, "{:?} vs {expect:?}", r.coeffs);
            }
        }
    }

    #[test]
    fn fit_row_reports_non_convergence() {
        let gp = gram_from(
            &[vec![1.0, 0.999], vec![0.999, 1.0]],
            &[vec![0.3, 0.1], vec![0.0, 0.0]],
        );
        let opts = FitOptions {
            tol: 1e-14,
            max_iter: 3,
            ridge: 0.0,
        };
        let r = fit_row(&gp, 0, &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iters, 3);
        assert!(row_feasible(&r.coeffs, 1e-12));
    }

    #[test]
    fn fit_constant_series_is_singular() {
        let g = grid();
        let f = QuantileGrid::from_fn(g, Role::Quantile, |p| p * p).unwrap();
        let s = series(vec![vec![f; 6]]);
        assert!(matches!(
            fit(&s, &FitOptions::default()),
            Err(WmarError::GramSingular { .. })
        ));
    }

    #[test]
    fn ridge_repairs_duplicated_features() {
        let cfg = SimConfig {
            n: 1,
            t: 50,
            ..SimConfig::default()
        };
        let data = simulate_dataset(&cfg).unwrap();
        let row = data.raw.feature(0).to_vec();
        let twice = series(vec![row.clone(), row]);
        assert!(matches!(
            fit(&twice, &FitOptions::default()),
            Err(WmarError::GramSingular { .. })
        ));
        let opts = FitOptions {
            ridge: 1e-3,
            ..FitOptions::default()
        };
        let r = fit(&twice, &opts).unwrap();
        assert!(r.flags.ridge_used && !r.flags.small_sample);
    }

    #[test]
    fn short_series_are_flagged() {
        let cfg = SimConfig {
            n: 6,
            t: 3,
            ..SimConfig::default()
        };
        let data = simulate_dataset(&cfg).unwrap();
        let r = fit(&data.raw, &FitOptions::default()).unwrap();
        assert!(r.flags.small_sample);
    }

    #[test]
    fn fit_is_deterministic_and_feasible() {
        let cfg = SimConfig {
            n: 5,
            t: 300,
            ..SimConfig::default()
        };
        let data = simulate_dataset(&cfg).unwrap();
        let a = fit(&data.raw, &FitOptions::default()).unwrap();
        let b = fit(&data.raw, &FitOptions::default()).unwrap();
        assert_eq!(a, b);
        for r in a.coeffs.matrix().rows() {
            assert!(row_feasible(r, FEASIBILITY_TOL));
        }
        let ev = symmetric_eigenvalues(&a.gram.gamma0);
        assert!(ev[0] >= -1e-9);
    }

    #[test]
    fn rmsd_examples() {
        let i2 = SquareMatrix::identity(2);
        assert_eq!(rmsd(&i2, &i2).unwrap(), 0.0);
        assert_eq!(rmsd(&SquareMatrix::zeros(2), &i2).unwrap(), 1.0);
        let half = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!((rmsd(&half, &i2).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(rmsd(&i2, &SquareMatrix::zeros(2)).is_err());
    }

    fn report_with(coeffs: CoeffMatrix, means: Vec<QuantileGrid>) -> FitReport {
        let n = coeffs.n();
        FitReport {
            labels: (0..n).map(|i| format!("f{i}")).collect(),
            grid: means[0].grid(),
            coeffs,
            unconstrained: None,
            gram: GramPair {
                gamma0: SquareMatrix::identity(n),
                gamma1: SquareMatrix::zeros(n),
                t: 1,
            },
            means,
            iters: vec![0; n],
            objective: vec![0.0; n],
            converged: vec![true; n],
            flags: FitFlags::default(),
            options: FitOptions::default(),
        }
    }

    #[test]
    fn forecast_examples() {
        let g = grid();
        let m1 = QuantileGrid::from_fn(g, Role::Quantile, |p| 0.9 * p * p).unwrap();
        let m2 = QuantileGrid::from_fn(g, Role::Quantile, |p| 0.1 + 0.5 * p).unwrap();
        let last = vec![
            QuantileGrid::from_fn(g, Role::Quantile, |p| 0.8 * p).unwrap(),
            QuantileGrid::from_fn(g, Role::Quantile, |p| 0.2 + 0.3 * p).unwrap(),
        ];
        let r = report_with(CoeffMatrix::zeros(2), vec![m1.clone(), m2.clone()]);
        let f = forecast(&r, &last).unwrap();
        assert!(f[0].sup_distance(&m1).unwrap() < 1e-12);
        assert!(f[1].sup_distance(&m2).unwrap() < 1e-12);

        let id = QuantileGrid::identity(g);
        let r = report_with(CoeffMatrix::identity(2), vec![id.clone(), id]);
        let f = forecast(&r, &last).unwrap();
        assert!(f[0].sup_distance(&last[0]).unwrap() < 1e-12);
        assert!(f[1].sup_distance(&last[1]).unwrap() < 1e-12);
        assert_eq!(forecast_horizon(&r, &last, 3).unwrap().len(), 3);
        assert!(forecast(&r, &last[..1]).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_optimal(
            v in prop::collection::vec(-2.0f64..2.0, 1..=6),
            probes in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 50),
        ) {
            let p = project_simplex(&v);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!(p.iter().sum::<f64>() <= 1.0 + 1e-12);
            let d = |x: &[f64]| x.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let dp = d(&p);
            for probe in probes {
                // scale a random point into the feasible set
                let x: Vec<f64> = probe[..v.len()].to_vec();
                let s: f64 = x.iter().sum();
                let x: Vec<f64> = if s > 1.0 { x.iter().map(|a| a / s).collect() } else { x };
                prop_assert!(dp <= d(&x) + 1e-12);
            }
        }

        #[test]
        fn feasible_unconstrained_optimum_is_returned(
            entries in prop::collection::vec(0.01f64..0.2, 3),
            diag in prop::collection::vec(0.5f64..2.0, 3),
        ) {
            let g0 = vec![
                vec![diag[0], 0.1, 0.0],
                vec![0.1, diag[1], 0.05],
                vec![0.0, 0.05, diag[2]],
            ];
            let gam0 = SquareMatrix::from_rows(&g0).unwrap();
            let b = gam0.mul_vec(&entries);
            let gp = gram_from(&g0, &[b.clone(), b.clone(), b]);
            let opts = FitOptions::default();
            let r = fit_row(&gp, 0, &opts).unwrap();
            let err: f64 = r.coeffs.iter().zip(&entries).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(err <= 10.0 * opts.tol, "err {}", err);
            for w in r.restart_objectives.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-15);
            }
        }
    }
}
