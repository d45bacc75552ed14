//! Empirical checks of simulated ensembles: local variograms along parallels,
//! Monte-Carlo covariances and truncation-error convergence.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{LatLonGrid, SpherePoint};
use crate::quadrature::gauss_legendre;
use crate::sampler::{replicate_seed, CoefficientSampler, Realization, SamplerError, SynthesisPlan};
use crate::spectrum::SpectrumModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("no realizations supplied")]
    Empty,
    #[error("need at least {needed} realizations, got {got}")]
    TooFewReplicates { needed: usize, got: usize },
    #[error("realizations do not share one grid")]
    GridMismatch,
    #[error("colatitude {0} is not a grid parallel")]
    NotOnGrid(f64),
    #[error("point ({0}, {1}) is not a grid node")]
    PointNotOnGrid(f64, f64),
    #[error("invalid lag bins: {0}")]
    Bins(String),
    #[error("invalid convergence setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// Lag classes centred on `k * width` for `k = 1..=floor(max_lag / width + 1/2)`;
/// class `k` collects lags in `[(k - 1/2) width, (k + 1/2) width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagBins {
    pub width: f64,
    pub max_lag: f64,
}

impl LagBins {
    /// Width equal to the longitude spacing of an equispaced grid, lags up to pi.
    pub fn for_grid(grid: &LatLonGrid) -> Self {
        Self {
            width: TAU / grid.n_lon() as f64,
            max_lag: PI,
        }
    }

    fn count(&self) -> usize {
        (self.max_lag / self.width + 0.5).floor() as usize
    }

    fn index(&self, lag: f64) -> Option<usize> {
        let k = (lag / self.width + 0.5).floor() as usize;
        (k >= 1 && k <= self.count()).then_some(k - 1)
    }
}

/// Per-lag spread of the single-replicate variograms.
#[derive(Debug, Clone, PartialEq)]
pub struct VariogramEnvelope {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub q025: Vec<f64>,
    pub q975: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariogramEstimate {
    pub colat: f64,
    /// Bin centres.
    pub lags: Vec<f64>,
    /// Mean over replicates and pairs; 0 for empty bins.
    pub gamma_hat: Vec<f64>,
    /// Pairs per bin summed over replicates.
    pub n_pairs: Vec<usize>,
    pub envelope: VariogramEnvelope,
}

/// Method-of-moments semivariogram along the parallel at `colat`:
/// the mean of `(Z(L, l + h) - Z(L, l))^2 / 2` over pairs in each lag class.
pub fn empirical_variogram(
    realizations: &[Realization],
    colat: f64,
    bins: LagBins,
) -> Result<VariogramEstimate, DiagnosticsError> {
    let grid = shared_grid(realizations)?;
    if !(bins.width > 0.0 && bins.max_lag >= bins.width) {
        return Err(DiagnosticsError::Bins(format!(
            "width {} max_lag {}",
            bins.width, bins.max_lag
        )));
    }
    let row = grid.colat_index(colat).ok_or(DiagnosticsError::NotOnGrid(colat))?;
    let lons = grid.lons();
    let n_bins = bins.count();

    let mut pairs = Vec::new();
    let mut per_bin = vec![0usize; n_bins];
    for j in 0..lons.len() {
        for k in (j + 1)..lons.len() {
            let mut d = (lons[k] - lons[j]).abs();
            if d > PI {
                d = TAU - d;
            }
            if let Some(b) = bins.index(d) {
                pairs.push((j, k, b));
                per_bin[b] += 1;
            }
        }
    }

    let per_rep: Vec<Vec<f64>> = realizations
        .par_iter()
        .map(|r| {
            let z = r.row(row);
            let mut sums = vec![0.0; n_bins];
            for &(j, k, b) in &pairs {
                let d = z[k] - z[j];
                sums[b] += 0.5 * d * d;
            }
            sums.iter()
                .zip(&per_bin)
                .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                .collect()
        })
        .collect();

    let n_reps = realizations.len();
    let mut gamma_hat = vec![0.0; n_bins];
    let mut envelope = VariogramEnvelope {
        min: vec![0.0; n_bins],
        max: vec![0.0; n_bins],
        q025: vec![0.0; n_bins],
        q975: vec![0.0; n_bins],
    };
    for b in 0..n_bins {
        let mut column: Vec<f64> = per_rep.iter().map(|v| v[b]).collect();
        gamma_hat[b] = column.iter().sum::<f64>() / n_reps as f64;
        column.sort_by(f64::total_cmp);
        envelope.min[b] = column[0];
        envelope.max[b] = column[n_reps - 1];
        envelope.q025[b] = quantile_sorted(&column, 0.025);
        envelope.q975[b] = quantile_sorted(&column, 0.975);
    }
    Ok(VariogramEstimate {
        colat,
        lags: (1..=n_bins).map(|k| k as f64 * bins.width).collect(),
        gamma_hat,
        n_pairs: per_bin.iter().map(|c| c * n_reps).collect(),
        envelope,
    })
}

/// Linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn shared_grid(realizations: &[Realization]) -> Result<&LatLonGrid, DiagnosticsError> {
    let first = realizations.first().ok_or(DiagnosticsError::Empty)?.grid();
    if realizations.iter().any(|r| r.grid() != first) {
        return Err(DiagnosticsError::GridMismatch);
    }
    Ok(first)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCovariance {
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
}

/// Sample covariance across replicates of the values at two grid nodes.
///
/// The standard error is the sample standard deviation of the centred
/// products divided by `sqrt(n)`.
pub fn mc_covariance(
    realizations: &[Realization],
    p1: &SpherePoint,
    p2: &SpherePoint,
) -> Result<McCovariance, DiagnosticsError> {
    let grid = shared_grid(realizations)?;
    let n = realizations.len();
    if n < 2 {
        return Err(DiagnosticsError::TooFewReplicates { needed: 2, got: n });
    }
    let locate = |p: &SpherePoint| {
        grid.locate(p)
            .ok_or(DiagnosticsError::PointNotOnGrid(p.colat(), p.lon()))
    };
    let (i1, j1) = locate(p1)?;
    let (i2, j2) = locate(p2)?;
    let x: Vec<f64> = realizations.iter().map(|r| r.value(i1, j1)).collect();
    let y: Vec<f64> = realizations.iter().map(|r| r.value(i2, j2)).collect();
    Ok(sample_covariance(&x, &y))
}

pub fn sample_covariance(x: &[f64], y: &[f64]) -> McCovariance {
    let n = x.len();
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let products: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let estimate = products.iter().sum::<f64>() / (nf - 1.0);
    let mean_p = products.iter().sum::<f64>() / nf;
    let var_p = products.iter().map(|p| (p - mean_p).powi(2)).sum::<f64>() / (nf - 1.0);
    McCovariance {
        estimate,
        std_error: (var_p / nf).sqrt(),
        n,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub truncations: Vec<usize>,
    pub reference: usize,
    /// Mean over replicates of `max_grid |Z_N - Z_ref|^2`.
    pub errors: Vec<f64>,
    /// Mean over replicates of `max_grid |Z_N - Z_ref|`.
    pub max_abs_errors: Vec<f64>,
    /// OLS slope of `log errors` against `log N`.
    pub fitted_slope: f64,
    /// OLS slope of `log max_abs_errors` against `log N`.
    pub max_abs_slope: f64,
    /// Tail sums of the squared L2 error between each `N` and the reference.
    pub theory: Vec<f64>,
}

/// Truncation error of nested partial sums against a reference expansion.
///
/// Every replicate draws coefficients once at `reference`; `Z_N` is the
/// partial sum of that same draw over `n <= N`.
pub fn convergence_study(
    model: &SpectrumModel,
    reference: usize,
    truncations: &[usize],
    grid: &LatLonGrid,
    n_reps: usize,
    base_seed: u64,
) -> Result<ConvergenceStudy, DiagnosticsError> {
    if truncations.is_empty() || n_reps == 0 {
        return Err(DiagnosticsError::Setup(
            "need at least one truncation and one replicate".into(),
        ));
    }
    if truncations.windows(2).any(|w| w[0] >= w[1]) || truncations[0] == 0 {
        return Err(DiagnosticsError::Setup(
            "truncations must be positive and strictly increasing".into(),
        ));
    }
    if *truncations.last().unwrap() >= reference {
        return Err(DiagnosticsError::Setup(
            "every truncation must be below the reference".into(),
        ));
    }
    let model = Arc::new(model.clone());
    let sampler = CoefficientSampler::new(Arc::clone(&model), reference)?;
    let plan = SynthesisPlan::for_model(Arc::new(grid.clone()), &model, reference);

    let per_rep: Vec<Vec<f64>> = (0..n_reps as u64)
        .into_par_iter()
        .map(|i| {
            let draw = sampler.draw(replicate_seed(base_seed, i));
            let truth = plan.evaluate(&draw, reference).expect("within reference");
            truncations
                .iter()
                .map(|&n| {
                    let approx = plan.evaluate(&draw, n).expect("within reference");
                    truth
                        .values()
                        .iter()
                        .zip(approx.values())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .collect()
        })
        .collect();

    let k = truncations.len();
    let mut max_abs_errors = vec![0.0; k];
    let mut errors = vec![0.0; k];
    for rep in &per_rep {
        for (t, e) in rep.iter().enumerate() {
            max_abs_errors[t] += e;
            errors[t] += e * e;
        }
    }
    for t in 0..k {
        max_abs_errors[t] /= n_reps as f64;
        errors[t] /= n_reps as f64;
    }
    let log_n: Vec<f64> = truncations.iter().map(|&n| (n as f64).ln()).collect();
    let fitted_slope = ols_slope(&log_n, &errors.iter().map(|e| e.ln()).collect::<Vec<_>>());
    let max_abs_slope = ols_slope(&log_n, &max_abs_errors.iter().map(|e| e.ln()).collect::<Vec<_>>());
    let theory = truncations
        .iter()
        .map(|&n| l2_error_theoretical(&model, n, reference))
        .collect();
    Ok(ConvergenceStudy {
        truncations: truncations.to_vec(),
        reference,
        errors,
        max_abs_errors,
        fitted_slope,
        max_abs_slope,
        theory,
    })
}

/// Squared L2 distance between expansions truncated at `truncation` and at
/// `horizon`:
/// `sum_{n=N+1}^{horizon} [f_0(n,n) + 2 sum_{m=1}^n f_m(n,n)]`.
pub fn l2_error_theoretical(model: &SpectrumModel, truncation: usize, horizon: usize) -> f64 {
    // orders with lambda_m = 0 contribute exact zeros
    let top = model.lambda_family().max_active_order().unwrap_or(usize::MAX);
    ((truncation + 1)..=horizon)
        .map(|n| {
            let bands: f64 = (1..=n.min(top)).map(|m| model.f_unchecked(m, n, n)).sum();
            model.f_unchecked(0, n, n) + 2.0 * bands
        })
        .sum()
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Spearman rank correlation, average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rx = ranks(x);
    let ry = ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// A grid whose colatitudes are Gauss-Legendre nodes in `cos L`, with the
/// per-node area weights: summing `w_ij f(L_i, l_j)` integrates `f` over the
/// sphere exactly for band-limited `f` of degree below `2 n_colat` in `cos L`
/// and `n_lon` in longitude.
pub fn quadrature_grid(n_colat: usize, n_lon: usize) -> (LatLonGrid, Vec<f64>) {
    let (x, w) = gauss_legendre(n_colat);
    // x ascending means colatitude descending
    let colats: Vec<f64> = x.iter().rev().map(|x| x.acos()).collect();
    let lat_w: Vec<f64> = w.iter().rev().copied().collect();
    let grid = LatLonGrid::parallels(colats, n_lon).expect("interior nodes");
    let dl = TAU / n_lon as f64;
    let weights = lat_w
        .iter()
        .flat_map(|wi| std::iter::repeat_n(wi * dl, n_lon))
        .collect();
    (grid, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::CovarianceSpec;
    use crate::sampler::{draw_coefficients, ensemble, synthesize};
    use crate::spectrum::{LambdaFamily, RhoFamily, XiFamily};

    fn matern(alpha: usize) -> SpectrumModel {
        SpectrumModel::new(
            XiFamily::LegendreMatern { tau2: 100.0, nu: 1.5 },
            RhoFamily::Kronecker,
            LambdaFamily::Indicator { alpha },
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn two_point_parallel_variogram() {
        let grid = LatLonGrid::parallels(vec![1.0], 2).unwrap();
        let r = ensemble(matern(4), 8, grid.clone(), 1, 3).unwrap();
        let est = empirical_variogram(&r, 1.0, LagBins::for_grid(&grid)).unwrap();
        let (z1, z2) = (r[0].value(0, 0), r[0].value(0, 1));
        assert_eq!(est.lags, vec![PI]);
        assert_eq!(est.gamma_hat, vec![0.5 * (z2 - z1) * (z2 - z1)]);
        assert_eq!(est.n_pairs, vec![1]);
    }

    #[test]
    fn longitudinally_independent_variogram_vanishes() {
        let grid = LatLonGrid::parallels(vec![0.8, 2.0], 24).unwrap();
        let r = ensemble(matern(0), 30, grid.clone(), 20, 1).unwrap();
        let est = empirical_variogram(&r, 2.0, LagBins::for_grid(&grid)).unwrap();
        assert!(est.gamma_hat.iter().all(|g| *g <= 1e-20));
        assert_eq!(est.lags.len(), 12);
        // 24 points: lags 1..11 have 24 pairs, lag 12 (= pi) has 12
        assert_eq!(est.n_pairs[0], 24 * 20);
        assert_eq!(est.n_pairs[11], 12 * 20);
    }

    #[test]
    fn empty_bins_report_zero_pairs() {
        let grid = LatLonGrid::parallels(vec![1.0], 4).unwrap();
        let r = ensemble(matern(3), 6, grid, 3, 3).unwrap();
        let bins = LagBins {
            width: PI / 4.0,
            max_lag: PI,
        };
        let est = empirical_variogram(&r, 1.0, bins).unwrap();
        assert_eq!(est.n_pairs, vec![0, 12, 0, 6]);
        assert_eq!(est.gamma_hat[0], 0.0);
    }

    #[test]
    fn variogram_errors() {
        let g1 = LatLonGrid::parallels(vec![1.0], 4).unwrap();
        let g2 = LatLonGrid::parallels(vec![1.0], 5).unwrap();
        let mut r = ensemble(matern(3), 6, g1.clone(), 1, 3).unwrap();
        assert_eq!(
            empirical_variogram(&r, 1.1, LagBins::for_grid(&g1)),
            Err(DiagnosticsError::NotOnGrid(1.1))
        );
        r.extend(ensemble(matern(3), 6, g2, 1, 3).unwrap());
        assert_eq!(
            empirical_variogram(&r, 1.0, LagBins::for_grid(&g1)),
            Err(DiagnosticsError::GridMismatch)
        );
        assert_eq!(
            empirical_variogram(&[], 1.0, LagBins::for_grid(&g1)),
            Err(DiagnosticsError::Empty)
        );
    }

    #[test]
    fn mc_covariance_edge_cases() {
        let grid = LatLonGrid::parallels(vec![0.7, 1.9], 6).unwrap();
        let one = ensemble(matern(5), 10, grid.clone(), 1, 0).unwrap();
        let p = grid.point(0, 0);
        assert_eq!(
            mc_covariance(&one, &p, &p),
            Err(DiagnosticsError::TooFewReplicates { needed: 2, got: 1 })
        );
        let two = ensemble(matern(5), 10, grid.clone(), 2, 0).unwrap();
        let est = mc_covariance(&two, &p, &grid.point(1, 3)).unwrap();
        assert!(est.std_error.is_finite() && est.estimate.is_finite());
        assert_eq!(est.n, 2);
        let off = SpherePoint::new(0.7, 0.1).unwrap();
        assert!(matches!(
            mc_covariance(&two, &p, &off),
            Err(DiagnosticsError::PointNotOnGrid(..))
        ));
    }

    #[test]
    fn independent_model_has_perfect_dependence_along_parallels() {
        let grid = LatLonGrid::parallels(vec![1.2], 8).unwrap();
        let r = ensemble(matern(0), 20, grid.clone(), 500, 4).unwrap();
        let p = grid.point(0, 0);
        let q = grid.point(0, 5);
        let var = mc_covariance(&r, &p, &p).unwrap();
        let cross = mc_covariance(&r, &p, &q).unwrap();
        assert!((var.estimate - cross.estimate).abs() <= 1e-12 * var.estimate);
        let theory = CovarianceSpec::new(matern(0), 20).unwrap().variance(1.2);
        assert!((var.estimate - theory).abs() <= 4.0 * var.std_error);
    }

    #[test]
    fn l2_tail_examples() {
        let iso = SpectrumModel::new(
            XiFamily::LegendreMatern { tau2: 100.0, nu: 1.5 },
            RhoFamily::Kronecker,
            LambdaFamily::Ones,
            0.0,
        )
        .unwrap();
        let direct: f64 = (21..=300).map(|n| (2.0 * n as f64 + 1.0) * iso.xi(n)).sum();
        assert!((l2_error_theoretical(&iso, 20, 300) - direct).abs() <= 1e-14 * direct);

        let m = matern(10);
        let one = l2_error_theoretical(&m, 99, 100);
        let bands: f64 = (1..=100).map(|k| m.f(k, 100, 100).unwrap()).sum();
        assert_eq!(one, m.f(0, 100, 100).unwrap() + 2.0 * bands);

        let shifted = SpectrumModel::new(
            XiFamily::LegendreMatern { tau2: 100.0, nu: 1.5 },
            RhoFamily::Exponential { phi: 1.0 },
            LambdaFamily::Indicator { alpha: 10 },
            0.0,
        )
        .unwrap();
        let k1 = shifted.with_kappa(1.0).unwrap();
        for n in [5, 50, 200] {
            assert_eq!(
                l2_error_theoretical(&shifted, n, 1000),
                l2_error_theoretical(&k1, n, 1000)
            );
        }
    }

    #[test]
    fn l2_tail_is_nonincreasing_and_bounded() {
        let m = matern(10);
        let horizon = 4096;
        let c = l2_error_theoretical(&m, 50, horizon) * 50f64.powi(2);
        let mut prev = f64::INFINITY;
        for n in 50..=400 {
            let e = l2_error_theoretical(&m, n, horizon);
            assert!(e <= prev);
            assert!(e <= c * (n as f64).powi(-2) * (1.0 + 1e-12), "N={n}");
            prev = e;
        }
    }

    #[test]
    fn single_dropped_band() {
        let m = matern(6);
        let grid = LatLonGrid::uniform(8, 12).unwrap();
        let study = convergence_study(&m, 20, &[19], &grid, 3, 5).unwrap();
        assert!(study.errors[0] > 0.0);
        // telescoping: the error is exactly the n = 20 band of each draw
        let sampler = CoefficientSampler::new(Arc::new(m.clone()), 20).unwrap();
        let plan = SynthesisPlan::for_model(Arc::new(grid.clone()), &m, 20);
        let mut expect = 0.0;
        for i in 0..3 {
            let d = sampler.draw(replicate_seed(5, i));
            let full = plan.evaluate(&d, 20).unwrap();
            let part = plan.evaluate(&d, 19).unwrap();
            expect += full
                .values()
                .iter()
                .zip(part.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
        }
        assert!((study.max_abs_errors[0] - expect / 3.0).abs() <= 1e-15);
    }

    #[test]
    fn amplitude_scaling() {
        let m = matern(6);
        let doubled = m.scaled(2.0).unwrap();
        let grid = LatLonGrid::uniform(10, 10).unwrap();
        let a = convergence_study(&m, 40, &[5, 10, 20], &grid, 4, 8).unwrap();
        let b = convergence_study(&doubled, 40, &[5, 10, 20], &grid, 4, 8).unwrap();
        for t in 0..3 {
            assert!((b.max_abs_errors[t] / a.max_abs_errors[t] - 2f64.sqrt()).abs() < 1e-12);
            assert!((b.errors[t] / a.errors[t] - 2.0).abs() < 1e-12);
        }
        assert!((a.fitted_slope - b.fitted_slope).abs() < 1e-10);
    }

    #[test]
    fn convergence_setup_errors() {
        let m = matern(3);
        let g = LatLonGrid::uniform(4, 4).unwrap();
        assert!(convergence_study(&m, 10, &[10], &g, 1, 0).is_err());
        assert!(convergence_study(&m, 10, &[4, 3], &g, 1, 0).is_err());
        assert!(convergence_study(&m, 10, &[], &g, 1, 0).is_err());
        assert!(convergence_study(&m, 10, &[3], &g, 0, 0).is_err());
    }

    #[test]
    fn surface_integral_matches_l2_tail() {
        // E ||Z_H - Z_N||^2 over the sphere equals the tail sum; here the mean
        // over replicates of the quadrature integral is compared within 4 SE
        let m = SpectrumModel::new(
            XiFamily::Multiquadric { delta: 0.7 },
            RhoFamily::Exponential { phi: 0.8 },
            LambdaFamily::Indicator { alpha: 4 },
            1.0,
        )
        .unwrap();
        let (horizon, trunc) = (12, 4);
        let (grid, w) = quadrature_grid(horizon + 1, 2 * horizon + 2);
        let sampler = CoefficientSampler::new(Arc::new(m.clone()), horizon).unwrap();
        let plan = SynthesisPlan::for_model(Arc::new(grid), &m, horizon);
        let vals: Vec<f64> = (0..4000)
            .map(|i| {
                let d = sampler.draw(replicate_seed(21, i));
                let full = plan.evaluate(&d, horizon).unwrap();
                let part = plan.evaluate(&d, trunc).unwrap();
                full.values()
                    .iter()
                    .zip(part.values())
                    .zip(&w)
                    .map(|((a, b), w)| w * (a - b) * (a - b))
                    .sum()
            })
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let theory = l2_error_theoretical(&m, trunc, horizon);
        assert!((mean - theory).abs() <= 4.0 * se, "{mean} vs {theory} (se {se})");
    }

    #[test]
    fn quadrature_grid_integrates_constants() {
        let (grid, w) = quadrature_grid(5, 7);
        assert_eq!(grid.len(), w.len());
        assert!((w.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-13);
        // one realization of the order-0 field integrates to 4 pi Z
        let m = matern(3);
        let d = draw_coefficients(&m, 0, 1).unwrap();
        let r = synthesize(&d, &grid);
        let total: f64 = r.values().iter().zip(&w).map(|(v, w)| v * w).sum();
        assert!((total - 4.0 * PI * r.values()[0]).abs() < 1e-13);
    }

    #[test]
    fn rank_statistics() {
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 25.0, 100.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
        assert!((ols_slope(&[0.0, 1.0, 2.0], &[1.0, -1.0, -3.0]) + 2.0).abs() < 1e-15);
        assert_eq!(quantile_sorted(&[0.0, 10.0], 0.25), 2.5);
    }
}
