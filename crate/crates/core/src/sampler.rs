//! Seeded sampling of expansion coefficients and synthesis of the truncated
//! field
//!
//! ```text
//! Z_N(L, l) = sum_n a_n0 P~_n0(cos L) + 2 sum_{m=1}^N sum_{n=m}^N {a_nm cos(m l) + b_nm sin(m l)} P~_nm(cos L)
//! ```
//!
//! Coefficients of different orders are independent. Within order `m >= 1`
//! the stacked vector `(a_mm..a_Nm, b_mm..b_Nm)` is drawn from
//! `N(0, Gamma_m / 2)`; the order-0 vector `(a_00..a_N0)` from `N(0, F_0)`.
//!
//! # Random streams
//!
//! Every order has its own ChaCha8 stream: the generator is seeded with the
//! draw seed through `SeedableRng::seed_from_u64` and then switched to stream
//! `m`. Order `m` consumes `N - m + 1` standard normals at `m = 0` and
//! `2 (N - m + 1)` otherwise, cosine part first. Replicate `i` of an ensemble
//! with base seed `s` uses the seed [`replicate_seed`]`(s, i)`. Both rules
//! are part of the output format: changing them changes every realization.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::geom::LatLonGrid;
use crate::legendre::LegendreTable;
use crate::spectrum::{gamma_block, SpectrumError, SpectrumModel};

/// Jitter multipliers (times the mean diagonal) tried when a factorization
/// meets a negative pivot.
const JITTER_STEPS: [f64; 5] = [1e-14, 1e-13, 1e-12, 1e-11, 1e-10];

/// Pivots below this fraction of their own diagonal entry are treated as zero.
const PIVOT_RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error("order {order}: covariance factorization failed after jitter up to {jitter:e} x mean diagonal")]
    Factorization { order: usize, jitter: f64 },
    #[error("requested truncation {requested} exceeds the draw's truncation {available}")]
    Truncation { requested: usize, available: usize },
}

/// SplitMix64 finalizer applied to `base + (index + 1) * 0x9E3779B97F4A7C15`.
pub fn replicate_seed(base_seed: u64, index: u64) -> u64 {
    let mut z = base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard-normal generator for order `m` of a draw with `seed`.
pub fn order_stream(seed: u64, m: usize) -> impl FnMut() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(m as u64);
    move || StandardNormal.sample(&mut rng)
}

/// Lower-triangular `L` with `L L^T = a` for a positive semidefinite `a`.
///
/// Columns whose pivot falls to within `1e-12` of their diagonal entry are
/// zeroed, which handles singular blocks (zero `xi_n` or `lambda_m`) exactly.
/// Returns the index of the first clearly negative pivot on failure.
pub fn psd_cholesky(a: &DMatrix<f64>, negative_floor: f64) -> Result<DMatrix<f64>, usize> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d > PIVOT_RELATIVE_FLOOR * a[(j, j)].abs() && d > 0.0 {
            let root = d.sqrt();
            l[(j, j)] = root;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / root;
            }
        } else if d < -negative_floor {
            return Err(j);
        }
    }
    Ok(l)
}

/// [`psd_cholesky`] with escalating diagonal jitter.
pub fn factor_with_jitter(a: &DMatrix<f64>, order: usize) -> Result<DMatrix<f64>, SamplerError> {
    let n = a.nrows();
    let mean_diag = if n == 0 { 0.0 } else { a.trace() / n as f64 };
    let floor = crate::spectrum::PSD_TOLERANCE * mean_diag;
    if let Ok(l) = psd_cholesky(a, floor) {
        return Ok(l);
    }
    for eps in JITTER_STEPS {
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] += eps * mean_diag;
        }
        if let Ok(l) = psd_cholesky(&shifted, floor) {
            return Ok(l);
        }
    }
    Err(SamplerError::Factorization {
        order,
        jitter: JITTER_STEPS[JITTER_STEPS.len() - 1],
    })
}

#[derive(Debug, Clone)]
enum BandFactor {
    Zero,
    /// Standard deviations of independent coefficients.
    Diagonal(Vec<f64>),
    Lower(DMatrix<f64>),
}

/// One sampled set of coefficients `a_nm` (`0 <= m <= n <= N`) and `b_nm`
/// (`1 <= m <= n <= N`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientDraw {
    truncation: usize,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    seed: u64,
    model: Arc<SpectrumModel>,
}

impl CoefficientDraw {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model(&self) -> &Arc<SpectrumModel> {
        &self.model
    }

    pub fn a(&self, n: usize, m: usize) -> f64 {
        assert!(m <= n && n <= self.truncation);
        self.a[m][n - m]
    }

    /// Sine coefficient; `b_n0` is never sampled and reads as zero.
    pub fn b(&self, n: usize, m: usize) -> f64 {
        assert!(m <= n && n <= self.truncation);
        if m == 0 {
            0.0
        } else {
            self.b[m][n - m]
        }
    }

    /// `a_mm..a_Nm`
    pub fn a_order(&self, m: usize) -> &[f64] {
        &self.a[m]
    }

    /// `b_mm..b_Nm`, empty at `m = 0`.
    pub fn b_order(&self, m: usize) -> &[f64] {
        &self.b[m]
    }
}

/// Factorized coefficient covariances for one model and truncation; draws
/// are cheap once built.
#[derive(Debug, Clone)]
pub struct CoefficientSampler {
    model: Arc<SpectrumModel>,
    truncation: usize,
    factors: Vec<BandFactor>,
}

impl CoefficientSampler {
    pub fn new(model: Arc<SpectrumModel>, truncation: usize) -> Result<Self, SamplerError> {
        model.check_truncation(truncation)?;
        let active = model.active_orders(truncation);
        let factors = (0..=truncation)
            .into_par_iter()
            .map(|m| {
                if m > active {
                    return Ok(BandFactor::Zero);
                }
                Self::factor_order(&model, m, truncation)
            })
            .collect::<Result<Vec<_>, SamplerError>>()?;
        Ok(Self {
            model,
            truncation,
            factors,
        })
    }

    fn factor_order(model: &SpectrumModel, m: usize, truncation: usize) -> Result<BandFactor, SamplerError> {
        let block = gamma_block(model, m, truncation)?;
        if block.is_zero() {
            return Ok(BandFactor::Zero);
        }
        let scale = if m == 0 { 1.0 } else { 0.5 };
        if model.is_diagonal() {
            let sd: Vec<f64> = block.f().diagonal().iter().map(|v| (scale * v).sqrt()).collect();
            return Ok(BandFactor::Diagonal(sd));
        }
        let cov = if m == 0 {
            block.f().clone()
        } else {
            block.full_matrix() * scale
        };
        Ok(BandFactor::Lower(factor_with_jitter(&cov, m)?))
    }

    pub fn model(&self) -> &Arc<SpectrumModel> {
        &self.model
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn draw(&self, seed: u64) -> CoefficientDraw {
        let n_max = self.truncation;
        let (a, b): (Vec<Vec<f64>>, Vec<Vec<f64>>) = self
            .factors
            .iter()
            .enumerate()
            .map(|(m, factor)| {
                let k = n_max - m + 1;
                let width = if m == 0 { k } else { 2 * k };
                let stacked = match factor {
                    BandFactor::Zero => vec![0.0; width],
                    BandFactor::Diagonal(sd) => {
                        let mut z = order_stream(seed, m);
                        let mut out: Vec<f64> = (0..width).map(|_| z()).collect();
                        for (i, v) in out.iter_mut().enumerate() {
                            *v *= sd[i % k];
                        }
                        out
                    }
                    BandFactor::Lower(l) => {
                        let mut z = order_stream(seed, m);
                        let z = DVector::from_iterator(width, (0..width).map(|_| z()));
                        (l * z).as_slice().to_vec()
                    }
                };
                if m == 0 {
                    (stacked, Vec::new())
                } else {
                    let b = stacked[k..].to_vec();
                    let mut a = stacked;
                    a.truncate(k);
                    (a, b)
                }
            })
            .unzip();
        CoefficientDraw {
            truncation: n_max,
            a,
            b,
            seed,
            model: Arc::clone(&self.model),
        }
    }
}

pub fn draw_coefficients(model: &SpectrumModel, truncation: usize, seed: u64) -> Result<CoefficientDraw, SamplerError> {
    Ok(CoefficientSampler::new(Arc::new(model.clone()), truncation)?.draw(seed))
}

/// Field values on a grid, row-major by colatitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    grid: Arc<LatLonGrid>,
    values: Vec<f64>,
    seed: u64,
    truncation: usize,
    model: Arc<SpectrumModel>,
}

impl Realization {
    pub fn grid(&self) -> &LatLonGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_lon() + j]
    }

    /// Values along the parallel with colatitude index `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.n_lon();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn model(&self) -> &Arc<SpectrumModel> {
        &self.model
    }
}

/// Precomputed Legendre tables and trigonometric factors for one grid.
#[derive(Debug, Clone)]
pub struct SynthesisPlan {
    grid: Arc<LatLonGrid>,
    truncation: usize,
    max_order: usize,
    tables: Vec<LegendreTable>,
    cos: Vec<Vec<f64>>,
    sin: Vec<Vec<f64>>,
}

impl SynthesisPlan {
    /// Plan for degrees up to `truncation` and orders up to `max_order`.
    pub fn new(grid: Arc<LatLonGrid>, truncation: usize, max_order: usize) -> Self {
        let max_order = max_order.min(truncation);
        let tables = grid
            .colats()
            .par_iter()
            .map(|c| LegendreTable::with_max_order(truncation, max_order, c.cos().clamp(-1.0, 1.0)).expect("clamped"))
            .collect();
        let cos = (0..=max_order)
            .map(|m| grid.lons().iter().map(|l| (m as f64 * l).cos()).collect())
            .collect();
        let sin = (0..=max_order)
            .map(|m| grid.lons().iter().map(|l| (m as f64 * l).sin()).collect())
            .collect();
        Self {
            grid,
            truncation,
            max_order,
            tables,
            cos,
            sin,
        }
    }

    /// Plan covering every order the model can excite.
    pub fn for_model(grid: Arc<LatLonGrid>, model: &SpectrumModel, truncation: usize) -> Self {
        Self::new(grid, truncation, model.active_orders(truncation))
    }

    pub fn grid(&self) -> &Arc<LatLonGrid> {
        &self.grid
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Partial sum of the expansion over `n <= truncation` (and hence
    /// `m <= truncation`). Orders above the plan's `max_order` are assumed to
    /// carry zero coefficients.
    pub fn evaluate(&self, draw: &CoefficientDraw, truncation: usize) -> Result<Realization, SamplerError> {
        if truncation > draw.truncation {
            return Err(SamplerError::Truncation {
                requested: truncation,
                available: draw.truncation,
            });
        }
        if truncation > self.truncation {
            return Err(SamplerError::Truncation {
                requested: truncation,
                available: self.truncation,
            });
        }
        let top = self.max_order.min(truncation);
        let n_lon = self.grid.n_lon();
        let rows: Vec<Vec<f64>> = self
            .tables
            .par_iter()
            .map(|table| {
                let mut cos_amp = vec![0.0; top + 1];
                let mut sin_amp = vec![0.0; top + 1];
                for m in 0..=top {
                    let len = truncation - m + 1;
                    let p = &table.order(m)[..len];
                    cos_amp[m] = dot(&draw.a[m][..len], p);
                    if m > 0 {
                        sin_amp[m] = dot(&draw.b[m][..len], p);
                    }
                }
                let active: Vec<usize> = (1..=top).filter(|&m| cos_amp[m] != 0.0 || sin_amp[m] != 0.0).collect();
                (0..n_lon)
                    .map(|j| {
                        let mut band = 0.0;
                        for &m in &active {
                            band += cos_amp[m] * self.cos[m][j] + sin_amp[m] * self.sin[m][j];
                        }
                        cos_amp[0] + 2.0 * band
                    })
                    .collect()
            })
            .collect();
        Ok(Realization {
            grid: Arc::clone(&self.grid),
            values: rows.concat(),
            seed: draw.seed,
            truncation,
            model: Arc::clone(&draw.model),
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Evaluate a draw at its full truncation on `grid`.
pub fn synthesize(draw: &CoefficientDraw, grid: &LatLonGrid) -> Realization {
    let plan = SynthesisPlan::new(Arc::new(grid.clone()), draw.truncation, draw.truncation);
    plan.evaluate(draw, draw.truncation).expect("plan sized to the draw")
}

/// Independent realizations on a shared grid, each from seed
/// `replicate_seed(base_seed, index)`.
#[derive(Debug, Clone)]
pub struct Ensemble {
    sampler: CoefficientSampler,
    plan: SynthesisPlan,
}

impl Ensemble {
    pub fn new(model: SpectrumModel, truncation: usize, grid: LatLonGrid) -> Result<Self, SamplerError> {
        let model = Arc::new(model);
        let sampler = CoefficientSampler::new(Arc::clone(&model), truncation)?;
        let plan = SynthesisPlan::for_model(Arc::new(grid), &model, truncation);
        Ok(Self { sampler, plan })
    }

    pub fn sampler(&self) -> &CoefficientSampler {
        &self.sampler
    }

    pub fn plan(&self) -> &SynthesisPlan {
        &self.plan
    }

    pub fn realization(&self, base_seed: u64, index: u64) -> Realization {
        self.from_seed(replicate_seed(base_seed, index))
    }

    /// Realization for an explicit draw seed.
    pub fn from_seed(&self, seed: u64) -> Realization {
        let draw = self.sampler.draw(seed);
        self.plan
            .evaluate(&draw, self.sampler.truncation())
            .expect("plan sized to the sampler")
    }

    /// Lazily generated replicates `0..n_reps`.
    pub fn iter(&self, n_reps: usize, base_seed: u64) -> impl Iterator<Item = Realization> + '_ {
        (0..n_reps as u64).map(move |i| self.realization(base_seed, i))
    }

    /// All replicates, generated in parallel; order and values do not depend
    /// on the thread count.
    pub fn collect(&self, n_reps: usize, base_seed: u64) -> Vec<Realization> {
        (0..n_reps as u64)
            .into_par_iter()
            .map(|i| self.realization(base_seed, i))
            .collect()
    }
}

pub fn ensemble(
    model: SpectrumModel,
    truncation: usize,
    grid: LatLonGrid,
    n_reps: usize,
    base_seed: u64,
) -> Result<Vec<Realization>, SamplerError> {
    Ok(Ensemble::new(model, truncation, grid)?.collect(n_reps, base_seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{LambdaFamily, RhoFamily, XiFamily};
    use rand::Rng;
    use std::f64::consts::PI;

    fn matern(alpha: usize, rho: RhoFamily, kappa: f64) -> SpectrumModel {
        SpectrumModel::new(
            XiFamily::LegendreMatern { tau2: 100.0, nu: 1.5 },
            rho,
            LambdaFamily::Indicator { alpha },
            kappa,
        )
        .unwrap()
    }

    /// Literal double sum of the truncated expansion at one point.
    fn direct_sum(draw: &CoefficientDraw, colat: f64, lon: f64) -> f64 {
        let n_max = draw.truncation();
        let t = LegendreTable::new(n_max, colat.cos()).unwrap();
        let mut z = 0.0;
        for n in 0..=n_max {
            z += draw.a(n, 0) * t.get(n, 0);
        }
        for m in 1..=n_max {
            for n in m..=n_max {
                let ml = m as f64 * lon;
                z += 2.0 * (draw.a(n, m) * ml.cos() + draw.b(n, m) * ml.sin()) * t.get(n, m);
            }
        }
        z
    }

    #[test]
    fn kronecker_draw_is_scaled_normal_stream() {
        let model = matern(6, RhoFamily::Kronecker, 0.0);
        let draw = draw_coefficients(&model, 9, 1234).unwrap();
        for m in 0..=9 {
            let k = 9 - m + 1;
            let mut z = order_stream(1234, m);
            let zs: Vec<f64> = (0..if m == 0 { k } else { 2 * k }).map(|_| z()).collect();
            let scale = if m == 0 { 1.0 } else { 0.5 };
            for n in m..=9 {
                let sd = (model.xi(n) * model.lambda(m) * scale).sqrt();
                assert_eq!(draw.a(n, m), sd * zs[n - m]);
                if m > 0 {
                    assert_eq!(draw.b(n, m), sd * zs[k + n - m]);
                }
            }
        }
    }

    #[test]
    fn dense_factor_reproduces_diagonal_path() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.0, 0.25, 1e-30]));
        let l = psd_cholesky(&d, 0.0).unwrap();
        assert_eq!(l.diagonal().as_slice(), &[2.0, 0.0, 0.5, 1e-15]);
        assert_eq!(l.lower_triangle(), l);
    }

    #[test]
    fn semidefinite_factorization() {
        // rank one
        let v = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let a = &v * v.transpose();
        let l = psd_cholesky(&a, 1e-12).unwrap();
        assert!((&l * l.transpose() - &a).abs().max() < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(psd_cholesky(&bad, 1e-12), Err(1));
        assert_eq!(
            factor_with_jitter(&bad, 7),
            Err(SamplerError::Factorization {
                order: 7,
                jitter: 1e-10
            })
        );
    }

    #[test]
    fn general_path_matches_gamma() {
        let model = matern(8, RhoFamily::Exponential { phi: 1.0 }, 1.0);
        let block = gamma_block(&model, 2, 12).unwrap();
        let half = block.full_matrix() * 0.5;
        let l = factor_with_jitter(&half, 2).unwrap();
        assert!((&l * l.transpose() - &half).abs().max() < 1e-15);
    }

    #[test]
    fn order_zero_field_is_constant() {
        let model = matern(4, RhoFamily::Kronecker, 0.0);
        let draw = draw_coefficients(&model, 0, 9).unwrap();
        let grid = LatLonGrid::uniform(7, 9).unwrap();
        let r = synthesize(&draw, &grid);
        let expect = draw.a(0, 0) / (4.0 * PI).sqrt();
        assert!(r.values().iter().all(|v| (v - expect).abs() <= 1e-15));
    }

    #[test]
    fn longitudinally_independent_realizations() {
        let model = matern(0, RhoFamily::Exponential { phi: 0.7 }, 1.0);
        let draw = draw_coefficients(&model, 40, 5).unwrap();
        let grid = LatLonGrid::uniform(20, 33).unwrap();
        let r = synthesize(&draw, &grid);
        for i in 0..grid.n_colat() {
            let row = r.row(i);
            let spread = row.iter().fold(f64::MIN, |a, &b| a.max(b)) - row.iter().fold(f64::MAX, |a, &b| a.min(b));
            assert!(spread <= 1e-12);
        }
    }

    #[test]
    fn synthesis_matches_direct_sum() {
        let model = matern(7, RhoFamily::Exponential { phi: 0.5 }, 1.3);
        let draw = draw_coefficients(&model, 25, 77).unwrap();
        let grid = LatLonGrid::uniform(31, 47).unwrap();
        let r = synthesize(&draw, &grid);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let (i, j) = (rng.random_range(0..31), rng.random_range(0..47));
            let expect = direct_sum(&draw, grid.colats()[i], grid.lons()[j]);
            assert!((r.value(i, j) - expect).abs() <= 1e-10);
        }
    }

    #[test]
    fn nested_truncation_is_partial_sum() {
        let model = matern(30, RhoFamily::Kronecker, 0.0);
        let draw = draw_coefficients(&model, 30, 3).unwrap();
        let plan = SynthesisPlan::for_model(Arc::new(LatLonGrid::uniform(6, 8).unwrap()), &model, 30);
        let short = plan.evaluate(&draw, 12).unwrap();
        let mut cut = draw.clone();
        cut.truncation = 12;
        cut.a = (0..=12).map(|m| draw.a[m][..13 - m].to_vec()).collect();
        cut.b = (0..=12)
            .map(|m| draw.b[m][..if m == 0 { 0 } else { 13 - m }].to_vec())
            .collect();
        let direct = synthesize(&cut, plan.grid());
        for (x, y) in short.values().iter().zip(direct.values()) {
            assert!((x - y).abs() <= 1e-13);
        }
        assert!(plan.evaluate(&draw, 31).is_err());
    }

    #[test]
    fn draws_are_deterministic() {
        let model = matern(8, RhoFamily::Exponential { phi: 1.0 }, 1.0);
        let a = draw_coefficients(&model, 15, 42).unwrap();
        let b = draw_coefficients(&model, 15, 42).unwrap();
        assert_eq!(a, b);
        let c = draw_coefficients(&model, 15, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn same_seed_shares_normals_across_alpha() {
        // realizations for different alpha are driven by the same normals
        let lo = draw_coefficients(&matern(2, RhoFamily::Kronecker, 0.0), 10, 8).unwrap();
        let hi = draw_coefficients(&matern(8, RhoFamily::Kronecker, 0.0), 10, 8).unwrap();
        for m in 0..=2 {
            assert_eq!(lo.a_order(m), hi.a_order(m));
            assert_eq!(lo.b_order(m), hi.b_order(m));
        }
        assert!(lo.a_order(5).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn inadmissible_truncation_propagates() {
        let model = SpectrumModel::new(
            XiFamily::Custom(vec![1.0, 0.5]),
            RhoFamily::Kronecker,
            LambdaFamily::Ones,
            0.0,
        )
        .unwrap();
        assert!(matches!(
            draw_coefficients(&model, 4, 1),
            Err(SamplerError::Spectrum(SpectrumError::SequenceTooShort { .. }))
        ));
    }

    #[test]
    fn ensemble_determinism_and_independence() {
        let model = matern(5, RhoFamily::Kronecker, 0.0);
        let grid = LatLonGrid::uniform(5, 6).unwrap();
        let e1 = ensemble(model.clone(), 10, grid.clone(), 2, 99).unwrap();
        let e2 = ensemble(model.clone(), 10, grid.clone(), 2, 99).unwrap();
        assert_eq!(e1, e2);
        assert_ne!(e1[0].values(), e1[1].values());
        let ens = Ensemble::new(model, 10, grid).unwrap();
        let lazy: Vec<Realization> = ens.iter(2, 99).collect();
        assert_eq!(lazy, e1);
    }

    #[test]
    fn replicate_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| replicate_seed(7, i)).collect();
        assert_eq!(seeds.len(), 10_000);
        // frozen value: the derivation rule is part of the output format
        assert_eq!(replicate_seed(0, 0), 0xE220A8397B1DCDAF);
    }
}
