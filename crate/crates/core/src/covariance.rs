//! Truncated covariance series of an axially symmetric process.
//!
//! `cov(L1, L2, dlon)` sums
//!
//! ```text
//! sum_{n,n'} f_0(n,n') P~_n0(cos L1) P~_n'0(cos L2)
//!   + 2 sum_{m>=1} sum_{n,n'>=m} {f_m(n,n') cos(m dlon) + g_m(n,n') sin(m dlon)} P~_nm(cos L1) P~_n'm(cos L2)
//! ```
//!
//! over `m, n, n' <= N`, evaluated per order as bilinear forms in the vectors
//! `u_m(L) = (P~_nm(cos L))_n`.
//!
//! For fields drawn by [`crate::sampler`] the covariance of the values at
//! `(L1, lon1)` and `(L2, lon2)` is `cov(L1, L2, lon2 - lon1)`; see
//! [`CovarianceSpec::cov_points`].

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::geom::SpherePoint;
use crate::legendre::{legendre_p_unchecked, LegendreTable};
use crate::spectrum::{SpectrumError, SpectrumModel, XiFamily};

#[derive(Debug, Clone)]
enum Coeffs {
    Zero,
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl Coeffs {
    fn from_fn(k: usize, diagonal_only: bool, entry: impl Fn(usize, usize) -> f64) -> Self {
        if diagonal_only {
            let d: Vec<f64> = (0..k).map(|i| entry(i, i)).collect();
            if d.iter().all(|v| *v == 0.0) {
                Coeffs::Zero
            } else {
                Coeffs::Diagonal(d)
            }
        } else {
            let m = DMatrix::from_fn(k, k, entry);
            if m.iter().all(|v| *v == 0.0) {
                Coeffs::Zero
            } else {
                Coeffs::Dense(m)
            }
        }
    }

    /// `u^T A v`
    fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            Coeffs::Zero => 0.0,
            Coeffs::Diagonal(d) => d.iter().zip(u).zip(v).map(|((d, a), b)| d * a * b).sum(),
            Coeffs::Dense(a) => {
                let v = DVector::from_column_slice(v);
                let av = a * v;
                av.iter().zip(u).map(|(x, y)| x * y).sum()
            }
        }
    }
}

#[derive(Debug, Clone)]
struct OrderTerms {
    f: Coeffs,
    g: Coeffs,
}

/// A model with a shared truncation `N` for orders and degrees.
#[derive(Debug, Clone)]
pub struct CovarianceSpec {
    model: SpectrumModel,
    truncation: usize,
    orders: Vec<OrderTerms>,
}

impl CovarianceSpec {
    pub fn new(model: SpectrumModel, truncation: usize) -> Result<Self, SpectrumError> {
        model.check_truncation(truncation)?;
        let kron_f = matches!(model.rho_family(), crate::spectrum::RhoFamily::Kronecker);
        let orders = (0..=model.active_orders(truncation))
            .map(|m| {
                let k = truncation - m + 1;
                let f = Coeffs::from_fn(k, kron_f, |i, j| model.f_unchecked(m, m + i, m + j));
                let g = if m == 0 || model.kappa() == 0.0 {
                    Coeffs::Zero
                } else {
                    Coeffs::from_fn(k, false, |i, j| model.g_unchecked(m, m + i, m + j))
                };
                OrderTerms { f, g }
            })
            .collect();
        Ok(Self {
            model,
            truncation,
            orders,
        })
    }

    pub fn model(&self) -> &SpectrumModel {
        &self.model
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    fn table(&self, colat: f64) -> LegendreTable {
        LegendreTable::with_max_order(self.truncation, self.orders.len() - 1, colat.cos().clamp(-1.0, 1.0))
            .expect("clamped argument")
    }

    /// `C(L1, L2, dlon)`.
    pub fn cov(&self, colat1: f64, colat2: f64, dlon: f64) -> f64 {
        let t1 = self.table(colat1);
        let t2 = self.table(colat2);
        self.cov_with_tables(&t1, &t2, dlon)
    }

    /// Same as [`cov`](Self::cov) with precomputed tables at both colatitudes.
    pub fn cov_with_tables(&self, t1: &LegendreTable, t2: &LegendreTable, dlon: f64) -> f64 {
        let mut total = self.orders[0].f.bilinear(t1.order(0), t2.order(0));
        for (m, terms) in self.orders.iter().enumerate().skip(1) {
            let (u, v) = (t1.order(m), t2.order(m));
            let mut band = 0.0;
            if !matches!(terms.f, Coeffs::Zero) {
                band += (m as f64 * dlon).cos() * terms.f.bilinear(u, v);
            }
            if !matches!(terms.g, Coeffs::Zero) {
                band += (m as f64 * dlon).sin() * terms.g.bilinear(u, v);
            }
            total += 2.0 * band;
        }
        total
    }

    /// Legendre table sized for this spec, for reuse with
    /// [`cov_with_tables`](Self::cov_with_tables).
    pub fn legendre_table(&self, colat: f64) -> LegendreTable {
        self.table(colat)
    }

    /// Covariance between the field values at two points, for fields
    /// synthesized from coefficients with `cov{a_nm, b_n'm} = g_m(n,n')/2`.
    pub fn cov_points(&self, p1: &SpherePoint, p2: &SpherePoint) -> f64 {
        self.cov(p1.colat(), p2.colat(), p2.lon() - p1.lon())
    }

    pub fn variance(&self, colat: f64) -> f64 {
        self.cov(colat, colat, 0.0)
    }

    /// Semivariogram along the parallel at `colat`: `C(L, L, 0) - C(L, L, dlon)`.
    pub fn variogram(&self, colat: f64, dlon: f64) -> f64 {
        let t = self.table(colat);
        self.cov_with_tables(&t, &t, 0.0) - self.cov_with_tables(&t, &t, dlon)
    }
}

/// Truncated isotropic series `sum_{n<=N} xi_n (2n+1)/(4pi) P_n(cos d)`.
pub fn cov_isotropic(xi: &XiFamily, truncation: usize, distance: f64) -> f64 {
    let x = distance.cos().clamp(-1.0, 1.0);
    let (mut p0, mut p1) = (1.0, x);
    let mut total = xi.xi(0) / (4.0 * PI);
    if truncation >= 1 {
        total += xi.xi(1) * 3.0 / (4.0 * PI) * x;
    }
    for n in 2..=truncation {
        let k = (n - 1) as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
        total += xi.xi(n) * (2.0 * n as f64 + 1.0) / (4.0 * PI) * p1;
    }
    total
}

/// Direct evaluation of [`cov_isotropic`] term by term; kept for cross-checks.
pub fn cov_isotropic_naive(xi: &XiFamily, truncation: usize, distance: f64) -> f64 {
    let x = distance.cos().clamp(-1.0, 1.0);
    (0..=truncation)
        .map(|n| xi.xi(n) * (2.0 * n as f64 + 1.0) / (4.0 * PI) * legendre_p_unchecked(n, x))
        .sum()
}

/// Largest `|C(L1, L2, d) - C(L1, L2, -d)|` over a probe set; zero for a
/// longitudinally reversible model.
pub fn asymmetry(spec: &CovarianceSpec, probes: &[(f64, f64, f64)]) -> f64 {
    probes
        .iter()
        .map(|&(l1, l2, d)| (spec.cov(l1, l2, d) - spec.cov(l1, l2, -d)).abs())
        .fold(0.0, f64::max)
}
