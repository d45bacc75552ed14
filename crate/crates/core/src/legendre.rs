//! Legendre polynomials and fully normalized associated Legendre functions.
//!
//! `ptilde(n, m, x)` is `sqrt((2n+1)/(4 pi) (n-m)!/(n+m)!) P_nm(x)` with the
//! Condon-Shortley phase, so `P_11(x) = -(1 - x^2)^(1/2)`. Values are built by
//! recurrence directly on the normalized quantities, which keeps every
//! intermediate bounded well past degree 170 where the raw factorials overflow.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geom::SpherePoint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LegendreError {
    #[error("argument {0} outside [-1, 1]")]
    Domain(f64),
}

fn check_arg(x: f64) -> Result<(), LegendreError> {
    if (-1.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(LegendreError::Domain(x))
    }
}

/// Legendre polynomial `P_n(x)` by the three-term recurrence.
pub fn legendre_p(n: usize, x: f64) -> Result<f64, LegendreError> {
    check_arg(x)?;
    Ok(legendre_p_unchecked(n, x))
}

pub(crate) fn legendre_p_unchecked(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let k = k as f64;
        let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// All `P~_nm(x)` for `0 <= m <= min(n, max_order)`, `n <= max_degree`.
///
/// Storage is grouped by order so that the degrees `m..=N` of one order are
/// contiguous; see [`LegendreTable::order`].
#[derive(Debug, Clone)]
pub struct LegendreTable {
    max_degree: usize,
    max_order: usize,
    x: f64,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(max_degree: usize, x: f64) -> Result<Self, LegendreError> {
        Self::with_max_order(max_degree, max_degree, x)
    }

    /// Table restricted to orders `m <= max_order` (clamped to `max_degree`).
    pub fn with_max_order(max_degree: usize, max_order: usize, x: f64) -> Result<Self, LegendreError> {
        check_arg(x)?;
        let max_order = max_order.min(max_degree);
        let n_max = max_degree;
        let len = order_offset(n_max, max_order + 1);
        let mut values = vec![0.0; len];

        let s = (1.0 - x * x).max(0.0).sqrt();
        let mut diag = (1.0 / (4.0 * PI)).sqrt();
        for m in 0..=max_order {
            if m > 0 {
                let mf = m as f64;
                diag *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
            }
            let col = &mut values[order_offset(n_max, m)..order_offset(n_max, m + 1)];
            col[0] = diag;
            if m < n_max {
                col[1] = x * (2.0 * m as f64 + 3.0).sqrt() * diag;
            }
            let m2 = (m * m) as f64;
            for n in (m + 2)..=n_max {
                let nf = n as f64;
                let n1 = nf - 1.0;
                let a = ((4.0 * nf * nf - 1.0) / (nf * nf - m2)).sqrt();
                let b = ((n1 * n1 - m2) / (4.0 * n1 * n1 - 1.0)).sqrt();
                col[n - m] = a * (x * col[n - m - 1] - b * col[n - m - 2]);
            }
        }
        Ok(Self {
            max_degree,
            max_order,
            x,
            values,
        })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn argument(&self) -> f64 {
        self.x
    }

    /// `P~_nm`; panics when `m > n`, `n > max_degree` or `m > max_order`.
    pub fn get(&self, n: usize, m: usize) -> f64 {
        assert!(m <= n && n <= self.max_degree && m <= self.max_order);
        self.values[order_offset(self.max_degree, m) + n - m]
    }

    /// `[P~_mm, P~_(m+1)m, ..., P~_Nm]`.
    pub fn order(&self, m: usize) -> &[f64] {
        assert!(m <= self.max_order);
        &self.values[order_offset(self.max_degree, m)..order_offset(self.max_degree, m + 1)]
    }
}

fn order_offset(n_max: usize, m: usize) -> usize {
    // sum over k < m of (n_max - k + 1)
    m * (n_max + 1) - m * m.saturating_sub(1) / 2
}

pub fn ptilde_table(max_degree: usize, x: f64) -> Result<LegendreTable, LegendreError> {
    LegendreTable::new(max_degree, x)
}

/// Right-hand side of the addition theorem,
/// `P_n(x1) P_n(x2) + 2 sum_m (n-m)!/(n+m)! cos(m dlon) P_nm(x1) P_nm(x2)`,
/// with the factorial-weighted products taken from normalized functions as
/// `4pi/(2n+1) P~_nm(x1) P~_nm(x2)`.
pub fn addition_rhs(n: usize, p1: &SpherePoint, p2: &SpherePoint) -> f64 {
    let (x1, x2) = (p1.colat().cos(), p2.colat().cos());
    let t1 = LegendreTable::new(n, x1).expect("cos of a valid colatitude");
    let t2 = LegendreTable::new(n, x2).expect("cos of a valid colatitude");
    let dlon = p1.lon() - p2.lon();
    let mut sum = 0.0;
    for m in 1..=n {
        sum += (m as f64 * dlon).cos() * t1.get(n, m) * t2.get(n, m);
    }
    legendre_p_unchecked(n, x1) * legendre_p_unchecked(n, x2) + 8.0 * PI / (2.0 * n as f64 + 1.0) * sum
}

/// `|P_n(cos d) - RHS|` for the addition theorem at a pair of points.
pub fn addition_theorem_check(n: usize, p1: &SpherePoint, p2: &SpherePoint) -> f64 {
    let d = crate::geom::great_circle_distance(p1, p2);
    let lhs = legendre_p_unchecked(n, d.cos().clamp(-1.0, 1.0));
    (lhs - addition_rhs(n, p1, p2)).abs()
}
