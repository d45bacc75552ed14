//! Parametric Karhunen-Loeve coefficient families.
//!
//! A [`SpectrumModel`] combines a degree sequence `xi_n`, a stationary
//! correlation `rho` over degree lags, an order sequence `lambda_m` and a
//! shift `kappa`. It defines
//!
//! ```text
//! f_m(n, n') = sqrt(xi_n xi_n') rho(n - n') lambda_m
//! g_m(n, n') = sqrt(xi_n xi_n') lambda_m / 4 * (rho(n - n' - kappa) - rho(n - n' + kappa))
//! ```
//!
//! `f` is the within-sequence covariance of the cosine and sine coefficients
//! at order `m`, `g` their cross-covariance. `kappa = 0` makes `g` vanish and
//! the process longitudinally reversible.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

/// Relative slack for the eigenvalue test, scaled by the mean diagonal.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Highest degree checked by [`DecayCertificate::verify`].
pub const DECAY_CHECK_HORIZON: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degree {n} is below order {m}")]
    DegreeBelowOrder { m: usize, n: usize },
    #[error("the antisymmetric coefficients are undefined at order 0")]
    ZeroOrder,
    #[error("custom xi sequence has {len} terms, truncation {truncation} needs {}", truncation + 1)]
    SequenceTooShort { len: usize, truncation: usize },
    #[error("order {order}: covariance block not positive semidefinite (min eigenvalue {min_eigenvalue:e}, allowed {floor:e})")]
    Inadmissible {
        order: usize,
        min_eigenvalue: f64,
        floor: f64,
    },
    #[error("malformed block: {0}")]
    MalformedBlock(String),
}

/// Degree sequence `xi_n >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum XiFamily {
    /// `(tau2 + n^2)^(-nu - 1/2)`
    LegendreMatern { tau2: f64, nu: f64 },
    /// `(1 - delta) delta^n`
    Multiquadric { delta: f64 },
    /// Explicit values for `n = 0..len`.
    Custom(Vec<f64>),
}

impl XiFamily {
    pub fn xi(&self, n: usize) -> f64 {
        match self {
            XiFamily::LegendreMatern { tau2, nu } => {
                let n = n as f64;
                (tau2 + n * n).powf(-nu - 0.5)
            }
            XiFamily::Multiquadric { delta } => (1.0 - delta) * delta.powi(n as i32),
            XiFamily::Custom(values) => values.get(n).copied().unwrap_or(0.0),
        }
    }

    fn validate(&self) -> Result<(), SpectrumError> {
        match self {
            XiFamily::LegendreMatern { tau2, nu } => {
                positive("tau2", *tau2)?;
                positive("nu", *nu)
            }
            XiFamily::Multiquadric { delta } => {
                if *delta > 0.0 && *delta < 1.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("delta must lie in (0, 1), got {delta}")))
                }
            }
            XiFamily::Custom(values) => {
                if values.is_empty() {
                    return Err(invalid("custom xi sequence is empty".into()));
                }
                match values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    Some(k) => Err(invalid(format!(
                        "custom xi[{k}] = {} is not a finite nonnegative value",
                        values[k]
                    ))),
                    None => Ok(()),
                }
            }
        }
    }

    /// The decay bound every Legendre-Matern sequence satisfies:
    /// `xi_n <= n^-(2 nu + 1)` for all `n >= 1`.
    pub fn natural_certificate(&self) -> Option<Result<DecayCertificate, SpectrumError>> {
        match self {
            XiFamily::LegendreMatern { nu, .. } => Some(DecayCertificate::new(2.0 * nu + 1.0, 1.0, 1)),
            _ => None,
        }
    }
}

/// Stationary correlation over degree lags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoFamily {
    /// `rho(h) = 1` at `h == 0`, else 0. Non-integer lags evaluate to 0.
    Kronecker,
    /// `rho(h) = exp(-phi |h|)`
    Exponential { phi: f64 },
}

impl RhoFamily {
    pub fn rho(&self, h: f64) -> f64 {
        match self {
            RhoFamily::Kronecker => {
                if h == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            RhoFamily::Exponential { phi } => (-phi * h.abs()).exp(),
        }
    }
}

/// Order weights `lambda_m in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaFamily {
    /// 1 for `m <= alpha`, else 0.
    Indicator { alpha: usize },
    /// `(1 + gamma m^2)^-1`
    Rational { gamma: f64 },
    /// All ones: the isotropic limit when paired with a Kronecker `rho`.
    Ones,
}

impl LambdaFamily {
    pub fn lambda(&self, m: usize) -> f64 {
        match self {
            LambdaFamily::Indicator { alpha } => {
                if m <= *alpha {
                    1.0
                } else {
                    0.0
                }
            }
            LambdaFamily::Rational { gamma } => {
                let m = m as f64;
                1.0 / (1.0 + gamma * m * m)
            }
            LambdaFamily::Ones => 1.0,
        }
    }

    /// Largest order with `lambda_m > 0`, if bounded.
    pub fn max_active_order(&self) -> Option<usize> {
        match self {
            LambdaFamily::Indicator { alpha } => Some(*alpha),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumModel {
    xi: XiFamily,
    rho: RhoFamily,
    lambda: LambdaFamily,
    kappa: f64,
}

impl SpectrumModel {
    pub fn new(xi: XiFamily, rho: RhoFamily, lambda: LambdaFamily, kappa: f64) -> Result<Self, SpectrumError> {
        xi.validate()?;
        if let RhoFamily::Exponential { phi } = rho {
            positive("phi", phi)?;
        }
        if let LambdaFamily::Rational { gamma } = lambda {
            if !(gamma.is_finite() && gamma >= 0.0) {
                return Err(invalid(format!("gamma must be finite and >= 0, got {gamma}")));
            }
        }
        if !kappa.is_finite() {
            return Err(invalid(format!("kappa must be finite, got {kappa}")));
        }
        Ok(Self { xi, rho, lambda, kappa })
    }

    pub fn xi_family(&self) -> &XiFamily {
        &self.xi
    }

    pub fn rho_family(&self) -> RhoFamily {
        self.rho
    }

    pub fn lambda_family(&self) -> LambdaFamily {
        self.lambda
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Same model with a different shift.
    pub fn with_kappa(&self, kappa: f64) -> Result<Self, SpectrumError> {
        Self::new(self.xi.clone(), self.rho, self.lambda, kappa)
    }

    /// Same model with every `xi_n` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, SpectrumError> {
        positive("scale factor", factor)?;
        let xi = match &self.xi {
            XiFamily::Custom(v) => v.iter().map(|x| x * factor).collect(),
            other => (0..=DECAY_CHECK_HORIZON).map(|n| other.xi(n) * factor).collect(),
        };
        Self::new(XiFamily::Custom(xi), self.rho, self.lambda, self.kappa)
    }

    pub fn xi(&self, n: usize) -> f64 {
        self.xi.xi(n)
    }

    pub fn lambda(&self, m: usize) -> f64 {
        self.lambda.lambda(m)
    }

    /// Rejects truncations a custom sequence cannot cover.
    pub fn check_truncation(&self, truncation: usize) -> Result<(), SpectrumError> {
        match &self.xi {
            XiFamily::Custom(v) if v.len() <= truncation => Err(SpectrumError::SequenceTooShort {
                len: v.len(),
                truncation,
            }),
            _ => Ok(()),
        }
    }

    /// Highest order that can carry nonzero coefficients at truncation `n`.
    pub fn active_orders(&self, truncation: usize) -> usize {
        self.lambda.max_active_order().map_or(truncation, |a| a.min(truncation))
    }

    /// True when every `Gamma_m` is diagonal: Kronecker `rho` and `g == 0`.
    pub fn is_diagonal(&self) -> bool {
        matches!(self.rho, RhoFamily::Kronecker) && (self.kappa == 0.0 || self.kappa.fract() != 0.0)
    }

    pub fn f(&self, m: usize, n: usize, n2: usize) -> Result<f64, SpectrumError> {
        check_degrees(m, n, n2)?;
        Ok(self.f_unchecked(m, n, n2))
    }

    pub(crate) fn f_unchecked(&self, m: usize, n: usize, n2: usize) -> f64 {
        let lag = n as f64 - n2 as f64;
        (self.xi(n) * self.xi(n2)).sqrt() * self.rho.rho(lag) * self.lambda(m)
    }

    pub fn g(&self, m: usize, n: usize, n2: usize) -> Result<f64, SpectrumError> {
        if m == 0 {
            return Err(SpectrumError::ZeroOrder);
        }
        check_degrees(m, n, n2)?;
        Ok(self.g_unchecked(m, n, n2))
    }

    pub(crate) fn g_unchecked(&self, m: usize, n: usize, n2: usize) -> f64 {
        if self.kappa == 0.0 || n == n2 {
            return 0.0;
        }
        let lag = n as f64 - n2 as f64;
        let shift = self.rho.rho(lag - self.kappa) - self.rho.rho(lag + self.kappa);
        (self.xi(n) * self.xi(n2)).sqrt() * self.lambda(m) / 4.0 * shift
    }
}

fn check_degrees(m: usize, n: usize, n2: usize) -> Result<(), SpectrumError> {
    if n < m {
        return Err(SpectrumError::DegreeBelowOrder { m, n });
    }
    if n2 < m {
        return Err(SpectrumError::DegreeBelowOrder { m, n: n2 });
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<(), SpectrumError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn invalid(msg: String) -> SpectrumError {
    SpectrumError::InvalidParameter(msg)
}

/// Covariance of the stacked cosine and sine coefficients at one order:
/// `[[F, G], [G^T, F]]` over the degrees `degrees`.
#[derive(Debug, Clone)]
pub struct GammaBlock {
    order: usize,
    degrees: Vec<usize>,
    f: DMatrix<f64>,
    g: DMatrix<f64>,
    min_eigenvalue: f64,
}

impl GammaBlock {
    /// Validates symmetry of `f`, antisymmetry of `g` and positive
    /// semidefiniteness of the assembled block.
    pub fn new(order: usize, degrees: Vec<usize>, f: DMatrix<f64>, g: DMatrix<f64>) -> Result<Self, SpectrumError> {
        let k = degrees.len();
        if f.shape() != (k, k) || g.shape() != (k, k) {
            return Err(SpectrumError::MalformedBlock(format!(
                "expected {k}x{k} matrices, got F {:?} and G {:?}",
                f.shape(),
                g.shape()
            )));
        }
        if let Some(&n) = degrees.iter().find(|&&n| n < order) {
            return Err(SpectrumError::DegreeBelowOrder { m: order, n });
        }
        let scale = f.iter().chain(g.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
        let slack = 1e-12 * scale;
        for i in 0..k {
            if g[(i, i)].abs() > slack {
                return Err(SpectrumError::MalformedBlock(format!("G has nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if (f[(i, j)] - f[(j, i)]).abs() > slack {
                    return Err(SpectrumError::MalformedBlock(format!("F not symmetric at ({i}, {j})")));
                }
                if (g[(i, j)] + g[(j, i)]).abs() > slack {
                    return Err(SpectrumError::MalformedBlock(format!(
                        "G not antisymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if order == 0 && g.iter().any(|v| *v != 0.0) {
            return Err(SpectrumError::MalformedBlock("G must vanish at order 0".into()));
        }
        let mut block = Self {
            order,
            degrees,
            f,
            g,
            min_eigenvalue: 0.0,
        };
        block.min_eigenvalue = block.compute_min_eigenvalue();
        let floor = -PSD_TOLERANCE * block.mean_diagonal();
        if block.min_eigenvalue < floor {
            return Err(SpectrumError::Inadmissible {
                order,
                min_eigenvalue: block.min_eigenvalue,
                floor,
            });
        }
        Ok(block)
    }

    fn compute_min_eigenvalue(&self) -> f64 {
        let k = self.degrees.len();
        if k == 0 {
            return 0.0;
        }
        let g_zero = self.g.iter().all(|v| *v == 0.0);
        let f_diagonal = (0..k).all(|i| (0..k).all(|j| i == j || self.f[(i, j)] == 0.0));
        if g_zero && f_diagonal {
            return self.f.diagonal().min();
        }
        if g_zero {
            return SymmetricEigen::new(self.f.clone()).eigenvalues.min();
        }
        SymmetricEigen::new(self.full_matrix()).eigenvalues.min()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// `trace / 2k` of the assembled block (equal to the mean diagonal of `F`).
    pub fn mean_diagonal(&self) -> f64 {
        let k = self.degrees.len();
        if k == 0 {
            0.0
        } else {
            self.f.trace() / k as f64
        }
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().chain(self.g.iter()).all(|v| *v == 0.0)
    }

    /// The `2k x 2k` matrix `[[F, G], [G^T, F]]`.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let k = self.degrees.len();
        let mut full = DMatrix::zeros(2 * k, 2 * k);
        full.view_mut((0, 0), (k, k)).copy_from(&self.f);
        full.view_mut((k, k), (k, k)).copy_from(&self.f);
        full.view_mut((0, k), (k, k)).copy_from(&self.g);
        full.view_mut((k, 0), (k, k)).copy_from(&self.g.transpose());
        full
    }
}

/// Assemble and validate `Gamma_m` over degrees `m..=max_degree`.
pub fn gamma_block(model: &SpectrumModel, m: usize, max_degree: usize) -> Result<GammaBlock, SpectrumError> {
    if max_degree < m {
        return Err(SpectrumError::DegreeBelowOrder { m, n: max_degree });
    }
    model.check_truncation(max_degree)?;
    let degrees: Vec<usize> = (m..=max_degree).collect();
    let k = degrees.len();
    let f = DMatrix::from_fn(k, k, |i, j| model.f_unchecked(m, degrees[i], degrees[j]));
    let g = if m == 0 {
        DMatrix::zeros(k, k)
    } else {
        DMatrix::from_fn(k, k, |i, j| model.g_unchecked(m, degrees[i], degrees[j]))
    };
    GammaBlock::new(m, degrees, f, g)
}

/// `xi_n <= r n^-beta` for `n > n0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCertificate {
    beta: f64,
    r: f64,
    n0: usize,
}

impl DecayCertificate {
    pub fn new(beta: f64, r: f64, n0: usize) -> Result<Self, SpectrumError> {
        if !(beta.is_finite() && beta > 2.0) {
            return Err(invalid(format!("decay exponent beta must exceed 2, got {beta}")));
        }
        positive("r", r)?;
        if n0 == 0 {
            return Err(invalid("n0 must be at least 1".into()));
        }
        Ok(Self { beta, r, n0 })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Checks the bound pointwise for `n0 < n <= 4096` (or the end of a custom
    /// sequence). Returns the first violating degree.
    pub fn verify(&self, xi: &XiFamily) -> Result<(), usize> {
        let horizon = match xi {
            XiFamily::Custom(v) => v.len().saturating_sub(1).min(DECAY_CHECK_HORIZON),
            _ => DECAY_CHECK_HORIZON,
        };
        for n in (self.n0 + 1)..=horizon {
            let bound = self.r * (n as f64).powf(-self.beta);
            if xi.xi(n) > bound * (1.0 + 1e-12) {
                return Err(n);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum C4Branch {
    /// Any correlation; needs `beta > 4`.
    General,
    /// Kronecker correlation; needs `beta > 2`.
    Kronecker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct C4Report {
    pub branch: C4Branch,
    pub passed: bool,
    /// `None` when no certificate was needed.
    pub certificate_verified: Option<bool>,
    pub reason: String,
    /// `sum_{n <= 4096} xi_n (2n + 1)`, the truncated variance series.
    pub variance_sum: f64,
}

/// Checks the summability hypotheses for the model under `branch`.
pub fn check_c4(model: &SpectrumModel, certificate: Option<&DecayCertificate>, branch: C4Branch) -> C4Report {
    let horizon = match model.xi_family() {
        XiFamily::Custom(v) => v.len() - 1,
        _ => DECAY_CHECK_HORIZON,
    };
    let variance_sum = (0..=horizon).map(|n| model.xi(n) * (2.0 * n as f64 + 1.0)).sum();
    let report = |passed, certificate_verified, reason: String| C4Report {
        branch,
        passed,
        certificate_verified,
        reason,
        variance_sum,
    };

    if matches!(model.xi_family(), XiFamily::Multiquadric { .. }) {
        return report(true, None, "geometric decay dominates every polynomial rate".into());
    }
    if branch == C4Branch::Kronecker && model.rho_family() != RhoFamily::Kronecker {
        return report(false, None, "kronecker branch requires a Kronecker rho".into());
    }
    let Some(cert) = certificate else {
        return report(false, None, "no decay certificate supplied".into());
    };
    if let Err(n) = cert.verify(model.xi_family()) {
        return report(
            false,
            Some(false),
            format!("xi_{n} = {:e} exceeds {} * {n}^-{}", model.xi(n), cert.r, cert.beta),
        );
    }
    let (needed, label) = match branch {
        C4Branch::General => (4.0, "general"),
        C4Branch::Kronecker => (2.0, "kronecker"),
    };
    if cert.beta > needed {
        report(
            true,
            Some(true),
            format!("beta = {} > {needed} ({label} branch)", cert.beta),
        )
    } else {
        report(
            false,
            Some(true),
            format!("beta = {} does not exceed {needed} ({label} branch)", cert.beta),
        )
    }
}
