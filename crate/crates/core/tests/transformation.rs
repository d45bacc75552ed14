//! Integer-shift construction of the antisymmetric part: two independent
//! coefficient sequences mixed with their own copies shifted by `q` degrees
//! must reproduce the closed-form cross-covariance at `kappa = q`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sphere_kl::spectrum::{LambdaFamily, RhoFamily, SpectrumModel, XiFamily};

const ORDER: usize = 2;
const TOP: usize = 10;

fn model(kappa: f64) -> SpectrumModel {
    SpectrumModel::new(
        XiFamily::LegendreMatern { tau2: 100.0, nu: 1.5 },
        RhoFamily::Exponential { phi: 1.0 },
        LambdaFamily::Indicator { alpha: 10 },
        kappa,
    )
    .unwrap()
}

/// Linear map from `(a~_m..a~_{TOP+q}, b~_m..b~_{TOP+q})` to
/// `(a_m..a_TOP, b_m..b_TOP)`.
fn mixing(q: usize) -> DMatrix<f64> {
    let m = model(0.0);
    let k = TOP - ORDER + 1;
    let kt = k + q;
    let mut t = DMatrix::zeros(2 * k, 2 * kt);
    let s = 1.0 / 2f64.sqrt();
    for i in 0..k {
        let n = ORDER + i;
        let ratio = (m.xi(n) / m.xi(n + q)).sqrt();
        // a_n = (a~_n + r b~_{n+q}) / sqrt 2
        t[(i, i)] = s;
        t[(i, kt + i + q)] = s * ratio;
        // b_n = (r a~_{n+q} - b~_n) / sqrt 2
        t[(k + i, i + q)] = s * ratio;
        t[(k + i, kt + i)] = -s;
    }
    t
}

/// Covariance of the unmixed sequences: `F / 2` for each, independent.
fn source_covariance(q: usize) -> DMatrix<f64> {
    let m = model(0.0);
    let kt = TOP + q - ORDER + 1;
    let mut c = DMatrix::zeros(2 * kt, 2 * kt);
    for i in 0..kt {
        for j in 0..kt {
            let f = m.f(ORDER, ORDER + i, ORDER + j).unwrap() / 2.0;
            c[(i, j)] = f;
            c[(kt + i, kt + j)] = f;
        }
    }
    c
}

#[test]
fn exact_moments_match_closed_form() {
    for q in [1usize, 2, 3] {
        let target = model(q as f64);
        let t = mixing(q);
        let cov = &t * source_covariance(q) * t.transpose();
        let k = TOP - ORDER + 1;
        for i in 0..k {
            for j in 0..k {
                let (n, n2) = (ORDER + i, ORDER + j);
                let f = target.f(ORDER, n, n2).unwrap();
                let g = target.g(ORDER, n, n2).unwrap();
                let scale = f.abs().max(1e-300);
                assert!((cov[(i, j)] - f / 2.0).abs() <= 1e-12 * scale, "aa q={q} n={n} n'={n2}");
                assert!((cov[(k + i, k + j)] - f / 2.0).abs() <= 1e-12 * scale, "bb q={q}");
                assert!((cov[(i, k + j)] - g).abs() <= 1e-12 * scale, "ab q={q} n={n} n'={n2}");
                assert!((cov[(k + i, j)] + g).abs() <= 1e-12 * scale, "ba q={q}");
            }
        }
    }
}

#[test]
fn sampled_sequences_match_closed_form() {
    let q = 1;
    let target = model(q as f64);
    let t = mixing(q);
    let chol = source_covariance(q).cholesky().expect("positive definite");
    let l = chol.l();
    let dim = l.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let reps = 20000;
    let samples: Vec<DVector<f64>> = (0..reps)
        .map(|_| {
            let z = DVector::from_iterator(dim, (0..dim).map(|_| StandardNormal.sample(&mut rng)));
            &t * (&l * z)
        })
        .collect();
    let k = TOP - ORDER + 1;
    for (i, j) in [(0, 0), (0, 1), (1, 0), (3, 4), (5, 4), (2, 2)] {
        let (n, n2) = (ORDER + i, ORDER + j);
        let g = target.g(ORDER, n, n2).unwrap();
        let products: Vec<f64> = samples.iter().map(|s| s[i] * s[k + j]).collect();
        let mean = products.iter().sum::<f64>() / reps as f64;
        let sd = (products.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0)).sqrt();
        let se = sd / (reps as f64).sqrt();
        assert!((mean - g).abs() <= 4.0 * se, "n={n} n'={n2}: {mean} vs {g} (se {se})");
    }
}
