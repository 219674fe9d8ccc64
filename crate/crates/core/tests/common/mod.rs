#![allow(dead_code)]

use gldelta::EmpiricalCovariance;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Block coordinate descent graphical lasso (Friedman, Hastie & Tibshirani,
/// 2008) with an unpenalized diagonal:
///
/// `min −log det Θ + tr(SΘ) + ρ Σ_{p≠q} |θ_pq|`.
///
/// Written from the published algorithm only; shares no code with the
/// library solver.
pub fn glasso_oracle(s: &DMatrix<f64>, rho: f64) -> DMatrix<f64> {
    let p = s.nrows();
    let mut w = s.clone();
    let mut beta = DMatrix::<f64>::zeros(p - 1, p);
    for _sweep in 0..10_000 {
        let mut max_change = 0.0f64;
        for j in 0..p {
            let others: Vec<usize> = (0..p).filter(|&i| i != j).collect();
            let w11 = w.select_rows(&others).select_columns(&others);
            let s12: Vec<f64> = others.iter().map(|&i| s[(i, j)]).collect();
            let mut b: Vec<f64> = (0..p - 1).map(|k| beta[(k, j)]).collect();
            for _ in 0..100_000 {
                let mut delta = 0.0f64;
                for k in 0..p - 1 {
                    let mut r = s12[k];
                    for l in 0..p - 1 {
                        if l != k {
                            r -= w11[(k, l)] * b[l];
                        }
                    }
                    let nb = soft(r, rho) / w11[(k, k)];
                    delta = delta.max((nb - b[k]).abs());
                    b[k] = nb;
                }
                if delta < 1e-14 {
                    break;
                }
            }
            for k in 0..p - 1 {
                beta[(k, j)] = b[k];
            }
            for (k, &i) in others.iter().enumerate() {
                let w12: f64 = (0..p - 1).map(|l| w11[(k, l)] * b[l]).sum();
                max_change = max_change.max((w[(i, j)] - w12).abs());
                w[(i, j)] = w12;
                w[(j, i)] = w12;
            }
        }
        if max_change < 1e-13 {
            break;
        }
    }
    let mut theta = DMatrix::zeros(p, p);
    for j in 0..p {
        let others: Vec<usize> = (0..p).filter(|&i| i != j).collect();
        let b: Vec<f64> = (0..p - 1).map(|k| beta[(k, j)]).collect();
        let w12b: f64 = others.iter().zip(&b).map(|(&i, bk)| w[(i, j)] * bk).sum();
        let tjj = 1.0 / (w[(j, j)] - w12b);
        theta[(j, j)] = tjj;
        for (k, &i) in others.iter().enumerate() {
            theta[(i, j)] = -b[k] * tjj;
        }
    }
    (&theta + theta.transpose()) * 0.5
}

fn soft(v: f64, k: f64) -> f64 {
    v.signum() * (v.abs() - k).max(0.0)
}

/// Sample covariance (divisor n) of `n` draws from a random correlated
/// Gaussian in `dim` dimensions.
pub fn random_covariance(dim: usize, n: usize, seed: u64) -> EmpiricalCovariance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix = DMatrix::from_fn(dim, dim, |i, j| {
        let z: f64 = StandardNormal.sample(&mut rng);
        if i == j {
            1.0
        } else {
            0.3 * z
        }
    });
    let x = DMatrix::from_fn(n, dim, |_, _| -> f64 { StandardNormal.sample(&mut rng) }) * mix;
    let mut xc = x.clone();
    for mut col in xc.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let s = xc.tr_mul(&xc) / n as f64;
    EmpiricalCovariance::from_matrix(s, n).unwrap()
}

/// Symmetric positive definite matrix with eigenvalues in `[0.5, 2]`.
pub fn random_spd(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(dim, dim, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
    let q = a.qr().q();
    let vals = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| {
        0.5 + 1.5 * i as f64 / dim.max(1) as f64
    }));
    let m = &q * vals * q.transpose();
    (&m + m.transpose()) * 0.5
}
