#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sas_core::rng::{self, StreamRng};
use sas_core::{Link, Matrix};

pub fn stream(seed: u64) -> StreamRng {
    rng::stream(seed, "test", 0)
}

pub fn normal(r: &mut StreamRng) -> f64 {
    StandardNormal.sample(r)
}

/// `m × (p+1)` design with an intercept column and standard normal entries.
pub fn design(m: usize, p: usize, r: &mut StreamRng) -> Matrix {
    Matrix::from_fn(m, p + 1, |_, j| if j == 0 { 1.0 } else { normal(r) })
}

/// Outcomes drawn from the link's natural model at `design · beta`.
pub fn response(x: &Matrix, beta: &[f64], link: Link, r: &mut StreamRng) -> Vec<f64> {
    (0..x.rows())
        .map(|i| {
            let eta: f64 = x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
            match link {
                Link::Identity => eta + normal(r),
                _ => (r.random::<f64>() < link.mean(eta)) as u8 as f64,
            }
        })
        .collect()
}

pub fn to_na(m: &Matrix) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}
