//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use curvquot::sphere::{ScalarField, SphereGrid};
use nalgebra::DMatrix;
use rand::Rng;

/// `σ_k` by enumerating all k-subsets.
pub fn brute_sigma(lambda: &[f64], k: usize) -> f64 {
    let n = lambda.len();
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            total += (0..n).filter(|i| mask & (1 << i) != 0).map(|i| lambda[i]).product::<f64>();
        }
    }
    total
}

pub fn brute_binomial(n: usize, k: usize) -> f64 {
    brute_sigma(&vec![1.0; n], k)
}

pub fn brute_h(lambda: &[f64], k: usize) -> f64 {
    brute_sigma(lambda, k) / brute_binomial(lambda.len(), k)
}

/// `(H_a/H_b)^{1/(a-b)}` from enumerated symmetric functions.
pub fn brute_quotient(lambda: &[f64], a: usize, b: usize) -> f64 {
    (brute_h(lambda, a) / brute_h(lambda, b)).powf(1.0 / (a - b) as f64)
}

/// Membership in `Γ_a` by enumeration.
pub fn brute_in_cone(lambda: &[f64], a: usize) -> bool {
    (1..=a).all(|i| brute_sigma(lambda, i) > 0.0)
}

/// Rejection sample from `Γ_a`, entries in `(-1, 3)`.
pub fn sample_cone<R: Rng>(rng: &mut R, n: usize, a: usize) -> Vec<f64> {
    loop {
        let l: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..3.0)).collect();
        if (1..=a).all(|i| brute_sigma(&l, i) > 1e-3) {
            return l;
        }
    }
}

/// Random orthogonal matrix from Gram-Schmidt on a Gaussian-like matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

/// Ellipsoid support function `(Σ a_i² x_i²)^{1/2}`.
pub fn ellipsoid_support(axes: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| x.iter().zip(axes).map(|(xi, a)| a * a * xi * xi).sum::<f64>().sqrt()
}

/// Implicit ellipsoid residual `Σ X_i²/a_i² − 1`.
pub fn ellipsoid_implicit(axes: &[f64], x: &[f64]) -> f64 {
    x.iter().zip(axes).map(|(xi, a)| xi * xi / (a * a)).sum::<f64>() - 1.0
}

pub fn zonal(grid: &Arc<SphereGrid>, f: impl Fn(f64) -> f64) -> ScalarField {
    ScalarField::from_angles_fn(grid, |t, _| f(t))
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
