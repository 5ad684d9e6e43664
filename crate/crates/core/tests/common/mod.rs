//! Helpers shared by the integration targets.
#![allow(dead_code)]

use chirpsync_core::{Complex64, ComplexSignal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn random_signal(n: usize, seed: u64) -> ComplexSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ComplexSignal::new(s, 1.0).unwrap()
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b)
}

pub fn gaussian(n: usize, width: f64, shift: f64) -> ComplexSignal {
    let c = (n / 2) as f64;
    let s = (0..n)
        .map(|i| {
            let x = (i as f64 - c - shift) / (n as f64).sqrt();
            Complex64::new((-PI * x * x / width).exp(), 0.0)
        })
        .collect();
    ComplexSignal::new(s, 1.0).unwrap()
}

/// Orthonormal Hermite functions of `u` up to order `k_max`, via the
/// three-term recurrence.
pub fn hermite_functions(u: f64, k_max: usize) -> Vec<f64> {
    let mut h = vec![PI.powf(-0.25) * (-0.5 * u * u).exp()];
    if k_max >= 1 {
        h.push(2f64.sqrt() * u * h[0]);
    }
    for k in 1..k_max {
        let next = (2.0 / (k + 1) as f64).sqrt() * u * h[k] - (k as f64 / (k + 1) as f64).sqrt() * h[k - 1];
        h.push(next);
    }
    h
}

/// Continuous-transform oracle sampled on the grid: a combination of
/// Hermite modes, each picking up the eigenvalue `exp(-j k phi)`.
pub fn hermite_oracle(n: usize, coeffs: &[Complex64], phi: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let c = (n / 2) as f64;
    let mut input = vec![Complex64::new(0.0, 0.0); n];
    let mut output = input.clone();
    for i in 0..n {
        let x = (i as f64 - c) / (n as f64).sqrt();
        let h = hermite_functions((2.0 * PI).sqrt() * x, coeffs.len() - 1);
        for (k, (ck, hk)) in coeffs.iter().zip(&h).enumerate() {
            input[i] += ck * hk;
            output[i] += ck * hk * Complex64::from_polar(1.0, -(k as f64) * phi);
        }
    }
    (input, output)
}

