//! Gaussian-weighted norms and the Hermite eigenbasis of
//! `A = d^2/ds^2 - (s/2) d/ds + 1` on `L^2(e^{-s^2/4} ds)`.

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::blowup::SigmaGrid;
use crate::error::{Error, Result};
use crate::grid::d1_open;

/// Largest supported Hermite degree.
pub const K_MAX: usize = 12;

/// Edge-to-center weight ratio above which a window counts as too narrow.
pub const EDGE_WEIGHT_LIMIT: f64 = 1e-10;

pub fn weight(sigma: f64) -> f64 {
    (-0.25 * sigma * sigma).exp()
}

fn check_samples(grid: &SigmaGrid, samples: &[f64]) -> Result<()> {
    let n = grid.len();
    if samples.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: samples.len(),
        });
    }
    if n < 5 {
        return Err(Error::InvalidParameter(format!("sigma grid has only {n} points")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sigma samples"));
    }
    if weight(grid.half_width) > EDGE_WEIGHT_LIMIT && (samples[0] != 0.0 || samples[n - 1] != 0.0) {
        return Err(Error::Accuracy(format!(
            "window |sigma| <= {} too narrow for nonzero edge samples",
            grid.half_width
        )));
    }
    Ok(())
}

fn weighted_trapezoid(grid: &SigmaGrid, integrand: impl Fn(usize) -> f64) -> f64 {
    let n = grid.len();
    let sigma = grid.values();
    let mut sum = 0.0;
    for (i, s) in sigma.iter().enumerate() {
        let c = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        sum += c * weight(*s) * integrand(i);
    }
    sum * grid.spacing
}

/// `<a, b>_G` by the trapezoid rule on the sigma grid, which is spectrally
/// accurate for integrands with Gaussian decay.
pub fn gaussian_inner(grid: &SigmaGrid, a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(grid, a)?;
    check_samples(grid, b)?;
    Ok(weighted_trapezoid(grid, |i| a[i] * b[i]))
}

pub fn gaussian_norm(grid: &SigmaGrid, samples: &[f64]) -> Result<f64> {
    check_samples(grid, samples)?;
    Ok(weighted_trapezoid(grid, |i| samples[i] * samples[i]).sqrt())
}

fn check_degree(k: usize) -> Result<()> {
    if k > K_MAX {
        return Err(Error::InvalidParameter(format!(
            "Hermite degree {k} exceeds {K_MAX}"
        )));
    }
    Ok(())
}

/// Monic eigenpolynomial `h_k` with `A h_k = (1 - k/2) h_k`, coefficients by
/// increasing power.
pub fn hermite_basis_exact(k: usize) -> Result<Vec<Rational64>> {
    check_degree(k)?;
    let mut a = vec![Rational64::from_integer(0); k + 1];
    a[k] = Rational64::from_integer(1);
    for m in 1..=k / 2 {
        let j = (k - 2 * m) as i64;
        a[k - 2 * m] = -a[k - 2 * m + 2] * Rational64::new((j + 2) * (j + 1), m as i64);
    }
    Ok(a)
}

pub fn hermite_basis(k: usize) -> Result<Vec<f64>> {
    Ok(hermite_basis_exact(k)?
        .iter()
        .map(|c| *c.numer() as f64 / *c.denom() as f64)
        .collect())
}

/// `A p` for a polynomial with rational coefficients by increasing power.
pub fn apply_a(p: &[Rational64]) -> Vec<Rational64> {
    let mut out: Vec<Rational64> = p.to_vec();
    for (j, c) in p.iter().enumerate() {
        let jj = j as i64;
        out[j] -= *c * Rational64::new(jj, 2);
        if j >= 2 {
            out[j - 2] += *c * Rational64::from_integer(jj * (jj - 1));
        }
    }
    out
}

/// `mu_k = k/2 - 1`, the eigenvalue of `-A` on `h_k`.
pub fn eigenvalue(k: usize) -> f64 {
    0.5 * k as f64 - 1.0
}

/// `||h_k||_G^2 = 2^{k+1} sqrt(pi) k!`.
pub fn hermite_norm_sq(k: usize) -> f64 {
    let fact: f64 = (1..=k).map(|j| j as f64).product();
    2f64.powi(k as i32 + 1) * std::f64::consts::PI.sqrt() * fact
}

pub fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `h_k` sampled on the sigma grid.
pub fn hermite_samples(grid: &SigmaGrid, k: usize) -> Result<Vec<f64>> {
    let c = hermite_basis(k)?;
    Ok(grid.values().iter().map(|s| eval_poly(&c, *s)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteSpectrum {
    /// `c_k = <X, h_k>_G / ||h_k||_G^2` for `k = 0..=k_max`.
    pub coefficients: Vec<f64>,
    pub norm_g: f64,
    pub norm_g_deriv: f64,
}

impl HermiteSpectrum {
    /// `sum c_k^2 ||h_k||_G^2`.
    pub fn parseval_sum(&self) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| c * c * hermite_norm_sq(k))
            .sum()
    }
}

pub fn hermite_project(grid: &SigmaGrid, samples: &[f64], k_max: usize) -> Result<HermiteSpectrum> {
    check_degree(k_max)?;
    let norm_g = gaussian_norm(grid, samples)?;
    let deriv = d1_open(samples, grid.spacing);
    let norm_g_deriv = weighted_trapezoid(grid, |i| deriv[i] * deriv[i]).sqrt();
    let coefficients = (0..=k_max)
        .map(|k| {
            let h = hermite_samples(grid, k)?;
            Ok(weighted_trapezoid(grid, |i| samples[i] * h[i]) / hermite_norm_sq(k))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(HermiteSpectrum {
        coefficients,
        norm_g,
        norm_g_deriv,
    })
}
