//! Exponential decay rates from `(tau, norm)` series.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const MIN_DECAY_POINTS: usize = 6;

/// Least-squares fit of `log(norm) = intercept + slope tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    /// 95% confidence interval of the slope.
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

pub fn fit_decay(series: &[(f64, f64)]) -> Result<DecayFit> {
    let n = series.len();
    if n < MIN_DECAY_POINTS {
        return Err(Error::InsufficientData(format!(
            "decay fit needs {MIN_DECAY_POINTS} points, got {n}"
        )));
    }
    if let Some((tau, v)) = series.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "norm {v} at tau = {tau} is not positive"
        )));
    }
    let nf = n as f64;
    let mean_t = series.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = series.iter().map(|p| p.1.ln()).sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (t, v) in series {
        let dt = t - mean_t;
        sxx += dt * dt;
        sxy += dt * (v.ln() - mean_y);
    }
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("decay fit needs distinct tau values".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_t;
    let sse: f64 = series
        .iter()
        .map(|(t, v)| (v.ln() - intercept - slope * t).powi(2))
        .sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    let quantile = StudentsT::new(0.0, 1.0, nf - 2.0)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(DecayFit {
        slope,
        intercept,
        stderr,
        ci_low: slope - quantile * stderr,
        ci_high: slope + quantile * stderr,
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..40).map(|i| 2.0 + 0.25 * i as f64).map(|t| (t, f(t))).collect()
    }

    #[test]
    fn exact_exponential() {
        let fit = fit_decay(&series(|t| 3.0 * (-1.3 * t).exp())).unwrap();
        assert!((fit.slope + 1.3).abs() < 1e-12);
        assert!(fit.ci_low <= fit.slope && fit.slope <= fit.ci_high);
    }

    #[test]
    fn perturbed_exponential() {
        let fit = fit_decay(&series(|t| (-t).exp() * (1.0 + 0.01 * t.sin()))).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.01);
    }

    #[test]
    fn flat_and_invalid() {
        let fit = fit_decay(&series(|_| 0.7)).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert!(fit_decay(&series(|t| t - 3.0)).is_err());
        assert!(fit_decay(&series(|t| t)[..5]).is_err());
    }
}
