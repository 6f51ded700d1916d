#![allow(clippy::needless_range_loop)]

use berger_core::diagnostics::hermite::{hermite_samples, K_MAX};
use berger_core::diagnostics::interp::Pchip;
use berger_core::diagnostics::{
    apply_a, cutoff_beta, gaussian_inner, gaussian_norm, hermite_basis_exact, hermite_project,
    SigmaGrid,
};
use num_rational::Rational64;
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn orthogonality_on_default_window() {
    let g = SigmaGrid::default();
    let h: Vec<Vec<f64>> = (0..=8).map(|k| hermite_samples(&g, k).unwrap()).collect();
    let norms: Vec<f64> = h.iter().map(|v| gaussian_norm(&g, v).unwrap()).collect();
    let mut worst = 0.0_f64;
    for j in 0..=8 {
        for k in 0..j {
            let ip = gaussian_inner(&g, &h[j], &h[k]).unwrap();
            worst = worst.max(ip.abs() / (norms[j] * norms[k]));
        }
    }
    assert!(worst <= 1e-8, "worst {worst:e}");
}

#[test]
fn low_norms_are_analytic() {
    let g = SigmaGrid::default();
    let h0 = hermite_samples(&g, 0).unwrap();
    let h1 = hermite_samples(&g, 1).unwrap();
    assert!((gaussian_norm(&g, &h0).unwrap().powi(2) - 2.0 * PI.sqrt()).abs() <= 1e-8);
    assert!((gaussian_norm(&g, &h1).unwrap().powi(2) - 4.0 * PI.sqrt()).abs() <= 1e-8);
}

#[test]
fn eigenpolynomials_exact() {
    for k in 0..=K_MAX {
        let h = hermite_basis_exact(k).unwrap();
        assert_eq!(*h.last().unwrap(), Rational64::from_integer(1));
        let mu = Rational64::new(k as i64 - 2, 2);
        let residual: Vec<Rational64> = apply_a(&h).iter().zip(&h).map(|(a, b)| *a + mu * b).collect();
        assert!(residual.iter().all(|c| *c == Rational64::from_integer(0)), "k={k}");
    }
}

proptest! {
    #[test]
    fn projection_recovers_combinations(c in prop::collection::vec(-3.0..3.0f64, 5)) {
        let g = SigmaGrid::default();
        let h: Vec<Vec<f64>> = (0..5).map(|k| hermite_samples(&g, k).unwrap()).collect();
        let x: Vec<f64> = (0..g.len()).map(|i| (0..5).map(|k| c[k] * h[k][i]).sum()).collect();
        let spec = hermite_project(&g, &x, 6).unwrap();
        for k in 0..5 {
            prop_assert!((spec.coefficients[k] - c[k]).abs() <= 1e-8 * (1.0 + c[k].abs()));
        }
        prop_assert!(spec.coefficients[5].abs() <= 1e-8 && spec.coefficients[6].abs() <= 1e-8);
        prop_assert!(spec.parseval_sum() <= spec.norm_g.powi(2) * (1.0 + 1e-6));
    }

    #[test]
    fn cutoff_is_even_and_bounded(z in -4.0..4.0f64) {
        let b = cutoff_beta(z);
        prop_assert_eq!(b, cutoff_beta(-z));
        prop_assert!((0.0..=1.0).contains(&b));
        if z.abs() <= 1.0 { prop_assert_eq!(b, 1.0); }
        if z.abs() >= 2.0 { prop_assert_eq!(b, 0.0); }
    }

    #[test]
    fn pchip_preserves_monotone_data(steps in prop::collection::vec((0.01..1.0f64, 0.0..1.0f64), 4..20), t in 0.0..1.0f64) {
        let mut x = vec![0.0];
        let mut y = vec![0.0];
        for (dx, dy) in &steps {
            x.push(x.last().unwrap() + dx);
            y.push(y.last().unwrap() + dy);
        }
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        let span = x.last().unwrap();
        let a = p.eval(t * span).unwrap();
        let b = p.eval((t * span + 0.01).min(*span)).unwrap();
        prop_assert!(b >= a - 1e-12);
        prop_assert!(a >= -1e-12 && a <= y.last().unwrap() + 1e-12);
    }
}
