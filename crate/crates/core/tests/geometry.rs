use berger_core::curvature::{fiber_point, sectional_curvatures};
use berger_core::grid::PeriodicGrid;
use berger_core::initial::{neck_bump, product_data, NeckBumpParams, Smoothing};
use berger_core::oracle::riemann_oracle;
use berger_core::{s_derivative, Profile};
use proptest::prelude::*;

/// Smooth positive field `base + sum a_k cos(k xi + phase_k)`.
fn field(grid: &PeriodicGrid, base: f64, modes: &[(f64, f64)], even: bool) -> Vec<f64> {
    grid.xi_values()
        .iter()
        .map(|x| {
            base + modes
                .iter()
                .enumerate()
                .map(|(k, (a, ph))| {
                    let phase = if even { 0.0 } else { *ph };
                    a * ((k + 1) as f64 * x + phase).cos()
                })
                .sum::<f64>()
        })
        .collect()
}

fn modes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-0.08..0.08f64, 0.0..6.3f64), 3)
}

prop_compose! {
    fn profile(even: bool)(
        n in prop::sample::select(vec![64usize, 128]),
        bf in 0.4..1.0f64, bg in 1.0..1.5f64, bh in 1.5..2.0f64, br in 0.5..2.0f64,
        mf in modes(), mg in modes(), mh in modes(), mr in modes(),
    ) -> Profile {
        let grid = PeriodicGrid::new(n).unwrap();
        let f = field(&grid, bf, &mf, even);
        let g = field(&grid, bg, &mg, even);
        let h = field(&grid, bh, &mh, even);
        let rho = field(&grid, br, &mr, even);
        Profile::new(grid, f, g, h, rho).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scalar_is_sum_of_planes(p in profile(false)) {
        let k = sectional_curvatures(&p);
        let scale = k.max_abs();
        for i in 0..p.n_points() {
            let sum: f64 = k.planes().iter().map(|(_, v)| v[i]).sum();
            prop_assert!((k.scalar_r[i] - sum).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn berger_specialization(p in profile(false)) {
        let p = Profile::new(p.grid().clone(), p.f.clone(), p.g.clone(), p.g.clone(), p.rho.clone()).unwrap();
        let k = sectional_curvatures(&p);
        let fs = s_derivative(&p, &p.f, 1).unwrap();
        let gs = s_derivative(&p, &p.g, 1).unwrap();
        for i in 0..p.n_points() {
            let (f, g) = (p.f[i], p.g[i]);
            let vert = f * f / g.powi(4) - fs[i] * gs[i] / (f * g);
            let horiz = (4.0 * g * g - 3.0 * f * f) / g.powi(4) - (gs[i] / g).powi(2);
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            prop_assert!(rel(k.kappa12[i], vert) <= 1e-12 || (k.kappa12[i] - vert).abs() < 1e-14);
            prop_assert!(rel(k.kappa31[i], vert) <= 1e-12 || (k.kappa31[i] - vert).abs() < 1e-14);
            prop_assert!(rel(k.kappa23[i], horiz) <= 1e-12 || (k.kappa23[i] - horiz).abs() < 1e-14);
        }
    }

    #[test]
    fn parity_of_even_profiles(p in profile(true)) {
        let n = p.n_points();
        let c = p.grid().center();
        let k = sectional_curvatures(&p);
        let fs = s_derivative(&p, &p.f, 1).unwrap();
        let tol = 1e-12 * k.max_abs().max(1.0);
        for j in 1..n / 2 {
            for (_, v) in k.planes() {
                prop_assert!((v[c + j] - v[c - j]).abs() <= tol);
            }
            prop_assert!((fs[c + j] + fs[c - j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn fiber_curvature_is_symmetric_under_relabelling(a in 0.3..2.0f64, b in 0.3..2.0f64, c in 0.3..2.0f64) {
        let (k12, k23, k31) = fiber_point(a, b, c);
        // swapping the first two fiber directions exchanges 23 with 31
        let (s12, s23, s31) = fiber_point(b, a, c);
        prop_assert!((k12 - s12).abs() < 1e-12 * k12.abs().max(1.0));
        prop_assert!((k23 - s31).abs() < 1e-12 * k23.abs().max(1.0));
        prop_assert!((k31 - s23).abs() < 1e-12 * k31.abs().max(1.0));
    }
}

#[test]
fn berger_triple_from_product() {
    let grid = PeriodicGrid::new(32).unwrap();
    for f0 in [0.3_f64, 0.5, 0.9, 1.0] {
        let p = product_data(f0, 1.0, 1.0, 1.0, &grid).unwrap();
        let k = sectional_curvatures(&p);
        let a = f0 * f0;
        for i in 0..32 {
            assert!((k.kappa12[i] - a).abs() < 1e-14);
            assert!((k.kappa31[i] - a).abs() < 1e-14);
            assert!((k.kappa23[i] - (4.0 - 3.0 * a)).abs() < 1e-14);
        }
    }
}

fn bump(alpha: f64, beta: f64, eta: f64, lambda_big: f64) -> NeckBumpParams {
    NeckBumpParams {
        alpha,
        beta,
        eta,
        lambda_big,
        delta_smooth: 0.2,
        smoothing: Smoothing::Reparametrize,
    }
}

#[test]
fn neck_bump_exact_relations() {
    let grid = PeriodicGrid::new(1024).unwrap();
    let p = neck_bump(&bump(0.01, 0.05, 0.9, 4.0), &grid).unwrap();
    for i in 0..1024 {
        assert_eq!(p.f[i], 0.9 * p.g[i]);
        assert_eq!(p.g[i], p.h[i]);
    }
}

#[test]
fn neck_bump_positive_scalar_on_lattice() {
    let grid = PeriodicGrid::new(1024).unwrap();
    for beta in [0.01, 0.05, 0.1] {
        for eta in [0.5, 0.75, 1.0] {
            for alpha in [0.01, 0.1] {
                let p = neck_bump(&bump(alpha, beta, eta, 4.0), &grid).unwrap();
                let k = sectional_curvatures(&p);
                let min = k.scalar_r.iter().copied().fold(f64::INFINITY, f64::min);
                assert!(min > 0.0, "alpha={alpha} beta={beta} eta={eta}: {min}");
            }
        }
    }
}

fn oracle_gap(p: &Profile) -> f64 {
    sectional_curvatures(p).max_gap(&riemann_oracle(p))
}

#[test]
fn oracle_converges_on_three_families() {
    let round = |n| product_data(1.0, 1.0, 1.0, 1.0, &PeriodicGrid::new(n).unwrap()).unwrap();
    let wavy = |n| {
        let grid = PeriodicGrid::new(n).unwrap();
        let f = field(&grid, 0.6, &[(0.1, 0.0), (0.05, 1.0)], false);
        let g = field(&grid, 1.1, &[(0.08, 2.0)], false);
        let h = field(&grid, 1.6, &[(0.0, 0.0), (0.1, 0.5)], false);
        let rho = field(&grid, 1.0, &[(0.2, 0.3)], false);
        Profile::new(grid, f, g, h, rho).unwrap()
    };
    let neck = |n| neck_bump(&bump(0.01, 0.05, 0.9, 4.0), &PeriodicGrid::new(n).unwrap()).unwrap();

    assert!(oracle_gap(&round(512)) <= 1e-8);
    let berger = product_data(0.5, 1.0, 1.0, 1.0, &PeriodicGrid::new(512).unwrap()).unwrap();
    assert!(oracle_gap(&berger) <= 1e-6);

    let (a, b) = (oracle_gap(&wavy(64)), oracle_gap(&wavy(128)));
    assert!(a / b >= 12.0, "wavy ratio {}", a / b);
    let (a, b) = (oracle_gap(&neck(2048)), oracle_gap(&neck(4096)));
    assert!(a / b >= 12.0, "neck ratio {}", a / b);
}
