//! Closed-form sectional curvatures, extrema and base distances.

use serde::{Deserialize, Serialize};

use crate::grid;
use crate::profile::Profile;

/// First and second arclength derivatives of the three warp radii.
#[derive(Debug, Clone)]
pub struct WarpDerivatives {
    pub fs: Vec<f64>,
    pub fss: Vec<f64>,
    pub gs: Vec<f64>,
    pub gss: Vec<f64>,
    pub hs: Vec<f64>,
    pub hss: Vec<f64>,
}

impl WarpDerivatives {
    pub fn of(profile: &Profile) -> Self {
        let n = profile.n_points();
        let ops = profile.ops();
        let mut d = Self {
            fs: vec![0.0; n],
            fss: vec![0.0; n],
            gs: vec![0.0; n],
            gss: vec![0.0; n],
            hs: vec![0.0; n],
            hss: vec![0.0; n],
        };
        ops.ds_dss(&profile.f, &mut d.fs, &mut d.fss);
        ops.ds_dss(&profile.g, &mut d.gs, &mut d.gss);
        ops.ds_dss(&profile.h, &mut d.hs, &mut d.hss);
        d
    }
}

/// Sectional curvatures of the six coordinate planes, the intrinsic fiber
/// curvatures, and the scalar curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    pub kappa12: Vec<f64>,
    pub kappa23: Vec<f64>,
    pub kappa31: Vec<f64>,
    pub kappa01: Vec<f64>,
    pub kappa02: Vec<f64>,
    pub kappa03: Vec<f64>,
    pub hat12: Vec<f64>,
    pub hat23: Vec<f64>,
    pub hat31: Vec<f64>,
    pub scalar_r: Vec<f64>,
}

impl CurvatureField {
    pub fn planes(&self) -> [(&'static str, &Vec<f64>); 6] {
        [
            ("kappa12", &self.kappa12),
            ("kappa23", &self.kappa23),
            ("kappa31", &self.kappa31),
            ("kappa01", &self.kappa01),
            ("kappa02", &self.kappa02),
            ("kappa03", &self.kappa03),
        ]
    }

    /// Largest absolute curvature over all six planes.
    pub fn max_abs(&self) -> f64 {
        self.planes()
            .iter()
            .flat_map(|(_, v)| v.iter())
            .fold(0.0_f64, |m, k| m.max(k.abs()))
    }

    /// Largest pointwise sum of |kappa| over the six planes; the curvature
    /// scale entering the time step.
    pub fn scale(&self) -> f64 {
        let n = self.kappa12.len();
        let mut worst = 0.0_f64;
        for i in 0..n {
            let s: f64 = self.planes().iter().map(|(_, v)| v[i].abs()).sum();
            worst = worst.max(s);
        }
        worst
    }

    /// Largest pointwise gap to another field over the six planes.
    pub fn max_gap(&self, other: &CurvatureField) -> f64 {
        self.planes()
            .iter()
            .zip(other.planes().iter())
            .flat_map(|((_, a), (_, b))| a.iter().zip(b.iter()))
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }
}

/// Intrinsic curvatures of the left-invariant fiber metric, pointwise.
/// Written in terms of `d = h^2 - g^2` so that `g == h` stays bitwise symmetric.
#[inline]
pub fn fiber_point(f: f64, g: f64, h: f64) -> (f64, f64, f64) {
    let a = f * f;
    let b = g * g;
    let c = h * h;
    let d = c - b;
    let abc = a * b * c;
    let hat12 = (a * a + 2.0 * d * (a - 2.0 * b) - 3.0 * d * d) / abc;
    let hat31 = (a * a - 2.0 * d * (a - 2.0 * c) - 3.0 * d * d) / abc;
    let hat23 = (d * d + 2.0 * a * (b + c) - 3.0 * a * a) / abc;
    (hat12, hat23, hat31)
}

pub fn fiber_curvatures(profile: &Profile) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = profile.n_points();
    let mut out = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..n {
        let (a, b, c) = fiber_point(profile.f[i], profile.g[i], profile.h[i]);
        out.0[i] = a;
        out.1[i] = b;
        out.2[i] = c;
    }
    out
}

pub fn sectional_curvatures(profile: &Profile) -> CurvatureField {
    let d = WarpDerivatives::of(profile);
    curvatures_from(profile, &d)
}

/// Curvatures from precomputed arclength derivatives.
pub fn curvatures_from(profile: &Profile, d: &WarpDerivatives) -> CurvatureField {
    let n = profile.n_points();
    let (hat12, hat23, hat31) = fiber_curvatures(profile);
    let mut k = CurvatureField {
        kappa12: vec![0.0; n],
        kappa23: vec![0.0; n],
        kappa31: vec![0.0; n],
        kappa01: vec![0.0; n],
        kappa02: vec![0.0; n],
        kappa03: vec![0.0; n],
        hat12,
        hat23,
        hat31,
        scalar_r: vec![0.0; n],
    };
    for i in 0..n {
        let (f, g, h) = (profile.f[i], profile.g[i], profile.h[i]);
        let (lf, lg, lh) = (d.fs[i] / f, d.gs[i] / g, d.hs[i] / h);
        k.kappa12[i] = k.hat12[i] - lf * lg;
        k.kappa23[i] = k.hat23[i] - lg * lh;
        k.kappa31[i] = k.hat31[i] - lh * lf;
        k.kappa01[i] = -d.fss[i] / f;
        k.kappa02[i] = -d.gss[i] / g;
        k.kappa03[i] = -d.hss[i] / h;
        k.scalar_r[i] = k.kappa01[i]
            + k.kappa02[i]
            + k.kappa03[i]
            + k.kappa12[i]
            + k.kappa23[i]
            + k.kappa31[i];
    }
    k
}

/// Pointwise minimum warp, its global minimum, the maximum of `g`, and the
/// indices of local minima of `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileExtrema {
    pub m: Vec<f64>,
    pub m_check: f64,
    pub g_max: f64,
    pub neck_locations: Vec<usize>,
}

pub fn profile_extrema(profile: &Profile) -> ProfileExtrema {
    let m: Vec<f64> = (0..profile.n_points())
        .map(|i| profile.f[i].min(profile.g[i]).min(profile.h[i]))
        .collect();
    let m_check = m.iter().copied().fold(f64::INFINITY, f64::min);
    let g_max = profile.g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ProfileExtrema {
        m,
        m_check,
        g_max,
        neck_locations: local_minima(&profile.f),
    }
}

/// Indices of periodic local minima. A flat run counts once, at its first
/// index, provided it is strictly lower than both neighbours of the run.
pub fn local_minima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    for i in 0..n {
        let prev = values[(i + n - 1) % n];
        if values[i] >= prev {
            continue;
        }
        let mut j = 1;
        while j < n && values[(i + j) % n] == values[i] {
            j += 1;
        }
        if j < n && values[(i + j) % n] > values[i] {
            out.push(i);
        }
    }
    out
}

/// Arclength `int rho dxi` of the shorter arc between two base angles.
/// Off-grid endpoints contribute partial cells with linearly interpolated `rho`.
pub fn base_distance(profile: &Profile, xi_a: f64, xi_b: f64) -> f64 {
    let grid = profile.grid();
    let n = grid.n_points();
    let h = grid.delta_xi();
    let rho = &profile.rho;
    let total = profile.circumference();
    // position in units of cells, measured from xi = -pi
    let pos = |xi: f64| {
        let x = (xi + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) / h;
        if x >= n as f64 {
            0.0
        } else {
            x
        }
    };
    let (pa, pb) = (pos(xi_a), pos(xi_b));
    let (lo, hi) = if pa <= pb { (pa, pb) } else { (pb, pa) };
    if hi == lo {
        return 0.0;
    }
    let rho_at = |p: f64| {
        let i = p.floor() as usize % n;
        let w = p - p.floor();
        (1.0 - w) * rho[i] + w * rho[(i + 1) % n]
    };
    let first = lo.ceil();
    let last = hi.floor();
    let forward = if first > last {
        0.5 * (hi - lo) * h * (rho_at(lo) + rho_at(hi))
    } else {
        let head = 0.5 * (first - lo) * h * (rho_at(lo) + rho_at(first));
        let tail = 0.5 * (hi - last) * h * (rho_at(last) + rho_at(hi));
        let cells = (last - first) as usize;
        head + grid::simpson_forward(rho, first as usize % n, cells, h) + tail
    };
    forward.min(total - forward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;

    fn constant(n: usize, f: f64, g: f64, h: f64, rho: f64) -> Profile {
        Profile::new(
            PeriodicGrid::new(n).unwrap(),
            vec![f; n],
            vec![g; n],
            vec![h; n],
            vec![rho; n],
        )
        .unwrap()
    }

    #[test]
    fn fiber_examples() {
        assert_eq!(fiber_point(1.0, 1.0, 1.0), (1.0, 1.0, 1.0));
        let (a, b, c) = fiber_point(0.5, 1.0, 1.0);
        assert!((a - 0.25).abs() < 1e-15 && (b - 3.25).abs() < 1e-15 && (c - 0.25).abs() < 1e-15);
        let (a, _, _) = fiber_point(1.0, 2.0, 3.0);
        assert!((a + 4.0).abs() < 1e-14);
    }

    #[test]
    fn constant_radius_two() {
        let k = sectional_curvatures(&constant(64, 2.0, 2.0, 2.0, 1.0));
        for i in 0..64 {
            assert!((k.kappa12[i] - 0.25).abs() < 1e-15);
            assert!((k.kappa23[i] - 0.25).abs() < 1e-15);
            assert_eq!(k.kappa01[i], 0.0);
            assert!((k.scalar_r[i] - 0.75).abs() < 1e-15);
        }
    }

    #[test]
    fn extrema_of_constants() {
        let e = profile_extrema(&constant(32, 0.5, 1.0, 1.0, 1.0));
        assert!(e.m.iter().all(|&m| m == 0.5));
        assert_eq!(e.m_check, 0.5);
        assert_eq!(e.g_max, 1.0);
        assert!(e.neck_locations.is_empty());
    }

    #[test]
    fn local_minima_periodic() {
        assert_eq!(local_minima(&[3.0, 1.0, 2.0, 4.0, 0.5, 5.0]), vec![1, 4]);
        assert_eq!(local_minima(&[1.0, 2.0, 3.0, 2.0]), vec![0]);
        assert_eq!(local_minima(&[2.0, 1.0, 1.0, 3.0]), vec![1]);
    }

    #[test]
    fn distances_constant_gauge() {
        let p = constant(64, 1.0, 1.0, 1.0, 5.0);
        let d = base_distance(&p, 0.0, std::f64::consts::PI);
        assert!((d - 5.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(base_distance(&p, 0.3, 0.3), 0.0);
        assert!((p.circumference() - 10.0 * std::f64::consts::PI).abs() < 1e-12);
        let d = base_distance(&p, -0.1234, 0.777);
        assert!((d - 5.0 * (0.777 + 0.1234)).abs() < 1e-12);
        // the shorter way round crosses the seam
        let d = base_distance(&p, -3.0, 3.0);
        assert!((d - 5.0 * (std::f64::consts::TAU - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn distance_variable_gauge() {
        let n = 512;
        let grid = PeriodicGrid::new(n).unwrap();
        let rho: Vec<f64> = grid.xi_values().iter().map(|x| 2.0 + x.cos()).collect();
        let p = Profile::new(grid, vec![1.0; n], vec![1.0; n], vec![1.0; n], rho).unwrap();
        let (a, b) = (-1.0_f64, 1.5_f64);
        let total = 4.0 * std::f64::consts::PI;
        let arc = |a: f64, b: f64| {
            let fwd = 2.0 * (b - a) + b.sin() - a.sin();
            fwd.min(total - fwd)
        };
        assert!((base_distance(&p, a, b) - arc(a, b)).abs() < 1e-4);
        assert!((base_distance(&p, -0.5, 0.25) - arc(-0.5, 0.25)).abs() < 1e-4);
        let (a, b) = (p.grid().xi_values()[100], p.grid().xi_values()[300]);
        assert!((base_distance(&p, a, b) - arc(a, b)).abs() < 1e-8);
    }
}
