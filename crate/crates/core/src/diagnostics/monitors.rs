//! Pointwise monitors of one flow state and the neck region.

use serde::{Deserialize, Serialize};

use crate::curvature::{curvatures_from, profile_extrema, WarpDerivatives};
use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::profile::Profile;

/// Suprema of `(T - t) |kappa|` for each plane and for the two gaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ScaleInvariant {
    pub k12: f64,
    pub k23: f64,
    pub k31: f64,
    pub k01: f64,
    pub k02: f64,
    pub k03: f64,
    pub k12_minus_k23: f64,
    pub k01_minus_k02: f64,
}

impl ScaleInvariant {
    pub const NAMES: [&'static str; 8] = [
        "k12",
        "k23",
        "k31",
        "k01",
        "k02",
        "k03",
        "k12_minus_k23",
        "k01_minus_k02",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.k12,
            self.k23,
            self.k31,
            self.k01,
            self.k02,
            self.k03,
            self.k12_minus_k23,
            self.k01_minus_k02,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSnapshot {
    pub t: f64,
    pub t_hat: f64,
    pub m_check: f64,
    pub g_max: f64,
    /// `max |(f - g)/g|`.
    pub ecc_max: f64,
    /// `max (1/f - 1/g)`.
    pub recip_gap_max: f64,
    /// `max (f_s/f - g_s/g)^2`.
    pub q_max: f64,
    pub k_field: Vec<f64>,
    pub f_grad_max: f64,
    /// `min F = f f_ss log f` over the neck region; `None` when it is empty.
    pub big_f_min: Option<f64>,
    /// `max f f_ss |log f|` over the neck components of the region.
    pub neck_f_abs_max: Option<f64>,
    pub scale_inv: ScaleInvariant,
    pub diameter: f64,
    pub crit_count: usize,
    /// `min (g - f)` and `min (h - g)`.
    pub order_gap_fg: f64,
    pub order_gap_gh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    /// `f < delta` with `f_ss > 0`.
    Neck,
    /// `f > delta` with `f_ss < 0`.
    Shoulder,
}

/// One connected run of grid points, wrapping periodically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionComponent {
    pub start: usize,
    pub len: usize,
    pub kind: ComponentKind,
    pub xi_start: f64,
    pub xi_end: f64,
}

impl RegionComponent {
    pub fn indices(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).map(move |j| (self.start + j) % n)
    }
}

/// Connected components of `{f_ss log(f/delta) < 0}`.
pub fn neck_region(state: &FlowState, delta: f64) -> Result<Vec<RegionComponent>> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let p = &state.profile;
    let d = WarpDerivatives::of(p);
    Ok(region_from(p, &d.fss, delta))
}

fn region_from(p: &Profile, fss: &[f64], delta: f64) -> Vec<RegionComponent> {
    let n = p.n_points();
    let inside: Vec<bool> = (0..n).map(|i| fss[i] * (p.f[i] / delta).ln() < 0.0).collect();
    let xi = p.grid().xi_values();
    let make = |start: usize, len: usize| RegionComponent {
        start,
        len,
        kind: if p.f[start] < delta {
            ComponentKind::Neck
        } else {
            ComponentKind::Shoulder
        },
        xi_start: xi[start],
        xi_end: xi[(start + len - 1) % n],
    };
    if inside.iter().all(|&b| b) {
        return vec![make(0, n)];
    }
    // start scanning just after a point outside the region
    let first_out = inside.iter().position(|&b| !b).unwrap_or(0);
    let mut out = Vec::new();
    let mut j = 0;
    while j < n {
        let i = (first_out + 1 + j) % n;
        if inside[i] {
            let mut len = 0;
            while len < n && inside[(i + len) % n] {
                len += 1;
            }
            out.push(make(i, len));
            j += len;
        } else {
            j += 1;
        }
    }
    out.sort_by_key(|c| c.start);
    out
}

/// Number of sign changes of `values`, ignoring entries below `tol` in size.
pub fn sign_changes(values: &[f64], tol: f64) -> usize {
    let signs: Vec<bool> = values
        .iter()
        .filter(|v| v.abs() > tol)
        .map(|v| *v > 0.0)
        .collect();
    if signs.is_empty() {
        return 0;
    }
    let mut count = signs.windows(2).filter(|w| w[0] != w[1]).count();
    // periodic closure
    if signs[0] != signs[signs.len() - 1] {
        count += 1;
    }
    count
}

/// Relative threshold below which `f_s` counts as zero in the critical-point count.
pub const CRIT_TOL: f64 = 1e-12;

pub fn monitor_snapshot(state: &FlowState, t_hat: f64, delta: f64) -> Result<EstimateSnapshot> {
    if !(t_hat > state.t) {
        return Err(Error::Contract(format!(
            "singular time estimate {t_hat} does not exceed t = {}",
            state.t
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let p = &state.profile;
    let n = p.n_points();
    let (f, g, h) = (&p.f, &p.g, &p.h);
    let d = WarpDerivatives::of(p);
    let curv = curvatures_from(p, &d);
    let ext = profile_extrema(p);
    let remaining = t_hat - state.t;

    let max_of = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    let ecc_max = max_of(&mut (0..n).map(|i| ((f[i] - g[i]) / g[i]).abs()));
    let recip_gap_max = max_of(&mut (0..n).map(|i| 1.0 / f[i] - 1.0 / g[i]));
    let k_field: Vec<f64> = (0..n).map(|i| d.fs[i] / f[i] - d.gs[i] / g[i]).collect();
    let q_max = max_of(&mut k_field.iter().map(|k| k * k));
    let f_grad_max = max_of(&mut d.fs.iter().map(|v| v.abs()));

    let region = region_from(p, &d.fss, delta);
    let big_f = |i: usize| f[i] * d.fss[i] * f[i].ln();
    let big_f_min = region
        .iter()
        .flat_map(|c| c.indices(n).collect::<Vec<_>>())
        .map(big_f)
        .reduce(f64::min);
    let neck_f_abs_max = region
        .iter()
        .filter(|c| c.kind == ComponentKind::Neck)
        .flat_map(|c| c.indices(n).collect::<Vec<_>>())
        .map(|i| big_f(i).abs())
        .reduce(f64::max);

    let sup = |v: &[f64]| remaining * v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let gap_sup = |a: &[f64], b: &[f64]| {
        remaining * a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    };
    let scale_inv = ScaleInvariant {
        k12: sup(&curv.kappa12),
        k23: sup(&curv.kappa23),
        k31: sup(&curv.kappa31),
        k01: sup(&curv.kappa01),
        k02: sup(&curv.kappa02),
        k03: sup(&curv.kappa03),
        k12_minus_k23: gap_sup(&curv.kappa12, &curv.kappa23),
        k01_minus_k02: gap_sup(&curv.kappa01, &curv.kappa02),
    };
    let grad_scale = f_grad_max.max(f64::MIN_POSITIVE);
    Ok(EstimateSnapshot {
        t: state.t,
        t_hat,
        m_check: ext.m_check,
        g_max: ext.g_max,
        ecc_max,
        recip_gap_max,
        q_max,
        k_field,
        f_grad_max,
        big_f_min,
        neck_f_abs_max,
        scale_inv,
        diameter: p.circumference(),
        crit_count: sign_changes(&d.fs, CRIT_TOL * grad_scale),
        order_gap_fg: (0..n).map(|i| g[i] - f[i]).fold(f64::INFINITY, f64::min),
        order_gap_gh: (0..n).map(|i| h[i] - g[i]).fold(f64::INFINITY, f64::min),
    })
}

/// Default threshold for the neck region: `min(0.1, Mcheck/2)` at the first
/// time `Mcheck` falls below a tenth of its initial value, else `0.1`.
pub fn default_delta(m_check_series: &[f64]) -> f64 {
    let Some(&m0) = m_check_series.first() else {
        return 0.1;
    };
    m_check_series
        .iter()
        .find(|&&m| m < 0.1 * m0)
        .map_or(0.1, |&m| (0.5 * m).min(0.1))
}
