//! Residuals of the derived evolution equations along a computed trajectory.
//!
//! The left side is a centered time difference over three snapshots; the
//! right side is the stated evolution equation evaluated at the middle one.
//! All equations assume `h = g`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, FlowState};
use crate::profile::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "ecc_fg")]
    EccFg,
    #[serde(rename = "ecc_gf")]
    EccGf,
    #[serde(rename = "f_s")]
    FS,
    #[serde(rename = "g_s")]
    GS,
    #[serde(rename = "kappa01")]
    Kappa01,
    #[serde(rename = "kappa02")]
    Kappa02,
    #[serde(rename = "recip_h")]
    RecipH,
    #[serde(rename = "recip_P")]
    RecipP,
    #[serde(rename = "Q")]
    Q,
    #[serde(rename = "k")]
    K,
    #[serde(rename = "F")]
    BigF,
}

impl Quantity {
    pub const ALL: [Quantity; 11] = [
        Quantity::EccFg,
        Quantity::EccGf,
        Quantity::FS,
        Quantity::GS,
        Quantity::Kappa01,
        Quantity::Kappa02,
        Quantity::RecipH,
        Quantity::RecipP,
        Quantity::Q,
        Quantity::K,
        Quantity::BigF,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::EccFg => "ecc_fg",
            Quantity::EccGf => "ecc_gf",
            Quantity::FS => "f_s",
            Quantity::GS => "g_s",
            Quantity::Kappa01 => "kappa01",
            Quantity::Kappa02 => "kappa02",
            Quantity::RecipH => "recip_h",
            Quantity::RecipP => "recip_P",
            Quantity::Q => "Q",
            Quantity::K => "k",
            Quantity::BigF => "F",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown quantity '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub quantity: Quantity,
    /// Time of the middle snapshot.
    pub t: f64,
    pub max: f64,
    /// Weighted by arclength.
    pub l2: f64,
}

/// Largest admissible `(t2 - t0) max|f_t / f|`.
pub const MAX_WINDOW_CHANGE: f64 = 0.05;

/// Points with `|log f|` below this are left out of the `F` residual.
pub const LOG_F_MASK: f64 = 1e-6;

struct Local {
    f: Vec<f64>,
    g: Vec<f64>,
    fs: Vec<f64>,
    fss: Vec<f64>,
    gs: Vec<f64>,
    gss: Vec<f64>,
}

impl Local {
    fn of(p: &Profile) -> Self {
        let ops = p.ops();
        let n = p.n_points();
        let mut l = Local {
            f: p.f.clone(),
            g: p.g.clone(),
            fs: vec![0.0; n],
            fss: vec![0.0; n],
            gs: vec![0.0; n],
            gss: vec![0.0; n],
        };
        ops.ds_dss(&p.f, &mut l.fs, &mut l.fss);
        ops.ds_dss(&p.g, &mut l.gs, &mut l.gss);
        l
    }
}

fn quantity_at(q: Quantity, l: &Local, i: usize) -> f64 {
    let (f, g, fs, fss, gs, gss) = (l.f[i], l.g[i], l.fs[i], l.fss[i], l.gs[i], l.gss[i]);
    match q {
        Quantity::EccFg => (f - g) / g,
        Quantity::EccGf => (g - f) / f,
        Quantity::FS => fs,
        Quantity::GS => gs,
        Quantity::Kappa01 => -fss / f,
        Quantity::Kappa02 => -gss / g,
        Quantity::RecipH => 1.0 / f - 1.0 / g,
        Quantity::RecipP => 1.0 / (f * f) - 1.0 / (g * g),
        Quantity::Q => (fs / f - gs / g).powi(2),
        Quantity::K => fs / f - gs / g,
        Quantity::BigF => f * fss * f.ln(),
    }
}

/// Values of `q` on the grid of `p`.
pub fn quantity_field(p: &Profile, q: Quantity) -> Vec<f64> {
    let l = Local::of(p);
    (0..p.n_points()).map(|i| quantity_at(q, &l, i)).collect()
}

fn check_berger(p: &Profile) -> Result<()> {
    let scale = p.g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let gap = p.g.iter().zip(&p.h).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if gap > 1e-12 * scale {
        return Err(Error::Contract(format!(
            "evolution equations need h = g; max|g - h| = {gap:e}"
        )));
    }
    Ok(())
}

/// Right side of the evolution equation of `q` at the state `p`.
pub fn evolution_rhs(p: &Profile, q: Quantity) -> Result<Vec<f64>> {
    check_berger(p)?;
    let l = Local::of(p);
    let n = p.n_points();
    let ops = p.ops();
    let qv: Vec<f64> = (0..n).map(|i| quantity_at(q, &l, i)).collect();
    let mut qs = vec![0.0; n];
    let mut qss = vec![0.0; n];
    ops.ds_dss(&qv, &mut qs, &mut qss);
    let ks = if q == Quantity::Q {
        let k: Vec<f64> = (0..n).map(|i| quantity_at(Quantity::K, &l, i)).collect();
        ops.ds(&k)
    } else {
        Vec::new()
    };

    let mut out = vec![0.0; n];
    for i in 0..n {
        let (f, g, fs, fss, gs, gss) = (l.f[i], l.g[i], l.fs[i], l.fss[i], l.gs[i], l.gss[i]);
        let (lf, lg) = (fs / f, gs / g);
        let lap = qss[i] + (lf + 2.0 * lg) * qs[i];
        let (f2, g2) = (f * f, g * g);
        let g3 = g2 * g;
        let g4 = g2 * g2;
        let g5 = g4 * g;
        let g6 = g3 * g3;
        let v = qv[i];
        out[i] = match q {
            Quantity::EccFg => {
                lap + (lg - lf) * qs[i] - 4.0 * (f / g3) * ((f + g) / g) * v
            }
            Quantity::EccGf => {
                lap + (lf - lg) * qs[i] - 4.0 * (f / g3) * ((g + f) / f) * v
            }
            Quantity::FS => {
                lap - 2.0 * lf * qs[i] - (6.0 * f2 / g4 + 2.0 * lg * lg) * fs
                    + 8.0 * f2 * f / g5 * gs
            }
            Quantity::GS => {
                lap - 2.0 * lg * qs[i]
                    + (4.0 / g2 - lg * lg - lf * lf - 6.0 * f2 / g4) * gs
                    + 4.0 * f / g3 * fs
            }
            Quantity::Kappa01 => {
                let k02 = -gss / g;
                let k12 = f2 / g4 - lf * lg;
                lap + 2.0 * v * v - 4.0 * (lg * lg + f2 / g4) * v
                    + 4.0 * (k12 + f2 / g4) * k02
                    + 12.0 * fs * fs / g4
                    + 40.0 * f2 * gs * gs / g6
                    - 48.0 * f * fs * gs / g5
                    - 4.0 * fs * gs.powi(3) / (f * g3)
            }
            Quantity::Kappa02 => {
                let k01 = -fss / f;
                lap + 2.0 * v * v
                    + (4.0 * f2 / g4 - 2.0 * lf * lg) * k01
                    + (8.0 / g2 - 8.0 * f2 / g4 - 2.0 * lf * lf - 4.0 * lg * lg) * v
                    - 4.0 * fs * fs / g4
                    + 24.0 * f * fs * gs / g5
                    - 2.0 * fs.powi(3) * gs / (f2 * f * g)
                    - 24.0 * f2 * gs * gs / g6
                    + 8.0 * gs * gs / g4
                    - 2.0 * gs.powi(4) / g4
            }
            Quantity::RecipH => {
                lap + (g * fs / f2 + lg) * qs[i]
                    + (f - g) * ((2.0 * f + 4.0 * g) / g5 - fs * fs / (f2 * f2))
            }
            Quantity::RecipP => {
                let f6 = f2 * f2 * f2;
                lap + 2.0 * (lg + g2 * fs / (f2 * f)) * qs[i]
                    + 4.0 * (g2 - f2) * (g6 * fs * fs - f6) / (f6 * g6)
            }
            Quantity::K | Quantity::Q => {
                let a = 2.0 * lg * lg + lf * lf + 8.0 * f2 / g4;
                let forcing = 8.0 * gs * (f2 - g2) / g5;
                if q == Quantity::K {
                    lap - a * v + forcing
                } else {
                    let k = lf - lg;
                    lap - 2.0 * ks[i] * ks[i] - 2.0 * v * a + 2.0 * forcing * k
                }
            }
            Quantity::BigF => {
                let lnf = f.ln();
                if lnf.abs() < LOG_F_MASK {
                    0.0
                } else {
                    let n_term = -f
                        * lnf
                        * (12.0 * f * fs * fs / g4 - 48.0 * f2 * fs * gs / g5
                            + 40.0 * f2 * f * gs * gs / g6
                            - 4.0 * fs * gs.powi(3) / g3)
                        - 8.0 * f2 * f2 * lnf / g4 * (fss / f - gss / g)
                        - 2.0 * fss * lnf * (f2 * f / (g4 * lnf) + fss)
                        + 2.0 * fs * fs * fss / f * (2.0 + 1.0 / lnf)
                        - 4.0 * f * lnf * (gs * gs * fss / g2 + fs * gs * gss / g2 - lf * lf * fss);
                    lap - 2.0 * (2.0 + 1.0 / lnf) * lf * qs[i] + n_term
                }
            }
        };
    }
    Ok(out)
}

/// Residual of the evolution equation of `q` over three snapshots with
/// increasing times.
pub fn evolution_residual(window: &[FlowState], q: Quantity) -> Result<ResidualNorms> {
    if window.len() != 3 {
        return Err(Error::InsufficientData(format!(
            "residual needs three snapshots, got {}",
            window.len()
        )));
    }
    let n = window[1].profile.n_points();
    for s in window {
        if s.profile.n_points() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: s.profile.n_points(),
            });
        }
    }
    let (t0, t1, t2) = (window[0].t, window[1].t, window[2].t);
    if !(t0 < t1 && t1 < t2) {
        return Err(Error::Contract("snapshot times must increase".into()));
    }
    let mid = &window[1].profile;
    let rates = flow::rhs(&window[1])?;
    let rel_rate = (0..n).fold(0.0_f64, |m, i| m.max((rates.f[i] / mid.f[i]).abs()));
    let change = (t2 - t0) * rel_rate;
    if change > MAX_WINDOW_CHANGE {
        return Err(Error::Accuracy(format!(
            "snapshots too far apart: (t2 - t0) max|f_t/f| = {change:.3e}"
        )));
    }

    let rhs = evolution_rhs(mid, q)?;
    let values: Vec<Vec<f64>> = window.iter().map(|s| quantity_field(&s.profile, q)).collect();
    let (h1, h2) = (t1 - t0, t2 - t1);
    let w0 = -h2 / (h1 * (h1 + h2));
    let w1 = (h2 - h1) / (h1 * h2);
    let w2 = h1 / (h2 * (h1 + h2));
    let dxi = mid.grid().delta_xi();
    let mut max = 0.0_f64;
    let mut sum = 0.0;
    for i in 0..n {
        if q == Quantity::BigF && mid.f[i].ln().abs() < LOG_F_MASK {
            continue;
        }
        let lhs = w0 * values[0][i] + w1 * values[1][i] + w2 * values[2][i];
        let r = lhs - rhs[i];
        max = max.max(r.abs());
        sum += r * r * mid.rho[i] * dxi;
    }
    if !(max.is_finite() && sum.is_finite()) {
        return Err(Error::NonFinite("residual"));
    }
    Ok(ResidualNorms {
        quantity: q,
        t: t1,
        max,
        l2: sum.sqrt(),
    })
}

/// Steps `initial` with constant `dt` and returns the states after
/// `mid_steps - spacing`, `mid_steps` and `mid_steps + spacing` steps.
pub fn fixed_step_window(
    initial: &FlowState,
    dt: f64,
    mid_steps: usize,
    spacing: usize,
) -> Result<Vec<FlowState>> {
    if spacing == 0 || spacing > mid_steps {
        return Err(Error::InvalidParameter(format!(
            "window spacing {spacing} must lie in 1..={mid_steps}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let marks = [mid_steps - spacing, mid_steps, mid_steps + spacing];
    let mut state = initial.clone();
    let mut out = Vec::with_capacity(3);
    for k in 0..=marks[2] {
        if marks.contains(&k) {
            out.push(state.clone());
        }
        if k < marks[2] {
            let next_t = (k + 1) as f64 * dt + initial.t;
            state = flow::step(&state, dt)?;
            state.t = next_t;
        }
    }
    Ok(out)
}
