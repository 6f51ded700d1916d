//! Parabolically dilated variables about a neck, the nonlocal drift term and
//! the cutoff eccentricity on a fixed sigma grid.

use serde::{Deserialize, Serialize};

use super::interp::Pchip;
use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::grid;
use crate::profile::ArclengthOps;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupFrame {
    pub t: f64,
    pub t_hat: f64,
    /// `-log(T_hat - t)`.
    pub tau: f64,
    pub neck_index: usize,
    pub delta_xi: f64,
    /// `e^{tau/2}` times signed arclength from the neck.
    pub sigma: Vec<f64>,
    /// `d sigma / d xi`.
    pub sigma_xi: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub nonlocal_i: Vec<f64>,
}

impl BlowupFrame {
    /// Assembles a frame from dilated warps on a grid with gauge `sigma_xi`,
    /// computing `sigma`, the derived fields and the nonlocal term.
    pub fn from_fields(
        tau: f64,
        neck_index: usize,
        delta_xi: f64,
        sigma_xi: Vec<f64>,
        u: Vec<f64>,
        v: Vec<f64>,
    ) -> Result<Self> {
        let n = u.len();
        if v.len() != n || sigma_xi.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: if v.len() != n { v.len() } else { sigma_xi.len() },
            });
        }
        if neck_index >= n {
            return Err(Error::Contract(format!("neck index {neck_index} outside grid of {n}")));
        }
        if u.iter().chain(&v).any(|w| !(*w > 0.0)) {
            return Err(Error::Contract("dilated warps must be positive".into()));
        }
        let sigma = grid::cumulative_from(&sigma_xi, neck_index, delta_xi);
        let phi: Vec<f64> = u.iter().map(|w| w - 1.0).collect();
        let psi: Vec<f64> = v.iter().map(|w| w - 1.0).collect();
        let x = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let y = phi.iter().zip(&psi).map(|(a, b)| a + 2.0 * b).collect();
        let mut frame = Self {
            t: f64::NAN,
            t_hat: f64::NAN,
            tau,
            neck_index,
            delta_xi,
            sigma,
            sigma_xi,
            u,
            v,
            phi,
            psi,
            x,
            y,
            nonlocal_i: Vec::new(),
        };
        frame.nonlocal_i = nonlocal_i(&frame);
        Ok(frame)
    }

    pub fn n_points(&self) -> usize {
        self.u.len()
    }

    /// Grid indices in increasing order of `sigma`.
    pub fn ordered_indices(&self) -> Vec<usize> {
        let n = self.n_points();
        let start = (self.neck_index + n / 2 + 1) % n;
        (0..n).map(|j| (start + j) % n).collect()
    }

    /// `(sigma, field)` pairs in increasing `sigma`.
    pub fn ordered(&self, field: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.ordered_indices()
            .into_iter()
            .map(|i| (self.sigma[i], field[i]))
            .unzip()
    }
}

pub fn blowup_frame(state: &FlowState, t_hat: f64, neck_xi: f64) -> Result<BlowupFrame> {
    if !(t_hat > state.t) {
        return Err(Error::Contract(format!(
            "singular time estimate {t_hat} does not exceed t = {}",
            state.t
        )));
    }
    let p = &state.profile;
    let n = p.n_points();
    let neck = p.grid().nearest_index(neck_xi);
    let f = &p.f;
    if f[neck] > f[(neck + 1) % n] || f[neck] > f[(neck + n - 1) % n] {
        return Err(Error::Contract(format!(
            "grid point {neck} is not a local minimizer of f"
        )));
    }
    let remaining = t_hat - state.t;
    let scale = 1.0 / remaining.sqrt();
    let u = f.iter().map(|w| 0.5 * scale * w).collect();
    let v = p.g.iter().map(|w| 0.5 * scale * w).collect();
    let sigma_xi = p.rho.iter().map(|r| scale * r).collect();
    let mut frame =
        BlowupFrame::from_fields(-remaining.ln(), neck, p.grid().delta_xi(), sigma_xi, u, v)?;
    frame.t = state.t;
    frame.t_hat = t_hat;
    Ok(frame)
}

/// `I(sigma) = int_0^sigma (u_ss/u + 2 v_ss/v)` with sigma-derivatives taken
/// through the frame's gauge.
pub fn nonlocal_i(frame: &BlowupFrame) -> Vec<f64> {
    let ops = ArclengthOps::new(&frame.sigma_xi, frame.delta_xi);
    let uss = ops.dss(&frame.u);
    let vss = ops.dss(&frame.v);
    let integrand: Vec<f64> = (0..frame.n_points())
        .map(|i| (uss[i] / frame.u[i] + 2.0 * vss[i] / frame.v[i]) * frame.sigma_xi[i])
        .collect();
    grid::cumulative_from(&integrand, frame.neck_index, frame.delta_xi)
}

/// Uniform grid on `[-half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaGrid {
    pub half_width: f64,
    pub spacing: f64,
}

impl Default for SigmaGrid {
    fn default() -> Self {
        Self {
            half_width: 16.0,
            spacing: 0.01,
        }
    }
}

impl SigmaGrid {
    pub fn len(&self) -> usize {
        (2.0 * self.half_width / self.spacing).round() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> Vec<f64> {
        let m = (self.len() - 1) / 2;
        (0..self.len())
            .map(|k| (k as f64 - m as f64) * self.spacing)
            .collect()
    }
}

fn psi_exp(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth even cutoff: 1 on `|z| <= 1`, 0 on `|z| >= 2`.
pub fn cutoff_beta(z: f64) -> f64 {
    let a = z.abs();
    let outer = psi_exp(2.0 - a);
    outer / (outer + psi_exp(a - 1.0))
}

/// `X = beta(e^{-eps tau/2} sigma) x` resampled onto `grid`.
pub fn cutoff_x(frame: &BlowupFrame, eps: f64, grid: &SigmaGrid) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let (s, x) = frame.ordered(&frame.x);
    let interp = Pchip::new(s, x)?;
    let shrink = (-0.5 * eps * frame.tau).exp();
    grid.values()
        .into_iter()
        .map(|sig| {
            let b = cutoff_beta(shrink * sig);
            if b == 0.0 {
                return Ok(0.0);
            }
            interp.eval(sig).map(|xv| b * xv).ok_or_else(|| {
                Error::Accuracy(format!(
                    "sigma = {sig} lies outside the frame but inside the cutoff support"
                ))
            })
        })
        .collect()
}
