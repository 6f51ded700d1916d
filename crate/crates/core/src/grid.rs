//! Uniform periodic grid on the base circle, fourth-order central stencils and
//! the quadrature rules used for arclength.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid of `n_points` angles in `[-pi, pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    n_points: usize,
    delta_xi: f64,
    xi_values: Vec<f64>,
}

impl PeriodicGrid {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 16 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n_points));
        }
        let delta_xi = 2.0 * PI / n_points as f64;
        // offsets from the centre keep the grid exactly symmetric about xi = 0
        let half = (n_points / 2) as f64;
        let xi_values = (0..n_points)
            .map(|k| (k as f64 - half) * delta_xi)
            .collect();
        Ok(Self {
            n_points,
            delta_xi,
            xi_values,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn delta_xi(&self) -> f64 {
        self.delta_xi
    }

    pub fn xi_values(&self) -> &[f64] {
        &self.xi_values
    }

    /// Index of the grid point at `xi = 0`.
    pub fn center(&self) -> usize {
        self.n_points / 2
    }

    /// Grid index nearest to an arbitrary angle (wrapped onto the circle).
    pub fn nearest_index(&self, xi: f64) -> usize {
        let k = ((xi + PI) / self.delta_xi).round() as i64;
        k.rem_euclid(self.n_points as i64) as usize
    }

    /// Periodic index arithmetic.
    #[inline]
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n_points as isize) as usize
    }

    pub fn check_len(&self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.n_points {
            return Err(Error::LengthMismatch {
                expected: self.n_points,
                got: samples.len(),
            });
        }
        Ok(())
    }
}

/// Applies a five-point periodic stencil `op(m2, m1, c, p1, p2)` at every index.
#[inline]
fn stencil5(field: &[f64], out: &mut [f64], op: impl Fn(f64, f64, f64, f64, f64) -> f64) {
    let n = field.len();
    let at = |i: usize| field[i % n];
    for i in [0, 1, n - 2, n - 1] {
        out[i] = op(at(i + n - 2), at(i + n - 1), field[i], at(i + 1), at(i + 2));
    }
    for (o, w) in out[2..n - 2].iter_mut().zip(field.windows(5)) {
        *o = op(w[0], w[1], w[2], w[3], w[4]);
    }
}

/// Fourth-order central first derivative on a periodic array with spacing `h`.
///
/// Written in terms of differences so that constant input gives exact zeros.
pub fn d1(field: &[f64], h: f64, out: &mut [f64]) {
    let scale = 1.0 / (12.0 * h);
    stencil5(field, out, |m2, m1, _, p1, p2| (8.0 * (p1 - m1) - (p2 - m2)) * scale);
}

/// Fourth-order central second derivative on a periodic array with spacing `h`.
pub fn d2(field: &[f64], h: f64, out: &mut [f64]) {
    let scale = 1.0 / (12.0 * h * h);
    stencil5(field, out, |m2, m1, c, p1, p2| {
        (16.0 * ((p1 - c) + (m1 - c)) - ((p2 - c) + (m2 - c))) * scale
    });
}

pub fn d1_vec(field: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; field.len()];
    d1(field, h, &mut out);
    out
}

pub fn d2_vec(field: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; field.len()];
    d2(field, h, &mut out);
    out
}

/// Integral over the cell `[x_i, x_{i+1}]` of the cubic through the four
/// neighbouring samples (periodic). Fourth-order accurate.
#[inline]
pub fn cell_integral(values: &[f64], i: usize, h: f64) -> f64 {
    let n = values.len();
    let m1 = values[(i + n - 1) % n];
    let c0 = values[i];
    let p1 = values[(i + 1) % n];
    let p2 = values[(i + 2) % n];
    h * (13.0 * (c0 + p1) - (m1 + p2)) / 24.0
}

/// Integral over `m` consecutive cells starting at index `start` going forward
/// (periodic), by composite Simpson. Odd cell counts close with the 3/8 rule;
/// a single cell falls back to the four-point cubic rule.
pub fn simpson_forward(values: &[f64], start: usize, m: usize, h: f64) -> f64 {
    let n = values.len();
    let at = |k: usize| values[(start + k) % n];
    match m {
        0 => 0.0,
        1 => cell_integral(values, start, h),
        _ => {
            let (simpson_cells, tail) = if m.is_multiple_of(2) { (m, 0) } else { (m - 3, 3) };
            let mut acc = 0.0;
            let mut k = 0;
            while k < simpson_cells {
                acc += h / 3.0 * (at(k) + 4.0 * at(k + 1) + at(k + 2));
                k += 2;
            }
            if tail == 3 {
                acc += 3.0 * h / 8.0
                    * (at(k) + 3.0 * at(k + 1) + 3.0 * at(k + 2) + at(k + 3));
            }
            acc
        }
    }
}

/// Full periodic integral; for a periodic integrand the trapezoid sum is the
/// composite Simpson sum as well.
pub fn periodic_integral(values: &[f64], h: f64) -> f64 {
    values.iter().sum::<f64>() * h
}

/// Cumulative integral outward from `anchor` in both directions over half the
/// circle each, using the four-point cell rule. Index `anchor + j` gets the
/// signed integral from the anchor (positive direction for `j > 0`).
pub fn cumulative_from(values: &[f64], anchor: usize, h: f64) -> Vec<f64> {
    let n = values.len();
    let half = n / 2;
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for j in 0..half {
        let i = (anchor + j) % n;
        acc += cell_integral(values, i, h);
        out[(anchor + j + 1) % n] = acc;
    }
    let mut acc = 0.0;
    for j in 0..(n - half) {
        let i = (anchor + n - j - 1) % n;
        acc -= cell_integral(values, i, h);
        // the antipodal point is reached from both sides; keep the positive sweep
        if j + 1 < n - half {
            out[(anchor + n - j - 1) % n] = acc;
        }
    }
    out
}

/// Fourth-order first derivative on a non-periodic array (at least five
/// samples), one-sided near the ends.
pub fn d1_open(field: &[f64], h: f64) -> Vec<f64> {
    let n = field.len();
    assert!(n >= 5, "open stencil needs five samples");
    let scale = 1.0 / (12.0 * h);
    let mut out = vec![0.0; n];
    for (o, w) in out[2..n - 2].iter_mut().zip(field.windows(5)) {
        *o = (8.0 * (w[3] - w[1]) - (w[4] - w[0])) * scale;
    }
    let edge = |v: [f64; 5]| {
        let d = [v[1] - v[0], v[2] - v[0], v[3] - v[0], v[4] - v[0]];
        (
            (48.0 * d[0] - 36.0 * d[1] + 16.0 * d[2] - 3.0 * d[3]) * scale,
            (18.0 * (v[2] - v[1]) - 6.0 * (v[3] - v[1]) + (v[4] - v[1]) - 3.0 * (v[0] - v[1]))
                * scale,
        )
    };
    let (a, b) = edge([field[0], field[1], field[2], field[3], field[4]]);
    out[0] = a;
    out[1] = b;
    let (a, b) = edge([field[n - 1], field[n - 2], field[n - 3], field[n - 4], field[n - 5]]);
    out[n - 1] = -a;
    out[n - 2] = -b;
    out
}
