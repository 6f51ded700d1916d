//! Warped Berger metric samples on the base circle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, PeriodicGrid};

/// The three fiber warp radii and the gauge density `rho = ds/dxi` at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    grid: PeriodicGrid,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub rho: Vec<f64>,
}

impl Profile {
    pub fn new(
        grid: PeriodicGrid,
        f: Vec<f64>,
        g: Vec<f64>,
        h: Vec<f64>,
        rho: Vec<f64>,
    ) -> Result<Self> {
        let p = Self { grid, f, g, h, rho };
        p.validate()?;
        Ok(p)
    }

    /// Checks lengths and strict positivity of every field.
    pub fn validate(&self) -> Result<()> {
        for (name, field) in self.named_fields() {
            self.grid.check_len(field)?;
            if let Some((index, &value)) = field
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v > 0.0))
            {
                return Err(Error::NonPositive {
                    field: name,
                    index,
                    value,
                });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn n_points(&self) -> usize {
        self.grid.n_points()
    }

    pub fn named_fields(&self) -> [(&'static str, &Vec<f64>); 4] {
        [
            ("f", &self.f),
            ("g", &self.g),
            ("h", &self.h),
            ("rho", &self.rho),
        ]
    }

    /// Arclength derivative operators for this profile's gauge.
    pub fn ops(&self) -> ArclengthOps {
        ArclengthOps::new(&self.rho, self.grid.delta_xi())
    }

    /// Arclength map `s(xi)` anchored at `xi = 0`, by the trapezoid rule.
    /// Reporting only; the flow never uses it.
    pub fn arclength_map(&self) -> Vec<f64> {
        let n = self.n_points();
        let h = self.grid.delta_xi();
        let c = self.grid.center();
        let mut s = vec![0.0; n];
        for j in 1..=(n / 2) {
            let i = (c + j) % n;
            let prev = (c + j - 1) % n;
            s[i] = s[prev] + 0.5 * h * (self.rho[i] + self.rho[prev]);
        }
        for j in 1..(n / 2) {
            let i = (c + n - j) % n;
            let prev = (c + n - j + 1) % n;
            s[i] = s[prev] - 0.5 * h * (self.rho[i] + self.rho[prev]);
        }
        s
    }

    /// Base circumference `int rho dxi`.
    pub fn circumference(&self) -> f64 {
        grid::periodic_integral(&self.rho, self.grid.delta_xi())
    }

    /// Largest deviation from evenness about grid index `center`, over all fields.
    pub fn reflection_defect(&self, center: usize) -> f64 {
        let n = self.n_points();
        let mut worst: f64 = 0.0;
        for (_, field) in self.named_fields() {
            for j in 1..(n / 2) {
                let a = field[(center + j) % n];
                let b = field[(center + n - j) % n];
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }
}

/// Arclength derivatives `d/ds = rho^-1 d/dxi` and
/// `d2/ds2 = rho^-2 (d2/dxi2 - (rho_xi/rho) d/dxi)` on a fixed gauge.
#[derive(Debug, Clone)]
pub struct ArclengthOps {
    h: f64,
    inv_rho: Vec<f64>,
    log_rho_xi: Vec<f64>,
}

impl ArclengthOps {
    pub fn new(rho: &[f64], h: f64) -> Self {
        let rho_xi = grid::d1_vec(rho, h);
        let inv_rho: Vec<f64> = rho.iter().map(|r| 1.0 / r).collect();
        let log_rho_xi = rho_xi.iter().zip(&inv_rho).map(|(a, b)| a * b).collect();
        Self {
            h,
            inv_rho,
            log_rho_xi,
        }
    }

    pub fn len(&self) -> usize {
        self.inv_rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_rho.is_empty()
    }

    /// First and second arclength derivatives at once.
    pub fn ds_dss(&self, field: &[f64], ds: &mut [f64], dss: &mut [f64]) {
        grid::d1(field, self.h, ds);
        grid::d2(field, self.h, dss);
        for i in 0..field.len() {
            let ir = self.inv_rho[i];
            dss[i] = (dss[i] - self.log_rho_xi[i] * ds[i]) * ir * ir;
            ds[i] *= ir;
        }
    }

    pub fn ds(&self, field: &[f64]) -> Vec<f64> {
        let mut out = grid::d1_vec(field, self.h);
        for (o, ir) in out.iter_mut().zip(&self.inv_rho) {
            *o *= ir;
        }
        out
    }

    pub fn dss(&self, field: &[f64]) -> Vec<f64> {
        let mut ds = vec![0.0; field.len()];
        let mut dss = vec![0.0; field.len()];
        self.ds_dss(field, &mut ds, &mut dss);
        dss
    }
}

/// Arclength derivative of order 1 or 2 of an arbitrary sampled field.
pub fn s_derivative(profile: &Profile, field: &[f64], order: u8) -> Result<Vec<f64>> {
    profile.grid().check_len(field)?;
    let ops = profile.ops();
    match order {
        1 => Ok(ops.ds(field)),
        2 => Ok(ops.dss(field)),
        _ => Err(Error::InvalidParameter(format!(
            "derivative order must be 1 or 2, got {order}"
        ))),
    }
}
