//! Initial data: the smoothed neck-bump profile, homogeneous products,
//! cosine perturbations, and the checkable conditions on admissible data.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::curvature::{local_minima, sectional_curvatures, WarpDerivatives};
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::profile::Profile;

/// How the corner of the capped profile at `|s| = lambda` is removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    /// `gamma(sigma(s))` with a smooth saturating arclength `sigma` that is the
    /// identity up to `lambda - 2 delta` and equals `lambda` from
    /// `lambda + 2 delta` on.
    #[default]
    Reparametrize,
    /// The C1 constant-curvature patch on `| |s| - lambda | < delta`, averaged
    /// against a bump of radius `delta/2`.
    PatchMollify,
}

impl Smoothing {
    pub fn as_str(&self) -> &'static str {
        match self {
            Smoothing::Reparametrize => "reparametrize",
            Smoothing::PatchMollify => "patch_mollify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeckBumpParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub lambda_big: f64,
    pub delta_smooth: f64,
    #[serde(default)]
    pub smoothing: Smoothing,
}

impl NeckBumpParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("eta", self.eta),
            ("lambda_big", self.lambda_big),
            ("delta_smooth", self.delta_smooth),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.eta > 1.0 {
            return Err(Error::InvalidParameter(format!("eta must not exceed 1, got {}", self.eta)));
        }
        if !(2.0 * self.delta_smooth < self.lambda_big) {
            return Err(Error::InvalidParameter(format!(
                "need 2*delta_smooth < lambda_big, got delta_smooth = {} and lambda_big = {}",
                self.delta_smooth, self.lambda_big
            )));
        }
        Ok(())
    }

    /// The unsmoothed neck `sqrt(alpha + beta s^2)`.
    pub fn gamma(&self, s: f64) -> f64 {
        (self.alpha + self.beta * s * s).sqrt()
    }

    /// The C1 profile: `gamma` inside, a constant-curvature patch on
    /// `| |s| - lambda | < delta`, and constant beyond.
    pub fn gamma_tilde(&self, s: f64) -> f64 {
        let a = s.abs();
        let lo = self.lambda_big - self.delta_smooth;
        if a <= lo {
            return self.gamma(a);
        }
        let g0 = self.gamma(lo);
        let g1 = self.beta * lo / g0;
        let c = -g1 / (2.0 * self.delta_smooth);
        let x = a.min(self.lambda_big + self.delta_smooth) - lo;
        g0 + g1 * x + 0.5 * c * x * x
    }

    /// Mollifier radius: `delta/2` around both kinks, tapering smoothly to
    /// zero at distance `2 delta` from `lambda`.
    fn window(&self, s: f64) -> f64 {
        let a = s.abs();
        let (l, d) = (self.lambda_big, self.delta_smooth);
        let dist = (a - l).abs();
        if dist >= 2.0 * d {
            0.0
        } else if dist <= 1.5 * d {
            0.5 * d
        } else {
            0.5 * d * smooth_step((2.0 * d - dist) / (0.5 * d))
        }
    }

    /// Saturating arclength: identity for `|s| <= lambda - 2 delta`, constant
    /// `lambda` for `|s| >= lambda + 2 delta`, with slope `1 - step` between.
    pub fn saturated_arclength(&self, s: f64) -> f64 {
        let a = s.abs();
        let (l, d) = (self.lambda_big, self.delta_smooth);
        let start = l - 2.0 * d;
        let sigma = if a <= start {
            a
        } else if a >= l + 2.0 * d {
            l
        } else {
            let x = (a - start) / (4.0 * d);
            start + 4.0 * d * composite(&[0.0, x], |u| 1.0 - smooth_step(u))
        };
        sigma.copysign(s)
    }

    /// The smooth profile under the selected scheme.
    pub fn profile_value(&self, s: f64) -> f64 {
        match self.smoothing {
            Smoothing::Reparametrize => self.gamma(self.saturated_arclength(s)),
            Smoothing::PatchMollify => self.gamma_smooth(s),
        }
    }

    /// The smooth profile: `gamma_tilde` averaged against the standard bump
    /// over the local window.
    pub fn gamma_smooth(&self, s: f64) -> f64 {
        let a = s.abs();
        let w = self.window(a);
        if w == 0.0 {
            return self.gamma_tilde(a);
        }
        let (l, d) = (self.lambda_big, self.delta_smooth);
        let mut cuts: Vec<f64> = [l - d, l + d, -(l - d), -(l + d)]
            .iter()
            .map(|k| (a - k) / w)
            .filter(|y| y.abs() < 1.0)
            .collect();
        cuts.push(-1.0);
        cuts.push(1.0);
        cuts.sort_by(|x, y| x.total_cmp(y));
        let integral = composite(&cuts, |y| bump(y) * self.gamma_tilde(a - w * y));
        integral / bump_mass()
    }
}

fn psi(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth monotone step from 0 at `x <= 0` to 1 at `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    let a = psi(x);
    a / (a + psi(1.0 - x))
}

fn bump(y: f64) -> f64 {
    if y.abs() < 1.0 {
        (-1.0 / (1.0 - y * y)).exp()
    } else {
        0.0
    }
}

const PIECE: f64 = 0.125;
const NODES: usize = 32;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(NODES).unwrap()))
}

/// Gauss-Legendre over each interval between consecutive `cuts`, subdivided
/// into pieces no longer than `PIECE`.
fn composite<F: Fn(f64) -> f64>(cuts: &[f64], f: F) -> f64 {
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let pieces = ((b - a) / PIECE).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for k in 0..pieces {
            let lo = a + k as f64 * h;
            acc += rule().integrate(lo, lo + h, &f);
        }
    }
    acc
}

fn bump_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| composite(&[-1.0, 1.0], bump))
}

/// Smallest number of grid points allowed across a smoothing interval.
pub const MIN_SMOOTHING_POINTS: f64 = 8.0;

pub fn neck_bump(params: &NeckBumpParams, grid: &PeriodicGrid) -> Result<Profile> {
    params.validate()?;
    let ds = params.lambda_big * grid.delta_xi();
    let points = 2.0 * params.delta_smooth / ds;
    if points < MIN_SMOOTHING_POINTS {
        return Err(Error::UnderResolved(format!(
            "smoothing interval spans {points:.2} grid points, need at least {MIN_SMOOTHING_POINTS}"
        )));
    }
    let n = grid.n_points();
    let g: Vec<f64> = grid
        .xi_values()
        .iter()
        .map(|xi| params.profile_value(params.lambda_big * xi))
        .collect();
    let f = g.iter().map(|v| params.eta * v).collect();
    Profile::new(grid.clone(), f, g.clone(), g, vec![params.lambda_big; n])
}

pub fn product_data(f0: f64, g0: f64, h0: f64, lambda_big: f64, grid: &PeriodicGrid) -> Result<Profile> {
    let n = grid.n_points();
    Profile::new(
        grid.clone(),
        vec![f0; n],
        vec![g0; n],
        vec![h0; n],
        vec![lambda_big; n],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    F,
    G,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbMode {
    pub wavenumber: u32,
    pub amplitude: f64,
    pub target: Target,
}

/// Adds `amplitude * cos(wavenumber * xi)` to the target fields.
pub fn perturb(profile: &Profile, modes: &[PerturbMode]) -> Result<Profile> {
    let mut out = profile.clone();
    let xi = profile.grid().xi_values();
    for m in modes {
        let field = match m.target {
            Target::F => &mut out.f,
            Target::G => &mut out.g,
            Target::H => &mut out.h,
        };
        for (v, x) in field.iter_mut().zip(xi) {
            *v += m.amplitude * (m.wavenumber as f64 * x).cos();
        }
    }
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionVerdicts {
    /// Ordering and the scalar-curvature condition.
    pub mild: bool,
    /// `mild` plus the eccentricity and gradient conditions.
    pub stronger: bool,
    /// `stronger` plus reflection symmetry about the smallest neck.
    pub reflection: bool,
    pub finite_time_singularity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ordering_ok: bool,
    pub scalar_condition_value: f64,
    pub scalar_ok: bool,
    pub epsilon: f64,
    pub epsilon_condition_value: f64,
    pub epsilon_ok: bool,
    pub grad_max: f64,
    pub grad_ok: bool,
    pub reflection_defect: f64,
    pub reflection_ok: bool,
    pub verdicts: AssumptionVerdicts,
}

impl ValidationReport {
    /// Human-readable names of failed conditions.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.ordering_ok {
            out.push("ordering f <= g <= h");
        }
        if !self.scalar_ok {
            out.push("scalar condition (min R)(max g^2) > -3");
        }
        if !self.epsilon_ok {
            out.push("eccentricity condition 2(1-eps)^5 + 4(1-eps)^4 > 4/3");
        }
        if !self.grad_ok {
            out.push("gradient bound |f_s| <= 1");
        }
        if !self.reflection_ok {
            out.push("reflection symmetry about the smallest neck");
        }
        out
    }
}

pub fn epsilon_condition(eps: f64) -> f64 {
    let q = 1.0 - eps;
    2.0 * q.powi(5) + 4.0 * q.powi(4)
}

pub fn validate_assumptions(profile: &Profile) -> ValidationReport {
    let n = profile.n_points();
    let (f, g, h) = (&profile.f, &profile.g, &profile.h);
    let ordering_ok = (0..n).all(|i| f[i] <= g[i] && g[i] <= h[i]);

    let curv = sectional_curvatures(profile);
    let min_r = curv.scalar_r.iter().copied().fold(f64::INFINITY, f64::min);
    let max_g = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scalar_condition_value = min_r * max_g * max_g;
    let scalar_ok = scalar_condition_value > -3.0;

    let min_ratio = (0..n).map(|i| f[i] / g[i]).fold(f64::INFINITY, f64::min);
    let epsilon = 1.0 - min_ratio;
    let epsilon_condition_value = epsilon_condition(epsilon);
    let epsilon_ok = epsilon_condition_value > 4.0 / 3.0;

    let d = WarpDerivatives::of(profile);
    let grad_max = d.fs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let grad_ok = grad_max <= 1.0;

    let (reflection_defect, reflection_ok) = reflection_check(profile);

    let mild = ordering_ok && scalar_ok;
    let stronger = mild && epsilon_ok && grad_ok;
    ValidationReport {
        ordering_ok,
        scalar_condition_value,
        scalar_ok,
        epsilon,
        epsilon_condition_value,
        epsilon_ok,
        grad_max,
        grad_ok,
        reflection_defect,
        reflection_ok,
        verdicts: AssumptionVerdicts {
            mild,
            stronger,
            reflection: stronger && reflection_ok,
            finite_time_singularity: "determined by evolve".into(),
        },
    }
}

/// Evenness defect about the global minimum of `f`, which must also be a
/// local minimum.
fn reflection_check(profile: &Profile) -> (f64, bool) {
    let f = &profile.f;
    let (centre, _) = f
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let defect = profile.reflection_defect(centre);
    let scale = profile
        .named_fields()
        .iter()
        .flat_map(|(_, v)| v.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let is_neck = local_minima(f).contains(&centre);
    (defect, is_neck && defect <= 1e-12 * scale)
}
