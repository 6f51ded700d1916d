//! Gauge-fixed Ricci flow on the fixed `xi` grid: right-hand side, time step
//! selection, RK4 stepping, the evolution loop and singular-time estimation.

use serde::{Deserialize, Serialize};

use crate::curvature::{curvatures_from, fiber_point, profile_extrema, WarpDerivatives};
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::profile::{ArclengthOps, Profile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub profile: Profile,
    pub t: f64,
    pub step_index: u64,
}

impl FlowState {
    pub fn new(profile: Profile) -> Self {
        Self {
            profile,
            t: 0.0,
            step_index: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub cfl_safety: f64,
    /// Halt once `f < min_f_stop * rho * delta_xi` anywhere.
    pub min_f_stop: f64,
    pub curvature_cap: f64,
    pub max_steps: u64,
    pub snapshot_stride: u64,
    /// Optional final time; the last step is shortened to land on it.
    pub t_max: Option<f64>,
    /// Fraction of trailing snapshots used by the singular-time fit.
    pub fit_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl_safety: 0.5,
            min_f_stop: 2.0,
            curvature_cap: 1e8,
            max_steps: 50_000_000,
            snapshot_stride: 20,
            t_max: None,
            fit_fraction: 0.25,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if !(self.min_f_stop >= 2.0) {
            return bad(format!("min_f_stop must be at least 2, got {}", self.min_f_stop));
        }
        if !(self.curvature_cap > 0.0) {
            return bad(format!("curvature_cap must be positive, got {}", self.curvature_cap));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be at least 1".into());
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("t_max must be positive, got {t}"));
            }
        }
        if !(self.fit_fraction > 0.0 && self.fit_fraction <= 1.0) {
            return bad(format!("fit_fraction must lie in (0, 1], got {}", self.fit_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ResolutionLimit,
    CurvatureCap,
    MaxSteps,
    Steady,
    TimeLimit,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::ResolutionLimit => "resolution_limit",
            StopReason::CurvatureCap => "curvature_cap",
            StopReason::MaxSteps => "max_steps",
            StopReason::Steady => "steady",
            StopReason::TimeLimit => "time_limit",
        }
    }

    /// Whether the halt points at a forming singularity.
    pub fn indicates_singularity(&self) -> bool {
        matches!(self, StopReason::ResolutionLimit | StopReason::CurvatureCap)
    }
}

/// Least-squares fit of `Mcheck^2 = a (T - t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularTimeFit {
    pub t_hat: f64,
    pub stderr: f64,
    pub slope: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<FlowState>,
    pub stop_reason: StopReason,
    pub steps_taken: u64,
    pub fit: Option<SingularTimeFit>,
}

impl Trajectory {
    pub fn t_hat(&self) -> Option<f64> {
        self.fit.map(|f| f.t_hat)
    }

    pub fn t_hat_stderr(&self) -> Option<f64> {
        self.fit.map(|f| f.stderr)
    }

    pub fn last(&self) -> &FlowState {
        self.snapshots.last().expect("trajectory holds at least one snapshot")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

/// Time derivatives of `(f, g, h, rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub rho: Vec<f64>,
}

fn rates_of(grid: &PeriodicGrid, f: &[f64], g: &[f64], h: &[f64], rho: &[f64]) -> Result<Rates> {
    let n = f.len();
    let ops = ArclengthOps::new(rho, grid.delta_xi());
    let mut fs = vec![0.0; n];
    let mut fss = vec![0.0; n];
    let mut gs = vec![0.0; n];
    let mut gss = vec![0.0; n];
    let mut hs = vec![0.0; n];
    let mut hss = vec![0.0; n];
    ops.ds_dss(f, &mut fs, &mut fss);
    ops.ds_dss(g, &mut gs, &mut gss);
    ops.ds_dss(h, &mut hs, &mut hss);
    let mut out = Rates {
        f: vec![0.0; n],
        g: vec![0.0; n],
        h: vec![0.0; n],
        rho: vec![0.0; n],
    };
    for i in 0..n {
        let (hat12, hat23, hat31) = fiber_point(f[i], g[i], h[i]);
        let (lf, lg, lh) = (fs[i] / f[i], gs[i] / g[i], hs[i] / h[i]);
        out.f[i] = fss[i] + (lg + lh) * fs[i] - f[i] * (hat12 + hat31);
        out.g[i] = gss[i] + (lf + lh) * gs[i] - g[i] * (hat12 + hat23);
        out.h[i] = hss[i] + (lf + lg) * hs[i] - h[i] * (hat23 + hat31);
        out.rho[i] = rho[i] * (fss[i] / f[i] + gss[i] / g[i] + hss[i] / h[i]);
    }
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    for (name, v) in [("f_t", &out.f), ("g_t", &out.g), ("h_t", &out.h), ("rho_t", &out.rho)] {
        if !finite(v) {
            return Err(Error::NonFinite(name));
        }
    }
    Ok(out)
}

pub fn rhs(state: &FlowState) -> Result<Rates> {
    let p = &state.profile;
    rates_of(p.grid(), &p.f, &p.g, &p.h, &p.rho)
}

pub fn select_dt(state: &FlowState, config: &SolverConfig) -> Result<f64> {
    let p = &state.profile;
    let scale = curvatures_from(p, &WarpDerivatives::of(p)).scale();
    dt_for_scale(state, config, scale)
}

/// `select_dt` with the curvature scale already known.
pub fn dt_for_scale(state: &FlowState, config: &SolverConfig, scale: f64) -> Result<f64> {
    let p = &state.profile;
    if !scale.is_finite() {
        return Err(Error::NonFinite("curvature"));
    }
    let min_rho = p.rho.iter().copied().fold(f64::INFINITY, f64::min);
    let spacing = min_rho * p.grid().delta_xi();
    let dt = config.cfl_safety * spacing * spacing / (2.0 + scale);
    let t_scale = state.t.max(1.0 / (2.0 + scale));
    if !(dt >= 1e-15 * t_scale) {
        return Err(Error::UnderResolved(format!(
            "time step {dt:e} below roundoff of t-scale {t_scale:e}"
        )));
    }
    Ok(dt)
}

/// One classical RK4 step of all four fields.
pub fn step(state: &FlowState, dt: f64) -> Result<FlowState> {
    let p = &state.profile;
    let grid = p.grid();
    let n = p.n_points();
    let base = [&p.f, &p.g, &p.h, &p.rho];
    let names = ["f", "g", "h", "rho"];

    let stage = |k: &Rates, c: f64| -> Result<[Vec<f64>; 4]> {
        let ks = [&k.f, &k.g, &k.h, &k.rho];
        let mut out: [Vec<f64>; 4] = Default::default();
        for j in 0..4 {
            out[j] = (0..n).map(|i| base[j][i] + c * dt * ks[j][i]).collect();
            check_positive(names[j], &out[j])?;
        }
        Ok(out)
    };
    let eval = |v: &[Vec<f64>; 4]| rates_of(grid, &v[0], &v[1], &v[2], &v[3]);

    let k1 = rhs(state)?;
    let k2 = eval(&stage(&k1, 0.5)?)?;
    let k3 = eval(&stage(&k2, 0.5)?)?;
    let k4 = eval(&stage(&k3, 1.0)?)?;

    let combine = |j: usize, a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| base[j][i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect()
    };
    let f = combine(0, &k1.f, &k2.f, &k3.f, &k4.f);
    let g = combine(1, &k1.g, &k2.g, &k3.g, &k4.g);
    let h = combine(2, &k1.h, &k2.h, &k3.h, &k4.h);
    let rho = combine(3, &k1.rho, &k2.rho, &k3.rho, &k4.rho);
    let profile = Profile::new(grid.clone(), f, g, h, rho)?;
    Ok(FlowState {
        profile,
        t: state.t + dt,
        step_index: state.step_index + 1,
    })
}

fn check_positive(field: &'static str, v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        Some(index) if v[index].is_finite() => Err(Error::NonPositive {
            field,
            index,
            value: v[index],
        }),
        Some(_) => Err(Error::NonFinite(field)),
        None => Ok(()),
    }
}

/// Whether `f` has dropped below the local resolution floor somewhere.
pub fn under_resolved(profile: &Profile, min_f_stop: f64) -> bool {
    let h = profile.grid().delta_xi();
    profile
        .f
        .iter()
        .zip(&profile.rho)
        .any(|(f, r)| *f < min_f_stop * r * h)
}

fn stop_for(err: &Error) -> StopReason {
    match err {
        Error::NonFinite(_) => StopReason::CurvatureCap,
        _ => StopReason::ResolutionLimit,
    }
}

const STEADY_TOL: f64 = 1e-13;

fn is_steady(state: &FlowState) -> bool {
    let p = &state.profile;
    match rhs(state) {
        Ok(r) => [(&r.f, &p.f), (&r.g, &p.g), (&r.h, &p.h), (&r.rho, &p.rho)]
            .iter()
            .all(|(rate, v)| rate.iter().zip(v.iter()).all(|(a, b)| (a / b).abs() < STEADY_TOL)),
        Err(_) => false,
    }
}

pub fn evolve(initial: FlowState, config: &SolverConfig) -> Trajectory {
    let mut snapshots = vec![initial.clone()];
    let mut state = initial;
    let mut steps: u64 = 0;
    let stop = loop {
        if under_resolved(&state.profile, config.min_f_stop) {
            break StopReason::ResolutionLimit;
        }
        let p = &state.profile;
        let curv = curvatures_from(p, &WarpDerivatives::of(p));
        if !(curv.max_abs() <= config.curvature_cap) {
            break StopReason::CurvatureCap;
        }
        if let Some(t_max) = config.t_max {
            if state.t >= t_max {
                break StopReason::TimeLimit;
            }
        }
        if steps >= config.max_steps {
            break StopReason::MaxSteps;
        }
        if steps.is_multiple_of(config.snapshot_stride) && is_steady(&state) {
            break StopReason::Steady;
        }
        let mut dt = match dt_for_scale(&state, config, curv.scale()) {
            Ok(dt) => dt,
            Err(e) => break stop_for(&e),
        };
        if let Some(t_max) = config.t_max {
            if state.t + dt >= t_max {
                dt = t_max - state.t;
            }
        }
        match step(&state, dt) {
            Ok(next) => state = next,
            Err(e) => break stop_for(&e),
        }
        if let Some(t_max) = config.t_max {
            if (state.t - t_max).abs() <= 4.0 * f64::EPSILON * t_max {
                state.t = t_max;
            }
        }
        steps += 1;
        if steps.is_multiple_of(config.snapshot_stride) {
            snapshots.push(state.clone());
        }
    };
    if snapshots.last().map(|s| s.t) != Some(state.t) {
        snapshots.push(state);
    }
    let mut traj = Trajectory {
        snapshots,
        stop_reason: stop,
        steps_taken: steps,
        fit: None,
    };
    traj.fit = estimate_t_window(&traj, config.fit_fraction).ok();
    traj
}

/// Singular-time estimate over the default trailing quarter of snapshots.
pub fn estimate_t(trajectory: &Trajectory) -> Result<(f64, f64)> {
    estimate_t_window(trajectory, 0.25).map(|f| (f.t_hat, f.stderr))
}

pub const MIN_FIT_POINTS: usize = 8;

pub fn estimate_t_window(trajectory: &Trajectory, fraction: f64) -> Result<SingularTimeFit> {
    let samples: Vec<(f64, f64)> = trajectory
        .snapshots
        .iter()
        .map(|s| (s.t, profile_extrema(&s.profile).m_check))
        .collect();
    fit_singular_time(&samples, fraction)
}

/// Fits `Mcheck^2 = c0 + c1 t` over the trailing `fraction` of `(t, Mcheck)`
/// samples (at least eight), then `T = -c0/c1` with a delta-method error.
pub fn fit_singular_time(samples: &[(f64, f64)], fraction: f64) -> Result<SingularTimeFit> {
    if samples.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_FIT_POINTS} snapshots, have {}",
            samples.len()
        )));
    }
    let want = ((samples.len() as f64) * fraction).ceil() as usize;
    let count = want.clamp(MIN_FIT_POINTS, samples.len());
    let window = &samples[samples.len() - count..];
    let t0 = window[0].0;
    // centre t for conditioning
    let xs: Vec<f64> = window.iter().map(|(t, _)| t - t0).collect();
    let ys: Vec<f64> = window.iter().map(|(_, m)| m * m).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("fit window spans no time".into()));
    }
    let c1 = sxy / sxx;
    if !(c1 < 0.0) {
        return Err(Error::NoSingularity(
            "minimal radius is not decreasing over the fit window".into(),
        ));
    }
    let c0 = my - c1 * mx;
    let resid: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - c0 - c1 * x;
            r * r
        })
        .sum();
    let s2 = if xs.len() > 2 { resid / (n - 2.0) } else { 0.0 };
    let var_c1 = s2 / sxx;
    let var_c0 = s2 * (1.0 / n + mx * mx / sxx);
    let cov = -s2 * mx / sxx;
    // T - t0 = -c0/c1
    let d0 = -1.0 / c1;
    let d1 = c0 / (c1 * c1);
    let var_t = d0 * d0 * var_c0 + d1 * d1 * var_c1 + 2.0 * d0 * d1 * cov;
    Ok(SingularTimeFit {
        t_hat: t0 - c0 / c1,
        stderr: var_t.max(0.0).sqrt(),
        slope: -c1,
        points: xs.len(),
    })
}
