//! Build, validate, evolve and diagnose one configuration.

use std::path::{Path, PathBuf};

use berger_core::diagnostics::{
    blowup_frame, cutoff_x, default_delta, fit_decay, hermite::K_MAX, hermite_project,
    monitor_snapshot, neck_region, BlowupFrame, DecayFit, EstimateSnapshot, HermiteSpectrum,
    ScaleInvariant, SigmaGrid,
};
use berger_core::flow::{evolve, under_resolved, FlowState, StopReason, Trajectory};
use berger_core::grid::PeriodicGrid;
use berger_core::initial::{
    neck_bump, perturb, product_data, validate_assumptions, PerturbMode, ValidationReport,
};
use berger_core::{profile_extrema, Profile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{InitialData, Perturbation, Requirement, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{num, opt, write_atomic, Csv};

pub const SERIES_FILE: &str = "series.csv";
pub const FRAMES_FILE: &str = "frames.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Locality threshold as a multiple of the neck resolution floor.
pub const LOCALITY_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locality {
    Local,
    Global,
    None,
}

impl Locality {
    pub fn as_str(self) -> &'static str {
        match self {
            Locality::Local => "local",
            Locality::Global => "global",
            Locality::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityDetail {
    /// `rho * delta_xi` at the final neck.
    pub floor: Option<f64>,
    /// Smallest `f` extrapolated to `T_hat` outside the neck region.
    pub extrapolated_min_f_outside: Option<f64>,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub ecc_max_initial: f64,
    pub ecc_max_final: f64,
    /// Largest increase of `ecc_max` between consecutive snapshots.
    pub ecc_max_rise: f64,
    pub recip_gap_max_initial: f64,
    pub recip_gap_max_final: f64,
    pub recip_gap_max_rise: f64,
    pub q_max_sup: f64,
    pub f_grad_max_initial: f64,
    pub f_grad_max_sup: f64,
    pub g_max_rise: f64,
    pub big_f_min_inf: Option<f64>,
    /// `f f_ss |log f|` over the neck components when they first appear.
    pub neck_f_abs_first: Option<f64>,
    pub neck_f_abs_sup: Option<f64>,
    pub scale_inv_sup: Option<ScaleInvariant>,
    pub diameter_initial: f64,
    pub diameter_final: f64,
    pub diameter_sup: f64,
    pub crit_count_initial: usize,
    pub crit_count_final: usize,
    /// Increases of the critical-point count after the first snapshot.
    pub crit_count_rises: usize,
    pub order_gap_fg_min: f64,
    pub order_gap_gh_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderCheck {
    pub tau: f64,
    pub window: f64,
    pub u_dev: f64,
    pub v_dev: f64,
    /// Same deviations on `window < |sigma| <= 2 window`, reported only.
    pub u_dev_beyond: f64,
    pub v_dev_beyond: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub fit: DecayFit,
    pub tau_min: f64,
    pub tau_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub t_hat: Option<f64>,
    pub t_hat_stderr: Option<f64>,
    /// Fitted `a` in `Mcheck^2 = a (T - t)`.
    pub fit_slope: Option<f64>,
    pub stop_reason: StopReason,
    pub steps_taken: u64,
    pub final_t: f64,
    pub snapshots: usize,
    pub singularity_locality: Locality,
    pub locality: LocalityDetail,
    pub type_i_ratio_range: Option<[f64; 2]>,
    pub type_i_ratio_range_final_decade: Option<[f64; 2]>,
    pub monitors: MonitorSummary,
    pub cylinder: Option<CylinderCheck>,
    pub decay: Option<DecaySummary>,
    pub delta: f64,
    pub eps: f64,
    pub assumptions: ValidationReport,
}

/// Everything a run produces, before it is written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub series_csv: String,
    pub frames_csv: String,
    pub trajectory: Trajectory,
}

impl RunOutcome {
    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_atomic(&dir.join(SERIES_FILE), self.series_csv.as_bytes())?;
        write_atomic(&dir.join(FRAMES_FILE), self.frames_csv.as_bytes())?;
        // written last: its presence marks a finished run
        write_atomic(&dir.join(SUMMARY_FILE), self.summary_json().as_bytes())
    }
}

pub fn build_profile(cfg: &RunConfig) -> CliResult<Profile> {
    let grid = PeriodicGrid::new(cfg.n_points)
        .map_err(|_| CliError::Config(format!("grid.n_points must be even and >= 16, got {}", cfg.n_points)))?;
    let base = match &cfg.initial {
        InitialData::NeckBump(p) => neck_bump(p, &grid)?,
        InitialData::Product {
            f0,
            g0,
            h0,
            lambda_big,
        } => product_data(*f0, *g0, *h0, *lambda_big, &grid)?,
    };
    let mut rng = cfg.seed.map(ChaCha8Rng::seed_from_u64);
    let mut modes = Vec::new();
    for p in &cfg.perturbations {
        match p {
            Perturbation::Mode {
                target,
                wavenumber,
                amplitude,
            } => modes.push(PerturbMode {
                wavenumber: *wavenumber,
                amplitude: *amplitude,
                target: *target,
            }),
            Perturbation::Noise {
                target,
                modes: count,
                amplitude,
            } => {
                let rng = rng.as_mut().expect("seed checked with the config");
                for k in 1..=*count {
                    modes.push(PerturbMode {
                        wavenumber: k,
                        amplitude: amplitude * rng.random_range(-1.0..=1.0),
                        target: *target,
                    });
                }
            }
        }
    }
    perturb(&base, &modes).map_err(|e| CliError::Validation(format!("perturbed profile is invalid: {e}")))
}

fn check_requirement(report: &ValidationReport, level: Requirement) -> CliResult<()> {
    let mut failed = Vec::new();
    let mut need = |ok: bool, name: &str| {
        if !ok {
            failed.push(name.to_string());
        }
    };
    if level != Requirement::None {
        need(report.ordering_ok, "ordering f <= g <= h");
        need(report.scalar_ok, "scalar condition (min R)(max g^2) > -3");
    }
    if matches!(level, Requirement::Stronger | Requirement::Reflection) {
        need(report.epsilon_ok, "eccentricity condition on eps");
        need(report.grad_ok, "gradient bound |f_s| <= 1");
    }
    if level == Requirement::Reflection {
        need(report.reflection_ok, "reflection symmetry about the smallest neck");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join("; ")))
    }
}

/// Index of the smallest `f`.
fn neck_index(p: &Profile) -> usize {
    p.f.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
        .0
}

struct SnapshotDiagnostics {
    monitor: EstimateSnapshot,
    tau: Option<f64>,
    neck_xi: f64,
    spectrum: Option<HermiteSpectrum>,
}

fn diagnose(
    state: &FlowState,
    t_hat: Option<f64>,
    delta: f64,
    cfg: &RunConfig,
    sigma_grid: &SigmaGrid,
    with_blowup: bool,
) -> CliResult<SnapshotDiagnostics> {
    let usable = t_hat.filter(|t| *t > state.t);
    let mut monitor = monitor_snapshot(state, usable.unwrap_or(state.t + 1.0), delta)?;
    if usable.is_none() {
        monitor.t_hat = f64::NAN;
    }
    let p = &state.profile;
    let neck = neck_index(p);
    let neck_xi = p.grid().xi_values()[neck];
    let mut tau = None;
    let mut spectrum = None;
    if let Some(th) = usable {
        tau = Some(-(th - state.t).ln());
        if with_blowup {
            let frame = blowup_frame(state, th, neck_xi)?;
            spectrum = cutoff_x(&frame, cfg.diagnostics.eps, sigma_grid)
                .and_then(|x| hermite_project(sigma_grid, &x, cfg.diagnostics.k_max))
                .ok();
        }
    }
    Ok(SnapshotDiagnostics {
        monitor,
        tau,
        neck_xi,
        spectrum,
    })
}

const SERIES_HEAD: [&str; 26] = [
    "t",
    "t_hat",
    "tau",
    "m_check",
    "g_max",
    "ecc_max",
    "recip_gap_max",
    "q_max",
    "f_grad_max",
    "big_f_min",
    "neck_f_abs_max",
    "si_k12",
    "si_k23",
    "si_k31",
    "si_k01",
    "si_k02",
    "si_k03",
    "si_k12_minus_k23",
    "si_k01_minus_k02",
    "diameter",
    "crit_count",
    "order_gap_fg",
    "order_gap_gh",
    "neck_xi",
    "norm_g",
    "norm_g_deriv",
];

/// Column names of `series.csv`.
pub fn series_columns() -> Vec<String> {
    let mut cols: Vec<String> = SERIES_HEAD.iter().map(|s| s.to_string()).collect();
    cols.extend((0..=K_MAX).map(|k| format!("c{k}")));
    cols
}

fn series_row(d: &SnapshotDiagnostics) -> Vec<String> {
    let m = &d.monitor;
    let has_t_hat = m.t_hat.is_finite();
    let si = |v: f64| if has_t_hat { num(v) } else { String::new() };
    let mut row = vec![
        num(m.t),
        num(m.t_hat),
        opt(d.tau),
        num(m.m_check),
        num(m.g_max),
        num(m.ecc_max),
        num(m.recip_gap_max),
        num(m.q_max),
        num(m.f_grad_max),
        opt(m.big_f_min),
        opt(m.neck_f_abs_max),
    ];
    row.extend(m.scale_inv.values().iter().map(|v| si(*v)));
    row.extend([
        num(m.diameter),
        m.crit_count.to_string(),
        num(m.order_gap_fg),
        num(m.order_gap_gh),
        num(d.neck_xi),
        opt(d.spectrum.as_ref().map(|s| s.norm_g)),
        opt(d.spectrum.as_ref().map(|s| s.norm_g_deriv)),
    ]);
    for k in 0..=K_MAX {
        row.push(opt(d.spectrum.as_ref().and_then(|s| s.coefficients.get(k).copied())));
    }
    row
}

pub const FRAME_COLUMNS: [&str; 12] = [
    "frame", "tau", "t", "t_hat", "index", "sigma", "u", "v", "phi", "psi", "x", "nonlocal_i",
];

fn frame_rows(csv: &mut Csv, label: &str, fr: &BlowupFrame) {
    for i in fr.ordered_indices() {
        csv.row(&[
            label.to_string(),
            num(fr.tau),
            num(fr.t),
            num(fr.t_hat),
            i.to_string(),
            num(fr.sigma[i]),
            num(fr.u[i]),
            num(fr.v[i]),
            num(fr.phi[i]),
            num(fr.psi[i]),
            num(fr.x[i]),
            num(fr.nonlocal_i[i]),
        ]);
    }
}

fn max_rise(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn summarize_monitors(diag: &[SnapshotDiagnostics]) -> MonitorSummary {
    let m: Vec<&EstimateSnapshot> = diag.iter().map(|d| &d.monitor).collect();
    let first = m[0];
    let last = m[m.len() - 1];
    let series = |f: fn(&EstimateSnapshot) -> f64| m.iter().map(|s| f(s)).collect::<Vec<f64>>();
    let sup = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let ecc = series(|s| s.ecc_max);
    let recip = series(|s| s.recip_gap_max);
    let gmax = series(|s| s.g_max);
    let diam = series(|s| s.diameter);
    let with_t_hat: Vec<&&EstimateSnapshot> = m.iter().filter(|s| s.t_hat.is_finite()).collect();
    let scale_inv_sup = if with_t_hat.is_empty() {
        None
    } else {
        let mut acc = [0.0_f64; 8];
        for s in &with_t_hat {
            for (a, v) in acc.iter_mut().zip(s.scale_inv.values()) {
                *a = a.max(v);
            }
        }
        Some(ScaleInvariant {
            k12: acc[0],
            k23: acc[1],
            k31: acc[2],
            k01: acc[3],
            k02: acc[4],
            k03: acc[5],
            k12_minus_k23: acc[6],
            k01_minus_k02: acc[7],
        })
    };
    let crit: Vec<usize> = m.iter().map(|s| s.crit_count).collect();
    let crit_count_rises = if crit.len() > 2 {
        crit[1..].windows(2).filter(|w| w[1] > w[0]).count()
    } else {
        0
    };
    MonitorSummary {
        ecc_max_initial: first.ecc_max,
        ecc_max_final: last.ecc_max,
        ecc_max_rise: max_rise(&ecc),
        recip_gap_max_initial: first.recip_gap_max,
        recip_gap_max_final: last.recip_gap_max,
        recip_gap_max_rise: max_rise(&recip),
        q_max_sup: sup(&series(|s| s.q_max)),
        f_grad_max_initial: first.f_grad_max,
        f_grad_max_sup: sup(&series(|s| s.f_grad_max)),
        g_max_rise: max_rise(&gmax),
        big_f_min_inf: m.iter().filter_map(|s| s.big_f_min).reduce(f64::min),
        neck_f_abs_first: m.iter().find_map(|s| s.neck_f_abs_max),
        neck_f_abs_sup: m.iter().filter_map(|s| s.neck_f_abs_max).reduce(f64::max),
        scale_inv_sup,
        diameter_initial: first.diameter,
        diameter_final: last.diameter,
        diameter_sup: sup(&diam),
        crit_count_initial: first.crit_count,
        crit_count_final: last.crit_count,
        crit_count_rises,
        order_gap_fg_min: inf(&series(|s| s.order_gap_fg)),
        order_gap_gh_min: inf(&series(|s| s.order_gap_gh)),
    }
}

fn ratio_range(traj: &Trajectory, t_hat: f64, window: Option<f64>) -> Option<[f64; 2]> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in &traj.snapshots {
        let rem = t_hat - s.t;
        if !(rem > 0.0) || window.is_some_and(|w| rem > w) {
            continue;
        }
        let r = profile_extrema(&s.profile).m_check / rem.sqrt();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo <= hi).then_some([lo, hi])
}

fn classify(
    traj: &Trajectory,
    t_hat: Option<f64>,
    delta: f64,
) -> CliResult<(Locality, LocalityDetail)> {
    let mut detail = LocalityDetail {
        floor: None,
        extrapolated_min_f_outside: None,
        factor: LOCALITY_FACTOR,
    };
    let (Some(t_hat), true) = (t_hat, traj.stop_reason.indicates_singularity()) else {
        return Ok((Locality::None, detail));
    };
    let snaps = &traj.snapshots;
    if snaps.len() < 2 {
        return Ok((Locality::None, detail));
    }
    let last = &snaps[snaps.len() - 1];
    let prev = &snaps[snaps.len() - 2];
    let p = &last.profile;
    let n = p.n_points();
    let floor = p.rho[neck_index(p)] * p.grid().delta_xi();
    detail.floor = Some(floor);
    let mut inside = vec![false; n];
    for c in neck_region(last, delta)? {
        for i in c.indices(n) {
            inside[i] = true;
        }
    }
    let span = last.t - prev.t;
    let ahead = (t_hat - last.t).max(0.0);
    let min_ext = (0..n)
        .filter(|&i| !inside[i])
        .map(|i| {
            let now = p.f[i] * p.f[i];
            let rate = if span > 0.0 {
                (now - prev.profile.f[i] * prev.profile.f[i]) / span
            } else {
                0.0
            };
            (now + rate * ahead).max(0.0).sqrt()
        })
        .reduce(f64::min);
    detail.extrapolated_min_f_outside = min_ext;
    let locality = match min_ext {
        Some(m) if m > LOCALITY_FACTOR * floor => Locality::Local,
        _ => Locality::Global,
    };
    Ok((locality, detail))
}

/// Runs the whole pipeline without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> CliResult<RunOutcome> {
    let profile = build_profile(cfg)?;
    let assumptions = validate_assumptions(&profile);
    check_requirement(&assumptions, cfg.require)?;
    if under_resolved(&profile, cfg.solver.min_f_stop) {
        return Err(CliError::Resolution(format!(
            "initial f falls below {} rho dxi",
            cfg.solver.min_f_stop
        )));
    }

    let traj = evolve(FlowState::new(profile), &cfg.solver);
    let t_hat = traj.t_hat();
    let m_checks: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| profile_extrema(&s.profile).m_check)
        .collect();
    let delta = cfg.diagnostics.delta.unwrap_or_else(|| default_delta(&m_checks));
    let sigma_grid = SigmaGrid::default();

    let count = traj.snapshots.len();
    let mut diag = Vec::with_capacity(count);
    let mut series = Csv::new(&series_columns().iter().map(String::as_str).collect::<Vec<_>>());
    for (k, s) in traj.snapshots.iter().enumerate() {
        let with_blowup = k % cfg.diagnostics.stride == 0 || k + 1 == count;
        let d = diagnose(s, t_hat, delta, cfg, &sigma_grid, with_blowup)?;
        series.row(&series_row(&d));
        diag.push(d);
    }

    let mut frames = Csv::new(&FRAME_COLUMNS);
    let mut cylinder = None;
    if let Some(th) = t_hat {
        let mut targets = cfg.diagnostics.frame_taus.clone();
        targets.sort_by(f64::total_cmp);
        for target in targets {
            let found = diag
                .iter()
                .zip(&traj.snapshots)
                .find(|(d, _)| d.tau.is_some_and(|t| t >= target));
            if let Some((d, s)) = found {
                let fr = blowup_frame(s, th, d.neck_xi)?;
                frame_rows(&mut frames, &format!("tau_{}", crate::config::fmt_f64(target)), &fr);
            }
        }
        let last_resolved = diag.iter().zip(&traj.snapshots).rev().find(|(d, _)| d.tau.is_some());
        if let Some((d, s)) = last_resolved {
            let fr = blowup_frame(s, th, d.neck_xi)?;
            frame_rows(&mut frames, "final", &fr);
            let w = cfg.diagnostics.cylinder_window;
            let dev = |lo: f64, hi: f64, field: &[f64]| {
                (0..fr.n_points())
                    .filter(|&i| fr.sigma[i].abs() > lo && fr.sigma[i].abs() <= hi)
                    .map(|i| field[i].abs())
                    .fold(0.0, f64::max)
            };
            cylinder = Some(CylinderCheck {
                tau: fr.tau,
                window: w,
                u_dev: dev(-1.0, w, &fr.phi),
                v_dev: dev(-1.0, w, &fr.psi),
                u_dev_beyond: dev(w, 2.0 * w, &fr.phi),
                v_dev_beyond: dev(w, 2.0 * w, &fr.psi),
            });
        }
    }

    let decay_points: Vec<(f64, f64)> = diag
        .iter()
        .filter_map(|d| Some((d.tau?, d.spectrum.as_ref()?.norm_g)))
        .filter(|(_, n)| *n > 0.0)
        .collect();
    let decay = fit_decay(&decay_points).ok().map(|fit| DecaySummary {
        fit,
        tau_min: decay_points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        tau_max: decay_points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    });

    let (singularity_locality, locality) = classify(&traj, t_hat, delta)?;
    let last_t = traj.last().t;
    let summary = RunSummary {
        t_hat,
        t_hat_stderr: traj.t_hat_stderr(),
        fit_slope: traj.fit.map(|f| f.slope),
        stop_reason: traj.stop_reason,
        steps_taken: traj.steps_taken,
        final_t: last_t,
        snapshots: count,
        singularity_locality,
        locality,
        type_i_ratio_range: t_hat.and_then(|th| ratio_range(&traj, th, None)),
        type_i_ratio_range_final_decade: t_hat
            .and_then(|th| ratio_range(&traj, th, Some(10.0 * (th - last_t)))),
        monitors: summarize_monitors(&diag),
        cylinder,
        decay,
        delta,
        eps: cfg.diagnostics.eps,
        assumptions,
    };
    Ok(RunOutcome {
        summary,
        series_csv: series.into_string(),
        frames_csv: frames.into_string(),
        trajectory: traj,
    })
}

/// Where a run writes: the override, the configured directory, or `out`.
pub fn output_dir(cfg: &RunConfig, over: Option<&Path>) -> PathBuf {
    over.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs and writes the artifacts. A halt without any sign of a singularity
/// still writes its artifacts before reporting the halt.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> CliResult<RunOutcome> {
    let outcome = execute(cfg)?;
    outcome.write(dir)?;
    if outcome.summary.stop_reason == StopReason::MaxSteps {
        return Err(CliError::Halt(format!(
            "step budget of {} exhausted at t = {}",
            cfg.solver.max_steps, outcome.summary.final_t
        )));
    }
    Ok(outcome)
}

pub fn cmd_run(config: &Path, out: Option<&Path>) -> CliResult<RunOutcome> {
    let cfg = RunConfig::read(config)?;
    let dir = output_dir(&cfg, out);
    run_to_dir(&cfg, &dir)
}
