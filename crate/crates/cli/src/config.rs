//! Flat `key = value` configuration files with dotted section keys.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use berger_core::flow::SolverConfig;
use berger_core::initial::{NeckBumpParams, Smoothing, Target};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    NeckBump(NeckBumpParams),
    Product {
        f0: f64,
        g0: f64,
        h0: f64,
        lambda_big: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// `amplitude * cos(wavenumber * xi)` added to the target.
    Mode {
        target: Target,
        wavenumber: u32,
        amplitude: f64,
    },
    /// Cosine modes `1..=modes` with seeded random amplitudes in
    /// `[-amplitude, amplitude]`.
    Noise {
        target: Target,
        modes: u32,
        amplitude: f64,
    },
}

/// Which assumption level the initial data must meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Requirement {
    None,
    Mild,
    Stronger,
    Reflection,
}

impl Requirement {
    fn as_str(self) -> &'static str {
        match self {
            Requirement::None => "none",
            Requirement::Mild => "mild",
            Requirement::Stronger => "stronger",
            Requirement::Reflection => "reflection",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Neck-region threshold; derived from the run when absent.
    pub delta: Option<f64>,
    pub eps: f64,
    pub k_max: usize,
    /// Evaluate the blow-up diagnostics on every `stride`-th snapshot.
    pub stride: usize,
    /// Target `tau` values for `frames.csv`; the final frame is always written.
    pub frame_taus: Vec<f64>,
    /// Half-width in `sigma` of the cylinder comparison.
    pub cylinder_window: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            delta: None,
            eps: 0.5,
            k_max: 8,
            stride: 1,
            frame_taus: Vec::new(),
            cylinder_window: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub initial: InitialData,
    pub perturbations: Vec<Perturbation>,
    pub n_points: usize,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsConfig,
    pub require: Requirement,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub value: String,
}

/// Raw entries of a config file, keyed by dotted name.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub source: String,
    pub entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(source: &str, text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| CliError::ConfigLine {
                path: source.to_string(),
                line,
                message,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', found '{content}'")))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(err(format!("malformed key '{key}'")));
            }
            if value.is_empty() {
                return Err(err(format!("missing value for '{key}'")));
            }
            if let Some(prev) = entries.get(key) {
                let prev: &Entry = prev;
                return Err(err(format!("duplicate key '{key}' (first set on line {})", prev.line)));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    line,
                    value: value.to_string(),
                },
            );
        }
        Ok(Self {
            source: source.to_string(),
            entries,
        })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }

    fn line_err(&self, key: &str, message: String) -> CliError {
        match self.entries.get(key) {
            Some(e) => CliError::ConfigLine {
                path: self.source.clone(),
                line: e.line,
                message,
            },
            None => CliError::Config(format!("{}: {message}", self.source)),
        }
    }
}

/// Typed reader that tracks which keys were used.
struct Reader<'a> {
    raw: &'a RawConfig,
    used: std::cell::RefCell<Vec<String>>,
}

impl<'a> Reader<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        let e = self.raw.entries.get(key)?;
        self.used.borrow_mut().push(key.to_string());
        Some(e.value.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.raw.line_err(key, format!("'{key}' expects {what}, got '{v}'"))),
        }
    }

    fn float(&self, key: &str) -> CliResult<Option<f64>> {
        let v: Option<f64> = self.parse(key, "a number")?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(self.raw.line_err(key, format!("'{key}' must be finite")));
            }
        }
        Ok(v)
    }

    fn required_float(&self, key: &str) -> CliResult<f64> {
        self.float(key)?
            .ok_or_else(|| CliError::Config(format!("{}: missing required key '{key}'", self.raw.source)))
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => options
                .iter()
                .find(|(name, _)| *name == v)
                .map(|(_, t)| Some(*t))
                .ok_or_else(|| {
                    let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                    self.raw
                        .line_err(key, format!("'{key}' must be one of {}, got '{v}'", names.join(", ")))
                }),
        }
    }

    fn float_list(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .map(Some)
                .ok_or_else(|| self.raw.line_err(key, format!("'{key}' expects a comma-separated list of numbers"))),
        }
    }
}

const TARGETS: [(&str, Target); 3] = [("f", Target::F), ("g", Target::G), ("h", Target::H)];
const SMOOTHING: [(&str, Smoothing); 2] = [
    ("reparametrize", Smoothing::Reparametrize),
    ("patch_mollify", Smoothing::PatchMollify),
];

fn target_name(t: Target) -> &'static str {
    match t {
        Target::F => "f",
        Target::G => "g",
        Target::H => "h",
    }
}

/// Formats a float so that parsing it back gives the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> CliResult<Self> {
        let r = Reader {
            raw,
            used: Default::default(),
        };
        let kind = r
            .choice("initial.kind", &[("neck_bump", 0u8), ("product", 1u8)])?
            .ok_or_else(|| CliError::Config(format!("{}: missing required key 'initial.kind'", raw.source)))?;
        let initial = if kind == 0 {
            InitialData::NeckBump(NeckBumpParams {
                alpha: r.required_float("initial.alpha")?,
                beta: r.required_float("initial.beta")?,
                eta: r.required_float("initial.eta")?,
                lambda_big: r.required_float("initial.lambda")?,
                delta_smooth: r.required_float("initial.delta")?,
                smoothing: r.choice("initial.smoothing", &SMOOTHING)?.unwrap_or_default(),
            })
        } else {
            InitialData::Product {
                f0: r.required_float("initial.f0")?,
                g0: r.required_float("initial.g0")?,
                h0: r.required_float("initial.h0")?,
                lambda_big: r.float("initial.lambda")?.unwrap_or(1.0),
            }
        };

        let mut indices: Vec<usize> = Vec::new();
        for key in raw.entries.keys() {
            if let Some(rest) = key.strip_prefix("perturb.") {
                let idx = rest.split('.').next().unwrap_or("");
                let i: usize = idx
                    .parse()
                    .map_err(|_| raw.line_err(key, format!("perturbation index '{idx}' is not a number")))?;
                if !indices.contains(&i) {
                    indices.push(i);
                }
            }
        }
        indices.sort_unstable();
        let mut perturbations = Vec::new();
        for i in indices {
            let key = |f: &str| format!("perturb.{i}.{f}");
            let kind = r
                .choice(&key("kind"), &[("mode", 0u8), ("noise", 1u8)])?
                .unwrap_or(0);
            let target = r
                .choice(&key("target"), &TARGETS)?
                .ok_or_else(|| CliError::Config(format!("{}: missing '{}'", raw.source, key("target"))))?;
            let amplitude = r.required_float(&key("amplitude"))?;
            perturbations.push(if kind == 0 {
                Perturbation::Mode {
                    target,
                    wavenumber: r
                        .parse(&key("wavenumber"), "a non-negative integer")?
                        .ok_or_else(|| CliError::Config(format!("{}: missing '{}'", raw.source, key("wavenumber"))))?,
                    amplitude,
                }
            } else {
                Perturbation::Noise {
                    target,
                    modes: r.parse(&key("modes"), "a positive integer")?.unwrap_or(8),
                    amplitude,
                }
            });
        }

        let n_points = r
            .parse("grid.n_points", "an even integer >= 16")?
            .ok_or_else(|| CliError::Config(format!("{}: missing required key 'grid.n_points'", raw.source)))?;

        let d = SolverConfig::default();
        let solver = SolverConfig {
            cfl_safety: r.float("solver.cfl_safety")?.unwrap_or(d.cfl_safety),
            min_f_stop: r.float("solver.min_f_stop")?.unwrap_or(d.min_f_stop),
            curvature_cap: r.float("solver.curvature_cap")?.unwrap_or(d.curvature_cap),
            max_steps: r.parse("solver.max_steps", "an integer")?.unwrap_or(d.max_steps),
            snapshot_stride: r.parse("solver.snapshot_stride", "an integer")?.unwrap_or(d.snapshot_stride),
            t_max: r.float("solver.t_max")?,
            fit_fraction: r.float("solver.fit_fraction")?.unwrap_or(d.fit_fraction),
        };

        let dd = DiagnosticsConfig::default();
        let diagnostics = DiagnosticsConfig {
            delta: r.float("diagnostics.delta")?,
            eps: r.float("diagnostics.eps")?.unwrap_or(dd.eps),
            k_max: r.parse("diagnostics.k_max", "an integer")?.unwrap_or(dd.k_max),
            stride: r.parse("diagnostics.stride", "a positive integer")?.unwrap_or(dd.stride),
            frame_taus: r.float_list("diagnostics.frame_taus")?.unwrap_or_default(),
            cylinder_window: r.float("diagnostics.cylinder_window")?.unwrap_or(dd.cylinder_window),
        };
        let require = r
            .choice(
                "validation.require",
                &[
                    ("none", Requirement::None),
                    ("mild", Requirement::Mild),
                    ("stronger", Requirement::Stronger),
                    ("reflection", Requirement::Reflection),
                ],
            )?
            .unwrap_or(Requirement::Mild);
        let output_dir = r.get("output.dir").map(PathBuf::from);
        let seed = r.parse("rng.seed", "a non-negative integer")?;

        let used = r.used.borrow();
        if let Some(key) = raw
            .entries
            .keys()
            .find(|k| !k.starts_with("sweep.") && !used.contains(k))
        {
            return Err(raw.line_err(key, format!("unknown key '{key}'")));
        }
        drop(used);

        let cfg = RunConfig {
            initial,
            perturbations,
            n_points,
            solver,
            diagnostics,
            require,
            output_dir,
            seed,
        };
        cfg.check(raw)?;
        Ok(cfg)
    }

    fn check(&self, raw: &RawConfig) -> CliResult<()> {
        let bad = |key: &str, msg: String| Err(raw.line_err(key, msg));
        if let Err(e) = self.solver.validate() {
            return Err(CliError::Config(format!("{}: {e}", raw.source)));
        }
        if let InitialData::NeckBump(p) = &self.initial {
            if let Err(e) = p.validate() {
                return Err(CliError::Config(format!("{}: {e}", raw.source)));
            }
        }
        let dg = &self.diagnostics;
        if let Some(d) = dg.delta {
            if !(d > 0.0) {
                return bad("diagnostics.delta", format!("delta must be positive, got {d}"));
            }
        }
        if !(dg.eps > 0.0 && dg.eps < 1.0) {
            return bad("diagnostics.eps", format!("eps must lie in (0, 1), got {}", dg.eps));
        }
        if dg.k_max > berger_core::diagnostics::hermite::K_MAX {
            return bad("diagnostics.k_max", format!("k_max must not exceed 12, got {}", dg.k_max));
        }
        if dg.stride == 0 {
            return bad("diagnostics.stride", "stride must be at least 1".into());
        }
        if !(dg.cylinder_window > 0.0) {
            return bad("diagnostics.cylinder_window", "cylinder window must be positive".into());
        }
        let noisy = self
            .perturbations
            .iter()
            .any(|p| matches!(p, Perturbation::Noise { .. }));
        if noisy && self.seed.is_none() {
            return Err(CliError::Config(format!(
                "{}: noise perturbations need 'rng.seed'",
                raw.source
            )));
        }
        Ok(())
    }

    pub fn parse(source: &str, text: &str) -> CliResult<Self> {
        Self::from_raw(&RawConfig::parse(source, text)?)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        Self::from_raw(&RawConfig::read(path)?)
    }

    /// Canonical text form; `parse(to_text())` reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.initial {
            InitialData::NeckBump(p) => {
                kv("initial.kind", "neck_bump".into());
                kv("initial.alpha", fmt_f64(p.alpha));
                kv("initial.beta", fmt_f64(p.beta));
                kv("initial.eta", fmt_f64(p.eta));
                kv("initial.lambda", fmt_f64(p.lambda_big));
                kv("initial.delta", fmt_f64(p.delta_smooth));
                kv("initial.smoothing", p.smoothing.as_str().into());
            }
            InitialData::Product {
                f0,
                g0,
                h0,
                lambda_big,
            } => {
                kv("initial.kind", "product".into());
                kv("initial.f0", fmt_f64(*f0));
                kv("initial.g0", fmt_f64(*g0));
                kv("initial.h0", fmt_f64(*h0));
                kv("initial.lambda", fmt_f64(*lambda_big));
            }
        }
        for (i, p) in self.perturbations.iter().enumerate() {
            let k = |f: &str| format!("perturb.{i}.{f}");
            match p {
                Perturbation::Mode {
                    target,
                    wavenumber,
                    amplitude,
                } => {
                    kv(&k("kind"), "mode".into());
                    kv(&k("target"), target_name(*target).into());
                    kv(&k("wavenumber"), wavenumber.to_string());
                    kv(&k("amplitude"), fmt_f64(*amplitude));
                }
                Perturbation::Noise {
                    target,
                    modes,
                    amplitude,
                } => {
                    kv(&k("kind"), "noise".into());
                    kv(&k("target"), target_name(*target).into());
                    kv(&k("modes"), modes.to_string());
                    kv(&k("amplitude"), fmt_f64(*amplitude));
                }
            }
        }
        kv("grid.n_points", self.n_points.to_string());
        let sv = &self.solver;
        kv("solver.cfl_safety", fmt_f64(sv.cfl_safety));
        kv("solver.min_f_stop", fmt_f64(sv.min_f_stop));
        kv("solver.curvature_cap", fmt_f64(sv.curvature_cap));
        kv("solver.max_steps", sv.max_steps.to_string());
        kv("solver.snapshot_stride", sv.snapshot_stride.to_string());
        if let Some(t) = sv.t_max {
            kv("solver.t_max", fmt_f64(t));
        }
        kv("solver.fit_fraction", fmt_f64(sv.fit_fraction));
        let dg = &self.diagnostics;
        if let Some(d) = dg.delta {
            kv("diagnostics.delta", fmt_f64(d));
        }
        kv("diagnostics.eps", fmt_f64(dg.eps));
        kv("diagnostics.k_max", dg.k_max.to_string());
        kv("diagnostics.stride", dg.stride.to_string());
        if !dg.frame_taus.is_empty() {
            let list: Vec<String> = dg.frame_taus.iter().map(|t| fmt_f64(*t)).collect();
            kv("diagnostics.frame_taus", list.join(", "));
        }
        kv("diagnostics.cylinder_window", fmt_f64(dg.cylinder_window));
        kv("validation.require", self.require.as_str().into());
        if let Some(dir) = &self.output_dir {
            kv("output.dir", dir.display().to_string());
        }
        if let Some(seed) = self.seed {
            kv("rng.seed", seed.to_string());
        }
        s
    }
}
