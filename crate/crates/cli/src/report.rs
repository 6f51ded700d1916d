//! Text summaries and plot-ready CSVs from finished run or sweep directories.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::output::{num, opt, write_atomic, Csv};
use crate::run::{RunSummary, SERIES_FILE, SUMMARY_FILE};
use crate::sweep::MANIFEST_FILE;

pub const TYPE_I_FILE: &str = "plot_type_i.csv";
pub const DECAY_FILE: &str = "plot_decay.csv";
pub const SWEEP_FILE: &str = "plot_sweep.csv";

/// Parsed `series.csv`; blank cells become `None`.
#[derive(Debug, Clone)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Series {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut lines = text.lines();
        let columns: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Config("series.csv is empty".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row: Vec<Option<f64>> = line
                .split(',')
                .map(|c| if c.is_empty() { Ok(None) } else { c.parse().map(Some) })
                .collect::<Result<_, _>>()
                .map_err(|_| CliError::Config(format!("series.csv row {} is not numeric", k + 2)))?;
            if row.len() != columns.len() {
                return Err(CliError::Config(format!("series.csv row {} has {} cells", k + 2, row.len())));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn column(&self, name: &str) -> CliResult<Vec<Option<f64>>> {
        let j = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Config(format!("series.csv lacks column '{name}'")))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_summary(dir: &Path) -> CliResult<RunSummary> {
    let path = dir.join(SUMMARY_FILE);
    serde_json::from_str(&read(&path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn range(r: Option<[f64; 2]>) -> String {
    r.map(|[a, b]| format!("[{a:.4}, {b:.4}]")).unwrap_or_else(|| "-".into())
}

fn or_dash(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into())
}

pub fn render_summary(s: &RunSummary) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k:<28} {v}");
    };
    let t_hat = match (s.t_hat, s.t_hat_stderr) {
        (Some(t), Some(e)) => format!("{t:.8} +/- {e:.2e}"),
        _ => "-".into(),
    };
    line("T_hat", t_hat);
    line("fit slope", or_dash(s.fit_slope));
    line("stop reason", s.stop_reason.as_str().into());
    line("steps / snapshots", format!("{} / {}", s.steps_taken, s.snapshots));
    line("locality", s.singularity_locality.as_str().into());
    line("Type-I ratio (all)", range(s.type_i_ratio_range));
    line("Type-I ratio (final decade)", range(s.type_i_ratio_range_final_decade));
    let m = &s.monitors;
    line("ecc_max initial -> final", format!("{:.6} -> {:.6}", m.ecc_max_initial, m.ecc_max_final));
    line("neck F first / sup", format!("{} / {}", or_dash(m.neck_f_abs_first), or_dash(m.neck_f_abs_sup)));
    line(
        "diameter initial -> final",
        format!("{:.6} -> {:.6}", m.diameter_initial, m.diameter_final),
    );
    line("min f-g gap", format!("{:.3e}", m.order_gap_fg_min));
    if let Some(c) = &s.cylinder {
        line("cylinder |u-1|, |v-1|", format!("{:.4}, {:.4} (tau {:.3})", c.u_dev, c.v_dev, c.tau));
    }
    if let Some(d) = &s.decay {
        line(
            "decay slope of |X|_G",
            format!("{:.4} [{:.4}, {:.4}] over tau {:.3}..{:.3}", d.fit.slope, d.fit.ci_low, d.fit.ci_high, d.tau_min, d.tau_max),
        );
    }
    line(
        "assumptions mild/stronger/refl",
        format!(
            "{}/{}/{}",
            s.assumptions.verdicts.mild, s.assumptions.verdicts.stronger, s.assumptions.verdicts.reflection
        ),
    );
    out
}

/// Writes the plot files of one run directory and returns its table.
pub fn report_run(dir: &Path) -> CliResult<String> {
    let summary = load_summary(dir)?;
    let series = Series::parse(&read(&dir.join(SERIES_FILE))?)?;
    let t = series.column("t")?;
    let m_check = series.column("m_check")?;
    let tau = series.column("tau")?;
    let norm = series.column("norm_g")?;

    let mut type_i = Csv::new(&["t", "tau", "t_hat_minus_t", "type_i_ratio"]);
    if let Some(t_hat) = summary.t_hat {
        for ((t, m), tau) in t.iter().zip(&m_check).zip(&tau) {
            let (Some(t), Some(m), Some(tau)) = (t, m, tau) else { continue };
            let rem = t_hat - t;
            type_i.row(&[num(*t), num(*tau), num(rem), num(m / rem.sqrt())]);
        }
    }
    write_atomic(&dir.join(TYPE_I_FILE), type_i.into_string().as_bytes())?;

    let mut decay = Csv::new(&["tau", "norm_g", "log_norm_g", "fit"]);
    for (tau, n) in tau.iter().zip(&norm) {
        let (Some(tau), Some(n)) = (tau, n) else { continue };
        let fit = summary.decay.as_ref().map(|d| d.fit.intercept + d.fit.slope * tau);
        decay.row(&[num(*tau), num(*n), num(n.ln()), opt(fit)]);
    }
    write_atomic(&dir.join(DECAY_FILE), decay.into_string().as_bytes())?;
    Ok(render_summary(&summary))
}

fn point_dirs(root: &Path) -> CliResult<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| CliError::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("point_")))
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Writes the sweep overview and returns its table.
pub fn report_sweep(root: &Path) -> CliResult<String> {
    let mut csv = Csv::new(&[
        "point",
        "t_hat",
        "stop_reason",
        "locality",
        "type_i_min",
        "type_i_max",
        "decay_slope",
        "ecc_final_over_initial",
    ]);
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:>14} {:>18} {:>8} {:>10}", "point", "T_hat", "stop", "locality", "decay");
    for dir in point_dirs(root)? {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let Ok(s) = load_summary(&dir) else {
            let _ = writeln!(out, "{name:<12} (no summary)");
            continue;
        };
        let range = s.type_i_ratio_range_final_decade;
        let slope = s.decay.as_ref().map(|d| d.fit.slope);
        csv.row(&[
            name.clone(),
            opt(s.t_hat),
            s.stop_reason.as_str().into(),
            s.singularity_locality.as_str().into(),
            opt(range.map(|r| r[0])),
            opt(range.map(|r| r[1])),
            opt(slope),
            num(s.monitors.ecc_max_final / s.monitors.ecc_max_initial),
        ]);
        let _ = writeln!(
            out,
            "{name:<12} {:>14} {:>18} {:>8} {:>10}",
            s.t_hat.map(|t| format!("{t:.8}")).unwrap_or_else(|| "-".into()),
            s.stop_reason.as_str(),
            s.singularity_locality.as_str(),
            slope.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
        );
    }
    write_atomic(&root.join(SWEEP_FILE), csv.into_string().as_bytes())?;
    Ok(out)
}

/// Reports a run directory or, when a manifest is present, a sweep.
pub fn cmd_report(dir: &Path) -> CliResult<String> {
    let text = if dir.join(MANIFEST_FILE).is_file() {
        report_sweep(dir)?
    } else if dir.join(SUMMARY_FILE).is_file() {
        report_run(dir)?
    } else {
        return Err(CliError::Config(format!(
            "{} holds neither {SUMMARY_FILE} nor {MANIFEST_FILE}",
            dir.display()
        )));
    };
    print!("{text}");
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_parsing() {
        let s = Series::parse("t,tau\n1.0e0,\n2.0e0,3.5e0\n").unwrap();
        assert_eq!(s.column("tau").unwrap(), vec![None, Some(3.5)]);
        assert!(s.column("x").is_err());
        assert!(Series::parse("t,tau\n1.0\n").is_err());
        assert!(Series::parse("t\nabc\n").is_err());
    }
}
