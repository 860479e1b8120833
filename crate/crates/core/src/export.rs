//! CSV files with commented headers and companion gnuplot scripts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ScenarioKind;
use crate::error::{QreError, Result};
use crate::observables::TimeSeries;

pub const SERIES_COLUMNS: [&str; 11] = [
    "t",
    "mean_x",
    "mean_p",
    "var_x",
    "var_p",
    "energy",
    "purity",
    "trace",
    "transmission",
    "mean_G",
    "mean_F",
];

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `# key: value` lines followed by the configuration echo.
pub fn header(metadata: &BTreeMap<String, String>, config_toml: &str) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str("# config:\n");
    for line in config_toml.lines() {
        let _ = writeln!(out, "#   {line}");
    }
    out
}

/// The full CSV document for a recorded series.
pub fn series_csv(series: &TimeSeries, config_toml: &str) -> String {
    let mut out = header(&series.metadata, config_toml);
    let mut cols: Vec<&str> = SERIES_COLUMNS.to_vec();
    cols.extend(series.comparators.iter().map(|(n, _)| n.as_str()));
    out.push_str(&cols.join(","));
    out.push('\n');
    for (k, r) in series.records.iter().enumerate() {
        let mut row = vec![
            num(r.t),
            num(r.mean_x),
            num(r.mean_p),
            num(r.var_x),
            num(r.var_p),
            num(r.energy),
            num(r.purity),
            num(r.trace),
            opt(r.transmission),
            opt(r.mean_g),
            opt(r.mean_f),
        ];
        row.extend(series.comparators.iter().map(|(_, v)| num(v[k])));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Gnuplot script drawing the panels of the scenario's figure from `csv`.
pub fn plot_script(kind: ScenarioKind, figure: &str, csv: &str, comparators: &[String]) -> String {
    let has = |c: &str| comparators.iter().any(|n| n == c);
    let mut s = String::new();
    let _ = writeln!(s, "# {figure}: panels drawn from {csv}");
    s.push_str("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n");
    let _ = writeln!(s, "set terminal pngcairo size 1200,500\nset output '{figure}.png'");
    s.push_str("set multiplot layout 1,2\nset xlabel 't (a.u.)'\n");
    let panel = |s: &mut String, title: &str, main: &str, extra: Option<&str>| {
        let _ = writeln!(s, "set title '{title}'");
        match extra {
            Some(e) => {
                let _ = writeln!(
                    s,
                    "plot '{csv}' using 't':'{main}' with lines lw 2, '' using 't':'{e}' with lines dt 2 lc 'black'"
                );
            }
            None => {
                let _ = writeln!(s, "plot '{csv}' using 't':'{main}' with lines lw 2");
            }
        }
    };
    match kind {
        ScenarioKind::Tunneling => {
            panel(&mut s, "(a) transmission", "transmission", has("free_transmission").then_some("free_transmission"));
            panel(&mut s, "(b) purity", "purity", None);
        }
        ScenarioKind::Trapping => {
            panel(&mut s, "(a) position variance", "var_x", has("free_gaussian_spread").then_some("free_gaussian_spread"));
            panel(&mut s, "(b) energy", "energy", None);
        }
        ScenarioKind::EffectiveMass => {
            panel(&mut s, "(a) mean position", "mean_x", has("linear_potential_newton").then_some("linear_potential_newton"));
            panel(&mut s, "(b) mean momentum", "mean_p", None);
        }
        ScenarioKind::Relativistic => {
            panel(&mut s, "(a) mean velocity <G(p)>", "mean_G", has("classical_relativistic").then_some("classical_relativistic"));
            panel(&mut s, "(b) mean momentum", "mean_p", None);
        }
        ScenarioKind::Custom => {
            panel(&mut s, "(a) mean position", "mean_x", None);
            panel(&mut s, "(b) purity", "purity", None);
        }
    }
    s.push_str("unset multiplot\n");
    s
}

/// Gnuplot script for a sweep summary: transmission and purity against the
/// swept value, one curve per column set.
pub fn sweep_plot_script(figure: &str, csv: &str, x_column: &str, labels: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {figure}: sweep panels drawn from {csv}");
    s.push_str("set datafile separator ','\nset datafile commentschars '#'\n");
    let _ = writeln!(s, "set terminal pngcairo size 1200,500\nset output '{figure}_sweep.png'");
    s.push_str("set multiplot layout 1,2\nset logscale x\n");
    let _ = writeln!(s, "set xlabel '{x_column}'");
    for (title, q) in [("(a) transmission", "transmission"), ("(b) purity", "purity")] {
        let _ = writeln!(s, "set title '{title}'");
        let curves: Vec<String> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let src = if i == 0 { format!("'{csv}'") } else { "''".to_string() };
                format!("{src} using '{x_column}':'{q}[{l}]' with linespoints title '{l}'")
            })
            .collect();
        let _ = writeln!(s, "plot {}", curves.join(", "));
    }
    s.push_str("unset multiplot\n");
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> QreError {
    QreError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.gp`; returns both paths.
pub fn emit_outputs(
    series: &TimeSeries,
    kind: ScenarioKind,
    config_toml: &str,
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf)> {
    let csv = dir.join(format!("{stem}.csv"));
    let gp = dir.join(format!("{stem}.gp"));
    write_file(&csv, &series_csv(series, config_toml))?;
    let figure = series.metadata.get("figure").cloned().unwrap_or_else(|| kind.figure().into());
    let names: Vec<String> = series.comparators.iter().map(|(n, _)| n.clone()).collect();
    write_file(&gp, &plot_script(kind, &figure, &format!("{stem}.csv"), &names))?;
    Ok((csv, gp))
}
