//! Table, CSV and plot-data writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use fractau::report::{Metrics, Sample, SolveReport};

/// Scientific notation with 17 significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

fn header(names: &[&str]) -> Vec<String> {
    names
        .iter()
        .map(|s| s.to_string())
        .chain(["exact", "approx", "abs_error"].map(String::from))
        .collect()
}

fn record(s: &Sample) -> Vec<String> {
    s.coords
        .iter()
        .map(|&c| sci(c))
        .chain([opt_sci(s.exact), sci(s.approx), opt_sci(s.abs_error())])
        .collect()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))
}

/// Per-point CSV of the report's full sampling grid.
pub fn write_field_csv(path: &Path, report: &SolveReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header(report.coordinate_names()))?;
    for s in &report.field {
        w.write_record(record(s))?;
    }
    w.flush()?;
    Ok(())
}

/// One row of a sweep summary.
pub struct SweepRow {
    pub lambda: usize,
    pub points: usize,
    pub metrics: Option<Metrics>,
    pub condition: f64,
    pub residual_norm: f64,
}

pub const SWEEP_COLUMNS: [&str; 8] =
    ["lambda", "P", "l2_paper", "l2_rms", "linf", "mean", "condition", "residual_norm"];

/// Sweep summary CSV. Timing is left out so that reruns are bit-identical.
pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        let m = r.metrics;
        w.write_record([
            r.lambda.to_string(),
            r.points.to_string(),
            opt_sci(m.map(|m| m.l2_paper)),
            opt_sci(m.map(|m| m.l2_rms)),
            opt_sci(m.map(|m| m.linf)),
            opt_sci(m.map(|m| m.mean)),
            sci(r.condition),
            sci(r.residual_norm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn dat_line(out: &mut String, s: &Sample) {
    let cols: Vec<String> = record(s)
        .into_iter()
        .map(|c| if c.is_empty() { "NaN".into() } else { c })
        .collect();
    let _ = writeln!(out, "{}", cols.join(" "));
}

/// gnuplot data: `<stem>_profile.dat` has the error grid at t_eval and
/// `<stem>_field.dat` the full sampling grid, with a blank line after each
/// x block so that `splot` draws a surface. Returns the written paths.
pub fn write_plot_files(dir: &Path, stem: &str, report: &SolveReport) -> Result<Vec<String>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let cols = header(report.coordinate_names()).join(" ");
    let n = report.grid;

    let mut profile = format!("# {stem}: t_eval = {}\n# {cols}\n", report.t_eval);
    for (k, s) in report.profile.iter().enumerate() {
        dat_line(&mut profile, s);
        if report.dimension == 2 && (k + 1) % n == 0 {
            profile.push('\n');
        }
    }
    let mut field = format!("# {stem}\n# {cols}\n");
    for (k, s) in report.field.iter().enumerate() {
        dat_line(&mut field, s);
        if (k + 1) % n == 0 {
            field.push('\n');
        }
    }
    let mut written = Vec::new();
    for (suffix, body) in [("profile", profile), ("field", field)] {
        let path = dir.join(format!("{stem}_{suffix}.dat"));
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        written.push(path.display().to_string());
    }
    Ok(written)
}

/// gnuplot data of a sweep: one line per configuration.
pub fn write_sweep_plot(dir: &Path, stem: &str, rows: &[SweepRow]) -> Result<String> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut body = format!("# {stem}\n# {}\n", SWEEP_COLUMNS.join(" "));
    for r in rows {
        let m = r.metrics;
        let f = |v: Option<f64>| v.map(sci).unwrap_or_else(|| "NaN".into());
        let _ = writeln!(
            body,
            "{} {} {} {} {} {} {} {}",
            r.lambda,
            r.points,
            f(m.map(|m| m.l2_paper)),
            f(m.map(|m| m.l2_rms)),
            f(m.map(|m| m.linf)),
            f(m.map(|m| m.mean)),
            sci(r.condition),
            sci(r.residual_norm)
        );
    }
    let path = dir.join(format!("{stem}_sweep.dat"));
    fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path.display().to_string())
}

/// Human-readable report.
pub fn print_report(name: &str, lambda: usize, points: usize, report: &SolveReport) {
    println!("{name}: Λ = {lambda}, P = {points}, N_p = {}, t_eval = {}", report.grid, report.t_eval);
    let names = report.coordinate_names();
    let mut head: Vec<String> = names.iter().map(|n| format!("{n:>6}")).collect();
    head.extend(["exact", "approx", "abs_error"].map(|h| format!("{h:>24}")));
    println!("{}", head.join(" "));
    for s in &report.table {
        let mut cols: Vec<String> = s.coords.iter().map(|c| format!("{c:>6.3}")).collect();
        let f = |v: Option<f64>| v.map(|v| format!("{v:>24.15e}")).unwrap_or_else(|| format!("{:>24}", "-"));
        cols.extend([f(s.exact), f(Some(s.approx)), f(s.abs_error())]);
        println!("{}", cols.join(" "));
    }
    match report.metrics {
        Some(m) => println!(
            "l2_paper = {:.4e}  l2_rms = {:.4e}  linf = {:.4e}  mean = {:.4e}",
            m.l2_paper, m.l2_rms, m.linf, m.mean
        ),
        None => println!("no exact solution: error metrics unavailable"),
    }
    let secs = report.seconds.map(|s| format!("{s:.3} s")).unwrap_or_else(|| "n/a".into());
    println!(
        "condition ≈ {:.3e}  residual = {:.3e}  time = {secs}",
        report.condition, report.residual_norm
    );
}
