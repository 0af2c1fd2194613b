use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::record::RunRecord;
use crate::error::{Error, Result};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Mean and population std of normalized scores per algorithm and step.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub label: String,
    pub steps: Vec<u64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub runs: usize,
}

/// Groups records by label; all records of a label must share the eval grid.
pub fn aggregate(records: &[RunRecord]) -> Result<Vec<Curve>> {
    if records.is_empty() {
        return Err(Error::config("no run records to plot"));
    }
    let mut groups: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.label.as_str()).or_default().push(r);
    }
    let mut curves = Vec::with_capacity(groups.len());
    for (label, runs) in groups {
        let steps: Vec<u64> = runs[0].series.iter().map(|m| m.step).collect();
        if steps.is_empty() {
            return Err(Error::config(format!("run '{label}' has no evaluations")));
        }
        for r in &runs {
            if r.series.iter().map(|m| m.step).ne(steps.iter().copied()) {
                return Err(Error::config(format!(
                    "runs of '{label}' do not share an evaluation grid"
                )));
            }
        }
        let n = runs.len() as f64;
        let mut mean = Vec::with_capacity(steps.len());
        let mut std = Vec::with_capacity(steps.len());
        for k in 0..steps.len() {
            let m = runs
                .iter()
                .map(|r| r.series[k].normalized_score)
                .sum::<f64>()
                / n;
            let v = runs
                .iter()
                .map(|r| (r.series[k].normalized_score - m).powi(2))
                .sum::<f64>()
                / n;
            mean.push(m);
            std.push(v.sqrt());
        }
        curves.push(Curve {
            label: label.to_string(),
            steps,
            mean,
            std,
            runs: runs.len(),
        });
    }
    Ok(curves)
}

fn nice_bounds(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Renders curves as a standalone SVG line chart with shaded std bands.
pub fn render_svg(curves: &[Curve]) -> String {
    let (w, h) = (720.0, 440.0);
    let (left, right, top, bottom) = (70.0, 170.0, 30.0, 50.0);
    let x_max = curves
        .iter()
        .flat_map(|c| c.steps.iter().copied())
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let x_min = curves
        .iter()
        .flat_map(|c| c.steps.iter().copied())
        .min()
        .unwrap_or(0) as f64;
    let lo = curves
        .iter()
        .flat_map(|c| c.mean.iter().zip(&c.std).map(|(m, s)| m - s))
        .fold(f64::INFINITY, f64::min);
    let hi = curves
        .iter()
        .flat_map(|c| c.mean.iter().zip(&c.std).map(|(m, s)| m + s))
        .fold(f64::NEG_INFINITY, f64::max);
    let (y_min, y_max) = nice_bounds(lo, hi);
    let span_x = (x_max - x_min).max(1.0);
    let px = |x: f64| left + (x - x_min) / span_x * (w - left - right);
    let py = |y: f64| top + (y_max - y) / (y_max - y_min) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - bottom,
        w - right,
        h - bottom
    );
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        h - bottom
    );
    for k in 0..=4 {
        let y = y_min + (y_max - y_min) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{y:.1}</text>"#,
            left - 6.0,
            py(y) + 4.0
        );
        let x = x_min + span_x * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{x:.0}</text>"#,
            px(x),
            h - bottom + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{}" text-anchor="middle">environment steps</text>"#,
        (left + w - right) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">normalized score</text>"#,
        (top + h - bottom) / 2.0,
        (top + h - bottom) / 2.0
    );
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper: Vec<String> = c
            .steps
            .iter()
            .zip(c.mean.iter().zip(&c.std))
            .map(|(&x, (m, sd))| format!("{:.2},{:.2}", px(x as f64), py(m + sd)))
            .collect();
        let lower: Vec<String> = c
            .steps
            .iter()
            .zip(c.mean.iter().zip(&c.std))
            .rev()
            .map(|(&x, (m, sd))| format!("{:.2},{:.2}", px(x as f64), py(m - sd)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = c
            .steps
            .iter()
            .zip(&c.mean)
            .map(|(&x, m)| format!("{:.2},{:.2}", px(x as f64), py(*m)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = top + 16.0 * i as f64 + 8.0;
        let lx = w - right + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#,
            lx + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{} (n={})</text>"#,
            lx + 24.0,
            ly + 4.0,
            escape(&c.label),
            c.runs
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// `algo,step,mean_score,std_score,runs` rows, one per curve point.
pub fn curves_csv(curves: &[Curve]) -> String {
    let mut out = String::from("algo,step,mean_score,std_score,runs\n");
    for c in curves {
        for k in 0..c.steps.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.label, c.steps[k], c.mean[k], c.std[k], c.runs
            );
        }
    }
    out
}

/// Writes the SVG chart to `path` and its backing CSV next to it; returns the
/// CSV path. Nothing is written when `records` is empty.
pub fn emit_plot(records: &[RunRecord], path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    let curves = aggregate(records)?;
    fs::write(path, render_svg(&curves)).map_err(|e| Error::io(path, e))?;
    let csv_path = path.with_extension("csv");
    fs::write(&csv_path, curves_csv(&curves)).map_err(|e| Error::io(&csv_path, e))?;
    Ok(csv_path)
}
