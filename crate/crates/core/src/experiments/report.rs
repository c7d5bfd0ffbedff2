use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::aggregate::{aggregate, aggregate_by_noise, AggregateRow};
use super::{ExperimentError, ExperimentKind, ExperimentOutput};
use crate::metrics::METRIC_NAMES;

const PREENG_COLOR: &str = "#1f77b4";
const SCRATCH_COLOR: &str = "#ff7f0e";
const PALETTE: [&str; 10] = ["#d62728", "#1f77b4", "#9467bd", "#ff7f0e", "#2ca02c", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

fn noise_color(name: &str, index: usize) -> &'static str {
    match name {
        "office" => "#d62728",
        "bus" => "#1f77b4",
        "street" => "#9467bd",
        "living" => "#ff7f0e",
        "cafe" => "#2ca02c",
        _ => PALETTE[index % PALETTE.len()],
    }
}

fn mode_color(mode: &str) -> &'static str {
    match mode {
        "preeng" => PREENG_COLOR,
        _ => SCRATCH_COLOR,
    }
}

/// One curve: `(x, mean, std)` per axis value.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub dashed: bool,
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct HLine {
    pub label: String,
    pub y: f64,
    pub color: String,
    pub dash: String,
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
    pub hlines: Vec<HLine>,
    pub source_csv: String,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

impl Chart {
    /// Line chart with ±std error bars and horizontal reference lines.
    pub fn to_svg(&self) -> String {
        let (w, h) = (680.0, 420.0);
        let (left, right, top, bottom) = (70.0, 170.0, 40.0, 60.0);
        let (pw, ph) = (w - left - right, h - top - bottom);
        let tx = |x: f64| if self.log_x { x.max(1e-12).log10() } else { x };
        let xs: Vec<f64> = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
        let (mut x0, mut x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(tx(x)), b.max(tx(x))));
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            (x0, x1) = (x0 - 0.5, x1 + 0.5);
        }
        let ys = self.series.iter().flat_map(|s| s.points.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2])).chain(self.hlines.iter().map(|l| l.y));
        let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
        if !y0.is_finite() {
            (y0, y1) = (0.0, 1.0);
        }
        let pad = ((y1 - y0) * 0.05).max(1e-6);
        (y0, y1) = (y0 - pad, y1 + pad);
        let px = |x: f64| left + (tx(x) - x0) / (x1 - x0) * pw;
        let py = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, "<metadata>source_csv={}</metadata>", esc(&self.source_csv));
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, esc(&self.title));
        let _ = writeln!(s, r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
        let mut ticks: Vec<f64> = xs.clone();
        ticks.sort_by(f64::total_cmp);
        ticks.dedup();
        for t in &ticks {
            let x = px(*t);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#333"/>"##, top + ph, top + ph + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, top + ph + 18.0, fmt_tick(*t));
        }
        for i in 0..=4 {
            let v = y0 + (y1 - y0) * i as f64 / 4.0;
            let y = py(v);
            let _ = writeln!(s, r##"<line x1="{}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="#333"/>"##, left - 5.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, left - 8.0, y + 4.0, fmt_tick(v));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 15.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
            top + ph / 2.0,
            esc(&self.y_label)
        );
        let mut legend_y = top + 10.0;
        let legend_x = left + pw + 15.0;
        for l in &self.hlines {
            let y = py(l.y);
            let _ = writeln!(s, r#"<line class="baseline" x1="{left}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="{}" stroke-dasharray="{}" stroke-width="1.5"/>"#, left + pw, l.color, l.dash);
            let _ = writeln!(s, r#"<line x1="{legend_x}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{}" stroke-dasharray="{}" stroke-width="1.5"/>"#, legend_x + 25.0, l.color, l.dash);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, legend_x + 30.0, legend_y + 4.0, esc(&l.label));
            legend_y += 18.0;
        }
        for ser in &self.series {
            let dash = if ser.dashed { r#" stroke-dasharray="5,3""# } else { "" };
            let pts: Vec<String> = ser.points.iter().map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1))).collect();
            let _ = writeln!(s, r#"<g class="series" data-label="{}">"#, esc(&ser.label));
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{dash}/>"#, pts.join(" "), ser.color);
            for &(x, m, sd) in &ser.points {
                let (cx, lo, hi) = (px(x), py(m - sd), py(m + sd));
                let _ = writeln!(s, r#"<line x1="{cx:.2}" y1="{lo:.2}" x2="{cx:.2}" y2="{hi:.2}" stroke="{}"/>"#, ser.color);
                let _ = writeln!(s, r#"<circle class="point" cx="{cx:.2}" cy="{:.2}" r="3" fill="{}"/>"#, py(m), ser.color);
            }
            let _ = writeln!(s, "</g>");
            let _ = writeln!(s, r#"<line x1="{legend_x}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{}" stroke-width="2"{dash}/>"#, legend_x + 25.0, ser.color);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, legend_x + 30.0, legend_y + 4.0, esc(&ser.label));
            legend_y += 18.0;
        }
        s.push_str("</svg>\n");
        s
    }
}

fn stat_cells(row: &AggregateRow) -> String {
    METRIC_NAMES
        .iter()
        .map(|m| match row.stats.get(m) {
            Some(st) => format!("{:.6},{:.6}", st.mean, st.std),
            None => ",".to_string(),
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn stat_header() -> String {
    METRIC_NAMES.iter().map(|m| format!("{m}_mean,{m}_std")).collect::<Vec<_>>().join(",")
}

fn series_for(rows: &[AggregateRow], metric: &str, filter: impl Fn(&AggregateRow) -> bool) -> Vec<(f64, f64, f64)> {
    rows.iter().filter(|r| filter(r)).filter_map(|r| r.stats.get(metric).map(|s| (r.axis, s.mean, s.std))).collect()
}

/// Writes aggregates.csv, aggregates_by_noise.csv, baselines.csv and the SVG
/// charts; returns the paths written.
pub fn emit_report(output: &ExperimentOutput, out_dir: &Path, results_csv: Option<&Path>) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(out_dir)?;
    let kind = output.kind;
    let agg = aggregate(&output.runs);
    if agg.is_empty() {
        return Err(ExperimentError::Plan("no successful runs to report".into()));
    }
    let by_noise = aggregate_by_noise(&output.runs);
    let mut written = Vec::new();

    let agg_path = out_dir.join("aggregates.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&agg_path)?);
    writeln!(f, "axis,mode,n,{}", stat_header())?;
    for r in &agg {
        writeln!(f, "{},{},{},{}", r.axis, r.mode, r.n, stat_cells(r))?;
    }
    f.flush()?;
    written.push(agg_path.clone());

    let noise_path = out_dir.join("aggregates_by_noise.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&noise_path)?);
    writeln!(f, "noise_type,axis,mode,n,{}", stat_header())?;
    for r in &by_noise {
        writeln!(f, "{},{},{},{},{}", r.noise_type.as_deref().unwrap_or(""), r.axis, r.mode, r.n, stat_cells(r))?;
    }
    f.flush()?;
    written.push(noise_path.clone());

    let base_path = out_dir.join("baselines.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&base_path)?);
    writeln!(f, "mode,{}", METRIC_NAMES.join(","))?;
    let baselines: Vec<_> = output.baselines.iter().filter(|b| b.report.is_some()).collect();
    if baselines.is_empty() {
        writeln!(f, "# no baselines recorded")?;
    }
    for b in &baselines {
        let rep = b.report.as_ref().expect("filtered");
        let cells: Vec<String> = METRIC_NAMES.iter().map(|m| rep.get(m).map(|v| format!("{v:.6}")).unwrap_or_default()).collect();
        writeln!(f, "{},{}", b.mode, cells.join(","))?;
    }
    f.flush()?;
    written.push(base_path);

    let source = |p: &Path| results_csv.map(|r| format!("{}; {}", p.display(), r.display())).unwrap_or_else(|| p.display().to_string());
    let mut modes: Vec<String> = agg.iter().map(|r| r.mode.clone()).collect();
    modes.dedup();
    let mut noise_types: Vec<String> = by_noise.iter().filter_map(|r| r.noise_type.clone()).collect();
    noise_types.sort();
    noise_types.dedup();
    for metric in METRIC_NAMES {
        let series: Vec<Series> = modes
            .iter()
            .map(|m| Series { label: m.clone(), color: mode_color(m).into(), dashed: false, points: series_for(&agg, metric, |r| &r.mode == m) })
            .filter(|s| !s.points.is_empty())
            .collect();
        if series.is_empty() {
            continue;
        }
        let mut hlines = Vec::new();
        for b in &baselines {
            if let Some(y) = b.report.as_ref().and_then(|r| r.get(metric)) {
                let (label, color, dash) = match b.mode.as_str() {
                    "base" => ("unadapted base", "#2ca02c", "6,3"),
                    _ => ("noisy", "#000000", "8,3,2,3"),
                };
                hlines.push(HLine { label: label.into(), y, color: color.into(), dash: dash.into() });
            }
        }
        let chart = Chart {
            title: format!("{} {}", kind.name(), metric.to_uppercase()),
            x_label: kind.axis_label().into(),
            y_label: metric.to_uppercase(),
            log_x: kind == ExperimentKind::Exp1,
            series,
            hlines,
            source_csv: source(&agg_path),
        };
        let path = out_dir.join(format!("{}_{metric}.svg", kind.name()));
        std::fs::write(&path, chart.to_svg())?;
        written.push(path);

        let mut series = Vec::new();
        for (ni, nt) in noise_types.iter().enumerate() {
            for m in &modes {
                let points = series_for(&by_noise, metric, |r| r.noise_type.as_deref() == Some(nt.as_str()) && &r.mode == m);
                if !points.is_empty() {
                    series.push(Series { label: format!("{nt} ({m})"), color: noise_color(nt, ni).into(), dashed: m != "preeng", points });
                }
            }
        }
        if !series.is_empty() {
            let chart = Chart {
                title: format!("{} {} by test noise type", kind.name(), metric.to_uppercase()),
                x_label: kind.axis_label().into(),
                y_label: metric.to_uppercase(),
                log_x: kind == ExperimentKind::Exp1,
                series,
                hlines: Vec::new(),
                source_csv: source(&noise_path),
            };
            let path = out_dir.join(format!("{}_{metric}_by_noise.svg", kind.name()));
            std::fs::write(&path, chart.to_svg())?;
            written.push(path);
        }
    }
    Ok(written)
}
