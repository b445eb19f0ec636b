use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::{BenchError, Result};
use crate::report::{ExperimentReport, SummaryRow};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

fn plot_err<E: std::fmt::Display>(e: E) -> BenchError {
    BenchError::Plot(e.to_string())
}

struct Curve {
    name: String,
    /// `(x, y, spread)`
    points: Vec<(f64, f64, f64)>,
}

fn curves(report: &ExperimentReport, value: impl Fn(&SummaryRow) -> Option<(f64, f64)>) -> Vec<Curve> {
    let mut out = Vec::new();
    for series in report.series() {
        for method in report.methods() {
            let points: Vec<(f64, f64, f64)> = report
                .curve(&series, method)
                .into_iter()
                .filter_map(|s| value(s).map(|(y, e)| (s.x, y, e)))
                .collect();
            if points.is_empty() {
                continue;
            }
            let name = if series.is_empty() {
                method.name().to_string()
            } else {
                format!("{} ({series})", method.name())
            };
            out.push(Curve { name, points });
        }
    }
    out
}

fn bounds(curves: &[Curve], spread: bool) -> ((f64, f64), (f64, f64)) {
    let mut x = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y = (f64::INFINITY, f64::NEG_INFINITY);
    for c in curves {
        for &(px, py, pe) in &c.points {
            let e = if spread { pe } else { 0.0 };
            x = (x.0.min(px), x.1.max(px));
            y = (y.0.min(py - e), y.1.max(py + e));
        }
    }
    if x.0 == x.1 {
        x = (x.0 - 1.0, x.1 + 1.0);
    }
    if y.0 == y.1 {
        y = (y.0 - 0.5, y.1 + 0.5);
    }
    (x, y)
}

fn line_chart(path: &Path, title: &str, y_desc: &str, curves: &[Curve], y_range: Option<(f64, f64)>) -> Result<()> {
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (xr, yr) = bounds(curves, true);
    let yr = y_range.unwrap_or(yr);
    let pad = 0.03 * (xr.1 - xr.0);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(52)
        .build_cartesian_2d(xr.0 - pad..xr.1 + pad, yr.0..yr.1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .y_desc(y_desc)
        .draw()
        .map_err(plot_err)?;
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(c.points.iter().map(|&(x, y, _)| (x, y)), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(c.name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        chart
            .draw_series(c.points.iter().map(|&(x, y, _)| Circle::new((x, y), 3, color.filled())))
            .map_err(plot_err)?;
        chart
            .draw_series(
                c.points
                    .iter()
                    .filter(|p| p.2 > 0.0)
                    .map(|&(x, y, e)| PathElement::new(vec![(x, y - e), (x, y + e)], color)),
            )
            .map_err(plot_err)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

fn log_chart(path: &Path, title: &str, y_desc: &str, curves: &[Curve]) -> Result<()> {
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (xr, yr) = bounds(curves, false);
    let pad = 0.03 * (xr.1 - xr.0);
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(60)
        .build_cartesian_2d(xr.0 - pad..xr.1 + pad, (yr.0.max(1e-3) * 0.8..yr.1 * 1.25).log_scale())
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .y_desc(y_desc)
        .draw()
        .map_err(plot_err)?;
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(c.points.iter().map(|&(x, y, _)| (x, y)), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(c.name.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// NMI, timing and (when measured) relative-density figures for a report.
pub fn write_figures(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();

    let nmi = curves(report, |s| Some((s.mean_nmi, s.sd_nmi)));
    let path = dir.join(format!("{}_nmi.svg", report.name));
    line_chart(&path, &report.name, "NMI", &nmi, Some((0.0, 1.05)))?;
    written.push(path);

    let time = curves(report, |s| Some((s.mean_wall_ms, 0.0)));
    let path = dir.join(format!("{}_time.svg", report.name));
    log_chart(&path, &report.name, "wall time (ms)", &time)?;
    written.push(path);

    let red = curves(report, |s| s.mean_red.map(|m| (m, s.sd_red.unwrap_or(0.0))));
    if !red.is_empty() {
        let path = dir.join(format!("{}_red.svg", report.name));
        line_chart(&path, &report.name, "RED", &red, None)?;
        written.push(path);
    }
    Ok(written)
}
