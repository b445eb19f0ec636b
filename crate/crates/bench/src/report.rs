use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::plot;
use crate::run::ReplicateRow;
use crate::spec::{ExperimentSpec, Method};

/// Mean and sample standard deviation; the deviation of one value is zero.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub point: String,
    pub series: String,
    pub x: f64,
    pub method: Method,
    pub reps: usize,
    pub mean_nmi: f64,
    pub sd_nmi: f64,
    pub mean_red: Option<f64>,
    pub sd_red: Option<f64>,
    pub mean_wall_ms: f64,
    pub mean_rounds: f64,
    pub collapsed_inits: usize,
    pub ascent_violations: usize,
}

/// A direction or threshold asserted over the summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// Larger is better.
    Nmi,
    /// Smaller is better.
    Red,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub name: String,
    pub rows: Vec<ReplicateRow>,
    pub summary: Vec<SummaryRow>,
    pub checks: Vec<Check>,
}

impl ExperimentReport {
    pub fn new(spec: &ExperimentSpec, rows: Vec<ReplicateRow>) -> Self {
        let mut summary = Vec::new();
        for point in &spec.points {
            for &method in &spec.methods {
                let group: Vec<&ReplicateRow> = rows
                    .iter()
                    .filter(|r| r.point == point.label && r.method == method)
                    .collect();
                if group.is_empty() {
                    continue;
                }
                let nmis: Vec<f64> = group.iter().map(|r| r.nmi).collect();
                let reds: Vec<f64> = group.iter().filter_map(|r| r.red).filter(|v| v.is_finite()).collect();
                let (mean_nmi, sd_nmi) = mean_sd(&nmis);
                let (mean_red, sd_red) = if reds.is_empty() {
                    (None, None)
                } else {
                    let (m, s) = mean_sd(&reds);
                    (Some(m), Some(s))
                };
                let walls: Vec<f64> = group.iter().map(|r| r.wall_ms).collect();
                let rounds: Vec<f64> = group.iter().map(|r| r.rounds as f64).collect();
                summary.push(SummaryRow {
                    experiment: spec.name.clone(),
                    point: point.label.clone(),
                    series: point.series.clone(),
                    x: point.x,
                    method,
                    reps: group.len(),
                    mean_nmi,
                    sd_nmi,
                    mean_red,
                    sd_red,
                    mean_wall_ms: mean_sd(&walls).0,
                    mean_rounds: mean_sd(&rounds).0,
                    collapsed_inits: group.iter().filter(|r| r.init_collapsed).count(),
                    ascent_violations: group.iter().map(|r| r.ascent_violations).sum(),
                });
            }
        }
        Self {
            name: spec.name.clone(),
            rows,
            summary,
            checks: Vec::new(),
        }
    }

    pub fn summary_for(&self, point: &str, method: Method) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.point == point && s.method == method)
    }

    /// Summary rows of one series and method, by increasing `x`.
    pub fn curve(&self, series: &str, method: Method) -> Vec<&SummaryRow> {
        let mut rows: Vec<&SummaryRow> = self
            .summary
            .iter()
            .filter(|s| s.series == series && s.method == method)
            .collect();
        rows.sort_by(|a, b| a.x.total_cmp(&b.x));
        rows
    }

    pub fn series(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.summary {
            if !out.contains(&s.series) {
                out.push(s.series.clone());
            }
        }
        out
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut out: Vec<Method> = Vec::new();
        for s in &self.summary {
            if !out.contains(&s.method) {
                out.push(s.method);
            }
        }
        out
    }

    /// Mean NMI along a series never drops by more than one standard
    /// deviation between neighbouring grid points.
    pub fn check_trend(&mut self, name: &str, series: &str, method: Method) {
        let curve = self.curve(series, method);
        let mut worst: Option<(f64, f64, f64)> = None;
        for w in curve.windows(2) {
            let slack = w[0].sd_nmi.max(w[1].sd_nmi);
            if w[1].mean_nmi < w[0].mean_nmi - slack {
                worst = Some((w[0].x, w[1].x, w[0].mean_nmi - w[1].mean_nmi));
                break;
            }
        }
        let means: Vec<String> = curve.iter().map(|s| format!("{}:{:.3}", s.x, s.mean_nmi)).collect();
        let detail = match worst {
            None => format!("{} {}: {}", series, method.name(), means.join(" ")),
            Some((a, b, d)) => format!("drop of {d:.3} from x={a} to x={b}; {}", means.join(" ")),
        };
        self.checks.push(Check {
            name: name.into(),
            passed: worst.is_none() && curve.len() >= 2,
            detail,
        });
    }

    /// `better` beats `worse` on `metric` by at least `margin`.
    pub fn check_order(
        &mut self,
        name: &str,
        metric: Metric,
        better: (&str, Method),
        worse: (&str, Method),
        margin: f64,
    ) {
        let pick = |s: &SummaryRow| match metric {
            Metric::Nmi => Some(s.mean_nmi),
            Metric::Red => s.mean_red,
        };
        let a = self.summary_for(better.0, better.1).and_then(pick);
        let b = self.summary_for(worse.0, worse.1).and_then(pick);
        let (passed, detail) = match (a, b) {
            (Some(a), Some(b)) => {
                let gap = match metric {
                    Metric::Nmi => a - b,
                    Metric::Red => b - a,
                };
                (gap >= margin, format!("{a:.4} vs {b:.4} (margin {gap:.4}, needed {margin})"))
            }
            _ => (false, "missing summary".to_string()),
        };
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Writes `<name>_replicates.csv`, `<name>_summary.csv`,
    /// `<name>_checks.csv` and the SVG figures into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();

        let path = dir.join(format!("{}_replicates.csv", self.name));
        let mut w = csv::Writer::from_path(&path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        written.push(path);

        let path = dir.join(format!("{}_summary.csv", self.name));
        let mut w = csv::Writer::from_path(&path)?;
        for r in &self.summary {
            w.serialize(r)?;
        }
        w.flush()?;
        written.push(path);

        if !self.checks.is_empty() {
            let path = dir.join(format!("{}_checks.csv", self.name));
            let mut w = csv::Writer::from_path(&path)?;
            for c in &self.checks {
                w.serialize(c)?;
            }
            w.flush()?;
            written.push(path);
        }

        written.extend(plot::write_figures(self, dir)?);
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sd() {
        assert_eq!(mean_sd(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(mean_sd(&[]).0.is_nan());
    }
}
