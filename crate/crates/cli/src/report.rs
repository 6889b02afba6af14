//! Evaluation reports: contender statistics, the summary table and the
//! training-reward SVG chart.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use colorbatch_core::stats::{one_sample_t, percent_increase, summarize_counts, StatsError};

use crate::files::ResultRow;

/// Per-contender aggregate plus the comparison columns against the
/// reference contender (the first one listed).
#[derive(Debug, Clone)]
pub struct ContenderSummary {
    pub contender: String,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_dev: f64,
    /// (reference_mean − mean) / mean × 100; None for the reference row.
    pub percent_increase: Option<f64>,
    /// One-sample t-test of this contender's counts against the reference
    /// mean; None for the reference row or degenerate samples.
    pub t_stat: Option<f64>,
    pub p_value: Option<f64>,
}

/// Full evaluation report: per-scenario counts plus per-contender stats.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub rows: Vec<ResultRow>,
    pub summaries: Vec<ContenderSummary>,
}

/// Build a report from result rows. The reference contender is either the
/// one named `reference`, or the first contender seen.
pub fn build_report(rows: Vec<ResultRow>, reference: Option<&str>) -> Result<EvalReport> {
    let mut by_contender: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for row in &rows {
        if !order.contains(&row.contender) {
            order.push(row.contender.clone());
        }
        by_contender
            .entry(row.contender.clone())
            .or_default()
            .push(row.color_changes);
    }
    let reference = match reference {
        Some(name) => {
            if !by_contender.contains_key(name) {
                bail!("reference contender {name:?} not present in results");
            }
            name.to_string()
        }
        None => order[0].clone(),
    };
    // reference first, everything else in first-seen order
    order.retain(|c| *c != reference);
    order.insert(0, reference.clone());

    let ref_summary = summarize_counts(&by_contender[&reference])?;
    let mut summaries = Vec::new();
    for name in &order {
        let counts = &by_contender[name];
        let s = summarize_counts(counts)?;
        let is_reference = *name == reference;
        let (pct, t, p) = if is_reference {
            (None, None, None)
        } else {
            let pct = percent_increase(ref_summary.mean, s.mean).ok();
            match one_sample_t(
                &counts.iter().map(|&c| c as f64).collect::<Vec<_>>(),
                ref_summary.mean,
            ) {
                Ok(tt) => (pct, Some(tt.t), Some(tt.p)),
                Err(StatsError::DegenerateSamples) => (pct, None, None),
                Err(e) => return Err(e.into()),
            }
        };
        summaries.push(ContenderSummary {
            contender: name.clone(),
            n: s.n,
            mean: s.mean,
            variance: s.variance,
            std_dev: s.std_dev,
            percent_increase: pct,
            t_stat: t,
            p_value: p,
        });
    }
    Ok(EvalReport { rows, summaries })
}

pub const SUMMARY_HEADER: &str =
    "contender,n,mean,variance,std_dev,percent_increase_vs_reference,t_vs_reference_mean,p_value";

pub fn write_summary_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for s in &report.summaries {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            s.contender,
            s.n,
            s.mean,
            s.variance,
            s.std_dev,
            opt(s.percent_increase),
            opt(s.t_stat),
            opt(s.p_value)
        )?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Minimal SVG line chart of (x, y) points. With no points the chart is
/// axes only.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 420.0;
    const ML: f64 = 64.0; // margins
    const MR: f64 = 24.0;
    const MT: f64 = 40.0;
    const MB: f64 = 48.0;
    let plot_w = W - ML - MR;
    let plot_h = H - MT - MB;

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n",
        W / 2.0
    );
    // axes
    let _ = write!(
        svg,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>\n",
        MT + plot_h,
        MT + plot_h,
        ML + plot_w,
        MT + plot_h,
        ML + plot_w / 2.0,
        H - 12.0,
        MT + plot_h / 2.0,
        MT + plot_h / 2.0,
    );

    if !points.is_empty() {
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in points {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        if (x_max - x_min).abs() < 1e-12 {
            x_max = x_min + 1.0;
        }
        if (y_max - y_min).abs() < 1e-12 {
            y_max = y_min + 1.0;
        }
        let sx = |x: f64| ML + (x - x_min) / (x_max - x_min) * plot_w;
        let sy = |y: f64| MT + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

        let mut path = String::new();
        for (i, &(x, y)) in points.iter().enumerate() {
            let _ = write!(path, "{}{:.2},{:.2}", if i == 0 { "" } else { " " }, sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{path}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>"
        );
        // extremes on the axes
        let _ = write!(
            svg,
            "<text x=\"{ML}\" y=\"{}\" text-anchor=\"middle\">{x_min:.0}</text>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_max:.0}</text>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y_min:.3}</text>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y_max:.3}</text>\n",
            MT + plot_h + 16.0,
            ML + plot_w,
            MT + plot_h + 16.0,
            ML - 6.0,
            MT + plot_h,
            ML - 6.0,
            MT + 10.0,
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Render the reward column of a training log as an SVG file.
pub fn write_reward_chart(path: &Path, records: &[(usize, f64)]) -> Result<()> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|&(epoch, reward)| (epoch as f64, reward))
        .collect();
    let svg = line_chart_svg("Training reward", "epoch", "mean episode reward", &points);
    fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Parse `epoch` and `mean_episode_reward` columns back out of a log CSV.
pub fn read_reward_series(path: &Path) -> Result<Vec<(usize, f64)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let epoch_idx = cols.iter().position(|c| *c == "epoch");
    let reward_idx = cols.iter().position(|c| *c == "mean_episode_reward");
    let (Some(epoch_idx), Some(reward_idx)) = (epoch_idx, reward_idx) else {
        bail!("{}: not a training log (missing columns)", path.display());
    };
    let mut series = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        series.push((
            fields[epoch_idx].trim().parse()?,
            fields[reward_idx].trim().parse()?,
        ));
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: u32, contender: &str, count: usize) -> ResultRow {
        ResultRow {
            scenario_id: id,
            contender: contender.to_string(),
            color_changes: count,
        }
    }

    #[test]
    fn report_orders_reference_first() {
        let rows = vec![
            row(1, "heuristic", 34),
            row(2, "heuristic", 36),
            row(1, "ensemble", 29),
            row(2, "ensemble", 31),
        ];
        let report = build_report(rows, None).unwrap();
        assert_eq!(report.summaries[0].contender, "heuristic");
        assert!(report.summaries[0].percent_increase.is_none());
        let ens = &report.summaries[1];
        assert_eq!(ens.contender, "ensemble");
        let pct = ens.percent_increase.unwrap();
        assert!((pct - ((35.0 - 30.0) / 30.0 * 100.0)).abs() < 1e-9);
    }

    #[test]
    fn empty_chart_has_axes_no_series() {
        let svg = line_chart_svg("t", "x", "y", &[]);
        assert!(svg.contains("<line"));
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn chart_with_points_has_series() {
        let svg = line_chart_svg("t", "x", "y", &[(0.0, 1.0), (1.0, 2.0), (2.0, 1.5)]);
        assert!(svg.contains("<polyline"));
    }
}
