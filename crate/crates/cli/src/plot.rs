//! Static SVG plots for `report`.

use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;

use mmref::datamodel::RelationLabel;
use mmref::evaluation::{Category, QUANTILES};

use crate::commands::report::Named;

const SIZE: (u32, u32) = (800, 500);
const RECALL_CATEGORIES: [Category; 3] = [Category::Overall, Category::Noun, Category::Pronoun];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn draw(path: &Path, title: &str, x_desc: &str, y_desc: &str, x: (f64, f64), series: &[Series]) -> Result<()> {
    let err = |e: &dyn std::fmt::Display| anyhow!("plotting {}: {e}", path.display());
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(x.0..x.1, 0f64..1.02f64)
        .map_err(|e| err(&e))?;
    chart
        .configure_mesh()
        .x_desc(x_desc)
        .y_desc(y_desc)
        .draw()
        .map_err(|e| err(&e))?;
    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(|e| err(&e))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        chart
            .draw_series(s.points.iter().map(|&p| Circle::new(p, 3, color.filled())))
            .map_err(|e| err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(|e| err(&e))?;
    root.present().map_err(|e| err(&e))?;
    Ok(())
}

/// Direct-reference recall at the smallest k against window length, one
/// line per report and category. Returns false when no report has a sweep.
pub fn recall_vs_length(path: &Path, reports: &[Named]) -> Result<bool> {
    let direct = RelationLabel::Direct.as_str();
    let mut series = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in reports {
        let (Some(blocks), Some(&k)) = (&r.report.ablation, r.report.config.ks.first()) else {
            continue;
        };
        for c in RECALL_CATEGORIES {
            let points: Vec<(f64, f64)> = blocks
                .iter()
                .filter_map(|b| {
                    let row = b
                        .rows
                        .iter()
                        .find(|row| row.relation == direct && row.category == c && row.k == k)?;
                    Some((b.length as f64, row.recall?))
                })
                .collect();
            if points.is_empty() {
                continue;
            }
            for &(x, _) in &points {
                lo = lo.min(x);
                hi = hi.max(x);
            }
            series.push(Series {
                label: format!("{} {} R@{k}", r.name, c.as_str()),
                points,
            });
        }
    }
    if series.is_empty() {
        return Ok(false);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    draw(path, "Recall vs utterance length", "utterances per window", "recall", (lo, hi), &series)?;
    Ok(true)
}

/// Quantile curves of the top-1 and overall confidence pools, one pair per
/// report. Returns false when no report has confidence statistics.
pub fn confidence(path: &Path, reports: &[Named]) -> Result<bool> {
    let mut series = Vec::new();
    for r in reports {
        let Some(stats) = &r.report.confidence else {
            continue;
        };
        let first_top = stats.groups.iter().find(|g| g.name.starts_with("top"));
        for g in first_top.into_iter().chain(stats.group("all")) {
            let points: Vec<(f64, f64)> = QUANTILES
                .iter()
                .zip(&g.quantiles)
                .filter(|(_, v)| v.is_finite())
                .map(|(&q, &v)| (q, v))
                .collect();
            if !points.is_empty() {
                series.push(Series {
                    label: format!("{} {}", r.name, g.name),
                    points,
                });
            }
        }
    }
    if series.is_empty() {
        return Ok(false);
    }
    draw(path, "Confidence distribution", "quantile", "confidence", (0.0, 1.0), &series)?;
    Ok(true)
}
