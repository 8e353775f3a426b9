use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use super::{AggregateStats, CategoryStats, ComparisonRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Markdown,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

/// Fixed-point text with ties rounded away from zero (`90.625` -> `90.63`).
fn fixed(x: f64, digits: usize) -> String {
    let scale = 10f64.powi(digits as i32);
    format!("{:.*}", digits, (x * scale).round() / scale)
}

#[derive(Serialize)]
struct JsonReport<'a> {
    records: &'a [ComparisonRecord],
    aggregate: &'a AggregateStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    categories: Option<&'a [CategoryStats]>,
}

const CSV_HEADER: [&str; 10] = [
    "image",
    "otsu_threshold",
    "optimized_threshold",
    "deviation",
    "otsu_iterations",
    "optimized_iterations",
    "otsu_computations",
    "optimized_computations",
    "raw_evaluations",
    "reduction_percent",
];

/// Serialize a benchmark report.
///
/// CSV carries one row per image. Markdown lays out the per-image table,
/// followed by the performance, accuracy and (optional) category
/// summaries. JSON holds everything.
pub fn render_report<W: Write>(
    stats: &AggregateStats,
    records: &[ComparisonRecord],
    categories: Option<&[CategoryStats]>,
    format: ReportFormat,
    mut sink: W,
) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(&mut sink);
            wtr.write_record(CSV_HEADER)?;
            for r in records {
                wtr.write_record([
                    r.image_id.clone(),
                    r.t_exhaustive.to_string(),
                    r.t_bisection.to_string(),
                    r.deviation.to_string(),
                    r.iterations_exhaustive.to_string(),
                    r.iterations_bisection.to_string(),
                    r.cost_exhaustive.to_string(),
                    r.cost_bisection.to_string(),
                    r.raw_evaluations_bisection.to_string(),
                    fixed(r.reduction_percent, 2),
                ])?;
            }
            wtr.flush()?;
        }
        ReportFormat::Json => {
            let report = JsonReport {
                records,
                aggregate: stats,
                categories,
            };
            serde_json::to_writer_pretty(&mut sink, &report)?;
            writeln!(sink)?;
        }
        ReportFormat::Markdown => write_markdown(stats, records, categories, &mut sink)?,
    }
    sink.flush()?;
    Ok(())
}

fn write_markdown<W: Write>(
    s: &AggregateStats,
    records: &[ComparisonRecord],
    categories: Option<&[CategoryStats]>,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "## Per-image results\n")?;
    writeln!(
        out,
        "| Image | OTSU threshold | Optimized threshold | OTSU iterations | Optimized iterations | OTSU sigma computations | Optimized sigma computations |"
    )?;
    writeln!(out, "|---|---:|---:|---:|---:|---:|---:|")?;
    for r in records {
        writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} |",
            r.image_id.replace('|', "\\|"),
            r.t_exhaustive,
            r.t_bisection,
            r.iterations_exhaustive,
            r.iterations_bisection,
            r.cost_exhaustive,
            r.cost_bisection
        )?;
    }

    writeln!(
        out,
        "\n## Computational performance ({} images)\n",
        s.images
    )?;
    writeln!(
        out,
        "| Algorithm | Variance computations | Iterations | Reduction (%) |"
    )?;
    writeln!(out, "|---|---:|---:|---:|")?;
    writeln!(out, "| Exhaustive OTSU | 256.0 | 256.0 | - |")?;
    writeln!(
        out,
        "| Bisection (mean) | {} | {} | {} |",
        fixed(s.computations.mean, 1),
        fixed(s.iterations.mean, 1),
        fixed(s.mean_reduction_percent, 2)
    )?;
    writeln!(
        out,
        "| Bisection (minimum) | {:.1} | {:.1} | {} |",
        f64::from(s.computations.min),
        f64::from(s.iterations.min),
        fixed(s.best_reduction_percent, 2)
    )?;
    writeln!(
        out,
        "| Bisection (maximum) | {:.1} | {:.1} | {} |",
        f64::from(s.computations.max),
        f64::from(s.iterations.max),
        fixed(s.worst_reduction_percent, 2)
    )?;
    writeln!(
        out,
        "\nVariance computations: std. dev. {}. Iteration reduction: {}%.",
        fixed(s.computations.std_dev, 2),
        fixed(s.mean_iteration_reduction_percent, 2)
    )?;

    writeln!(out, "\n## Threshold accuracy ({} images)\n", s.images)?;
    writeln!(
        out,
        "| Deviation range | Image count | Cumulative percentage |"
    )?;
    writeln!(out, "|---|---:|---:|")?;
    for b in &s.deviation_buckets {
        writeln!(
            out,
            "| {} | {} | {}% |",
            b.label,
            b.count,
            fixed(b.cumulative_percent, 2)
        )?;
    }
    writeln!(
        out,
        "| Mean absolute deviation | {} gray levels | |",
        fixed(s.mean_abs_deviation, 1)
    )?;
    writeln!(
        out,
        "| Maximum deviation | {} gray levels | |",
        s.max_deviation
    )?;

    if let Some(cats) = categories {
        writeln!(out, "\n## Performance by category\n")?;
        writeln!(
            out,
            "| Image category | Count | Mean iterations | Mean deviation | Efficiency (%) |"
        )?;
        writeln!(out, "|---|---:|---:|---:|---:|")?;
        for c in cats {
            writeln!(
                out,
                "| {} | {} | {} | {} levels | {} |",
                c.category,
                c.count,
                fixed(c.mean_iterations, 1),
                fixed(c.mean_deviation, 1),
                fixed(c.efficiency_percent, 1)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::tests::record;
    use super::super::{aggregate, category_breakdown};
    use super::*;

    #[test]
    fn csv_one_row() {
        let recs = [record("img1.pgm", 0, 8)];
        let stats = aggregate(&recs).unwrap();
        let mut out = Vec::new();
        render_report(&stats, &recs, None, ReportFormat::Csv, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "img1.pgm,100,100,0,256,8,256,24,16,90.63");
    }

    #[test]
    fn json_parses_back() {
        let recs = [record("a", 0, 8), record("b", 3, 5)];
        let stats = aggregate(&recs).unwrap();
        let mut out = Vec::new();
        render_report(&stats, &recs, None, ReportFormat::Json, &mut out).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v["records"].as_array().unwrap().len(), 2);
        let back: AggregateStats = serde_json::from_value(v["aggregate"].clone()).unwrap();
        assert_eq!(back, stats);
    }

    #[test]
    fn markdown_rows_and_footer() {
        let recs = [record("a", 0, 8), record("b", 3, 5), record("c", 12, 3)];
        let stats = aggregate(&recs).unwrap();
        let cats = category_breakdown(&recs, &Default::default());
        let mut out = Vec::new();
        render_report(&stats, &recs, Some(&cats), ReportFormat::Markdown, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        for id in ["| a |", "| b |", "| c |"] {
            assert_eq!(text.matches(id).count(), 1, "{id}");
        }
        assert!(text.contains("| Bisection (maximum) | 24.0 | 8.0 | 90.63 |"));
        assert!(text.contains("| Exact match (0 levels) | 1 | 33.33% |"));
        assert!(text.contains("| >10 levels deviation | 1 | 100.00% |"));
        assert!(text.contains("| Maximum deviation | 12 gray levels | |"));
        assert!(text.contains("| uncategorized | 3 |"));
    }

    #[test]
    fn ties_round_away_from_zero() {
        assert_eq!(fixed(90.625, 2), "90.63");
        assert_eq!(fixed(96.484375, 2), "96.48");
        assert_eq!(fixed(0.25, 1), "0.3");
        assert_eq!(fixed(100.0, 2), "100.00");
    }

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert_eq!(
            "Markdown".parse::<ReportFormat>().unwrap(),
            ReportFormat::Markdown
        );
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
