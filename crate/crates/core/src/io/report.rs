//! Markdown report: elongation table, per-metric mean±SD tables and the
//! rank-test summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::actuator::{estimated_elongation, ActuatorSpec, CellShape, ElongationData};
use crate::error::{Error, Result};
use crate::io::csvutil::{read_rows, write_file};
use crate::metrics::{MeanSd, Metric, VariantSummary, JERK_AGGREGATE};
use crate::stats::FactorComparison;

pub const FLAG_FOOTNOTE: &str = "*Not fully inflated/deflated";
pub const REPORT_FILE: &str = "report.md";

const SUMMARY_HEADER: &[&str] = &["metric", "shape", "p_cm", "n", "mean", "sd"];

fn csv_metric_name(m: Metric) -> &'static str {
    match m {
        Metric::PathLength => "path_cm",
        Metric::StraightnessIndex => "si",
        Metric::Jerk => "jerk_ms3",
        Metric::FlexionAngle => "angle_deg",
    }
}

/// Mean ± SD per (variant, metric).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricTable {
    entries: BTreeMap<(ActuatorSpec, Metric), MeanSd>,
}

impl MetricTable {
    pub fn insert(&mut self, spec: ActuatorSpec, metric: Metric, value: MeanSd) {
        self.entries.insert((spec, metric), value);
    }

    pub fn get(&self, spec: &ActuatorSpec, metric: Metric) -> Option<MeanSd> {
        self.entries.get(&(*spec, metric)).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn variants(&self) -> BTreeSet<ActuatorSpec> {
        self.entries.keys().map(|(s, _)| *s).collect()
    }

    pub fn metrics(&self) -> BTreeSet<Metric> {
        self.entries.keys().map(|(_, m)| *m).collect()
    }

    pub fn from_summaries(summaries: &[VariantSummary]) -> Self {
        let mut table = MetricTable::default();
        for s in summaries {
            for m in Metric::ALL {
                table.insert(s.variant, m, s.get(m));
            }
        }
        table
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut table = MetricTable::default();
        for row in read_rows(reader, SUMMARY_HEADER)? {
            let metric: Metric = row.str("metric")?.parse().map_err(|e: Error| Error::Parse {
                line: row.line,
                column: "metric".into(),
                message: e.to_string(),
            })?;
            let spec = ActuatorSpec::new(row.shape("shape")?, row.f64("p_cm")?, row.u32("n")?);
            table.insert(
                spec,
                metric,
                MeanSd {
                    mean: row.f64("mean")?,
                    sd: row.f64("sd")?,
                },
            );
        }
        Ok(table)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    /// Published path length, SI and jerk summaries of the 18 tested variants.
    pub fn published() -> Self {
        Self::from_reader(include_str!("../../data/published_summary.csv").as_bytes())
            .expect("bundled summary table is valid")
    }

    pub fn to_csv(&self) -> String {
        let mut out = SUMMARY_HEADER.join(",");
        out.push('\n');
        let mut keys: Vec<&(ActuatorSpec, Metric)> = self.entries.keys().collect();
        keys.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.report_cmp(&b.0)));
        for key in keys {
            let v = self.entries[key];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_metric_name(key.1),
                key.0.shape.name(),
                key.0.cell_length_cm,
                key.0.n_cells,
                v.mean,
                v.sd
            );
        }
        out
    }
}

/// Everything that goes into one report.
#[derive(Clone, Debug)]
pub struct ReportInput<'a> {
    pub title: String,
    pub variants: Vec<ActuatorSpec>,
    /// Source of the elongation table; omitted when `None`.
    pub elongation: Option<&'a ElongationData>,
    pub metrics: &'a MetricTable,
    /// Variants that cannot fully inflate or deflate within the window.
    pub flagged: BTreeSet<ActuatorSpec>,
    pub comparisons: &'a [FactorComparison],
    pub notes: Vec<String>,
}

fn sorted_unique<T: PartialOrd + Copy>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    v.dedup();
    v
}

fn find(variants: &[ActuatorSpec], shape: CellShape, p: f64, n: u32) -> Option<&ActuatorSpec> {
    variants.iter().find(|v| v.same_variant(shape, p, n))
}

fn table_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn table_rule(columns: usize) -> String {
    format!("|{}\n", "---|".repeat(columns))
}

pub fn render_report(input: &ReportInput<'_>) -> Result<String> {
    let mut variants = input.variants.clone();
    variants.sort_by(|a, b| a.report_cmp(b));
    variants.dedup();
    if let Some(extra) = input.metrics.variants().into_iter().find(|v| !variants.contains(v)) {
        return Err(Error::Validation(format!(
            "metric summary contains {} which is not in the variant set",
            extra.label()
        )));
    }
    if let Some(extra) = input.flagged.iter().find(|v| !variants.contains(v)) {
        return Err(Error::Validation(format!(
            "flagged variant {} is not in the variant set",
            extra.label()
        )));
    }
    let mark = |v: &ActuatorSpec| if input.flagged.contains(v) { "*" } else { "" };

    let shapes: Vec<CellShape> = CellShape::ALL
        .into_iter()
        .filter(|s| variants.iter().any(|v| v.shape == *s))
        .collect();
    let sizes = sorted_unique(variants.iter().map(|v| v.cell_length_cm).collect());
    let counts = sorted_unique(variants.iter().map(|v| v.n_cells).collect());

    let mut out = String::new();
    let _ = writeln!(out, "# {}\n", input.title);
    let _ = writeln!(out, "Variants: {}\n", variants.len());

    if let Some(data) = input.elongation {
        let _ = writeln!(out, "## Estimated and experimental elongation (cm)\n");
        let mut header = vec!["Size".to_string(), "Shape".to_string()];
        for n in &counts {
            header.push(format!("{n}-cell Est."));
            header.push(format!("{n}-cell Expt."));
        }
        out.push_str(&table_row(&header));
        out.push_str(&table_rule(header.len()));
        for &p in &sizes {
            for &shape in &shapes {
                if !variants.iter().any(|v| v.shape == shape && v.cell_length_cm == p) {
                    continue;
                }
                let mut row = vec![format!("{p} cm"), shape.title().to_string()];
                for &n in &counts {
                    match find(&variants, shape, p, n) {
                        Some(v) => {
                            row.push(fmt_opt(estimated_elongation(v, &data.displacement).ok()));
                            row.push(fmt_opt(data.measured.elongation(v).ok()));
                        }
                        None => row.extend(["".to_string(), "".to_string()]),
                    }
                }
                out.push_str(&table_row(&row));
            }
        }
        out.push('\n');
    }

    let metrics: Vec<Metric> = if input.metrics.is_empty() {
        vec![Metric::PathLength, Metric::StraightnessIndex, Metric::Jerk]
    } else {
        input.metrics.metrics().into_iter().collect()
    };
    for metric in metrics {
        let _ = writeln!(out, "## {} (Mean±SD)\n", metric.title());
        let mut header = vec!["Size".to_string(), "Cell Number".to_string()];
        header.extend(shapes.iter().map(|s| s.title().to_string()));
        out.push_str(&table_row(&header));
        out.push_str(&table_rule(header.len()));
        for &p in &sizes {
            for &n in &counts {
                if !variants.iter().any(|v| v.cell_length_cm == p && v.n_cells == n) {
                    continue;
                }
                let mut row = vec![format!("{p} cm"), format!("{n} cell")];
                for &shape in &shapes {
                    row.push(match find(&variants, shape, p, n) {
                        Some(v) => match input.metrics.get(v, metric) {
                            Some(ms) => format!("{ms}{}", mark(v)),
                            None => format!("n/a{}", mark(v)),
                        },
                        None => String::new(),
                    });
                }
                out.push_str(&table_row(&row));
            }
        }
        out.push('\n');
    }
    if !input.flagged.is_empty() {
        let _ = writeln!(out, "{FLAG_FOOTNOTE}\n");
    }

    if !input.comparisons.is_empty() {
        let _ = writeln!(out, "## Rank tests\n");
        for c in input.comparisons {
            let _ = writeln!(
                out,
                "- {} by {} {}",
                c.metric.title(),
                c.factor,
                c.result.chi_square_phrase()
            );
            for p in &c.result.pairwise {
                let _ = writeln!(
                    out,
                    "  - {} vs {}: z={:.3}, adjusted {}{}",
                    p.a,
                    p.b,
                    p.z,
                    crate::stats::format_p(p.p_adjusted),
                    if p.significant { " (significant)" } else { "" }
                );
            }
        }
        out.push('\n');
    }

    let _ = writeln!(out, "## Notes\n");
    let _ = writeln!(out, "- Jerk aggregate: {JERK_AGGREGATE}.");
    for note in &input.notes {
        let _ = writeln!(out, "- {note}");
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"))
}

/// Writes the report to `out_dir/report.md` and returns the path.
pub fn emit_report(input: &ReportInput<'_>, out_dir: &Path) -> Result<PathBuf> {
    let text = render_report(input)?;
    let path = out_dir.join(REPORT_FILE);
    write_file(&path, text.as_bytes())?;
    Ok(path)
}
