//! Rank-based comparison pipeline: Kolmogorov-Smirnov normality check,
//! Kruskal-Wallis omnibus test and Dunn's pairwise post hoc test with
//! Bonferroni adjustment.

pub mod special;

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::actuator::ActuatorSpec;
use crate::error::{Error, Result};
use crate::metrics::{Metric, TrialMetrics};

use special::{chi_square_sf, kolmogorov_sf, normal_cdf, normal_two_sided_p};

/// Notes attached to results so the reader knows which variant of a test ran.
pub const KS_METHOD: &str = "one-sample KS vs normal with estimated mean/SD, asymptotic p (no Lilliefors correction)";

#[derive(Clone, Debug, PartialEq)]
pub struct Pairwise {
    pub a: String,
    pub b: String,
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatResult {
    pub test: &'static str,
    pub statistic: f64,
    pub df: Option<f64>,
    pub p_value: f64,
    pub pairwise: Vec<Pairwise>,
    pub note: Option<String>,
}

impl StatResult {
    /// `(χ²(2)=7.200, p=0.027)` style summary.
    pub fn chi_square_phrase(&self) -> String {
        let df = self.df.unwrap_or(f64::NAN);
        format!("(χ²({df})={:.3}, {})", self.statistic, format_p(self.p_value))
    }
}

pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "p<0.001".to_string()
    } else {
        format!("p={p:.3}")
    }
}

/// Mid-ranks (1-based) of `values`; ties share the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Σ (t³ − t) over groups of tied values.
pub fn tie_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        total += t * t * t - t;
        start = end;
    }
    total
}

struct RankedGroups {
    n_total: f64,
    sizes: Vec<f64>,
    rank_sums: Vec<f64>,
    mean_ranks: Vec<f64>,
    ties: f64,
}

fn rank_groups<S: AsRef<[f64]>>(groups: &[S]) -> Result<RankedGroups> {
    if groups.iter().any(|g| g.as_ref().is_empty()) {
        return Err(Error::domain("every group must be non-empty"));
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("observations must be finite"));
    }
    let ranks = midranks(&pooled);
    let mut offset = 0;
    let mut sizes = Vec::with_capacity(groups.len());
    let mut rank_sums = Vec::with_capacity(groups.len());
    let mut mean_ranks = Vec::with_capacity(groups.len());
    for g in groups {
        let n = g.as_ref().len();
        let sum: f64 = ranks[offset..offset + n].iter().sum();
        sizes.push(n as f64);
        rank_sums.push(sum);
        mean_ranks.push(sum / n as f64);
        offset += n;
    }
    Ok(RankedGroups {
        n_total: pooled.len() as f64,
        sizes,
        rank_sums,
        mean_ranks,
        ties: tie_sum(&pooled),
    })
}

/// Kruskal-Wallis H with tie correction; p from chi-square with k − 1 df.
pub fn kruskal_wallis<S: AsRef<[f64]>>(groups: &[S]) -> Result<StatResult> {
    if groups.len() < 2 {
        return Err(Error::domain("Kruskal-Wallis needs at least two groups"));
    }
    let r = rank_groups(groups)?;
    let n = r.n_total;
    if n < 3.0 {
        return Err(Error::domain("Kruskal-Wallis needs at least three observations"));
    }
    let df = (groups.len() - 1) as f64;
    let correction = 1.0 - r.ties / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(StatResult {
            test: "kruskal-wallis",
            statistic: 0.0,
            df: Some(df),
            p_value: 1.0,
            pairwise: Vec::new(),
            note: Some("all observations identical".into()),
        });
    }
    // Single final division keeps integer-rank cases exact.
    let weighted: f64 = r.rank_sums.iter().zip(&r.sizes).map(|(s, nj)| s * s / nj).sum();
    let h = ((12.0 * weighted - 3.0 * n * (n + 1.0) * (n + 1.0)) / (n * (n + 1.0) * correction)).max(0.0);
    Ok(StatResult {
        test: "kruskal-wallis",
        statistic: h,
        df: Some(df),
        p_value: chi_square_sf(h, df).clamp(0.0, 1.0),
        pairwise: Vec::new(),
        note: None,
    })
}

/// Dunn's pairwise z tests on mean ranks, Bonferroni-adjusted over all
/// k(k−1)/2 pairs. Pairs are listed in (i, j), i < j order.
pub fn dunn_posthoc<S: AsRef<[f64]>>(groups: &[S], labels: &[String], alpha: f64) -> Result<Vec<Pairwise>> {
    if groups.len() < 2 {
        return Err(Error::domain("post hoc comparison needs at least two groups"));
    }
    if labels.len() != groups.len() {
        return Err(Error::domain("one label per group required"));
    }
    let r = rank_groups(groups)?;
    let n = r.n_total;
    let k = groups.len();
    let comparisons = (k * (k - 1) / 2) as f64;
    let variance = n * (n + 1.0) / 12.0 - r.ties / (12.0 * (n - 1.0));
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff = r.mean_ranks[i] - r.mean_ranks[j];
            let se = (variance * (1.0 / r.sizes[i] + 1.0 / r.sizes[j])).sqrt();
            let z = if se > 0.0 && se.is_finite() { diff / se } else { 0.0 };
            let p_raw = normal_two_sided_p(z);
            let p_adjusted = (p_raw * comparisons).min(1.0);
            out.push(Pairwise {
                a: labels[i].clone(),
                b: labels[j].clone(),
                z,
                p_raw,
                p_adjusted,
                significant: p_adjusted < alpha,
            });
        }
    }
    Ok(out)
}

/// Largest gap between the empirical CDF of `sample` and a normal CDF with
/// the sample's mean and (n − 1) SD.
pub fn ks_statistic(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < 4 {
        return Err(Error::domain("KS normality check needs at least four observations"));
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) {
        return Err(Error::domain("sample has zero variance"));
    }
    let sd = var.sqrt();
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = normal_cdf((x - mean) / sd);
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    Ok(d)
}

pub fn ks_normality(sample: &[f64]) -> Result<StatResult> {
    let d = ks_statistic(sample)?;
    let lambda = (sample.len() as f64).sqrt() * d;
    Ok(StatResult {
        test: "kolmogorov-smirnov",
        statistic: d,
        df: None,
        p_value: kolmogorov_sf(lambda),
        pairwise: Vec::new(),
        note: Some(KS_METHOD.into()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    Shape,
    Size,
    CellCount,
}

impl Factor {
    pub const ALL: [Factor; 3] = [Factor::Shape, Factor::Size, Factor::CellCount];

    pub fn name(self) -> &'static str {
        match self {
            Factor::Shape => "shape",
            Factor::Size => "size",
            Factor::CellCount => "cells",
        }
    }

    /// Group label for a variant, e.g. `Circle`, `4 cm` or `10-cell`.
    pub fn label(self, spec: &ActuatorSpec) -> String {
        match self {
            Factor::Shape => spec.shape.title().to_string(),
            Factor::Size => format!("{} cm", spec.cell_length_cm),
            Factor::CellCount => format!("{}-cell", spec.n_cells),
        }
    }

    fn order_key(self, spec: &ActuatorSpec) -> (u8, f64) {
        match self {
            Factor::Shape => (spec.shape as u8, 0.0),
            Factor::Size => (0, spec.cell_length_cm),
            Factor::CellCount => (0, spec.n_cells as f64),
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shape" => Ok(Factor::Shape),
            "size" => Ok(Factor::Size),
            "cells" | "cell-count" | "cellcount" => Ok(Factor::CellCount),
            _ => Err(Error::domain(format!("unknown factor `{s}`"))),
        }
    }
}

/// Whether each trial or each variant mean counts as one observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Pooling {
    #[default]
    Trials,
    VariantMeans,
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trials" => Ok(Pooling::Trials),
            "means" | "variant-means" => Ok(Pooling::VariantMeans),
            _ => Err(Error::domain(format!("unknown pooling mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorComparison {
    pub factor: Factor,
    pub metric: Metric,
    pub pooling: Pooling,
    pub groups: Vec<(String, Vec<f64>)>,
    pub result: StatResult,
}

pub const DEFAULT_ALPHA: f64 = 0.05;

fn group_records(
    records: &[TrialMetrics],
    metric: Metric,
    factor: Factor,
    pooling: Pooling,
) -> Vec<(String, Vec<f64>)> {
    let mut keyed: Vec<((u8, f64), String, f64, ActuatorSpec)> = records
        .iter()
        .map(|r| {
            (
                factor.order_key(&r.variant),
                factor.label(&r.variant),
                metric.value(r),
                r.variant,
            )
        })
        .collect();
    keyed.sort_by(|a, b| a.0 .0.cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    match pooling {
        Pooling::Trials => {
            for (_, label, value, _) in keyed {
                match groups.last_mut() {
                    Some((l, vals)) if *l == label => vals.push(value),
                    _ => groups.push((label, vec![value])),
                }
            }
        }
        Pooling::VariantMeans => {
            let mut variants: Vec<ActuatorSpec> = records.iter().map(|r| r.variant).collect();
            variants.sort();
            variants.dedup();
            let mut means: Vec<((u8, f64), String, f64)> = variants
                .iter()
                .map(|v| {
                    let vals: Vec<f64> = records
                        .iter()
                        .filter(|r| r.variant == *v)
                        .map(|r| metric.value(r))
                        .collect();
                    (
                        factor.order_key(v),
                        factor.label(v),
                        vals.iter().sum::<f64>() / vals.len() as f64,
                    )
                })
                .collect();
            means.sort_by(|a, b| a.0 .0.cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
            for (_, label, value) in means {
                match groups.last_mut() {
                    Some((l, vals)) if *l == label => vals.push(value),
                    _ => groups.push((label, vec![value])),
                }
            }
        }
    }
    groups
}

/// Groups records by factor level and runs Kruskal-Wallis, then Dunn's test
/// regardless of the omnibus outcome.
pub fn compare_by_factor(
    records: &[TrialMetrics],
    metric: Metric,
    factor: Factor,
    pooling: Pooling,
    alpha: f64,
) -> Result<FactorComparison> {
    let groups = group_records(records, metric, factor, pooling);
    if groups.len() < 2 {
        return Err(Error::domain(format!(
            "factor `{factor}` has {} level(s) in the data; need at least two",
            groups.len()
        )));
    }
    let samples: Vec<&[f64]> = groups.iter().map(|(_, v)| v.as_slice()).collect();
    let labels: Vec<String> = groups.iter().map(|(l, _)| l.clone()).collect();
    let mut result = kruskal_wallis(&samples)?;
    result.pairwise = dunn_posthoc(&samples, &labels, alpha)?;
    let omnibus = format!("omnibus {}", format_p(result.p_value));
    result.note = Some(match result.note.take() {
        Some(n) => format!("{n}; {omnibus}"),
        None => omnibus,
    });
    Ok(FactorComparison {
        factor,
        metric,
        pooling,
        groups,
        result,
    })
}

impl FactorComparison {
    /// Human-readable block: omnibus line plus the pairwise table.
    pub fn report_block(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} by {}: {}",
            self.metric.title(),
            self.factor,
            self.result.chi_square_phrase()
        );
        for (label, vals) in &self.groups {
            let m = crate::metrics::MeanSd::of(vals);
            let _ = writeln!(out, "  {label}: {m} (n={})", vals.len());
        }
        for p in &self.result.pairwise {
            let _ = writeln!(
                out,
                "  {} vs {}: z={:.3}, adj. {}{}",
                p.a,
                p.b,
                p.z,
                format_p(p.p_adjusted),
                if p.significant { " *" } else { "" }
            );
        }
        out
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = vec![format!(
            "{},{},omnibus,,,{},{},{},",
            self.metric.name(),
            self.factor.name(),
            self.result.statistic,
            self.result.df.unwrap_or(f64::NAN),
            self.result.p_value
        )];
        for p in &self.result.pairwise {
            rows.push(format!(
                "{},{},pair,{},{},{},,{},{}",
                self.metric.name(),
                self.factor.name(),
                p.a,
                p.b,
                p.z,
                p.p_adjusted,
                p.significant
            ));
        }
        rows
    }
}

pub const STATS_CSV_HEADER: &str = "metric,factor,kind,group_a,group_b,statistic,df,p,significant";

pub fn comparisons_to_csv(comparisons: &[FactorComparison]) -> String {
    let mut out = String::from(STATS_CSV_HEADER);
    out.push('\n');
    for c in comparisons {
        for row in c.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuator::CellShape;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn labels(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("g{i}")).collect()
    }

    #[test]
    fn midranks_with_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
        assert_eq!(midranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(tie_sum(&[1.0, 2.0, 2.0, 3.0, 3.0, 3.0]), 6.0 + 24.0);
    }

    #[test]
    fn kruskal_wallis_hand_example() {
        let r = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]]).unwrap();
        // R̄ = 2, 5, 8: 12/90·3·(4+25+64) − 30
        assert_abs_diff_eq!(r.statistic, 7.2, epsilon = 1e-12);
        assert_eq!(r.df, Some(2.0));
        assert_abs_diff_eq!(r.p_value, (-3.6f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn kruskal_wallis_degenerate() {
        let r = kruskal_wallis(&[vec![2.0, 2.0], vec![2.0, 2.0, 2.0]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let same = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_abs_diff_eq!(same.statistic, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(same.p_value, 1.0, epsilon = 1e-12);
        assert!(kruskal_wallis(&[vec![1.0, 2.0]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0], vec![]]).is_err());
        assert!(kruskal_wallis(&[vec![1.0], vec![2.0]]).is_err());
    }

    #[test]
    fn dunn_examples() {
        let pairs = dunn_posthoc(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]], &labels(2), 0.05).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].z, 0.0);
        assert_eq!(pairs[0].p_adjusted, 1.0);

        let groups = [vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]];
        let pairs = dunn_posthoc(&groups, &labels(3), 0.05).unwrap();
        assert_eq!(pairs.len(), 3);
        // adjacent pairs (0,1) and (1,2) are symmetric
        assert_abs_diff_eq!(pairs[0].z.abs(), pairs[2].z.abs(), epsilon = 1e-12);
        // direct formula: (2 − 5)/sqrt(9·10/12 · 2/3)
        assert_abs_diff_eq!(pairs[0].z, -3.0 / (7.5f64 * 2.0 / 3.0).sqrt(), epsilon = 1e-12);
        for p in &pairs {
            assert_abs_diff_eq!(p.p_adjusted, (3.0 * p.p_raw).min(1.0), epsilon = 1e-15);
        }
        assert!(dunn_posthoc(&[vec![1.0], vec![]], &labels(2), 0.05).is_err());
    }

    #[test]
    fn ks_examples() {
        // probit of i/(n+1)
        let n = 50;
        let quantiles: Vec<f64> = (1..=n).map(|i| probit(i as f64 / (n + 1) as f64)).collect();
        let r = ks_normality(&quantiles).unwrap();
        assert!(r.statistic < 0.05, "{}", r.statistic);
        assert!(r.p_value > 0.9);
        assert_abs_diff_eq!(r.statistic, direct_ks(&quantiles), epsilon = 1e-9);

        let two_point: Vec<f64> = (0..20).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect();
        let r = ks_normality(&two_point).unwrap();
        assert_abs_diff_eq!(r.statistic, direct_ks(&two_point), epsilon = 1e-9);
        assert!(r.p_value < 0.05, "{}", r.p_value);

        assert!(ks_normality(&[1.0, 2.0, 3.0]).is_err());
        assert!(ks_normality(&[1.0; 6]).is_err());
    }

    fn probit(p: f64) -> f64 {
        use statrs::distribution::{ContinuousCDF, Normal};
        Normal::standard().inverse_cdf(p)
    }

    // sup over a dense grid of |F_n − Φ| plus both sides of each jump
    fn direct_ks(sample: &[f64]) -> f64 {
        use statrs::distribution::{ContinuousCDF, Normal};
        let n = sample.len() as f64;
        let mean = sample.iter().sum::<f64>() / n;
        let sd = (sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let dist = Normal::new(mean, sd).unwrap();
        let ecdf = |x: f64, inclusive: bool| {
            sample
                .iter()
                .filter(|&&v| if inclusive { v <= x } else { v < x })
                .count() as f64
                / n
        };
        sample
            .iter()
            .map(|&x| {
                let f = dist.cdf(x);
                (ecdf(x, true) - f).abs().max((ecdf(x, false) - f).abs())
            })
            .fold(0.0, f64::max)
    }

    fn record(shape: CellShape, p: f64, n: u32, trial: u32, value: f64) -> TrialMetrics {
        TrialMetrics {
            variant: ActuatorSpec::new(shape, p, n),
            trial,
            path_length_cm: value,
            straightness_index: value,
            mean_abs_jerk_ms3: value,
            flexion_range_deg: value,
        }
    }

    fn records(shift_circle: f64) -> Vec<TrialMetrics> {
        let mut out = Vec::new();
        let mut k = 0u32;
        for shape in CellShape::ALL {
            for p in [3.0, 4.0] {
                for n in [8, 10, 12] {
                    for trial in 1..=10 {
                        k += 1;
                        // deterministic pseudo-noise with unit-ish spread
                        let noise = ((k as f64 * 0.618_033_988_75).fract() - 0.5) * 3.46;
                        let v = 15.0 + noise + if shape == CellShape::Circle { shift_circle } else { 0.0 };
                        out.push(record(shape, p, n, trial, v));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn factor_degrees_of_freedom() {
        let recs = records(0.0);
        let size = compare_by_factor(&recs, Metric::PathLength, Factor::Size, Pooling::Trials, 0.05).unwrap();
        assert_eq!(size.result.df, Some(1.0));
        assert_eq!(size.groups.len(), 2);
        assert_eq!(size.groups[0].0, "3 cm");
        let shape = compare_by_factor(&recs, Metric::PathLength, Factor::Shape, Pooling::Trials, 0.05).unwrap();
        assert_eq!(shape.result.df, Some(2.0));
        assert_eq!(
            shape.groups.iter().map(|g| g.0.as_str()).collect::<Vec<_>>(),
            ["Square", "Rectangle", "Circle"]
        );
        assert_eq!(shape.groups[0].1.len(), 60);
        let cells = compare_by_factor(
            &recs,
            Metric::PathLength,
            Factor::CellCount,
            Pooling::VariantMeans,
            0.05,
        )
        .unwrap();
        assert_eq!(cells.result.df, Some(2.0));
        assert_eq!(cells.groups[0].1.len(), 6);
        assert!(shape.result.note.as_deref().unwrap().contains("omnibus"));
    }

    #[test]
    fn single_level_factor_is_an_error() {
        let recs: Vec<_> = records(0.0)
            .into_iter()
            .filter(|r| r.variant.cell_length_cm == 3.0)
            .collect();
        assert!(compare_by_factor(&recs, Metric::PathLength, Factor::Size, Pooling::Trials, 0.05).is_err());
    }

    #[test]
    fn shifted_shape_is_significant_by_permutation_oracle() {
        let recs = records(10.0);
        let cmp = compare_by_factor(&recs, Metric::PathLength, Factor::Shape, Pooling::Trials, 0.05).unwrap();
        for p in &cmp.result.pairwise {
            let involves_circle = p.a == "Circle" || p.b == "Circle";
            assert_eq!(p.significant, involves_circle, "{p:?}");
        }

        // permutation oracle on mean-rank differences for circle vs square
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let circle = &cmp.groups[2].1;
        let square = &cmp.groups[0].1;
        let pooled: Vec<f64> = square.iter().chain(circle).copied().collect();
        let ranks = midranks(&pooled);
        let ns = square.len();
        let observed =
            (ranks[ns..].iter().sum::<f64>() / circle.len() as f64 - ranks[..ns].iter().sum::<f64>() / ns as f64).abs();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut idx = ranks.clone();
        let perms = 100_000;
        let mut extreme = 0usize;
        for _ in 0..perms {
            idx.shuffle(&mut rng);
            let d =
                (idx[ns..].iter().sum::<f64>() / circle.len() as f64 - idx[..ns].iter().sum::<f64>() / ns as f64).abs();
            if d >= observed {
                extreme += 1;
            }
        }
        let p_perm = (extreme + 1) as f64 / (perms + 1) as f64;
        assert!(p_perm * 3.0 < 0.05, "{p_perm}");
    }

    #[test]
    fn phrase_format() {
        let r = StatResult {
            test: "kruskal-wallis",
            statistic: 24.728,
            df: Some(2.0),
            p_value: 4e-6,
            pairwise: vec![],
            note: None,
        };
        assert_eq!(r.chi_square_phrase(), "(χ²(2)=24.728, p<0.001)");
        let r = StatResult {
            statistic: 0.806,
            df: Some(1.0),
            p_value: 0.369,
            ..r
        };
        assert_eq!(r.chi_square_phrase(), "(χ²(1)=0.806, p=0.369)");
    }

    fn small_groups() -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(0i32..5, 1..4), 2..=3)
            .prop_map(|gs| gs.into_iter().map(|g| g.into_iter().map(f64::from).collect()).collect())
            .prop_filter("at least three observations", |gs: &Vec<Vec<f64>>| {
                gs.iter().map(Vec::len).sum::<usize>() >= 3
            })
    }

    proptest! {
        #[test]
        fn h_invariant_under_monotone_transform(groups in small_groups()) {
            let a = kruskal_wallis(&groups).unwrap();
            let t: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|x| (x * 0.7).exp() + 3.0).collect()).collect();
            let b = kruskal_wallis(&t).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() < 1e-12);
        }

        #[test]
        fn h_invariant_under_group_permutation(groups in small_groups()) {
            let a = kruskal_wallis(&groups).unwrap();
            let mut rev = groups.clone();
            rev.reverse();
            let b = kruskal_wallis(&rev).unwrap();
            prop_assert!((a.statistic - b.statistic).abs() < 1e-12);
        }

        #[test]
        fn dunn_antisymmetric_and_bounded(groups in small_groups(), alpha in 0.001f64..0.2) {
            let k = groups.len();
            let fwd = dunn_posthoc(&groups, &labels(k), alpha).unwrap();
            let mut rev = groups.clone();
            rev.reverse();
            let back = dunn_posthoc(&rev, &labels(k), alpha).unwrap();
            // pair (i,j) in forward order is pair (k-1-j, k-1-i) reversed
            let index = |i: usize, j: usize| (0..i).map(|r| k - 1 - r).sum::<usize>() + (j - i - 1);
            for i in 0..k {
                for j in i + 1..k {
                    let f = &fwd[index(i, j)];
                    let b = &back[index(k - 1 - j, k - 1 - i)];
                    prop_assert!((f.z + b.z).abs() < 1e-12);
                    prop_assert!(f.p_adjusted >= f.p_raw);
                    prop_assert!(f.p_adjusted <= 1.0);
                    let looser = dunn_posthoc(&groups, &labels(k), (alpha * 2.0).min(1.0)).unwrap();
                    prop_assert!(!f.significant || looser[index(i, j)].significant);
                }
            }
        }

        #[test]
        fn ks_affine_invariant(sample in proptest::collection::vec(-100.0f64..100.0, 4..40), a in 0.01f64..50.0, b in -100.0f64..100.0) {
            let var = {
                let m = sample.iter().sum::<f64>() / sample.len() as f64;
                sample.iter().map(|x| (x - m).powi(2)).sum::<f64>()
            };
            prop_assume!(var > 1e-6);
            let d1 = ks_statistic(&sample).unwrap();
            let t: Vec<f64> = sample.iter().map(|x| a * x + b).collect();
            let d2 = ks_statistic(&t).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-9);
        }
    }
}
