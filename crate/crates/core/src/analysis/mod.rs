//! Aggregation over batteries of runs: average cardinality and AUC, the
//! most repeated best subset, speedup, and pooled two-sample t-tests.

pub mod stats;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{RunReport, Variant};
use crate::mask::FeatureMask;

pub const DEFAULT_REPEAT_THRESHOLD: f64 = 0.4;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no runs to summarize")]
    NoRuns,
    #[error("run {index} has an empty final population")]
    EmptyRun { index: usize },
    #[error("run {index} uses variant {found}, expected {expected}")]
    MixedVariants { index: usize, expected: Variant, found: Variant },
    #[error("run {index} was made on a different dataset")]
    MixedDatasets { index: usize },
    #[error("speedup needs positive times, got {sequential} and {parallel}")]
    NonPositiveTime { sequential: f64, parallel: f64 },
    #[error("t-test needs at least 2 values per sample, got {a} and {b}")]
    SampleTooSmall { a: usize, b: usize },
    #[error("pooled variance is zero")]
    ZeroVariance,
    #[error("batteries have different run counts: {a} and {b}")]
    RunCountMismatch { a: usize, b: usize },
    #[error("writing table: {0}")]
    Csv(#[from] csv::Error),
    #[error("writing table: {0}")]
    Io(#[from] std::io::Error),
}

/// The modal best subset of a battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repeated {
    pub mask: FeatureMask,
    /// Share of runs whose best subset is exactly this mask.
    pub frequency: f64,
    pub cardinality: usize,
    /// Mean test AUC over the runs that returned this mask.
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySummary {
    pub variant: Variant,
    pub runs: usize,
    pub avg_cardinality: f64,
    pub mean_auc: f64,
    /// Best final fitness of each run, in run order.
    pub best_fitness: Vec<f64>,
    pub most_repeated: Option<Repeated>,
}

/// Sum in sorted order so the result does not depend on input order.
fn sorted_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v.iter().sum()
}

fn mean(values: &[f64]) -> f64 {
    sorted_sum(values.iter().copied()) / values.len() as f64
}

fn best_members(runs: &[RunReport]) -> Result<Vec<&crate::engine::MemberReport>, AnalysisError> {
    if runs.is_empty() {
        return Err(AnalysisError::NoRuns);
    }
    runs.iter()
        .enumerate()
        .map(|(index, r)| r.best_member().ok_or(AnalysisError::EmptyRun { index }))
        .collect()
}

pub fn summarize(runs: &[RunReport]) -> Result<BatterySummary, AnalysisError> {
    let best = best_members(runs)?;
    let variant = runs[0].config.variant;
    let dataset = runs[0].dataset.as_ref().map(|d| &d.sha256);
    for (index, r) in runs.iter().enumerate() {
        if r.config.variant != variant {
            return Err(AnalysisError::MixedVariants {
                index,
                expected: variant,
                found: r.config.variant,
            });
        }
        if r.dataset.as_ref().map(|d| &d.sha256) != dataset || r.n_features != runs[0].n_features {
            return Err(AnalysisError::MixedDatasets { index });
        }
    }
    let cards: Vec<f64> = best.iter().map(|m| m.cardinality() as f64).collect();
    let aucs: Vec<f64> = best.iter().map(|m| m.test_auc).collect();
    Ok(BatterySummary {
        variant,
        runs: runs.len(),
        avg_cardinality: mean(&cards),
        mean_auc: mean(&aucs),
        best_fitness: best.iter().map(|m| m.fitness).collect(),
        most_repeated: repeatability(runs, DEFAULT_REPEAT_THRESHOLD)?,
    })
}

/// The most frequent exact best mask, if it is the best subset of at least
/// `threshold` of the runs. Frequency ties go to the higher mean test AUC,
/// then to the smaller subset.
pub fn repeatability(runs: &[RunReport], threshold: f64) -> Result<Option<Repeated>, AnalysisError> {
    let best = best_members(runs)?;
    let mut groups: BTreeMap<&FeatureMask, Vec<f64>> = BTreeMap::new();
    for m in &best {
        groups.entry(&m.mask).or_default().push(m.test_auc);
    }
    let modal = groups
        .into_iter()
        .map(|(mask, aucs)| Repeated {
            mask: mask.clone(),
            frequency: aucs.len() as f64 / runs.len() as f64,
            cardinality: mask.count_ones(),
            auc: mean(&aucs),
        })
        .reduce(|best, r| {
            let better = r
                .frequency
                .total_cmp(&best.frequency)
                .then(r.auc.total_cmp(&best.auc))
                .then(best.cardinality.cmp(&r.cardinality))
                .is_gt();
            if better {
                r
            } else {
                best
            }
        })
        .expect("at least one run");
    Ok((modal.frequency >= threshold).then_some(modal))
}

pub fn speedup(sequential_seconds: f64, parallel_seconds: f64) -> Result<f64, AnalysisError> {
    if !(sequential_seconds > 0.0 && parallel_seconds > 0.0) {
        return Err(AnalysisError::NonPositiveTime {
            sequential: sequential_seconds,
            parallel: parallel_seconds,
        });
    }
    Ok(sequential_seconds / parallel_seconds)
}

/// Two-decimal display of a speedup, truncated rather than rounded, as in
/// published speedup tables (14707.06 / 4729.22 = 3.1098 shows as 3.10).
pub fn format_speedup(speedup: f64) -> String {
    // The relative nudge keeps values like 2.3 (stored as 2.2999...) intact.
    let hundredths = (speedup * 100.0 * (1.0 + 1e-12)).floor();
    format!("{:.2}", hundredths / 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    /// Signed statistic, positive when `a` has the larger mean.
    pub t: f64,
    pub df: f64,
    /// Two-tailed p-value.
    pub p: f64,
}

/// Pooled-variance two-sample t-test.
pub fn t_test(a: &[f64], b: &[f64]) -> Result<TTest, AnalysisError> {
    let (n1, n2) = (a.len(), b.len());
    if n1 < 2 || n2 < 2 {
        return Err(AnalysisError::SampleTooSmall { a: n1, b: n2 });
    }
    let (m1, m2) = (mean(a), mean(b));
    let ss = |xs: &[f64], m: f64| sorted_sum(xs.iter().map(|x| (x - m) * (x - m)));
    let df = (n1 + n2 - 2) as f64;
    let pooled = (ss(a, m1) + ss(b, m2)) / df;
    if !(pooled > 0.0) {
        return Err(AnalysisError::ZeroVariance);
    }
    let t = (m1 - m2) / (pooled * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    Ok(TTest {
        t,
        df,
        p: stats::student_t_two_tailed(t, df),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: Variant,
    pub b: Variant,
    /// Reported as |t|.
    pub t: f64,
    pub p: f64,
    pub significant: bool,
}

pub fn compare_batteries(x: &BatterySummary, y: &BatterySummary) -> Result<Comparison, AnalysisError> {
    if x.best_fitness.len() != y.best_fitness.len() {
        return Err(AnalysisError::RunCountMismatch {
            a: x.best_fitness.len(),
            b: y.best_fitness.len(),
        });
    }
    let test = t_test(&x.best_fitness, &y.best_fitness)?;
    Ok(Comparison {
        a: x.variant,
        b: y.variant,
        t: test.t.abs(),
        p: test.p,
        significant: test.p < SIGNIFICANCE_LEVEL,
    })
}

/// One line of the combined summary and comparison table. Summary rows
/// leave the t-test columns empty and comparison rows the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub variant: String,
    pub avg_cardinality: Option<f64>,
    pub mean_auc: Option<f64>,
    pub repeat_cardinality: Option<usize>,
    pub repeat_auc: Option<f64>,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub significant: Option<bool>,
}

impl From<&BatterySummary> for TableRow {
    fn from(s: &BatterySummary) -> Self {
        TableRow {
            variant: s.variant.model_name().to_string(),
            avg_cardinality: Some(s.avg_cardinality),
            mean_auc: Some(s.mean_auc),
            repeat_cardinality: s.most_repeated.as_ref().map(|r| r.cardinality),
            repeat_auc: s.most_repeated.as_ref().map(|r| r.auc),
            t: None,
            p: None,
            significant: None,
        }
    }
}

impl From<&Comparison> for TableRow {
    fn from(c: &Comparison) -> Self {
        TableRow {
            variant: format!("{} vs {}", c.a.model_name(), c.b.model_name()),
            avg_cardinality: None,
            mean_auc: None,
            repeat_cardinality: None,
            repeat_auc: None,
            t: Some(c.t),
            p: Some(c.p),
            significant: Some(c.significant),
        }
    }
}

/// Summaries of several batteries plus every pairwise comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub summaries: Vec<BatterySummary>,
    pub comparisons: Vec<Comparison>,
}

impl ComparisonTable {
    pub fn build(summaries: Vec<BatterySummary>) -> Result<Self, AnalysisError> {
        let mut comparisons = Vec::new();
        for i in 0..summaries.len() {
            for j in i + 1..summaries.len() {
                comparisons.push(compare_batteries(&summaries[i], &summaries[j])?);
            }
        }
        Ok(Self { summaries, comparisons })
    }

    pub fn rows(&self) -> Vec<TableRow> {
        self.summaries
            .iter()
            .map(TableRow::from)
            .chain(self.comparisons.iter().map(TableRow::from))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), AnalysisError> {
        let mut w = csv::Writer::from_writer(writer);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}
