//! Scoring against ground truth, the model x retrieval experiment matrix,
//! and aggregation of clinician reviews.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use chrono::Utc;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::domain::{
    slug, ClassMetrics, DomainError, GroundTruthSet, InteractionClass, MedicationCatalog, PatientProfile,
    SubjectiveReview, SuitabilityReport, Verdict,
};
use crate::gateway::CompletionBackend;
use crate::pipeline::{assess, AssessRequest};
use crate::prompt::Retriever;
use crate::scalar::{FloatScalar, MetricScalar};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("report {0:?} is not valid")]
    InvalidReport(String),
    #[error("no ground truth for patient {patient_id:?} and medication {medication_id:?}")]
    MissingTruth { patient_id: String, medication_id: String },
    #[error("no scorable pairs after excluding N/A truth")]
    EmptyPairs,
    #[error("no reviews in scope")]
    NoReviews,
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("csv: {0}")]
    Csv(String),
}

// ---------------------------------------------------------------------------
// Per-pair scoring and per-class metrics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub class: InteractionClass,
    pub predicted: Verdict,
    pub expected: Verdict,
    /// Truth is N/A; the pair never enters any metric.
    pub excluded: bool,
}

impl MatchRecord {
    pub fn is_match(&self) -> bool {
        self.predicted == self.expected
    }
}

/// One record per class that has a truth entry for the report's pair.
pub fn score_pair(report: &SuitabilityReport, truth: &GroundTruthSet) -> Result<Vec<MatchRecord>, EvalError> {
    if !report.is_valid() {
        return Err(EvalError::InvalidReport(report.id.clone()));
    }
    let expected = truth.for_pair(&report.patient_id, &report.medication_id);
    if expected.is_empty() {
        return Err(EvalError::MissingTruth {
            patient_id: report.patient_id.clone(),
            medication_id: report.medication_id.clone(),
        });
    }
    expected
        .into_iter()
        .map(|(class, expected)| {
            let predicted = report
                .checks
                .get(&class)
                .map(|c| c.result)
                .ok_or_else(|| EvalError::InvalidReport(report.id.clone()))?;
            Ok(MatchRecord {
                class,
                predicted,
                expected,
                excluded: expected == Verdict::NA,
            })
        })
        .collect()
}

const LABELS: [Verdict; 2] = [Verdict::Suitable, Verdict::Risky];

/// Accuracy plus precision/recall/F1 averaged over {Suitable, Risky}
/// weighted by each label's true count. Pairs whose truth is N/A are
/// dropped first; a predicted N/A against a real label is a miss.
pub fn compute_metrics<T: MetricScalar>(
    class: InteractionClass,
    pairs: &[(Verdict, Verdict)],
) -> Result<ClassMetrics<T>, EvalError> {
    let scored: Vec<(Verdict, Verdict)> = pairs.iter().copied().filter(|(_, e)| *e != Verdict::NA).collect();
    let total = scored.len();
    if total == 0 {
        return Err(EvalError::EmptyPairs);
    }
    let matches = scored.iter().filter(|(p, e)| p == e).count();

    let (mut precision, mut recall, mut f1) = (T::zero(), T::zero(), T::zero());
    for label in LABELS {
        let tp = scored.iter().filter(|(p, e)| *p == label && *e == label).count();
        let predicted = scored.iter().filter(|(p, _)| *p == label).count();
        let support = scored.iter().filter(|(_, e)| *e == label).count();
        let p = T::ratio(tp, predicted);
        let r = T::ratio(tp, support);
        let f = if p + r == T::zero() {
            T::zero()
        } else {
            (T::one() + T::one()) * p * r / (p + r)
        };
        let w = T::ratio(support, total);
        precision = precision + w * p;
        recall = recall + w * r;
        f1 = f1 + w * f;
    }
    Ok(ClassMetrics {
        interaction_class: class,
        accuracy: T::ratio(matches, total),
        precision,
        recall,
        f1,
        support: total,
    })
}

// ---------------------------------------------------------------------------
// Metrics table
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub model_id: String,
    pub rag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model_id: String,
    pub rag: bool,
    pub class: InteractionClass,
    /// `None` marks a row with nothing to score.
    pub metrics: Option<ClassMetrics<f64>>,
    /// Invalid reports in the (model, rag) cell; excluded from metrics.
    pub invalid_count: usize,
    /// Completions that failed outright in the (model, rag) cell.
    #[serde(default)]
    pub failed_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

pub const CSV_HEADER: [&str; 9] = [
    "model",
    "rag",
    "class",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "support",
    "invalid_count",
];

impl MetricsTable {
    pub fn get(&self, model_id: &str, rag: bool, class: InteractionClass) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| r.model_id == model_id && r.rag == rag && r.class == class)
    }

    pub fn slice(&self, model_id: Option<&str>, rag: Option<bool>) -> MetricsTable {
        MetricsTable {
            rows: self
                .rows
                .iter()
                .filter(|r| model_id.is_none_or(|m| r.model_id == m) && rag.is_none_or(|g| r.rag == g))
                .cloned()
                .collect(),
        }
    }

    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| EvalError::Csv(e.to_string());
        w.write_record(CSV_HEADER).map_err(err)?;
        for r in &self.rows {
            let m = |f: fn(&ClassMetrics<f64>) -> f64| r.metrics.as_ref().map(|x| f(x).to_string()).unwrap_or_default();
            w.write_record([
                r.model_id.clone(),
                r.rag.to_string(),
                r.class.name().to_string(),
                m(|x| x.accuracy),
                m(|x| x.precision),
                m(|x| x.recall),
                m(|x| x.f1),
                r.metrics.as_ref().map(|x| x.support).unwrap_or(0).to_string(),
                r.invalid_count.to_string(),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| EvalError::Csv(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| EvalError::Csv(e.to_string()))
    }

    /// Reads the CSV export back. `failed_count` is not part of the export and reads as 0.
    pub fn from_csv(text: &str) -> Result<MetricsTable, EvalError> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let bad = |msg: String| EvalError::Csv(msg);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != CSV_HEADER.len() {
                return Err(bad(format!("expected {} columns, got {}", CSV_HEADER.len(), rec.len())));
            }
            let class: InteractionClass = rec[2].parse().map_err(|e: DomainError| bad(e.to_string()))?;
            let num = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(format!("column {i}: {e}")));
            let int = |i: usize| rec[i].parse::<usize>().map_err(|e| bad(format!("column {i}: {e}")));
            let metrics = if rec[3].is_empty() {
                None
            } else {
                Some(ClassMetrics {
                    interaction_class: class,
                    accuracy: num(3)?,
                    precision: num(4)?,
                    recall: num(5)?,
                    f1: num(6)?,
                    support: int(7)?,
                })
            };
            rows.push(MetricsRow {
                model_id: rec[0].to_string(),
                rag: rec[1].parse().map_err(|_| bad(format!("bad rag flag {:?}", &rec[1])))?,
                class,
                metrics,
                invalid_count: int(8)?,
                failed_count: 0,
            });
        }
        Ok(MetricsTable { rows })
    }

    /// Largest absolute metric difference, or `None` when the tables do not
    /// have the same rows, supports, invalid counts, and empty markers.
    pub fn max_abs_diff(&self, other: &MetricsTable) -> Option<f64> {
        if self.rows.len() != other.rows.len() {
            return None;
        }
        let mut worst = 0.0f64;
        for (a, b) in self.rows.iter().zip(&other.rows) {
            if (a.model_id.as_str(), a.rag, a.class, a.invalid_count)
                != (b.model_id.as_str(), b.rag, b.class, b.invalid_count)
            {
                return None;
            }
            match (&a.metrics, &b.metrics) {
                (None, None) => {}
                (Some(x), Some(y)) if x.support == y.support => {
                    for (p, q) in [
                        (x.accuracy, y.accuracy),
                        (x.precision, y.precision),
                        (x.recall, y.recall),
                        (x.f1, y.f1),
                    ] {
                        worst = worst.max((p - q).abs());
                    }
                }
                _ => return None,
            }
        }
        Some(worst)
    }

    /// Text table: one block per model, one line per class, accuracy /
    /// precision / recall / F1 without retrieval, then with retrieval.
    pub fn render(&self) -> String {
        let models: BTreeSet<&str> = self.rows.iter().map(|r| r.model_id.as_str()).collect();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:<18} | {:^27} | {:^27}",
            "Model", "Interaction Type", "without RAG", "with RAG"
        );
        let _ = writeln!(
            out,
            "{:<16} {:<18} | {:>6} {:>6} {:>6} {:>6} | {:>6} {:>6} {:>6} {:>6}",
            "", "", "Acc", "Prec", "Rec", "F1", "Acc", "Prec", "Rec", "F1"
        );
        for model in models {
            out.push_str(&"-".repeat(95));
            out.push('\n');
            for class in InteractionClass::ALL {
                let cell = |rag: bool| match self.get(model, rag, class).and_then(|r| r.metrics.as_ref()) {
                    Some(m) => format!(
                        "{:>6.2} {:>6.2} {:>6.2} {:>6.2}",
                        m.accuracy, m.precision, m.recall, m.f1
                    ),
                    None => format!("{:>6} {:>6} {:>6} {:>6}", "--", "--", "--", "--"),
                };
                let _ = writeln!(out, "{:<16} {:<18} | {} | {}", model, class.name(), cell(false), cell(true));
            }
        }
        out
    }
}

/// Builds the table from archived reports. Per (model, rag, patient,
/// medication) only the newest report counts. Every cell in `cells` gets
/// eight rows even when it holds nothing scorable; cells seen in `reports`
/// are added automatically.
pub fn metrics_from_reports(
    reports: &[SuitabilityReport],
    truth: &GroundTruthSet,
    cells: &[CellKey],
    failed: &HashMap<CellKey, usize>,
) -> MetricsTable {
    let mut latest: BTreeMap<(CellKey, &str, &str), &SuitabilityReport> = BTreeMap::new();
    for r in reports {
        let key = (
            CellKey {
                model_id: r.model_id.clone(),
                rag: r.rag_enabled,
            },
            r.patient_id.as_str(),
            r.medication_id.as_str(),
        );
        let newer = latest
            .get(&key)
            .is_none_or(|old| (r.created_at, &r.id) > (old.created_at, &old.id));
        if newer {
            latest.insert(key, r);
        }
    }

    let mut all_cells: BTreeSet<CellKey> = cells.iter().cloned().collect();
    all_cells.extend(failed.keys().cloned());
    let mut pairs: BTreeMap<(CellKey, InteractionClass), Vec<(Verdict, Verdict)>> = BTreeMap::new();
    let mut invalid: HashMap<CellKey, usize> = HashMap::new();
    for ((cell, _, _), report) in &latest {
        all_cells.insert(cell.clone());
        if !report.is_valid() {
            *invalid.entry(cell.clone()).or_default() += 1;
            continue;
        }
        match score_pair(report, truth) {
            Ok(records) => {
                for m in records.into_iter().filter(|m| !m.excluded) {
                    pairs
                        .entry((cell.clone(), m.class))
                        .or_default()
                        .push((m.predicted, m.expected));
                }
            }
            Err(e) => tracing::warn!(report = %report.id, error = %e, "report not scored"),
        }
    }

    let mut rows = Vec::new();
    for cell in all_cells {
        for class in InteractionClass::ALL {
            let metrics = pairs
                .get(&(cell.clone(), class))
                .and_then(|p| compute_metrics::<f64>(class, p).ok());
            rows.push(MetricsRow {
                model_id: cell.model_id.clone(),
                rag: cell.rag,
                class,
                metrics,
                invalid_count: invalid.get(&cell).copied().unwrap_or(0),
                failed_count: failed.get(&cell).copied().unwrap_or(0),
            });
        }
    }
    MetricsTable { rows }
}

// ---------------------------------------------------------------------------
// Experiment matrix
// ---------------------------------------------------------------------------

fn default_k() -> usize {
    crate::prompt::DEFAULT_K
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub model_ids: Vec<String>,
    pub rag_flags: Vec<bool>,
    pub patient_ids: Vec<String>,
    pub medication_ids: Vec<String>,
    #[serde(default = "default_k")]
    pub k: usize,
}

/// Everything an experiment run reads.
pub struct ExperimentContext<'a, T> {
    pub profiles: &'a HashMap<String, PatientProfile>,
    pub medications: &'a MedicationCatalog,
    pub truth: &'a GroundTruthSet,
    pub backends: &'a HashMap<String, Arc<dyn CompletionBackend>>,
    pub retriever: Option<Retriever<'a, T>>,
    /// Assessments in flight at once across the whole run.
    pub concurrency: usize,
}

impl ExperimentSpec {
    pub fn validate<T>(&self, ctx: &ExperimentContext<'_, T>) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidSpec(m));
        if self.model_ids.is_empty() || self.rag_flags.is_empty() || self.patient_ids.is_empty() || self.medication_ids.is_empty() {
            return bad("model_ids, rag_flags, patient_ids and medication_ids must be non-empty".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if let Some(m) = self.model_ids.iter().find(|m| !ctx.backends.contains_key(*m)) {
            return bad(format!("unknown model {m:?}"));
        }
        if let Some(p) = self.patient_ids.iter().find(|p| !ctx.profiles.contains_key(*p)) {
            return bad(format!("unknown patient {p:?}"));
        }
        if let Some(m) = self.medication_ids.iter().find(|m| ctx.medications.get(m).is_none()) {
            return bad(format!("unknown medication {m:?}"));
        }
        if self.rag_flags.contains(&true) && ctx.retriever.is_none() {
            return bad("retrieval requested but no index is available".into());
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for m in &self.model_ids {
            for &rag in &self.rag_flags {
                out.push(CellKey {
                    model_id: m.clone(),
                    rag,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub model_id: String,
    pub rag: bool,
    pub patient_id: String,
    pub medication_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub table: MetricsTable,
    /// Every report produced, valid or not, in run order.
    pub reports: Vec<SuitabilityReport>,
    pub failures: Vec<RunFailure>,
}

pub fn experiment_report_id(model_id: &str, rag: bool, patient_id: &str, medication_id: &str) -> String {
    format!(
        "{}__{}__{}__{}",
        slug(model_id),
        if rag { "rag" } else { "norag" },
        slug(patient_id),
        slug(medication_id)
    )
}

/// Runs the full (model x rag x patient x medication) product. A failing
/// completion is recorded and counted against its cell; the run goes on.
pub async fn run_experiment<T: FloatScalar>(
    spec: &ExperimentSpec,
    ctx: &ExperimentContext<'_, T>,
) -> Result<ExperimentOutcome, EvalError> {
    spec.validate(ctx)?;
    let started = Utc::now();

    let mut jobs = Vec::new();
    for model in &spec.model_ids {
        for &rag in &spec.rag_flags {
            for patient in &spec.patient_ids {
                for med in &spec.medication_ids {
                    jobs.push((model, rag, patient, med));
                }
            }
        }
    }

    let results: Vec<_> = stream::iter(jobs.into_iter().map(|(model, rag, patient, med)| async move {
        let backend = &ctx.backends[model];
        let profile = &ctx.profiles[patient];
        let medication = ctx.medications.get(med).expect("validated");
        let req = AssessRequest {
            profile,
            medication,
            rag,
            k: spec.k,
            report_id: experiment_report_id(model, rag, patient, med),
            created_at: started,
        };
        let out = assess(req, backend.as_ref(), ctx.retriever.as_ref()).await;
        (model, rag, patient, med, out)
    }))
    .buffered(ctx.concurrency.max(1))
    .collect()
    .await;

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut failed: HashMap<CellKey, usize> = HashMap::new();
    for (model, rag, patient, med, out) in results {
        match out {
            Ok(a) => {
                if let Some(f) = &a.report.failure {
                    tracing::debug!(report = %a.report.id, failure = %f, "model output rejected");
                }
                reports.push(a.report);
            }
            Err(e) => {
                tracing::warn!(model, rag, patient, med, error = %e, "assessment failed");
                *failed
                    .entry(CellKey {
                        model_id: model.clone(),
                        rag,
                    })
                    .or_default() += 1;
                failures.push(RunFailure {
                    model_id: model.clone(),
                    rag,
                    patient_id: patient.clone(),
                    medication_id: med.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    let table = metrics_from_reports(&reports, ctx.truth, &spec.cells(), &failed);
    Ok(ExperimentOutcome {
        table,
        reports,
        failures,
    })
}

// ---------------------------------------------------------------------------
// Subjective reviews
// ---------------------------------------------------------------------------

/// Reviews keyed by (reviewer, patient, model, rag).
#[derive(Debug, Clone, Default)]
pub struct ReviewBook {
    reviews: BTreeMap<(String, String, String, bool), SubjectiveReview>,
}

impl ReviewBook {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores the review. Returns `true` when it replaced an earlier one.
    pub fn record_review(&mut self, review: SubjectiveReview) -> Result<bool, DomainError> {
        review.validate()?;
        let replaced = self.reviews.insert(review.key(), review).is_some();
        if replaced {
            tracing::warn!("review resubmitted; previous scores replaced");
        }
        Ok(replaced)
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn reviews(&self) -> impl Iterator<Item = &SubjectiveReview> {
        self.reviews.values()
    }
}

impl FromIterator<SubjectiveReview> for ReviewBook {
    fn from_iter<I: IntoIterator<Item = SubjectiveReview>>(iter: I) -> Self {
        let mut book = ReviewBook::new();
        for r in iter {
            if let Err(e) = book.record_review(r) {
                tracing::warn!(error = %e, "skipping out-of-range review");
            }
        }
        book
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewMeans<T> {
    pub count: usize,
    pub msa: T,
    pub did: T,
    pub psda: T,
    pub pss: T,
    pub ga: T,
    /// Mean over all five metrics.
    pub overall: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewSummaryRow<T> {
    pub model_id: String,
    pub rag: bool,
    pub means: ReviewMeans<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewSummary<T> {
    pub rows: Vec<ReviewSummaryRow<T>>,
}

impl<T: MetricScalar> ReviewSummary<T> {
    pub fn get(&self, model_id: &str, rag: bool) -> Option<&ReviewMeans<T>> {
        self.rows
            .iter()
            .find(|r| r.model_id == model_id && r.rag == rag)
            .map(|r| &r.means)
    }

    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| EvalError::Csv(e.to_string());
        w.write_record(["model", "rag", "count", "msa", "did", "psda", "pss", "ga", "overall"])
            .map_err(err)?;
        for r in &self.rows {
            let m = &r.means;
            w.write_record([
                r.model_id.clone(),
                r.rag.to_string(),
                m.count.to_string(),
                m.msa.to_f64().to_string(),
                m.did.to_f64().to_string(),
                m.psda.to_f64().to_string(),
                m.pss.to_f64().to_string(),
                m.ga.to_f64().to_string(),
                m.overall.to_f64().to_string(),
            ])
            .map_err(err)?;
        }
        String::from_utf8(w.into_inner().map_err(|e| EvalError::Csv(e.to_string()))?)
            .map_err(|e| EvalError::Csv(e.to_string()))
    }
}

/// Arithmetic means per (model, rag) over the reviews matching the filter.
pub fn summarize_reviews<'a, T: MetricScalar>(
    reviews: impl IntoIterator<Item = &'a SubjectiveReview>,
    model_id: Option<&str>,
    rag: Option<bool>,
) -> Result<ReviewSummary<T>, EvalError> {
    let mut sums: BTreeMap<(String, bool), (usize, [usize; 5])> = BTreeMap::new();
    for r in reviews {
        if model_id.is_some_and(|m| m != r.model_id) || rag.is_some_and(|g| g != r.rag_enabled) {
            continue;
        }
        let e = sums.entry((r.model_id.clone(), r.rag_enabled)).or_default();
        e.0 += 1;
        for (acc, s) in e.1.iter_mut().zip(r.scores()) {
            *acc += s.clamp(0, 5) as usize;
        }
    }
    if sums.is_empty() {
        return Err(EvalError::NoReviews);
    }
    let rows = sums
        .into_iter()
        .map(|((model_id, rag), (n, s))| ReviewSummaryRow {
            model_id,
            rag,
            means: ReviewMeans {
                count: n,
                msa: T::ratio(s[0], n),
                did: T::ratio(s[1], n),
                psda: T::ratio(s[2], n),
                pss: T::ratio(s[3], n),
                ga: T::ratio(s[4], n),
                overall: T::ratio(s.iter().sum(), 5 * n),
            },
        })
        .collect();
    Ok(ReviewSummary { rows })
}

pub fn reviews_to_csv<'a>(reviews: impl IntoIterator<Item = &'a SubjectiveReview>) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| EvalError::Csv(e.to_string());
    w.write_record([
        "reviewer_id",
        "patient_id",
        "model_id",
        "rag",
        "msa",
        "did",
        "psda",
        "pss",
        "ga",
        "notes",
        "created_at",
    ])
    .map_err(err)?;
    for r in reviews {
        let s = r.scores();
        w.write_record([
            r.reviewer_id.clone(),
            r.patient_id.clone(),
            r.model_id.clone(),
            r.rag_enabled.to_string(),
            s[0].to_string(),
            s[1].to_string(),
            s[2].to_string(),
            s[3].to_string(),
            s[4].to_string(),
            r.notes.clone().unwrap_or_default(),
            r.created_at.to_rfc3339(),
        ])
        .map_err(err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| EvalError::Csv(e.to_string()))?)
        .map_err(|e| EvalError::Csv(e.to_string()))
}
