//! Shared domain types and their invariants. No I/O lives here.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::MetricScalar;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("score {metric}={value} outside 1..=5")]
    ScoreOutOfRange { metric: &'static str, value: i64 },
    #[error("reason must be non-empty for a {0} result")]
    EmptyReason(Verdict),
    #[error("duplicate ground truth entry for ({patient_id}, {medication_id}, {class})")]
    DuplicateTruth {
        patient_id: String,
        medication_id: String,
        class: InteractionClass,
    },
    #[error("medication name must contain a letter or digit")]
    EmptyName,
    #[error("medication name {0:?} already in catalog")]
    DuplicateMedication(String),
    #[error("unknown interaction class {0:?}")]
    UnknownClass(String),
    #[error("unknown result value {0:?}")]
    UnknownVerdict(String),
}

// ---------------------------------------------------------------------------
// Patient profile
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Urgency {
    Elective,
    Urgent,
    Emergency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PregnancyStatus {
    Pregnant,
    NotPregnant,
    #[default]
    Unknown,
}

impl PregnancyStatus {
    /// Words used when the status is spelled out in a retrieval query.
    pub fn words(self) -> &'static str {
        match self {
            PregnancyStatus::Pregnant => "pregnant",
            PregnancyStatus::NotPregnant => "not pregnant",
            PregnancyStatus::Unknown => "pregnancy unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LactationStatus {
    Lactating,
    NotLactating,
    #[default]
    Unknown,
}

impl LactationStatus {
    pub fn words(self) -> &'static str {
        match self {
            LactationStatus::Lactating => "lactating",
            LactationStatus::NotLactating => "not lactating",
            LactationStatus::Unknown => "lactation unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub code: String,
    pub label: String,
}

/// A lab result or a vital sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub taken_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admission {
    pub urgency: Urgency,
    pub admitted_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discharged_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedicationCourse {
    pub drug_name: String,
    pub dose_value: f64,
    pub dose_unit: String,
    pub schedule: String,
    pub start: NaiveDate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<NaiveDate>,
}

impl MedicationCourse {
    /// A course with no end date is still being administered.
    pub fn is_current(&self) -> bool {
        self.end.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientProfile {
    pub id: String,
    pub synthetic_name: String,
    pub age: i64,
    pub gender: Gender,
    pub race: String,
    pub blood_type: String,
    #[serde(default)]
    pub allergies: Vec<String>,
    #[serde(default)]
    pub diagnoses: Vec<Diagnosis>,
    #[serde(default)]
    pub comorbidities: Vec<String>,
    #[serde(default)]
    pub medication_courses: Vec<MedicationCourse>,
    #[serde(default)]
    pub lab_results: Vec<Measurement>,
    #[serde(default)]
    pub vitals: Vec<Measurement>,
    pub admission: Admission,
    #[serde(default)]
    pub pregnancy_status: PregnancyStatus,
    #[serde(default)]
    pub lactation_status: LactationStatus,
    #[serde(default)]
    pub surgical_history: Vec<String>,
    #[serde(default)]
    pub verified: bool,
}

/// One broken profile invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileViolation {
    pub field: String,
    pub message: String,
}

impl ProfileViolation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ProfileViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Checks every machine-checkable profile invariant and returns all of the
/// violations found, not just the first.
pub fn validate_profile(profile: &PatientProfile) -> Result<(), Vec<ProfileViolation>> {
    let mut out = Vec::new();

    if profile.id.trim().is_empty() {
        out.push(ProfileViolation::new("id", "id must be non-empty"));
    }
    if !(0..=150).contains(&profile.age) {
        out.push(ProfileViolation::new("age", format!("age {} outside 0..=150", profile.age)));
    }
    if profile.gender == Gender::Male {
        if profile.pregnancy_status != PregnancyStatus::NotPregnant {
            out.push(ProfileViolation::new(
                "pregnancy_status",
                "pregnancy_status inconsistent with gender",
            ));
        }
        if profile.lactation_status != LactationStatus::NotLactating {
            out.push(ProfileViolation::new(
                "lactation_status",
                "lactation_status inconsistent with gender",
            ));
        }
    }
    for (i, course) in profile.medication_courses.iter().enumerate() {
        let field = |name: &str| format!("medication_courses[{i}].{name}");
        if course.drug_name.trim().is_empty() {
            out.push(ProfileViolation::new(field("drug_name"), "drug_name must be non-empty"));
        }
        if !(course.dose_value > 0.0 && course.dose_value.is_finite()) {
            out.push(ProfileViolation::new(field("dose_value"), "dose_value must be positive"));
        }
        if let Some(end) = course.end {
            if end < course.start {
                out.push(ProfileViolation::new(field("end"), "course end precedes start"));
            }
        }
    }
    for (list, name) in [(&profile.lab_results, "lab_results"), (&profile.vitals, "vitals")] {
        for (i, m) in list.iter().enumerate() {
            if !m.value.is_finite() {
                out.push(ProfileViolation::new(format!("{name}[{i}].value"), "value must be finite"));
            }
        }
    }
    if let Some(discharged) = profile.admission.discharged_at {
        if discharged < profile.admission.admitted_at {
            out.push(ProfileViolation::new(
                "admission.discharged_at",
                "discharge precedes admission",
            ));
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

// ---------------------------------------------------------------------------
// Medications
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Medication {
    pub id: String,
    pub name: String,
    pub smpc_doc_id: String,
}

impl Medication {
    /// Builds a catalog entry whose id and document id are the lowercase slug of `name`.
    pub fn from_name(name: &str) -> Self {
        let id = slug(name);
        Self {
            id: id.clone(),
            name: name.trim().to_string(),
            smpc_doc_id: id,
        }
    }
}

/// Lowercase ASCII-alphanumeric slug, other runs collapsed to `-`.
pub fn slug(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.trim().chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

/// Medications keyed by id, with names unique case-insensitively.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedicationCatalog {
    items: BTreeMap<String, Medication>,
}

impl MedicationCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces by id. A different id carrying an existing name is rejected.
    pub fn upsert(&mut self, med: Medication) -> Result<(), DomainError> {
        let clash = self
            .items
            .values()
            .any(|m| m.id != med.id && m.name.eq_ignore_ascii_case(&med.name));
        if clash {
            return Err(DomainError::DuplicateMedication(med.name));
        }
        self.items.insert(med.id.clone(), med);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Medication> {
        self.items.get(id)
    }

    pub fn by_name(&self, name: &str) -> Option<&Medication> {
        self.items.values().find(|m| m.name.eq_ignore_ascii_case(name.trim()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Medication> {
        self.items.values()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Interaction classes and check results
// ---------------------------------------------------------------------------

/// The eight suitability dimensions checked for every prescription.
///
/// `Ord` follows the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InteractionClass {
    Age,
    Comorbidities,
    Contraindications,
    Dose,
    Genetics,
    Lactation,
    Pregnancy,
    Warnings,
}

impl InteractionClass {
    pub const ALL: [InteractionClass; 8] = [
        InteractionClass::Age,
        InteractionClass::Comorbidities,
        InteractionClass::Contraindications,
        InteractionClass::Dose,
        InteractionClass::Genetics,
        InteractionClass::Lactation,
        InteractionClass::Pregnancy,
        InteractionClass::Warnings,
    ];

    /// Key order of the JSON answer schema shown to the model.
    pub const PROMPT_ORDER: [InteractionClass; 8] = [
        InteractionClass::Age,
        InteractionClass::Dose,
        InteractionClass::Comorbidities,
        InteractionClass::Contraindications,
        InteractionClass::Pregnancy,
        InteractionClass::Lactation,
        InteractionClass::Warnings,
        InteractionClass::Genetics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InteractionClass::Age => "Age",
            InteractionClass::Comorbidities => "Comorbidities",
            InteractionClass::Contraindications => "Contraindications",
            InteractionClass::Dose => "Dose",
            InteractionClass::Genetics => "Genetics",
            InteractionClass::Lactation => "Lactation",
            InteractionClass::Pregnancy => "Pregnancy",
            InteractionClass::Warnings => "Warnings",
        }
    }
}

impl fmt::Display for InteractionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InteractionClass {
    type Err = DomainError;

    /// Case-insensitive, surrounding whitespace ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| DomainError::UnknownClass(s.to_string()))
    }
}

pub fn canonical_class_order() -> [InteractionClass; 8] {
    InteractionClass::ALL
}

/// Ternary outcome of one suitability check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Suitable,
    Risky,
    NA,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Suitable => "Suitable",
            Verdict::Risky => "Risky",
            Verdict::NA => "N/A",
        }
    }

    /// Accepts "suitable", "risky", and the not-applicable spellings
    /// "N/A", "NA", "Not Applicable", all case-insensitive.
    pub fn parse(s: &str) -> Option<Verdict> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "suitable" => Some(Verdict::Suitable),
            "risky" => Some(Verdict::Risky),
            "n/a" | "na" | "not applicable" => Some(Verdict::NA),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verdict::parse(s).ok_or_else(|| DomainError::UnknownVerdict(s.to_string()))
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Verdict::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown result value {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub result: Verdict,
    pub reason: String,
}

impl CheckResult {
    pub fn new(result: Verdict, reason: impl Into<String>) -> Result<Self, DomainError> {
        let reason = reason.into();
        if result != Verdict::NA && reason.trim().is_empty() {
            return Err(DomainError::EmptyReason(result));
        }
        Ok(Self { result, reason })
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverallSuitability {
    /// 0..=100, 100 meaning fully suitable.
    pub score: u8,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportStatus {
    Valid,
    Invalid,
}

/// Machine-readable reason a model response did not yield a valid report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail")]
pub enum ReportFailure {
    NoJsonFound,
    MissingClass(String),
    UnknownResultValue(String),
    ScoreOutOfRange,
    DuplicateClass(String),
    MissingReason(String),
}

impl fmt::Display for ReportFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportFailure::NoJsonFound => f.write_str("NoJsonFound"),
            ReportFailure::MissingClass(c) => write!(f, "MissingClass({c})"),
            ReportFailure::UnknownResultValue(v) => write!(f, "UnknownResultValue({v})"),
            ReportFailure::ScoreOutOfRange => f.write_str("ScoreOutOfRange"),
            ReportFailure::DuplicateClass(c) => write!(f, "DuplicateClass({c})"),
            ReportFailure::MissingReason(c) => write!(f, "MissingReason({c})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityReport {
    pub id: String,
    pub patient_id: String,
    pub medication_id: String,
    pub model_id: String,
    pub rag_enabled: bool,
    /// All eight classes when `status` is `Valid`, empty otherwise.
    #[serde(default)]
    pub checks: BTreeMap<InteractionClass, CheckResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall: Option<OverallSuitability>,
    #[serde(default)]
    pub retrieved_chunk_ids: Vec<String>,
    pub raw_response: String,
    pub created_at: DateTime<Utc>,
    pub status: ReportStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<ReportFailure>,
}

impl SuitabilityReport {
    pub fn is_valid(&self) -> bool {
        self.status == ReportStatus::Valid
    }

    /// Lists every broken report invariant; empty when the report is sound.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.rag_enabled && !self.retrieved_chunk_ids.is_empty() {
            out.push("retrieved_chunk_ids must be empty when rag is disabled".to_string());
        }
        match self.status {
            ReportStatus::Valid => {
                for class in InteractionClass::ALL {
                    match self.checks.get(&class) {
                        None => out.push(format!("missing check for {class}")),
                        Some(c) if c.result != Verdict::NA && c.reason.trim().is_empty() => {
                            out.push(format!("empty reason for {class}"))
                        }
                        Some(_) => {}
                    }
                }
                match &self.overall {
                    None => out.push("missing overall suitability".to_string()),
                    Some(o) if o.score > 100 => out.push(format!("score {} outside 0..=100", o.score)),
                    Some(_) => {}
                }
                if self.failure.is_some() {
                    out.push("valid report carries a failure reason".to_string());
                }
            }
            ReportStatus::Invalid => {
                if self.failure.is_none() {
                    out.push("invalid report without failure reason".to_string());
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

/// One row of the ground-truth file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub patient_id: String,
    pub medication_id: String,
    pub class: InteractionClass,
    pub label: Verdict,
}

/// Expected labels per (patient, medication, class). Serialized as a flat
/// list of [`TruthEntry`] rows.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruthSet {
    entries: BTreeMap<(String, String, InteractionClass), Verdict>,
}

impl GroundTruthSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(rows: impl IntoIterator<Item = TruthEntry>) -> Result<Self, DomainError> {
        let mut set = Self::new();
        for row in rows {
            set.insert(row)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, row: TruthEntry) -> Result<(), DomainError> {
        let key = (row.patient_id, row.medication_id, row.class);
        if self.entries.contains_key(&key) {
            return Err(DomainError::DuplicateTruth {
                patient_id: key.0,
                medication_id: key.1,
                class: key.2,
            });
        }
        self.entries.insert(key, row.label);
        Ok(())
    }

    pub fn get(&self, patient_id: &str, medication_id: &str, class: InteractionClass) -> Option<Verdict> {
        self.entries
            .get(&(patient_id.to_string(), medication_id.to_string(), class))
            .copied()
    }

    /// Labels for one (patient, medication) pair in canonical class order.
    pub fn for_pair(&self, patient_id: &str, medication_id: &str) -> Vec<(InteractionClass, Verdict)> {
        InteractionClass::ALL
            .into_iter()
            .filter_map(|c| self.get(patient_id, medication_id, c).map(|v| (c, v)))
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = TruthEntry> + '_ {
        self.entries.iter().map(|((p, m, c), v)| TruthEntry {
            patient_id: p.clone(),
            medication_id: m.clone(),
            class: *c,
            label: *v,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Serialize for GroundTruthSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.entries())
    }
}

impl<'de> Deserialize<'de> for GroundTruthSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<TruthEntry>::deserialize(d)?;
        GroundTruthSet::from_entries(rows).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Subjective reviews
// ---------------------------------------------------------------------------

/// Five-point grading legend, highest first.
pub const GRADING_SCALE: [(i64, &str); 5] = [
    (5, "Excellent"),
    (4, "Very Good"),
    (3, "Good"),
    (2, "Average"),
    (1, "Poor"),
];

pub fn grade_label(score: i64) -> Option<&'static str> {
    GRADING_SCALE.iter().find(|(s, _)| *s == score).map(|(_, l)| *l)
}

/// A clinician's 1..=5 grading of one model's output for one patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveReview {
    pub reviewer_id: String,
    pub patient_id: String,
    pub model_id: String,
    pub rag_enabled: bool,
    /// Medication Selection Accuracy
    pub msa: i64,
    /// Drug Interaction Detection
    pub did: i64,
    /// Patient-Specific Dosage Adjustment
    pub psda: i64,
    /// Prescription Safety Score
    pub pss: i64,
    /// General Assessment
    pub ga: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub created_at: DateTime<Utc>,
}

impl SubjectiveReview {
    pub const METRICS: [&'static str; 5] = ["msa", "did", "psda", "pss", "ga"];

    pub fn scores(&self) -> [i64; 5] {
        [self.msa, self.did, self.psda, self.pss, self.ga]
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        for (metric, value) in Self::METRICS.into_iter().zip(self.scores()) {
            if !(1..=5).contains(&value) {
                return Err(DomainError::ScoreOutOfRange { metric, value });
            }
        }
        Ok(())
    }

    /// Identity of a review slot; a resubmission with the same key replaces.
    pub fn key(&self) -> (String, String, String, bool) {
        (
            self.reviewer_id.clone(),
            self.patient_id.clone(),
            self.model_id.clone(),
            self.rag_enabled,
        )
    }

    /// Filename-safe form of [`SubjectiveReview::key`].
    pub fn storage_id(&self) -> String {
        format!(
            "{}__{}__{}__{}",
            slug(&self.reviewer_id),
            slug(&self.patient_id),
            slug(&self.model_id),
            if self.rag_enabled { "rag" } else { "norag" }
        )
    }
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Accuracy and support-weighted precision/recall/F1 for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<T> {
    pub interaction_class: InteractionClass,
    pub accuracy: T,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub support: usize,
}

impl<T: MetricScalar> ClassMetrics<T> {
    pub fn to_f64(&self) -> ClassMetrics<f64> {
        ClassMetrics {
            interaction_class: self.interaction_class,
            accuracy: self.accuracy.to_f64(),
            precision: self.precision.to_f64(),
            recall: self.recall.to_f64(),
            f1: self.f1.to_f64(),
            support: self.support,
        }
    }

    pub fn within_unit_interval(&self) -> bool {
        [self.accuracy, self.precision, self.recall, self.f1]
            .iter()
            .all(|m| *m >= T::zero() && *m <= T::one())
    }
}
