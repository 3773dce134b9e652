//! Turns raw model output into a [`SuitabilityReport`].
//!
//! Parsing never fails: anything that cannot be read as a complete answer
//! becomes an `Invalid` report carrying the raw text and a
//! [`ReportFailure`]. There is exactly one repair step, extraction of the
//! first balanced `{...}` object from surrounding prose or code fences.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;
use serde_json::Value;

use crate::domain::{
    CheckResult, InteractionClass, OverallSuitability, ReportFailure, ReportStatus, SuitabilityReport, Verdict,
};
use crate::prompt::OVERALL_KEY;

/// Metadata attached to a parsed report.
#[derive(Debug, Clone, PartialEq)]
pub struct RunContext {
    pub report_id: String,
    pub patient_id: String,
    pub medication_id: String,
    pub model_id: String,
    pub rag_enabled: bool,
    /// Ignored unless `rag_enabled`.
    pub retrieved_chunk_ids: Vec<String>,
    pub created_at: DateTime<Utc>,
}

/// First substring that starts at a `{` and closes it, skipping braces in
/// string literals (with backslash escapes). Later `{` are tried when an
/// earlier one never balances.
pub fn repair_extract(raw: &str) -> Option<&str> {
    let bytes = raw.as_bytes();
    let mut from = 0;
    while let Some(rel) = raw[from..].find('{') {
        let start = from + rel;
        if let Some(end) = balanced_end(&bytes[start..]) {
            return Some(&raw[start..start + end]);
        }
        from = start + 1;
    }
    None
}

// Length of the balanced object at the start of `s`, if it closes.
fn balanced_end(s: &[u8]) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, &b) in s.iter().enumerate() {
        if in_str {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_str = false;
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Top-level object entries in source order, duplicates kept.
struct Entries(Vec<(String, Value)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Entries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Value>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn read_object(raw: &str) -> Option<Vec<(String, Value)>> {
    if let Ok(Entries(e)) = serde_json::from_str::<Entries>(raw.trim()) {
        return Some(e);
    }
    let candidate = repair_extract(raw)?;
    serde_json::from_str::<Entries>(candidate).ok().map(|e| e.0)
}

enum Key {
    Class(InteractionClass),
    Overall,
}

fn classify_key(k: &str) -> Option<Key> {
    let t = k.trim();
    if let Ok(c) = t.parse::<InteractionClass>() {
        return Some(Key::Class(c));
    }
    let lower = t.to_ascii_lowercase();
    (lower == "overall suitability" || lower == "overallsuitability").then_some(Key::Overall)
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, name: &str) -> Option<&'a Value> {
    obj.iter()
        .find(|(k, _)| k.trim().eq_ignore_ascii_case(name))
        .map(|(_, v)| v)
}

fn text_of(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

fn parse_check(class: InteractionClass, v: &Value) -> Result<CheckResult, ReportFailure> {
    let obj = v
        .as_object()
        .ok_or_else(|| ReportFailure::UnknownResultValue(v.to_string()))?;
    let result = match field(obj, "result") {
        Some(Value::String(s)) => Verdict::parse(s).ok_or_else(|| ReportFailure::UnknownResultValue(s.clone()))?,
        Some(other) => return Err(ReportFailure::UnknownResultValue(other.to_string())),
        None => return Err(ReportFailure::UnknownResultValue("<missing>".into())),
    };
    let reason = text_of(field(obj, "reason"));
    CheckResult::new(result, reason).map_err(|_| ReportFailure::MissingReason(class.name().into()))
}

fn parse_score(v: Option<&Value>) -> Result<u8, ReportFailure> {
    let x = match v {
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) => s.trim().parse::<f64>().ok(),
        _ => None,
    }
    .filter(|x| x.is_finite())
    .ok_or(ReportFailure::ScoreOutOfRange)?;
    if !(0.0..=100.0).contains(&x) {
        return Err(ReportFailure::ScoreOutOfRange);
    }
    Ok(x.round() as u8)
}

fn parse_overall(v: &Value) -> Result<OverallSuitability, ReportFailure> {
    let obj = v
        .as_object()
        .ok_or_else(|| ReportFailure::MissingClass(OVERALL_KEY.into()))?;
    Ok(OverallSuitability {
        score: parse_score(field(obj, "score"))?,
        reason: text_of(field(obj, "reason")),
    })
}

type Parsed = (BTreeMap<InteractionClass, CheckResult>, OverallSuitability);

fn interpret(raw: &str) -> Result<Parsed, ReportFailure> {
    let entries = read_object(raw).ok_or(ReportFailure::NoJsonFound)?;

    let mut classes: BTreeMap<InteractionClass, &Value> = BTreeMap::new();
    let mut overall: Option<&Value> = None;
    for (k, v) in &entries {
        match classify_key(k) {
            Some(Key::Class(c)) if classes.insert(c, v).is_some() => {
                return Err(ReportFailure::DuplicateClass(c.name().into()));
            }
            Some(Key::Overall) if overall.replace(v).is_some() => {
                return Err(ReportFailure::DuplicateClass(OVERALL_KEY.into()));
            }
            _ => {}
        }
    }

    let mut checks = BTreeMap::new();
    for class in InteractionClass::ALL {
        let v = classes
            .get(&class)
            .ok_or_else(|| ReportFailure::MissingClass(class.name().into()))?;
        checks.insert(class, parse_check(class, v)?);
    }
    let overall = overall.ok_or_else(|| ReportFailure::MissingClass(OVERALL_KEY.into()))?;
    Ok((checks, parse_overall(overall)?))
}

pub fn parse_report(raw: &str, ctx: &RunContext) -> SuitabilityReport {
    let (checks, overall, status, failure) = match interpret(raw) {
        Ok((checks, overall)) => (checks, Some(overall), ReportStatus::Valid, None),
        Err(f) => (BTreeMap::new(), None, ReportStatus::Invalid, Some(f)),
    };
    SuitabilityReport {
        id: ctx.report_id.clone(),
        patient_id: ctx.patient_id.clone(),
        medication_id: ctx.medication_id.clone(),
        model_id: ctx.model_id.clone(),
        rag_enabled: ctx.rag_enabled,
        checks,
        overall,
        retrieved_chunk_ids: if ctx.rag_enabled {
            ctx.retrieved_chunk_ids.clone()
        } else {
            Vec::new()
        },
        raw_response: raw.to_string(),
        created_at: ctx.created_at,
        status,
        failure,
    }
}

/// The answer-schema JSON for a valid report, keys in prompt order.
/// Parsing this text reproduces the report's checks and overall score.
pub fn answer_json(report: &SuitabilityReport) -> Option<String> {
    let overall = report.overall.as_ref()?;
    let mut map = serde_json::Map::new();
    for class in InteractionClass::PROMPT_ORDER {
        let c = report.checks.get(&class)?;
        map.insert(
            class.name().into(),
            serde_json::json!({"result": c.result.as_str(), "reason": c.reason}),
        );
    }
    map.insert(
        OVERALL_KEY.into(),
        serde_json::json!({"score": overall.score, "reason": overall.reason}),
    );
    serde_json::to_string_pretty(&Value::Object(map)).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn ctx(rag: bool) -> RunContext {
        RunContext {
            report_id: "r1".into(),
            patient_id: "p01".into(),
            medication_id: "warfarin".into(),
            model_id: "m".into(),
            rag_enabled: rag,
            retrieved_chunk_ids: vec!["warfarin:ClinicalParticulars:0000".into()],
            created_at: DateTime::from_timestamp(0, 0).unwrap(),
        }
    }

    fn all_suitable(score: &str) -> String {
        let mut s = String::from("{");
        for c in InteractionClass::PROMPT_ORDER {
            s.push_str(&format!("\"{}\": {{\"result\": \"Suitable\", \"reason\": \"ok\"}}, ", c.name()));
        }
        s.push_str(&format!("\"Overall Suitability\": {{\"score\": {score}, \"reason\": \"fine\"}}}}"));
        s
    }

    #[test]
    fn clean_answer_is_valid() {
        let r = parse_report(&all_suitable("95"), &ctx(false));
        assert_eq!(r.status, ReportStatus::Valid, "{:?}", r.failure);
        assert_eq!(r.checks.len(), 8);
        assert!(r.checks.values().all(|c| c.result == Verdict::Suitable));
        assert_eq!(r.overall.unwrap().score, 95);
        assert!(r.retrieved_chunk_ids.is_empty());
    }

    #[test]
    fn prose_wrapped_answer_is_repaired() {
        let raw = format!("Here is my assessment: {} Hope this helps", all_suitable("80"));
        let r = parse_report(&raw, &ctx(true));
        assert_eq!(r.status, ReportStatus::Valid);
        assert_eq!(r.raw_response, raw);
        assert_eq!(r.retrieved_chunk_ids.len(), 1);
    }

    #[test]
    fn missing_genetics() {
        let raw = all_suitable("80").replace("\"Genetics\"", "\"Genomics\"");
        let r = parse_report(&raw, &ctx(false));
        assert_eq!(r.status, ReportStatus::Invalid);
        assert_eq!(r.failure, Some(ReportFailure::MissingClass("Genetics".into())));
        assert!(r.checks.is_empty());
    }

    #[test]
    fn score_rules() {
        assert_eq!(parse_report(&all_suitable("\" 70 \""), &ctx(false)).overall.unwrap().score, 70);
        assert_eq!(parse_report(&all_suitable("87.5"), &ctx(false)).overall.unwrap().score, 88);
        for bad in ["101", "-1", "\"high\"", "null"] {
            let r = parse_report(&all_suitable(bad), &ctx(false));
            assert_eq!(r.failure, Some(ReportFailure::ScoreOutOfRange), "{bad}");
        }
    }

    #[test]
    fn extract_examples() {
        assert_eq!(repair_extract("```json\n{\"a\":1}\n```"), Some("{\"a\":1}"));
        assert_eq!(repair_extract("{\"a\":\"}\"}"), Some("{\"a\":\"}\"}"));
        assert_eq!(repair_extract("{\"a\":\"\\\"}\"}"), Some("{\"a\":\"\\\"}\"}"));
        assert_eq!(repair_extract("no object here"), None);
        assert_eq!(repair_extract("{{ { x"), None);
        assert_eq!(repair_extract("{ open  {\"b\":2}"), Some("{\"b\":2}"));
    }

    #[test]
    fn duplicate_keys() {
        let raw = all_suitable("80").replacen("{\"Age\"", "{\"age \": {\"result\": \"Risky\", \"reason\": \"x\"}, \"Age\"", 1);
        let r = parse_report(&raw, &ctx(false));
        assert_eq!(r.failure, Some(ReportFailure::DuplicateClass("Age".into())));
    }

    #[test]
    fn key_variants_and_na_spellings() {
        let raw = all_suitable("60")
            .replace("\"Overall Suitability\"", "\"overallsuitability\"")
            .replace(
                "\"Pregnancy\": {\"result\": \"Suitable\", \"reason\": \"ok\"}",
                "\" PREGNANCY\": {\"Result\": \"Not Applicable\"}",
            );
        let r = parse_report(&raw, &ctx(false));
        assert_eq!(r.status, ReportStatus::Valid, "{:?}", r.failure);
        assert_eq!(r.checks[&InteractionClass::Pregnancy].result, Verdict::NA);
    }

    #[test]
    fn unknown_result_and_missing_reason() {
        let raw = all_suitable("60").replacen("\"Suitable\"", "\"Probably fine\"", 1);
        assert_eq!(
            parse_report(&raw, &ctx(false)).failure,
            Some(ReportFailure::UnknownResultValue("Probably fine".into()))
        );
        let raw = all_suitable("60").replacen("\"reason\": \"ok\"", "\"reason\": \"  \"", 1);
        assert_eq!(
            parse_report(&raw, &ctx(false)).failure,
            Some(ReportFailure::MissingReason("Age".into()))
        );
    }

    #[test]
    fn repaired_but_broken_stays_invalid() {
        let r = parse_report("Sure! {\"Age\": {\"result\": \"Suitable\"", &ctx(false));
        assert_eq!(r.failure, Some(ReportFailure::NoJsonFound));
        let r = parse_report("[1, 2, 3]", &ctx(false));
        assert_eq!(r.failure, Some(ReportFailure::NoJsonFound));
    }

    fn verdict() -> impl Strategy<Value = Verdict> {
        prop_oneof![Just(Verdict::Suitable), Just(Verdict::Risky), Just(Verdict::NA)]
    }

    proptest! {
        #[test]
        fn never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let raw = String::from_utf8_lossy(&bytes);
            let r = parse_report(&raw, &ctx(false));
            prop_assert_eq!(r.raw_response, raw.to_string());
        }

        #[test]
        fn valid_reports_round_trip(
            verdicts in proptest::collection::vec(verdict(), 8),
            score in 0u8..=100,
            reason in "[a-zA-Z\"{}][a-zA-Z \"{}]{0,19}",
        ) {
            let mut s = String::from("{");
            for (c, v) in InteractionClass::ALL.iter().zip(&verdicts) {
                s.push_str(&format!("{}: {{\"result\": \"{}\", \"reason\": {}}},",
                    serde_json::to_string(c.name()).unwrap(), v.as_str(), serde_json::to_string(&reason).unwrap()));
            }
            s.push_str(&format!("\"Overall Suitability\": {{\"score\": {score}, \"reason\": \"r\"}}}}"));
            let first = parse_report(&s, &ctx(false));
            prop_assert_eq!(first.status, ReportStatus::Valid);
            prop_assert!(first.invariant_violations().is_empty());
            let again = parse_report(&answer_json(&first).unwrap(), &ctx(false));
            prop_assert_eq!(&again.checks, &first.checks);
            prop_assert_eq!(&again.overall, &first.overall);
        }
    }
}
