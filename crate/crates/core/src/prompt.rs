//! Retrieval query construction, context retrieval, and prompt rendering.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::{InteractionClass, Medication, PatientProfile};
use crate::embed::{embed, EmbedError, EmbeddingProvider};
use crate::index::{IndexError, VectorIndex};
use crate::scalar::FloatScalar;
use crate::smpc::{Chunk, SectionKind};

pub const DEFAULT_K: usize = 6;

pub const CONTEXT_OPEN: &str = "--- SmPC CONTEXT ---";
pub const CONTEXT_CLOSE: &str = "--- END SmPC CONTEXT ---";

const PERSONA: &str = "You are an experienced and helpful prescribing assistant named Charlie. \
Charlie can support prescribers to carry out relevant checks when prescribing medication based \
on the patient medical profile and medical knowledge.";

const REQUEST: &str = "You should tell us if the medication is suitable for the user based on \
the following patient profile and provide the result in JSON format:";

const INSTRUCTIONS: &str = "For each check, use the terms \"Suitable\" or \"Risky\" to indicate \
whether the medication is appropriate based on the given parameter. In overall suitability, the \
result should be given as a score. If any check is not relevant (such as pregnancy and lactation \
for males), mark it as N/A.";

pub const OVERALL_KEY: &str = "Overall Suitability";

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("profile {0:?} has not been verified")]
    UnverifiedProfile(String),
    #[error("medication {0:?} has no indexed SmPC chunks")]
    NotIndexed(String),
    #[error("indexed chunk {0:?} has no stored text")]
    MissingChunk(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextChunk {
    pub chunk_id: String,
    pub section: SectionKind,
    pub text: String,
    pub similarity: f64,
}

/// Retrieved SmPC passages for one medication, best match first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub medication_id: String,
    pub chunks: Vec<ContextChunk>,
    pub k_requested: usize,
    pub query_text: String,
}

impl ContextBundle {
    pub fn chunk_ids(&self) -> Vec<String> {
        self.chunks.iter().map(|c| c.chunk_id.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system_text: String,
    pub user_text: String,
    pub rag_enabled: bool,
    /// `system_text`, a blank line, then `user_text`. Fingerprinted by the gateway.
    pub rendered: String,
}

fn push_words(out: &mut Vec<String>, s: &str) {
    out.extend(s.split_whitespace().map(str::to_lowercase));
}

/// Single retrieval query for a (patient, medication) pair: medication name,
/// the eight class names, then age, gender, comorbidities, allergies,
/// current drug names, and pregnancy/lactation status. Lowercase,
/// single-space separated.
pub fn build_query(profile: &PatientProfile, medication: &Medication) -> Result<String, PromptError> {
    if !profile.verified {
        return Err(PromptError::UnverifiedProfile(profile.id.clone()));
    }
    let mut words = Vec::new();
    push_words(&mut words, &medication.name);
    for class in InteractionClass::ALL {
        push_words(&mut words, class.name());
    }
    words.push(profile.age.to_string());
    words.push(profile.gender.as_str().to_string());
    for c in &profile.comorbidities {
        push_words(&mut words, c);
    }
    for a in &profile.allergies {
        push_words(&mut words, a);
    }
    for course in profile.medication_courses.iter().filter(|c| c.is_current()) {
        push_words(&mut words, &course.drug_name);
    }
    push_words(&mut words, profile.pregnancy_status.words());
    push_words(&mut words, profile.lactation_status.words());
    Ok(words.join(" "))
}

/// What retrieval needs: the index, chunk texts by id, and an embedder.
pub struct Retriever<'a, T> {
    pub index: &'a VectorIndex<T>,
    pub chunks: &'a HashMap<String, Chunk>,
    pub embedder: &'a dyn EmbeddingProvider,
}

impl<T: FloatScalar> Retriever<'_, T> {
    pub async fn retrieve_context(
        &self,
        profile: &PatientProfile,
        medication: &Medication,
        k: usize,
    ) -> Result<ContextBundle, PromptError> {
        let query_text = build_query(profile, medication)?;
        if self.index.count_for(&medication.id) == 0 {
            return Err(PromptError::NotIndexed(medication.id.clone()));
        }
        let query = embed::<T>(&query_text, self.embedder).await?;
        let hits = self.index.top_k(&query, k, Some(&medication.id))?;
        let chunks = hits
            .into_iter()
            .map(|hit| {
                let chunk = self
                    .chunks
                    .get(&hit.chunk_id)
                    .ok_or_else(|| PromptError::MissingChunk(hit.chunk_id.clone()))?;
                Ok(ContextChunk {
                    chunk_id: hit.chunk_id,
                    section: chunk.section,
                    text: chunk.text.clone(),
                    similarity: hit.similarity.to_f64().unwrap_or(f64::NAN),
                })
            })
            .collect::<Result<Vec<_>, PromptError>>()?;
        Ok(ContextBundle {
            medication_id: medication.id.clone(),
            chunks,
            k_requested: k,
            query_text,
        })
    }
}

fn drop_nulls_sorted(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map
                .into_iter()
                .filter(|(_, v)| !v.is_null())
                .map(|(k, v)| (k, drop_nulls_sorted(v)))
                .collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(drop_nulls_sorted).collect()),
        other => other,
    }
}

/// Key-sorted, two-space indented JSON with absent optional fields omitted.
pub fn canonical_profile_json(profile: &PatientProfile) -> String {
    let value = serde_json::to_value(profile).expect("profile is always representable as JSON");
    serde_json::to_string_pretty(&drop_nulls_sorted(value)).expect("JSON value serializes")
}

/// The JSON answer skeleton shown to the model, keys in prompt order.
pub fn output_schema() -> String {
    let mut s = String::from("{\n");
    for class in InteractionClass::PROMPT_ORDER {
        s.push_str(&format!(
            "  \"{}\": {{\"result\": <result>, \"reason\": <reason>}},\n",
            class.name()
        ));
    }
    s.push_str(&format!("  \"{OVERALL_KEY}\": {{\"score\": <score>, \"reason\": <reason>}}\n}}"));
    s
}

fn context_block(ctx: &ContextBundle) -> String {
    let mut s = String::new();
    s.push_str(CONTEXT_OPEN);
    s.push('\n');
    for (i, c) in ctx.chunks.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        s.push_str(&format!("[{}] {} ({})\n{}\n", i + 1, c.section.title(), c.chunk_id, c.text));
    }
    s.push_str(CONTEXT_CLOSE);
    s
}

/// Renders the suitability prompt. With `context`, one delimited block of
/// SmPC passages sits between the profile and the instructions.
pub fn assemble_prompt(
    profile: &PatientProfile,
    medication: &Medication,
    context: Option<&ContextBundle>,
) -> Prompt {
    let system_text = PERSONA.to_string();
    let mut user = String::new();
    user.push_str(REQUEST);
    user.push_str("\n\n");
    user.push_str(&canonical_profile_json(profile));
    user.push_str("\n\nMedication: ");
    user.push_str(&medication.name);
    user.push_str("\n\n");
    if let Some(ctx) = context {
        user.push_str(&context_block(ctx));
        user.push_str("\n\n");
    }
    user.push_str("Instructions:\n");
    user.push_str(INSTRUCTIONS);
    user.push_str("\n\nOutput Format (JSON):\n");
    user.push_str(&output_schema());
    user.push('\n');

    let rendered = format!("{system_text}\n\n{user}");
    Prompt {
        system_text,
        user_text: user,
        rag_enabled: context.is_some(),
        rendered,
    }
}
