//! One assessment: retrieve (optionally), prompt, complete, parse.

use chrono::{DateTime, Utc};

use crate::domain::{Medication, PatientProfile, SuitabilityReport};
use crate::gateway::{CompletionBackend, GatewayError};
use crate::prompt::{assemble_prompt, ContextBundle, PromptError, Retriever};
use crate::report::{parse_report, RunContext};
use crate::scalar::FloatScalar;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum AssessError {
    #[error("profile {0:?} has not been verified")]
    UnverifiedProfile(String),
    #[error("retrieval requested but no index is loaded")]
    RagUnavailable,
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub report: SuitabilityReport,
    pub context: Option<ContextBundle>,
}

pub struct AssessRequest<'a> {
    pub profile: &'a PatientProfile,
    pub medication: &'a Medication,
    pub rag: bool,
    pub k: usize,
    pub report_id: String,
    pub created_at: DateTime<Utc>,
}

pub async fn assess<T: FloatScalar>(
    req: AssessRequest<'_>,
    backend: &dyn CompletionBackend,
    retriever: Option<&Retriever<'_, T>>,
) -> Result<Assessment, AssessError> {
    if !req.profile.verified {
        return Err(AssessError::UnverifiedProfile(req.profile.id.clone()));
    }
    let context = if req.rag {
        let r = retriever.ok_or(AssessError::RagUnavailable)?;
        Some(r.retrieve_context(req.profile, req.medication, req.k).await?)
    } else {
        None
    };
    let prompt = assemble_prompt(req.profile, req.medication, context.as_ref());
    let completion = backend.complete(&prompt).await?;
    let ctx = RunContext {
        report_id: req.report_id,
        patient_id: req.profile.id.clone(),
        medication_id: req.medication.id.clone(),
        model_id: backend.model_id().to_string(),
        rag_enabled: req.rag,
        retrieved_chunk_ids: context.as_ref().map(ContextBundle::chunk_ids).unwrap_or_default(),
        created_at: req.created_at,
    };
    Ok(Assessment {
        report: parse_report(&completion.text, &ctx),
        context,
    })
}
