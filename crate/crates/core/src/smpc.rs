//! SmPC drug-label parsing and chunking.
//!
//! Source documents are plain text. A line of the form `## <Title>` opens a
//! section when the title, lowercased with every non-letter removed, names
//! one of the [`SectionKind`]s. Any other line, including unrecognized `##`
//! headers and numbered subsection headings, stays in the current section.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("document has no non-whitespace content")]
    EmptyDocument,
    #[error("invalid chunking parameters: window {window}, overlap {overlap}")]
    InvalidParams { window: usize, overlap: usize },
}

/// Top-level SmPC sections, in document order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SectionKind {
    NameOfProduct,
    Composition,
    PharmaceuticalForm,
    ClinicalParticulars,
    PharmacologicalProperties,
    PharmaceuticalParticulars,
}

impl SectionKind {
    pub const ALL: [SectionKind; 6] = [
        SectionKind::NameOfProduct,
        SectionKind::Composition,
        SectionKind::PharmaceuticalForm,
        SectionKind::ClinicalParticulars,
        SectionKind::PharmacologicalProperties,
        SectionKind::PharmaceuticalParticulars,
    ];

    /// Identifier form, used in chunk ids.
    pub fn name(self) -> &'static str {
        match self {
            SectionKind::NameOfProduct => "NameOfProduct",
            SectionKind::Composition => "Composition",
            SectionKind::PharmaceuticalForm => "PharmaceuticalForm",
            SectionKind::ClinicalParticulars => "ClinicalParticulars",
            SectionKind::PharmacologicalProperties => "PharmacologicalProperties",
            SectionKind::PharmaceuticalParticulars => "PharmaceuticalParticulars",
        }
    }

    /// Human-readable heading.
    pub fn title(self) -> &'static str {
        match self {
            SectionKind::NameOfProduct => "Name of Product",
            SectionKind::Composition => "Composition",
            SectionKind::PharmaceuticalForm => "Pharmaceutical Form",
            SectionKind::ClinicalParticulars => "Clinical Particulars",
            SectionKind::PharmacologicalProperties => "Pharmacological Properties",
            SectionKind::PharmaceuticalParticulars => "Pharmaceutical Particulars",
        }
    }

    /// Maps a header title to a section: lowercase, letters only, exact match.
    pub fn from_title(title: &str) -> Option<SectionKind> {
        let key: String = title
            .chars()
            .filter(|c| c.is_alphabetic())
            .flat_map(char::to_lowercase)
            .collect();
        Self::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == key)
    }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmpcDocument {
    pub doc_id: String,
    pub medication_name: String,
    /// Cleaned section text; every value is non-empty.
    pub sections: BTreeMap<SectionKind, String>,
}

impl SmpcDocument {
    pub fn section(&self, kind: SectionKind) -> Option<&str> {
        self.sections.get(&kind).map(String::as_str)
    }
}

/// A retrieval-sized slice of one section. `char_start..char_end` counts
/// Unicode scalar values in the cleaned section text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_id: String,
    pub section: SectionKind,
    pub ordinal: usize,
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
}

pub fn chunk_id(doc_id: &str, section: SectionKind, ordinal: usize) -> String {
    format!("{doc_id}:{}:{ordinal:04}", section.name())
}

fn header_title(line: &str) -> Option<&str> {
    let rest = line.trim_end().strip_prefix("##")?;
    // "### ..." is a subsection and never a top-level header.
    if rest.starts_with('#') {
        return None;
    }
    let title = rest.trim();
    (!title.is_empty() && rest.starts_with(char::is_whitespace)).then_some(title)
}

/// Collapses whitespace runs to one space, drops control characters, trims.
pub fn clean_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.chars() {
        if c.is_whitespace() {
            pending_space = true;
        } else if c.is_control() {
            continue;
        } else {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    out
}

pub fn parse_smpc(source: &str, doc_id: &str, medication_name: &str) -> Result<SmpcDocument, IngestError> {
    let mut raw: BTreeMap<SectionKind, String> = BTreeMap::new();
    let mut current = SectionKind::NameOfProduct;
    for line in source.lines() {
        if let Some(kind) = header_title(line).and_then(SectionKind::from_title) {
            current = kind;
            continue;
        }
        let buf = raw.entry(current).or_default();
        buf.push_str(line);
        buf.push('\n');
    }

    let sections: BTreeMap<SectionKind, String> = raw
        .into_iter()
        .map(|(k, v)| (k, clean_text(&v)))
        .filter(|(_, v)| !v.is_empty())
        .collect();
    if sections.is_empty() {
        return Err(IngestError::EmptyDocument);
    }
    Ok(SmpcDocument {
        doc_id: doc_id.to_string(),
        medication_name: medication_name.to_string(),
        sections,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkParams {
    pub window: usize,
    pub overlap: usize,
}

impl Default for ChunkParams {
    fn default() -> Self {
        Self {
            window: 1000,
            overlap: 200,
        }
    }
}

// A cut between chars[i-1] and chars[i] keeps words whole when either side is whitespace.
fn clean_cut(chars: &[char], i: usize) -> bool {
    i == chars.len() || chars[i].is_whitespace() || chars[i - 1].is_whitespace()
}

/// Character ranges covering `chars` with windows of at most `window`.
///
/// Windows nominally start at multiples of `window - overlap`. Each window
/// end is pulled back to the nearest whitespace boundary unless the window
/// holds none. If a pulled-back end falls before the next nominal start,
/// the next window starts at that end instead so ranges never leave gaps.
pub fn window_ranges(chars: &[char], params: ChunkParams) -> Result<Vec<(usize, usize)>, IngestError> {
    let ChunkParams { window, overlap } = params;
    if window == 0 || overlap >= window {
        return Err(IngestError::InvalidParams { window, overlap });
    }
    let n = chars.len();
    let stride = window - overlap;
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let hard_end = (start + window).min(n);
        let end = (start + 1..=hard_end)
            .rev()
            .find(|&i| clean_cut(chars, i))
            .unwrap_or(hard_end);
        out.push((start, end));
        if end == n {
            break;
        }
        start = (start + stride).min(end);
    }
    Ok(out)
}

pub fn chunk_document(doc: &SmpcDocument, params: ChunkParams) -> Result<Vec<Chunk>, IngestError> {
    let mut out = Vec::new();
    for (&section, text) in &doc.sections {
        let chars: Vec<char> = text.chars().collect();
        for (ordinal, (s, e)) in window_ranges(&chars, params)?.into_iter().enumerate() {
            out.push(Chunk {
                chunk_id: chunk_id(&doc.doc_id, section, ordinal),
                doc_id: doc.doc_id.clone(),
                section,
                ordinal,
                text: chars[s..e].iter().collect(),
                char_start: s,
                char_end: e,
            });
        }
    }
    Ok(out)
}
