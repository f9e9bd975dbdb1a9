//! QA examples and their retrieved documents.
//!
//! The interchange format is one JSON record per line with the field names
//! used by the types below (`example_id`, `question`, `gold_answers`,
//! `gold_evidence`, `documents`). Evidence offsets count Unicode scalar
//! values, not bytes, so annotations stay portable across implementations.
//! File IO lives in the companion harness crate; this module only defines
//! the types and their validation rules.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// One retrieved passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<BTreeMap<String, String>>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            text: text.into(),
            meta: None,
        }
    }

    /// Text length in Unicode scalar values (the unit evidence offsets use).
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// An ordered set of documents with unique, nonempty ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Document>", into = "Vec<Document>")]
pub struct DocumentSet {
    docs: Vec<Document>,
    index: BTreeMap<String, usize>,
}

impl DocumentSet {
    pub fn new(docs: Vec<Document>) -> Result<Self, CorpusError> {
        let mut index = BTreeMap::new();
        for (pos, doc) in docs.iter().enumerate() {
            if doc.doc_id.is_empty() {
                return Err(CorpusError::EmptyDocId);
            }
            if index.insert(doc.doc_id.clone(), pos).is_some() {
                return Err(CorpusError::DuplicateDocId(doc.doc_id.clone()));
            }
        }
        Ok(Self { docs, index })
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.index.get(doc_id).map(|&pos| &self.docs[pos])
    }

    /// Position of a document in retrieval order.
    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.index.get(doc_id).copied()
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

impl TryFrom<Vec<Document>> for DocumentSet {
    type Error = CorpusError;

    fn try_from(docs: Vec<Document>) -> Result<Self, CorpusError> {
        Self::new(docs)
    }
}

impl From<DocumentSet> for Vec<Document> {
    fn from(set: DocumentSet) -> Self {
        set.docs
    }
}

impl<'a> IntoIterator for &'a DocumentSet {
    type Item = &'a Document;
    type IntoIter = core::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.docs.iter()
    }
}

/// A half-open character range `[start, end)` inside one document,
/// marking gold evidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSpan {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
}

/// One QA example: a question, its accepted answers, and the documents
/// retrieved for it. `gold_evidence` is optional; when absent, retrieval
/// detection falls back to answer-string containment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAExample {
    pub example_id: String,
    pub question: String,
    pub gold_answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_evidence: Option<Vec<EvidenceSpan>>,
    pub documents: DocumentSet,
}

/// A broken invariant, naming the field it was found on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: String) -> Self {
        Self {
            field: field.to_string(),
            message,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Check every type invariant of `ex`; an empty result means the example
/// is well-formed.
pub fn validate_example(ex: &QAExample) -> Vec<Violation> {
    let mut violations = Vec::new();

    if ex.gold_answers.is_empty() {
        violations.push(Violation::new(
            "gold_answers",
            "must contain at least one answer".to_string(),
        ));
    }

    if let Some(evidence) = &ex.gold_evidence {
        let mut char_lens: BTreeMap<&str, usize> = BTreeMap::new();
        let mut seen_missing: BTreeSet<&str> = BTreeSet::new();
        for (i, span) in evidence.iter().enumerate() {
            let Some(doc) = ex.documents.get(&span.doc_id) else {
                if seen_missing.insert(&span.doc_id) {
                    violations.push(Violation::new(
                        "gold_evidence",
                        format!("entry {i} references unknown doc_id `{}`", span.doc_id),
                    ));
                }
                continue;
            };
            if span.start >= span.end {
                violations.push(Violation::new(
                    "gold_evidence",
                    format!(
                        "entry {i} in doc `{}` is an empty span ({}..{})",
                        span.doc_id, span.start, span.end
                    ),
                ));
                continue;
            }
            let len = *char_lens
                .entry(span.doc_id.as_str())
                .or_insert_with(|| doc.char_len());
            if span.end > len {
                violations.push(Violation::new(
                    "gold_evidence",
                    format!(
                        "entry {i} ends at {} but doc `{}` has only {} characters",
                        span.end, span.doc_id, len
                    ),
                ));
            }
        }
    }

    violations
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("duplicate doc_id `{0}` in document set")]
    DuplicateDocId(String),
    #[error("empty doc_id in document set")]
    EmptyDocId,
}
