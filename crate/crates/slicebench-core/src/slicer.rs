//! Span selection: producing index triples over retrieved documents.
//!
//! Three interchangeable strategies share one contract — indices in, no
//! generated text, total tokens within budget:
//!
//! * [`oracle_slice`] snaps annotated gold evidence outward to token
//!   boundaries (the upper bound a trained selector is measured against),
//! * [`lexical_slice`] scores fixed-size token windows by weighted overlap
//!   with the question,
//! * [`parse_llm_slice_output`] recovers triples from a remote model's
//!   free-form reply, degrading to warnings instead of failing.
//!
//! All of them funnel through [`normalize`], the single place where spans
//! are clipped, merged, ordered, and budget-bounded.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentSet, QAExample};
use crate::tokenizer::{char_slice, token_ranges, TokenMaps};

/// One token span inside one document: `[start, end)` token indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanIndex {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
}

impl SpanIndex {
    pub fn new(doc_id: impl Into<String>, start: usize, end: usize) -> Self {
        Self {
            doc_id: doc_id.into(),
            start,
            end,
        }
    }

    pub fn token_count(&self) -> usize {
        self.end.saturating_sub(self.start)
    }
}

/// A set of spans under a token budget.
///
/// When `normalized` is set the spans are sorted by (document order,
/// start), same-document spans neither overlap nor touch, and the total
/// token count is within `budget`. Only [`normalize`] produces normalized
/// sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSet {
    pub spans: Vec<SpanIndex>,
    pub budget: usize,
    pub normalized: bool,
}

impl SliceSet {
    /// An unnormalized set, as assembled by a selector before [`normalize`].
    pub fn raw(spans: Vec<SpanIndex>, budget: usize) -> Self {
        Self {
            spans,
            budget,
            normalized: false,
        }
    }

    pub fn total_tokens(&self) -> usize {
        self.spans.iter().map(SpanIndex::token_count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }
}

/// Clip, merge, order, and budget-bound `spans`.
///
/// Endpoints past a document's token count are clipped, spans that are
/// empty after clipping are dropped, overlapping or touching spans within
/// one document are merged, and the result is sorted by (document order in
/// `docs`, start). If the total still exceeds `budget`, whole spans are
/// dropped from the tail of the sorted order — spans are never truncated
/// mid-way, which could split the very evidence they were meant to keep.
/// Idempotent.
///
/// `budget` must be positive.
pub fn normalize(
    spans: &[SpanIndex],
    docs: &DocumentSet,
    tmaps: &TokenMaps,
    budget: usize,
) -> Result<SliceSet, SliceError> {
    assert!(budget >= 1, "budget must be positive");

    // (doc position, start, end), clipped.
    let mut clipped: Vec<(usize, usize, usize)> = Vec::with_capacity(spans.len());
    for span in spans {
        let Some(pos) = docs.position(&span.doc_id) else {
            return Err(SliceError::UnknownDoc(span.doc_id.clone()));
        };
        let tmap = tmaps
            .get(&span.doc_id)
            .ok_or_else(|| SliceError::MissingTokenMap(span.doc_id.clone()))?;
        let count = tmap.len();
        let start = span.start.min(count);
        let end = span.end.min(count);
        if start < end {
            clipped.push((pos, start, end));
        }
    }

    clipped.sort_unstable();

    // Merge overlapping or touching spans within one document.
    let mut merged: Vec<(usize, usize, usize)> = Vec::with_capacity(clipped.len());
    for (pos, start, end) in clipped {
        match merged.last_mut() {
            Some((last_pos, _, last_end)) if *last_pos == pos && start <= *last_end => {
                *last_end = (*last_end).max(end);
            }
            _ => merged.push((pos, start, end)),
        }
    }

    let mut total: usize = merged.iter().map(|&(_, s, e)| e - s).sum();
    while total > budget {
        let (_, s, e) = merged.pop().expect("total > 0 implies nonempty");
        total -= e - s;
    }

    let spans = merged
        .into_iter()
        .map(|(pos, start, end)| SpanIndex::new(docs.docs()[pos].doc_id.clone(), start, end))
        .collect();

    Ok(SliceSet {
        spans,
        budget,
        normalized: true,
    })
}

/// Smallest token spans whose character ranges cover each gold-evidence
/// range — snapping outward to token boundaries, never truncating.
///
/// Requires `ex.gold_evidence`; documents without tokens contribute
/// nothing. The result is normalized, so coverage holds as long as the
/// budget keeps every covering span.
pub fn oracle_slice(
    ex: &QAExample,
    tmaps: &TokenMaps,
    budget: usize,
) -> Result<SliceSet, SliceError> {
    let evidence = ex
        .gold_evidence
        .as_ref()
        .ok_or_else(|| SliceError::OracleUnavailable(ex.example_id.clone()))?;

    let mut spans = Vec::with_capacity(evidence.len());
    for gold in evidence {
        if ex.documents.get(&gold.doc_id).is_none() {
            return Err(SliceError::UnknownDoc(gold.doc_id.clone()));
        }
        let tmap = tmaps
            .get(&gold.doc_id)
            .ok_or_else(|| SliceError::MissingTokenMap(gold.doc_id.clone()))?;
        let n = tmap.len();
        if n == 0 || gold.start >= gold.end {
            continue;
        }
        // Last token starting at or before the gold start; first token
        // ending at or after the gold end. Both snap outward.
        let start_tok = tmap
            .tokens
            .partition_point(|&(s, _)| s <= gold.start)
            .saturating_sub(1);
        let first_reaching = tmap.tokens.partition_point(|&(_, e)| e < gold.end);
        let end_tok = if first_reaching >= n {
            n
        } else {
            first_reaching + 1
        };
        spans.push(SpanIndex::new(gold.doc_id.clone(), start_tok, end_tok));
    }

    normalize(&spans, &ex.documents, tmaps, budget)
}

/// Score fixed-size token windows by overlap with the question and select
/// the best ones greedily until the budget is filled.
///
/// Windows of `window` tokens start at offsets `0, stride, 2*stride, ...`
/// in every document (the last windows of a document may be shorter). A
/// window's score is the sum, over distinct case-folded question tokens it
/// contains, of `1 / (1 + number of documents containing the token)` — so
/// terms that appear everywhere count for little and rare terms dominate.
/// Ties break toward the earlier document, then the smaller start.
///
/// `window` and `stride` must be positive.
pub fn lexical_slice(
    ex: &QAExample,
    tmaps: &TokenMaps,
    window: usize,
    stride: usize,
    budget: usize,
) -> Result<SliceSet, SliceError> {
    assert!(window >= 1, "window must be positive");
    assert!(stride >= 1, "stride must be positive");

    let question_tokens: BTreeSet<String> = token_ranges(&ex.question)
        .into_iter()
        .map(|(s, e)| fold_case(char_slice(&ex.question, s, e)))
        .collect();

    // Token texts per document, in retrieval order.
    let mut doc_tokens: Vec<Vec<String>> = Vec::with_capacity(ex.documents.len());
    for doc in &ex.documents {
        let tmap = tmaps
            .get(&doc.doc_id)
            .ok_or_else(|| SliceError::MissingTokenMap(doc.doc_id.clone()))?;
        doc_tokens.push(
            tmap.tokens
                .iter()
                .map(|&(s, e)| fold_case(char_slice(&doc.text, s, e)))
                .collect(),
        );
    }

    // Question-term weights: 1 / (1 + document frequency).
    let doc_sets: Vec<BTreeSet<&str>> = doc_tokens
        .iter()
        .map(|toks| toks.iter().map(String::as_str).collect())
        .collect();
    let weights: Vec<(&str, f64)> = question_tokens
        .iter()
        .map(|q| {
            let df = doc_sets.iter().filter(|set| set.contains(q.as_str())).count();
            (q.as_str(), 1.0 / (1.0 + df as f64))
        })
        .collect();

    struct Candidate {
        score: f64,
        doc_pos: usize,
        start: usize,
        end: usize,
    }

    let mut candidates = Vec::new();
    for (doc_pos, toks) in doc_tokens.iter().enumerate() {
        let n = toks.len();
        let mut offset = 0;
        while offset < n {
            let end = (offset + window).min(n);
            let window_set: BTreeSet<&str> =
                toks[offset..end].iter().map(String::as_str).collect();
            let score: f64 = weights
                .iter()
                .filter(|(q, _)| window_set.contains(q))
                .map(|&(_, w)| w)
                .sum();
            candidates.push(Candidate {
                score,
                doc_pos,
                start: offset,
                end,
            });
            offset += stride;
        }
    }

    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.doc_pos.cmp(&b.doc_pos))
            .then(a.start.cmp(&b.start))
    });

    let mut selected = Vec::new();
    let mut total = 0usize;
    for cand in &candidates {
        let size = cand.end - cand.start;
        if total + size <= budget {
            total += size;
            selected.push(SpanIndex::new(
                ex.documents.docs()[cand.doc_pos].doc_id.clone(),
                cand.start,
                cand.end,
            ));
        }
    }

    // Merging in normalize can only shrink the total, so the budget holds.
    normalize(&selected, &ex.documents, tmaps, budget)
}

/// Recover a slice set from a model's free-form reply.
///
/// The reply may contain anything; the first JSON array of
/// `{"doc": ..., "start": ..., "end": ...}` objects found in it is used.
/// Spans naming unknown documents are dropped with a warning, out-of-range
/// indices are clipped, and a reply with no parseable triple array yields
/// an empty set plus a warning — never an abort, so sweeps keep running on
/// degraded model output.
pub fn parse_llm_slice_output(
    raw: &str,
    docs: &DocumentSet,
    tmaps: &TokenMaps,
    budget: usize,
) -> (SliceSet, Vec<SliceWarning>) {
    assert!(budget >= 1, "budget must be positive");

    let mut warnings = Vec::new();
    let Some(items) = first_triple_array(raw) else {
        warnings.push(SliceWarning::NoTripleArray);
        let empty = normalize(&[], docs, tmaps, budget).expect("empty input cannot fail");
        return (empty, warnings);
    };

    let mut spans = Vec::new();
    for item in &items {
        let Some((doc_id, start, end)) = as_triple(item) else {
            warnings.push(SliceWarning::MalformedElement(
                serde_json::to_string(item).unwrap_or_else(|_| "?".to_string()),
            ));
            continue;
        };
        if docs.get(doc_id).is_none() || !tmaps.contains_key(doc_id) {
            warnings.push(SliceWarning::UnknownDoc(doc_id.to_string()));
            continue;
        }
        spans.push(SpanIndex::new(doc_id, start, end));
    }

    let set = normalize(&spans, docs, tmaps, budget).expect("spans prevalidated against docs");
    (set, warnings)
}

/// First JSON array in `raw` that is empty or contains at least one triple
/// object. Arrays of other shapes are skipped so that e.g. a list of
/// scores earlier in the reply does not shadow the actual answer.
fn first_triple_array(raw: &str) -> Option<Vec<serde_json::Value>> {
    for (pos, _) in raw.match_indices('[') {
        let mut stream = serde_json::Deserializer::from_str(&raw[pos..])
            .into_iter::<serde_json::Value>();
        if let Some(Ok(serde_json::Value::Array(items))) = stream.next() {
            if items.is_empty() || items.iter().any(|item| as_triple(item).is_some()) {
                return Some(items);
            }
        }
    }
    None
}

fn as_triple(value: &serde_json::Value) -> Option<(&str, usize, usize)> {
    let obj = value.as_object()?;
    let doc = obj.get("doc")?.as_str()?;
    let start = obj.get("start")?.as_u64()?;
    let end = obj.get("end")?.as_u64()?;
    Some((
        doc,
        usize::try_from(start).unwrap_or(usize::MAX),
        usize::try_from(end).unwrap_or(usize::MAX),
    ))
}

fn fold_case(s: &str) -> String {
    s.chars().flat_map(char::to_lowercase).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SliceError {
    #[error("unknown doc_id `{0}` in span")]
    UnknownDoc(String),
    #[error("missing token map for doc `{0}`")]
    MissingTokenMap(String),
    #[error("oracle unavailable: example `{0}` has no gold_evidence")]
    OracleUnavailable(String),
}

/// Degraded-but-recoverable conditions while parsing model replies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SliceWarning {
    NoTripleArray,
    UnknownDoc(String),
    MalformedElement(String),
}

impl fmt::Display for SliceWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoTripleArray => write!(f, "no triple array found in reply"),
            Self::UnknownDoc(id) => write!(f, "unknown doc_id `{id}`; span dropped"),
            Self::MalformedElement(raw) => write!(f, "malformed span element {raw}; dropped"),
        }
    }
}
