//! Offset-preserving tokenization.
//!
//! Token-index slices must map back to verbatim character spans, so the
//! scheme is fixed and self-contained rather than borrowed from any model
//! vocabulary: a maximal run of alphanumeric scalars is one token, every
//! other non-whitespace scalar is a single-character token, and whitespace
//! is never tokenized. Indices are 0-based and half-open, and all offsets
//! count Unicode scalar values.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, DocumentSet};

/// Character ranges, one per token, over a document's text.
///
/// Ranges are strictly increasing, non-overlapping, nonempty, and lie
/// within the text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenMap {
    pub doc_id: String,
    pub tokens: Vec<(usize, usize)>,
}

impl TokenMap {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Character range covered by the token span `[start, end)`: from the
    /// first token's start to the last token's end, interior whitespace
    /// included.
    pub fn char_range(&self, start: usize, end: usize) -> Result<(usize, usize), TokenError> {
        if start >= end {
            return Err(TokenError::EmptySpan { start, end });
        }
        if end > self.tokens.len() {
            return Err(TokenError::OutOfRange {
                index: end,
                count: self.tokens.len(),
            });
        }
        Ok((self.tokens[start].0, self.tokens[end - 1].1))
    }
}

/// Per-document token maps, keyed by doc_id.
pub type TokenMaps = BTreeMap<String, TokenMap>;

/// Tokenize one document. Deterministic: the same text always yields the
/// same map.
pub fn tokenize(doc: &Document) -> TokenMap {
    TokenMap {
        doc_id: doc.doc_id.clone(),
        tokens: token_ranges(&doc.text),
    }
}

/// Tokenize every document in a set.
pub fn tokenize_set(docs: &DocumentSet) -> TokenMaps {
    docs.iter()
        .map(|doc| (doc.doc_id.clone(), tokenize(doc)))
        .collect()
}

/// Character ranges of the tokens in `text`.
pub fn token_ranges(text: &str) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let mut run_start: Option<usize> = None;
    let mut chars = 0usize;
    for (ci, ch) in text.chars().enumerate() {
        chars = ci + 1;
        if ch.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(ci);
            }
        } else {
            if let Some(start) = run_start.take() {
                ranges.push((start, ci));
            }
            if !ch.is_whitespace() {
                ranges.push((ci, ci + 1));
            }
        }
    }
    if let Some(start) = run_start {
        ranges.push((start, chars));
    }
    ranges
}

/// The verbatim text of the token span `[start, end)`, interior whitespace
/// included. The returned slice borrows from `doc.text`.
pub fn detokenize_span<'a>(
    doc: &'a Document,
    tmap: &TokenMap,
    start: usize,
    end: usize,
) -> Result<&'a str, TokenError> {
    if tmap.doc_id != doc.doc_id {
        return Err(TokenError::DocMismatch {
            map: tmap.doc_id.clone(),
            doc: doc.doc_id.clone(),
        });
    }
    let (cs, ce) = tmap.char_range(start, end)?;
    Ok(char_slice(&doc.text, cs, ce))
}

/// Slice `text` by scalar-value offsets. Offsets past the end clamp to the
/// end of the text.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    if start >= end {
        return "";
    }
    let mut byte_start = text.len();
    let mut byte_end = text.len();
    for (ci, (bi, _)) in text.char_indices().enumerate() {
        if ci == start {
            byte_start = bi;
        }
        if ci == end {
            byte_end = bi;
            break;
        }
    }
    &text[byte_start..byte_end]
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenError {
    #[error("token map is for doc `{map}` but document is `{doc}`")]
    DocMismatch { map: String, doc: String },
    #[error("empty token span {start}..{end}")]
    EmptySpan { start: usize, end: usize },
    #[error("token index {index} out of range for {count} tokens")]
    OutOfRange { index: usize, count: usize },
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn doc(text: &str) -> Document {
        Document::new("d1", text)
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(tokenize(&doc("")).is_empty());
    }

    #[test]
    fn alphanumeric_runs_and_single_char_tokens() {
        // Hand-applied rule: "gold" and "evidence" are alphanumeric runs,
        // "." is its own token.
        let d = doc("gold evidence.");
        let tmap = tokenize(&d);
        assert_eq!(tmap.tokens, vec![(0, 4), (5, 13), (13, 14)]);
        assert_eq!(detokenize_span(&d, &tmap, 0, 1).unwrap(), "gold");
        assert_eq!(detokenize_span(&d, &tmap, 1, 2).unwrap(), "evidence");
        assert_eq!(detokenize_span(&d, &tmap, 2, 3).unwrap(), ".");
    }

    #[test]
    fn whitespace_is_never_tokenized() {
        let tmap = tokenize(&doc("  a  "));
        assert_eq!(tmap.tokens, vec![(2, 3)]);
    }

    #[test]
    fn full_span_is_identity_up_to_outer_whitespace() {
        let d = doc("gold evidence.");
        let tmap = tokenize(&d);
        assert_eq!(
            detokenize_span(&d, &tmap, 0, tmap.len()).unwrap(),
            "gold evidence."
        );
    }

    #[test]
    fn interior_whitespace_preserved() {
        let d = doc("a   b");
        let tmap = tokenize(&d);
        assert_eq!(detokenize_span(&d, &tmap, 0, 2).unwrap(), "a   b");
    }

    #[test]
    fn empty_span_is_an_error() {
        let d = doc("gold evidence.");
        let tmap = tokenize(&d);
        assert_eq!(
            detokenize_span(&d, &tmap, 1, 1),
            Err(TokenError::EmptySpan { start: 1, end: 1 })
        );
    }

    #[test]
    fn out_of_range_names_offending_index() {
        let d = doc("gold evidence.");
        let tmap = tokenize(&d);
        assert_eq!(
            detokenize_span(&d, &tmap, 0, 9),
            Err(TokenError::OutOfRange { index: 9, count: 3 })
        );
    }

    #[test]
    fn mismatched_map_rejected() {
        let d1 = doc("gold");
        let d2 = Document::new("d2", "gold");
        let tmap = tokenize(&d1);
        assert_eq!(
            detokenize_span(&d2, &tmap, 0, 1),
            Err(TokenError::DocMismatch {
                map: "d1".to_string(),
                doc: "d2".to_string(),
            })
        );
    }

    #[test]
    fn offsets_are_scalar_values() {
        // 'é' is one scalar but two bytes; ranges must count scalars.
        let d = doc("café au lait");
        let tmap = tokenize(&d);
        assert_eq!(tmap.tokens, vec![(0, 4), (5, 7), (8, 12)]);
        assert_eq!(detokenize_span(&d, &tmap, 0, 1).unwrap(), "café");
    }

    #[test]
    fn mixed_punctuation_runs() {
        let d = doc("x+1=2!");
        let tmap = tokenize(&d);
        assert_eq!(
            tmap.tokens,
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]
        );
    }
}
