//! Deterministic materialization of slices into a reasoning context.
//!
//! This is the zero-hallucination stage: every character handed to the
//! reader is a verbatim substring of a retrieved document, because slices
//! are resolved through the offset-preserving token maps and unselected
//! tokens are physically removed rather than down-weighted.
//!
//! The rendered layout is a stable external format:
//! segments are separated by one blank line, and when source tags are
//! requested each segment is immediately preceded by its own line
//! `[Source: Doc <doc_id>]`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::DocumentSet;
use crate::slicer::SliceSet;
use crate::tokenizer::{detokenize_span, TokenError, TokenMaps};

/// One materialized slice: its address and its verbatim text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// The hard-filtered evidence context.
///
/// `rendered` is the untagged layout; [`render_context`] re-renders with
/// or without source tags. `total_tokens` is the sum of span widths, which
/// can only shrink relative to the unfiltered documents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlicedContext {
    pub segments: Vec<Segment>,
    pub rendered: String,
    pub total_tokens: usize,
}

impl SlicedContext {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Extract every slice verbatim, in normalized order.
///
/// `slices` must be normalized (see [`crate::slicer::normalize`]); passing
/// an unnormalized set is an error rather than a silent re-normalization,
/// so callers cannot accidentally skip clipping and budget enforcement.
pub fn parse_slices(
    docs: &DocumentSet,
    tmaps: &TokenMaps,
    slices: &SliceSet,
) -> Result<SlicedContext, HardFilterError> {
    if !slices.normalized {
        return Err(HardFilterError::NotNormalized);
    }

    let mut segments = Vec::with_capacity(slices.spans.len());
    let mut total_tokens = 0usize;
    for span in &slices.spans {
        let doc = docs
            .get(&span.doc_id)
            .ok_or_else(|| HardFilterError::UnknownDoc(span.doc_id.clone()))?;
        let tmap = tmaps
            .get(&span.doc_id)
            .ok_or_else(|| HardFilterError::MissingTokenMap(span.doc_id.clone()))?;
        let text = detokenize_span(doc, tmap, span.start, span.end)?;
        total_tokens += span.end - span.start;
        segments.push(Segment {
            doc_id: span.doc_id.clone(),
            start: span.start,
            end: span.end,
            text: text.to_string(),
        });
    }

    let rendered = join_segments(&segments, false);
    Ok(SlicedContext {
        segments,
        rendered,
        total_tokens,
    })
}

/// Render the context in the stable layout, optionally tagging each
/// segment with its source document.
pub fn render_context(ctx: &SlicedContext, tag_sources: bool) -> String {
    join_segments(&ctx.segments, tag_sources)
}

fn join_segments(segments: &[Segment], tag_sources: bool) -> String {
    let mut out = String::new();
    for (i, segment) in segments.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        if tag_sources {
            out.push_str("[Source: Doc ");
            out.push_str(&segment.doc_id);
            out.push_str("]\n");
        }
        out.push_str(&segment.text);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HardFilterError {
    #[error("normalize first")]
    NotNormalized,
    #[error("unknown doc_id `{0}`")]
    UnknownDoc(String),
    #[error("missing token map for doc `{0}`")]
    MissingTokenMap(String),
    #[error(transparent)]
    Token(#[from] TokenError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::slicer::{normalize, SpanIndex};
    use crate::tokenizer::tokenize_set;
    use alloc::vec;

    fn docs(texts: &[(&str, &str)]) -> DocumentSet {
        DocumentSet::new(
            texts
                .iter()
                .map(|&(id, text)| Document::new(id, text))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_slice_set_renders_empty() {
        let d = docs(&[("d1", "gold evidence.")]);
        let tmaps = tokenize_set(&d);
        let slices = normalize(&[], &d, &tmaps, 10).unwrap();
        let ctx = parse_slices(&d, &tmaps, &slices).unwrap();
        assert!(ctx.is_empty());
        assert_eq!(ctx.rendered, "");
        assert_eq!(ctx.total_tokens, 0);
        assert_eq!(render_context(&ctx, true), "");
    }

    #[test]
    fn full_document_span_is_identity_extraction() {
        let d = docs(&[("d1", "gold evidence.")]);
        let tmaps = tokenize_set(&d);
        let slices = normalize(&[SpanIndex::new("d1", 0, 3)], &d, &tmaps, 10).unwrap();
        let ctx = parse_slices(&d, &tmaps, &slices).unwrap();
        assert_eq!(ctx.segments.len(), 1);
        assert_eq!(ctx.segments[0].text, "gold evidence.");
        assert_eq!(ctx.total_tokens, 3);
    }

    #[test]
    fn tagged_render_layout_is_exact() {
        let d = docs(&[("d1", "gold evidence.")]);
        let tmaps = tokenize_set(&d);
        let slices = normalize(&[SpanIndex::new("d1", 0, 3)], &d, &tmaps, 10).unwrap();
        let ctx = parse_slices(&d, &tmaps, &slices).unwrap();
        assert_eq!(
            render_context(&ctx, true),
            "[Source: Doc d1]\ngold evidence."
        );
    }

    #[test]
    fn untagged_segments_joined_by_one_blank_line() {
        let d = docs(&[("d1", "first part"), ("d2", "second part")]);
        let tmaps = tokenize_set(&d);
        let slices = normalize(
            &[SpanIndex::new("d1", 0, 2), SpanIndex::new("d2", 0, 2)],
            &d,
            &tmaps,
            10,
        )
        .unwrap();
        let ctx = parse_slices(&d, &tmaps, &slices).unwrap();
        assert_eq!(render_context(&ctx, false), "first part\n\nsecond part");
        assert_eq!(
            render_context(&ctx, true),
            "[Source: Doc d1]\nfirst part\n\n[Source: Doc d2]\nsecond part"
        );
    }

    #[test]
    fn segments_follow_normalized_document_order() {
        let d = docs(&[("d1", "alpha beta"), ("d2", "gamma delta")]);
        let tmaps = tokenize_set(&d);
        // Spans given d2-first; normalize reorders to document order.
        let slices = normalize(
            &[SpanIndex::new("d2", 0, 1), SpanIndex::new("d1", 0, 1)],
            &d,
            &tmaps,
            10,
        )
        .unwrap();
        let ctx = parse_slices(&d, &tmaps, &slices).unwrap();
        assert_eq!(ctx.segments[0].doc_id, "d1");
        assert_eq!(ctx.segments[1].doc_id, "d2");
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let d = docs(&[("d1", "alpha beta")]);
        let tmaps = tokenize_set(&d);
        let raw = SliceSet::raw(vec![SpanIndex::new("d1", 0, 1)], 10);
        assert_eq!(
            parse_slices(&d, &tmaps, &raw),
            Err(HardFilterError::NotNormalized)
        );
    }

    #[test]
    fn proper_subset_has_strictly_fewer_tokens() {
        let d = docs(&[("d1", "one two three four five")]);
        let tmaps = tokenize_set(&d);
        let all = normalize(&[SpanIndex::new("d1", 0, 5)], &d, &tmaps, 100).unwrap();
        let subset = normalize(&[SpanIndex::new("d1", 1, 3)], &d, &tmaps, 100).unwrap();
        let full_tokens: usize = tmaps.values().map(|t| t.len()).sum();
        let ctx_all = parse_slices(&d, &tmaps, &all).unwrap();
        let ctx_subset = parse_slices(&d, &tmaps, &subset).unwrap();
        assert!(ctx_all.total_tokens <= full_tokens);
        assert!(ctx_subset.total_tokens < ctx_all.total_tokens);
    }

    #[test]
    fn rendering_is_deterministic() {
        let d = docs(&[("d1", "x y z w"), ("d2", "p q r")]);
        let tmaps = tokenize_set(&d);
        let slices = normalize(
            &[SpanIndex::new("d1", 1, 3), SpanIndex::new("d2", 0, 2)],
            &d,
            &tmaps,
            10,
        )
        .unwrap();
        let a = parse_slices(&d, &tmaps, &slices).unwrap();
        let b = parse_slices(&d, &tmaps, &slices).unwrap();
        assert_eq!(a, b);
        assert_eq!(render_context(&a, true), render_context(&b, true));
    }
}
