//! Answer scoring and the retrieval/utilization decomposition.
//!
//! Correctness is decomposed into two observable events per example:
//! `retrieved` (the context contains gold evidence) and `utilized` (the
//! answer is correct given that it was there). Utilization is defined
//! operationally as `retrieved && correct`, which makes the aggregate
//! identity `P(correct, retrieved) = P(retrieved) * P(utilized |
//! retrieved)` exact counting arithmetic rather than an approximation.
//! Correct answers without retrieved evidence (parametric knowledge) are
//! reported separately as overall correctness.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentSet, QAExample};
use crate::slicer::SliceSet;
use crate::tokenizer::TokenMaps;

/// Canonical answer form: case-folded, punctuation removed, articles
/// ("a", "an", "the") dropped as whole words, whitespace collapsed.
///
/// "Punctuation" here is any scalar that is neither alphanumeric nor
/// whitespace, so the rule needs no Unicode tables and is stable across
/// platforms.
pub fn normalize_answer(s: &str) -> String {
    let folded: String = s
        .chars()
        .flat_map(char::to_lowercase)
        .map(|ch| {
            if ch.is_alphanumeric() || ch.is_whitespace() {
                ch
            } else {
                ' '
            }
        })
        .collect();
    let mut out = String::with_capacity(folded.len());
    for word in folded.split_whitespace() {
        if matches!(word, "a" | "an" | "the") {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Strict exact match after [`normalize_answer`] on both sides.
pub fn exact_match(pred: &str, golds: &[String]) -> bool {
    let pred = normalize_answer(pred);
    golds.iter().any(|gold| normalize_answer(gold) == pred)
}

/// Bag-of-tokens F1, maximized over the gold answers.
///
/// Tokens are case-folded with punctuation stripped but — unlike
/// [`normalize_answer`] — articles are kept, so "a b" vs "b c" scores
/// precision 1/2 and recall 1/2. Both sides empty is a perfect match;
/// exactly one side empty scores zero.
pub fn token_f1(pred: &str, golds: &[String]) -> f64 {
    let pred_counts = token_bag(pred);
    golds
        .iter()
        .map(|gold| bag_f1(&pred_counts, &token_bag(gold)))
        .fold(0.0, f64::max)
}

fn token_bag(s: &str) -> BTreeMap<String, usize> {
    let folded: String = s
        .chars()
        .flat_map(char::to_lowercase)
        .map(|ch| {
            if ch.is_alphanumeric() || ch.is_whitespace() {
                ch
            } else {
                ' '
            }
        })
        .collect();
    let mut bag = BTreeMap::new();
    for word in folded.split_whitespace() {
        *bag.entry(word.to_string()).or_insert(0) += 1;
    }
    bag
}

fn bag_f1(pred: &BTreeMap<String, usize>, gold: &BTreeMap<String, usize>) -> f64 {
    let pred_total: usize = pred.values().sum();
    let gold_total: usize = gold.values().sum();
    if pred_total == 0 && gold_total == 0 {
        return 1.0;
    }
    if pred_total == 0 || gold_total == 0 {
        return 0.0;
    }
    let common: usize = pred
        .iter()
        .filter_map(|(tok, &count)| gold.get(tok).map(|&g| count.min(g)))
        .sum();
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred_total as f64;
    let recall = common as f64 / gold_total as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Did the context contain gold evidence?
///
/// With span annotations this asks whether any annotated document is in
/// the context; without them it falls back to normalized answer-string
/// containment in any document's text. Answers that normalize to the
/// empty string never match.
pub fn detect_retrieved(ex: &QAExample, context_docs: &DocumentSet) -> bool {
    if let Some(evidence) = &ex.gold_evidence {
        return evidence
            .iter()
            .any(|span| context_docs.get(&span.doc_id).is_some());
    }
    let answers: Vec<String> = ex
        .gold_answers
        .iter()
        .map(|a| normalize_answer(a))
        .filter(|a| !a.is_empty())
        .collect();
    if answers.is_empty() {
        return false;
    }
    context_docs.iter().any(|doc| {
        let text = normalize_answer(&doc.text);
        answers.iter().any(|answer| text.contains(answer.as_str()))
    })
}

/// Did the selected slices hit the gold evidence?
///
/// A hit is either a normalized gold answer contained in the sliced text,
/// or at least one character of overlap between a slice and an annotated
/// evidence range. The per-example booleans average to the empirical
/// selection recall of a slicer.
pub fn span_recall(
    slices: &SliceSet,
    ex: &QAExample,
    tmaps: &TokenMaps,
) -> Result<bool, MetricsError> {
    let answers: Vec<String> = ex
        .gold_answers
        .iter()
        .map(|a| normalize_answer(a))
        .filter(|a| !a.is_empty())
        .collect();
    if ex.gold_evidence.is_none() && answers.is_empty() {
        return Err(MetricsError::NoGoldInfo(ex.example_id.clone()));
    }

    // Character-overlap disjunct against annotated evidence.
    if let Some(evidence) = &ex.gold_evidence {
        for span in &slices.spans {
            let Some(tmap) = tmaps.get(&span.doc_id) else {
                continue;
            };
            let Ok((cs, ce)) = tmap.char_range(span.start, span.end) else {
                continue;
            };
            for gold in evidence {
                if gold.doc_id == span.doc_id && cs.max(gold.start) < ce.min(gold.end) {
                    return Ok(true);
                }
            }
        }
    }

    // Answer-containment disjunct against the sliced text.
    if !answers.is_empty() {
        let mut sliced_text = String::new();
        for span in &slices.spans {
            let (Some(doc), Some(tmap)) = (ex.documents.get(&span.doc_id), tmaps.get(&span.doc_id))
            else {
                continue;
            };
            if let Ok(text) = crate::tokenizer::detokenize_span(doc, tmap, span.start, span.end) {
                if !sliced_text.is_empty() {
                    sliced_text.push(' ');
                }
                sliced_text.push_str(text);
            }
        }
        let normalized = normalize_answer(&sliced_text);
        if answers.iter().any(|a| normalized.contains(a.as_str())) {
            return Ok(true);
        }
    }

    Ok(false)
}

/// One judged example.
///
/// `utilized` is derived as `correct && retrieved` by [`JudgedResult::new`];
/// constructing it any other way can break the exact counting identity in
/// [`decompose`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgedResult {
    pub example_id: String,
    pub predicted_answer: String,
    pub correct: bool,
    pub retrieved: bool,
    pub utilized: bool,
    pub input_tokens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_recall_hit: Option<bool>,
}

impl JudgedResult {
    pub fn new(
        example_id: impl Into<String>,
        predicted_answer: impl Into<String>,
        correct: bool,
        retrieved: bool,
        input_tokens: usize,
        slice_recall_hit: Option<bool>,
    ) -> Self {
        Self {
            example_id: example_id.into(),
            predicted_answer: predicted_answer.into(),
            correct,
            retrieved,
            utilized: correct && retrieved,
            input_tokens,
            slice_recall_hit,
        }
    }
}

/// Aggregate decomposition over a set of judged results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub p_retrieved: f64,
    pub p_util_given_retrieved: f64,
    pub p_correct_joint: f64,
    pub p_correct_overall: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_recall_q: Option<f64>,
    pub mean_input_tokens: f64,
    pub n: usize,
}

/// Fold judged results into counting ratios.
///
/// `p_correct_joint` counts examples that are both correct and retrieved,
/// so `p_correct_joint = p_retrieved * p_util_given_retrieved` holds
/// exactly (up to float representation) for results built with
/// [`JudgedResult::new`]. With zero retrieved examples the conditional
/// term is defined as zero.
pub fn decompose(results: &[JudgedResult]) -> Result<DecompositionReport, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyResults);
    }
    let n = results.len();
    let retrieved = results.iter().filter(|r| r.retrieved).count();
    let utilized = results.iter().filter(|r| r.utilized).count();
    let joint = results.iter().filter(|r| r.correct && r.retrieved).count();
    let correct = results.iter().filter(|r| r.correct).count();
    let token_sum: usize = results.iter().map(|r| r.input_tokens).sum();

    let hits: Vec<bool> = results.iter().filter_map(|r| r.slice_recall_hit).collect();
    let span_recall_q = if hits.is_empty() {
        None
    } else {
        Some(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
    };

    Ok(DecompositionReport {
        p_retrieved: retrieved as f64 / n as f64,
        p_util_given_retrieved: if retrieved == 0 {
            0.0
        } else {
            utilized as f64 / retrieved as f64
        },
        p_correct_joint: joint as f64 / n as f64,
        p_correct_overall: correct as f64 / n as f64,
        span_recall_q,
        mean_input_tokens: token_sum as f64 / n as f64,
        n,
    })
}

/// `(treatment - baseline) / baseline`; undefined for a zero baseline.
pub fn relative_improvement(baseline: f64, treatment: f64) -> Result<f64, MetricsError> {
    if baseline <= 0.0 {
        return Err(MetricsError::UndefinedRelativeGain);
    }
    Ok((treatment - baseline) / baseline)
}

/// Sample linear (Pearson) correlation between slicer recall estimates and
/// downstream accuracy.
pub fn recall_accuracy_correlation(points: &[(f64, f64)]) -> Result<f64, MetricsError> {
    if points.len() < 3 {
        return Err(MetricsError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::DegenerateVariance);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no gold information available for example `{0}`")]
    NoGoldInfo(String),
    #[error("cannot decompose an empty result set")]
    EmptyResults,
    #[error("undefined relative gain: baseline is zero")]
    UndefinedRelativeGain,
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate variance: correlation undefined")]
    DegenerateVariance,
}
