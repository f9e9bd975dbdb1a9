//! Controlled retrieval traces: one gold segment among known distractors.
//!
//! A trace fixes retrieval success by construction — the gold-bearing
//! document is always present at a known position — so any accuracy drop
//! across noise levels is attributable to utilization, not retrieval.
//! Distractors are drawn from a caller-supplied pool (typically the
//! documents of other examples in the same corpus) after filtering out any
//! document that contains a gold answer, and every draw is a pure function
//! of the seed.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, DocumentSet, QAExample};
use crate::metrics::normalize_answer;
use crate::seeding::derive_seed;

/// A constructed context: `n_segments` documents of which exactly one —
/// at `gold_index` — carries the gold evidence. `seed` is the seed this
/// trace was built with, so it can be rebuilt standalone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyTrace {
    pub example_id: String,
    pub segments: Vec<Document>,
    pub gold_index: usize,
    pub n_segments: usize,
    pub seed: u64,
}

/// Where the gold segment goes in one concrete trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoldPlacement {
    Index(usize),
    Uniform,
}

/// A position specification that resolves against a noise level, so one
/// sweep entry like `middle` means something at every `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GoldPosition {
    First,
    Middle,
    Last,
    Index(usize),
    Uniform,
}

impl GoldPosition {
    /// Resolve to a concrete placement for a trace of `n` segments.
    /// `middle` is `floor((n - 1) / 2)`.
    pub fn resolve(self, n: usize) -> GoldPlacement {
        match self {
            Self::First => GoldPlacement::Index(0),
            Self::Middle => GoldPlacement::Index((n.max(1) - 1) / 2),
            Self::Last => GoldPlacement::Index(n.max(1) - 1),
            Self::Index(i) => GoldPlacement::Index(i),
            Self::Uniform => GoldPlacement::Uniform,
        }
    }
}

impl fmt::Display for GoldPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::First => write!(f, "first"),
            Self::Middle => write!(f, "middle"),
            Self::Last => write!(f, "last"),
            Self::Index(i) => write!(f, "{i}"),
            Self::Uniform => write!(f, "uniform"),
        }
    }
}

impl FromStr for GoldPosition {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, NoiseError> {
        match s {
            "first" => Ok(Self::First),
            "middle" => Ok(Self::Middle),
            "last" => Ok(Self::Last),
            "uniform" => Ok(Self::Uniform),
            other => other
                .parse::<usize>()
                .map(Self::Index)
                .map_err(|_| NoiseError::InvalidPosition(other.to_string())),
        }
    }
}

impl TryFrom<String> for GoldPosition {
    type Error = NoiseError;

    fn try_from(s: String) -> Result<Self, NoiseError> {
        s.parse()
    }
}

impl From<GoldPosition> for String {
    fn from(pos: GoldPosition) -> String {
        let mut s = String::new();
        fmt::write(&mut s, format_args!("{pos}")).expect("formatting cannot fail");
        s
    }
}

/// Build one trace: the example's gold segment plus `n_segments - 1` clean
/// distractors sampled without replacement from `pool`.
///
/// The generator is seeded by `(seed, example_id)`, and the distractor
/// draw happens before the position draw, so identical inputs always
/// produce the identical trace. Pool documents are skipped if their id
/// collides with the gold document or an earlier pool entry, or if they
/// contain any normalized gold answer.
pub fn build_trace(
    ex: &QAExample,
    pool: &[Document],
    n_segments: usize,
    placement: GoldPlacement,
    seed: u64,
) -> Result<NoisyTrace, NoiseError> {
    assert!(n_segments >= 1, "a trace needs at least the gold segment");

    if let GoldPlacement::Index(i) = placement {
        if i >= n_segments {
            return Err(NoiseError::GoldPositionOutOfRange {
                index: i,
                n_segments,
            });
        }
    }

    let answers: Vec<String> = ex
        .gold_answers
        .iter()
        .map(|a| normalize_answer(a))
        .filter(|a| !a.is_empty())
        .collect();

    let gold = gold_document(ex, &answers)?;

    let mut seen: BTreeSet<&str> = BTreeSet::new();
    seen.insert(&gold.doc_id);
    let clean: Vec<&Document> = pool
        .iter()
        .filter(|doc| {
            if !seen.insert(&doc.doc_id) {
                return false;
            }
            let text = normalize_answer(&doc.text);
            !answers.iter().any(|answer| text.contains(answer.as_str()))
        })
        .collect();

    let needed = n_segments - 1;
    if clean.len() < needed {
        return Err(NoiseError::InsufficientDistractors {
            example_id: ex.example_id.clone(),
            required: needed,
            available: clean.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[ex.example_id.as_bytes()]));
    let picks = rand::seq::index::sample(&mut rng, clean.len(), needed);
    let gold_index = match placement {
        GoldPlacement::Index(i) => i,
        GoldPlacement::Uniform => rng.random_range(0..n_segments),
    };

    let mut segments = Vec::with_capacity(n_segments);
    let mut distractors = picks.iter().map(|i| clean[i].clone());
    for position in 0..n_segments {
        if position == gold_index {
            segments.push(gold.clone());
        } else {
            segments.push(distractors.next().expect("exactly n-1 distractors drawn"));
        }
    }

    Ok(NoisyTrace {
        example_id: ex.example_id.clone(),
        segments,
        gold_index,
        n_segments,
        seed,
    })
}

/// One trace per `(level, position)` pair, in cross-product order, each
/// built with a sub-seed derived from `(seed, level, position)`. A trace
/// can be rebuilt standalone from the seed it records.
pub fn sweep_noise(
    ex: &QAExample,
    pool: &[Document],
    levels: &[usize],
    positions: &[GoldPosition],
    seed: u64,
) -> Result<Vec<NoisyTrace>, NoiseError> {
    let mut traces = Vec::with_capacity(levels.len() * positions.len());
    for &level in levels {
        for &position in positions {
            let sub_seed = sweep_sub_seed(seed, level, position);
            traces.push(build_trace(
                ex,
                pool,
                level,
                position.resolve(level),
                sub_seed,
            )?);
        }
    }
    Ok(traces)
}

/// The sub-seed [`sweep_noise`] uses for one `(level, position)` cell.
pub fn sweep_sub_seed(seed: u64, level: usize, position: GoldPosition) -> u64 {
    derive_seed(
        seed,
        &[
            b"sweep",
            &(level as u64).to_le_bytes(),
            String::from(position).as_bytes(),
        ],
    )
}

/// View a trace as a QA example whose document set is the segment list,
/// suitable for the corpus line format. Evidence annotations are kept only
/// for documents that made it into the trace.
pub fn to_example(trace: &NoisyTrace, source: &QAExample) -> QAExample {
    let ids: BTreeSet<&str> = trace.segments.iter().map(|d| d.doc_id.as_str()).collect();
    let gold_evidence = source.gold_evidence.as_ref().and_then(|evidence| {
        let kept: Vec<_> = evidence
            .iter()
            .filter(|span| ids.contains(span.doc_id.as_str()))
            .cloned()
            .collect();
        if kept.is_empty() {
            None
        } else {
            Some(kept)
        }
    });
    QAExample {
        example_id: source.example_id.clone(),
        question: source.question.clone(),
        gold_answers: source.gold_answers.clone(),
        gold_evidence,
        documents: DocumentSet::new(trace.segments.clone())
            .expect("trace segments have unique ids by construction"),
    }
}

fn gold_document<'a>(
    ex: &'a QAExample,
    normalized_answers: &[String],
) -> Result<&'a Document, NoiseError> {
    if let Some(evidence) = ex.gold_evidence.as_ref().filter(|e| !e.is_empty()) {
        if let Some(doc) = ex.documents.get(&evidence[0].doc_id) {
            return Ok(doc);
        }
    }
    ex.documents
        .iter()
        .find(|doc| {
            let text = normalize_answer(&doc.text);
            normalized_answers
                .iter()
                .any(|answer| text.contains(answer.as_str()))
        })
        .ok_or_else(|| NoiseError::NoGoldSegment {
            example_id: ex.example_id.clone(),
        })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NoiseError {
    #[error("example `{example_id}` has no gold-bearing document")]
    NoGoldSegment { example_id: String },
    #[error(
        "insufficient clean distractors for `{example_id}`: required {required}, available {available}"
    )]
    InsufficientDistractors {
        example_id: String,
        required: usize,
        available: usize,
    },
    #[error("gold position {index} out of range for {n_segments} segments")]
    GoldPositionOutOfRange { index: usize, n_segments: usize },
    #[error("invalid gold position `{0}` (expected first|middle|last|uniform|<index>)")]
    InvalidPosition(String),
}
