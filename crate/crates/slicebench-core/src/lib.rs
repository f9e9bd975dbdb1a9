//! Core primitives for index-based evidence slicing and noise-robustness
//! evaluation of retrieval-augmented question answering.
//!
//! The crate is organized around one data flow: retrieved documents are
//! tokenized with offset-preserving maps ([`tokenizer`]), a slicer proposes
//! token-index spans ([`slicer`]), a deterministic hard filter materializes
//! those spans verbatim into a reasoning context ([`hardfilter`]), and the
//! outcome is judged and decomposed into retrieval and utilization terms
//! ([`metrics`]). [`noise`] builds controlled traces with one gold segment
//! among known distractors, and [`dilution`] provides the closed-form and
//! Monte Carlo capacity model those traces are measured against.
//!
//! Everything here is pure computation over owned data: no IO, no global
//! state, and all randomness comes from caller-provided seeds via
//! [`seeding`]. The crate is `no_std`-compatible (with `alloc`); disable
//! default features to drop `std`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod corpus;
pub mod dilution;
pub mod hardfilter;
pub mod metrics;
pub mod noise;
pub mod seeding;
pub mod slicer;
pub mod tokenizer;

pub use corpus::{Document, DocumentSet, EvidenceSpan, QAExample};
pub use hardfilter::SlicedContext;
pub use metrics::{DecompositionReport, JudgedResult};
pub use noise::NoisyTrace;
pub use slicer::{SliceSet, SpanIndex};
pub use tokenizer::TokenMap;
