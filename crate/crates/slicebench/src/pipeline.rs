//! End-to-end orchestration: trace construction, slicing, hard filtering,
//! reading, judging, and aggregation under a declarative config.
//!
//! Per-example failures become error records and the run keeps going; a
//! run aborts only on config or corpus errors. With the mock reader every
//! byte of `results.jsonl` is a pure function of (config, corpus, seed):
//! examples are sub-seeded individually, so parallel and sequential runs
//! produce identical records.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use slicebench_core::corpus::{Document, QAExample};
use slicebench_core::hardfilter::{parse_slices, render_context, SlicedContext};
use slicebench_core::metrics::{
    decompose, detect_retrieved, exact_match, span_recall, token_f1, DecompositionReport,
    JudgedResult,
};
use slicebench_core::noise::{build_trace, sweep_sub_seed, to_example, NoisyTrace};
use slicebench_core::seeding::derive_seed_str;
use slicebench_core::slicer::{lexical_slice, oracle_slice, parse_llm_slice_output, SliceSet};
use slicebench_core::tokenizer::{tokenize_set, TokenMaps};

use crate::config::{ConfigError, PipelineMode, ReaderKind, RunConfig, SlicerKind};
use crate::dataset::{load_corpus, CorpusLoadError};
use crate::llm::{complete, mock_read, CompletionRequest, MockReaderParams, WRONG_ANSWER};
use crate::prompt::{
    document_block, PromptTemplate, DEFAULT_READER_TEMPLATE, DEFAULT_SLICER_TEMPLATE,
};

/// One line of `results.jsonl`. Judgment fields are absent on error rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub example_id: String,
    pub mode: PipelineMode,
    pub n_segments: usize,
    pub gold_position: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieved: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilized: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_tokens: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_recall_hit: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Aggregates for one (mode, noise level, gold position) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingReport {
    pub mode: PipelineMode,
    pub n_segments: usize,
    pub gold_position: String,
    pub em: f64,
    pub f1: f64,
    pub n_errors: usize,
    /// Absent when every example in the cell failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionReport>,
}

/// Everything needed to reproduce and interpret a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: RunConfig,
    pub corpus_sha256: String,
    pub seed: u64,
    pub n_examples: usize,
    pub n_errors: usize,
    pub duration_secs: f64,
    pub results_file: String,
    pub settings: Vec<SettingReport>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub manifest: RunManifest,
    pub records: Vec<ResultRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusLoadError),
    #[error("corpus precheck failed: {0}")]
    Precheck(String),
    #[error("failed to write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Execute a run and write `results.jsonl`, `manifest.json`, and
/// `report.txt` under the config's output directory.
pub fn run(config: &RunConfig) -> Result<RunOutput, RunError> {
    for warning in config.validate()? {
        log::warn!("{warning}");
    }

    let started = Instant::now();
    let corpus_bytes = std::fs::read(&config.corpus).map_err(|source| {
        RunError::Corpus(CorpusLoadError::Io {
            path: config.corpus.display().to_string(),
            source,
        })
    })?;
    let corpus_sha256 = hex_digest(&corpus_bytes);
    let examples = load_corpus(&config.corpus)?;

    if config.mode == PipelineMode::Slice
        && config.slicer == SlicerKind::Oracle
        && !examples.is_empty()
        && examples.iter().all(|ex| ex.gold_evidence.is_none())
    {
        return Err(RunError::Precheck(
            "oracle slicer requested but no example carries gold_evidence".to_string(),
        ));
    }

    let remote = RemoteContext::from_config(config)?;

    // Distractor pool per example: the documents of every other example.
    let pools: Vec<Vec<Document>> = examples
        .iter()
        .enumerate()
        .map(|(i, _)| {
            examples
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .flat_map(|(_, other)| other.documents.iter().cloned())
                .collect()
        })
        .collect();

    let remote_in_use = config.reader == ReaderKind::Remote
        || (config.mode == PipelineMode::Slice && config.slicer == SlicerKind::Llm);
    let workers = if remote_in_use {
        config.workers.min(config.max_in_flight)
    } else {
        config.workers
    };
    let thread_pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool construction");

    let mut records = Vec::with_capacity(
        examples.len() * config.noise_levels.len() * config.gold_positions.len(),
    );
    let mut settings = Vec::new();

    for &level in &config.noise_levels {
        for &position in &config.gold_positions {
            let trace_seed = sweep_sub_seed(config.seed, level, position);
            let reader_seed = derive_seed_str(
                config.seed,
                &["reader", &level.to_string(), &String::from(position)],
            );

            let outcomes: Vec<(ResultRecord, Option<(JudgedResult, f64)>)> =
                thread_pool.install(|| {
                    examples
                        .par_iter()
                        .zip(pools.par_iter())
                        .map(|(ex, pool)| {
                            judge_example(
                                ex,
                                pool,
                                level,
                                position,
                                trace_seed,
                                reader_seed,
                                config,
                                remote.as_ref(),
                            )
                        })
                        .collect()
                });

            if !outcomes.is_empty() {
                settings.push(aggregate(
                    config.mode,
                    level,
                    String::from(position),
                    &outcomes,
                ));
            }
            records.extend(outcomes.into_iter().map(|(record, _)| record));
        }
    }

    let n_errors = records.iter().filter(|r| r.error.is_some()).count();
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        corpus_sha256,
        seed: config.seed,
        n_examples: examples.len(),
        n_errors,
        duration_secs: started.elapsed().as_secs_f64(),
        results_file: "results.jsonl".to_string(),
        settings,
    };

    write_outputs(&config.output_dir, &manifest, &records)?;
    Ok(RunOutput { manifest, records })
}

fn aggregate(
    mode: PipelineMode,
    level: usize,
    gold_position: String,
    outcomes: &[(ResultRecord, Option<(JudgedResult, f64)>)],
) -> SettingReport {
    let judged: Vec<JudgedResult> = outcomes
        .iter()
        .filter_map(|(_, j)| j.as_ref().map(|(r, _)| r.clone()))
        .collect();
    let f1s: Vec<f64> = outcomes
        .iter()
        .filter_map(|(_, j)| j.as_ref().map(|&(_, f1)| f1))
        .collect();
    let n_errors = outcomes.len() - judged.len();
    let em = if judged.is_empty() {
        0.0
    } else {
        judged.iter().filter(|r| r.correct).count() as f64 / judged.len() as f64
    };
    let f1 = if f1s.is_empty() {
        0.0
    } else {
        f1s.iter().sum::<f64>() / f1s.len() as f64
    };
    SettingReport {
        mode,
        n_segments: level,
        gold_position,
        em,
        f1,
        n_errors,
        decomposition: decompose(&judged).ok(),
    }
}

struct RemoteContext {
    endpoint: String,
    model: String,
    auth_token: Option<String>,
    timeout: std::time::Duration,
    retries: u32,
    max_output_tokens: u32,
    temperature: f64,
    reader_template: PromptTemplate,
    slicer_template: PromptTemplate,
}

impl RemoteContext {
    fn from_config(config: &RunConfig) -> Result<Option<Self>, RunError> {
        let needed = config.reader == ReaderKind::Remote
            || (config.mode == PipelineMode::Slice && config.slicer == SlicerKind::Llm);
        if !needed {
            return Ok(None);
        }
        let load = |path: &Option<std::path::PathBuf>, fallback: &str| -> Result<PromptTemplate, RunError> {
            match path {
                Some(p) => PromptTemplate::from_file(p).map_err(|source| RunError::Output {
                    path: p.display().to_string(),
                    source,
                }),
                None => Ok(PromptTemplate::new(fallback)),
            }
        };
        Ok(Some(Self {
            endpoint: config.endpoint.clone().expect("validated"),
            model: config.model.clone().expect("validated"),
            auth_token: config
                .auth_env
                .as_ref()
                .and_then(|name| std::env::var(name).ok()),
            timeout: std::time::Duration::from_secs(config.timeout_secs),
            retries: config.max_retries,
            max_output_tokens: config.max_output_tokens,
            temperature: config.temperature,
            reader_template: load(&config.reader_prompt, DEFAULT_READER_TEMPLATE)?,
            slicer_template: load(&config.slicer_prompt, DEFAULT_SLICER_TEMPLATE)?,
        }))
    }

    fn request(&self, prompt: String) -> CompletionRequest {
        let mut req = CompletionRequest::new(&self.endpoint, &self.model, prompt);
        req.max_output_tokens = self.max_output_tokens;
        req.temperature = self.temperature;
        req.timeout = self.timeout;
        req.retries = self.retries;
        req.auth_token = self.auth_token.clone();
        req
    }
}

#[allow(clippy::too_many_arguments)]
fn judge_example(
    ex: &QAExample,
    pool: &[Document],
    level: usize,
    position: slicebench_core::noise::GoldPosition,
    trace_seed: u64,
    reader_seed: u64,
    config: &RunConfig,
    remote: Option<&RemoteContext>,
) -> (ResultRecord, Option<(JudgedResult, f64)>) {
    let mut record = ResultRecord {
        example_id: ex.example_id.clone(),
        mode: config.mode,
        n_segments: level,
        gold_position: String::from(position),
        predicted_answer: None,
        correct: None,
        retrieved: None,
        utilized: None,
        input_tokens: None,
        slice_recall_hit: None,
        f1: None,
        error: None,
    };
    match judge_inner(ex, pool, level, position, trace_seed, reader_seed, config, remote) {
        Ok((judged, f1)) => {
            record.predicted_answer = Some(judged.predicted_answer.clone());
            record.correct = Some(judged.correct);
            record.retrieved = Some(judged.retrieved);
            record.utilized = Some(judged.utilized);
            record.input_tokens = Some(judged.input_tokens);
            record.slice_recall_hit = judged.slice_recall_hit;
            record.f1 = Some(f1);
            (record, Some((judged, f1)))
        }
        Err(message) => {
            log::warn!("example `{}` failed: {message}", ex.example_id);
            record.error = Some(message);
            (record, None)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn judge_inner(
    ex: &QAExample,
    pool: &[Document],
    level: usize,
    position: slicebench_core::noise::GoldPosition,
    trace_seed: u64,
    reader_seed: u64,
    config: &RunConfig,
    remote: Option<&RemoteContext>,
) -> Result<(JudgedResult, f64), String> {
    let trace = build_trace(ex, pool, level, position.resolve(level), trace_seed)
        .map_err(|e| e.to_string())?;
    let trace_ex = to_example(&trace, ex);
    let tmaps = tokenize_set(&trace_ex.documents);

    let view = match config.mode {
        PipelineMode::BaselineFullContext => baseline_view(&trace, &tmaps),
        PipelineMode::Slice => slice_view(&trace_ex, &tmaps, config, remote)?,
    };

    let gold_answer = ex.gold_answers.first().cloned().unwrap_or_default();
    let predicted = match config.reader {
        ReaderKind::Mock => {
            if view.segments.is_empty() {
                WRONG_ANSWER.to_string()
            } else {
                mock_read(
                    &ex.question,
                    &view.segments,
                    view.gold_index,
                    &gold_answer,
                    &MockReaderParams {
                        capacity: config.mock_capacity,
                        p_hit: config.mock_p_hit,
                        p_guess: config.mock_p_guess,
                        seed: reader_seed,
                    },
                )
            }
        }
        ReaderKind::Remote => {
            let remote = remote.expect("remote context present when reader is remote");
            let prompt = remote.reader_template.render(&[
                ("question", ex.question.as_str()),
                ("context", view.rendered.as_str()),
            ]);
            let (text, _usage) = complete(&remote.request(prompt)).map_err(|e| e.to_string())?;
            text.trim().to_string()
        }
    };

    let correct = exact_match(&predicted, &ex.gold_answers);
    let retrieved = detect_retrieved(&trace_ex, &trace_ex.documents);
    let judged = JudgedResult::new(
        ex.example_id.clone(),
        predicted.clone(),
        correct,
        retrieved,
        view.input_tokens,
        view.slice_recall_hit,
    );
    let f1 = token_f1(&predicted, &ex.gold_answers);
    Ok((judged, f1))
}

/// What the reader sees for one example.
struct ReaderView {
    segments: Vec<String>,
    gold_index: Option<usize>,
    rendered: String,
    input_tokens: usize,
    slice_recall_hit: Option<bool>,
}

fn baseline_view(trace: &NoisyTrace, tmaps: &TokenMaps) -> ReaderView {
    let segments: Vec<String> = trace.segments.iter().map(|d| d.text.clone()).collect();
    let rendered = trace
        .segments
        .iter()
        .map(|d| format!("[Source: Doc {}]\n{}", d.doc_id, d.text))
        .collect::<Vec<_>>()
        .join("\n\n");
    let input_tokens = tmaps.values().map(|t| t.len()).sum();
    ReaderView {
        segments,
        gold_index: Some(trace.gold_index),
        rendered,
        input_tokens,
        slice_recall_hit: None,
    }
}

fn slice_view(
    trace_ex: &QAExample,
    tmaps: &TokenMaps,
    config: &RunConfig,
    remote: Option<&RemoteContext>,
) -> Result<ReaderView, String> {
    let slices = select_slices(trace_ex, tmaps, config, remote)?;
    let hit = span_recall(&slices, trace_ex, tmaps).map_err(|e| e.to_string())?;
    let ctx = parse_slices(&trace_ex.documents, tmaps, &slices).map_err(|e| e.to_string())?;
    let gold_index = find_gold_segment(&ctx, trace_ex, tmaps);
    Ok(ReaderView {
        segments: ctx.segments.iter().map(|s| s.text.clone()).collect(),
        gold_index,
        rendered: render_context(&ctx, true),
        input_tokens: ctx.total_tokens,
        slice_recall_hit: Some(hit),
    })
}

fn select_slices(
    trace_ex: &QAExample,
    tmaps: &TokenMaps,
    config: &RunConfig,
    remote: Option<&RemoteContext>,
) -> Result<SliceSet, String> {
    match config.slicer {
        SlicerKind::Oracle => {
            oracle_slice(trace_ex, tmaps, config.budget).map_err(|e| e.to_string())
        }
        SlicerKind::Lexical => lexical_slice(
            trace_ex,
            tmaps,
            config.lexical_window,
            config.lexical_stride,
            config.budget,
        )
        .map_err(|e| e.to_string()),
        SlicerKind::Llm => {
            let remote = remote.expect("remote context present when slicer is llm");
            let prompt = remote.slicer_template.render(&[
                ("documents", &document_block(&trace_ex.documents, tmaps)),
                ("question", trace_ex.question.as_str()),
            ]);
            let (reply, _usage) = complete(&remote.request(prompt)).map_err(|e| e.to_string())?;
            let (slices, warnings) =
                parse_llm_slice_output(&reply, &trace_ex.documents, tmaps, config.budget);
            for warning in warnings {
                log::warn!("example `{}`: {warning}", trace_ex.example_id);
            }
            Ok(slices)
        }
    }
}

/// Position of the first sliced segment that carries the gold evidence:
/// character overlap with an annotated span, or answer containment.
fn find_gold_segment(
    ctx: &SlicedContext,
    trace_ex: &QAExample,
    tmaps: &TokenMaps,
) -> Option<usize> {
    let answers: Vec<String> = trace_ex
        .gold_answers
        .iter()
        .map(|a| slicebench_core::metrics::normalize_answer(a))
        .filter(|a| !a.is_empty())
        .collect();
    ctx.segments.iter().position(|segment| {
        if let (Some(evidence), Some(tmap)) =
            (trace_ex.gold_evidence.as_ref(), tmaps.get(&segment.doc_id))
        {
            if let Ok((cs, ce)) = tmap.char_range(segment.start, segment.end) {
                let overlaps = evidence.iter().any(|gold| {
                    gold.doc_id == segment.doc_id && cs.max(gold.start) < ce.min(gold.end)
                });
                if overlaps {
                    return true;
                }
            }
        }
        if answers.is_empty() {
            return false;
        }
        let text = slicebench_core::metrics::normalize_answer(&segment.text);
        answers.iter().any(|a| text.contains(a.as_str()))
    })
}

fn write_outputs(
    dir: &Path,
    manifest: &RunManifest,
    records: &[ResultRecord],
) -> Result<(), RunError> {
    let in_dir = |name: &str| dir.join(name);
    let wrap = |path: &Path, source: std::io::Error| RunError::Output {
        path: path.display().to_string(),
        source,
    };

    std::fs::create_dir_all(dir).map_err(|e| wrap(dir, e))?;

    let results_path = in_dir(&manifest.results_file);
    let mut lines = String::new();
    for record in records {
        lines.push_str(&serde_json::to_string(record).expect("record serialization"));
        lines.push('\n');
    }
    std::fs::write(&results_path, lines).map_err(|e| wrap(&results_path, e))?;

    let manifest_path = in_dir("manifest.json");
    let manifest_json =
        serde_json::to_string_pretty(manifest).expect("manifest serialization");
    std::fs::write(&manifest_path, manifest_json).map_err(|e| wrap(&manifest_path, e))?;

    let report_path = in_dir("report.txt");
    let table = crate::report::render_report(manifest, crate::report::ReportFormat::Table);
    std::fs::write(&report_path, table).map_err(|e| wrap(&report_path, e))?;

    Ok(())
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
