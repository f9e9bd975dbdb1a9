//! Model access: a chat-completion-style HTTP client and a deterministic
//! mock reader.
//!
//! The wire protocol is a minimal chat-completion POST — model, a single
//! user message, sampling fields — with the auth header name configurable,
//! so the harness talks to common hosted and local servers without naming
//! any. Replies are accepted as `choices[0].message.content`,
//! `choices[0].text`, or a top-level `text` field.
//!
//! The mock reader makes offline runs analytically predictable: it attends
//! to `min(capacity, n)` segments uniformly without replacement and
//! answers correctly with `p_hit` when the gold segment was attended
//! (`p_guess` otherwise), exactly the capacity model in
//! `slicebench_core::dilution`.

use std::thread::sleep;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use slicebench_core::seeding::derive_seed;

/// One completion call.
#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub endpoint: String,
    pub model_name: String,
    pub prompt: String,
    pub max_output_tokens: u32,
    pub temperature: f64,
    pub timeout: Duration,
    /// Retries after the first attempt, on transient transport failures
    /// and 5xx responses only.
    pub retries: u32,
    pub auth_token: Option<String>,
    pub auth_header: String,
}

impl CompletionRequest {
    pub fn new(endpoint: impl Into<String>, model_name: impl Into<String>, prompt: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model_name: model_name.into(),
            prompt: prompt.into(),
            max_output_tokens: 64,
            temperature: 0.0,
            timeout: Duration::from_secs(30),
            retries: 2,
            auth_token: None,
            auth_header: "authorization".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport failure after {attempts} attempt(s): {source}")]
    Transport {
        attempts: u32,
        #[source]
        source: reqwest::Error,
    },
    #[error("protocol error: status {status}: {body_excerpt}")]
    Protocol { status: u16, body_excerpt: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

const BACKOFF_BASE: Duration = Duration::from_millis(100);

/// Send one completion request, retrying transient failures with
/// exponential backoff. Client-error (4xx) responses are never retried —
/// a malformed request will not fix itself.
pub fn complete(req: &CompletionRequest) -> Result<(String, TokenUsage), ClientError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(req.timeout)
        .build()
        .expect("client construction only fails on invalid TLS setup");

    let body = json!({
        "model": req.model_name,
        "messages": [{"role": "user", "content": req.prompt}],
        "max_tokens": req.max_output_tokens,
        "temperature": req.temperature,
    });

    let mut attempts = 0u32;
    loop {
        attempts += 1;
        let mut builder = client.post(&req.endpoint).json(&body);
        if let Some(token) = &req.auth_token {
            builder = builder.header(req.auth_header.as_str(), format!("Bearer {token}"));
        }
        let outcome = builder.send();
        let retriable = match outcome {
            Ok(response) => {
                let status = response.status();
                if status.is_success() {
                    let text = response
                        .text()
                        .map_err(|source| ClientError::Transport { attempts, source })?;
                    return parse_completion(&text);
                }
                let retriable = status.is_server_error();
                if !retriable || attempts > req.retries {
                    let body = response.text().unwrap_or_default();
                    return Err(ClientError::Protocol {
                        status: status.as_u16(),
                        body_excerpt: excerpt(&body),
                    });
                }
                log::warn!(
                    "attempt {attempts}: status {status} from {}; retrying",
                    req.endpoint
                );
                true
            }
            Err(source) => {
                if attempts > req.retries {
                    return Err(ClientError::Transport { attempts, source });
                }
                log::warn!("attempt {attempts}: transport error ({source}); retrying");
                true
            }
        };
        if retriable {
            sleep(BACKOFF_BASE * 2u32.saturating_pow(attempts - 1));
        }
    }
}

fn parse_completion(raw: &str) -> Result<(String, TokenUsage), ClientError> {
    let value: serde_json::Value = serde_json::from_str(raw)
        .map_err(|e| ClientError::MalformedResponse(format!("{e}: {}", excerpt(raw))))?;
    let text = value
        .pointer("/choices/0/message/content")
        .or_else(|| value.pointer("/choices/0/text"))
        .or_else(|| value.pointer("/text"))
        .and_then(|v| v.as_str())
        .ok_or_else(|| {
            ClientError::MalformedResponse(format!("no completion text in {}", excerpt(raw)))
        })?;
    let usage = TokenUsage {
        prompt_tokens: value
            .pointer("/usage/prompt_tokens")
            .and_then(|v| v.as_u64())
            .unwrap_or(0),
        completion_tokens: value
            .pointer("/usage/completion_tokens")
            .and_then(|v| v.as_u64())
            .unwrap_or(0),
    };
    Ok((text.to_string(), usage))
}

fn excerpt(body: &str) -> String {
    const LIMIT: usize = 200;
    let trimmed = body.trim();
    if trimmed.len() <= LIMIT {
        trimmed.to_string()
    } else {
        let cut = trimmed
            .char_indices()
            .take_while(|&(i, _)| i < LIMIT)
            .last()
            .map_or(0, |(i, c)| i + c.len_utf8());
        format!("{}…", &trimmed[..cut])
    }
}

/// Capacity-model reader parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MockReaderParams {
    pub capacity: usize,
    pub p_hit: f64,
    pub p_guess: f64,
    pub seed: u64,
}

/// The fixed wrong answer the mock reader gives when it misses.
pub const WRONG_ANSWER: &str = "[unknown]";

/// Read a segmented context with finite attention capacity.
///
/// Attends to `min(capacity, segments.len())` segments uniformly without
/// replacement. If `gold_index` is attended, answers `gold_answer` with
/// probability `p_hit`; otherwise with probability `p_guess`; the miss
/// answer is [`WRONG_ANSWER`]. Deterministic given `(params.seed,
/// question)`: segment text plays no role, only positions do.
pub fn mock_read(
    question: &str,
    segments: &[String],
    gold_index: Option<usize>,
    gold_answer: &str,
    params: &MockReaderParams,
) -> String {
    assert!(!segments.is_empty(), "mock reader needs at least one segment");
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &[question.as_bytes()]));
    let n = segments.len();
    let draw = params.capacity.min(n);
    let attended = rand::seq::index::sample(&mut rng, n, draw);
    let gold_attended = gold_index.is_some_and(|g| attended.iter().any(|i| i == g));
    let p_correct = if gold_attended {
        params.p_hit
    } else {
        params.p_guess
    };
    if rng.random_bool(p_correct) {
        gold_answer.to_string()
    } else {
        WRONG_ANSWER.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn segments(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("segment {i}")).collect()
    }

    #[test]
    fn forced_attendance_always_answers_gold() {
        let params = MockReaderParams {
            capacity: 1,
            p_hit: 1.0,
            p_guess: 0.0,
            seed: 0,
        };
        for seed in 0..50 {
            let out = mock_read(
                "q",
                &segments(1),
                Some(0),
                "gold",
                &MockReaderParams { seed, ..params },
            );
            assert_eq!(out, "gold");
        }
    }

    #[test]
    fn gold_absent_with_zero_guess_is_always_wrong() {
        let params = MockReaderParams {
            capacity: 2,
            p_hit: 1.0,
            p_guess: 0.0,
            seed: 9,
        };
        for q in 0..50 {
            let out = mock_read(&format!("q{q}"), &segments(10), None, "gold", &params);
            assert_eq!(out, WRONG_ANSWER);
        }
    }

    #[test]
    fn deterministic_given_seed_and_question() {
        let params = MockReaderParams {
            capacity: 2,
            p_hit: 1.0,
            p_guess: 0.0,
            seed: 31,
        };
        let a = mock_read("the question", &segments(10), Some(4), "gold", &params);
        let b = mock_read("the question", &segments(10), Some(4), "gold", &params);
        assert_eq!(a, b);
    }

    #[test]
    fn hit_rate_matches_capacity_model() {
        // Empirical correctness over many distinct questions with
        // capacity 2 of 10 segments must sit near T/N = 0.2, the closed
        // form of the dilution baseline.
        let params = MockReaderParams {
            capacity: 2,
            p_hit: 1.0,
            p_guess: 0.0,
            seed: 1234,
        };
        let trials = 20_000;
        let hits = (0..trials)
            .filter(|i| {
                mock_read(&format!("question {i}"), &segments(10), Some(3), "gold", &params)
                    == "gold"
            })
            .count();
        let rate = hits as f64 / trials as f64;
        let expected = slicebench_core::dilution::baseline_success(
            &slicebench_core::dilution::DilutionParams::new(10, 2, 0.0, 1.0).unwrap(),
        );
        assert!(
            (rate - expected).abs() < 0.02,
            "rate {rate} vs expected {expected}"
        );
    }

    #[test]
    fn completion_parsing_accepts_common_shapes() {
        let chat = r#"{"choices":[{"message":{"content":"42"}}],"usage":{"prompt_tokens":7,"completion_tokens":1}}"#;
        let (text, usage) = parse_completion(chat).unwrap();
        assert_eq!(text, "42");
        assert_eq!(usage.prompt_tokens, 7);

        let legacy = r#"{"choices":[{"text":"hello"}]}"#;
        assert_eq!(parse_completion(legacy).unwrap().0, "hello");

        let plain = r#"{"text":"hi"}"#;
        assert_eq!(parse_completion(plain).unwrap().0, "hi");

        assert!(parse_completion(r#"{"choices":[]}"#).is_err());
        assert!(parse_completion("not json").is_err());
    }

    #[test]
    fn excerpt_truncates_on_char_boundary() {
        let long = "é".repeat(300);
        let cut = excerpt(&long);
        assert!(cut.ends_with('…'));
        assert!(cut.len() <= 210);
    }
}
