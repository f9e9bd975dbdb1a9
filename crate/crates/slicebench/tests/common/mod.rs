//! Shared fixtures for integration tests: a synthetic corpus with known
//! gold evidence, run-config builders, and a scripted HTTP stub server.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use slicebench::config::{PipelineMode, ReaderKind, RunConfig, SlicerKind};
use slicebench_core::corpus::{Document, DocumentSet, EvidenceSpan, QAExample};
use slicebench_core::noise::GoldPosition;

/// An example with a unique answer code and a char-annotated evidence
/// sentence. Every document is ASCII, so byte offsets equal char offsets.
pub fn synthetic_example(i: usize) -> QAExample {
    let answer = format!("code{i:04}x");
    let text = format!(
        "Archive record {i:04}. The assigned code for artifact {i:04} is {answer}. \
         Filed under general section."
    );
    let start = text.find("The assigned").expect("sentence present");
    let end = text.find(". Filed").expect("sentence end present") + 1;
    QAExample {
        example_id: format!("ex{i:04}"),
        question: format!("What code is assigned to artifact {i:04}?"),
        gold_answers: vec![answer],
        gold_evidence: Some(vec![EvidenceSpan {
            doc_id: format!("ex{i:04}-doc"),
            start,
            end,
        }]),
        documents: DocumentSet::new(vec![Document::new(format!("ex{i:04}-doc"), text)]).unwrap(),
    }
}

pub fn synthetic_corpus(n: usize) -> Vec<QAExample> {
    (0..n).map(synthetic_example).collect()
}

pub fn write_corpus_file(dir: &Path, name: &str, examples: &[QAExample]) -> PathBuf {
    let path = dir.join(name);
    slicebench::dataset::write_corpus(&path, examples).unwrap();
    path
}

/// Tokens in the gold document of a synthetic example; used as the slice
/// budget so "budget equals the gold segment size" holds exactly.
pub fn gold_segment_tokens(examples: &[QAExample]) -> usize {
    examples
        .iter()
        .map(|ex| {
            let doc = &ex.documents.docs()[0];
            slicebench_core::tokenizer::tokenize(doc).len()
        })
        .max()
        .expect("nonempty corpus")
}

pub fn mock_config(corpus: PathBuf, output_dir: PathBuf, mode: PipelineMode) -> RunConfig {
    RunConfig {
        corpus,
        mode,
        slicer: SlicerKind::Oracle,
        reader: ReaderKind::Mock,
        noise_levels: vec![2, 5, 10, 20],
        gold_positions: vec![GoldPosition::Uniform],
        budget: 18,
        seed: 42,
        output_dir,
        workers: 2,
        mock_capacity: 2,
        mock_p_hit: 1.0,
        mock_p_guess: 0.0,
        lexical_window: 32,
        lexical_stride: 16,
        endpoint: None,
        model: None,
        auth_env: None,
        timeout_secs: 30,
        max_retries: 2,
        max_in_flight: 4,
        max_output_tokens: 64,
        temperature: 0.0,
        reader_prompt: None,
        slicer_prompt: None,
    }
}

/// A one-thread HTTP server that answers a fixed script of responses and
/// counts the requests it served. The last scripted response repeats if
/// more requests arrive than scripted.
pub struct StubServer {
    addr: SocketAddr,
    hits: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
    shutdown: Arc<AtomicUsize>,
}

impl StubServer {
    /// `responses`: (status, body) pairs served in order.
    pub fn start(responses: Vec<(u16, String)>) -> Self {
        assert!(!responses.is_empty());
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let shutdown = Arc::new(AtomicUsize::new(0));
        let thread_hits = hits.clone();
        let thread_shutdown = shutdown.clone();
        listener
            .set_nonblocking(false)
            .expect("blocking accept loop");
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if thread_shutdown.load(Ordering::SeqCst) == 1 {
                    break;
                }
                let Ok(mut stream) = stream else { break };
                let served = thread_hits.fetch_add(1, Ordering::SeqCst);
                let (status, body) = responses
                    .get(served)
                    .unwrap_or_else(|| responses.last().unwrap());
                if read_request(&mut stream).is_ok() {
                    let _ = write_response(&mut stream, *status, body);
                }
            }
        });
        Self {
            addr,
            hits,
            handle: Some(handle),
            shutdown,
        }
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.shutdown.store(1, Ordering::SeqCst);
        // Unblock the accept loop with one last connection.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn read_request(stream: &mut TcpStream) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream);
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "connection closed mid-headers",
            ));
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            break;
        }
        if let Some(value) = trimmed
            .to_ascii_lowercase()
            .strip_prefix("content-length:")
            .map(str::trim)
            .and_then(|v| v.parse::<usize>().ok())
        {
            content_length = value;
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    Ok(())
}

fn write_response(stream: &mut TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    };
    let response = format!(
        "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(response.as_bytes())?;
    stream.flush()
}

/// A chat-completion JSON body with the given content.
pub fn chat_body(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"content": content}}],
        "usage": {"prompt_tokens": 10, "completion_tokens": 2}
    })
    .to_string()
}
