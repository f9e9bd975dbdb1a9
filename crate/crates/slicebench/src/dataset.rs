//! Corpus file IO: one JSON record per line, UTF-8.
//!
//! Loading validates every record and attaches line numbers to anything it
//! rejects, so a broken corpus fails loudly at the door instead of deep in
//! a sweep. Writing is the exact inverse; `load_corpus` of a written file
//! reproduces the input examples.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use slicebench_core::corpus::{validate_example, QAExample};

#[derive(Debug, thiserror::Error)]
pub enum CorpusLoadError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate example_id `{example_id}`")]
    DuplicateExample {
        path: String,
        line: usize,
        example_id: String,
    },
    #[error("{path}:{line}: invalid example `{example_id}`: {violations}")]
    InvalidExample {
        path: String,
        line: usize,
        example_id: String,
        violations: String,
    },
}

/// Load and validate a corpus file. Order is preserved; empty files are
/// fine and yield an empty list.
pub fn load_corpus(path: &Path) -> Result<Vec<QAExample>, CorpusLoadError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| CorpusLoadError::Io {
        path: display.clone(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut examples = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusLoadError::Io {
            path: display.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let example: QAExample =
            serde_json::from_str(&line).map_err(|e| CorpusLoadError::Malformed {
                path: display.clone(),
                line: line_no,
                message: e.to_string(),
            })?;
        if !seen_ids.insert(example.example_id.clone()) {
            return Err(CorpusLoadError::DuplicateExample {
                path: display.clone(),
                line: line_no,
                example_id: example.example_id,
            });
        }
        let violations = validate_example(&example);
        if !violations.is_empty() {
            let joined = violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            return Err(CorpusLoadError::InvalidExample {
                path: display,
                line: line_no,
                example_id: example.example_id,
                violations: joined,
            });
        }
        examples.push(example);
    }
    Ok(examples)
}

/// Write examples in the line format, one record per line.
pub fn write_corpus(path: &Path, examples: &[QAExample]) -> io::Result<()> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    for example in examples {
        let line = serde_json::to_string(example)?;
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}
