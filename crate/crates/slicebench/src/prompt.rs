//! Prompt templates for the remote reader and the llm slicer.
//!
//! Templates are plain text with `{name}` placeholders; custom templates
//! load from files named in the run config. The built-in slicer template
//! presents every document with its id and token count and asks for the
//! triple-array reply format that `parse_llm_slice_output` expects.

use std::path::Path;

use slicebench_core::corpus::DocumentSet;
use slicebench_core::tokenizer::TokenMaps;

pub const DEFAULT_READER_TEMPLATE: &str = "\
Answer the question using only the provided context.

Context:
{context}

Question: {question}

Reply with the exact answer string and nothing else.
";

pub const DEFAULT_SLICER_TEMPLATE: &str = "\
Select the token spans that answer the question. Documents are shown with
their id and token count; token indices are 0-based and end-exclusive.

{documents}

Question: {question}

Reply with only a JSON array of objects of the form
[{\"doc\": \"<doc_id>\", \"start\": <int>, \"end\": <int>}]
choosing as few tokens as possible while covering the answer evidence.
";

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    template: String,
}

impl PromptTemplate {
    pub fn new(template: impl Into<String>) -> Self {
        Self {
            template: template.into(),
        }
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::new(std::fs::read_to_string(path)?))
    }

    /// Replace each `{name}` placeholder with its value.
    pub fn render(&self, vars: &[(&str, &str)]) -> String {
        let mut out = self.template.clone();
        for (name, value) in vars {
            out = out.replace(&format!("{{{name}}}"), value);
        }
        out
    }
}

/// The `{documents}` block for the slicer prompt: id, token count, text.
pub fn document_block(docs: &DocumentSet, tmaps: &TokenMaps) -> String {
    let mut out = String::new();
    for doc in docs {
        let tokens = tmaps.get(&doc.doc_id).map_or(0, |t| t.len());
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&format!(
            "Doc {} ({} tokens):\n{}\n",
            doc.doc_id, tokens, doc.text
        ));
    }
    out
}
