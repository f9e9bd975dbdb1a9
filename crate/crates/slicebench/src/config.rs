//! Declarative run configuration.
//!
//! A config is a flat TOML document with exactly the keys below; unknown
//! keys are rejected so a typo cannot silently change what an experiment
//! measures.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slicebench_core::noise::GoldPosition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineMode {
    /// Feed every trace segment to the reader, unfiltered.
    BaselineFullContext,
    /// Slice, hard-filter, then read.
    Slice,
}

impl fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BaselineFullContext => write!(f, "baseline-full-context"),
            Self::Slice => write!(f, "slice"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlicerKind {
    Oracle,
    Lexical,
    Llm,
}

impl fmt::Display for SlicerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Oracle => write!(f, "oracle"),
            Self::Lexical => write!(f, "lexical"),
            Self::Llm => write!(f, "llm"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReaderKind {
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub mode: PipelineMode,
    pub slicer: SlicerKind,
    pub reader: ReaderKind,
    #[serde(default = "default_noise_levels")]
    pub noise_levels: Vec<usize>,
    #[serde(default = "default_gold_positions")]
    pub gold_positions: Vec<GoldPosition>,
    pub budget: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,

    // Mock reader knobs.
    #[serde(default = "default_mock_capacity")]
    pub mock_capacity: usize,
    #[serde(default = "default_one")]
    pub mock_p_hit: f64,
    #[serde(default)]
    pub mock_p_guess: f64,

    // Lexical slicer knobs.
    #[serde(default = "default_lexical_window")]
    pub lexical_window: usize,
    #[serde(default = "default_lexical_stride")]
    pub lexical_stride: usize,

    // Remote endpoint settings, used by the remote reader and the llm
    // slicer.
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    /// Name of the environment variable holding the auth token.
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
    /// Optional prompt template files; built-in templates otherwise.
    #[serde(default)]
    pub reader_prompt: Option<PathBuf>,
    #[serde(default)]
    pub slicer_prompt: Option<PathBuf>,
}

fn default_noise_levels() -> Vec<usize> {
    vec![1, 2, 5, 10, 20]
}

fn default_gold_positions() -> Vec<GoldPosition> {
    vec![GoldPosition::Middle]
}

fn default_workers() -> usize {
    1
}

fn default_mock_capacity() -> usize {
    2
}

fn default_one() -> f64 {
    1.0
}

fn default_lexical_window() -> usize {
    32
}

fn default_lexical_stride() -> usize {
    16
}

fn default_timeout_secs() -> u64 {
    30
}

fn default_max_retries() -> u32 {
    2
}

fn default_max_in_flight() -> usize {
    4
}

fn default_max_output_tokens() -> u32 {
    64
}

impl RunConfig {
    pub fn from_toml_str(raw: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(raw).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&raw)
    }

    /// Check value ranges and mode/knob consistency. Returns warnings for
    /// settings that are legal but ignored (baseline mode with slicer
    /// options, for example).
    pub fn validate(&self) -> Result<Vec<String>, ConfigError> {
        if self.budget < 1 {
            return Err(ConfigError::Invalid("budget must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.noise_levels.is_empty() {
            return Err(ConfigError::Invalid("noise_levels must be nonempty".into()));
        }
        if self.noise_levels.iter().any(|&n| n < 1) {
            return Err(ConfigError::Invalid(
                "every noise level must be at least 1".into(),
            ));
        }
        if self.gold_positions.is_empty() {
            return Err(ConfigError::Invalid("gold_positions must be nonempty".into()));
        }
        if self.lexical_window < 1 || self.lexical_stride < 1 {
            return Err(ConfigError::Invalid(
                "lexical_window and lexical_stride must be at least 1".into(),
            ));
        }
        if self.mock_capacity < 1 {
            return Err(ConfigError::Invalid("mock_capacity must be at least 1".into()));
        }
        for (name, value) in [
            ("mock_p_hit", self.mock_p_hit),
            ("mock_p_guess", self.mock_p_guess),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Invalid(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.temperature < 0.0 {
            return Err(ConfigError::Invalid("temperature must be nonnegative".into()));
        }
        if self.timeout_secs == 0 {
            return Err(ConfigError::Invalid("timeout_secs must be positive".into()));
        }
        if self.max_in_flight < 1 {
            return Err(ConfigError::Invalid("max_in_flight must be at least 1".into()));
        }

        let needs_endpoint = self.reader == ReaderKind::Remote
            || (self.mode == PipelineMode::Slice && self.slicer == SlicerKind::Llm);
        if needs_endpoint && (self.endpoint.is_none() || self.model.is_none()) {
            return Err(ConfigError::Invalid(
                "remote reader / llm slicer require `endpoint` and `model`".into(),
            ));
        }

        let mut warnings = Vec::new();
        if self.mode == PipelineMode::BaselineFullContext {
            warnings.push(format!(
                "mode is {}: slicer settings (slicer = {}) are ignored",
                self.mode, self.slicer
            ));
        }
        Ok(warnings)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}
