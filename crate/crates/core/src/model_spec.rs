//! Transformer architecture descriptions and inference workload scenarios.
//!
//! A [`TransformerConfig`] is validated on construction and immutable
//! afterwards. Model files are flat JSON objects; unknown keys are rejected so
//! typos surface as errors instead of silently falling back to defaults.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchClass {
    Encoder,
    Decoder,
}

impl fmt::Display for ArchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Encoder => write!(f, "encoder"),
            Self::Decoder => write!(f, "decoder"),
        }
    }
}

impl FromStr for ArchClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "encoder" => Ok(Self::Encoder),
            "decoder" => Ok(Self::Decoder),
            other => Err(Error::Parse(format!("unknown arch_class `{other}`"))),
        }
    }
}

/// On-disk model file layout. `ffn_dim` may be omitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: String,
    num_layers: u64,
    hidden_dim: u64,
    num_heads: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ffn_dim: Option<u64>,
    vocab_size: u64,
    max_positions: u64,
    arch_class: ArchClass,
}

/// Architecture hyperparameters of a standard Transformer stack.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TransformerConfig {
    name: String,
    num_layers: u64,
    hidden_dim: u64,
    num_heads: u64,
    ffn_dim: u64,
    vocab_size: u64,
    max_positions: u64,
    arch_class: ArchClass,
}

impl TransformerConfig {
    /// Builds a validated config. `ffn_dim = None` selects `4 * hidden_dim`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        num_layers: u64,
        hidden_dim: u64,
        num_heads: u64,
        ffn_dim: Option<u64>,
        vocab_size: u64,
        max_positions: u64,
        arch_class: ArchClass,
    ) -> Result<Self> {
        let ffn_dim = match ffn_dim {
            Some(f) => f,
            None => hidden_dim
                .checked_mul(4)
                .ok_or(Error::Overflow("default ffn_dim"))?,
        };
        let config = Self {
            name: name.into(),
            num_layers,
            hidden_dim,
            num_heads,
            ffn_dim,
            vocab_size,
            max_positions,
            arch_class,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        let counts = [
            ("num_layers", self.num_layers),
            ("hidden_dim", self.hidden_dim),
            ("num_heads", self.num_heads),
            ("ffn_dim", self.ffn_dim),
            ("vocab_size", self.vocab_size),
            ("max_positions", self.max_positions),
        ];
        for (field, value) in counts {
            if value == 0 {
                return Err(Error::Validation(format!("{field} must be positive")));
            }
        }
        if !self.hidden_dim.is_multiple_of(self.num_heads) {
            return Err(Error::Validation(format!(
                "hidden_dim {} is not divisible by num_heads {}",
                self.hidden_dim, self.num_heads
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_layers(&self) -> u64 {
        self.num_layers
    }

    pub fn hidden_dim(&self) -> u64 {
        self.hidden_dim
    }

    pub fn num_heads(&self) -> u64 {
        self.num_heads
    }

    pub fn ffn_dim(&self) -> u64 {
        self.ffn_dim
    }

    pub fn vocab_size(&self) -> u64 {
        self.vocab_size
    }

    pub fn max_positions(&self) -> u64 {
        self.max_positions
    }

    pub fn arch_class(&self) -> ArchClass {
        self.arch_class
    }

    pub fn head_dim(&self) -> u64 {
        self.hidden_dim / self.num_heads
    }

    /// Returns a copy with a different architecture class, e.g. to run a
    /// decoder preset through the encoder pass.
    pub fn with_arch_class(&self, arch_class: ArchClass) -> Self {
        Self {
            arch_class,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            name: self.name.clone(),
            num_layers: self.num_layers,
            hidden_dim: self.hidden_dim,
            num_heads: self.num_heads,
            ffn_dim: Some(self.ffn_dim),
            vocab_size: self.vocab_size,
            max_positions: self.max_positions,
            arch_class: self.arch_class,
        };
        serde_json::to_string_pretty(&file).expect("model file serializes")
    }
}

/// Parses and validates a model file.
pub fn load_config(source: &str) -> Result<TransformerConfig> {
    if source.trim().is_empty() {
        return Err(Error::Parse("empty model document".into()));
    }
    let file: ModelFile =
        serde_json::from_str(source).map_err(|e| Error::Parse(e.to_string()))?;
    TransformerConfig::new(
        file.name,
        file.num_layers,
        file.hidden_dim,
        file.num_heads,
        file.ffn_dim,
        file.vocab_size,
        file.max_positions,
        file.arch_class,
    )
}

pub const PRESET_NAMES: [&str; 3] = ["bert-base", "bert-large", "gpt2"];

const BERT_VOCAB: u64 = 30522;
const BERT_MAX_POSITIONS: u64 = 512;
const GPT2_VOCAB: u64 = 50257;
const GPT2_MAX_POSITIONS: u64 = 1024;

/// Published configurations of the three case-study models.
pub fn preset(name: &str) -> Result<TransformerConfig> {
    let (layers, hidden, heads, vocab, positions, arch) = match name {
        "bert-base" => (12, 768, 12, BERT_VOCAB, BERT_MAX_POSITIONS, ArchClass::Encoder),
        "bert-large" => (24, 1024, 16, BERT_VOCAB, BERT_MAX_POSITIONS, ArchClass::Encoder),
        "gpt2" => (12, 768, 12, GPT2_VOCAB, GPT2_MAX_POSITIONS, ArchClass::Decoder),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    TransformerConfig::new(name, layers, hidden, heads, None, vocab, positions, arch)
}

/// Weight count of attention and FFN projections, plus token and position
/// embedding tables when `include_embeddings` is set. Biases and
/// normalization parameters are not counted.
pub fn param_count(config: &TransformerConfig, include_embeddings: bool) -> Result<u64> {
    let overflow = || Error::Overflow("param_count");
    let d = config.hidden_dim;
    let attention = d.checked_mul(d).and_then(|d2| d2.checked_mul(4));
    let ffn = d
        .checked_mul(config.ffn_dim)
        .and_then(|x| x.checked_mul(2));
    let per_layer = attention
        .zip(ffn)
        .and_then(|(a, f)| a.checked_add(f))
        .ok_or_else(overflow)?;
    let mut total = per_layer
        .checked_mul(config.num_layers)
        .ok_or_else(overflow)?;
    if include_embeddings {
        let tables = config
            .vocab_size
            .checked_add(config.max_positions)
            .and_then(|rows| rows.checked_mul(d))
            .ok_or_else(overflow)?;
        total = total.checked_add(tables).ok_or_else(overflow)?;
    }
    Ok(total)
}

/// Numeric storage width of parameters and activations during inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Int8,
    Fp16,
    Fp32,
}

impl Precision {
    pub fn bytes(self) -> u64 {
        match self {
            Self::Int8 => 1,
            Self::Fp16 => 2,
            Self::Fp32 => 4,
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Int8 => write!(f, "int8"),
            Self::Fp16 => write!(f, "fp16"),
            Self::Fp32 => write!(f, "fp32"),
        }
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "int8" => Ok(Self::Int8),
            "fp16" => Ok(Self::Fp16),
            "fp32" => Ok(Self::Fp32),
            other => Err(Error::Parse(format!("unknown precision `{other}`"))),
        }
    }
}

/// An inference scenario. Defaults: batch 1, int8, embeddings and
/// elementwise kernels excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Workload {
    seq_len: u64,
    batch: u64,
    precision: Precision,
    include_embeddings: bool,
    elementwise: bool,
}

impl Workload {
    pub fn new(seq_len: u64) -> Result<Self> {
        if seq_len == 0 {
            return Err(Error::InvalidDimension("seq_len"));
        }
        Ok(Self {
            seq_len,
            batch: 1,
            precision: Precision::Int8,
            include_embeddings: false,
            elementwise: false,
        })
    }

    pub fn with_batch(mut self, batch: u64) -> Result<Self> {
        if batch == 0 {
            return Err(Error::InvalidDimension("batch"));
        }
        self.batch = batch;
        Ok(self)
    }

    pub fn with_seq_len(mut self, seq_len: u64) -> Result<Self> {
        if seq_len == 0 {
            return Err(Error::InvalidDimension("seq_len"));
        }
        self.seq_len = seq_len;
        Ok(self)
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn with_embeddings(mut self, include: bool) -> Self {
        self.include_embeddings = include;
        self
    }

    pub fn with_elementwise(mut self, on: bool) -> Self {
        self.elementwise = on;
        self
    }

    pub fn seq_len(&self) -> u64 {
        self.seq_len
    }

    pub fn batch(&self) -> u64 {
        self.batch
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    pub fn bytes_per_elem(&self) -> u64 {
        self.precision.bytes()
    }

    pub fn include_embeddings(&self) -> bool {
        self.include_embeddings
    }

    pub fn elementwise(&self) -> bool {
        self.elementwise
    }
}
