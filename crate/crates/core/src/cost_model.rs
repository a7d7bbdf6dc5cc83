//! FLOP and memory-operation (MOP) accounting for Transformer inference.
//!
//! Conventions:
//! - a multiply-accumulate counts as two FLOPs;
//! - every kernel reads each input tensor once and writes each output tensor
//!   once from/to main memory, with no reuse across kernels;
//! - decoder steps re-read the whole KV cache and write the new K/V entry;
//! - all tensors, including attention scores, use the workload precision.
//!
//! Counts are `u64` with checked arithmetic; only the intensity is fractional.

use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_spec::{TransformerConfig, Workload};
use crate::scalar::Real;

/// FLOPs per element and tensors touched for the optional elementwise
/// kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementwiseRule {
    pub flops_per_elem: u64,
    pub reads: u64,
    pub writes: u64,
}

pub const SOFTMAX: ElementwiseRule = ElementwiseRule { flops_per_elem: 5, reads: 1, writes: 1 };
pub const LAYER_NORM: ElementwiseRule = ElementwiseRule { flops_per_elem: 5, reads: 1, writes: 1 };
pub const GELU: ElementwiseRule = ElementwiseRule { flops_per_elem: 8, reads: 1, writes: 1 };
/// Residual add reads both summands.
pub const RESIDUAL_ADD: ElementwiseRule = ElementwiseRule { flops_per_elem: 1, reads: 2, writes: 1 };

/// Cost of one kernel invocation (or of the same kernel summed over decode
/// steps).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelCost {
    pub name: String,
    /// Transformer layer the kernel belongs to; `None` for embedding and
    /// head kernels.
    pub layer: Option<u64>,
    pub flops: u64,
    /// Total bytes read and written.
    pub mops: u64,
    /// Portion of `mops` spent reading model weights.
    pub weight_bytes: u64,
}

impl KernelCost {
    pub fn intensity(&self) -> Result<ArithmeticIntensity> {
        ArithmeticIntensity::new(self.flops, self.mops)
    }

    fn at_layer(mut self, layer: u64) -> Self {
        self.layer = Some(layer);
        self
    }

    fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    fn accumulate(&mut self, other: &KernelCost) -> Result<()> {
        debug_assert_eq!(self.name, other.name);
        debug_assert_eq!(self.layer, other.layer);
        self.flops = add(self.flops, other.flops)?;
        self.mops = add(self.mops, other.mops)?;
        self.weight_bytes = add(self.weight_bytes, other.weight_bytes)?;
        Ok(())
    }
}

/// FLOPs-per-byte ratio kept as its exact numerator and denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArithmeticIntensity {
    flops: u64,
    mops: u64,
}

impl ArithmeticIntensity {
    pub fn new(flops: u64, mops: u64) -> Result<Self> {
        if mops == 0 {
            return Err(Error::DivisionDomain("arithmetic intensity with zero MOPs"));
        }
        Ok(Self { flops, mops })
    }

    pub fn flops(&self) -> u64 {
        self.flops
    }

    pub fn mops(&self) -> u64 {
        self.mops
    }

    /// Reduced exact ratio.
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.flops, self.mops)
    }

    pub fn value<T: Real>(&self) -> T {
        T::from_count(self.flops) / T::from_count(self.mops)
    }
}

impl fmt::Display for ArithmeticIntensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value::<f64>())
    }
}

/// Ordered kernel list with totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostBreakdown {
    kernels: Vec<KernelCost>,
    total_flops: u64,
    total_mops: u64,
}

impl CostBreakdown {
    pub fn from_kernels(kernels: Vec<KernelCost>) -> Result<Self> {
        let mut total_flops = 0u64;
        let mut total_mops = 0u64;
        for k in &kernels {
            total_flops = add(total_flops, k.flops)?;
            total_mops = add(total_mops, k.mops)?;
        }
        Ok(Self {
            kernels,
            total_flops,
            total_mops,
        })
    }

    pub fn kernels(&self) -> &[KernelCost] {
        &self.kernels
    }

    pub fn total_flops(&self) -> u64 {
        self.total_flops
    }

    pub fn total_mops(&self) -> u64 {
        self.total_mops
    }

    pub fn total_weight_bytes(&self) -> u64 {
        self.kernels.iter().map(|k| k.weight_bytes).sum()
    }

    /// FLOPs of the matrix-multiply kernels only.
    pub fn matmul_flops(&self) -> u64 {
        self.kernels
            .iter()
            .filter(|k| MATMUL_KERNELS.contains(&k.name.as_str()))
            .map(|k| k.flops)
            .sum()
    }

    pub fn arithmetic_intensity(&self) -> Result<ArithmeticIntensity> {
        arithmetic_intensity(self)
    }

    /// Totals per kernel name, in order of first appearance.
    pub fn by_kernel(&self) -> Vec<KernelCost> {
        let mut out: Vec<KernelCost> = Vec::new();
        for k in &self.kernels {
            match out.iter_mut().find(|o| o.name == k.name) {
                Some(o) => {
                    o.flops += k.flops;
                    o.mops += k.mops;
                    o.weight_bytes += k.weight_bytes;
                }
                None => out.push(KernelCost {
                    layer: None,
                    ..k.clone()
                }),
            }
        }
        out
    }
}

const MATMUL_KERNELS: [&str; 9] = [
    "q_proj",
    "k_proj",
    "v_proj",
    "attn_scores",
    "attn_values",
    "out_proj",
    "ffn_up",
    "ffn_down",
    "lm_head",
];

fn add(a: u64, b: u64) -> Result<u64> {
    a.checked_add(b).ok_or(Error::Overflow("cost totals"))
}

fn product(factors: &[u64]) -> Result<u64> {
    factors
        .iter()
        .try_fold(1u64, |acc, &f| acc.checked_mul(f))
        .ok_or(Error::Overflow("kernel cost"))
}

fn sum(terms: &[u64]) -> Result<u64> {
    terms
        .iter()
        .try_fold(0u64, |acc, &t| acc.checked_add(t))
        .ok_or(Error::Overflow("kernel cost"))
}

/// Dense `(m x k) * (k x n)`; each operand and the result touch memory once.
pub fn matmul_cost(m: u64, k: u64, n: u64, bytes_per_elem: u64) -> Result<KernelCost> {
    for (dim, value) in [("m", m), ("k", k), ("n", n), ("bytes_per_elem", bytes_per_elem)] {
        if value == 0 {
            return Err(Error::InvalidDimension(dim));
        }
    }
    let flops = product(&[2, m, k, n])?;
    let elems = sum(&[product(&[m, k])?, product(&[k, n])?, product(&[m, n])?])?;
    Ok(KernelCost {
        name: "matmul".into(),
        layer: None,
        flops,
        mops: product(&[elems, bytes_per_elem])?,
        weight_bytes: 0,
    })
}

/// A weight projection: `rows x in_dim` activations times an `in_dim x out_dim`
/// weight matrix.
fn linear(name: &str, rows: u64, in_dim: u64, out_dim: u64, b: u64) -> Result<KernelCost> {
    let mut cost = matmul_cost(rows, in_dim, out_dim, b)?.named(name);
    cost.weight_bytes = product(&[in_dim, out_dim, b])?;
    Ok(cost)
}

pub fn elementwise_cost(
    n_elems: u64,
    flops_per_elem: u64,
    reads: u64,
    writes: u64,
    bytes_per_elem: u64,
) -> Result<KernelCost> {
    if n_elems == 0 {
        return Err(Error::InvalidDimension("n_elems"));
    }
    Ok(KernelCost {
        name: "elementwise".into(),
        layer: None,
        flops: product(&[n_elems, flops_per_elem])?,
        mops: product(&[n_elems, add(reads, writes)?, bytes_per_elem])?,
        weight_bytes: 0,
    })
}

fn elementwise(name: &str, n_elems: u64, rule: ElementwiseRule, b: u64) -> Result<KernelCost> {
    Ok(elementwise_cost(n_elems, rule.flops_per_elem, rule.reads, rule.writes, b)?.named(name))
}

/// Token plus position embedding gather for `rows` tokens.
fn embedding(rows: u64, d: u64, b: u64) -> Result<KernelCost> {
    let elems = product(&[rows, d])?;
    let table_reads = product(&[2, elems, b])?;
    Ok(KernelCost {
        name: "embedding".into(),
        layer: None,
        flops: elems,
        mops: add(table_reads, product(&[elems, b])?)?,
        weight_bytes: table_reads,
    })
}

/// Shapes shared by one Transformer layer invocation.
struct LayerShape {
    /// Token rows processed by the projections: `B*S` (encoder) or `B` (decode step).
    rows: u64,
    /// Keys attended to per query row.
    keys: u64,
    batch: u64,
    d: u64,
    heads: u64,
    ffn: u64,
    b: u64,
}

impl LayerShape {
    fn kernels(&self, elementwise_on: bool, kv_write: bool) -> Result<Vec<KernelCost>> {
        let Self { rows, keys, batch: _, d, heads, ffn, b } = *self;
        let act = product(&[rows, d])?;
        // score tensor elements: rows * heads * keys
        let scores = product(&[rows, heads, keys])?;
        let key_tensor = product(&[self.batch, keys, d])?;

        let mut out = Vec::with_capacity(16);
        out.push(linear("q_proj", rows, d, d, b)?);
        out.push(linear("k_proj", rows, d, d, b)?);
        out.push(linear("v_proj", rows, d, d, b)?);
        if kv_write {
            out.push(KernelCost {
                name: "kv_cache_write".into(),
                layer: None,
                flops: 0,
                mops: product(&[2, act, b])?,
                weight_bytes: 0,
            });
        }
        out.push(KernelCost {
            name: "attn_scores".into(),
            layer: None,
            flops: product(&[2, rows, keys, d])?,
            mops: product(&[sum(&[act, key_tensor, scores])?, b])?,
            weight_bytes: 0,
        });
        if elementwise_on {
            out.push(elementwise("softmax", scores, SOFTMAX, b)?);
        }
        out.push(KernelCost {
            name: "attn_values".into(),
            layer: None,
            flops: product(&[2, rows, keys, d])?,
            mops: product(&[sum(&[scores, key_tensor, act])?, b])?,
            weight_bytes: 0,
        });
        out.push(linear("out_proj", rows, d, d, b)?);
        if elementwise_on {
            out.push(elementwise("residual_attn", act, RESIDUAL_ADD, b)?);
            out.push(elementwise("layer_norm_attn", act, LAYER_NORM, b)?);
        }
        out.push(linear("ffn_up", rows, d, ffn, b)?);
        if elementwise_on {
            out.push(elementwise("gelu", product(&[rows, ffn])?, GELU, b)?);
        }
        out.push(linear("ffn_down", rows, ffn, d, b)?);
        if elementwise_on {
            out.push(elementwise("residual_ffn", act, RESIDUAL_ADD, b)?);
            out.push(elementwise("layer_norm_ffn", act, LAYER_NORM, b)?);
        }
        Ok(out)
    }
}

/// One bidirectional pass over `S` tokens (matrix-matrix kernels).
pub fn encoder_forward_cost(
    config: &TransformerConfig,
    workload: &Workload,
) -> Result<CostBreakdown> {
    let b = workload.bytes_per_elem();
    let rows = product(&[workload.batch(), workload.seq_len()])?;
    let shape = LayerShape {
        rows,
        keys: workload.seq_len(),
        batch: workload.batch(),
        d: config.hidden_dim(),
        heads: config.num_heads(),
        ffn: config.ffn_dim(),
        b,
    };
    let layer = shape.kernels(workload.elementwise(), false)?;

    let mut kernels = Vec::new();
    if workload.include_embeddings() {
        kernels.push(embedding(rows, config.hidden_dim(), b)?);
    }
    for l in 0..config.num_layers() {
        kernels.extend(layer.iter().cloned().map(|k| k.at_layer(l)));
    }
    CostBreakdown::from_kernels(kernels)
}

/// One autoregressive step with `kv_len` cached entries, the current token
/// included.
pub fn decoder_step_cost(
    config: &TransformerConfig,
    workload: &Workload,
    kv_len: u64,
) -> Result<CostBreakdown> {
    if kv_len == 0 {
        return Err(Error::InvalidState("decoder step requires kv_len >= 1".into()));
    }
    let b = workload.bytes_per_elem();
    let batch = workload.batch();
    let shape = LayerShape {
        rows: batch,
        keys: kv_len,
        batch,
        d: config.hidden_dim(),
        heads: config.num_heads(),
        ffn: config.ffn_dim(),
        b,
    };
    let layer = shape.kernels(workload.elementwise(), true)?;

    let mut kernels = Vec::new();
    if workload.include_embeddings() {
        kernels.push(embedding(batch, config.hidden_dim(), b)?);
    }
    for l in 0..config.num_layers() {
        kernels.extend(layer.iter().cloned().map(|k| k.at_layer(l)));
    }
    if workload.include_embeddings() {
        kernels.push(linear("lm_head", batch, config.hidden_dim(), config.vocab_size(), b)?);
    }
    CostBreakdown::from_kernels(kernels)
}

/// Generates `S` tokens one step at a time starting from an empty cache;
/// kernel-wise sum of the steps with `kv_len = 1..=S`.
pub fn decoder_generate_cost(
    config: &TransformerConfig,
    workload: &Workload,
) -> Result<CostBreakdown> {
    let first = decoder_step_cost(config, workload, 1)?;
    let mut kernels = first.kernels;
    for kv_len in 2..=workload.seq_len() {
        let step = decoder_step_cost(config, workload, kv_len)?;
        for (acc, k) in kernels.iter_mut().zip(step.kernels.iter()) {
            acc.accumulate(k)?;
        }
    }
    CostBreakdown::from_kernels(kernels)
}

/// Dispatches on the architecture class of `config`.
pub fn inference_cost(config: &TransformerConfig, workload: &Workload) -> Result<CostBreakdown> {
    match config.arch_class() {
        crate::model_spec::ArchClass::Encoder => encoder_forward_cost(config, workload),
        crate::model_spec::ArchClass::Decoder => decoder_generate_cost(config, workload),
    }
}

pub fn arithmetic_intensity(cost: &CostBreakdown) -> Result<ArithmeticIntensity> {
    ArithmeticIntensity::new(cost.total_flops, cost.total_mops)
}
