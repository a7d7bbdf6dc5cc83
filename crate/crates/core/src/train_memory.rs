//! Training memory footprint and the activation-checkpointing trade-off.
//!
//! Activations of one layer are modeled as `retained` linear-path tensors of
//! `B*S*d` elements plus the `B*h*S*S` attention probabilities. Checkpointing
//! every `k` layers keeps one `B*S*d` boundary tensor per segment and one
//! segment of full layers live during the backward pass. Backward costs twice
//! the forward FLOPs, so a training step is three forward passes.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model_spec::{param_count, TransformerConfig, Workload};

/// Linear-path tensors kept per layer: inputs/outputs of the six projections
/// plus residual and normalization intermediates.
pub const DEFAULT_RETAINED_TENSORS: u64 = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    SgdMomentum,
    Adam,
}

impl OptimizerKind {
    /// Extra per-parameter state tensors.
    pub fn state_multiplier(self) -> u64 {
        match self {
            Self::Sgd => 0,
            Self::SgdMomentum => 1,
            Self::Adam => 2,
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sgd => "sgd",
            Self::SgdMomentum => "sgd_momentum",
            Self::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "sgd_momentum" => Ok(Self::SgdMomentum),
            "adam" => Ok(Self::Adam),
            other => Err(Error::Parse(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MemoryFootprint {
    pub weights: u64,
    pub gradients: u64,
    pub optimizer_state: u64,
    pub activations: u64,
    pub total: u64,
}

fn product(factors: &[u64]) -> Result<u64> {
    factors
        .iter()
        .try_fold(1u64, |acc, &f| acc.checked_mul(f))
        .ok_or(Error::Overflow("training memory"))
}

fn sum(terms: &[u64]) -> Result<u64> {
    terms
        .iter()
        .try_fold(0u64, |acc, &t| acc.checked_add(t))
        .ok_or(Error::Overflow("training memory"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActivationModel {
    retained_tensors: u64,
}

impl Default for ActivationModel {
    fn default() -> Self {
        Self {
            retained_tensors: DEFAULT_RETAINED_TENSORS,
        }
    }
}

impl ActivationModel {
    /// At least one retained tensor is required so that a full layer is never
    /// smaller than a boundary tensor.
    pub fn new(retained_tensors: u64) -> Result<Self> {
        if retained_tensors == 0 {
            return Err(Error::InvalidDimension("retained_tensors"));
        }
        Ok(Self { retained_tensors })
    }

    pub fn retained_tensors(&self) -> u64 {
        self.retained_tensors
    }

    /// One `B*S*d` tensor.
    pub fn boundary_bytes(&self, config: &TransformerConfig, workload: &Workload) -> Result<u64> {
        product(&[
            workload.batch(),
            workload.seq_len(),
            config.hidden_dim(),
            workload.bytes_per_elem(),
        ])
    }

    /// Everything one layer keeps for its backward pass.
    pub fn layer_bytes(&self, config: &TransformerConfig, workload: &Workload) -> Result<u64> {
        let (b, s) = (workload.batch(), workload.seq_len());
        let linear = product(&[self.retained_tensors, b, s, config.hidden_dim()])?;
        let attention = product(&[b, config.num_heads(), s, s])?;
        product(&[sum(&[linear, attention])?, workload.bytes_per_elem()])
    }

    /// Storing every layer's activations plus the final output.
    pub fn activation_bytes(&self, config: &TransformerConfig, workload: &Workload) -> Result<u64> {
        let layers = product(&[config.num_layers(), self.layer_bytes(config, workload)?])?;
        sum(&[layers, self.boundary_bytes(config, workload)?])
    }

    /// `ceil(L/k)` boundary tensors plus one live segment of `k` full layers.
    pub fn checkpointed_bytes(&self, config: &TransformerConfig, workload: &Workload, every_k: u64) -> Result<u64> {
        check_every_k(config, every_k)?;
        let segments = config.num_layers().div_ceil(every_k);
        sum(&[
            product(&[segments, self.boundary_bytes(config, workload)?])?,
            product(&[every_k, self.layer_bytes(config, workload)?])?,
        ])
    }

    /// Bytes and recompute overhead for every `k` in `1..=L`.
    pub fn checkpoint_sweep(&self, config: &TransformerConfig, workload: &Workload) -> Result<Vec<CheckpointPoint>> {
        (1..=config.num_layers())
            .map(|k| {
                Ok(CheckpointPoint {
                    every_k: k,
                    activation_bytes: self.checkpointed_bytes(config, workload, k)?,
                    recompute_overhead: recompute_overhead(config, k)?,
                })
            })
            .collect()
    }

    pub fn footprint(
        &self,
        config: &TransformerConfig,
        workload: &Workload,
        optimizer: OptimizerKind,
        param_bytes: u64,
        state_bytes: u64,
    ) -> Result<MemoryFootprint> {
        let params = param_count(config, true)?;
        let weights = product(&[params, param_bytes])?;
        let gradients = product(&[params, param_bytes])?;
        let optimizer_state = product(&[params, state_bytes, optimizer.state_multiplier()])?;
        let activations = self.activation_bytes(config, workload)?;
        Ok(MemoryFootprint {
            weights,
            gradients,
            optimizer_state,
            activations,
            total: sum(&[weights, gradients, optimizer_state, activations])?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CheckpointPoint {
    pub every_k: u64,
    pub activation_bytes: u64,
    #[serde(serialize_with = "ratio_as_f64")]
    pub recompute_overhead: Ratio<u64>,
}

fn ratio_as_f64<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(ratio_to_f64(*r))
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn check_every_k(config: &TransformerConfig, every_k: u64) -> Result<()> {
    if every_k == 0 || every_k > config.num_layers() {
        return Err(Error::Domain(format!(
            "checkpoint interval {every_k} outside 1..={}",
            config.num_layers()
        )));
    }
    Ok(())
}

/// Training memory with the default activation model.
pub fn footprint(
    config: &TransformerConfig,
    workload: &Workload,
    optimizer: OptimizerKind,
    param_bytes: u64,
    state_bytes: u64,
) -> Result<MemoryFootprint> {
    ActivationModel::default().footprint(config, workload, optimizer, param_bytes, state_bytes)
}

pub fn activation_bytes(config: &TransformerConfig, workload: &Workload) -> Result<u64> {
    ActivationModel::default().activation_bytes(config, workload)
}

pub fn checkpointed_bytes(config: &TransformerConfig, workload: &Workload, every_k: u64) -> Result<u64> {
    ActivationModel::default().checkpointed_bytes(config, workload, every_k)
}

/// Extra forward FLOPs over baseline training FLOPs (forward + 2x backward).
///
/// Each segment recomputes all but its stored boundary layer, i.e.
/// `L - ceil(L/k)` layers, giving `(k-1)/(3k)` when `k` divides `L`.
pub fn recompute_overhead(config: &TransformerConfig, every_k: u64) -> Result<Ratio<u64>> {
    check_every_k(config, every_k)?;
    let layers = config.num_layers();
    let recomputed = layers - layers.div_ceil(every_k);
    let baseline = product(&[3, layers])?;
    Ok(Ratio::new(recomputed, baseline))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_spec::{preset, ArchClass, Precision};

    fn stack(layers: u64) -> TransformerConfig {
        TransformerConfig::new("stack", layers, 1024, 1, None, 1, 1, ArchClass::Decoder).unwrap()
    }

    #[test]
    fn optimizer_multipliers() {
        let cfg = preset("bert-base").unwrap();
        let w = Workload::new(128).unwrap();
        let sgd = footprint(&cfg, &w, OptimizerKind::Sgd, 4, 4).unwrap();
        assert_eq!(sgd.optimizer_state, 0);
        let mom = footprint(&cfg, &w, OptimizerKind::SgdMomentum, 4, 4).unwrap();
        let adam = footprint(&cfg, &w, OptimizerKind::Adam, 4, 4).unwrap();
        assert_eq!(adam.optimizer_state, 2 * mom.optimizer_state);
        assert_eq!(adam.optimizer_state, 2 * adam.weights);
    }

    #[test]
    fn bert_base_training_components() {
        let cfg = preset("bert-base").unwrap();
        let w = Workload::new(512)
            .unwrap()
            .with_batch(32)
            .unwrap()
            .with_precision(Precision::Fp32);
        let fp = footprint(&cfg, &w, OptimizerKind::Adam, 4, 4).unwrap();
        let params = 108_768_768u64;
        assert_eq!(fp.weights, params * 4);
        assert_eq!(fp.gradients, fp.weights);
        assert_eq!(fp.optimizer_state, params * 8);
        let layer = (14 * 32 * 512 * 768 + 32 * 12 * 512 * 512) * 4;
        assert_eq!(fp.activations, 12 * layer + 32 * 512 * 768 * 4);
        assert_eq!(fp.total, fp.weights + fp.gradients + fp.optimizer_state + fp.activations);
        assert!(fp.total >= 4 * fp.weights);
    }

    #[test]
    fn activation_examples() {
        let cfg = preset("bert-base").unwrap();
        let w = Workload::new(128).unwrap();
        let bytes = activation_bytes(&cfg, &w).unwrap();
        assert_eq!(bytes, 12 * (14 * 128 * 768 + 12 * 128 * 128) + 128 * 768);
        assert_eq!(bytes, 18_972_672);

        let w2 = w.with_batch(2).unwrap();
        assert_eq!(activation_bytes(&cfg, &w2).unwrap(), 2 * bytes);

        let one = stack(1);
        let m = ActivationModel::default();
        assert_eq!(
            m.activation_bytes(&one, &w).unwrap(),
            m.layer_bytes(&one, &w).unwrap() + m.boundary_bytes(&one, &w).unwrap()
        );
    }

    #[test]
    fn checkpoint_degenerate_interval() {
        let cfg = preset("bert-base").unwrap();
        let w = Workload::new(128).unwrap();
        assert_eq!(
            checkpointed_bytes(&cfg, &w, 12).unwrap(),
            activation_bytes(&cfg, &w).unwrap()
        );
        assert!(checkpointed_bytes(&cfg, &w, 0).is_err());
        assert!(checkpointed_bytes(&cfg, &w, 13).is_err());
        assert!(recompute_overhead(&cfg, 13).is_err());
    }

    #[test]
    fn boundary_dominated_reduction() {
        let cfg = stack(100);
        let w = Workload::new(1).unwrap();
        let m = ActivationModel::new(1).unwrap();
        let full = m.activation_bytes(&cfg, &w).unwrap() as f64;
        let ckpt = m.checkpointed_bytes(&cfg, &w, 10).unwrap() as f64;
        assert!((full / ckpt - 5.0).abs() < 0.25);
    }

    #[test]
    fn overhead_values() {
        let cfg = preset("bert-base").unwrap();
        assert_eq!(recompute_overhead(&cfg, 1).unwrap(), Ratio::from_integer(0));
        assert_eq!(recompute_overhead(&cfg, 4).unwrap(), Ratio::new(1, 4));
        assert_eq!(recompute_overhead(&cfg, 12).unwrap(), Ratio::new(11, 36));
        assert!(ratio_to_f64(recompute_overhead(&cfg, 12).unwrap()) <= 1.0 / 3.0);
    }

    #[test]
    fn sweep_covers_every_interval() {
        let cfg = preset("bert-base").unwrap();
        let sweep = ActivationModel::default()
            .checkpoint_sweep(&cfg, &Workload::new(32).unwrap())
            .unwrap();
        assert_eq!(sweep.len(), 12);
        assert!(sweep.windows(2).all(|w| w[0].recompute_overhead <= w[1].recompute_overhead));
    }

    #[test]
    fn zero_retained_rejected() {
        assert!(ActivationModel::new(0).is_err());
    }
}
