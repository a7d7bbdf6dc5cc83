//! Analytical performance models for Transformer workloads: FLOP and memory
//! traffic counts, arithmetic intensity, roofline latency, training memory
//! with activation checkpointing, and exponential scaling-trend fits.
//!
//! Integer quantities (FLOPs, bytes, parameters) are `u64`; continuous models
//! are generic over [`Real`] (`f32` or `f64`). Exact ratios use
//! [`num_rational::Ratio`].

pub mod cost_model;
mod error;
pub mod hardware_file;
pub mod model_spec;
pub mod roofline;
mod scalar;
pub mod train_memory;
pub mod trends;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

pub use cost_model::{
    arithmetic_intensity, decoder_generate_cost, decoder_step_cost, elementwise_cost,
    encoder_forward_cost, inference_cost, matmul_cost, ArithmeticIntensity, CostBreakdown,
    KernelCost,
};
pub use model_spec::{load_config, param_count, preset, ArchClass, Precision, TransformerConfig, Workload};
pub use roofline::{
    avg_access_time, dram_dominance_threshold, estimate_latency, max_trainable_params,
    normalized_latency, ridge_point, Bound,
};
pub use train_memory::{
    activation_bytes, checkpointed_bytes, footprint, recompute_overhead, ActivationModel,
    CheckpointPoint, MemoryFootprint, OptimizerKind,
};
pub use trends::{factor_over, fit_rate, headline_rates, SeriesFilter};

pub type HardwareSpec = roofline::HardwareSpec<f64>;
pub type HardwareSpecF32 = roofline::HardwareSpec<f32>;
pub type RooflineEstimate = roofline::RooflineEstimate<f64>;
pub type RooflineEstimateF32 = roofline::RooflineEstimate<f32>;
pub type TrendSeries = trends::TrendSeries<f64>;
pub type TrendSeriesF32 = trends::TrendSeries<f32>;
pub type TrendFit = trends::TrendFit<f64>;
pub type TrendFitF32 = trends::TrendFit<f32>;
pub type TrendTable = trends::TrendTable<f64>;
