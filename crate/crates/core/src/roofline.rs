//! Roofline latency estimates, the two-level cache access-time model and the
//! capacity-based trainable-size bound.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::cost_model::CostBreakdown;
use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Relative width of the band in which compute and memory time count as equal.
pub const BALANCED_EPSILON: f64 = 0.01;

/// Bytes of device memory per trainable parameter assumed by
/// [`max_trainable_params`] when no divisor is given.
pub const DEFAULT_CAPACITY_DIVISOR: u64 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareSpec<T> {
    pub name: String,
    pub year: T,
    /// FLOP/s.
    pub peak_flops: T,
    /// Bytes/s.
    pub dram_bw: T,
    /// Bytes.
    pub mem_capacity: u64,
    /// Bytes/s; only used by trend fitting.
    pub interconnect_bw: Option<T>,
}

impl<T: Real> HardwareSpec<T> {
    pub fn new(name: impl Into<String>, year: T, peak_flops: T, dram_bw: T, mem_capacity: u64) -> Result<Self> {
        let hw = Self {
            name: name.into(),
            year,
            peak_flops,
            dram_bw,
            mem_capacity,
            interconnect_bw: None,
        };
        hw.validate()?;
        Ok(hw)
    }

    pub fn with_interconnect(mut self, bw: T) -> Self {
        self.interconnect_bw = Some(bw);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: T| {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{}: {field} must be positive, got {v}", self.name)))
            }
        };
        positive("peak_flops", self.peak_flops)?;
        positive("dram_bw", self.dram_bw)?;
        if self.mem_capacity == 0 {
            return Err(Error::Validation(format!("{}: mem_capacity must be positive", self.name)));
        }
        if let Some(bw) = self.interconnect_bw {
            positive("interconnect_bw", bw)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    ComputeBound,
    MemoryBound,
    Balanced,
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ComputeBound => "compute_bound",
            Self::MemoryBound => "memory_bound",
            Self::Balanced => "balanced",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RooflineEstimate<T> {
    pub compute_time: T,
    pub memory_time: T,
    pub latency: T,
    pub bound: Bound,
    pub ridge_intensity: T,
}

/// Intensity at which compute and memory time cross.
pub fn ridge_point<T: Real>(hw: &HardwareSpec<T>) -> T {
    hw.peak_flops / hw.dram_bw
}

/// `max(flops / peak, bytes / bandwidth)`; no overlap or occupancy terms.
pub fn estimate_latency<T: Real>(cost: &CostBreakdown, hw: &HardwareSpec<T>) -> RooflineEstimate<T> {
    let compute_time = T::from_count(cost.total_flops()) / hw.peak_flops;
    let memory_time = T::from_count(cost.total_mops()) / hw.dram_bw;
    let latency = compute_time.max(memory_time);
    let bound = if (compute_time - memory_time).abs() <= T::lit(BALANCED_EPSILON) * latency {
        Bound::Balanced
    } else if memory_time > compute_time {
        Bound::MemoryBound
    } else {
        Bound::ComputeBound
    };
    RooflineEstimate {
        compute_time,
        memory_time,
        latency,
        bound,
        ridge_intensity: ridge_point(hw),
    }
}

/// Latencies relative to `estimates[baseline_index]`.
pub fn normalized_latency<T: Real>(estimates: &[RooflineEstimate<T>], baseline_index: usize) -> Result<Vec<T>> {
    let baseline = estimates
        .get(baseline_index)
        .ok_or(Error::Index {
            index: baseline_index,
            len: estimates.len(),
        })?
        .latency;
    if baseline.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
        return Err(Error::DivisionDomain("baseline latency must be positive"));
    }
    Ok(estimates.iter().map(|e| e.latency / baseline).collect())
}

fn check_hit_rate<T: Scalar>(hit_rate: T) -> Result<()> {
    if hit_rate >= T::zero() && hit_rate <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("hit rate {hit_rate} outside [0, 1]")))
    }
}

/// Mean access latency of a cache backed by DRAM. Exact for rational
/// inputs.
pub fn avg_access_time<T: Scalar>(hit_rate: T, t_hit: T, t_miss: T) -> Result<T> {
    check_hit_rate(hit_rate)?;
    if !(t_hit > T::zero() && t_miss > T::zero()) {
        return Err(Error::Domain("access times must be positive".into()));
    }
    Ok(hit_rate * t_hit + (T::one() - hit_rate) * t_miss)
}

/// Miss latency above which the DRAM share of access time alone exceeds
/// `t_compute`.
pub fn dram_dominance_threshold<T: Scalar>(hit_rate: T, t_compute: T) -> Result<T> {
    check_hit_rate(hit_rate)?;
    if hit_rate == T::one() {
        return Err(Error::NoThreshold);
    }
    if t_compute.partial_cmp(&T::zero()) != Some(Ordering::Greater) {
        return Err(Error::Domain("t_compute must be positive".into()));
    }
    Ok(t_compute / (T::one() - hit_rate))
}

/// Upper bound on parameters trainable within device memory, at `divisor`
/// bytes per parameter (weights, gradients and optimizer state together).
pub fn max_trainable_params<T>(hw: &HardwareSpec<T>, divisor: u64) -> Result<u64> {
    if divisor == 0 {
        return Err(Error::InvalidDimension("divisor"));
    }
    Ok(hw.mem_capacity / divisor)
}
