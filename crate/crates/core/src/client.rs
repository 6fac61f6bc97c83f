//! Hardware model of a participating client.
//!
//! A client is a dataset shard plus a machine: a memory budget that caps the
//! mini-batch size it can load, and timing coefficients that turn a batch size
//! into simulated wall time for one local epoch. Memory use is linear in the
//! batch (`mem_model_fixed` for parameters, activations and framework
//! overhead, plus `mem_per_sample` per sample in flight), which makes
//! feasibility downward closed: if batch `b` fits, every smaller batch fits.
//! That closure property is what makes binary search over batch sizes sound.

use crate::error::{Error, Result};

/// Result of attempting to load one mini-batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchAttempt {
    Success,
    OutOfMemory,
}

impl BatchAttempt {
    pub fn succeeded(self) -> bool {
        matches!(self, BatchAttempt::Success)
    }
}

/// Static description of one client: its shard size, memory budget, and
/// timing coefficients. Memory is in MB, times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientProfile {
    pub id: usize,
    /// Samples in this client's shard.
    pub n_samples: usize,
    /// Total device memory available to training.
    pub mem_capacity: f64,
    /// Memory consumed regardless of batch size (model, optimizer, runtime).
    pub mem_model_fixed: f64,
    /// Additional memory per sample in a loaded batch.
    pub mem_per_sample: f64,
    /// Time to stage one batch onto the device.
    pub t_load: f64,
    /// Fixed per-batch compute overhead (kernel launch, sync).
    pub t_fixed: f64,
    /// Per-sample compute time.
    pub t_per_sample: f64,
}

impl ClientProfile {
    /// Validates the profile. Every client must be able to load at least a
    /// batch of one sample, otherwise it could never participate.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: usize,
        n_samples: usize,
        mem_capacity: f64,
        mem_model_fixed: f64,
        mem_per_sample: f64,
        t_load: f64,
        t_fixed: f64,
        t_per_sample: f64,
    ) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::Invalid(format!("client {id}: empty shard")));
        }
        for (name, v) in [
            ("mem_capacity", mem_capacity),
            ("mem_model_fixed", mem_model_fixed),
            ("mem_per_sample", mem_per_sample),
            ("t_load", t_load),
            ("t_fixed", t_fixed),
            ("t_per_sample", t_per_sample),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Invalid(format!(
                    "client {id}: {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if mem_per_sample <= 0.0 || t_per_sample <= 0.0 || t_load <= 0.0 {
            return Err(Error::Invalid(format!(
                "client {id}: mem_per_sample, t_load and t_per_sample must be positive"
            )));
        }
        let profile = ClientProfile {
            id,
            n_samples,
            mem_capacity,
            mem_model_fixed,
            mem_per_sample,
            t_load,
            t_fixed,
            t_per_sample,
        };
        if profile.max_feasible_batch() < 1 {
            return Err(Error::Invalid(format!(
                "client {id}: memory budget too small for even a single-sample batch \
                 (capacity {mem_capacity}, fixed {mem_model_fixed}, per-sample {mem_per_sample})"
            )));
        }
        Ok(profile)
    }

    /// Memory needed to train with batch size `b`.
    pub fn memory_needed(&self, b: usize) -> f64 {
        self.mem_model_fixed + self.mem_per_sample * b as f64
    }

    /// Largest batch this client can physically run: the memory budget turned
    /// into a sample count, but never more than the shard itself holds.
    pub fn max_feasible_batch(&self) -> usize {
        let headroom = self.mem_capacity - self.mem_model_fixed;
        if headroom < self.mem_per_sample {
            return 0;
        }
        let by_memory = (headroom / self.mem_per_sample).floor() as usize;
        by_memory.min(self.n_samples)
    }

    /// Attempts to load a batch of `b` samples. Deterministic: feasibility
    /// depends only on the profile, so repeated attempts agree.
    pub fn try_batch(&self, b: usize) -> BatchAttempt {
        if b >= 1 && b <= self.max_feasible_batch() {
            BatchAttempt::Success
        } else {
            BatchAttempt::OutOfMemory
        }
    }

    /// Simulated wall time for one local epoch at batch size `b`: each of the
    /// `ceil(n / b)` batches pays the load and fixed cost, and every sample
    /// pays the per-sample cost. Larger batches amortize the per-batch terms,
    /// so epoch time is non-increasing in `b`.
    pub fn epoch_time(&self, b: usize) -> Result<f64> {
        if b < 1 || b > self.n_samples {
            return Err(Error::Invalid(format!(
                "client {}: epoch batch {} outside [1, {}]",
                self.id, b, self.n_samples
            )));
        }
        let n_batches = self.n_samples.div_ceil(b) as f64;
        Ok(n_batches * (self.t_load + self.t_fixed) + self.n_samples as f64 * self.t_per_sample)
    }

    /// Cost of a probe that dies while loading: the batch was staged and the
    /// attempt aborted before any per-sample work happened.
    pub fn failed_attempt_time(&self) -> f64 {
        self.t_load + self.t_fixed
    }
}
