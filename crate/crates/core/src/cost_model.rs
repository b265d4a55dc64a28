//! Cluster cost model: universal constants, per-GPU memory footprints,
//! tabulated batch processing-time curves, and the closed-form step times of
//! the synchronous and asynchronous execution layouts.
//!
//! All memory quantities are abstract units (the model is scale-free); time
//! is in abstract time-units. Batch processing times are supplied as
//! tabulated `(batch, time)` measurements and interpolated piecewise-linearly
//! in between; per-sample time is required to be non-increasing in batch
//! size and curves violating that are rejected at construction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack for the per-sample monotonicity check, so that curves that
/// are flat up to rounding are not rejected.
const ETA_MONOTONE_SLACK: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum CostModelError {
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error("invalid processing curve: {0}")]
    InvalidCurve(String),
    #[error("batch size {batch} outside tabulated range [{min}, {max}]")]
    BatchOutOfRange { batch: f64, min: f64, max: f64 },
    #[error("invalid plan config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Infeasible(FeasibilityViolation),
}

/// A violated memory constraint, naming the side and the numbers involved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityViolation {
    pub side: ConstraintSide,
    /// Per-GPU memory the plan requires.
    pub required: f64,
    /// Per-GPU memory available.
    pub limit: f64,
}

impl std::fmt::Display for FeasibilityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "infeasible plan: {} memory {} exceeds per-GPU limit {}",
            self.side, self.required, self.limit
        )
    }
}

/// Which memory constraint a slack or violation refers to. The synchronous
/// layout has a single shared constraint; the asynchronous layout has one
/// per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintSide {
    Shared,
    Trainer,
    Generator,
}

impl std::fmt::Display for ConstraintSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintSide::Shared => write!(f, "shared"),
            ConstraintSide::Trainer => write!(f, "trainer"),
            ConstraintSide::Generator => write!(f, "generator"),
        }
    }
}

/// Universal cluster constants: GPU count, global batch, per-GPU memory,
/// model size, and the activation / KV-cache coefficients that scale with
/// batch size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConstants {
    /// Total available GPUs.
    pub total_gpus: f64,
    /// Global batch size in samples per RL step.
    pub global_batch: f64,
    /// Maximum memory per GPU, in abstract units.
    pub mem_per_gpu: f64,
    /// Memory footprint of one model replica, same units.
    pub model_size: f64,
    /// Trainer activation memory per sample.
    pub activation_coeff: f64,
    /// Generator KV-cache memory per sample.
    pub kv_coeff: f64,
}

impl CostConstants {
    pub fn new(
        total_gpus: f64,
        global_batch: f64,
        mem_per_gpu: f64,
        model_size: f64,
        activation_coeff: f64,
        kv_coeff: f64,
    ) -> Result<Self, CostModelError> {
        let c = Self {
            total_gpus,
            global_batch,
            mem_per_gpu,
            model_size,
            activation_coeff,
            kv_coeff,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CostModelError> {
        let fields = [
            ("total_gpus", self.total_gpus),
            ("global_batch", self.global_batch),
            ("mem_per_gpu", self.mem_per_gpu),
            ("model_size", self.model_size),
            ("activation_coeff", self.activation_coeff),
            ("kv_coeff", self.kv_coeff),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(CostModelError::InvalidConstants(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        // A feasible plan must exist: the trainer replica (4x model size for
        // weights, optimizer moments and gradients) and the generator replica
        // must each fit into the cluster.
        let cluster_mem = self.mem_per_gpu * self.total_gpus;
        if 4.0 * self.model_size > cluster_mem {
            return Err(CostModelError::InvalidConstants(format!(
                "trainer replica needs {} units but the cluster holds {}",
                4.0 * self.model_size,
                cluster_mem
            )));
        }
        Ok(())
    }

    /// Per-GPU trainer memory: weights, optimizer moments (2x), gradients,
    /// and activations, all sharded over `trainer_mp` GPUs.
    ///
    /// Equals `(4*W0 + A_t*b_t) / m_t`.
    pub fn trainer_memory(&self, trainer_batch: f64, trainer_mp: f64) -> f64 {
        (4.0 * self.model_size + self.activation_coeff * trainer_batch) / trainer_mp
    }

    /// Per-GPU generator memory: (possibly quantized) weights plus KV cache,
    /// sharded over `generator_mp` GPUs.
    ///
    /// Equals `(weight_scale*W0 + K_g*b_g) / m_g`.
    pub fn generator_memory(
        &self,
        generator_batch: f64,
        generator_mp: f64,
        quant: &QuantizationProfile,
    ) -> f64 {
        (quant.weight_scale * self.model_size + self.kv_coeff * generator_batch) / generator_mp
    }
}

/// Inference-side quantization, modeled purely as multipliers: `weight_scale`
/// shrinks the generator's weight footprint and `time_scale` shrinks its
/// batch processing time. The identity profile is `(1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationProfile {
    pub weight_scale: f64,
    pub time_scale: f64,
}

impl QuantizationProfile {
    pub fn new(weight_scale: f64, time_scale: f64) -> Result<Self, CostModelError> {
        for (name, v) in [("weight_scale", weight_scale), ("time_scale", time_scale)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(CostModelError::InvalidConstants(format!(
                    "{name} must be in (0, 1], got {v}"
                )));
            }
        }
        Ok(Self {
            weight_scale,
            time_scale,
        })
    }

    pub fn identity() -> Self {
        Self {
            weight_scale: 1.0,
            time_scale: 1.0,
        }
    }
}

impl Default for QuantizationProfile {
    fn default() -> Self {
        Self::identity()
    }
}

/// Tabulated batch processing times with piecewise-linear interpolation.
///
/// Construction rejects curves whose per-sample time `tau(b)/b` increases
/// anywhere across the tabulated points. Piecewise-linear interpolation of
/// `tau` preserves that property between points, so the derived per-sample
/// time is non-increasing over the whole domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessingCurve {
    points: Vec<(f64, f64)>,
}

impl ProcessingCurve {
    /// Build from `(batch, batch_time)` pairs.
    pub fn from_batch_times(points: Vec<(f64, f64)>) -> Result<Self, CostModelError> {
        if points.is_empty() {
            return Err(CostModelError::InvalidCurve("no points".into()));
        }
        for &(b, t) in &points {
            if !b.is_finite() || b <= 0.0 {
                return Err(CostModelError::InvalidCurve(format!(
                    "batch size must be positive, got {b}"
                )));
            }
            if !t.is_finite() || t <= 0.0 {
                return Err(CostModelError::InvalidCurve(format!(
                    "batch time must be positive, got {t}"
                )));
            }
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(CostModelError::InvalidCurve(format!(
                    "batch sizes must be strictly increasing: {} then {}",
                    w[0].0, w[1].0
                )));
            }
            let eta_lo = w[0].1 / w[0].0;
            let eta_hi = w[1].1 / w[1].0;
            if eta_hi > eta_lo * (1.0 + ETA_MONOTONE_SLACK) {
                return Err(CostModelError::InvalidCurve(format!(
                    "per-sample time increases from {eta_lo} at b={} to {eta_hi} at b={}",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(Self { points })
    }

    /// Build from `(batch, per_sample_time)` pairs.
    pub fn from_per_sample_times(points: Vec<(f64, f64)>) -> Result<Self, CostModelError> {
        Self::from_batch_times(points.into_iter().map(|(b, eta)| (b, eta * b)).collect())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn min_batch(&self) -> f64 {
        self.points[0].0
    }

    pub fn max_batch(&self) -> f64 {
        self.points[self.points.len() - 1].0
    }

    /// Interpolated batch time `tau(b)`. Out-of-range batch sizes are an
    /// error; the curve never extrapolates.
    pub fn batch_time(&self, batch: f64) -> Result<f64, CostModelError> {
        let (min, max) = (self.min_batch(), self.max_batch());
        if !batch.is_finite() || batch < min || batch > max {
            return Err(CostModelError::BatchOutOfRange { batch, min, max });
        }
        let idx = self
            .points
            .partition_point(|&(b, _)| b < batch)
            .min(self.points.len() - 1);
        let (b_hi, t_hi) = self.points[idx];
        if b_hi == batch {
            return Ok(t_hi);
        }
        let (b_lo, t_lo) = self.points[idx - 1];
        Ok(t_lo + (t_hi - t_lo) * (batch - b_lo) / (b_hi - b_lo))
    }

    /// Per-sample time `eta(b) = tau(b)/b`.
    pub fn per_sample_time(&self, batch: f64) -> Result<f64, CostModelError> {
        Ok(self.batch_time(batch)? / batch)
    }
}

/// A full cost-model instance: constants, one curve per side, and the
/// generator quantization profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub consts: CostConstants,
    pub trainer_curve: ProcessingCurve,
    pub generator_curve: ProcessingCurve,
    pub quant: QuantizationProfile,
}

impl CostModel {
    pub fn new(
        consts: CostConstants,
        trainer_curve: ProcessingCurve,
        generator_curve: ProcessingCurve,
    ) -> Self {
        Self {
            consts,
            trainer_curve,
            generator_curve,
            quant: QuantizationProfile::identity(),
        }
    }

    pub fn with_quant(mut self, quant: QuantizationProfile) -> Self {
        self.quant = quant;
        self
    }

    /// Trainer per-sample time at the given microbatch size.
    pub fn trainer_eta(&self, trainer_batch: f64) -> Result<f64, CostModelError> {
        self.trainer_curve.per_sample_time(trainer_batch)
    }

    /// Generator per-sample time at the given decode concurrency, scaled by
    /// the quantization time multiplier.
    pub fn generator_eta(&self, generator_batch: f64) -> Result<f64, CostModelError> {
        Ok(self.generator_curve.per_sample_time(generator_batch)? * self.quant.time_scale)
    }

    /// Synchronous step time: trainer and generator run sequentially on all
    /// GPUs with a shared model-parallel degree, so the step time is the sum
    /// `(B0/G0) * m * (eta_t + eta_g)` and both replicas must fit together.
    pub fn step_time_baseline(
        &self,
        trainer_batch: f64,
        generator_batch: f64,
        mp: f64,
    ) -> Result<f64, CostModelError> {
        let c = &self.consts;
        let required = c.trainer_memory(trainer_batch, mp)
            + c.generator_memory(generator_batch, mp, &self.quant);
        if required > c.mem_per_gpu * (1.0 + 1e-12) {
            return Err(CostModelError::Infeasible(FeasibilityViolation {
                side: ConstraintSide::Shared,
                required,
                limit: c.mem_per_gpu,
            }));
        }
        let eta_t = self.trainer_eta(trainer_batch)?;
        let eta_g = self.generator_eta(generator_batch)?;
        Ok(c.global_batch / c.total_gpus * mp * (eta_t + eta_g))
    }

    /// Asynchronous step time: trainer and generator run concurrently on
    /// disjoint GPU fractions `theta` and `1 - theta`, so the step time is
    /// the slower arm, `(B0/G0) * max(eta_t*m_t/theta, eta_g*m_g/(1-theta))`,
    /// and each side has its own memory constraint.
    pub fn step_time_async(
        &self,
        trainer_batch: f64,
        generator_batch: f64,
        trainer_mp: f64,
        generator_mp: f64,
        theta: f64,
    ) -> Result<f64, CostModelError> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(CostModelError::InvalidConfig(format!(
                "trainer fraction must lie in (0, 1), got {theta}"
            )));
        }
        let c = &self.consts;
        let trainer_mem = c.trainer_memory(trainer_batch, trainer_mp);
        if trainer_mem > c.mem_per_gpu * (1.0 + 1e-12) {
            return Err(CostModelError::Infeasible(FeasibilityViolation {
                side: ConstraintSide::Trainer,
                required: trainer_mem,
                limit: c.mem_per_gpu,
            }));
        }
        let generator_mem = c.generator_memory(generator_batch, generator_mp, &self.quant);
        if generator_mem > c.mem_per_gpu * (1.0 + 1e-12) {
            return Err(CostModelError::Infeasible(FeasibilityViolation {
                side: ConstraintSide::Generator,
                required: generator_mem,
                limit: c.mem_per_gpu,
            }));
        }
        let eta_t = self.trainer_eta(trainer_batch)?;
        let eta_g = self.generator_eta(generator_batch)?;
        let trainer_arm = eta_t * trainer_mp / theta;
        let generator_arm = eta_g * generator_mp / (1.0 - theta);
        Ok(c.global_batch / c.total_gpus * trainer_arm.max(generator_arm))
    }
}

/// A candidate execution plan. The synchronous baseline uses a single shared
/// model-parallel degree (`trainer_mp == generator_mp`) and no trainer
/// fraction; the asynchronous layout carries all five knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub trainer_batch: f64,
    pub generator_batch: f64,
    pub trainer_mp: f64,
    pub generator_mp: f64,
    /// Fraction of GPUs allocated to the trainer; `None` for the baseline.
    pub trainer_fraction: Option<f64>,
}

impl PlanConfig {
    pub fn baseline(
        trainer_batch: f64,
        generator_batch: f64,
        mp: f64,
    ) -> Result<Self, CostModelError> {
        let c = Self {
            trainer_batch,
            generator_batch,
            trainer_mp: mp,
            generator_mp: mp,
            trainer_fraction: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn asynchronous(
        trainer_batch: f64,
        generator_batch: f64,
        trainer_mp: f64,
        generator_mp: f64,
        theta: f64,
    ) -> Result<Self, CostModelError> {
        let c = Self {
            trainer_batch,
            generator_batch,
            trainer_mp,
            generator_mp,
            trainer_fraction: Some(theta),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CostModelError> {
        for (name, v) in [
            ("trainer_batch", self.trainer_batch),
            ("generator_batch", self.generator_batch),
        ] {
            if !v.is_finite() || v < 1.0 {
                return Err(CostModelError::InvalidConfig(format!(
                    "{name} must be >= 1, got {v}"
                )));
            }
        }
        for (name, v) in [("trainer_mp", self.trainer_mp), ("generator_mp", self.generator_mp)] {
            if !v.is_finite() || v < 1.0 {
                return Err(CostModelError::InvalidConfig(format!(
                    "{name} must be >= 1, got {v}"
                )));
            }
        }
        if let Some(theta) = self.trainer_fraction {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(CostModelError::InvalidConfig(format!(
                    "trainer_fraction must lie in (0, 1), got {theta}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_async(&self) -> bool {
        self.trainer_fraction.is_some()
    }

    /// Evaluate the matching step-time formula on this config.
    pub fn step_time(&self, model: &CostModel) -> Result<f64, CostModelError> {
        match self.trainer_fraction {
            None => model.step_time_baseline(self.trainer_batch, self.generator_batch, self.trainer_mp),
            Some(theta) => model.step_time_async(
                self.trainer_batch,
                self.generator_batch,
                self.trainer_mp,
                self.generator_mp,
                theta,
            ),
        }
    }
}
