//! Constrained step-time minimization for the synchronous and asynchronous
//! execution layouts, the decoupled per-side optima, and the speedup report
//! with its inequality chain.
//!
//! Two solver modes exist. Continuous mode treats model-parallel degrees and
//! the trainer fraction as real numbers; memory constraints are active at
//! the optimum by construction and the strict speedup claim is asserted in
//! this mode only. Integer mode rounds model-parallel degrees up to whole
//! GPUs and quantizes the trainer fraction to GPU counts; it is the
//! deployment-planning path and reports gains without strictness guarantees.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost_model::{CostModel, CostModelError, PlanConfig};
use crate::util::DetRng;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error(transparent)]
    CostModel(#[from] CostModelError),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no feasible plan in the candidate grid")]
    NoFeasiblePlan,
    #[error("oracle grid has {cells} cells, above the enumeration bound {max}")]
    GridTooLarge { cells: u64, max: u64 },
}

/// Solver mode: real-valued relaxation vs whole-GPU deployment plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanMode {
    Continuous,
    Integer,
}

/// Candidate batch sizes for both sides, plus the solver mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub trainer_batches: Vec<f64>,
    pub generator_batches: Vec<f64>,
    pub mode: PlanMode,
}

impl GridSpec {
    pub fn new(
        trainer_batches: Vec<f64>,
        generator_batches: Vec<f64>,
        mode: PlanMode,
    ) -> Result<Self, PlannerError> {
        if trainer_batches.is_empty() || generator_batches.is_empty() {
            return Err(PlannerError::InvalidGrid("empty batch grid".into()));
        }
        Ok(Self {
            trainer_batches,
            generator_batches,
            mode,
        })
    }

    /// Default grid: powers of two within each curve's tabulated domain.
    pub fn powers_of_two(model: &CostModel, mode: PlanMode) -> Result<Self, PlannerError> {
        let pow2 = |lo: f64, hi: f64| -> Vec<f64> {
            let mut v = Vec::new();
            let mut b = 1.0;
            while b < lo {
                b *= 2.0;
            }
            while b <= hi {
                v.push(b);
                b *= 2.0;
            }
            v
        };
        Self::new(
            pow2(
                model.trainer_curve.min_batch(),
                model.trainer_curve.max_batch(),
            ),
            pow2(
                model.generator_curve.min_batch(),
                model.generator_curve.max_batch(),
            ),
            mode,
        )
    }
}

/// Slack of each memory constraint at a plan, `limit - required` per GPU.
/// The baseline has one shared constraint; the asynchronous layout has one
/// per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ConstraintSlacks {
    pub shared: Option<f64>,
    pub trainer: Option<f64>,
    pub generator: Option<f64>,
}

/// An optimized plan with its step time, per-GPU memory footprints, and
/// constraint slacks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub config: PlanConfig,
    pub step_time: f64,
    pub trainer_mem: f64,
    pub generator_mem: f64,
    pub slacks: ConstraintSlacks,
    pub warnings: Vec<String>,
}

impl PlanResult {
    fn rank(&self) -> (f64, f64, f64, f64, f64) {
        (
            self.step_time,
            self.config.trainer_mp,
            self.config.generator_mp,
            self.config.trainer_batch,
            self.config.generator_batch,
        )
    }

    /// Deterministic preference among candidates: smaller step time, then
    /// smaller model-parallel degrees, then smaller batch sizes.
    fn better_than(&self, other: &PlanResult) -> bool {
        let (a, b) = (self.rank(), other.rank());
        a.partial_cmp(&b) == Some(std::cmp::Ordering::Less)
    }
}

fn baseline_candidate(
    model: &CostModel,
    b_t: f64,
    b_g: f64,
    mode: PlanMode,
) -> Result<Option<PlanResult>, PlannerError> {
    let c = &model.consts;
    let (b_t, b_g) = match mode {
        PlanMode::Continuous => (b_t, b_g),
        PlanMode::Integer => (b_t.floor(), b_g.floor()),
    };
    if b_t < 1.0 || b_g < 1.0 {
        return Ok(None);
    }
    let required = c.trainer_memory(b_t, 1.0) + c.generator_memory(b_g, 1.0, &model.quant);
    let ratio = required / c.mem_per_gpu;
    let mp = match mode {
        PlanMode::Continuous => ratio.max(1.0),
        PlanMode::Integer => ratio.ceil().max(1.0),
    };
    let step_time = match model.step_time_baseline(b_t, b_g, mp) {
        Ok(t) => t,
        Err(CostModelError::Infeasible(_)) | Err(CostModelError::BatchOutOfRange { .. }) => {
            return Ok(None)
        }
        Err(e) => return Err(e.into()),
    };
    let trainer_mem = c.trainer_memory(b_t, mp);
    let generator_mem = c.generator_memory(b_g, mp, &model.quant);
    let mut warnings = Vec::new();
    if mp > c.total_gpus {
        warnings.push(format!(
            "model-parallel degree {mp} exceeds the GPU budget {}",
            c.total_gpus
        ));
    }
    Ok(Some(PlanResult {
        config: PlanConfig::baseline(b_t, b_g, mp)?,
        step_time,
        trainer_mem,
        generator_mem,
        slacks: ConstraintSlacks {
            shared: Some(c.mem_per_gpu - (trainer_mem + generator_mem)),
            ..Default::default()
        },
        warnings,
    }))
}

/// Minimize the synchronous step time over the batch grid. For each batch
/// pair the model-parallel degree is the smallest feasible value: the exact
/// memory ratio in continuous mode, its ceiling in integer mode.
pub fn optimize_baseline(model: &CostModel, grid: &GridSpec) -> Result<PlanResult, PlannerError> {
    let mut best: Option<PlanResult> = None;
    for &b_t in &grid.trainer_batches {
        for &b_g in &grid.generator_batches {
            if let Some(cand) = baseline_candidate(model, b_t, b_g, grid.mode)? {
                if best.as_ref().map_or(true, |b| cand.better_than(b)) {
                    best = Some(cand);
                }
            }
        }
    }
    best.ok_or(PlannerError::NoFeasiblePlan)
}

fn async_candidate(
    model: &CostModel,
    b_t: f64,
    b_g: f64,
    mode: PlanMode,
) -> Result<Option<PlanResult>, PlannerError> {
    let c = &model.consts;
    let (b_t, b_g) = match mode {
        PlanMode::Continuous => (b_t, b_g),
        PlanMode::Integer => (b_t.floor(), b_g.floor()),
    };
    if b_t < 1.0 || b_g < 1.0 {
        return Ok(None);
    }
    let t_ratio = c.trainer_memory(b_t, 1.0) / c.mem_per_gpu;
    let g_ratio = c.generator_memory(b_g, 1.0, &model.quant) / c.mem_per_gpu;
    let (m_t, m_g) = match mode {
        PlanMode::Continuous => (t_ratio.max(1.0), g_ratio.max(1.0)),
        PlanMode::Integer => (t_ratio.ceil().max(1.0), g_ratio.ceil().max(1.0)),
    };
    let eta_t = match model.trainer_eta(b_t) {
        Ok(e) => e,
        Err(CostModelError::BatchOutOfRange { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let eta_g = match model.generator_eta(b_g) {
        Ok(e) => e,
        Err(CostModelError::BatchOutOfRange { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let theta = match mode {
        // Balance the two arms exactly: eta_t*m_t/theta == eta_g*m_g/(1-theta).
        PlanMode::Continuous => eta_t * m_t / (eta_t * m_t + eta_g * m_g),
        // Quantize the split to whole GPUs and take the best count.
        PlanMode::Integer => {
            let gpus = c.total_gpus.round();
            if gpus < 2.0 {
                return Err(PlannerError::InvalidGrid(
                    "integer mode needs at least two GPUs to split".into(),
                ));
            }
            let mut best_theta = None;
            let mut best_val = f64::INFINITY;
            for g_t in 1..(gpus as u64) {
                let th = g_t as f64 / gpus;
                let val = (eta_t * m_t / th).max(eta_g * m_g / (1.0 - th));
                if val < best_val {
                    best_val = val;
                    best_theta = Some(th);
                }
            }
            best_theta.unwrap()
        }
    };
    let step_time = match model.step_time_async(b_t, b_g, m_t, m_g, theta) {
        Ok(t) => t,
        Err(CostModelError::Infeasible(_)) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let trainer_mem = c.trainer_memory(b_t, m_t);
    let generator_mem = c.generator_memory(b_g, m_g, &model.quant);
    let mut warnings = Vec::new();
    if m_t > theta * c.total_gpus {
        warnings.push(format!(
            "trainer mp {m_t} exceeds its GPU share {}",
            theta * c.total_gpus
        ));
    }
    if m_g > (1.0 - theta) * c.total_gpus {
        warnings.push(format!(
            "generator mp {m_g} exceeds its GPU share {}",
            (1.0 - theta) * c.total_gpus
        ));
    }
    Ok(Some(PlanResult {
        config: PlanConfig::asynchronous(b_t, b_g, m_t, m_g, theta)?,
        step_time,
        trainer_mem,
        generator_mem,
        slacks: ConstraintSlacks {
            trainer: Some(c.mem_per_gpu - trainer_mem),
            generator: Some(c.mem_per_gpu - generator_mem),
            shared: None,
        },
        warnings,
    }))
}

/// Minimize the asynchronous step time over the batch grid. Per batch pair,
/// each side's model-parallel degree is its own minimal feasible value and
/// the trainer fraction balances the two arms (continuous mode) or is the
/// best whole-GPU split (integer mode).
pub fn optimize_async(model: &CostModel, grid: &GridSpec) -> Result<PlanResult, PlannerError> {
    let mut best: Option<PlanResult> = None;
    for &b_t in &grid.trainer_batches {
        for &b_g in &grid.generator_batches {
            if let Some(cand) = async_candidate(model, b_t, b_g, grid.mode)? {
                if best.as_ref().map_or(true, |b| cand.better_than(b)) {
                    best = Some(cand);
                }
            }
        }
    }
    best.ok_or(PlannerError::NoFeasiblePlan)
}

/// The decoupled per-side optima, each minimized independently over its own
/// batch grid with its memory constraint active:
/// `T_t = min_b (4*W0 + A_t*b) * eta_t(b) / M0` and
/// `T_g = min_b (ws*W0 + K_g*b) * eta_g(b) / M0`.
pub fn decoupled_optima(model: &CostModel, grid: &GridSpec) -> Result<(f64, f64), PlannerError> {
    let c = &model.consts;
    let mut t_opt = f64::INFINITY;
    for &b_t in &grid.trainer_batches {
        let eta = match model.trainer_eta(b_t) {
            Ok(e) => e,
            Err(CostModelError::BatchOutOfRange { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let m = (c.trainer_memory(b_t, 1.0) / c.mem_per_gpu).max(1.0);
        t_opt = t_opt.min(eta * m);
    }
    let mut g_opt = f64::INFINITY;
    for &b_g in &grid.generator_batches {
        let eta = match model.generator_eta(b_g) {
            Ok(e) => e,
            Err(CostModelError::BatchOutOfRange { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let m = (c.generator_memory(b_g, 1.0, &model.quant) / c.mem_per_gpu).max(1.0);
        g_opt = g_opt.min(eta * m);
    }
    if !t_opt.is_finite() || !g_opt.is_finite() {
        return Err(PlannerError::NoFeasiblePlan);
    }
    Ok((t_opt, g_opt))
}

/// The four intermediate values of the speedup inequality chain, in order:
/// cross-term sum at the baseline optimum, decoupled sum, balanced max over
/// the decoupled optima, and balanced max over the asynchronous optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainValues {
    pub chain_a: f64,
    pub chain_b: f64,
    pub chain_c: f64,
    pub chain_d: f64,
}

/// Outcome of comparing the optimal synchronous and asynchronous plans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub baseline: PlanResult,
    pub async_plan: PlanResult,
    pub gain: f64,
    pub theorem_holds: bool,
    pub chain: ChainValues,
}

impl SpeedupReport {
    /// Checks the chain ordering: strict drop at the first step, weak drop
    /// at the second, equality (within `tol`, relative) at the last two.
    pub fn chain_ordered(&self, tol: f64) -> bool {
        let c = &self.chain;
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
        self.baseline.step_time > c.chain_a
            && c.chain_a >= c.chain_b - tol * c.chain_b.abs()
            && close(c.chain_b, c.chain_c)
            && close(c.chain_c, c.chain_d)
            && close(c.chain_d, self.async_plan.step_time)
    }

    /// Flat key=value rendering with the fixed report field names.
    pub fn to_key_value(&self) -> String {
        format!(
            "baseline_step_time={}\nasync_step_time={}\ngain={}\ntheorem_holds={}\nchain_a={}\nchain_b={}\nchain_c={}\nchain_d={}\n",
            self.baseline.step_time,
            self.async_plan.step_time,
            self.gain,
            self.theorem_holds,
            self.chain.chain_a,
            self.chain.chain_b,
            self.chain.chain_c,
            self.chain.chain_d,
        )
    }

    /// Machine-readable document with the fixed field names.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "baseline_step_time": self.baseline.step_time,
            "async_step_time": self.async_plan.step_time,
            "gain": self.gain,
            "theorem_holds": self.theorem_holds,
            "chain_a": self.chain.chain_a,
            "chain_b": self.chain.chain_b,
            "chain_c": self.chain.chain_c,
            "chain_d": self.chain.chain_d,
        })
    }
}

/// Optimize both layouts in continuous mode and evaluate the speedup chain.
///
/// `theorem_holds` is set iff the asynchronous optimum is strictly faster
/// than the synchronous one.
pub fn verify_speedup(model: &CostModel, grid: &GridSpec) -> Result<SpeedupReport, PlannerError> {
    let grid = GridSpec {
        mode: PlanMode::Continuous,
        ..grid.clone()
    };
    let baseline = optimize_baseline(model, &grid)?;
    let async_plan = optimize_async(model, &grid)?;
    let (t_opt, g_opt) = decoupled_optima(model, &grid)?;

    let c = &model.consts;
    let scale = c.global_batch / c.total_gpus;
    let eta_t_star = model.trainer_eta(baseline.config.trainer_batch)?;
    let eta_g_star = model.generator_eta(baseline.config.generator_batch)?;
    let trainer_num = c.trainer_memory(baseline.config.trainer_batch, 1.0);
    let generator_num = c.generator_memory(baseline.config.generator_batch, 1.0, &model.quant);
    let chain_a = scale * (trainer_num * eta_t_star + generator_num * eta_g_star) / c.mem_per_gpu;
    let chain_b = scale * (t_opt + g_opt);
    let theta = async_plan
        .config
        .trainer_fraction
        .expect("asynchronous optimum always carries a trainer fraction");
    let chain_c = scale * (t_opt / theta).max(g_opt / (1.0 - theta));
    let eta_t_opt = model.trainer_eta(async_plan.config.trainer_batch)?;
    let eta_g_opt = model.generator_eta(async_plan.config.generator_batch)?;
    let chain_d = scale
        * (eta_t_opt * async_plan.config.trainer_mp / theta)
            .max(eta_g_opt * async_plan.config.generator_mp / (1.0 - theta));

    let gain = baseline.step_time / async_plan.step_time;
    let theorem_holds = async_plan.step_time < baseline.step_time;
    Ok(SpeedupReport {
        baseline,
        async_plan,
        gain,
        theorem_holds,
        chain: ChainValues {
            chain_a,
            chain_b,
            chain_c,
            chain_d,
        },
    })
}

/// Constraint-activeness and balance residuals at an optimum, as predicted
/// for continuous-mode solutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    /// |slack| of the shared constraint (baseline plans).
    pub shared_residual: Option<f64>,
    /// |slack| of the trainer constraint (asynchronous plans).
    pub trainer_residual: Option<f64>,
    /// |slack| of the generator constraint (asynchronous plans).
    pub generator_residual: Option<f64>,
    /// |eta_t*m_t/theta - eta_g*m_g/(1-theta)| (asynchronous plans).
    pub theta_balance_residual: Option<f64>,
    /// |T_t/theta - T_g/(1-theta)| over the decoupled optima.
    pub decoupled_balance_residual: Option<f64>,
}

/// Measure how close the constraints at `result` are to active, and the
/// balance residuals of the asynchronous split.
pub fn check_lemmas(
    model: &CostModel,
    grid: &GridSpec,
    result: &PlanResult,
) -> Result<LemmaReport, PlannerError> {
    let mut report = LemmaReport {
        shared_residual: result.slacks.shared.map(f64::abs),
        trainer_residual: result.slacks.trainer.map(f64::abs),
        generator_residual: result.slacks.generator.map(f64::abs),
        theta_balance_residual: None,
        decoupled_balance_residual: None,
    };
    if let Some(theta) = result.config.trainer_fraction {
        let eta_t = model.trainer_eta(result.config.trainer_batch)?;
        let eta_g = model.generator_eta(result.config.generator_batch)?;
        report.theta_balance_residual = Some(
            (eta_t * result.config.trainer_mp / theta
                - eta_g * result.config.generator_mp / (1.0 - theta))
                .abs(),
        );
        let (t_opt, g_opt) = decoupled_optima(model, grid)?;
        report.decoupled_balance_residual = Some((t_opt / theta - g_opt / (1.0 - theta)).abs());
    }
    Ok(report)
}

/// Which layout a brute-force enumeration should solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleLayout {
    Baseline,
    Async,
}

/// Explicit enumeration grids for the brute-force oracle.
#[derive(Debug, Clone)]
pub struct OracleGrid {
    pub mp_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    pub max_cells: u64,
}

pub const DEFAULT_ORACLE_CELL_BOUND: u64 = 10_000_000;

impl OracleGrid {
    /// Whole-GPU enumeration grids sized to the instance: every integer
    /// model-parallel degree that could be minimal for some batch pair, and
    /// every whole-GPU trainer fraction.
    pub fn integer(model: &CostModel, grid: &GridSpec) -> Self {
        let c = &model.consts;
        let max_b_t = grid.trainer_batches.iter().cloned().fold(1.0, f64::max);
        let max_b_g = grid.generator_batches.iter().cloned().fold(1.0, f64::max);
        let worst = (c.trainer_memory(max_b_t, 1.0)
            + c.generator_memory(max_b_g, 1.0, &model.quant))
            / c.mem_per_gpu;
        let mp_max = worst.ceil().max(1.0) as u64;
        let gpus = c.total_gpus.round().max(2.0) as u64;
        Self {
            mp_values: (1..=mp_max).map(|m| m as f64).collect(),
            theta_values: (1..gpus).map(|g| g as f64 / gpus as f64).collect(),
            max_cells: DEFAULT_ORACLE_CELL_BOUND,
        }
    }
}

/// Exhaustively enumerate every grid cell, feasibility-check each one, and
/// return the global minimum with the same deterministic tie-breaking as the
/// optimizers. Refuses grids above `max_cells`.
pub fn brute_force_oracle(
    model: &CostModel,
    grid: &GridSpec,
    oracle: &OracleGrid,
    layout: OracleLayout,
) -> Result<PlanResult, PlannerError> {
    let b_cells = (grid.trainer_batches.len() * grid.generator_batches.len()) as u64;
    let cells = match layout {
        OracleLayout::Baseline => b_cells * oracle.mp_values.len() as u64,
        OracleLayout::Async => {
            b_cells * (oracle.mp_values.len() as u64).pow(2) * oracle.theta_values.len() as u64
        }
    };
    if cells > oracle.max_cells {
        return Err(PlannerError::GridTooLarge {
            cells,
            max: oracle.max_cells,
        });
    }

    let c = &model.consts;
    let mut best: Option<PlanResult> = None;
    let mut consider = |cand: PlanResult| {
        if best.as_ref().map_or(true, |b| cand.better_than(b)) {
            best = Some(cand);
        }
    };

    for &b_t in &grid.trainer_batches {
        for &b_g in &grid.generator_batches {
            match layout {
                OracleLayout::Baseline => {
                    for &mp in &oracle.mp_values {
                        let step_time = match model.step_time_baseline(b_t, b_g, mp) {
                            Ok(t) => t,
                            Err(_) => continue,
                        };
                        let trainer_mem = c.trainer_memory(b_t, mp);
                        let generator_mem = c.generator_memory(b_g, mp, &model.quant);
                        consider(PlanResult {
                            config: PlanConfig::baseline(b_t, b_g, mp)?,
                            step_time,
                            trainer_mem,
                            generator_mem,
                            slacks: ConstraintSlacks {
                                shared: Some(c.mem_per_gpu - (trainer_mem + generator_mem)),
                                ..Default::default()
                            },
                            warnings: Vec::new(),
                        });
                    }
                }
                OracleLayout::Async => {
                    for &m_t in &oracle.mp_values {
                        for &m_g in &oracle.mp_values {
                            for &theta in &oracle.theta_values {
                                let step_time =
                                    match model.step_time_async(b_t, b_g, m_t, m_g, theta) {
                                        Ok(t) => t,
                                        Err(_) => continue,
                                    };
                                let trainer_mem = c.trainer_memory(b_t, m_t);
                                let generator_mem = c.generator_memory(b_g, m_g, &model.quant);
                                consider(PlanResult {
                                    config: PlanConfig::asynchronous(b_t, b_g, m_t, m_g, theta)?,
                                    step_time,
                                    trainer_mem,
                                    generator_mem,
                                    slacks: ConstraintSlacks {
                                        trainer: Some(c.mem_per_gpu - trainer_mem),
                                        generator: Some(c.mem_per_gpu - generator_mem),
                                        shared: None,
                                    },
                                    warnings: Vec::new(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    best.ok_or(PlannerError::NoFeasiblePlan)
}

/// Sample a random planning instance with strictly decreasing per-sample
/// times and memory pressure high enough that every constraint is active at
/// the continuous optimum. Used by randomized verification suites.
pub fn sample_instance(rng: &mut DetRng) -> CostModel {
    use crate::cost_model::{CostConstants, ProcessingCurve};

    // Kept compact so the whole-GPU oracle grids stay enumerable: the model
    // spans a few GPUs and per-sample memory is a small fraction of it.
    let mem_per_gpu = 1.0;
    let model_size = rng.range_f64(1.0, 4.0);
    let activation_coeff = rng.range_f64(0.01, 0.1) * model_size;
    let kv_coeff = rng.range_f64(0.01, 0.1) * model_size;
    let total_gpus = 16.0;
    let global_batch = total_gpus * rng.range_u64(1, 8) as f64;
    let consts = CostConstants::new(
        total_gpus,
        global_batch,
        mem_per_gpu,
        model_size,
        activation_coeff,
        kv_coeff,
    )
    .expect("sampled constants are feasible by construction");

    // Strictly decreasing per-sample time: eta(b) = base*(floor + drop/b),
    // tabulated at powers of two so tau(b) = base*(floor*b + drop) is linear.
    let mut curve = |rng: &mut DetRng| {
        let base = rng.range_f64(0.5, 4.0);
        let floor = rng.range_f64(0.2, 1.0);
        let drop = rng.range_f64(0.5, 8.0);
        let pts: Vec<(f64, f64)> = (0..6)
            .map(|i| {
                let b = (1u64 << i) as f64;
                (b, base * (floor + drop / b))
            })
            .collect();
        ProcessingCurve::from_per_sample_times(pts).expect("sampled curve is monotone")
    };
    let trainer_curve = curve(rng);
    let generator_curve = curve(rng);
    CostModel::new(consts, trainer_curve, generator_curve)
}
