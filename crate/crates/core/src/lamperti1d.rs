//! Scalar time-inhomogeneous chains on `[0, inf)` with mean drift
//! `rho z^{-beta} - z/n`, and the stochastic-approximation quantity `V_n = n / Z_n^{1+beta}`.
//!
//! The chain moves `+h` or `-h` with tilted probabilities, so its second moment is
//! exactly `h^2 = s2` and its conditional mean is exactly the target drift whenever
//! the tilt stays inside the probability clamp.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{recurrence_from_tail_mins, Cutoffs, RecurrenceVerdict, Verdict};
use crate::engine::{in_pool, CheckpointSchedule, TailMin};
use crate::error::{CoreError, Result};
use crate::rng::RngHandle;
use crate::scalar::Scalar;

/// Default probability clamp: each move keeps probability at least this much.
pub const DEFAULT_PROB_FLOOR: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarModelSpec<T> {
    pub rho: T,
    pub beta: T,
    pub s2: T,
    /// Step magnitude `h = sqrt(s2)`.
    pub step_size: T,
    /// Probabilities are clamped to `[prob_floor, 1 - prob_floor]`.
    pub prob_floor: T,
}

impl<T: Scalar> ScalarModelSpec<T> {
    pub fn new(rho: T, beta: T, s2: T) -> Result<Self> {
        let spec = Self {
            rho,
            beta,
            s2,
            step_size: s2.sqrt(),
            prob_floor: T::lit(DEFAULT_PROB_FLOOR),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rho.is_finite() {
            return Err(CoreError::param("rho", "must be finite"));
        }
        if !(self.beta >= T::zero()) || !self.beta.is_finite() {
            return Err(CoreError::param("beta", "must be >= 0"));
        }
        if !(self.s2 > T::zero()) || !self.s2.is_finite() {
            return Err(CoreError::param("s2", "must be positive"));
        }
        if (self.step_size * self.step_size - self.s2).abs() > T::lit(1e-6) * self.s2 {
            return Err(CoreError::param("step_size", "must equal sqrt(s2)"));
        }
        if !(self.prob_floor >= T::zero() && self.prob_floor < T::lit(0.5)) {
            return Err(CoreError::param("prob_floor", "must lie in [0, 1/2)"));
        }
        Ok(())
    }

    /// Target drift `rho max(z, h)^{-beta} - z/n`. With `n = None` the time term is dropped.
    pub fn target_drift(&self, z: T, n: Option<u64>) -> T {
        let zc = z.max(self.step_size);
        let time = n.map_or(T::zero(), |n| z / T::from_count(n));
        self.rho * zc.powf(-self.beta) - time
    }

    /// Probability of the `+h` move.
    pub fn up_probability(&self, z: T, n: Option<u64>) -> T {
        let half = T::lit(0.5);
        let raw = half + self.target_drift(z, n) / (self.step_size + self.step_size);
        raw.max(self.prob_floor).min(T::one() - self.prob_floor)
    }

    /// True when the tilt is not clamped, so the conditional mean is the target drift.
    pub fn is_exact(&self, z: T, n: Option<u64>) -> bool {
        let half = T::lit(0.5);
        let raw = half + self.target_drift(z, n) / (self.step_size + self.step_size);
        raw >= self.prob_floor && raw <= T::one() - self.prob_floor
    }

    /// Conditional mean and second moment of the unreflected increment.
    pub fn implied_moments(&self, z: T, n: Option<u64>) -> (T, T) {
        let p = self.up_probability(z, n);
        let h = self.step_size;
        ((p + p - T::one()) * h, h * h)
    }
}

/// One move from `z` at index `n`, reflected at zero.
pub fn step_scalar<T: Scalar, R: Rng + ?Sized>(
    z: T,
    n: u64,
    spec: &ScalarModelSpec<T>,
    rng: &mut R,
) -> T {
    let p = spec.up_probability(z, Some(n));
    let up = T::unit_uniform(rng) < p;
    let next = if up { z + spec.step_size } else { z - spec.step_size };
    next.abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalarCheckpoint<T> {
    pub n: u64,
    pub z: T,
    /// `n / Z_n^{1+beta}`; missing when `Z_n = 0`.
    pub v: Option<T>,
    pub tail_min: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StochApproxSeries<T> {
    pub stream: u64,
    pub checkpoints: Vec<ScalarCheckpoint<T>>,
}

impl<T: Scalar> StochApproxSeries<T> {
    pub fn final_checkpoint(&self) -> Option<&ScalarCheckpoint<T>> {
        self.checkpoints.last()
    }
}

/// Runs `n_steps` moves from `Z_1 = z_init`, checkpointing on `schedule`.
pub fn run_scalar_with_schedule<T: Scalar, R: Rng + ?Sized>(
    spec: &ScalarModelSpec<T>,
    schedule: &CheckpointSchedule,
    z_init: T,
    stream: u64,
    rng: &mut R,
) -> Result<StochApproxSeries<T>> {
    spec.validate()?;
    if !(z_init > T::zero()) || !z_init.is_finite() {
        return Err(CoreError::param("z_init", "must be positive"));
    }
    let exponent = T::one() + spec.beta;
    let record = |n: u64, z: T, tail_min: T| ScalarCheckpoint {
        n,
        z,
        v: (z > T::zero()).then(|| T::from_count(n) / z.powf(exponent)),
        tail_min,
    };
    let mut tail = TailMin::new();
    let mut z = z_init;
    let mut tm = tail.push(1, z);
    let mut checkpoints = Vec::with_capacity(schedule.indices().len());
    let mut next_idx = 0;
    let indices = schedule.indices();
    if indices[0] == 1 {
        checkpoints.push(record(1, z, tm));
        next_idx = 1;
    }
    for n in 1..schedule.last() {
        z = step_scalar(z, n, spec, rng);
        tm = tail.push(n + 1, z);
        if next_idx < indices.len() && indices[next_idx] == n + 1 {
            checkpoints.push(record(n + 1, z, tm));
            next_idx += 1;
        }
    }
    Ok(StochApproxSeries { stream, checkpoints })
}

/// Single trajectory with a geometric schedule of ratio 1.1; final index `n_steps + 1`.
pub fn run_scalar<T: Scalar>(
    spec: &ScalarModelSpec<T>,
    n_steps: u64,
    z_init: T,
    rng: &mut RngHandle,
) -> Result<StochApproxSeries<T>> {
    let schedule = CheckpointSchedule::geometric(1.1, n_steps + 1)?;
    let stream = rng.stream();
    run_scalar_with_schedule(spec, &schedule, z_init, stream, rng)
}

/// `n_runs` trajectories on streams `0..n_runs` of `base_seed`, ordered by stream.
pub fn run_scalar_ensemble<T: Scalar>(
    spec: &ScalarModelSpec<T>,
    n_steps: u64,
    z_init: T,
    n_runs: u64,
    base_seed: u64,
    checkpoint_ratio: f64,
    parallelism: usize,
) -> Result<Vec<StochApproxSeries<T>>> {
    if n_runs == 0 {
        return Err(CoreError::param("n_runs", "must be >= 1"));
    }
    let schedule = CheckpointSchedule::geometric(checkpoint_ratio, n_steps + 1)?;
    in_pool(parallelism, || {
        (0..n_runs)
            .into_par_iter()
            .map(|stream| {
                let mut rng = RngHandle::new(base_seed, stream);
                run_scalar_with_schedule(spec, &schedule, z_init, stream, &mut rng)
            })
            .collect()
    })
}

/// Ensemble mean and 95% half-width of the final `V_n`, skipping runs that end at zero.
pub fn final_v_estimate<T: Scalar>(series: &[StochApproxSeries<T>]) -> Result<(f64, f64)> {
    let vs: Vec<f64> = series
        .iter()
        .filter_map(|s| s.final_checkpoint()?.v)
        .map(|v| v.to_f64_lossy())
        .collect();
    if vs.is_empty() {
        return Err(CoreError::InsufficientData("no run has a defined V_n".into()));
    }
    Ok(crate::analysis::mean_ci95(&vs))
}

/// Predicted limit of `V_n` in the supercritical case: `(2+beta) / (rho (1+beta))`.
pub fn v_limit(rho: f64, beta: f64) -> f64 {
    (2.0 + beta) / (rho * (1.0 + beta))
}

pub fn scalar_recurrence<T: Scalar>(
    series: &[StochApproxSeries<T>],
    threshold: f64,
    cutoffs: Cutoffs,
) -> Result<RecurrenceVerdict> {
    let mins: Vec<f64> = series
        .iter()
        .filter_map(|s| s.final_checkpoint())
        .map(|c| c.tail_min.to_f64_lossy())
        .collect();
    recurrence_from_tail_mins(&mins, threshold, cutoffs)
}

/// One ensemble at `beta = 1` with drift `rho'/z - z/n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContrastArm {
    pub rho_prime: f64,
    pub s2: f64,
    /// True when `2 rho' <= s2`, where recurrence is predicted.
    pub predicted_recurrent: bool,
    pub recurrence: RecurrenceVerdict,
    /// The empirical verdict agrees with the prediction (inconclusive never agrees).
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalContrast {
    pub n_steps: u64,
    pub n_runs: u64,
    pub seed: u64,
    pub threshold: f64,
    /// The caller's parameters.
    pub supplied: ContrastArm,
    /// `rho' = s2`, strictly above the critical line.
    pub transient_side: ContrastArm,
    /// `rho' = s2/4`, strictly below the critical line.
    pub recurrent_side: ContrastArm,
    /// Both reference arms agree with their predictions.
    pub resolved: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContrastOptions {
    pub z_init: f64,
    /// Tail-min threshold; `None` uses five step sizes.
    pub threshold: Option<f64>,
    pub cutoffs: Cutoffs,
    pub parallelism: usize,
}

impl Default for ContrastOptions {
    fn default() -> Self {
        Self {
            z_init: 1.0,
            threshold: None,
            cutoffs: Cutoffs::default(),
            parallelism: 0,
        }
    }
}

fn contrast_arm(
    rho_prime: f64,
    s2: f64,
    n_steps: u64,
    n_runs: u64,
    seed: u64,
    threshold: f64,
    options: &ContrastOptions,
) -> Result<ContrastArm> {
    let spec = ScalarModelSpec::<f64>::new(rho_prime, 1.0, s2)?;
    let series = run_scalar_ensemble(
        &spec,
        n_steps,
        options.z_init,
        n_runs,
        seed,
        2.0,
        options.parallelism,
    )?;
    let recurrence = scalar_recurrence(&series, threshold, options.cutoffs)?;
    let predicted_recurrent = 2.0 * rho_prime <= s2;
    let matches = match recurrence.verdict {
        Verdict::RecurrentLike => predicted_recurrent,
        Verdict::TransientLike => !predicted_recurrent,
        Verdict::Inconclusive => false,
    };
    Ok(ContrastArm {
        rho_prime,
        s2,
        predicted_recurrent,
        recurrence,
        matches,
    })
}

/// Runs the supplied `(rho', s2)` and the reference points `rho' = s2` and
/// `rho' = s2/4` on either side of `2 rho' = s2`, each on streams `0..n_runs` of `seed`.
pub fn critical_contrast(
    rho_prime: f64,
    s2: f64,
    n_steps: u64,
    n_runs: u64,
    seed: u64,
    options: &ContrastOptions,
) -> Result<CriticalContrast> {
    if !(s2 > 0.0) {
        return Err(CoreError::param("s2", "must be positive"));
    }
    let threshold = options.threshold.unwrap_or(5.0 * s2.sqrt());
    let arm = |rp| contrast_arm(rp, s2, n_steps, n_runs, seed, threshold, options);
    let supplied = arm(rho_prime)?;
    let transient_side = arm(s2)?;
    let recurrent_side = arm(s2 / 4.0)?;
    let resolved = transient_side.matches && recurrent_side.matches;
    Ok(CriticalContrast {
        n_steps,
        n_runs,
        seed,
        threshold,
        supplied,
        transient_side,
        recurrent_side,
        resolved,
    })
}
