//! Estimators over ensemble output: law-of-large-numbers ratios, log-log scaling
//! exponents, direction convergence, finite-time recurrence statistics, and binned
//! one-step drift of `|Y_n|`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{Checkpoint, ObservableSeries, StepObserver, WalkState};
use crate::error::{CoreError, Result};
use crate::models::ModelSpec;
use crate::scalar::Scalar;
use crate::vector::{VectorD, ZeroDirection};

/// 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    YNorm,
    XNorm,
    GNorm,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::YNorm, Quantity::XNorm, Quantity::GNorm];

    pub fn of<T: Scalar>(self, c: &Checkpoint<T>) -> T {
        match self {
            Quantity::YNorm => c.y_norm,
            Quantity::XNorm => c.x_norm,
            Quantity::GNorm => c.g_norm,
        }
    }

    pub fn tail_min<T: Scalar>(self, c: &Checkpoint<T>) -> T {
        match self {
            Quantity::YNorm => c.tail_min_y,
            Quantity::XNorm => c.tail_min_x,
            Quantity::GNorm => c.tail_min_g,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Quantity::YNorm => "y_norm",
            Quantity::XNorm => "x_norm",
            Quantity::GNorm => "g_norm",
        }
    }
}

/// Sample mean and normal-approximation 95% half-width.
pub fn mean_ci95(samples: &[f64]) -> (f64, f64) {
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    if samples.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, Z_95 * (var / k).sqrt())
}

fn final_n_checked<T: Scalar>(series: &[ObservableSeries<T>]) -> Result<u64> {
    let first = series
        .first()
        .ok_or_else(|| CoreError::InsufficientData("no runs".into()))?
        .final_n();
    for s in series {
        if s.final_n() != first {
            return Err(CoreError::MismatchedRuns(first, s.final_n()));
        }
    }
    Ok(first)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LlnEstimate {
    pub quantity: Quantity,
    pub exponent_used: f64,
    pub ratio_samples: Vec<f64>,
    pub mean: f64,
    pub ci95: f64,
}

/// Final-checkpoint ratios `value / n^(1/(1+beta))` across runs.
pub fn estimate_lln<T: Scalar>(
    series: &[ObservableSeries<T>],
    beta: f64,
    quantity: Quantity,
) -> Result<LlnEstimate> {
    if !(beta >= 0.0) {
        return Err(CoreError::param("beta", "must be >= 0"));
    }
    let n = final_n_checked(series)?;
    let exponent = 1.0 / (1.0 + beta);
    let scale = (n as f64).powf(exponent);
    let ratio_samples: Vec<f64> = series
        .iter()
        .map(|s| {
            let c = s.final_checkpoint().expect("checked nonempty");
            quantity.of(c).to_f64_lossy() / scale
        })
        .collect();
    let (mean, ci95) = mean_ci95(&ratio_samples);
    Ok(LlnEstimate {
        quantity,
        exponent_used: exponent,
        ratio_samples,
        mean,
        ci95,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub quantity: Quantity,
    pub window: (u64, u64),
    pub nu_hat: f64,
    pub stderr: f64,
    pub per_run: Vec<f64>,
}

/// Least-squares slope and its standard error.
pub fn log_log_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = points
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    let stderr = if points.len() > 2 {
        (resid / (k - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (slope, stderr)
}

/// Slope of `log(quantity)` against `log(n)` over checkpoints with `n` in `window`,
/// averaged across runs. Checkpoints where the quantity is zero are skipped.
pub fn estimate_exponent<T: Scalar>(
    series: &[ObservableSeries<T>],
    quantity: Quantity,
    window: (u64, u64),
) -> Result<ExponentEstimate> {
    if series.is_empty() {
        return Err(CoreError::InsufficientData("no runs".into()));
    }
    let mut per_run = Vec::with_capacity(series.len());
    let mut single_stderr = f64::INFINITY;
    for s in series {
        let points: Vec<(f64, f64)> = s
            .checkpoints
            .iter()
            .filter(|c| c.n >= window.0 && c.n <= window.1)
            .map(|c| (c.n as f64, quantity.of(c).to_f64_lossy()))
            .filter(|&(_, v)| v > 0.0)
            .map(|(n, v)| (n.ln(), v.ln()))
            .collect();
        if points.len() < 10 {
            return Err(CoreError::InsufficientData(format!(
                "window [{}, {}] holds {} usable checkpoints in run {}, need 10",
                window.0,
                window.1,
                points.len(),
                s.stream
            )));
        }
        let (slope, se) = log_log_slope(&points);
        single_stderr = se;
        per_run.push(slope);
    }
    let (nu_hat, ci) = mean_ci95(&per_run);
    let stderr = if per_run.len() > 1 { ci / Z_95 } else { single_stderr };
    Ok(ExponentEstimate {
        quantity,
        window,
        nu_hat,
        stderr,
        per_run,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionSummary<T: Scalar> {
    /// Largest angle (radians) between `X_n/|X_n|` in the window and the last one.
    pub dispersion: f64,
    pub final_direction: VectorD<T>,
}

pub fn direction_convergence<T: Scalar>(
    series: &ObservableSeries<T>,
    window: (u64, u64),
) -> Result<DirectionSummary<T>> {
    let inside: Vec<&Checkpoint<T>> = series
        .checkpoints
        .iter()
        .filter(|c| c.n >= window.0 && c.n <= window.1)
        .collect();
    let last = *inside
        .last()
        .ok_or_else(|| CoreError::InsufficientData("no checkpoints in window".into()))?;
    if let Some(c) = inside.iter().find(|c| c.x_norm == T::zero()) {
        return Err(CoreError::ZeroNorm(c.n));
    }
    let dispersion = inside
        .iter()
        .map(|c| c.x_dir.angle_to(&last.x_dir).to_f64_lossy())
        .fold(0.0, f64::max);
    Ok(DirectionSummary {
        dispersion,
        final_direction: last.x_dir.unit_direction(ZeroDirection::Zero),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    RecurrentLike,
    TransientLike,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    pub low: f64,
    pub high: f64,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Self {
            low: 0.2,
            high: 0.8,
        }
    }
}

/// Finite-time recurrence surrogate: the fraction of runs whose minimum norm over the
/// tail window `[n/2, n]` of the final checkpoint is at most `threshold`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecurrenceVerdict {
    pub quantity: Option<Quantity>,
    pub statistic: f64,
    pub threshold: f64,
    pub n_runs: usize,
    pub verdict: Verdict,
    pub cutoffs: Cutoffs,
    pub tail_window: &'static str,
}

pub const MIN_RECURRENCE_RUNS: usize = 20;

/// Verdict from per-run tail minima.
pub fn recurrence_from_tail_mins(
    tail_mins: &[f64],
    threshold: f64,
    cutoffs: Cutoffs,
) -> Result<RecurrenceVerdict> {
    if tail_mins.len() < MIN_RECURRENCE_RUNS {
        return Err(CoreError::InsufficientData(format!(
            "recurrence statistic needs at least {MIN_RECURRENCE_RUNS} runs, got {}",
            tail_mins.len()
        )));
    }
    if !(0.0 <= cutoffs.low && cutoffs.low < cutoffs.high && cutoffs.high <= 1.0) {
        return Err(CoreError::param("cutoffs", "need 0 <= low < high <= 1"));
    }
    let hits = tail_mins.iter().filter(|&&m| m <= threshold).count();
    let statistic = hits as f64 / tail_mins.len() as f64;
    let verdict = if statistic >= cutoffs.high {
        Verdict::RecurrentLike
    } else if statistic <= cutoffs.low {
        Verdict::TransientLike
    } else {
        Verdict::Inconclusive
    };
    Ok(RecurrenceVerdict {
        quantity: None,
        statistic,
        threshold,
        n_runs: tail_mins.len(),
        verdict,
        cutoffs,
        tail_window: "[n/2, n]",
    })
}

pub fn recurrence_statistic<T: Scalar>(
    series: &[ObservableSeries<T>],
    quantity: Quantity,
    threshold: f64,
    cutoffs: Cutoffs,
) -> Result<RecurrenceVerdict> {
    let mins: Vec<f64> = series
        .iter()
        .filter_map(|s| s.final_checkpoint())
        .map(|c| quantity.tail_min(c).to_f64_lossy())
        .collect();
    let mut verdict = recurrence_from_tail_mins(&mins, threshold, cutoffs)?;
    verdict.quantity = Some(quantity);
    Ok(verdict)
}

/// Cell layout for [`DriftProfileBuilder`]: geometric in `|Y_n|` from `x_min` and in `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub x_min: f64,
    pub x_ratio: f64,
    pub n_ratio: f64,
    pub min_samples: u64,
}

impl Default for Binning {
    fn default() -> Self {
        Self {
            x_min: 8.0,
            x_ratio: 1.5,
            n_ratio: 4.0,
            min_samples: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct CellSums {
    count: u64,
    x: f64,
    n: f64,
    dz: f64,
    dz2: f64,
    dz4: f64,
    inv_x: f64,
    time_term: f64,
    predicted: f64,
    predicted_sq: f64,
    predicted_count: u64,
}

impl CellSums {
    fn merge(&mut self, o: &CellSums) {
        self.count += o.count;
        self.x += o.x;
        self.n += o.n;
        self.dz += o.dz;
        self.dz2 += o.dz2;
        self.dz4 += o.dz4;
        self.inv_x += o.inv_x;
        self.time_term += o.time_term;
        self.predicted += o.predicted;
        self.predicted_sq += o.predicted_sq;
        self.predicted_count += o.predicted_count;
    }
}

/// Step-level accumulator of `|Y_{n+1}| - |Y_n|` binned by `(|Y_n|, n)`.
///
/// For every step it also records the leading-order prediction
/// `n/(n+1) (yhat.E[D] + Theta/x) - x/(n+1)` with `Theta = (E|D|^2 - E(yhat.D)^2)/2`,
/// and `E[(yhat.D)^2]` for the squared increment, using the model's exact moments.
/// Steps whose reference lies in a clamping region get no prediction and flag the cell.
#[derive(Clone, Debug)]
pub struct DriftProfileBuilder<T: Scalar> {
    spec: ModelSpec<T>,
    binning: Binning,
    cells: BTreeMap<(i64, i64), CellSums>,
}

impl<T: Scalar> DriftProfileBuilder<T> {
    pub fn new(spec: ModelSpec<T>, binning: Binning) -> Result<Self> {
        if !(binning.x_min > 0.0 && binning.x_ratio > 1.0 && binning.n_ratio > 1.0) {
            return Err(CoreError::param("binning", "need x_min > 0 and ratios > 1"));
        }
        Ok(Self {
            spec,
            binning,
            cells: BTreeMap::new(),
        })
    }

    /// Feeds one step: index `n`, `Y_n`, the drift reference, and `|Y_{n+1}|`.
    pub fn record(&mut self, n: u64, y: &VectorD<T>, reference: &VectorD<T>, next_norm: T) {
        let x = y.norm().to_f64_lossy();
        if !(x >= self.binning.x_min) {
            return;
        }
        let key = (
            ((x / self.binning.x_min).ln() / self.binning.x_ratio.ln()).floor() as i64,
            ((n as f64).ln() / self.binning.n_ratio.ln()).floor() as i64,
        );
        let dz = next_norm.to_f64_lossy() - x;
        let nf = n as f64;
        let cell = self.cells.entry(key).or_default();
        cell.count += 1;
        cell.x += x;
        cell.n += nf;
        cell.dz += dz;
        cell.dz2 += dz * dz;
        cell.dz4 += dz * dz * dz * dz;
        cell.inv_x += 1.0 / x;
        cell.time_term += x / (nf + 1.0);
        if let Ok(m) = self.spec.analytic_moments(reference) {
            let yhat = y.unit_direction(ZeroDirection::Zero);
            let radial_mean = yhat.dot(&m.mean_drift).to_f64_lossy();
            let theta = m.transverse_half_variance(&yhat).to_f64_lossy();
            cell.predicted += nf / (nf + 1.0) * (radial_mean + theta / x) - x / (nf + 1.0);
            cell.predicted_sq += m.radial_second_moment(&yhat).to_f64_lossy();
            cell.predicted_count += 1;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (k, v) in &other.cells {
            self.cells.entry(*k).or_default().merge(v);
        }
    }

    pub fn finish(&self) -> Result<DriftProfile> {
        let mut bins = Vec::new();
        let mut suppressed = 0;
        for sums in self.cells.values() {
            if sums.count < self.binning.min_samples {
                suppressed += 1;
                continue;
            }
            let k = sums.count as f64;
            let mean = sums.dz / k;
            let mean_sq = sums.dz2 / k;
            let var = (mean_sq - mean * mean).max(0.0);
            let var_sq = (sums.dz4 / k - mean_sq * mean_sq).max(0.0);
            let with_prediction = sums.predicted_count == sums.count;
            bins.push(DriftBin {
                x_center: sums.x / k,
                n_center: sums.n / k,
                samples: sums.count,
                mean_radial_drift: mean,
                mean_sq_increment: mean_sq,
                stderr: (var / (k - 1.0).max(1.0)).sqrt(),
                stderr_sq: (var_sq / (k - 1.0).max(1.0)).sqrt(),
                mean_inv_x: sums.inv_x / k,
                mean_time_term: sums.time_term / k,
                predicted_drift: with_prediction.then(|| sums.predicted / k),
                predicted_sq: with_prediction.then(|| sums.predicted_sq / k),
                clamped: !with_prediction,
            });
        }
        if bins.is_empty() {
            return Err(CoreError::InsufficientData(format!(
                "no drift-profile cell reached {} samples",
                self.binning.min_samples
            )));
        }
        Ok(DriftProfile {
            binning: self.binning,
            bins,
            suppressed_cells: suppressed,
        })
    }
}

impl<T: Scalar> StepObserver<T> for DriftProfileBuilder<T> {
    fn observe(&mut self, before: &WalkState<T>, _delta: &VectorD<T>, after: &WalkState<T>) {
        let y = before.y();
        let reference = before.reference(self.spec.bias_target);
        self.record(before.n(), &y, &reference, after.y().norm());
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftBin {
    pub x_center: f64,
    pub n_center: f64,
    pub samples: u64,
    pub mean_radial_drift: f64,
    pub mean_sq_increment: f64,
    pub stderr: f64,
    pub stderr_sq: f64,
    /// Cell average of `1/|Y_n|`.
    pub mean_inv_x: f64,
    /// Cell average of `|Y_n|/(n+1)`.
    pub mean_time_term: f64,
    pub predicted_drift: Option<f64>,
    pub predicted_sq: Option<f64>,
    /// Some samples fell in a clamping region, so no prediction is reported.
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftProfile {
    pub binning: Binning,
    pub bins: Vec<DriftBin>,
    pub suppressed_cells: usize,
}

/// One step of a recorded stream: `n`, `Y_n`, the drift reference, and `|Y_{n+1}|`.
#[derive(Clone, Copy, Debug)]
pub struct StepRecord<T> {
    pub n: u64,
    pub y: VectorD<T>,
    pub reference: VectorD<T>,
    pub next_norm: T,
}

/// Observer that keeps every step, for small runs.
#[derive(Clone, Debug, Default)]
pub struct StepLog<T> {
    pub records: Vec<StepRecord<T>>,
}

impl<T: Scalar> StepObserver<T> for (ModelSpec<T>, StepLog<T>) {
    fn observe(&mut self, before: &WalkState<T>, _delta: &VectorD<T>, after: &WalkState<T>) {
        self.1.records.push(StepRecord {
            n: before.n(),
            y: before.y(),
            reference: before.reference(self.0.bias_target),
            next_norm: after.y().norm(),
        });
    }
}

/// Bins a recorded step stream.
pub fn drift_profile<T: Scalar>(
    spec: &ModelSpec<T>,
    records: &[StepRecord<T>],
    binning: Binning,
) -> Result<DriftProfile> {
    let mut builder = DriftProfileBuilder::new(*spec, binning)?;
    for r in records {
        builder.record(r.n, &r.y, &r.reference, r.next_norm);
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_trajectory_observed, RunOptions};
    use crate::rng::RngHandle;

    fn synthetic(stream: u64, values: impl Fn(u64) -> f64, ns: &[u64]) -> ObservableSeries<f64> {
        let dir = VectorD::from_slice(&[1.0, 0.0]).unwrap();
        ObservableSeries {
            stream,
            diameter_exact: false,
            checkpoints: ns
                .iter()
                .map(|&n| Checkpoint {
                    n,
                    y_norm: values(n),
                    x_norm: values(n),
                    g_norm: values(n),
                    x_dir: dir,
                    y_dir: dir,
                    r_gyr: 0.0,
                    diam: 0.0,
                    tail_min_y: values(n),
                    tail_min_x: values(n),
                    tail_min_g: values(n),
                })
                .collect(),
            path: None,
        }
    }

    fn geometric_ns(last: u64) -> Vec<u64> {
        crate::engine::CheckpointSchedule::geometric(1.1, last)
            .unwrap()
            .indices()
            .to_vec()
    }

    #[test]
    fn recovers_planted_power_law() {
        let ns = geometric_ns(1_000_000);
        let s = synthetic(0, |n| 3.0 * (n as f64).powf(0.75), &ns);
        let e = estimate_exponent(&[s], Quantity::XNorm, (1000, 1_000_000)).unwrap();
        assert!((e.nu_hat - 0.75).abs() < 1e-12);
    }

    #[test]
    fn exponent_needs_ten_checkpoints() {
        let ns = geometric_ns(1000);
        let s = synthetic(0, |n| n as f64, &ns);
        assert!(estimate_exponent(&[s], Quantity::XNorm, (990, 1000)).is_err());
    }

    #[test]
    fn lln_rejects_mismatched_runs() {
        let a = synthetic(0, |n| n as f64, &geometric_ns(100));
        let b = synthetic(1, |n| n as f64, &geometric_ns(200));
        assert!(matches!(
            estimate_lln(&[a, b], 0.0, Quantity::YNorm),
            Err(CoreError::MismatchedRuns(..))
        ));
    }

    #[test]
    fn lln_ratio_is_exact_on_planted_law() {
        let ns = geometric_ns(10_000);
        let runs: Vec<_> = (0..5)
            .map(|i| synthetic(i, |n| 0.5 * (n as f64).powf(2.0 / 3.0), &ns))
            .collect();
        let e = estimate_lln(&runs, 0.5, Quantity::YNorm).unwrap();
        assert!((e.mean - 0.5).abs() < 1e-12);
        assert!(e.ci95 < 1e-12);
    }

    #[test]
    fn ci_shrinks_like_inverse_root_n() {
        let mut rng = RngHandle::new(4, 0);
        let draw = |k: usize, rng: &mut RngHandle| -> Vec<f64> {
            (0..k).map(|_| <f64 as Scalar>::standard_normal(rng)).collect()
        };
        let (_, c100) = mean_ci95(&draw(100, &mut rng));
        let (_, c10000) = mean_ci95(&draw(10_000, &mut rng));
        let ratio = c100 / c10000;
        assert!((ratio - 10.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn constant_direction_has_zero_dispersion() {
        let s = synthetic(0, |n| n as f64, &geometric_ns(1000));
        let d = direction_convergence(&s, (500, 1000)).unwrap();
        assert_eq!(d.dispersion, 0.0);
        assert_eq!(d.final_direction.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn zero_norm_in_window_is_an_error() {
        let s = synthetic(0, |n| if n == 600 { 0.0 } else { 1.0 }, &[500, 600, 1000]);
        assert!(matches!(
            direction_convergence(&s, (500, 1000)),
            Err(CoreError::ZeroNorm(600))
        ));
    }

    #[test]
    fn degenerate_zero_runs_are_recurrent() {
        let runs: Vec<_> = (0..20).map(|i| synthetic(i, |_| 0.0, &[1, 2, 3])).collect();
        let v = recurrence_statistic(&runs, Quantity::YNorm, 5.0, Cutoffs::default()).unwrap();
        assert_eq!(v.statistic, 1.0);
        assert_eq!(v.verdict, Verdict::RecurrentLike);
        assert!(recurrence_statistic(&runs[..19], Quantity::YNorm, 5.0, Cutoffs::default()).is_err());
    }

    #[test]
    fn recurrence_fraction_is_monotone_in_threshold() {
        let mins: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin().abs() * 20.0).collect();
        let mut prev = -1.0;
        for k in 0..40 {
            let v = recurrence_from_tail_mins(&mins, k as f64 * 0.5, Cutoffs::default()).unwrap();
            assert!(v.statistic >= prev);
            prev = v.statistic;
        }
    }

    #[test]
    fn drift_profile_tracks_srw_drift() {
        let spec = ModelSpec::<f64>::simple_random_walk(2).unwrap();
        let mut builder = DriftProfileBuilder::new(spec, Binning::default()).unwrap();
        for stream in 0..20 {
            let mut rng = RngHandle::new(8, stream);
            run_trajectory_observed(&spec, 20_000, &mut rng, &RunOptions::default(), &mut builder)
                .unwrap();
        }
        let profile = builder.finish().unwrap();
        let within = profile
            .bins
            .iter()
            .filter(|b| {
                let lemma = 0.25 * b.mean_inv_x - b.mean_time_term;
                (b.mean_radial_drift - lemma).abs() < 3.0 * b.stderr
            })
            .count();
        assert!(within as f64 >= 0.8 * profile.bins.len() as f64);
        assert!(profile.bins.iter().all(|b| b.samples >= 100 && !b.clamped));
    }

    #[test]
    fn recorded_stream_matches_streaming_builder() {
        let spec = ModelSpec::<f64>::lattice_biased(2, 0.1, 0.5, 0.01).unwrap();
        let mut log = (spec, StepLog::default());
        let mut builder = DriftProfileBuilder::new(spec, Binning::default()).unwrap();
        let opts = RunOptions::default();
        run_trajectory_observed(&spec, 5000, &mut RngHandle::new(2, 0), &opts, &mut log).unwrap();
        run_trajectory_observed(&spec, 5000, &mut RngHandle::new(2, 0), &opts, &mut builder).unwrap();
        let a = drift_profile(&spec, &log.1.records, Binning::default()).unwrap();
        assert_eq!(a, builder.finish().unwrap());
    }
}
