//! Trajectory simulation.
//!
//! A [`WalkState`] carries `X_n`, the barycentre `G_n = (X_1 + .. + X_n)/n` and the running
//! observables. Each step draws `D_n` from the model with reference `Y_n = X_n - G_n`
//! (or `X_n` for origin bias) and applies
//!
//! ```text
//! X_{n+1} = X_n + D_n
//! G_{n+1} = G_n + (X_{n+1} - G_n)/(n+1)
//! ```
//!
//! so that `Y_{n+1} = n/(n+1) (Y_n + D_n)`.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::models::{BiasTarget, ModelSpec};
use crate::rng::RngHandle;
use crate::scalar::{KahanSum, Scalar};
use crate::vector::{VectorD, ZeroDirection};

#[derive(Clone, Debug)]
pub struct WalkState<T> {
    n: u64,
    x: VectorD<T>,
    g: VectorD<T>,
    sum_sq: KahanSum<T>,
    diam: T,
    history: Option<Vec<VectorD<T>>>,
}

impl<T: Scalar> WalkState<T> {
    /// State at `n = 1` with `X_1 = G_1 = x1`. With `keep_history` every position is
    /// stored and the diameter is exact.
    pub fn new(x1: VectorD<T>, keep_history: bool) -> Self {
        let mut sum_sq = KahanSum::new();
        sum_sq.add(x1.norm_sq());
        Self {
            n: 1,
            x: x1,
            g: x1,
            sum_sq,
            diam: T::zero(),
            history: keep_history.then(|| vec![x1]),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn x(&self) -> &VectorD<T> {
        &self.x
    }

    pub fn g(&self) -> &VectorD<T> {
        &self.g
    }

    pub fn y(&self) -> VectorD<T> {
        self.x - self.g
    }

    /// `sum_{i <= n} |X_i|^2`
    pub fn sum_sq(&self) -> T {
        self.sum_sq.value()
    }

    /// `D_n` when history is kept, otherwise zero (the engine tracks a lower bound instead).
    pub fn diameter(&self) -> T {
        self.diam
    }

    pub fn history(&self) -> Option<&[VectorD<T>]> {
        self.history.as_deref()
    }

    /// `R_n = sqrt(sum_sq/n - |G_n|^2)`, clamped at zero against rounding.
    pub fn radius_of_gyration(&self) -> T {
        let r2 = self.sum_sq() / T::from_count(self.n) - self.g.norm_sq();
        r2.max(T::zero()).sqrt()
    }

    /// Drift reference handed to the model.
    pub fn reference(&self, target: BiasTarget) -> VectorD<T> {
        match target {
            BiasTarget::Barycentre => self.y(),
            BiasTarget::Origin => self.x,
        }
    }

    /// Applies a given increment.
    pub fn advance(&mut self, delta: &VectorD<T>) {
        let next = self.n + 1;
        self.x += *delta;
        self.g += (self.x - self.g).scale(T::from_count(next).recip());
        self.n = next;
        self.sum_sq.add(self.x.norm_sq());
        if let Some(history) = self.history.as_mut() {
            let x = self.x;
            let far = history
                .iter()
                .map(|p| p.distance(&x))
                .fold(T::zero(), T::max);
            self.diam = self.diam.max(far);
            history.push(x);
        }
    }

    /// Draws `D_n` from the model and advances; returns the increment.
    pub fn step(&mut self, spec: &ModelSpec<T>, rng: &mut RngHandle) -> Result<VectorD<T>> {
        let reference = self.reference(spec.bias_target);
        let delta = spec.sample_increment(&reference, rng)?;
        self.advance(&delta);
        Ok(delta)
    }
}

/// Strictly increasing checkpoint indices in `[1, last]`, geometric with the given ratio,
/// always ending at `last`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointSchedule {
    indices: Vec<u64>,
}

impl CheckpointSchedule {
    pub fn geometric(ratio: f64, last: u64) -> Result<Self> {
        if !(ratio > 1.0) || !ratio.is_finite() {
            return Err(CoreError::param("checkpoint_ratio", format!("{ratio} must be > 1")));
        }
        if last == 0 {
            return Err(CoreError::param("n_steps", "must be positive"));
        }
        let mut indices = vec![1u64];
        let mut current = 1u64;
        while current < last {
            let next = ((current as f64) * ratio).ceil() as u64;
            current = next.max(current + 1).min(last);
            indices.push(current);
        }
        Ok(Self { indices })
    }

    pub fn from_indices(mut indices: Vec<u64>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.first() == Some(&0) || indices.is_empty() {
            return Err(CoreError::param("checkpoints", "indices must be >= 1 and nonempty"));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    pub fn last(&self) -> u64 {
        *self.indices.last().expect("schedule is nonempty")
    }
}

/// Sliding minimum over `m in [ceil(n/2), n]`.
#[derive(Clone, Debug, Default)]
pub struct TailMin<T> {
    window: VecDeque<(u64, T)>,
}

impl<T: Scalar> TailMin<T> {
    pub fn new() -> Self {
        Self {
            window: VecDeque::new(),
        }
    }

    /// Records the value at index `n` and returns the tail minimum up to `n`.
    pub fn push(&mut self, n: u64, value: T) -> T {
        while matches!(self.window.back(), Some(&(_, v)) if v >= value) {
            self.window.pop_back();
        }
        self.window.push_back((n, value));
        let lo = n.div_ceil(2);
        while matches!(self.window.front(), Some(&(m, _)) if m < lo) {
            self.window.pop_front();
        }
        self.window.front().map(|&(_, v)| v).unwrap_or(value)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Checkpoint<T: Scalar> {
    pub n: u64,
    pub y_norm: T,
    pub x_norm: T,
    pub g_norm: T,
    pub x_dir: VectorD<T>,
    pub y_dir: VectorD<T>,
    pub r_gyr: T,
    pub diam: T,
    pub tail_min_y: T,
    pub tail_min_x: T,
    pub tail_min_g: T,
}

/// Checkpointed record of one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableSeries<T: Scalar> {
    pub stream: u64,
    /// False when `diam` is only the max distance between checkpointed positions.
    pub diameter_exact: bool,
    pub checkpoints: Vec<Checkpoint<T>>,
    /// `(X_n, G_n)` at every step, when path export is on.
    #[serde(skip)]
    pub path: Option<Vec<(VectorD<T>, VectorD<T>)>>,
}

impl<T: Scalar> ObservableSeries<T> {
    pub fn final_checkpoint(&self) -> Option<&Checkpoint<T>> {
        self.checkpoints.last()
    }

    pub fn final_n(&self) -> u64 {
        self.final_checkpoint().map_or(0, |c| c.n)
    }
}

/// Per-step hook, called after every increment.
pub trait StepObserver<T: Scalar> {
    fn observe(&mut self, before: &WalkState<T>, delta: &VectorD<T>, after: &WalkState<T>);
}

impl<T: Scalar> StepObserver<T> for () {
    #[inline]
    fn observe(&mut self, _: &WalkState<T>, _: &VectorD<T>, _: &WalkState<T>) {}
}

#[derive(Clone, Debug)]
pub struct RunOptions<T> {
    pub checkpoint_ratio: f64,
    pub track_diameter: bool,
    pub record_path: bool,
    /// Starting point; the origin when `None`.
    pub x1: Option<VectorD<T>>,
    /// Worker threads for ensembles; 0 uses rayon's default.
    pub parallelism: usize,
}

impl<T> Default for RunOptions<T> {
    fn default() -> Self {
        Self {
            checkpoint_ratio: 1.1,
            track_diameter: false,
            record_path: false,
            x1: None,
            parallelism: 0,
        }
    }
}

struct Recorder<T: Scalar> {
    checkpoints: Vec<Checkpoint<T>>,
    marked: Vec<VectorD<T>>,
    lower_diam: T,
    tails: [TailMin<T>; 3],
}

impl<T: Scalar> Recorder<T> {
    fn new() -> Self {
        Self {
            checkpoints: Vec::new(),
            marked: Vec::new(),
            lower_diam: T::zero(),
            tails: [TailMin::new(), TailMin::new(), TailMin::new()],
        }
    }

    fn push_tails(&mut self, state: &WalkState<T>) -> [T; 3] {
        let n = state.n();
        [
            self.tails[0].push(n, state.y().norm()),
            self.tails[1].push(n, state.x().norm()),
            self.tails[2].push(n, state.g().norm()),
        ]
    }

    fn checkpoint(&mut self, state: &WalkState<T>, tails: [T; 3], exact: bool) {
        let diam = if exact {
            state.diameter()
        } else {
            let x = *state.x();
            let far = self
                .marked
                .iter()
                .map(|p| p.distance(&x))
                .fold(T::zero(), T::max);
            self.marked.push(x);
            self.lower_diam = self.lower_diam.max(far);
            self.lower_diam
        };
        let y = state.y();
        self.checkpoints.push(Checkpoint {
            n: state.n(),
            y_norm: y.norm(),
            x_norm: state.x().norm(),
            g_norm: state.g().norm(),
            x_dir: state.x().unit_direction(ZeroDirection::Zero),
            y_dir: y.unit_direction(ZeroDirection::Zero),
            r_gyr: state.radius_of_gyration(),
            diam,
            tail_min_y: tails[0],
            tail_min_x: tails[1],
            tail_min_g: tails[2],
        });
    }
}

/// Runs one trajectory of `n_steps` increments (final index `n_steps + 1`).
pub fn run_trajectory<T: Scalar>(
    spec: &ModelSpec<T>,
    n_steps: u64,
    rng: &mut RngHandle,
    options: &RunOptions<T>,
) -> Result<ObservableSeries<T>> {
    run_trajectory_observed(spec, n_steps, rng, options, &mut ())
}

pub fn run_trajectory_observed<T: Scalar, O: StepObserver<T>>(
    spec: &ModelSpec<T>,
    n_steps: u64,
    rng: &mut RngHandle,
    options: &RunOptions<T>,
    observer: &mut O,
) -> Result<ObservableSeries<T>> {
    spec.validate()?;
    let schedule = CheckpointSchedule::geometric(options.checkpoint_ratio, n_steps + 1)?;
    run_with_schedule(spec, &schedule, rng, options, observer)
}

/// Runs until `schedule.last()`, recording at each scheduled index.
pub fn run_with_schedule<T: Scalar, O: StepObserver<T>>(
    spec: &ModelSpec<T>,
    schedule: &CheckpointSchedule,
    rng: &mut RngHandle,
    options: &RunOptions<T>,
    observer: &mut O,
) -> Result<ObservableSeries<T>> {
    let x1 = options.x1.unwrap_or_else(|| VectorD::zeros(spec.dim));
    if x1.dim() != spec.dim {
        return Err(CoreError::param("x1", "dimension does not match the model"));
    }
    let exact = options.track_diameter;
    let mut state = WalkState::new(x1, exact);
    let mut recorder = Recorder::new();
    let mut path = options.record_path.then(|| vec![(x1, x1)]);
    let mut due = schedule.indices().iter().peekable();

    let tails = recorder.push_tails(&state);
    if due.next_if_eq(&&1).is_some() {
        recorder.checkpoint(&state, tails, exact);
    }
    while state.n() < schedule.last() {
        let before = state.clone_light();
        let delta = state.step(spec, rng)?;
        observer.observe(&before, &delta, &state);
        if let Some(p) = path.as_mut() {
            p.push((*state.x(), *state.g()));
        }
        let tails = recorder.push_tails(&state);
        if due.next_if_eq(&&state.n()).is_some() {
            recorder.checkpoint(&state, tails, exact);
        }
    }
    Ok(ObservableSeries {
        stream: rng.stream(),
        diameter_exact: exact,
        checkpoints: recorder.checkpoints,
        path,
    })
}

impl<T: Scalar> WalkState<T> {
    /// Copy without the stored history, for observers.
    fn clone_light(&self) -> Self {
        Self {
            n: self.n,
            x: self.x,
            g: self.g,
            sum_sq: self.sum_sq,
            diam: self.diam,
            history: None,
        }
    }
}

/// Runs `n_runs` independent trajectories on streams `0..n_runs` of `base_seed`.
/// Output is ordered by stream and does not depend on the degree of parallelism.
pub fn run_ensemble<T: Scalar>(
    spec: &ModelSpec<T>,
    n_steps: u64,
    n_runs: u64,
    base_seed: u64,
    options: &RunOptions<T>,
) -> Result<Vec<ObservableSeries<T>>> {
    Ok(run_ensemble_observed(spec, n_steps, n_runs, base_seed, options, |_| ())?
        .into_iter()
        .map(|(series, ())| series)
        .collect())
}

/// As [`run_ensemble`], with one observer per run built by `make_observer(stream)`.
pub fn run_ensemble_observed<T, O, F>(
    spec: &ModelSpec<T>,
    n_steps: u64,
    n_runs: u64,
    base_seed: u64,
    options: &RunOptions<T>,
    make_observer: F,
) -> Result<Vec<(ObservableSeries<T>, O)>>
where
    T: Scalar,
    O: StepObserver<T> + Send,
    F: Fn(u64) -> O + Sync,
{
    if n_runs == 0 {
        return Err(CoreError::param("n_runs", "must be >= 1"));
    }
    spec.validate()?;
    let schedule = CheckpointSchedule::geometric(options.checkpoint_ratio, n_steps + 1)?;
    in_pool(options.parallelism, || {
        (0..n_runs)
            .into_par_iter()
            .map(|stream| {
                let mut rng = RngHandle::new(base_seed, stream);
                let mut observer = make_observer(stream);
                let series = run_with_schedule(spec, &schedule, &mut rng, options, &mut observer)?;
                Ok((series, observer))
            })
            .collect()
    })
}

/// Runs `work` on a dedicated pool with `threads` workers (0: global pool).
pub fn in_pool<R: Send>(threads: usize, work: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        return work();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v1(x: f64) -> VectorD<f64> {
        VectorD::from_slice(&[x]).unwrap()
    }

    fn v2(a: f64, b: f64) -> VectorD<f64> {
        VectorD::from_slice(&[a, b]).unwrap()
    }

    #[test]
    fn two_point_mean() {
        let mut s = WalkState::new(v2(0.0, 0.0), false);
        s.advance(&v2(1.0, 0.0));
        assert_eq!(s.x(), &v2(1.0, 0.0));
        assert_eq!(s.g(), &v2(0.5, 0.0));
        assert_eq!(s.y(), v2(0.5, 0.0));
        s.advance(&v2(1.0, 0.0));
        assert_eq!(s.x(), &v2(2.0, 0.0));
        assert_eq!(s.g(), &v2(1.0, 0.0));
        // (2/3) ((0.5, 0) + (1, 0))
        assert!((s.y()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_increment_contracts_y() {
        let mut s = WalkState::new(v2(0.0, 0.0), false);
        s.advance(&v2(3.0, -1.0));
        s.advance(&v2(1.0, 2.0));
        let n = s.n() as f64;
        let y = s.y();
        s.advance(&v2(0.0, 0.0));
        let expected = y.scale(n / (n + 1.0));
        assert!(s.y().distance(&expected) < 1e-14);
        assert!(s.y().norm() < y.norm());
    }

    #[test]
    fn forced_one_dimensional_sequence() {
        let mut s = WalkState::new(v1(0.0), true);
        let mut xs = vec![0.0];
        let mut gs = vec![0.0];
        for step in [1.0, 1.0, -1.0, 1.0] {
            s.advance(&v1(step));
            xs.push(s.x()[0]);
            gs.push(s.g()[0]);
        }
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 1.0, 2.0]);
        let expected_g = [0.0, 0.5, 1.0, 1.0, 1.2];
        for (g, e) in gs.iter().zip(expected_g) {
            assert!((g - e).abs() < 1e-15);
        }
        assert!((s.y()[0] - 0.8).abs() < 1e-15);
        assert_eq!(s.diameter(), 2.0);
    }

    #[test]
    fn geometric_schedule() {
        let s = CheckpointSchedule::geometric(1.1, 1000).unwrap();
        let idx = s.indices();
        assert_eq!(idx[0], 1);
        assert_eq!(*idx.last().unwrap(), 1000);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(&idx[..12], &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 13]);
        assert!(CheckpointSchedule::geometric(1.0, 10).is_err());
        assert_eq!(CheckpointSchedule::geometric(2.0, 1).unwrap().indices(), &[1]);
    }

    #[test]
    fn tail_min_matches_brute_force() {
        let values: Vec<f64> = (0..500).map(|i| ((i * 37 % 101) as f64).sin() + i as f64 * 0.01).collect();
        let mut tm = TailMin::new();
        for (k, &v) in values.iter().enumerate() {
            let n = k as u64 + 1;
            let got = tm.push(n, v);
            let lo = n.div_ceil(2) as usize;
            let want = values[lo - 1..n as usize].iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(got, want, "n = {n}");
        }
    }

    #[test]
    fn trajectory_matches_replayed_increments() {
        let spec = ModelSpec::<f64>::simple_random_walk(1).unwrap();
        let opts = RunOptions { track_diameter: true, record_path: true, ..RunOptions::default() };
        let mut rng = RngHandle::new(7, 0);
        let series = run_trajectory(&spec, 4, &mut rng, &opts).unwrap();
        let path = series.path.as_ref().unwrap();
        assert_eq!(path.len(), 5);
        let mut replay = WalkState::new(v1(0.0), false);
        for w in path.windows(2) {
            replay.advance(&(w[1].0 - w[0].0));
            assert_eq!(replay.x(), &w[1].0);
            assert!((replay.g()[0] - w[1].1[0]).abs() < 1e-15);
        }
        assert_eq!(series.final_n(), 5);
        let direct: f64 = path.iter().map(|(x, _)| x[0]).sum::<f64>() / 5.0;
        assert!((series.final_checkpoint().unwrap().g_norm - direct.abs()).abs() < 1e-12);
    }

    #[test]
    fn ensemble_is_deterministic_and_parallelism_free() {
        let spec = ModelSpec::<f64>::lattice_biased(2, 0.1, 0.5, 0.01).unwrap();
        let serial = RunOptions { parallelism: 1, ..RunOptions::default() };
        let wide = RunOptions { parallelism: 4, ..RunOptions::default() };
        let a = run_ensemble(&spec, 2000, 6, 99, &serial).unwrap();
        let b = run_ensemble(&spec, 2000, 6, 99, &wide).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].checkpoints, a[1].checkpoints);
        assert!(a.iter().enumerate().all(|(i, s)| s.stream == i as u64));
    }

    #[test]
    fn lower_bound_diameter_never_exceeds_exact() {
        let spec = ModelSpec::<f64>::simple_random_walk(2).unwrap();
        let exact = RunOptions { track_diameter: true, ..RunOptions::default() };
        let approx = RunOptions::default();
        let a = run_trajectory(&spec, 3000, &mut RngHandle::new(1, 2), &exact).unwrap();
        let b = run_trajectory(&spec, 3000, &mut RngHandle::new(1, 2), &approx).unwrap();
        assert!(!b.diameter_exact);
        for (ca, cb) in a.checkpoints.iter().zip(&b.checkpoints) {
            assert!(cb.diam <= ca.diam + 1e-12);
        }
        assert!(a.checkpoints.windows(2).all(|w| w[0].diam <= w[1].diam));
    }

    #[test]
    fn single_precision_walk_runs() {
        let spec = ModelSpec::<f32>::lattice_biased(3, 0.2, 0.5, 0.02).unwrap();
        let s = run_trajectory(&spec, 1000, &mut RngHandle::new(3, 0), &RunOptions::default()).unwrap();
        assert_eq!(s.final_n(), 1001);
        assert!(s.final_checkpoint().unwrap().x_norm > 0.0);
    }
}
