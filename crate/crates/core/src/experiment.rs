//! Config-driven batch experiments: parse a flat `key = value` file, run an ensemble,
//! attach analytic predictions, and write `series.csv` and `summary.json`.
//!
//! Keys (`#` starts a comment, blank lines are ignored, each key at most once):
//!
//! | key | required | default |
//! |-----|----------|---------|
//! | `experiment_id` | yes | |
//! | `process` | no | `walk` (or `scalar`) |
//! | `family` | walk | one of `lattice_biased`, `shifted_sphere`, `cap_excluded`, `simple_random_walk` |
//! | `dimension` | walk | |
//! | `rho`, `beta` | except SRW | |
//! | `eps0` | lattice | |
//! | `bias_target` | no | `barycentre` |
//! | `s2` | no | `1` (scalar only) |
//! | `z_init` | no | `1` (scalar only) |
//! | `n_steps`, `n_runs`, `seed` | yes | |
//! | `checkpoint_ratio` | no | `1.1` |
//! | `analyses` | no | empty; comma list of `lln`, `exponent`, `direction`, `recurrence`, `drift_profile` |
//! | `output_dir` | yes | |
//! | `parallelism` | no | `0` (all cores) |
//! | `track_diameter` | no | `n_steps <= 100000` |
//! | `export_path` | no | `false`; writes `path.csv` for run 0 |
//! | `recurrence_threshold` | no | five jump bounds |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    direction_convergence, estimate_exponent, estimate_lln, log_log_slope, mean_ci95,
    recurrence_statistic, Binning, Cutoffs, DriftProfileBuilder, Quantity,
};
use crate::classifier::{classify, classify_srw};
use crate::engine::{run_ensemble_observed, run_with_schedule, CheckpointSchedule, ObservableSeries, RunOptions};
use crate::error::{CoreError, Result};
use crate::lamperti1d::{
    final_v_estimate, run_scalar_ensemble, scalar_recurrence, v_limit, ScalarModelSpec,
    StochApproxSeries,
};
use crate::models::{BiasTarget, Family, ModelSpec};
use crate::rng::RngHandle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Lln,
    Exponent,
    Direction,
    Recurrence,
    DriftProfile,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Lln => "lln",
            Analysis::Exponent => "exponent",
            Analysis::Direction => "direction",
            Analysis::Recurrence => "recurrence",
            Analysis::DriftProfile => "drift_profile",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "lln" => Analysis::Lln,
            "exponent" => Analysis::Exponent,
            "direction" => Analysis::Direction,
            "recurrence" => Analysis::Recurrence,
            "drift_profile" => Analysis::DriftProfile,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProcessSpec {
    Walk(ModelSpec<f64>),
    Scalar {
        spec: ScalarModelSpec<f64>,
        z_init: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub process: ProcessSpec,
    pub n_steps: u64,
    pub n_runs: u64,
    pub seed: u64,
    pub checkpoint_ratio: f64,
    pub analyses: Vec<Analysis>,
    pub output_dir: PathBuf,
    pub parallelism: usize,
    pub track_diameter: bool,
    pub export_path: bool,
    pub recurrence_threshold: Option<f64>,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment_id",
    "process",
    "family",
    "dimension",
    "rho",
    "beta",
    "eps0",
    "bias_target",
    "s2",
    "z_init",
    "n_steps",
    "n_runs",
    "seed",
    "checkpoint_ratio",
    "analyses",
    "output_dir",
    "parallelism",
    "track_diameter",
    "export_path",
    "recurrence_threshold",
];

struct Entries {
    map: BTreeMap<String, (Option<usize>, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(Option<usize>, String)> {
        self.map.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<(Option<usize>, String)> {
        self.take(key)
            .ok_or_else(|| CoreError::config(None, format!("missing required key `{key}`")))
    }

    fn parsed<V: std::str::FromStr>(&mut self, key: &str) -> Result<Option<V>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse().map(Some).map_err(|_| {
                CoreError::config(line, format!("cannot parse `{key}` value `{raw}`"))
            }),
        }
    }

    fn parsed_required<V: std::str::FromStr>(&mut self, key: &str) -> Result<V> {
        self.parsed(key)?
            .ok_or_else(|| CoreError::config(None, format!("missing required key `{key}`")))
    }
}

fn wrap_param(e: CoreError) -> CoreError {
    match e {
        CoreError::Config { .. } => e,
        other => CoreError::config(None, other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CoreError::config(Some(i + 1), "expected `key = value`"))?;
            pairs.push((Some(i + 1), k.trim().to_string(), v.trim().to_string()));
        }
        Self::from_entries(pairs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CoreError::config(None, format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Builds a config from already-split key/value pairs.
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self::from_entries(pairs.into_iter().map(|(k, v)| (None, k.into(), v.into())))
    }

    fn from_entries(
        pairs: impl IntoIterator<Item = (Option<usize>, String, String)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (line, k, v) in pairs {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(CoreError::config(line, format!("unknown key `{k}`")));
            }
            if map.insert(k.clone(), (line, v)).is_some() {
                return Err(CoreError::config(line, format!("duplicate key `{k}`")));
            }
        }
        let mut e = Entries { map };

        let (_, experiment_id) = e.required("experiment_id")?;
        if experiment_id.is_empty() {
            return Err(CoreError::config(None, "experiment_id is empty"));
        }
        let process_name = e.take("process").map(|p| p.1).unwrap_or_else(|| "walk".into());
        let process = match process_name.as_str() {
            "walk" => {
                let (line, fam) = e.required("family")?;
                let family = Family::parse(&fam)
                    .ok_or_else(|| CoreError::config(line, format!("unknown family `{fam}`")))?;
                let dim: usize = e.parsed_required("dimension")?;
                let bias_target = match e.take("bias_target") {
                    None => BiasTarget::Barycentre,
                    Some((line, b)) => BiasTarget::parse(&b).ok_or_else(|| {
                        CoreError::config(line, format!("unknown bias_target `{b}`"))
                    })?,
                };
                let spec = if family == Family::SimpleRandomWalk {
                    for k in ["rho", "beta", "eps0"] {
                        if let Some((line, _)) = e.take(k) {
                            return Err(CoreError::config(
                                line,
                                format!("`{k}` does not apply to simple_random_walk"),
                            ));
                        }
                    }
                    ModelSpec::simple_random_walk(dim)
                } else {
                    let rho: f64 = e.parsed_required("rho")?;
                    let beta: f64 = e.parsed_required("beta")?;
                    let eps0: f64 = if family == Family::LatticeBiased {
                        e.parsed_required("eps0")?
                    } else if let Some((line, _)) = e.take("eps0") {
                        return Err(CoreError::config(line, "`eps0` applies to lattice_biased only"));
                    } else {
                        0.0
                    };
                    ModelSpec::new(family, dim, rho, beta, eps0, bias_target)
                }
                .map_err(wrap_param)?
                .with_bias_target(bias_target);
                for k in ["s2", "z_init"] {
                    if let Some((line, _)) = e.take(k) {
                        return Err(CoreError::config(line, format!("`{k}` applies to scalar runs only")));
                    }
                }
                ProcessSpec::Walk(spec)
            }
            "scalar" => {
                for k in ["family", "dimension", "eps0", "bias_target"] {
                    if let Some((line, _)) = e.take(k) {
                        return Err(CoreError::config(line, format!("`{k}` applies to walks only")));
                    }
                }
                let rho: f64 = e.parsed_required("rho")?;
                let beta: f64 = e.parsed_required("beta")?;
                let s2: f64 = e.parsed("s2")?.unwrap_or(1.0);
                let z_init: f64 = e.parsed("z_init")?.unwrap_or(1.0);
                if !(z_init > 0.0) || !z_init.is_finite() {
                    return Err(CoreError::config(None, "z_init must be positive"));
                }
                let spec = ScalarModelSpec::new(rho, beta, s2).map_err(wrap_param)?;
                ProcessSpec::Scalar { spec, z_init }
            }
            other => {
                return Err(CoreError::config(None, format!("unknown process `{other}`")));
            }
        };

        let n_steps: u64 = e.parsed_required("n_steps")?;
        let n_runs: u64 = e.parsed_required("n_runs")?;
        let seed: u64 = e.parsed_required("seed")?;
        let checkpoint_ratio: f64 = e.parsed("checkpoint_ratio")?.unwrap_or(1.1);
        if n_steps < 10 {
            return Err(CoreError::config(None, "n_steps must be >= 10"));
        }
        if n_runs < 1 {
            return Err(CoreError::config(None, "n_runs must be >= 1"));
        }
        if !(checkpoint_ratio > 1.0) || !checkpoint_ratio.is_finite() {
            return Err(CoreError::config(None, "checkpoint_ratio must be > 1"));
        }

        let mut analyses = Vec::new();
        if let Some((line, list)) = e.take("analyses") {
            for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let a = Analysis::parse(item)
                    .ok_or_else(|| CoreError::config(line, format!("unknown analysis `{item}`")))?;
                if !analyses.contains(&a) {
                    analyses.push(a);
                }
            }
        }
        if matches!(process, ProcessSpec::Scalar { .. }) {
            if let Some(a) = analyses
                .iter()
                .find(|a| matches!(a, Analysis::Direction | Analysis::DriftProfile))
            {
                return Err(CoreError::config(
                    None,
                    format!("analysis `{}` needs a walk process", a.name()),
                ));
            }
        }

        let (_, output_dir) = e.required("output_dir")?;
        let parallelism: usize = e.parsed("parallelism")?.unwrap_or(0);
        let track_diameter: bool = e.parsed("track_diameter")?.unwrap_or(n_steps <= 100_000);
        let export_path: bool = e.parsed("export_path")?.unwrap_or(false);
        let recurrence_threshold: Option<f64> = e.parsed("recurrence_threshold")?;
        if let Some(t) = recurrence_threshold {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(CoreError::config(None, "recurrence_threshold must be >= 0"));
            }
        }
        debug_assert!(e.map.is_empty(), "unconsumed keys: {:?}", e.map.keys());

        Ok(Self {
            experiment_id,
            process,
            n_steps,
            n_runs,
            seed,
            checkpoint_ratio,
            analyses,
            output_dir: PathBuf::from(output_dir),
            parallelism,
            track_diameter,
            export_path,
            recurrence_threshold,
        })
    }

    /// Every key with its resolved value, in a form that parses back to `self`.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(&str, String)> = vec![("experiment_id", self.experiment_id.clone())];
        match &self.process {
            ProcessSpec::Walk(spec) => {
                out.push(("process", "walk".into()));
                out.push(("family", spec.family.name().into()));
                out.push(("dimension", spec.dim.to_string()));
                if spec.family != Family::SimpleRandomWalk {
                    out.push(("rho", spec.rho.to_string()));
                    out.push(("beta", spec.beta.to_string()));
                }
                if spec.family == Family::LatticeBiased {
                    out.push(("eps0", spec.eps0.to_string()));
                }
                out.push(("bias_target", spec.bias_target.name().into()));
            }
            ProcessSpec::Scalar { spec, z_init } => {
                out.push(("process", "scalar".into()));
                out.push(("rho", spec.rho.to_string()));
                out.push(("beta", spec.beta.to_string()));
                out.push(("s2", spec.s2.to_string()));
                out.push(("z_init", z_init.to_string()));
            }
        }
        out.push(("n_steps", self.n_steps.to_string()));
        out.push(("n_runs", self.n_runs.to_string()));
        out.push(("seed", self.seed.to_string()));
        out.push(("checkpoint_ratio", self.checkpoint_ratio.to_string()));
        out.push((
            "analyses",
            self.analyses.iter().map(|a| a.name()).collect::<Vec<_>>().join(", "),
        ));
        out.push(("output_dir", self.output_dir.display().to_string()));
        out.push(("parallelism", self.parallelism.to_string()));
        out.push(("track_diameter", self.track_diameter.to_string()));
        out.push(("export_path", self.export_path.to_string()));
        if let Some(t) = self.recurrence_threshold {
            out.push(("recurrence_threshold", t.to_string()));
        }
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    fn threshold(&self) -> f64 {
        self.recurrence_threshold.unwrap_or_else(|| match &self.process {
            ProcessSpec::Walk(spec) => 5.0 * spec.jump_bound(),
            ProcessSpec::Scalar { spec, .. } => 5.0 * spec.step_size,
        })
    }
}

/// Files written by a successful experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub series_csv: PathBuf,
    pub summary_json: PathBuf,
    pub path_csv: Option<PathBuf>,
    pub summary: Value,
}

pub const SERIES_FILE: &str = "series.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PATH_FILE: &str = "path.csv";

/// Runs the experiment and writes its outputs. Everything is computed before the first
/// file is written; if any write fails, files already written by this call are removed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let started = Instant::now();
    let (series_text, path_text, mut summary) = match &config.process {
        ProcessSpec::Walk(spec) => run_walk(config, spec)?,
        ProcessSpec::Scalar { spec, z_init } => run_scalar_experiment(config, spec, *z_init)?,
    };
    let streams: Vec<u64> = (0..config.n_runs).collect();
    let obj = summary.as_object_mut().expect("summary is an object");
    obj.insert(
        "config".into(),
        Value::Object(
            config
                .to_pairs()
                .into_iter()
                .map(|(k, v)| (k, Value::String(v)))
                .collect(),
        ),
    );
    obj.insert("experiment_id".into(), json!(config.experiment_id));
    obj.insert(
        "seeds".into(),
        json!({"base_seed": config.seed, "streams": streams, "generator": "chacha8, stream = run index"}),
    );
    obj.insert("final_n".into(), json!(config.n_steps + 1));
    obj.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    obj.insert("wall_clock_seconds".into(), json!(started.elapsed().as_secs_f64()));

    fs::create_dir_all(&config.output_dir)?;
    let series_csv = config.output_dir.join(SERIES_FILE);
    let summary_json = config.output_dir.join(SUMMARY_FILE);
    let path_csv = path_text.as_ref().map(|_| config.output_dir.join(PATH_FILE));
    let mut written: Vec<&Path> = Vec::new();
    let result = (|| -> Result<()> {
        fs::write(&series_csv, &series_text)?;
        written.push(&series_csv);
        if let (Some(p), Some(text)) = (&path_csv, &path_text) {
            fs::write(p, text)?;
            written.push(p);
        }
        fs::write(&summary_json, serde_json::to_string_pretty(&summary)? + "\n")?;
        Ok(())
    })();
    if let Err(e) = result {
        for p in written {
            let _ = fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(ExperimentOutput {
        series_csv,
        summary_json,
        path_csv,
        summary,
    })
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `run,n,y_norm,x_norm,g_norm,xhat_0..xhat_{d-1},r_gyr,diam,tail_min_y`.
pub fn walk_series_csv(dim: usize, series: &[ObservableSeries<f64>]) -> String {
    let mut out = String::from("run,n,y_norm,x_norm,g_norm");
    for i in 0..dim {
        let _ = write!(out, ",xhat_{i}");
    }
    out.push_str(",r_gyr,diam,tail_min_y\n");
    for s in series {
        for c in &s.checkpoints {
            let _ = write!(out, "{},{},{},{},{}", s.stream, c.n, c.y_norm, c.x_norm, c.g_norm);
            for x in c.x_dir.as_slice() {
                let _ = write!(out, ",{x}");
            }
            let _ = writeln!(out, ",{},{},{}", c.r_gyr, c.diam, c.tail_min_y);
        }
    }
    out
}

/// `run,n,z,v,tail_min`; `v` is empty where `Z_n = 0`.
pub fn scalar_series_csv(series: &[StochApproxSeries<f64>]) -> String {
    let mut out = String::from("run,n,z,v,tail_min\n");
    for s in series {
        for c in &s.checkpoints {
            let _ = writeln!(out, "{},{},{},{},{}", s.stream, c.n, c.z, opt_f64(c.v), c.tail_min);
        }
    }
    out
}

fn window_low(n: u64, divisor: u64) -> u64 {
    (n / divisor).max(1)
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let k = values.len();
    Some(if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    })
}

type Rendered = (String, Option<String>, Value);

fn run_walk(config: &ExperimentConfig, spec: &ModelSpec<f64>) -> Result<Rendered> {
    let options = RunOptions {
        checkpoint_ratio: config.checkpoint_ratio,
        track_diameter: config.track_diameter,
        parallelism: config.parallelism,
        ..RunOptions::default()
    };
    let want = |a| config.analyses.contains(&a);
    let binning = Binning::default();

    let (series, drift): (Vec<ObservableSeries<f64>>, Option<DriftProfileBuilder<f64>>) =
        if want(Analysis::DriftProfile) {
            let runs = run_ensemble_observed(spec, config.n_steps, config.n_runs, config.seed, &options, |_| {
                DriftProfileBuilder::new(*spec, binning).expect("default binning is valid")
            })?;
            let mut merged = DriftProfileBuilder::new(*spec, binning)?;
            let mut series = Vec::with_capacity(runs.len());
            for (s, b) in runs {
                merged.merge(&b);
                series.push(s);
            }
            (series, Some(merged))
        } else {
            let runs = run_ensemble_observed(spec, config.n_steps, config.n_runs, config.seed, &options, |_| ())?;
            (runs.into_iter().map(|(s, ())| s).collect(), None)
        };

    let path_text = if config.export_path {
        let schedule = CheckpointSchedule::geometric(config.checkpoint_ratio, config.n_steps + 1)?;
        let opts = RunOptions {
            record_path: true,
            ..options.clone()
        };
        let run0 = run_with_schedule(spec, &schedule, &mut RngHandle::new(config.seed, 0), &opts, &mut ())?;
        let mut out = String::from("run,n");
        for i in 0..spec.dim {
            let _ = write!(out, ",x_{i}");
        }
        for i in 0..spec.dim {
            let _ = write!(out, ",g_{i}");
        }
        out.push('\n');
        for (k, (x, g)) in run0.path.unwrap_or_default().iter().enumerate() {
            let _ = write!(out, "0,{}", k + 1);
            for c in x.as_slice().iter().chain(g.as_slice()) {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        Some(out)
    } else {
        None
    };

    let classifier = if spec.family == Family::SimpleRandomWalk {
        serde_json::to_value(classify_srw(spec.dim)?)?
    } else {
        serde_json::to_value(classify(spec.dim, spec.rho, spec.beta, spec.sigma2(), spec.bias_target)?)?
    };
    // A simple random walk spreads like sqrt(n), the beta = 1 scale.
    let lln_beta = if spec.family == Family::SimpleRandomWalk { 1.0 } else { spec.beta };
    let final_n = config.n_steps + 1;

    let mut analyses = serde_json::Map::new();
    if want(Analysis::Lln) {
        let mut v = Vec::new();
        for q in Quantity::ALL {
            v.push(serde_json::to_value(estimate_lln(&series, lln_beta, q)?)?);
        }
        analyses.insert("lln".into(), Value::Array(v));
    }
    if want(Analysis::Exponent) {
        let window = (window_low(final_n, 100), final_n);
        let mut v = Vec::new();
        for q in Quantity::ALL {
            v.push(match estimate_exponent(&series, q, window) {
                Ok(e) => serde_json::to_value(e)?,
                Err(e) => json!({"quantity": q.name(), "error": e.to_string()}),
            });
        }
        analyses.insert("exponent".into(), Value::Array(v));
    }
    if want(Analysis::Direction) {
        let window = (window_low(final_n, 2), final_n);
        let mut per_run = Vec::new();
        let mut ok = Vec::new();
        for s in &series {
            match direction_convergence(s, window) {
                Ok(d) => {
                    ok.push(d.dispersion);
                    per_run.push(json!(d.dispersion));
                }
                Err(_) => per_run.push(Value::Null),
            }
        }
        let mean = (!ok.is_empty()).then(|| mean_ci95(&ok));
        analyses.insert(
            "direction".into(),
            json!({
                "window": [window.0, window.1],
                "per_run_dispersion": per_run,
                "median_dispersion": median(&mut ok.clone()),
                "mean_dispersion": mean.map(|m| m.0),
                "ci95": mean.map(|m| m.1),
                "undefined_runs": per_run.iter().filter(|v| v.is_null()).count(),
            }),
        );
    }
    if want(Analysis::Recurrence) {
        let mut v = Vec::new();
        for q in Quantity::ALL {
            v.push(match recurrence_statistic(&series, q, config.threshold(), Cutoffs::default()) {
                Ok(r) => serde_json::to_value(r)?,
                Err(e) => json!({"quantity": q.name(), "error": e.to_string()}),
            });
        }
        analyses.insert("recurrence".into(), Value::Array(v));
    }
    if let Some(builder) = drift {
        analyses.insert(
            "drift_profile".into(),
            match builder.finish() {
                Ok(p) => serde_json::to_value(p)?,
                Err(e) => json!({"error": e.to_string()}),
            },
        );
    }

    let summary = json!({
        "process": "walk",
        "dimension": spec.dim,
        "classifier": classifier,
        "analyses": analyses,
        "diameter_exact": config.track_diameter,
    });
    Ok((walk_series_csv(spec.dim, &series), path_text, summary))
}

fn run_scalar_experiment(
    config: &ExperimentConfig,
    spec: &ScalarModelSpec<f64>,
    z_init: f64,
) -> Result<Rendered> {
    let series = run_scalar_ensemble(
        spec,
        config.n_steps,
        z_init,
        config.n_runs,
        config.seed,
        config.checkpoint_ratio,
        config.parallelism,
    )?;
    let final_n = config.n_steps + 1;
    let supercritical = spec.rho > 0.0 && spec.beta < 1.0;
    let prediction = json!({
        "v_limit": supercritical.then(|| v_limit(spec.rho, spec.beta)),
        "ell": supercritical.then(|| crate::classifier::ell(spec.rho, spec.beta).ok()).flatten(),
        "critical_side": (spec.beta == 1.0).then_some({
            if 2.0 * spec.rho <= spec.s2 { "recurrent" } else { "transient" }
        }),
    });

    let mut analyses = serde_json::Map::new();
    if config.analyses.contains(&Analysis::Lln) {
        let exponent = 1.0 / (1.0 + spec.beta);
        let ratios: Vec<f64> = series
            .iter()
            .filter_map(|s| s.final_checkpoint())
            .map(|c| c.z / (c.n as f64).powf(exponent))
            .collect();
        let (zm, zci) = mean_ci95(&ratios);
        let v = final_v_estimate(&series).ok();
        analyses.insert(
            "lln".into(),
            json!({
                "exponent_used": exponent,
                "z_ratio_mean": zm,
                "z_ratio_ci95": zci,
                "v_mean": v.map(|v| v.0),
                "v_ci95": v.map(|v| v.1),
            }),
        );
    }
    if config.analyses.contains(&Analysis::Exponent) {
        let window = (window_low(final_n, 100), final_n);
        let mut slopes = Vec::new();
        for s in &series {
            let pts: Vec<(f64, f64)> = s
                .checkpoints
                .iter()
                .filter(|c| c.n >= window.0 && c.z > 0.0)
                .map(|c| ((c.n as f64).ln(), c.z.ln()))
                .collect();
            if pts.len() >= 10 {
                slopes.push(log_log_slope(&pts).0);
            }
        }
        let est = (!slopes.is_empty()).then(|| mean_ci95(&slopes));
        analyses.insert(
            "exponent".into(),
            json!({
                "window": [window.0, window.1],
                "nu_hat": est.map(|e| e.0),
                "ci95": est.map(|e| e.1),
                "runs_used": slopes.len(),
            }),
        );
    }
    if config.analyses.contains(&Analysis::Recurrence) {
        analyses.insert(
            "recurrence".into(),
            match scalar_recurrence(&series, config.threshold(), Cutoffs::default()) {
                Ok(r) => serde_json::to_value(r)?,
                Err(e) => json!({"error": e.to_string()}),
            },
        );
    }
    let summary = json!({
        "process": "scalar",
        "classifier": prediction,
        "analyses": analyses,
    });
    Ok((scalar_series_csv(&series), None, summary))
}
