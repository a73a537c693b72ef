use std::fs;

use barywalk_core::experiment::{run_experiment, ExperimentConfig, SERIES_FILE, SUMMARY_FILE};

fn config(body: &str, out: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig::parse(&format!("{body}output_dir = {}\n", out.display())).unwrap()
}

#[test]
fn scalar_experiment_writes_v_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        "experiment_id = sa\nprocess = scalar\nrho = 1\nbeta = 0.5\nn_steps = 20000\n\
n_runs = 20\nseed = 3\nanalyses = lln, exponent, recurrence\n",
        tmp.path(),
    );
    let out = run_experiment(&cfg).unwrap();
    let csv = fs::read_to_string(&out.series_csv).unwrap();
    assert!(csv.starts_with("run,n,z,v,tail_min\n"));
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == 5));
    let s = &out.summary;
    assert!((s["classifier"]["v_limit"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-12);
    let v = s["analyses"]["lln"]["v_mean"].as_f64().unwrap();
    assert!(v > 1.0 && v < 2.5, "{v}");
    assert_eq!(s["analyses"]["recurrence"]["verdict"], "transient_like");
}

#[test]
fn walk_summary_carries_prediction_and_analyses() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        "experiment_id = ext\nfamily = lattice_biased\ndimension = 2\nrho = 0.1\nbeta = 0.5\n\
eps0 = 0.01\nn_steps = 20000\nn_runs = 20\nseed = 5\nexport_path = true\ntrack_diameter = false\n\
analyses = lln, exponent, direction, recurrence, drift_profile\n",
        tmp.path(),
    );
    let out = run_experiment(&cfg).unwrap();
    let s: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(s["classifier"]["phase_label"], "extended");
    assert_eq!(s["analyses"]["lln"].as_array().unwrap().len(), 3);
    assert!(s["analyses"]["drift_profile"]["bins"].is_array());
    assert_eq!(s["analyses"]["direction"]["per_run_dispersion"].as_array().unwrap().len(), 20);
    let echo: Vec<(String, String)> = s["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_str().unwrap().to_string()))
        .collect();
    assert_eq!(ExperimentConfig::from_pairs(echo).unwrap(), cfg);

    let path = fs::read_to_string(out.path_csv.unwrap()).unwrap();
    assert!(path.starts_with("run,n,x_0,x_1,g_0,g_1\n"));
    assert_eq!(path.lines().count(), 1 + 20_001);
}

#[test]
fn failed_write_leaves_no_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        "experiment_id = p\nfamily = simple_random_walk\ndimension = 2\nn_steps = 100\nn_runs = 2\nseed = 1\n",
        tmp.path(),
    );
    // A directory where summary.json should go makes the last write fail.
    fs::create_dir(tmp.path().join(SUMMARY_FILE)).unwrap();
    assert!(run_experiment(&cfg).is_err());
    assert!(!tmp.path().join(SERIES_FILE).exists());
}
