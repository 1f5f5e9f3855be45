#![allow(dead_code)]

use std::path::Path;

use serde_json::{json, Value};

use rmu_harness::config::ExperimentConfig;

/// A coarse config that exercises every experiment in a few seconds.
pub fn small_config() -> Value {
    json!({
        "experiments": ["strong_type", "weak_type", "pointwise_lemmas", "fefferman_stein"],
        "grid": {"dimension": 2, "half_width": 1.0, "core_fraction": 0.5, "eval_fraction": 0.75},
        "refinement": [17, 33],
        "kernel": {"id": "odd_harmonic", "param": 1},
        "weights": [{"kind": "unit"}, {"kind": "power", "alpha": -1.0}],
        "p_values": [0.5, 2.0],
        "delta": 0.25,
        "epsilon": 0.5,
        "symbol_families": [
            {"symbols": [{"kind": "log_abs"}], "r": [1.0]},
            {"symbols": [{"kind": "log_abs"}, {"kind": "sin_x1"}], "r": [1.0, 2.0]}
        ],
        "functions": [
            {"kind": "gaussian_bump", "width": 0.2},
            {"kind": "dipole", "width": 0.15, "shift": 0.2}
        ],
        "lambda_sweep": {"min": 0.01, "max": 100.0, "count": 7},
        "output": "out",
        "seed": 5
    })
}

pub fn parse(v: &Value) -> ExperimentConfig {
    serde_json::from_value(v.clone()).expect("config parses")
}

pub fn write(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    path
}
