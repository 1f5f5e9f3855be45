//! Acceptance gate: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach stdout.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rmu_core::grid::{ball_family, Grid, GridFunction};
use rmu_core::kernel::{builtin_kernel, check_cancellation, dyadic_scales, fit_continuity};
use rmu_core::marcinkiewicz::{mu_quadrature_oracle, Commutator, MuOperator};
use rmu_core::maximal::{hl_maximal, iterated_maximal};
use rmu_core::orlicz::{orlicz_average, orlicz_maximal, orlicz_modular, SymbolFamily, YoungFunction};
use rmu_core::weight::{a1_constant, ainf_constant, ap_constant, power_weight, Weight};
use rmu_harness::config::{ExperimentConfig, FunctionSpec};
use rmu_harness::report::{to_csv, to_json, RatioReport};

type Outcome = Result<String, String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "kernel validation", budget: secs(10), run: kernel_validation },
        Criterion { id: 2, name: "exact-integration oracle", budget: secs(60), run: exact_integration },
        Criterion { id: 3, name: "operator algebra", budget: secs(120), run: operator_algebra },
        Criterion { id: 4, name: "maximal and orlicz suite", budget: secs(120), run: maximal_orlicz },
        Criterion { id: 5, name: "weight suite", budget: secs(120), run: weight_suite },
        Criterion { id: 6, name: "strong-type probes", budget: secs(30 * 60), run: strong_type },
        Criterion { id: 7, name: "weak-type probes", budget: secs(15 * 60), run: weak_type },
        Criterion { id: 8, name: "pointwise probes", budget: secs(15 * 60), run: pointwise },
        Criterion { id: 9, name: "determinism", budget: secs(15 * 60), run: determinism },
    ];
    let only: Vec<usize> = std::env::var("RMU_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect())
        .unwrap_or_default();
    let mut failures = 0;
    for c in &criteria {
        if !only.is_empty() && !only.contains(&c.id) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= c.budget;
        let (passed, detail) = match outcome {
            Ok(d) => (in_budget, d),
            Err(d) => (false, d),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "{} [{}] {}: {} ({:.1} s, budget {} s{})",
            if passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_budget { "" } else { ", over budget" }
        );
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criterion/criteria failed");
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load_config(name: &str) -> Result<ExperimentConfig, String> {
    ExperimentConfig::from_path(&configs_dir().join(name)).map_err(|e| e.to_string())
}

fn run_config(name: &str) -> Result<Vec<RatioReport>, String> {
    let cfg = load_config(name)?;
    rmu_harness::run(&cfg).map_err(|e| format!("{name}: {e}"))
}

/// Finite ratios, a nonempty report and stability factor below 2.
fn ratio_gate(report: &RatioReport) -> Result<String, String> {
    let s = &report.summary;
    ensure(!report.rows.is_empty(), || format!("{}: no rows", report.experiment))?;
    ensure(s.all_finite, || format!("{}: non-finite ratio", report.experiment))?;
    ensure(s.stability_factor < 2.0, || {
        let worst = s
            .cases
            .iter()
            .max_by(|a, b| a.stability_factor.total_cmp(&b.stability_factor))
            .map(|c| format!("{} {} {}", c.function, c.weight, c.case))
            .unwrap_or_default();
        format!(
            "{}: stability factor {:.3} >= 2 (worst case {worst})",
            report.experiment, s.stability_factor
        )
    })?;
    Ok(format!(
        "{} rows={} max_ratio={:.4e} stability={:.3}",
        report.experiment,
        report.rows.len(),
        s.max_ratio,
        s.stability_factor
    ))
}

/// Every check whose name starts with `prefix` passed, and there is one.
fn checks_gate(report: &RatioReport, prefix: &str) -> Result<usize, String> {
    let matching: Vec<_> = report
        .summary
        .checks
        .iter()
        .filter(|c| c.name.starts_with(prefix))
        .collect();
    ensure(!matching.is_empty(), || format!("no `{prefix}` checks"))?;
    if let Some(bad) = matching.iter().find(|c| !c.passed) {
        return Err(format!("check {} failed: {}", bad.name, bad.detail));
    }
    Ok(matching.len())
}

fn probe_grid(n: usize) -> Grid {
    Grid::new(2, 2.0, n, 0.5, 0.75).unwrap()
}

fn smooth(grid: &Grid, stream: u64) -> GridFunction {
    FunctionSpec::RandomSmooth { stream }.build(grid, 7).unwrap()
}

fn kernel_validation() -> Outcome {
    let accepted = [
        builtin_kernel("odd_harmonic", 2, Some(1.0)),
        builtin_kernel("odd_harmonic", 2, Some(2.0)),
        builtin_kernel("odd_harmonic", 2, Some(3.0)),
        builtin_kernel("log_rough", 2, Some(3.0)),
        builtin_kernel("log_rough", 2, Some(2.5)),
        builtin_kernel("sign_1d", 1, None),
    ];
    let mut worst = 0.0f64;
    for k in accepted {
        let k = k.map_err(|e| e.to_string())?;
        ensure(!k.is_negative_example(), || format!("{} flagged", k.label()))?;
        let r = check_cancellation(&k, 4096).map_err(|e| e.to_string())?;
        ensure(r < 1e-8, || format!("{} residual {r:e}", k.label()))?;
        worst = worst.max(r);
    }
    let scales = dyadic_scales(4, 20);
    let sign = builtin_kernel("sign_first_coord", 2, None).map_err(|e| e.to_string())?;
    let sr = fit_continuity(&sign, &scales, 4096).map_err(|e| e.to_string())?;
    ensure(sr.negative_example && sr.fitted_rho < 0.5, || {
        format!("sign_first_coord not flagged: rho = {}", sr.fitted_rho)
    })?;
    let lr = fit_continuity(&builtin_kernel("log_rough", 2, Some(3.0)).unwrap(), &scales, 4096)
        .map_err(|e| e.to_string())?;
    ensure((2.5..=3.5).contains(&lr.fitted_rho), || {
        format!("log_rough(3) rho = {}", lr.fitted_rho)
    })?;
    let lips: Vec<f64> = lr.lipschitz_estimates.iter().map(|e| e.1).collect();
    ensure(lips.windows(2).all(|w| w[1] >= w[0]), || {
        format!("log_rough(3) Lipschitz estimates not monotone: {lips:?}")
    })?;
    Ok(format!(
        "max residual {worst:.2e}, sign_first_coord rho {:.3}, log_rough(3) rho {:.3}, Lipschitz {:.3e} -> {:.3e}",
        sr.fitted_rho,
        lr.fitted_rho,
        lips[0],
        lips[lips.len() - 1]
    ))
}

fn exact_integration() -> Outcome {
    let g = Grid::new(2, 1.0, 65, 0.25, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let eval: Vec<usize> = g.eval_points().into_iter().filter(|&x| x != g.origin()).collect();
    let hn = g.cell_volume();
    let mut worst_closed = 0.0f64;
    for id in ["odd_harmonic", "log_rough"] {
        let k = builtin_kernel(id, 2, None).unwrap();
        let v = 1.75;
        let mut vals = vec![0.0; g.len()];
        vals[g.origin()] = v;
        let f = GridFunction::new(g, vals).unwrap();
        let out = MuOperator::new(&g, &k).unwrap().mu(&f, None).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let x = eval[rng.gen_range(0..eval.len())];
            let c = g.coords(x);
            let d = c.iter().map(|t| t * t).sum::<f64>().sqrt();
            let want = k.eval(&c).abs() * v * hn / (2f64.sqrt() * d * d);
            let e = rel(out.value(x), want);
            ensure(e <= 1e-10, || format!("{id} closed form off by {e:e} at {c:?}"))?;
            worst_closed = worst_closed.max(e);
        }
    }

    let k = builtin_kernel("log_rough", 2, Some(3.0)).unwrap();
    let c = g.core_half_index() as f64 * g.spacing();
    let f = GridFunction::from_fn(g, |x| {
        let r2 = (x[0] * x[0] + x[1] * x[1]) / (c * c);
        if x.iter().all(|t| t.abs() <= c) && r2 < 1.0 {
            (1.0 - r2).powi(2) * (1.0 + x[0] - 0.5 * x[1])
        } else {
            0.0
        }
    })
    .unwrap();
    let exact = MuOperator::new(&g, &k).unwrap().mu(&f, None).map_err(|e| e.to_string())?;
    let mut worst_oracle = 0.0f64;
    for _ in 0..20 {
        let x = eval[rng.gen_range(0..eval.len())];
        let o = mu_quadrature_oracle(&f, &k, x, 10_000, None).map_err(|e| e.to_string())?;
        let e = rel(exact.value(x), o);
        ensure(e <= 1e-2, || format!("oracle off by {e:e} at {:?}", g.coords(x)))?;
        worst_oracle = worst_oracle.max(e);
    }
    Ok(format!(
        "closed form max rel err {worst_closed:.2e}, oracle max rel err {worst_oracle:.2e}"
    ))
}

fn operator_algebra() -> Outcome {
    let g = probe_grid(33);
    let k = builtin_kernel("log_rough", 2, Some(3.0)).unwrap();
    let op = MuOperator::new(&g, &k).unwrap();
    let err = |e: rmu_core::Error| e.to_string();
    let f = smooth(&g, 1);
    let b1 = GridFunction::from_fn(g, |x| (x[0] * x[0] + x[1] * x[1]).sqrt().max(g.spacing()).ln()).unwrap();
    let b2 = GridFunction::from_fn(g, |x| x[0].sin()).unwrap();
    let fam = SymbolFamily::with_norms(vec![b1, b2.clone()], vec![1.0, 2.0], vec![1.0, 1.0]).map_err(err)?;

    let base = op.mu(&f, None).map_err(err)?;
    let base_b = op.mu(&f, Some(Commutator::full(&fam))).map_err(err)?;
    let mut worst_h = 0.0f64;
    for c in [-3.0, 0.37, 12.5] {
        let scaled = op.mu(&f.scale(c), None).map_err(err)?;
        let scaled_b = op.mu(&f.scale(c), Some(Commutator::full(&fam))).map_err(err)?;
        for x in g.eval_points() {
            for (s, b) in [(&scaled, &base), (&scaled_b, &base_b)] {
                let want = c.abs() * b.value(x);
                let e = (s.value(x) - want).abs();
                ensure(e <= 1e-10 * want.max(1e-300), || format!("homogeneity off by {e:e}"))?;
                worst_h = worst_h.max(e / want.max(1e-300));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for pair in 0..50 {
        let fa = smooth(&g, 100 + 2 * pair);
        let fb = smooth(&g, 101 + 2 * pair).scale(rng.gen_range(0.1..10.0));
        let sum = fa.add(&fb).map_err(err)?;
        let (ma, mb, ms) = (
            op.mu(&fa, None).map_err(err)?,
            op.mu(&fb, None).map_err(err)?,
            op.mu(&sum, None).map_err(err)?,
        );
        for x in g.eval_points() {
            let bound = ma.value(x) + mb.value(x);
            ensure(ms.value(x) <= bound * (1.0 + 1e-12), || {
                format!("subadditivity fails for pair {pair}: {} > {bound}", ms.value(x))
            })?;
        }
    }

    let constant = GridFunction::constant(g, 2.5).map_err(err)?;
    let with_const =
        SymbolFamily::with_norms(vec![b2, constant], vec![1.0, 1.0], vec![1.0, 0.0]).map_err(err)?;
    for subset in [&[1usize][..], &[0, 1][..]] {
        let out = op.mu(&f, Some(Commutator::subset(&with_const, subset))).map_err(err)?;
        ensure(out.values().iter().all(|&v| v == 0.0), || {
            format!("constant symbol commutator {subset:?} not exactly 0")
        })?;
    }

    let empty = op.mu(&f, Some(Commutator::subset(&fam, &[]))).map_err(err)?;
    ensure(empty == base, || "σ=∅ differs from μ".into())?;
    let listed = op.mu(&f, Some(Commutator::subset(&fam, &[0, 1]))).map_err(err)?;
    ensure(listed == base_b, || "σ=full differs from the full commutator".into())?;
    let full_grid = op.mu_full(&f, Some(Commutator::subset(&fam, &[]))).map_err(err)?;
    ensure(full_grid == op.mu_full(&f, None).map_err(err)?, || "σ=∅ differs on the full grid".into())?;
    Ok(format!(
        "homogeneity max rel err {worst_h:.2e}, 50 subadditive pairs, constant symbols vanish, subsets bitwise"
    ))
}

fn maximal_orlicz() -> Outcome {
    let err = |e: rmu_core::Error| e.to_string();
    let g = probe_grid(65);
    let f = smooth(&g, 3);
    let id = orlicz_maximal(&f, &YoungFunction::identity()).map_err(err)?;
    ensure(id == hl_maximal(&f), || "identity Φ differs from M".into())?;

    let phis = [
        YoungFunction::llogl(1.0).map_err(err)?,
        YoungFunction::llogl(0.5).map_err(err)?,
        YoungFunction::expl(1.0).map_err(err)?,
        YoungFunction::expl(2.0).map_err(err)?,
    ];
    let small = probe_grid(17);
    let balls = ball_family(&small);
    for phi in &phis {
        for c in [0.3, 1.0, 17.0] {
            let cf = GridFunction::constant(small, c).map_err(err)?;
            for b in balls.iter().step_by(37) {
                let got = orlicz_average(&cf, b, phi).map_err(err)?;
                let want = c / phi.inverse_at_one();
                ensure(rel(got, want) <= 1e-6, || format!("{} constant average {got} vs {want}", phi.label()))?;
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_resid = 0.0f64;
    for i in 0..200 {
        let phi = &phis[i % phis.len()];
        let vals: Vec<f64> = (0..small.len()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let rf = GridFunction::new(small, vals).map_err(err)?;
        let b = balls[rng.gen_range(0..balls.len())];
        let lam = orlicz_average(&rf, &b, phi).map_err(err)?;
        let resid = (orlicz_modular(&rf, &b, phi, lam).map_err(err)? - 1.0).abs();
        ensure(resid < 1e-6, || format!("{} residual {resid:e}", phi.label()))?;
        worst_resid = worst_resid.max(resid);
    }

    let bound = 3f64.powi(2);
    let mut worst_weak = 0.0f64;
    for s in 0..20 {
        let h = smooth(&g, 200 + s);
        let m = hl_maximal(&h);
        let l1: f64 = h.values().iter().map(|v| v.abs()).sum::<f64>() * g.cell_volume();
        let mut levels: Vec<f64> = m.values().to_vec();
        levels.sort_by(|a, b| b.total_cmp(a));
        // Levels descending: sup_t t·|{Mf > t}| is attained as t ↑ levels[i].
        for (i, &t) in levels.iter().enumerate() {
            let q = t * (i + 1) as f64 * g.cell_volume() / l1;
            worst_weak = worst_weak.max(q);
        }
        ensure(worst_weak <= bound, || format!("weak (1,1) quotient {worst_weak} > 3^n"))?;
    }

    let llogl = YoungFunction::llogl(1.0).map_err(err)?;
    let mut intervals = Vec::new();
    for n in [33, 65] {
        let grid = probe_grid(n);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for s in 0..50 {
            let h = smooth(&grid, 300 + s);
            let a = orlicz_maximal(&h, &llogl).map_err(err)?;
            let b = iterated_maximal(&h, 2).map_err(err)?;
            for x in grid.eval_points() {
                if b.value(x) > 0.0 {
                    let q = a.value(x) / b.value(x);
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
            }
        }
        ensure(hi / lo < 10.0, || format!("N={n}: M_LlogL/M^2 in [{lo:.3}, {hi:.3}]"))?;
        intervals.push((lo, hi));
    }
    let (c, f2) = (intervals[0], intervals[1]);
    let drift = (f2.0 / c.0).max(c.0 / f2.0).max(f2.1 / c.1).max(c.1 / f2.1);
    ensure(drift < 2.0, || format!("ratio interval drifts by {drift:.3} under refinement"))?;
    Ok(format!(
        "residual max {worst_resid:.2e}, weak (1,1) quotient max {worst_weak:.3} <= 9, M_LlogL/M^2 in [{:.3}, {:.3}] -> [{:.3}, {:.3}]",
        c.0, c.1, f2.0, f2.1
    ))
}

fn weight_suite() -> Outcome {
    let err = |e: rmu_core::Error| e.to_string();
    let g = probe_grid(33);
    let unit = Weight::unit(g);
    for p in [1.5, 2.0, 3.0, 7.0] {
        let a = ap_constant(&unit, p).map_err(err)?;
        ensure((a - 1.0).abs() <= 1e-12, || format!("[1]_A_{p} = {a}"))?;
    }
    ensure((a1_constant(&unit) - 1.0).abs() <= 1e-12, || "[1]_A_1 != 1".into())?;
    ensure((ainf_constant(&unit) - 1.0).abs() <= 1e-12, || "[1]_A_inf != 1".into())?;

    // A_∞ runs the full family of inner maximal functions; keep it coarse.
    let coarse = probe_grid(17);
    let mut worst_scale = 0.0f64;
    for alpha in [-1.0, 0.5, 1.0] {
        let w = power_weight(&g, alpha);
        let wc = power_weight(&coarse, alpha);
        let base = [ap_constant(&w, 2.0).map_err(err)?, ap_constant(&w, 3.0).map_err(err)?, a1_constant(&w), ainf_constant(&wc)];
        for c in [3.0, 1e3, 0.01] {
            let s = w.scaled(c).map_err(err)?;
            let sc = wc.scaled(c).map_err(err)?;
            let got = [ap_constant(&s, 2.0).map_err(err)?, ap_constant(&s, 3.0).map_err(err)?, a1_constant(&s), ainf_constant(&sc)];
            for (a, b) in base.iter().zip(&got) {
                let e = rel(*a, *b);
                ensure(e <= 1e-12, || format!("power({alpha}) scaled by {c}: {a} vs {b}"))?;
                worst_scale = worst_scale.max(e);
            }
        }
    }

    let (mut a2, mut a1) = (Vec::new(), Vec::new());
    for n in [65, 129, 257] {
        let w = power_weight(&probe_grid(n), 1.0);
        a2.push(ap_constant(&w, 2.0).map_err(err)?);
        a1.push(a1_constant(&w));
    }
    let lo = a2.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = a2.iter().cloned().fold(0.0, f64::max);
    let variation = (hi - lo) / lo;
    ensure(variation < 0.25, || format!("A_2 of power(1) varies by {variation:.3}: {a2:?}"))?;
    ensure(a1[2] > 2.0 * a1[0], || format!("A_1 of power(1) does not diverge: {a1:?}"))?;
    Ok(format!(
        "unit constants exact, scale invariance max rel err {worst_scale:.1e}, A_2(power(1)) {a2:.4?} (variation {variation:.3}), A_1 {a1:.2?}"
    ))
}

fn strong_type() -> Outcome {
    let mut lines = Vec::new();
    for name in ["strong_odd_harmonic.json", "strong_log_rough.json"] {
        for r in run_config(name)? {
            lines.push(ratio_gate(&r)?);
        }
    }
    Ok(lines.join("; "))
}

fn weak_type() -> Outcome {
    let reports = run_config("weak_type.json")?;
    let r = &reports[0];
    let screens = checks_gate(r, "a1_screen")?;
    let scaling = checks_gate(r, "orlicz_event_scaling")?;
    Ok(format!("{}; {screens} A_1 screens, {scaling} exact event-scaling checks", ratio_gate(r)?))
}

fn pointwise() -> Outcome {
    let reports = run_config("pointwise.json")?;
    let r = &reports[0];
    let cfg = &r.metadata.config;
    ensure(cfg.delta == 0.25 && cfg.epsilon == 0.5, || "pointwise config must use δ=0.25, ε=0.5".into())?;
    let reductions = checks_gate(r, "single_term_reduction")?;
    Ok(format!("{}; {reductions} exact single-term reductions", ratio_gate(r)?))
}

const DETERMINISM_CONFIG: &str = r#"{
  "experiments": ["strong_type", "weak_type", "pointwise_lemmas", "fefferman_stein"],
  "grid": {"dimension": 2, "half_width": 1.0, "core_fraction": 0.5, "eval_fraction": 0.75},
  "refinement": [17, 33],
  "kernel": {"id": "log_rough", "param": 3},
  "weights": [{"kind": "unit"}, {"kind": "power", "alpha": -1.0}],
  "p_values": [1.0, 2.0],
  "delta": 0.25,
  "epsilon": 0.5,
  "symbol_families": [
    {"symbols": [{"kind": "log_abs"}], "r": [1.0]},
    {"symbols": [{"kind": "log_abs"}, {"kind": "sin_x1"}], "r": [1.0, 2.0]}
  ],
  "functions": [
    {"kind": "gaussian_bump", "width": 0.2},
    {"kind": "random_smooth", "stream": 3},
    {"kind": "ball_indicator", "radius": 0.3}
  ],
  "lambda_sweep": {"min": 0.01, "max": 100.0, "count": 9},
  "output": "set-by-the-test",
  "seed": 99
}"#;

/// Experiment name, JSON bytes and CSV bytes.
type Rendered = (String, Vec<u8>, Vec<u8>);

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    // Metadata embeds the config, so every run shares one output path.
    let out = dir.path().join("reports");
    let mut raw: serde_json::Value = serde_json::from_str(DETERMINISM_CONFIG).map_err(|e| e.to_string())?;
    raw["output"] = serde_json::Value::from(out.to_str().unwrap());
    let cfg_path = dir.path().join("config.json");
    std::fs::write(&cfg_path, raw.to_string()).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig::from_path(&cfg_path).map_err(|e| e.to_string())?;

    let render = |reports: &[RatioReport]| -> Result<Vec<Rendered>, String> {
        reports
            .iter()
            .map(|r| {
                Ok((
                    r.experiment.clone(),
                    to_json(r).map_err(|e| e.to_string())?,
                    to_csv(&r.rows).map_err(|e| e.to_string())?,
                ))
            })
            .collect()
    };
    let first = render(&rmu_harness::run(&cfg).map_err(|e| e.to_string())?)?;
    let second = render(&rmu_harness::run(&cfg).map_err(|e| e.to_string())?)?;
    ensure(first == second, || "in-process reruns differ".into())?;
    let order: Vec<&str> = first.iter().map(|r| r.0.as_str()).collect();
    let expected: Vec<&str> = cfg.experiments.iter().map(|e| e.name()).collect();
    ensure(order == expected, || format!("report order {order:?} is not config order"))?;

    for threads in ["1", "2", "5"] {
        if out.exists() {
            std::fs::remove_dir_all(&out).map_err(|e| e.to_string())?;
        }
        let status = Command::new(env!("CARGO_BIN_EXE_rmu"))
            .args(["run", cfg_path.to_str().unwrap()])
            .env("RMU_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            format!("rmu run failed: {}", String::from_utf8_lossy(&status.stderr))
        })?;
        for (name, json, csv) in &first {
            let j = std::fs::read(out.join(format!("{name}.json"))).map_err(|e| e.to_string())?;
            let c = std::fs::read(out.join(format!("{name}.csv"))).map_err(|e| e.to_string())?;
            ensure(&j == json && &c == csv, || {
                format!("RMU_THREADS={threads}: {name} report differs from the in-process run")
            })?;
        }
    }
    let rows: usize = first.iter().map(|r| r.2.iter().filter(|&&b| b == b'\n').count() - 1).sum();
    Ok(format!(
        "{} reports ({rows} rows) byte-identical across 2 in-process runs and RMU_THREADS=1,2,5",
        first.len()
    ))
}
