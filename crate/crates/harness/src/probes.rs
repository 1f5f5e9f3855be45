//! The four inequality probes. Each walks levels, functions, weights and
//! parameters in config order and emits one row per comparison.

use rmu_core::grid::{weighted_lp_power, weighted_measure, GridFunction};
use rmu_core::kernel::{check_cancellation, dyadic_scales, fit_continuity, DEFAULT_QUAD_NODES};
use rmu_core::orlicz::{orlicz_maximal, YoungFunction};
use rmu_core::weight::{Weight, AINF_DEFINITION};

use crate::config::{Experiment, ExperimentConfig};
use crate::level::Level;
use crate::report::{
    summarize, Check, KernelMeta, Metadata, RatioReport, Row, SymbolNorms, WeightConstants,
};
use crate::HarnessError;

/// Directions sampled by the kernel continuity fit.
pub const CONTINUITY_SAMPLES: usize = 4096;

/// Points where `M f` falls below this are excluded from pointwise ratios.
pub const POINTWISE_FLOOR: f64 = 1e-12;

/// Factor for the `M_Φ` joint scaling check; a power of two keeps it exact.
pub const SCALING_FACTOR: f64 = 8.0;

const AINF_NOTE: &str = "the alternative inf_p [w]_{A_p} is finite for the same weights but is not used; outer balls may be subsampled on a lattice of spacing ainf_outer_spacing";

/// Results computed once per run and shared by every report.
pub struct Shared {
    pub kernel: KernelMeta,
}

impl Shared {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let kernel = cfg.build_kernel()?;
        let continuity = if kernel.dimension() >= 2 {
            Some(fit_continuity(&kernel, &dyadic_scales(4, 20), CONTINUITY_SAMPLES)?)
        } else {
            None
        };
        Ok(Shared {
            kernel: KernelMeta {
                label: kernel.label().to_string(),
                sup_bound: kernel.sup_bound(),
                cancellation_residual: check_cancellation(&kernel, DEFAULT_QUAD_NODES)?,
                negative_example: kernel.is_negative_example(),
                continuity,
            },
        })
    }
}

struct Output {
    rows: Vec<Row>,
    checks: Vec<Check>,
    skipped: Vec<String>,
    uses_a1: bool,
    uses_ainf: bool,
    uses_symbols: bool,
}

impl Output {
    fn new() -> Self {
        Output {
            rows: Vec::new(),
            checks: Vec::new(),
            skipped: Vec::new(),
            uses_a1: false,
            uses_ainf: false,
            uses_symbols: false,
        }
    }

    fn skip(&mut self, note: String) {
        if !self.skipped.contains(&note) {
            self.skipped.push(note);
        }
    }
}

pub fn run_experiment(
    experiment: Experiment,
    cfg: &ExperimentConfig,
    levels: &[Level],
    shared: &Shared,
) -> Result<RatioReport, HarnessError> {
    let out = match experiment {
        Experiment::StrongType => strong_type(cfg, levels)?,
        Experiment::WeakType => weak_type(cfg, levels)?,
        Experiment::PointwiseLemmas => pointwise_lemmas(cfg, levels)?,
        Experiment::FeffermanStein => fefferman_stein(cfg, levels)?,
    };

    let mut weight_constants = Vec::new();
    if out.uses_a1 || out.uses_ainf {
        for level in levels {
            for (w, label) in level.weight_labels.iter().enumerate() {
                weight_constants.push(WeightConstants {
                    weight: label.clone(),
                    refinement: level.points_per_axis(),
                    a1: out.uses_a1.then(|| level.a1(w)),
                    ainf: out.uses_ainf.then(|| level.ainf(w)),
                });
            }
        }
    }
    let mut symbol_norms = Vec::new();
    if out.uses_symbols {
        for level in levels {
            for (fam, label) in level.families.iter().zip(&level.family_labels) {
                symbol_norms.push(SymbolNorms {
                    family: label.clone(),
                    refinement: level.points_per_axis(),
                    osc_norms: fam.osc_norms().to_vec(),
                    norm: fam.norm(),
                });
            }
        }
    }

    Ok(RatioReport {
        experiment: experiment.name().to_string(),
        summary: summarize(
            &out.rows,
            &cfg.refinement,
            cfg.stability_threshold,
            out.checks,
            out.skipped,
        ),
        rows: out.rows,
        metadata: Metadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            kernel: shared.kernel.clone(),
            ainf_definition: AINF_DEFINITION.to_string(),
            ainf_note: AINF_NOTE.to_string(),
            weight_constants,
            symbol_norms,
            config: cfg.clone(),
        },
    })
}

/// Distinct `L(log L)^s` exponents of the configured families, in order;
/// `[1]` when there are none.
fn llogl_exponents(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for fam in &cfg.symbol_families {
        let s = fam.llogl_exponent();
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        out.push(1.0);
    }
    out
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Points of the evaluation window where `g > λ`.
fn level_set(level: &Level, g: &GridFunction, lambda: f64) -> Vec<usize> {
    level
        .grid
        .eval_points()
        .into_iter()
        .filter(|&i| g.value(i) > lambda)
        .collect()
}

/// `Σ Φ(c|f|/λ) ω hⁿ` over the whole grid.
fn modular(f: &GridFunction, c: f64, lambda: f64, phi: &YoungFunction, w: &Weight) -> f64 {
    let sum: f64 = f
        .values()
        .iter()
        .zip(w.values())
        .filter(|(v, _)| **v != 0.0)
        .map(|(v, wv)| phi.eval(c * v.abs() / lambda) * wv)
        .sum();
    sum * f.grid().cell_volume()
}

fn strong_type(cfg: &ExperimentConfig, levels: &[Level]) -> Result<Output, HarnessError> {
    let mut out = Output::new();
    out.uses_ainf = true;
    out.uses_symbols = true;
    let n = cfg.grid.dimension;
    for level in levels {
        let big_n = level.points_per_axis();
        for (fi, f) in level.functions.iter().enumerate() {
            let fl = &level.function_labels[fi];
            let mu_f = level.mu(fi)?;
            let mf = level.maximal(fi)?;
            for (wi, w) in level.weights.iter().enumerate() {
                let wl = &level.weight_labels[wi];
                let ainf = level.ainf(wi);
                for &p in &cfg.p_values {
                    let pl = format!("p={}", fmt_num(p));
                    out.rows.push(Row::new(
                        "strong_type/mu_vs_maximal",
                        big_n,
                        fl,
                        wl,
                        pl.clone(),
                        None,
                        weighted_lp_power(&mu_f, p, w)?,
                        ainf.powf(p) * weighted_lp_power(&mf, p, w)?,
                    ));
                    for (si, fam) in level.families.iter().enumerate() {
                        let case = format!("{pl};b={}", level.family_labels[si]);
                        let mub = level.mu_commutator(fi, si)?;
                        let lhs = weighted_lp_power(&mub, p, w)?;
                        let norm_p = fam.norm().powf(p);
                        let mphi = level.orlicz_maximal(fi, fam.llogl_exponent())?;
                        out.rows.push(Row::new(
                            "strong_type/commutator_vs_orlicz_maximal",
                            big_n,
                            fl,
                            wl,
                            case.clone(),
                            None,
                            lhs,
                            norm_p * weighted_lp_power(&mphi, p, w)?,
                        ));
                        if cfg.weights[wi].in_ap(n, p) {
                            out.rows.push(Row::new(
                                "strong_type/commutator_vs_lp",
                                big_n,
                                fl,
                                wl,
                                case,
                                None,
                                lhs,
                                norm_p * weighted_lp_power(f, p, w)?,
                            ));
                        } else if p <= 1.0 {
                            out.skip(format!("strong_type/commutator_vs_lp: p={} <= 1", fmt_num(p)));
                        } else {
                            out.skip(format!(
                                "strong_type/commutator_vs_lp: {wl} is not in A_p for p={}",
                                fmt_num(p)
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn weak_type(cfg: &ExperimentConfig, levels: &[Level]) -> Result<Output, HarnessError> {
    let mut out = Output::new();
    out.uses_a1 = true;
    out.uses_symbols = true;
    let lambdas = cfg.lambda_sweep.values();

    // A_1 screen: the constant must not grow by more than the stability
    // threshold between refinements.
    let mut screened = Vec::new();
    for (wi, spec) in cfg.weights.iter().enumerate() {
        let values: Vec<f64> = levels.iter().map(|l| l.a1(wi)).collect();
        let stable = values.iter().all(|v| v.is_finite())
            && values.windows(2).all(|p| p[1] <= cfg.stability_threshold * p[0]);
        out.checks.push(Check {
            name: format!("a1_screen/{}", spec.label()),
            passed: stable,
            detail: format!("a1 per refinement: {values:?}"),
        });
        if stable {
            screened.push(wi);
        } else {
            out.skip(format!("weak_type: {} fails the A_1 screen", spec.label()));
        }
    }

    let exponents = llogl_exponents(cfg);
    for level in levels {
        let big_n = level.points_per_axis();
        for (fi, f) in level.functions.iter().enumerate() {
            let fl = &level.function_labels[fi];
            for &wi in &screened {
                let w = &level.weights[wi];
                let wl = &level.weight_labels[wi];
                for (si, fam) in level.families.iter().enumerate() {
                    let case = format!("b={}", level.family_labels[si]);
                    let phi = YoungFunction::llogl(fam.llogl_exponent())?;
                    let norm = fam.norm();
                    let mub = level.mu_commutator(fi, si)?;
                    for &lambda in &lambdas {
                        out.rows.push(Row::new(
                            "weak_type/commutator_level_sets",
                            big_n,
                            fl,
                            wl,
                            case.clone(),
                            Some(lambda),
                            weighted_measure(w, &level_set(level, &mub, lambda)),
                            modular(f, norm, lambda, &phi, w),
                        ));
                    }
                }
                for &s in &exponents {
                    let case = format!("phi=llogl({})", fmt_num(s));
                    let phi = YoungFunction::llogl(s)?;
                    let mphi = level.orlicz_maximal(fi, s)?;
                    for &lambda in &lambdas {
                        out.rows.push(Row::new(
                            "weak_type/orlicz_maximal_level_sets",
                            big_n,
                            fl,
                            wl,
                            case.clone(),
                            Some(lambda),
                            weighted_measure(w, &level_set(level, &mphi, lambda)),
                            modular(f, 1.0, lambda, &phi, w),
                        ));
                    }
                }
            }
            // {M_Φ(cf) > cλ} = {M_Φ f > λ} for every λ, bit for bit.
            for &s in &exponents {
                let phi = YoungFunction::llogl(s)?;
                let mphi = level.orlicz_maximal(fi, s)?;
                let scaled = orlicz_maximal(&f.scale(SCALING_FACTOR), &phi)?;
                let exact = lambdas.iter().all(|&lambda| {
                    level_set(level, &mphi, lambda) == level_set(level, &scaled, SCALING_FACTOR * lambda)
                });
                out.checks.push(Check {
                    name: format!("orlicz_event_scaling/N={big_n}/{fl}/llogl({})", fmt_num(s)),
                    passed: exact,
                    detail: format!("factor {SCALING_FACTOR}, {} lambdas", lambdas.len()),
                });
            }
        }
    }
    Ok(out)
}

/// Max of `num/den` over the evaluation window, skipping `den < floor`;
/// returns the attaining `(num, den)`, or `(0, 0)` if every point is skipped.
fn pointwise_max(level: &Level, num: &GridFunction, den: &GridFunction, floor: f64) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    let mut best_ratio = f64::NEG_INFINITY;
    for i in level.grid.eval_points() {
        let d = den.value(i);
        let v = num.value(i);
        let r = if d < floor {
            if v > 0.0 && d == 0.0 {
                f64::INFINITY
            } else {
                continue;
            }
        } else {
            v / d
        };
        if r > best_ratio {
            best_ratio = r;
            best = (v, d);
        }
    }
    best
}

fn pointwise_lemmas(cfg: &ExperimentConfig, levels: &[Level]) -> Result<Output, HarnessError> {
    let mut out = Output::new();
    out.uses_symbols = true;
    let (delta, eps) = (cfg.delta, cfg.epsilon);
    for level in levels {
        let big_n = level.points_per_axis();
        for fi in 0..level.functions.len() {
            let fl = &level.function_labels[fi];
            let mu_f = level.mu_full(fi)?;
            let sharp = level.sharp_delta_of(&format!("muF|{fi}"), &mu_f, delta)?;
            let mf = level.maximal(fi)?;
            let (lhs, rhs) = pointwise_max(level, &sharp, &mf, POINTWISE_FLOOR);
            out.rows.push(Row::new(
                "pointwise_lemmas/sharp_mu_vs_maximal",
                big_n,
                fl,
                "-",
                format!("delta={}", fmt_num(delta)),
                None,
                lhs,
                rhs,
            ));

            for (si, fam) in level.families.iter().enumerate() {
                let mub = level.mu_full_commutator(fi, si, None)?;
                let sharp_b = level.sharp_delta_of(&format!("mubF|{fi}|{si}"), &mub, delta)?;
                let mphi = level.orlicz_maximal(fi, fam.llogl_exponent())?;
                let norm = fam.norm();
                let mut bound: Vec<f64> = mphi.values().iter().map(|v| norm * v).collect();
                let mut sigma_sum = vec![0.0f64; level.grid.len()];
                for j in 1..=fam.m() {
                    for sigma in fam.subsets(j) {
                        let rest = fam.complement(&sigma);
                        let mu_rest = level.mu_full_commutator(fi, si, Some(&rest))?;
                        let key = format!("mubF|{fi}|{si}|{rest:?}");
                        let m_eps = level.m_delta_of(&key, &mu_rest, eps)?;
                        let c = fam.subset_norm(&sigma);
                        for (acc, v) in sigma_sum.iter_mut().zip(m_eps.values()) {
                            *acc += c * v;
                        }
                    }
                }
                if fam.m() == 1 {
                    // One subset σ = {1}, σ' = ∅: the sum is ‖b_1‖ M_ε(μ_Ω f).
                    let direct = level.m_delta_of(&format!("muF|{fi}"), &mu_f, eps)?;
                    let c = fam.osc_norms()[0];
                    let exact = sigma_sum
                        .iter()
                        .zip(direct.values())
                        .all(|(a, b)| a.to_bits() == (c * b).to_bits());
                    out.checks.push(Check {
                        name: format!(
                            "single_term_reduction/N={big_n}/{fl}/{}",
                            level.family_labels[si]
                        ),
                        passed: exact,
                        detail: "sigma sum equals |b_1| M_eps(mu f) bitwise".into(),
                    });
                }
                for (b, s) in bound.iter_mut().zip(&sigma_sum) {
                    *b += s;
                }
                let bound = GridFunction::new(level.grid, bound)?;
                let (lhs, rhs) = pointwise_max(level, &sharp_b, &bound, POINTWISE_FLOOR);
                out.rows.push(Row::new(
                    "pointwise_lemmas/sharp_commutator_vs_expansion",
                    big_n,
                    fl,
                    "-",
                    format!(
                        "delta={};epsilon={};b={}",
                        fmt_num(delta),
                        fmt_num(eps),
                        level.family_labels[si]
                    ),
                    None,
                    lhs,
                    rhs,
                ));
            }
        }
    }
    Ok(out)
}

/// `sup_λ φ(λ) ω({g > λ})` with `φ(λ) = 1/Φ(1/λ)`, and the attaining `λ`.
fn weighted_distribution_sup(
    level: &Level,
    g: &GridFunction,
    w: &Weight,
    phi: &YoungFunction,
    lambdas: &[f64],
) -> (f64, Option<f64>) {
    let mut best = (0.0, None);
    for &lambda in lambdas {
        let v = weighted_measure(w, &level_set(level, g, lambda)) / phi.eval(1.0 / lambda);
        if v > best.0 {
            best = (v, Some(lambda));
        }
    }
    best
}

fn fefferman_stein(cfg: &ExperimentConfig, levels: &[Level]) -> Result<Output, HarnessError> {
    let mut out = Output::new();
    out.uses_ainf = true;
    let delta = cfg.delta;
    let lambdas = cfg.lambda_sweep.values();
    let exponents = llogl_exponents(cfg);
    for level in levels {
        let big_n = level.points_per_axis();
        for fi in 0..level.functions.len() {
            let fl = &level.function_labels[fi];
            let md = level.m_delta(fi, delta)?;
            let sd = level.sharp_delta(fi, delta)?;
            for (wi, w) in level.weights.iter().enumerate() {
                let wl = &level.weight_labels[wi];
                let ainf = level.ainf(wi);
                for &p in &cfg.p_values {
                    out.rows.push(Row::new(
                        "fefferman_stein/integral",
                        big_n,
                        fl,
                        wl,
                        format!("p={};delta={}", fmt_num(p), fmt_num(delta)),
                        None,
                        weighted_lp_power(&md, p, w)?,
                        ainf.powf(p) * weighted_lp_power(&sd, p, w)?,
                    ));
                }
                for &s in &exponents {
                    let phi = YoungFunction::llogl(s)?;
                    let (lhs, at_l) = weighted_distribution_sup(level, &md, w, &phi, &lambdas);
                    let (rhs, at_r) = weighted_distribution_sup(level, &sd, w, &phi, &lambdas);
                    out.rows.push(
                        Row::new(
                            "fefferman_stein/distribution",
                            big_n,
                            fl,
                            wl,
                            format!("phi=llogl({});delta={}", fmt_num(s), fmt_num(delta)),
                            None,
                            lhs,
                            ainf * rhs,
                        )
                        .with_detail(format!("argmax lambda: lhs {at_l:?}, rhs {at_r:?}")),
                    );
                }
            }
        }
    }
    Ok(out)
}
