//! Experiment configuration: JSON schema, validation and the concrete
//! objects (grids, kernel, functions, weights, symbols) it describes.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rmu_core::grid::{Grid, GridFunction};
use rmu_core::kernel::{builtin_kernel, Kernel};
use rmu_core::weight::{power_weight, Weight};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    StrongType,
    WeakType,
    PointwiseLemmas,
    FeffermanStein,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::StrongType => "strong_type",
            Experiment::WeakType => "weak_type",
            Experiment::PointwiseLemmas => "pointwise_lemmas",
            Experiment::FeffermanStein => "fefferman_stein",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dimension: usize,
    pub half_width: f64,
    pub core_fraction: f64,
    pub eval_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    /// Catalog id, or `table` for a CSV file given by `path`.
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Unit {},
    Power { alpha: f64 },
}

impl WeightSpec {
    pub fn label(&self) -> String {
        match self {
            WeightSpec::Unit {} => "unit".into(),
            WeightSpec::Power { alpha } => format!("power({alpha})"),
        }
    }

    pub fn build(&self, grid: &Grid) -> Weight {
        match self {
            WeightSpec::Unit {} => Weight::unit(*grid),
            WeightSpec::Power { alpha } => power_weight(grid, *alpha),
        }
    }

    /// Analytic `A_p` membership of `|x|^α`: `−n < α < n(p − 1)`.
    pub fn in_ap(&self, dimension: usize, p: f64) -> bool {
        let n = dimension as f64;
        match self {
            WeightSpec::Unit {} => p > 1.0,
            WeightSpec::Power { alpha } => p > 1.0 && -n < *alpha && *alpha < n * (p - 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    /// `ln max(|x|, h)`.
    LogAbs {},
    /// `sin x_1`.
    SinX1 {},
    Constant { value: f64 },
}

impl SymbolSpec {
    pub fn label(&self) -> String {
        match self {
            SymbolSpec::LogAbs {} => "log_abs".into(),
            SymbolSpec::SinX1 {} => "sin_x1".into(),
            SymbolSpec::Constant { value } => format!("constant({value})"),
        }
    }

    pub fn build(&self, grid: &Grid) -> Result<GridFunction, HarnessError> {
        let h = grid.spacing();
        let f = match self {
            SymbolSpec::LogAbs {} => GridFunction::from_fn(*grid, |x| {
                x.iter().map(|v| v * v).sum::<f64>().sqrt().max(h).ln()
            }),
            SymbolSpec::SinX1 {} => GridFunction::from_fn(*grid, |x| x[0].sin()),
            SymbolSpec::Constant { value } => GridFunction::constant(*grid, *value),
        };
        Ok(f?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolFamilySpec {
    pub symbols: Vec<SymbolSpec>,
    /// Exponents `r_j ≥ 1`, one per symbol.
    pub r: Vec<f64>,
}

impl SymbolFamilySpec {
    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .symbols
            .iter()
            .zip(&self.r)
            .map(|(s, r)| format!("{}:r={r}", s.label()))
            .collect();
        format!("[{}]", parts.join(","))
    }

    /// `Σ 1/r_j`, the exponent of the matching `L(log L)` function.
    pub fn llogl_exponent(&self) -> f64 {
        self.r.iter().map(|r| 1.0 / r).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `exp(−|x|²/(2w²))` inside the core window.
    GaussianBump { width: f64 },
    /// Indicator of the closed ball `|x| ≤ radius`.
    BallIndicator { radius: f64 },
    /// Bump at `+shift·e_1` minus bump at `−shift·e_1`.
    Dipole { width: f64, shift: f64 },
    /// Cosine series with 8 modes per axis and seeded coefficients in
    /// `[−1, 1]`, tapered by `Π cos²(π x_i / 2c)` on the core window.
    RandomSmooth {
        #[serde(default)]
        stream: u64,
    },
    Zero {},
    /// Accepted by the parser so validation can reject it with a reason.
    Constant { value: f64 },
}

/// Cosine modes per axis for random smooth functions.
pub const RANDOM_MODES: usize = 8;

impl FunctionSpec {
    pub fn label(&self) -> String {
        match self {
            FunctionSpec::GaussianBump { width } => format!("gaussian_bump({width})"),
            FunctionSpec::BallIndicator { radius } => format!("ball_indicator({radius})"),
            FunctionSpec::Dipole { width, shift } => format!("dipole({width},{shift})"),
            FunctionSpec::RandomSmooth { stream } => format!("random_smooth({stream})"),
            FunctionSpec::Zero {} => "zero".into(),
            FunctionSpec::Constant { value } => format!("constant({value})"),
        }
    }

    /// Samples the function on `grid`; zero outside the core window.
    pub fn build(&self, grid: &Grid, seed: u64) -> Result<GridFunction, HarnessError> {
        let c = grid.core_half_index() as f64 * grid.spacing();
        let inside = |x: &[f64]| x.iter().all(|v| v.abs() <= c + 1e-12);
        let gauss = |x: &[f64], shift: f64, w: f64| {
            let r2: f64 = x
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let d = if i == 0 { v - shift } else { *v };
                    d * d
                })
                .sum();
            (-r2 / (2.0 * w * w)).exp()
        };
        let f = match self {
            FunctionSpec::GaussianBump { width } => GridFunction::from_fn(*grid, |x| {
                if inside(x) {
                    gauss(x, 0.0, *width)
                } else {
                    0.0
                }
            }),
            FunctionSpec::BallIndicator { radius } => GridFunction::from_fn(*grid, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if inside(x) && r2 <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }),
            FunctionSpec::Dipole { width, shift } => GridFunction::from_fn(*grid, |x| {
                if inside(x) {
                    gauss(x, *shift, *width) - gauss(x, -*shift, *width)
                } else {
                    0.0
                }
            }),
            FunctionSpec::RandomSmooth { stream } => {
                let n = grid.dimension();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(*stream);
                let modes = RANDOM_MODES.pow(n as u32);
                let coeffs: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let scale = 1.0 / (modes as f64).sqrt();
                GridFunction::from_fn(*grid, |x| {
                    if !inside(x) {
                        return 0.0;
                    }
                    let taper: f64 = x.iter().map(|v| (PI * v / (2.0 * c)).cos().powi(2)).product();
                    let mut sum = 0.0;
                    for (m, a) in coeffs.iter().enumerate() {
                        let mut rest = m;
                        let mut term = *a;
                        for v in x {
                            let k = (rest % RANDOM_MODES) as f64;
                            rest /= RANDOM_MODES;
                            term *= (PI * k * (v + c) / (2.0 * c)).cos();
                        }
                        sum += term;
                    }
                    taper * sum * scale
                })
            }
            FunctionSpec::Zero {} => Ok(GridFunction::zeros(*grid)),
            FunctionSpec::Constant { .. } => {
                return Err(HarnessError::Validation(
                    "constant test functions are not supported: they are not compactly supported, and they make the sharp maximal function vanish".into(),
                ))
            }
        };
        Ok(f?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSweep {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "default_true")]
    pub log_spaced: bool,
}

fn default_true() -> bool {
    true
}

impl LambdaSweep {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last;
                if self.log_spaced {
                    (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + t * (self.max - self.min)
                }
            })
            .collect()
    }
}

fn default_threshold() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiments: Vec<Experiment>,
    pub grid: GridSpec,
    /// Points per axis at each refinement level, increasing.
    pub refinement: Vec<usize>,
    pub kernel: KernelSpec,
    pub weights: Vec<WeightSpec>,
    pub p_values: Vec<f64>,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub symbol_families: Vec<SymbolFamilySpec>,
    pub functions: Vec<FunctionSpec>,
    pub lambda_sweep: LambdaSweep,
    #[serde(default = "default_threshold")]
    pub stability_threshold: f64,
    /// Physical spacing of outer-ball centers for the `A_∞` constant; the
    /// full family when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ainf_outer_spacing: Option<f64>,
    pub output: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
            HarnessError::Validation(format!("{}: {e}", path.display()))
        })?;
        Ok(cfg)
    }

    pub fn grid_at(&self, points_per_axis: usize) -> Result<Grid, HarnessError> {
        Ok(Grid::new(
            self.grid.dimension,
            self.grid.half_width,
            points_per_axis,
            self.grid.core_fraction,
            self.grid.eval_fraction,
        )?)
    }

    pub fn build_kernel(&self) -> Result<Kernel, HarnessError> {
        let spec = &self.kernel;
        if spec.id == "table" {
            let path = spec.path.as_ref().ok_or_else(|| {
                HarnessError::Validation("kernel `table` needs a `path`".into())
            })?;
            if self.grid.dimension != 2 {
                return Err(HarnessError::Validation("tabulated kernels need dimension 2".into()));
            }
            return Ok(Kernel::from_table_file(path)?);
        }
        if spec.path.is_some() {
            return Err(HarnessError::Validation(format!(
                "kernel `{}` takes no `path`",
                spec.id
            )));
        }
        Ok(builtin_kernel(&spec.id, self.grid.dimension, spec.param)?)
    }

    /// Checks every invariant that does not need operator evaluations.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Validation(msg));
        if self.experiments.is_empty() {
            return fail("no experiments selected".into());
        }
        if self.refinement.is_empty() {
            return fail("refinement ladder is empty".into());
        }
        if self.refinement.windows(2).any(|w| w[1] <= w[0]) {
            return fail("refinement ladder must be strictly increasing".into());
        }
        for &n in &self.refinement {
            self.grid_at(n)?;
        }
        self.build_kernel()?;
        if self.weights.is_empty() {
            return fail("no weights".into());
        }
        for w in &self.weights {
            if let WeightSpec::Power { alpha } = w {
                if !alpha.is_finite() {
                    return fail(format!("power weight exponent {alpha} is not finite"));
                }
            }
        }
        if self.p_values.is_empty() || self.p_values.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return fail(format!("p values must be positive and finite: {:?}", self.p_values));
        }
        if !(0.0 < self.delta && self.delta < self.epsilon && self.epsilon < 1.0) {
            return fail(format!(
                "need 0 < delta < epsilon < 1, got delta = {} and epsilon = {}",
                self.delta, self.epsilon
            ));
        }
        let needs_symbols = self.experiments.iter().any(|e| {
            matches!(
                e,
                Experiment::StrongType | Experiment::WeakType | Experiment::PointwiseLemmas
            )
        });
        if needs_symbols && self.symbol_families.is_empty() {
            return fail("commutator experiments need at least one symbol family".into());
        }
        for fam in &self.symbol_families {
            if fam.symbols.is_empty() || fam.symbols.len() != fam.r.len() {
                return fail(format!(
                    "symbol family {} needs one exponent per symbol",
                    fam.label()
                ));
            }
            if let Some(r) = fam.r.iter().find(|r| !(**r >= 1.0 && r.is_finite())) {
                return fail(format!("symbol exponent {r} < 1 in {}", fam.label()));
            }
            for s in &fam.symbols {
                if let SymbolSpec::Constant { value } = s {
                    if !value.is_finite() {
                        return fail("constant symbol must be finite".into());
                    }
                }
            }
        }
        if self.functions.is_empty() {
            return fail("no test functions".into());
        }
        for f in &self.functions {
            let ok = match f {
                FunctionSpec::GaussianBump { width } => *width > 0.0 && width.is_finite(),
                FunctionSpec::BallIndicator { radius } => *radius > 0.0 && radius.is_finite(),
                FunctionSpec::Dipole { width, shift } => {
                    *width > 0.0 && width.is_finite() && shift.is_finite()
                }
                FunctionSpec::RandomSmooth { .. } | FunctionSpec::Zero {} => true,
                FunctionSpec::Constant { .. } => false,
            };
            if !ok {
                return fail(format!("invalid test function {}", f.label()));
            }
        }
        let sweep = &self.lambda_sweep;
        if sweep.count == 0 {
            return fail("lambda sweep is empty".into());
        }
        if !(sweep.min > 0.0 && sweep.max >= sweep.min && sweep.max.is_finite()) {
            return fail(format!(
                "lambda sweep needs 0 < min <= max, got [{}, {}]",
                sweep.min, sweep.max
            ));
        }
        if !(self.stability_threshold > 1.0 && self.stability_threshold.is_finite()) {
            return fail(format!(
                "stability threshold must exceed 1, got {}",
                self.stability_threshold
            ));
        }
        if let Some(s) = self.ainf_outer_spacing {
            if !(s > 0.0 && s.is_finite()) {
                return fail(format!("ainf_outer_spacing must be positive, got {s}"));
            }
        }
        // Balls are not truncated silently: they must fit in the core window.
        let grid = self.grid_at(self.refinement[0])?;
        let core = grid.core_half_index() as f64 * grid.spacing();
        for f in &self.functions {
            if let FunctionSpec::BallIndicator { radius } = f {
                if *radius > core {
                    return fail(format!(
                        "{} does not fit in the core window [-{core}, {core}]^n",
                        f.label()
                    ));
                }
            }
            let g = f.build(&grid, self.seed)?;
            if !g.is_test_function() {
                return fail(format!(
                    "{} is not supported in the core window",
                    f.label()
                ));
            }
        }
        Ok(())
    }
}
