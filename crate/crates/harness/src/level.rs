//! One refinement level: the grid, sampled inputs and memoized operator
//! outputs shared by every probe.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rmu_core::grid::{Grid, GridFunction};
use rmu_core::marcinkiewicz::{Commutator, MuOperator};
use rmu_core::maximal::{hl_maximal, m_delta, sharp_delta};
use rmu_core::orlicz::{orlicz_maximal, osc_norm, SymbolFamily, YoungFunction};
use rmu_core::weight::{a1_constant, ainf_constant_with, AinfOptions, Weight};
use rmu_core::Kernel;

use crate::config::{Experiment, ExperimentConfig};
use crate::HarnessError;

type Memo = Mutex<HashMap<String, Arc<GridFunction>>>;

pub struct Level {
    pub grid: Grid,
    pub op: MuOperator,
    pub functions: Vec<GridFunction>,
    pub function_labels: Vec<String>,
    pub weights: Vec<Weight>,
    pub weight_labels: Vec<String>,
    pub families: Vec<SymbolFamily>,
    pub family_labels: Vec<String>,
    ainf_stride: usize,
    memo: Memo,
    a1: Vec<OnceLock<f64>>,
    ainf: Vec<OnceLock<f64>>,
}

pub fn build_levels(cfg: &ExperimentConfig) -> Result<Vec<Level>, HarnessError> {
    let kernel = cfg.build_kernel()?;
    cfg.refinement
        .iter()
        .map(|&n| Level::new(cfg, &kernel, n))
        .collect()
}

impl Level {
    pub fn new(cfg: &ExperimentConfig, kernel: &Kernel, points_per_axis: usize) -> Result<Self, HarnessError> {
        let grid = cfg.grid_at(points_per_axis)?;
        let functions = cfg
            .functions
            .iter()
            .map(|f| {
                let g = f.build(&grid, cfg.seed)?;
                g.ensure_test_function()?;
                Ok(g)
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let weights: Vec<Weight> = cfg.weights.iter().map(|w| w.build(&grid)).collect();

        // Norms depend only on (symbol, r); families often share symbols.
        // Experiments that never use them leave them uncomputed.
        let needs_norms = cfg.experiments.iter().any(|e| *e != Experiment::FeffermanStein);
        let mut norm_cache: HashMap<String, f64> = HashMap::new();
        let mut families = Vec::new();
        for spec in &cfg.symbol_families {
            let mut symbols = Vec::new();
            let mut norms = Vec::new();
            if !needs_norms {
                let symbols = spec.symbols.iter().map(|s| s.build(&grid)).collect::<Result<_, _>>()?;
                families.push(SymbolFamily::new(symbols, spec.r.clone())?);
                continue;
            }
            for (s, &r) in spec.symbols.iter().zip(&spec.r) {
                let b = s.build(&grid)?;
                let key = format!("{}|{r}", s.label());
                let norm = match norm_cache.get(&key) {
                    Some(&v) => v,
                    None => {
                        let v = osc_norm(&b, r)?;
                        norm_cache.insert(key, v);
                        v
                    }
                };
                symbols.push(b);
                norms.push(norm);
            }
            families.push(SymbolFamily::with_norms(symbols, spec.r.clone(), norms)?);
        }

        let ainf_stride = match cfg.ainf_outer_spacing {
            Some(s) => ((s / grid.spacing()).round() as usize).max(1),
            None => 1,
        };
        Ok(Level {
            op: MuOperator::new(&grid, kernel)?,
            grid,
            function_labels: cfg.functions.iter().map(|f| f.label()).collect(),
            functions,
            weight_labels: cfg.weights.iter().map(|w| w.label()).collect(),
            a1: weights.iter().map(|_| OnceLock::new()).collect(),
            ainf: weights.iter().map(|_| OnceLock::new()).collect(),
            weights,
            family_labels: cfg.symbol_families.iter().map(|f| f.label()).collect(),
            families,
            ainf_stride,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn points_per_axis(&self) -> usize {
        self.grid.points_per_axis()
    }

    fn memo(
        &self,
        key: String,
        compute: impl FnOnce() -> Result<GridFunction, HarnessError>,
    ) -> Result<Arc<GridFunction>, HarnessError> {
        if let Some(v) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(Arc::clone(v));
        }
        // Computed outside the lock: operators parallelize internally.
        let value = Arc::new(compute()?);
        self.memo
            .lock()
            .expect("memo lock")
            .entry(key)
            .or_insert_with(|| Arc::clone(&value));
        Ok(value)
    }

    /// `M f`.
    pub fn maximal(&self, f: usize) -> Result<Arc<GridFunction>, HarnessError> {
        self.memo(format!("M|{f}"), || Ok(hl_maximal(&self.functions[f])))
    }

    /// `M_δ f`.
    pub fn m_delta(&self, f: usize, delta: f64) -> Result<Arc<GridFunction>, HarnessError> {
        self.memo(format!("Md|{f}|{delta}"), || Ok(m_delta(&self.functions[f], delta)?))
    }

    /// `M^♯_δ f`.
    pub fn sharp_delta(&self, f: usize, delta: f64) -> Result<Arc<GridFunction>, HarnessError> {
        self.memo(format!("Sd|{f}|{delta}"), || Ok(sharp_delta(&self.functions[f], delta)?))
    }

    /// `M_{L(log L)^s} f`.
    pub fn orlicz_maximal(&self, f: usize, exponent: f64) -> Result<Arc<GridFunction>, HarnessError> {
        self.memo(format!("Mphi|{f}|{exponent}"), || {
            let phi = YoungFunction::llogl(exponent)?;
            Ok(orlicz_maximal(&self.functions[f], &phi)?)
        })
    }

    /// `μ_Ω f` on the evaluation window.
    pub fn mu(&self, f: usize) -> Result<Arc<GridFunction>, HarnessError> {
        self.memo(format!("mu|{f}"), || Ok(self.op.mu(&self.functions[f], None)?))
    }

    /// `μ_{Ω,b⃗} f` on the evaluation window for family `s`.
    pub fn mu_commutator(&self, f: usize, s: usize) -> Result<Arc<GridFunction>, HarnessError> {
        self.memo(format!("mub|{f}|{s}"), || {
            Ok(self
                .op
                .mu(&self.functions[f], Some(Commutator::full(&self.families[s])))?)
        })
    }

    /// `μ_Ω f` at every grid point.
    pub fn mu_full(&self, f: usize) -> Result<Arc<GridFunction>, HarnessError> {
        self.memo(format!("muF|{f}"), || Ok(self.op.mu_full(&self.functions[f], None)?))
    }

    /// `μ_{Ω,b⃗_σ} f` at every grid point; `subset = None` is the full family.
    pub fn mu_full_commutator(
        &self,
        f: usize,
        s: usize,
        subset: Option<&[usize]>,
    ) -> Result<Arc<GridFunction>, HarnessError> {
        self.memo(format!("mubF|{f}|{s}|{subset:?}"), || {
            let comm = Commutator {
                symbols: &self.families[s],
                subset,
            };
            Ok(self.op.mu_full(&self.functions[f], Some(comm))?)
        })
    }

    /// `M_ε` of a memoized function, keyed by the caller.
    pub fn m_delta_of(
        &self,
        key: &str,
        g: &GridFunction,
        eps: f64,
    ) -> Result<Arc<GridFunction>, HarnessError> {
        self.memo(format!("Md[{key}]|{eps}"), || Ok(m_delta(g, eps)?))
    }

    /// `M^♯_δ` of a memoized function, keyed by the caller.
    pub fn sharp_delta_of(
        &self,
        key: &str,
        g: &GridFunction,
        delta: f64,
    ) -> Result<Arc<GridFunction>, HarnessError> {
        self.memo(format!("Sd[{key}]|{delta}"), || Ok(sharp_delta(g, delta)?))
    }

    pub fn a1(&self, w: usize) -> f64 {
        *self.a1[w].get_or_init(|| a1_constant(&self.weights[w]))
    }

    pub fn ainf(&self, w: usize) -> f64 {
        *self.ainf[w].get_or_init(|| {
            let options = AinfOptions {
                outer_center_stride: self.ainf_stride,
            };
            ainf_constant_with(&self.weights[w], &options)
        })
    }
}
