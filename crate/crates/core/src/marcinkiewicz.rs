//! The Marcinkiewicz integral `μ_Ω`, the truncated averages `F_{Ω,t}`, and
//! multilinear commutators `μ_{Ω,b⃗_σ}`.
//!
//! For fixed `x` the discrete `F_{Ω,t} f(x)` is a step function of `t`
//! that jumps at the distinct distances `d_1 < … < d_K` from `x` to the
//! support of `f`. With cumulative sums `S_k`,
//!
//! `μ(x)² = Σ_k S_k² (d_k^{−2} − d_{k+1}^{−2}) / 2`, `d_{K+1} = ∞`,
//!
//! which integrates the step function against `dt/t³` exactly. The self
//! cell `y = x` is excluded.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::kernel::Kernel;
use crate::orlicz::SymbolFamily;

/// Symbols `b⃗` and the active subset `σ` (0-based). `subset = None` means
/// every symbol; an empty subset gives the plain operator.
#[derive(Debug, Clone, Copy)]
pub struct Commutator<'a> {
    pub symbols: &'a SymbolFamily,
    pub subset: Option<&'a [usize]>,
}

impl<'a> Commutator<'a> {
    pub fn full(symbols: &'a SymbolFamily) -> Self {
        Commutator {
            symbols,
            subset: None,
        }
    }

    pub fn subset(symbols: &'a SymbolFamily, subset: &'a [usize]) -> Self {
        Commutator {
            symbols,
            subset: Some(subset),
        }
    }

    fn active(&self) -> Result<Vec<&'a [f64]>> {
        let m = self.symbols.m();
        let indices: Vec<usize> = match self.subset {
            None => (0..m).collect(),
            Some(s) => s.to_vec(),
        };
        for (i, &j) in indices.iter().enumerate() {
            if j >= m || indices[..i].contains(&j) {
                return Err(Error::InvalidParameter(format!(
                    "subset {indices:?} is not a set of indices below {m}"
                )));
            }
        }
        Ok(indices
            .into_iter()
            .map(|j| self.symbols.symbols()[j].values())
            .collect())
    }
}

fn active_symbols<'a>(
    f: &GridFunction,
    commutator: Option<Commutator<'a>>,
) -> Result<Vec<&'a [f64]>> {
    match commutator {
        None => Ok(Vec::new()),
        Some(c) => {
            if c.symbols.symbols()[0].grid() != f.grid() {
                return Err(Error::GridMismatch);
            }
            c.active()
        }
    }
}

/// Sorted distinct distances and aggregated weights seen from one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile {
    /// Strictly increasing physical distances.
    pub distances: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DistanceProfile {
    /// Builds a profile from `(squared distance in cells, summand)` pairs.
    /// Ties are merged before accumulation; the sort is stable so tie order
    /// follows input order. Mirrored summands share a tie group, so the
    /// compensated merge cancels them to `O(ε²)` instead of leaving noise
    /// where `F_t` vanishes by symmetry.
    fn from_terms(mut terms: Vec<(u64, f64)>, spacing: f64) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut distances = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut group = Neumaier::default();
        let mut last = u64::MAX;
        for (d2, w) in terms {
            if d2 != last {
                if last != u64::MAX {
                    weights.push(group.value());
                }
                distances.push(spacing * (d2 as f64).sqrt());
                group = Neumaier::default();
                last = d2;
            }
            group.add(w);
        }
        if last != u64::MAX {
            weights.push(group.value());
        }
        DistanceProfile { distances, weights }
    }

    /// `(∫_0^∞ |F_t|² dt/t³)^{1/2}` for the step function of this profile.
    pub fn h_norm(&self) -> f64 {
        let k = self.distances.len();
        let mut running = Neumaier::default();
        let mut acc = 0.0;
        for i in 0..k {
            running.add(self.weights[i]);
            let s = running.value();
            let inv_lo = 1.0 / (self.distances[i] * self.distances[i]);
            let inv_hi = if i + 1 < k {
                1.0 / (self.distances[i + 1] * self.distances[i + 1])
            } else {
                0.0
            };
            acc += s * s * (inv_lo - inv_hi);
        }
        (0.5 * acc).sqrt()
    }

    /// `F_t` as a step function: sum of weights at distances `≤ t`.
    pub fn cumulative_at(&self, t: f64) -> f64 {
        let k = self.distances.partition_point(|&d| d <= t);
        self.weights[..k].iter().sum()
    }
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, w: f64) {
        let t = self.sum + w;
        if self.sum.abs() >= w.abs() {
            self.comp += (self.sum - t) + w;
        } else {
            self.comp += (w - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `Ω(d/|d|) / (h|d|)^{n−1}` for every integer offset `d` in
/// `[−(N−1), N−1]^n`.
struct KernelFactors {
    side: usize,
    reach: usize,
    values: Vec<f64>,
}

impl KernelFactors {
    fn new(grid: &Grid, kernel: &Kernel) -> Self {
        let n = grid.dimension();
        let reach = grid.points_per_axis() - 1;
        let side = 2 * reach + 1;
        let total = side.pow(n as u32);
        let h = grid.spacing();
        let values = (0..total)
            .into_par_iter()
            .map_init(
                || (vec![0.0f64; n], vec![0.0f64; n]),
                |(offset, unit), idx| {
                    let mut rest = idx;
                    let mut d2 = 0i64;
                    for slot in offset.iter_mut().rev() {
                        let v = (rest % side) as i64 - reach as i64;
                        rest /= side;
                        *slot = v as f64;
                        d2 += v * v;
                    }
                    if d2 == 0 {
                        return 0.0;
                    }
                    let norm = (d2 as f64).sqrt();
                    for (u, o) in unit.iter_mut().zip(offset.iter()) {
                        *u = o / norm;
                    }
                    kernel.eval_direction(unit) / (h * norm).powi(n as i32 - 1)
                },
            )
            .collect();
        KernelFactors {
            side,
            reach,
            values,
        }
    }

    #[inline]
    fn at(&self, x: &[usize], y: &[usize]) -> f64 {
        let mut idx = 0usize;
        for (a, b) in x.iter().zip(y) {
            idx = idx * self.side + (*a + self.reach - *b);
        }
        self.values[idx]
    }
}

/// `μ_Ω` and its commutators for one grid and kernel, with the kernel
/// factors tabulated once.
pub struct MuOperator {
    grid: Grid,
    factors: KernelFactors,
}

impl MuOperator {
    pub fn new(grid: &Grid, kernel: &Kernel) -> Result<Self> {
        if kernel.dimension() != grid.dimension() {
            return Err(Error::InvalidParameter(format!(
                "kernel dimension {} does not match grid dimension {}",
                kernel.dimension(),
                grid.dimension()
            )));
        }
        Ok(MuOperator {
            grid: *grid,
            factors: KernelFactors::new(grid, kernel),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn support(&self, f: &GridFunction) -> Vec<(usize, Vec<usize>)> {
        f.values()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| (i, self.grid.multi_index(i)))
            .collect()
    }

    fn profile_with(
        &self,
        f: &GridFunction,
        support: &[(usize, Vec<usize>)],
        symbols: &[&[f64]],
        x: usize,
        xi: &[usize],
    ) -> DistanceProfile {
        let hn = self.grid.cell_volume();
        let fv = f.values();
        let mut terms = Vec::with_capacity(support.len());
        for (y, yi) in support {
            if *y == x {
                continue;
            }
            let mut w = self.factors.at(xi, yi) * fv[*y] * hn;
            for b in symbols {
                w *= b[x] - b[*y];
            }
            let d2: u64 = xi
                .iter()
                .zip(yi)
                .map(|(a, b)| {
                    let d = a.abs_diff(*b) as u64;
                    d * d
                })
                .sum();
            terms.push((d2, w));
        }
        DistanceProfile::from_terms(terms, self.grid.spacing())
    }

    /// Distance profile of `f` seen from `x`.
    pub fn profile(
        &self,
        f: &GridFunction,
        x: usize,
        commutator: Option<Commutator<'_>>,
    ) -> Result<DistanceProfile> {
        self.check(f)?;
        if x >= self.grid.len() {
            return Err(Error::InvalidParameter(format!("point {x} outside the grid")));
        }
        let symbols = active_symbols(f, commutator)?;
        let support = self.support(f);
        Ok(self.profile_with(f, &support, &symbols, x, &self.grid.multi_index(x)))
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn evaluate(
        &self,
        f: &GridFunction,
        commutator: Option<Commutator<'_>>,
        points: &[usize],
    ) -> Result<GridFunction> {
        self.check(f)?;
        f.ensure_test_function()?;
        let symbols = active_symbols(f, commutator)?;
        let support = self.support(f);
        let mut out = vec![0.0; self.grid.len()];
        if support.is_empty() {
            return GridFunction::new(self.grid, out);
        }
        let n = self.grid.dimension();
        let values: Vec<f64> = points
            .par_iter()
            .map_init(
                || vec![0usize; n],
                |xi, &x| {
                    self.grid.write_multi_index(x, xi);
                    self.profile_with(f, &support, &symbols, x, xi).h_norm()
                },
            )
            .collect();
        for (&x, v) in points.iter().zip(values) {
            out[x] = v;
        }
        GridFunction::new(self.grid, out)
    }

    /// `μ_{Ω,b⃗_σ} f` on the evaluation window, zero elsewhere. `f` must be
    /// a test function.
    pub fn mu(&self, f: &GridFunction, commutator: Option<Commutator<'_>>) -> Result<GridFunction> {
        self.evaluate(f, commutator, &self.grid.eval_points())
    }

    /// Same as [`MuOperator::mu`] at every grid point.
    pub fn mu_full(
        &self,
        f: &GridFunction,
        commutator: Option<Commutator<'_>>,
    ) -> Result<GridFunction> {
        let all: Vec<usize> = (0..self.grid.len()).collect();
        self.evaluate(f, commutator, &all)
    }
}

/// `μ_{Ω,b⃗_σ} f` on the evaluation window (see [`MuOperator::mu`]).
pub fn mu(
    f: &GridFunction,
    kernel: &Kernel,
    commutator: Option<Commutator<'_>>,
) -> Result<GridFunction> {
    MuOperator::new(f.grid(), kernel)?.mu(f, commutator)
}

/// `μ_{Ω,b⃗_σ} f` at every grid point.
pub fn mu_full(
    f: &GridFunction,
    kernel: &Kernel,
    commutator: Option<Commutator<'_>>,
) -> Result<GridFunction> {
    MuOperator::new(f.grid(), kernel)?.mu_full(f, commutator)
}

/// Summands `(|x − y|, Ω(x − y)|x − y|^{1−n} Π(b(x) − b(y)) f(y) h^n)` by
/// direct kernel evaluation on physical coordinates.
fn direct_terms(
    f: &GridFunction,
    kernel: &Kernel,
    x: usize,
    commutator: Option<Commutator<'_>>,
) -> Result<Vec<(f64, f64)>> {
    let grid = f.grid();
    if kernel.dimension() != grid.dimension() {
        return Err(Error::InvalidParameter("kernel and grid dimensions differ".into()));
    }
    if x >= grid.len() {
        return Err(Error::InvalidParameter(format!("point {x} outside the grid")));
    }
    let symbols = active_symbols(f, commutator)?;
    let n = grid.dimension();
    let hn = grid.cell_volume();
    let cx = grid.coords(x);
    let mut out = Vec::new();
    for (y, &v) in f.values().iter().enumerate() {
        if v == 0.0 || y == x {
            continue;
        }
        let diff: Vec<f64> = cx.iter().zip(grid.coords(y)).map(|(a, b)| a - b).collect();
        let dist = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
        let mut w = kernel.eval(&diff) / dist.powi(n as i32 - 1) * v * hn;
        for b in &symbols {
            w *= b[x] - b[y];
        }
        out.push((dist, w));
    }
    Ok(out)
}

/// `F_{Ω,b⃗_σ,t} f(x)`: the sum over support cells `y ≠ x` with
/// `|x − y| ≤ t`.
pub fn f_omega_t(
    f: &GridFunction,
    kernel: &Kernel,
    x: usize,
    t: f64,
    commutator: Option<Commutator<'_>>,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let terms = direct_terms(f, kernel, x, commutator)?;
    Ok(terms.iter().filter(|(d, _)| *d <= t).map(|(_, w)| w).sum())
}

/// Slow check of `μ(x)`: log-spaced trapezoid for `∫ |F_t|² dt/t³` over
/// `[d_1/2, 2·diam]` plus the exact tail `S_K²/(2 t_max²)`.
pub fn mu_quadrature_oracle(
    f: &GridFunction,
    kernel: &Kernel,
    x: usize,
    t_nodes: usize,
    commutator: Option<Commutator<'_>>,
) -> Result<f64> {
    if t_nodes < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 t nodes, got {t_nodes}"
        )));
    }
    let mut terms = direct_terms(f, kernel, x, commutator)?;
    if terms.is_empty() {
        return Ok(0.0);
    }
    terms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let dists: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let mut cumulative = Vec::with_capacity(terms.len());
    let mut s = 0.0;
    for (_, w) in &terms {
        s += w;
        cumulative.push(s);
    }
    let total = s;
    let grid = f.grid();
    let diameter = 2.0 * grid.half_width() * (grid.dimension() as f64).sqrt();
    let t_min = 0.5 * dists[0];
    let t_max = 2.0 * diameter;
    let (u0, u1) = (t_min.ln(), t_max.ln());
    let du = (u1 - u0) / (t_nodes - 1) as f64;
    let integrand = |u: f64| {
        let t = u.exp();
        let k = dists.partition_point(|&d| d <= t);
        let ft = if k == 0 { 0.0 } else { cumulative[k - 1] };
        // dt/t³ = e^{−2u} du.
        ft * ft * (-2.0 * u).exp()
    };
    let mut acc = 0.0;
    for i in 0..t_nodes {
        let w = if i == 0 || i == t_nodes - 1 { 0.5 } else { 1.0 };
        acc += w * integrand(u0 + i as f64 * du);
    }
    let tail = total * total / (2.0 * t_max * t_max);
    Ok((acc * du + tail).sqrt())
}
