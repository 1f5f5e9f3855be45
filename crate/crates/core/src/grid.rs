//! Uniform box grids in `R^n`, sampled functions, Euclidean balls and the
//! midpoint-rule integrals everything else is built on.
//!
//! Points are enumerated lexicographically by multi-index with the last axis
//! varying fastest. Every grid point carries the cell volume `h^n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::{BoxClip, DiskStencil};
use crate::weight::Weight;

/// Upper bound on the number of grid points, to keep allocations sane.
const MAX_POINTS: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dimension: usize,
    half_width: f64,
    points_per_axis: usize,
    spacing: f64,
    core_fraction: f64,
    eval_fraction: f64,
}

impl Grid {
    /// Box `[-L, L]^n` sampled with `N` points per axis. `core_fraction` and
    /// `eval_fraction` select the centered sub-cubes that hold test-function
    /// supports and operator evaluation respectively.
    pub fn new(
        dimension: usize,
        half_width: f64,
        points_per_axis: usize,
        core_fraction: f64,
        eval_fraction: f64,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if points_per_axis < 3 || points_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be odd and at least 3, got {points_per_axis}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if !(core_fraction > 0.0 && core_fraction <= eval_fraction && eval_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < core_fraction <= eval_fraction <= 1, got {core_fraction} and {eval_fraction}"
            )));
        }
        let total = (0..dimension).try_fold(1usize, |acc, _| acc.checked_mul(points_per_axis));
        match total {
            Some(t) if t <= MAX_POINTS => {}
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "{points_per_axis}^{dimension} points exceeds the supported size"
                )))
            }
        }
        Ok(Grid {
            dimension,
            half_width,
            points_per_axis,
            spacing: 2.0 * half_width / (points_per_axis - 1) as f64,
            core_fraction,
            eval_fraction,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// `h = 2L / (N - 1)`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn core_fraction(&self) -> f64 {
        self.core_fraction
    }

    pub fn eval_fraction(&self) -> f64 {
        self.eval_fraction
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the origin along each axis.
    pub fn half_index(&self) -> usize {
        (self.points_per_axis - 1) / 2
    }

    fn window_half(&self, fraction: f64) -> usize {
        ((fraction * self.half_index() as f64) + 1e-9).floor() as usize
    }

    /// Half side (in cells) of the core window.
    pub fn core_half_index(&self) -> usize {
        self.window_half(self.core_fraction)
    }

    /// Half side (in cells) of the evaluation window.
    pub fn eval_half_index(&self) -> usize {
        self.window_half(self.eval_fraction)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dimension as i32)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dimension];
        self.write_multi_index(flat, &mut out);
        out
    }

    pub(crate) fn write_multi_index(&self, mut flat: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = flat % self.points_per_axis;
            flat /= self.points_per_axis;
        }
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    /// Physical coordinates of a grid point.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let half = self.half_index() as f64;
        self.multi_index(flat)
            .into_iter()
            .map(|i| (i as f64 - half) * self.spacing)
            .collect()
    }

    /// Flat index of the origin.
    pub fn origin(&self) -> usize {
        self.flat_index(&vec![self.half_index(); self.dimension])
    }

    fn in_window(&self, flat: usize, half_side: usize) -> bool {
        let c = self.half_index();
        let mut rest = flat;
        for _ in 0..self.dimension {
            let i = rest % self.points_per_axis;
            rest /= self.points_per_axis;
            if i.abs_diff(c) > half_side {
                return false;
            }
        }
        true
    }

    pub fn in_core(&self, flat: usize) -> bool {
        self.in_window(flat, self.core_half_index())
    }

    pub fn in_eval(&self, flat: usize) -> bool {
        self.in_window(flat, self.eval_half_index())
    }

    /// Evaluation-window points in lexicographic order.
    pub fn eval_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.in_eval(i)).collect()
    }

    pub fn core_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.in_core(i)).collect()
    }

    pub(crate) fn full_clip(&self) -> BoxClip {
        BoxClip::new(0, self.points_per_axis - 1)
    }

    pub(crate) fn eval_clip(&self) -> BoxClip {
        let c = self.half_index();
        let e = self.eval_half_index();
        BoxClip::new(c - e, c + e)
    }

    /// Largest admissible ball radius in cells: the box diameter `2L√n / h`.
    pub fn max_radius_cells(&self) -> usize {
        let side = (self.points_per_axis - 1) as u64;
        let bound = side * side * self.dimension as u64;
        let mut k = (bound as f64).sqrt() as u64;
        while k * k > bound {
            k -= 1;
        }
        while (k + 1) * (k + 1) <= bound {
            k += 1;
        }
        k as usize
    }

    /// Radius ladder in cells: `1, 2, 3, 4, 6, 8, 12, 16, ...` up to the box
    /// diameter.
    pub fn radii_ladder(&self) -> Vec<usize> {
        let max = self.max_radius_cells();
        let mut out = vec![1];
        let mut p = 2usize;
        loop {
            if p > max {
                break;
            }
            out.push(p);
            let mid = p + p / 2;
            if mid <= max && p >= 2 && !out.contains(&mid) {
                out.push(mid);
            }
            p *= 2;
        }
        out.retain(|&k| k <= max);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Squared distance between two grid points, in cells squared.
    pub fn sq_index_distance(&self, a: usize, b: usize) -> u64 {
        let mut ra = a;
        let mut rb = b;
        let mut acc = 0u64;
        for _ in 0..self.dimension {
            let ia = ra % self.points_per_axis;
            let ib = rb % self.points_per_axis;
            ra /= self.points_per_axis;
            rb /= self.points_per_axis;
            let d = ia.abs_diff(ib) as u64;
            acc += d * d;
        }
        acc
    }
}

/// Real samples on every point of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(GridFunction { grid, values })
    }

    /// Caller guarantees finiteness and length.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        GridFunction { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction::from_raw(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        GridFunction::new(grid, vec![c; grid.len()])
    }

    /// Samples `f` at the physical coordinates of every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        GridFunction::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, flat: usize) -> f64 {
        self.values[flat]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pointwise map; the closure must keep values finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.ensure_same_grid(other)?;
        Ok(GridFunction::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.ensure_same_grid(other)?;
        Ok(GridFunction::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    pub fn ensure_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Whether the function vanishes outside the core window.
    pub fn is_test_function(&self) -> bool {
        self.first_leak().is_none()
    }

    pub(crate) fn first_leak(&self) -> Option<usize> {
        self.values
            .iter()
            .enumerate()
            .find(|&(i, &v)| v != 0.0 && !self.grid.in_core(i))
            .map(|(i, _)| i)
    }

    pub fn ensure_test_function(&self) -> Result<()> {
        match self.first_leak() {
            Some(i) => Err(Error::NotTestFunction(i)),
            None => Ok(()),
        }
    }

    /// Smallest index box (per axis, inclusive) containing every nonzero
    /// sample, or `None` for the zero function.
    pub fn support_box(&self) -> Option<BoxBounds> {
        let n = self.grid.dimension;
        let mut lo = vec![usize::MAX; n];
        let mut hi = vec![0usize; n];
        let mut idx = vec![0usize; n];
        let mut any = false;
        for (i, &v) in self.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            any = true;
            self.grid.write_multi_index(i, &mut idx);
            for a in 0..n {
                lo[a] = lo[a].min(idx[a]);
                hi[a] = hi[a].max(idx[a]);
            }
        }
        any.then_some(BoxBounds { lo, hi })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Inclusive per-axis index bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxBounds {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

/// Closed Euclidean ball centered at a grid point with radius a whole
/// number of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ball {
    pub center: usize,
    pub radius_cells: usize,
}

impl Ball {
    pub fn new(grid: &Grid, center: usize, radius_cells: usize) -> Result<Self> {
        if center >= grid.len() {
            return Err(Error::InvalidParameter(format!(
                "ball center {center} outside the grid"
            )));
        }
        if radius_cells == 0 || radius_cells > grid.max_radius_cells() {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be between 1 and {} cells, got {radius_cells}",
                grid.max_radius_cells()
            )));
        }
        Ok(Ball {
            center,
            radius_cells,
        })
    }

    pub fn radius(&self, grid: &Grid) -> f64 {
        self.radius_cells as f64 * grid.spacing()
    }

    pub fn contains(&self, grid: &Grid, point: usize) -> bool {
        let k = self.radius_cells as u64;
        grid.sq_index_distance(self.center, point) <= k * k
    }

    /// Grid points inside the ball (clipped to the box), in lexicographic
    /// order.
    pub fn points(&self, grid: &Grid) -> Vec<usize> {
        let stencil = DiskStencil::new(grid.dimension(), self.radius_cells);
        let center = grid.multi_index(self.center);
        let np = grid.points_per_axis();
        let mut out = Vec::new();
        stencil.for_each_row(&center, &grid.full_clip(), |row, lo, hi| {
            out.extend((lo..=hi).map(|c| row * np + c));
        });
        out
    }
}

/// Finite surrogate for "all balls": every evaluation-window point crossed
/// with every radius of the ladder. Centers vary slowest.
pub fn ball_family(grid: &Grid) -> Vec<Ball> {
    let radii = grid.radii_ladder();
    grid.eval_points()
        .into_iter()
        .flat_map(|c| {
            radii.iter().map(move |&k| Ball {
                center: c,
                radius_cells: k,
            })
        })
        .collect()
}

/// Mean of `f` over the grid points of `ball`.
pub fn average(f: &GridFunction, ball: &Ball) -> Result<f64> {
    let grid = f.grid();
    if ball.center >= grid.len() {
        return Err(Error::EmptyBall);
    }
    let stencil = DiskStencil::new(grid.dimension(), ball.radius_cells);
    let center = grid.multi_index(ball.center);
    let np = grid.points_per_axis();
    let values = f.values();
    let mut sum = 0.0;
    let mut count = 0usize;
    stencil.for_each_row(&center, &grid.full_clip(), |row, lo, hi| {
        let base = row * np;
        for &v in &values[base + lo..=base + hi] {
            sum += v;
        }
        count += hi - lo + 1;
    });
    if count == 0 {
        return Err(Error::EmptyBall);
    }
    Ok(sum / count as f64)
}

/// `Σ_{x ∈ eval window} |f(x)|^p ω(x) h^n`, the p-th power of the weighted
/// norm.
pub fn weighted_lp_power(f: &GridFunction, p: f64, weight: &Weight) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be positive, got {p}")));
    }
    f.ensure_same_grid(weight.base())?;
    let grid = f.grid();
    let w = weight.values();
    let sum: f64 = grid
        .eval_points()
        .into_iter()
        .map(|i| f.values[i].abs().powf(p) * w[i])
        .sum();
    Ok(sum * grid.cell_volume())
}

/// `(Σ_{x ∈ eval window} |f(x)|^p ω(x) h^n)^{1/p}`.
pub fn weighted_lp_norm(f: &GridFunction, p: f64, weight: &Weight) -> Result<f64> {
    Ok(weighted_lp_power(f, p, weight)?.powf(1.0 / p))
}

/// `Σ_{x ∈ S} ω(x) h^n`.
pub fn weighted_measure(weight: &Weight, points: &[usize]) -> f64 {
    let w = weight.values();
    let sum: f64 = points.iter().map(|&i| w[i]).sum();
    sum * weight.grid().cell_volume()
}
