//! Row decompositions of discrete balls and the tables that make ball
//! statistics cheap: per-row prefix sums for sums/averages, per-row sparse
//! tables for minima/maxima, and the "sup over family balls containing x"
//! filter shared by every maximal operator.

use rayon::prelude::*;

use crate::grid::{Grid, GridFunction};

/// Inclusive index range `[lo, hi]` applied to every axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct BoxClip {
    pub lo: usize,
    pub hi: usize,
}

impl BoxClip {
    pub fn new(lo: usize, hi: usize) -> Self {
        BoxClip { lo, hi }
    }

    pub fn side(&self) -> usize {
        self.hi - self.lo + 1
    }
}

#[derive(Debug, Clone)]
struct StencilRow {
    /// Offsets along the leading `n - 1` axes.
    offsets: Vec<isize>,
    /// Half length of the chord along the last axis.
    half: usize,
}

/// A ball of integer radius `k` (in cells) written as chords along the last
/// axis: offsets `d` with `|d|² ≤ k²` on the leading axes and half length
/// `⌊√(k² − |d|²)⌋`.
#[derive(Debug, Clone)]
pub(crate) struct DiskStencil {
    rows: Vec<StencilRow>,
}

impl DiskStencil {
    pub fn new(dimension: usize, radius: usize) -> Self {
        let k2 = (radius * radius) as i64;
        let mut rows = Vec::new();
        let mut offsets = vec![0isize; dimension.saturating_sub(1)];
        fn rec(
            axis: usize,
            used: i64,
            k: isize,
            k2: i64,
            offsets: &mut Vec<isize>,
            rows: &mut Vec<StencilRow>,
        ) {
            if axis == offsets.len() {
                rows.push(StencilRow {
                    offsets: offsets.clone(),
                    half: isqrt((k2 - used) as u64) as usize,
                });
                return;
            }
            for d in -k..=k {
                let u = used + (d * d) as i64;
                if u <= k2 {
                    offsets[axis] = d;
                    rec(axis + 1, u, k, k2, offsets, rows);
                }
            }
        }
        rec(0, 0, radius as isize, k2, &mut offsets, &mut rows);
        DiskStencil { rows }
    }

    /// Calls `f(row, lo, hi)` for each chord of the ball centered at
    /// `center` (a multi-index) intersected with the cube `clip`. `row` is
    /// the lexicographic row number inside the clip box and `lo..=hi` are
    /// column indices relative to `clip.lo`.
    #[inline]
    pub fn for_each_row(
        &self,
        center: &[usize],
        clip: &BoxClip,
        mut f: impl FnMut(usize, usize, usize),
    ) {
        let n = center.len();
        let last = center[n - 1] as isize;
        let (clo, chi) = (clip.lo as isize, clip.hi as isize);
        let side = clip.side();
        'rows: for row in &self.rows {
            let mut id = 0usize;
            for (j, &d) in row.offsets.iter().enumerate() {
                let c = center[j] as isize + d;
                if c < clo || c > chi {
                    continue 'rows;
                }
                id = id * side + (c - clo) as usize;
            }
            let w = row.half as isize;
            let lo = (last - w).max(clo);
            let hi = (last + w).min(chi);
            if lo > hi {
                continue;
            }
            f(id, (lo - clo) as usize, (hi - clo) as usize);
        }
    }
}

pub(crate) fn isqrt(v: u64) -> u64 {
    let mut r = (v as f64).sqrt() as u64;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

/// Prefix sums along the last axis of a full-grid array.
pub(crate) struct RowPrefix {
    row_len: usize,
    prefix: Vec<f64>,
}

impl RowPrefix {
    pub fn new(values: &[f64], row_len: usize) -> Self {
        let rows = values.len() / row_len;
        let mut prefix = Vec::with_capacity(rows * (row_len + 1));
        for r in 0..rows {
            let mut acc = 0.0;
            prefix.push(0.0);
            for &v in &values[r * row_len..(r + 1) * row_len] {
                acc += v;
                prefix.push(acc);
            }
        }
        RowPrefix { row_len, prefix }
    }

    #[inline]
    pub fn row_sum(&self, row: usize, lo: usize, hi: usize) -> f64 {
        let base = row * (self.row_len + 1);
        self.prefix[base + hi + 1] - self.prefix[base + lo]
    }
}

/// Sparse tables of running minima or maxima along rows of a box array.
pub(crate) struct RowExtrema {
    row_len: usize,
    levels: Vec<Vec<f64>>,
    take_max: bool,
}

impl RowExtrema {
    pub fn new(values: &[f64], row_len: usize, take_max: bool) -> Self {
        let pick = |a: f64, b: f64| if take_max { a.max(b) } else { a.min(b) };
        let mut levels = vec![values.to_vec()];
        let mut span = 1usize;
        while 2 * span <= row_len {
            let prev = levels.last().unwrap();
            let mut next = prev.clone();
            for (r, chunk) in next.chunks_mut(row_len).enumerate() {
                let base = r * row_len;
                for c in 0..=(row_len - 2 * span) {
                    chunk[c] = pick(prev[base + c], prev[base + c + span]);
                }
            }
            levels.push(next);
            span *= 2;
        }
        RowExtrema {
            row_len,
            levels,
            take_max,
        }
    }

    #[inline]
    pub fn query(&self, row: usize, lo: usize, hi: usize) -> f64 {
        let len = hi - lo + 1;
        let level = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let table = &self.levels[level];
        let base = row * self.row_len;
        let a = table[base + lo];
        let b = table[base + hi + 1 - (1 << level)];
        if self.take_max {
            a.max(b)
        } else {
            a.min(b)
        }
    }
}

/// The finite ball family of a grid together with its stencils. Per-ball
/// tables are indexed `[radius index][center index]`, centers in the
/// lexicographic order of the evaluation window.
pub(crate) struct Family {
    pub grid: Grid,
    pub radii: Vec<usize>,
    pub stencils: Vec<DiskStencil>,
    pub centers: Vec<usize>,
    center_coords: Vec<usize>,
    eval: BoxClip,
}

impl Family {
    pub fn new(grid: &Grid) -> Self {
        let radii = grid.radii_ladder();
        let stencils = radii
            .iter()
            .map(|&k| DiskStencil::new(grid.dimension(), k))
            .collect();
        let centers = grid.eval_points();
        let n = grid.dimension();
        let mut center_coords = vec![0usize; centers.len() * n];
        for (i, &c) in centers.iter().enumerate() {
            grid.write_multi_index(c, &mut center_coords[i * n..(i + 1) * n]);
        }
        Family {
            grid: *grid,
            radii,
            stencils,
            centers,
            center_coords,
            eval: grid.eval_clip(),
        }
    }

    pub fn coords(&self, center: usize) -> &[usize] {
        let n = self.grid.dimension();
        &self.center_coords[center * n..(center + 1) * n]
    }

    /// Evaluates `f(radius index, center index)` for every family ball.
    pub fn tables<F>(&self, f: F) -> Vec<Vec<f64>>
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        (0..self.radii.len())
            .map(|k| {
                (0..self.centers.len())
                    .into_par_iter()
                    .map(|c| f(k, c))
                    .collect()
            })
            .collect()
    }

    /// Sum and point count of a full-grid array over a family ball.
    #[inline]
    pub fn ball_sum(&self, prefix: &RowPrefix, k: usize, c: usize) -> (f64, usize) {
        let mut sum = 0.0;
        let mut count = 0usize;
        self.stencils[k].for_each_row(self.coords(c), &self.grid.full_clip(), |row, lo, hi| {
            sum += prefix.row_sum(row, lo, hi);
            count += hi - lo + 1;
        });
        (sum, count)
    }

    /// Average over a family ball from prefix sums.
    #[inline]
    pub fn ball_average(&self, prefix: &RowPrefix, k: usize, c: usize) -> f64 {
        let (sum, count) = self.ball_sum(prefix, k, c);
        sum / count as f64
    }

    /// Minimum or maximum over a family ball.
    #[inline]
    pub fn ball_extreme(&self, ext: &RowExtrema, k: usize, c: usize) -> f64 {
        let mut acc = if ext.take_max {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
        self.stencils[k].for_each_row(self.coords(c), &self.grid.full_clip(), |row, lo, hi| {
            let v = ext.query(row, lo, hi);
            acc = if ext.take_max { acc.max(v) } else { acc.min(v) };
        });
        acc
    }

    /// Visits the values of a full-grid array inside a family ball in
    /// lexicographic order.
    #[inline]
    pub fn for_each_value(&self, values: &[f64], k: usize, c: usize, mut f: impl FnMut(f64)) {
        let np = self.grid.points_per_axis();
        self.stencils[k].for_each_row(self.coords(c), &self.grid.full_clip(), |row, lo, hi| {
            let base = row * np;
            for &v in &values[base + lo..=base + hi] {
                f(v);
            }
        });
    }

    /// Number of grid points in a family ball.
    pub fn ball_count(&self, k: usize, c: usize) -> usize {
        let mut count = 0;
        self.stencils[k].for_each_row(self.coords(c), &self.grid.full_clip(), |_, lo, hi| {
            count += hi - lo + 1;
        });
        count
    }

    pub fn max_over(tables: &[Vec<f64>]) -> f64 {
        tables
            .iter()
            .flat_map(|t| t.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// For each target point `x`, the maximum of `tables[k][c]` over family
    /// balls `B(c, r_k)` that contain `x`. Points no family ball reaches get
    /// `0`.
    pub fn sup_containing(&self, tables: &[Vec<f64>], targets: &[usize]) -> Vec<f64> {
        let side = self.eval.side();
        let extrema: Vec<RowExtrema> = tables
            .iter()
            .map(|t| RowExtrema::new(t, side, true))
            .collect();
        let n = self.grid.dimension();
        targets
            .par_iter()
            .map_init(
                || vec![0usize; n],
                |coords, &x| {
                    self.grid.write_multi_index(x, coords);
                    let mut best = f64::NEG_INFINITY;
                    for (stencil, ext) in self.stencils.iter().zip(&extrema) {
                        stencil.for_each_row(coords, &self.eval, |row, lo, hi| {
                            best = best.max(ext.query(row, lo, hi));
                        });
                    }
                    if best == f64::NEG_INFINITY {
                        0.0
                    } else {
                        best
                    }
                },
            )
            .collect()
    }

    /// [`Family::sup_containing`] evaluated at every grid point.
    pub fn sup_everywhere(&self, tables: &[Vec<f64>]) -> GridFunction {
        let targets: Vec<usize> = (0..self.grid.len()).collect();
        GridFunction::from_raw(self.grid, self.sup_containing(tables, &targets))
    }
}
