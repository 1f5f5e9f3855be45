//! Hardy–Littlewood maximal operator `M` and its variants `M_δ`, `M^♯`,
//! `M^♯_δ` and `M^k`.
//!
//! Every operator is uncentered over the finite ball family: the value at
//! `x` is the largest statistic over family balls containing `x`. Outputs
//! are defined at every grid point, so operators compose.

use crate::error::{Error, Result};
use crate::grid::{Ball, GridFunction};
use crate::stencil::{Family, RowExtrema, RowPrefix};

/// `M f(x) = max_{B ∋ x} avg_B |f|`.
pub fn hl_maximal(f: &GridFunction) -> GridFunction {
    let grid = *f.grid();
    let fam = Family::new(&grid);
    let abs = f.abs();
    let prefix = RowPrefix::new(abs.values(), grid.points_per_axis());
    let tables = fam.tables(|k, c| fam.ball_average(&prefix, k, c));
    fam.sup_everywhere(&tables)
}

/// `M_δ f = [M(|f|^δ)]^{1/δ}`.
pub fn m_delta(f: &GridFunction, delta: f64) -> Result<GridFunction> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("δ must be positive, got {delta}")));
    }
    if delta == 1.0 {
        return Ok(hl_maximal(f));
    }
    let powered = f.map(|v| v.abs().powf(delta));
    Ok(hl_maximal(&powered).map(|v| v.powf(1.0 / delta)))
}

/// `M^♯ f(x) = max_{B ∋ x} avg_B |f − f_B|`.
pub fn sharp_maximal(f: &GridFunction) -> GridFunction {
    let grid = *f.grid();
    let fam = Family::new(&grid);
    let np = grid.points_per_axis();
    let prefix = RowPrefix::new(f.values(), np);
    let mins = RowExtrema::new(f.values(), np, false);
    let maxes = RowExtrema::new(f.values(), np, true);
    let tables = fam.tables(|k, c| {
        // Constant on the ball: exactly zero, independent of rounding in the mean.
        if fam.ball_extreme(&mins, k, c) == fam.ball_extreme(&maxes, k, c) {
            return 0.0;
        }
        let mean = fam.ball_average(&prefix, k, c);
        let mut sum = 0.0;
        let mut count = 0usize;
        fam.for_each_value(f.values(), k, c, |v| {
            sum += (v - mean).abs();
            count += 1;
        });
        sum / count as f64
    });
    fam.sup_everywhere(&tables)
}

/// `inf_c avg_B |f − c|` by ternary search on the convex function of `c`.
pub fn mean_oscillation_inf(f: &GridFunction, ball: &Ball) -> Result<f64> {
    let points = ball.points(f.grid());
    if points.is_empty() {
        return Err(Error::EmptyBall);
    }
    let values: Vec<f64> = points.iter().map(|&i| f.value(i)).collect();
    let cost = |c: f64| values.iter().map(|v| (v - c).abs()).sum::<f64>() / values.len() as f64;
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if cost(a) <= cost(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    Ok(cost(0.5 * (lo + hi)))
}

/// `M^♯` in the `inf_c` form; brute force over the family, for cross-checks
/// on small grids.
pub fn sharp_maximal_inf(f: &GridFunction) -> Result<GridFunction> {
    let grid = *f.grid();
    let family = crate::grid::ball_family(&grid);
    let mut out = vec![0.0f64; grid.len()];
    for ball in &family {
        let v = mean_oscillation_inf(f, ball)?;
        for p in ball.points(&grid) {
            out[p] = out[p].max(v);
        }
    }
    GridFunction::new(grid, out)
}

/// `M^♯_δ f = [M^♯(|f|^δ)]^{1/δ}` for `0 < δ < 1`.
pub fn sharp_delta(f: &GridFunction, delta: f64) -> Result<GridFunction> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("δ must lie in (0, 1), got {delta}")));
    }
    let powered = f.map(|v| v.abs().powf(delta));
    Ok(sharp_maximal(&powered).map(|v| v.powf(1.0 / delta)))
}

/// `M^k f`, `k ≥ 1`.
pub fn iterated_maximal(f: &GridFunction, k: usize) -> Result<GridFunction> {
    if k == 0 {
        return Err(Error::InvalidParameter("iteration count must be at least 1".into()));
    }
    let mut out = hl_maximal(f);
    for _ in 1..k {
        out = hl_maximal(&out);
    }
    Ok(out)
}
