//! Young functions, Φ-averages `‖f‖_{Φ,B}`, Orlicz maximal operators,
//! `Osc_{exp L^r}` and BMO norms, the generalized Hölder ratio, and symbol
//! families for multilinear commutators.
//!
//! Exponent convention: [`YoungFunction::llogl`] takes the exponent `s` of
//! `Φ(t) = t·log^s(e + t)`. Commutator bounds use `s = 1/r` with
//! `1/r = Σ 1/r_j` (see [`SymbolFamily::llogl_exponent`]).

use std::fmt;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Ball, GridFunction};
use crate::maximal;
use crate::stencil::{BoxClip, DiskStencil, Family, RowExtrema, RowPrefix};

/// `log⁺ t = max(log t, 0)`.
pub fn log_plus(t: f64) -> f64 {
    if t > 1.0 {
        t.ln()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum YoungKind {
    Identity,
    /// `t·log^s(e + t)`.
    LLogL { exponent: f64 },
    /// `e^{t^r} − 1`.
    ExpL { r: f64 },
    /// User-supplied evaluator, checked by sampling before use.
    Custom,
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct YoungFunction {
    kind: YoungKind,
    custom: Option<Evaluator>,
    label: String,
    inverse_at_one: f64,
}

impl fmt::Debug for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("YoungFunction")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .field("inverse_at_one", &self.inverse_at_one)
            .finish()
    }
}

/// Builds a named Young function. `kind` is one of `identity`, `llogl`
/// (`param` is the log exponent, must be positive) or `expl` (`param` is
/// `r ≥ 1`).
pub fn make_young(kind: &str, param: f64) -> Result<YoungFunction> {
    match kind {
        "identity" => Ok(YoungFunction::identity()),
        "llogl" => YoungFunction::llogl(param),
        "expl" => YoungFunction::expl(param),
        other => Err(Error::UnknownYoung(other.to_string())),
    }
}

impl YoungFunction {
    pub fn identity() -> Self {
        YoungFunction {
            kind: YoungKind::Identity,
            custom: None,
            label: "identity".into(),
            inverse_at_one: 1.0,
        }
    }

    pub fn llogl(exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "L log L exponent must be positive, got {exponent}"
            )));
        }
        let mut out = YoungFunction {
            kind: YoungKind::LLogL { exponent },
            custom: None,
            label: format!("llogl({exponent})"),
            inverse_at_one: 1.0,
        };
        out.inverse_at_one = out.invert_one();
        Ok(out)
    }

    pub fn expl(r: f64) -> Result<Self> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exp L^r needs r >= 1, got {r}"
            )));
        }
        Ok(YoungFunction {
            kind: YoungKind::ExpL { r },
            custom: None,
            label: format!("expl({r})"),
            inverse_at_one: std::f64::consts::LN_2.powf(1.0 / r),
        })
    }

    /// Arbitrary evaluator. Young-function axioms are checked by
    /// [`YoungFunction::validate`] before any average is taken.
    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let mut out = YoungFunction {
            kind: YoungKind::Custom,
            custom: Some(Arc::new(f)),
            label: label.into(),
            inverse_at_one: f64::NAN,
        };
        out.inverse_at_one = out.invert_one();
        out
    }

    pub fn kind(&self) -> YoungKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            YoungKind::Identity => t,
            YoungKind::LLogL { exponent } => t * log_power((std::f64::consts::E + t).ln(), exponent),
            YoungKind::ExpL { r } => (t.powf(r)).exp_m1(),
            YoungKind::Custom => (self.custom.as_ref().unwrap())(t),
        }
    }

    /// `Φ^{-1}(1)`.
    pub fn inverse_at_one(&self) -> f64 {
        self.inverse_at_one
    }

    /// A lower bound for `Φ^{-1}(y)` within a few ulps; `y ≥ 0`.
    fn invert_below(&self, y: f64) -> f64 {
        let mut hi = 1.0;
        let mut guard = 0;
        while !(self.eval(hi) >= y) && guard < 1100 {
            hi *= 2.0;
            guard += 1;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn invert_one(&self) -> f64 {
        let mut hi = 1.0;
        let mut guard = 0;
        while !(self.eval(hi) >= 1.0) && guard < 1100 {
            hi *= 2.0;
            guard += 1;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Sampled check of the Young-function axioms: `Φ(0) = 0`, strictly
    /// increasing, midpoint convex, unbounded.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidYoung(format!("{}: {what}", self.label)));
        let phi0 = self.eval(0.0);
        if phi0 != 0.0 {
            return bad("Φ(0) ≠ 0");
        }
        let ts: Vec<f64> = (0..64).map(|i| 1e-3 * 1.25f64.powi(i)).collect();
        // Sample only where Φ is representable.
        let vals: Vec<f64> = ts
            .iter()
            .map(|&t| self.eval(t))
            .take_while(|v| !v.is_infinite())
            .collect();
        let ts = &ts[..vals.len()];
        if vals.iter().any(|v| v.is_nan() || *v < 0.0) {
            return bad("negative or undefined values");
        }
        if vals.windows(2).any(|w| !(w[1] > w[0])) || !(vals[0] > phi0) {
            return bad("not strictly increasing");
        }
        for w in ts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = self.eval(0.5 * (a + b));
            let chord = 0.5 * (self.eval(a) + self.eval(b));
            if mid > chord * (1.0 + 1e-12) {
                return bad("not convex");
            }
        }
        if !(self.eval(1e6) > 1.0) || !self.inverse_at_one.is_finite() {
            return bad("does not tend to infinity");
        }
        Ok(())
    }

    /// `ln Σ Φ(v_i u)` and its derivative in `u`, stable for large
    /// arguments of the exponential family. `values` are positive.
    fn log_modular(&self, values: &[f64], u: f64) -> (f64, f64) {
        match self.kind {
            YoungKind::Identity => {
                let s: f64 = values.iter().sum();
                ((s * u).ln(), 1.0 / u)
            }
            YoungKind::LLogL { exponent } => {
                let mut sum = 0.0;
                let mut dsum = 0.0;
                for &v in values {
                    let t = v * u;
                    let l = (std::f64::consts::E + t).ln();
                    let lp = log_power(l, exponent);
                    sum += t * lp;
                    dsum += v * (lp + exponent * t * lp / (l * (std::f64::consts::E + t)));
                }
                (sum.ln(), dsum / sum)
            }
            YoungKind::ExpL { r } => {
                let peak = values.iter().fold(0.0f64, |m, &v| m.max((v * u).powf(r)));
                if peak < 700.0 {
                    let mut sum = 0.0;
                    let mut dsum = 0.0;
                    for &v in values {
                        let a = (v * u).powf(r);
                        sum += a.exp_m1();
                        dsum += r * a / u * a.exp();
                    }
                    (sum.ln(), dsum / sum)
                } else {
                    let mut sum = 0.0;
                    let mut dsum = 0.0;
                    let tail = (-peak).exp();
                    for &v in values {
                        let a = (v * u).powf(r);
                        let e = (a - peak).exp();
                        sum += e - tail;
                        dsum += r * a / u * e;
                    }
                    (peak + sum.ln(), dsum / sum)
                }
            }
            YoungKind::Custom => {
                let f = self.custom.as_ref().unwrap();
                let s: f64 = values.iter().map(|&v| f(v * u)).sum();
                (s.ln(), f64::NAN)
            }
        }
    }
}

/// Relative bracket width at which the root search stops.
const SOLVE_TOL: f64 = 4.0 * f64::EPSILON;
/// Relative slack on pruning comparisons; far above solver rounding.
const PRUNE_MARGIN: f64 = 1e-9;

/// `‖f‖_{Φ,B}` from the nonzero magnitudes on `B` and the number of grid
/// points in `B`. Zeros contribute `Φ(0) = 0` and only enter through
/// `count`.
///
/// `G(λ) = count⁻¹ Σ Φ(v_i/λ)` is bracketed by Jensen's inequality between
/// `avg/Φ⁻¹(1)` and `max/Φ⁻¹(1)`; the root of `ln G` is then found by
/// Newton steps in `u = 1/λ`, falling back to bisection whenever a step
/// leaves the bracket.
/// `l^s`; exact shortcuts for the exponents the commutator bounds use.
#[inline]
fn log_power(l: f64, s: f64) -> f64 {
    if s == 1.0 {
        l
    } else if s == 0.5 {
        l.sqrt()
    } else if s == 1.5 {
        l * l.sqrt()
    } else if s == 2.0 {
        l * l
    } else {
        l.powf(s)
    }
}

pub(crate) fn phi_norm(values: &[f64], count: usize, phi: &YoungFunction) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let sum: f64 = values.iter().sum();
    let avg = sum / count as f64;
    if let YoungKind::Identity = phi.kind {
        return avg;
    }
    let peak = values.iter().fold(0.0f64, |m, &v| m.max(v));
    let inv1 = phi.inverse_at_one();
    let lam_lo = avg / inv1;
    let lam_hi = peak / inv1;
    if lam_hi <= lam_lo * (1.0 + SOLVE_TOL) {
        return lam_lo;
    }
    let target = (count as f64).ln();
    // H(u) = ln Σ Φ(v u) − ln count is increasing in u; H(u_lo) ≤ 0 ≤ H(u_hi).
    let mut u_lo = 1.0 / lam_hi;
    let mut u_hi = 1.0 / lam_lo;
    let mut u = u_hi;
    for _ in 0..400 {
        let (lm, dlm) = phi.log_modular(values, u);
        let h = lm - target;
        if h > 0.0 {
            u_hi = u;
        } else if h < 0.0 {
            u_lo = u;
        } else {
            return 1.0 / u;
        }
        if u_hi - u_lo <= SOLVE_TOL * u_hi {
            break;
        }
        let newton = u - h / dlm;
        let next = if newton.is_finite() && newton > u_lo && newton < u_hi {
            newton
        } else {
            0.5 * (u_lo + u_hi)
        };
        if (next - u).abs() <= SOLVE_TOL * u {
            u = next;
            break;
        }
        u = next;
    }
    1.0 / u
}

/// Nonzero magnitudes of `f` in `ball` plus the ball's point count.
fn gather_abs(f: &GridFunction, ball: &Ball) -> Result<(Vec<f64>, usize)> {
    let grid = f.grid();
    if ball.center >= grid.len() || ball.radius_cells == 0 {
        return Err(Error::EmptyBall);
    }
    let stencil = DiskStencil::new(grid.dimension(), ball.radius_cells);
    let center = grid.multi_index(ball.center);
    let np = grid.points_per_axis();
    let mut out = Vec::new();
    let mut count = 0usize;
    stencil.for_each_row(&center, &grid.full_clip(), |row, lo, hi| {
        let base = row * np;
        out.extend(
            f.values()[base + lo..=base + hi]
                .iter()
                .filter(|v| **v != 0.0)
                .map(|v| v.abs()),
        );
        count += hi - lo + 1;
    });
    if count == 0 {
        return Err(Error::EmptyBall);
    }
    Ok((out, count))
}

/// `‖f‖_{Φ,B} = inf{λ > 0 : |B|⁻¹ Σ_B Φ(|f|/λ) ≤ 1}`; `0` when `f ≡ 0` on
/// `B`.
pub fn orlicz_average(f: &GridFunction, ball: &Ball, phi: &YoungFunction) -> Result<f64> {
    phi.validate()?;
    let (values, count) = gather_abs(f, ball)?;
    Ok(phi_norm(&values, count, phi))
}

/// `|B|⁻¹ Σ_B Φ(|f|/λ)`, the quantity the Φ-average drives to one.
pub fn orlicz_modular(f: &GridFunction, ball: &Ball, phi: &YoungFunction, lambda: f64) -> Result<f64> {
    let (values, count) = gather_abs(f, ball)?;
    Ok(values.iter().map(|&v| phi.eval(v / lambda)).sum::<f64>() / count as f64)
}

/// `M_Φ f(x) = max over family balls B ∋ x of ‖f‖_{Φ,B}`, at every grid
/// point. For the identity this is exactly [`maximal::hl_maximal`].
pub fn orlicz_maximal(f: &GridFunction, phi: &YoungFunction) -> Result<GridFunction> {
    phi.validate()?;
    if let YoungKind::Identity = phi.kind {
        return Ok(maximal::hl_maximal(f));
    }
    let grid = *f.grid();
    let fam = Family::new(&grid);
    let Some(support) = f.support_box() else {
        return Ok(GridFunction::zeros(grid));
    };
    let n = grid.dimension();
    let np = grid.points_per_axis();
    let abs = f.abs();
    let nonzero_total = abs.values().iter().filter(|v| **v != 0.0).count();
    let clip = BoxClip::new(
        *support.lo.iter().min().unwrap(),
        *support.hi.iter().max().unwrap(),
    );

    // Balls holding the whole support share one multiset of values and
    // differ only in point count; solve those once per count.
    let support_values: Vec<f64> = abs.values().iter().copied().filter(|v| *v != 0.0).collect();
    let covers_support = |k: usize, c: usize| -> bool {
        let r2 = (fam.radii[k] * fam.radii[k]) as u64;
        let center = fam.coords(c);
        // All corners of the support box inside the ball.
        (0..(1usize << n)).all(|mask| {
            let d2: u64 = (0..n)
                .map(|a| {
                    let corner = if mask >> a & 1 == 1 { support.hi[a] } else { support.lo[a] };
                    let d = corner.abs_diff(center[a]) as u64;
                    d * d
                })
                .sum();
            d2 <= r2
        })
    };
    let mut counts: Vec<usize> = Vec::new();
    for k in 0..fam.radii.len() {
        for c in 0..fam.centers.len() {
            if covers_support(k, c) {
                counts.push(fam.ball_count(k, c));
            }
        }
    }
    counts.sort_unstable();
    counts.dedup();
    let shared: Vec<f64> = counts
        .par_iter()
        .map(|&count| phi_norm(&support_values, count, phi))
        .collect();

    // Jensen gives ‖f‖_{Φ,B} ≥ A_B/Φ^{-1}(1) and convexity gives
    // ‖f‖_{Φ,B} ≤ M_B/Φ^{-1}(M_B/A_B). The sup of the lower bounds is a
    // floor for M_Φ f; a ball whose upper bound stays below that floor
    // everywhere in the ball cannot attain the sup at any of its points.
    // The relative margin keeps the result bitwise equal to the full scan.
    let prefix = RowPrefix::new(abs.values(), np);
    let peaks = RowExtrema::new(abs.values(), np, true);
    let inv1 = phi.inverse_at_one();
    let lower = fam.tables(|k, c| fam.ball_average(&prefix, k, c) / inv1);
    let floor = fam.sup_everywhere(&lower);
    let floor_min = RowExtrema::new(floor.values(), np, false);
    let tables = fam.tables(|k, c| {
        let avg = fam.ball_average(&prefix, k, c);
        if avg == 0.0 {
            return 0.0;
        }
        let peak = fam.ball_extreme(&peaks, k, c);
        let upper = peak / phi.invert_below(peak / avg);
        if upper * (1.0 + PRUNE_MARGIN) < fam.ball_extreme(&floor_min, k, c) {
            return 0.0;
        }
        if covers_support(k, c) {
            let count = fam.ball_count(k, c);
            let at = counts.binary_search(&count).expect("count precomputed");
            return shared[at];
        }
        let mut values = Vec::new();
        let count = fam.ball_count(k, c);
        fam.stencils[k].for_each_row(fam.coords(c), &clip, |row, lo, hi| {
            // Row id relative to the support clip box; map back to the grid.
            let mut rest = row;
            let side = clip.side();
            let mut id = 0usize;
            let mut div = side.pow((n - 1) as u32);
            for _ in 0..n - 1 {
                div /= side;
                let q = rest / div;
                rest %= div;
                id = id * np + (q + clip.lo);
            }
            let base = id * np + clip.lo;
            values.extend(
                abs.values()[base + lo..=base + hi]
                    .iter()
                    .copied()
                    .filter(|v| *v != 0.0),
            );
        });
        debug_assert!(values.len() <= nonzero_total);
        phi_norm(&values, count, phi)
    });
    Ok(fam.sup_everywhere(&tables))
}


/// Sup over the family of a per-ball oscillation functional. Each ball gets
/// an upper bound from `bound(max |b − b_B|, σ_B)`, where `σ_B` bounds the
/// standard deviation from above. Balls are visited in decreasing bound
/// order, and the scan stops once no remaining bound can beat the best
/// value found. `exact(…, best)` may return any value `≤ best` when the
/// ball cannot beat `best`.
fn sup_over_family_pruned<B, F>(b: &GridFunction, bound: B, exact: F) -> f64
where
    B: Fn(f64, f64) -> f64 + Sync,
    F: Fn(&Family, usize, usize, f64, f64, &mut Vec<f64>) -> f64 + Sync,
{
    let grid = *b.grid();
    let np = grid.points_per_axis();
    let fam = Family::new(&grid);
    let prefix = RowPrefix::new(b.values(), np);
    let squares: Vec<f64> = b.values().iter().map(|v| v * v).collect();
    let prefix_sq = RowPrefix::new(&squares, np);
    let maxes = RowExtrema::new(b.values(), np, true);
    let mins = RowExtrema::new(b.values(), np, false);
    let mut candidates: Vec<(f64, f64, usize, usize)> = (0..fam.radii.len())
        .flat_map(|k| (0..fam.centers.len()).map(move |c| (k, c)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(k, c)| {
            let mean = fam.ball_average(&prefix, k, c);
            let hi = fam.ball_extreme(&maxes, k, c) - mean;
            let lo = mean - fam.ball_extreme(&mins, k, c);
            let spread = hi.max(lo).max(0.0);
            if spread == 0.0 {
                return (0.0, mean, k, c);
            }
            // Slack covers cancellation in E[b²] − E[b]².
            let second = fam.ball_average(&prefix_sq, k, c);
            let var = (second - mean * mean).max(0.0) + 1e-9 * second + f64::MIN_POSITIVE;
            (bound(spread, var.sqrt().min(spread)), mean, k, c)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.2, a.3).cmp(&(b.2, b.3))));

    let mut best = 0.0f64;
    let chunk = 64;
    let mut start = 0;
    while start < candidates.len() {
        if candidates[start].0 <= best {
            break;
        }
        let end = (start + chunk).min(candidates.len());
        let found = candidates[start..end]
            .par_iter()
            .filter(|cand| cand.0 > best)
            .map_init(Vec::new, |buf, &(_, mean, k, c)| exact(&fam, k, c, mean, best, buf))
            .reduce(|| 0.0, f64::max);
        best = best.max(found);
        start = end;
    }
    best
}

/// `‖b‖_{Osc_{exp L^r}} = max_B ‖b − b_B‖_{exp L^r, B}` over the family.
pub fn osc_norm(b: &GridFunction, r: f64) -> Result<f64> {
    let phi = YoungFunction::expl(r)?;
    // With |g| ≤ M and avg |g| ≤ σ, convexity gives avg Φ(|g|/λ) ≤
    // (σ/M) Φ(M/λ), so ‖g‖ ≤ M / Φ⁻¹(M/σ) with Φ⁻¹(y) = ln(1 + y)^{1/r}.
    let bound = |m: f64, sigma: f64| m / (m / sigma).ln_1p().powf(1.0 / r);
    Ok(sup_over_family_pruned(b, bound, |fam, k, c, mean, best, buf| {
        buf.clear();
        let count = fam.ball_count(k, c);
        fam.for_each_value(b.values(), k, c, |v| {
            let d = (v - mean).abs();
            if d != 0.0 {
                buf.push(d);
            }
        });
        // ‖g‖ > best iff avg Φ(|g|/best) > 1; one pass settles most balls.
        if best > 0.0 {
            let limit = count as f64;
            let mut sum = 0.0;
            let mut beats = false;
            for &d in buf.iter() {
                sum += phi.eval(d / best);
                if sum > limit {
                    beats = true;
                    break;
                }
            }
            if !beats {
                return 0.0;
            }
        }
        phi_norm(buf, count, &phi)
    }))
}

/// `‖b‖_* = max_B |B|⁻¹ Σ_B |b − b_B|` over the family.
pub fn bmo_norm(b: &GridFunction) -> f64 {
    // Mean absolute deviation is at most the standard deviation.
    sup_over_family_pruned(b, |m, sigma| m.min(sigma), |fam, k, c, mean, _, _| {
        let mut sum = 0.0;
        let mut count = 0usize;
        fam.for_each_value(b.values(), k, c, |v| {
            sum += (v - mean).abs();
            count += 1;
        });
        sum / count as f64
    })
}

/// Empirical constant of the generalized Hölder inequality on `ball`:
/// `avg_B |f_1⋯f_m g|` divided by
/// `Π ‖f_j‖_{exp L^{r_j},B} · ‖g‖_{L(log L)^{1/r},B}` with `1/r = Σ 1/r_j`.
/// A vanishing left-hand side gives `0`.
pub fn holder_ratio(fs: &[GridFunction], g: &GridFunction, ball: &Ball, rs: &[f64]) -> Result<f64> {
    if fs.is_empty() || fs.len() != rs.len() {
        return Err(Error::InvalidParameter(format!(
            "need one exponent per factor ({} factors, {} exponents)",
            fs.len(),
            rs.len()
        )));
    }
    for f in fs {
        f.ensure_same_grid(g)?;
    }
    let mut product = g.abs();
    for f in fs {
        product = GridFunction::from_raw(
            *g.grid(),
            product
                .values()
                .iter()
                .zip(f.values())
                .map(|(a, b)| a * b.abs())
                .collect(),
        );
    }
    let lhs = crate::grid::average(&product, ball)?;
    if lhs == 0.0 {
        return Ok(0.0);
    }
    let mut rhs = 1.0;
    let mut inv_r = 0.0;
    for (f, &r) in fs.iter().zip(rs) {
        rhs *= orlicz_average(f, ball, &YoungFunction::expl(r)?)?;
        inv_r += 1.0 / r;
    }
    rhs *= orlicz_average(g, ball, &YoungFunction::llogl(inv_r)?)?;
    if rhs == 0.0 {
        return Err(Error::DegenerateHolder);
    }
    Ok(lhs / rhs)
}

/// Commutator symbols `b⃗ = (b_1, …, b_m)` with their exponents `r_j`.
/// Immutable; the `Osc_{exp L^{r_j}}` norms are computed on first use.
#[derive(Debug)]
pub struct SymbolFamily {
    symbols: Vec<GridFunction>,
    exponents: Vec<f64>,
    norms: OnceLock<Vec<f64>>,
}

impl Clone for SymbolFamily {
    fn clone(&self) -> Self {
        let norms = OnceLock::new();
        if let Some(n) = self.norms.get() {
            let _ = norms.set(n.clone());
        }
        SymbolFamily {
            symbols: self.symbols.clone(),
            exponents: self.exponents.clone(),
            norms,
        }
    }
}

impl SymbolFamily {
    pub fn new(symbols: Vec<GridFunction>, exponents: Vec<f64>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::InvalidParameter("need at least one symbol".into()));
        }
        if symbols.len() != exponents.len() {
            return Err(Error::InvalidParameter(format!(
                "{} symbols but {} exponents",
                symbols.len(),
                exponents.len()
            )));
        }
        if let Some(r) = exponents.iter().find(|r| !(**r >= 1.0 && r.is_finite())) {
            return Err(Error::InvalidParameter(format!("symbol exponent {r} < 1")));
        }
        for s in &symbols[1..] {
            s.ensure_same_grid(&symbols[0])?;
        }
        Ok(SymbolFamily {
            symbols,
            exponents,
            norms: OnceLock::new(),
        })
    }

    /// Same as [`SymbolFamily::new`] with norms supplied by the caller
    /// (e.g. memoized from an earlier computation on the same symbols).
    pub fn with_norms(symbols: Vec<GridFunction>, exponents: Vec<f64>, norms: Vec<f64>) -> Result<Self> {
        let out = SymbolFamily::new(symbols, exponents)?;
        if norms.len() != out.m() || norms.iter().any(|n| !(*n >= 0.0 && n.is_finite())) {
            return Err(Error::InvalidParameter("one finite norm per symbol".into()));
        }
        let _ = out.norms.set(norms);
        Ok(out)
    }

    pub fn m(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[GridFunction] {
        &self.symbols
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    /// `Σ 1/r_j`, i.e. `1/r`.
    pub fn llogl_exponent(&self) -> f64 {
        self.exponents.iter().map(|r| 1.0 / r).sum()
    }

    /// `r` with `1/r = Σ 1/r_j`.
    pub fn r(&self) -> f64 {
        1.0 / self.llogl_exponent()
    }

    /// `‖b_j‖_{Osc_{exp L^{r_j}}}` for each symbol.
    pub fn osc_norms(&self) -> &[f64] {
        self.norms.get_or_init(|| {
            self.symbols
                .iter()
                .zip(&self.exponents)
                .map(|(b, &r)| osc_norm(b, r).expect("exponents validated"))
                .collect()
        })
    }

    /// `‖b⃗‖ = Π_j ‖b_j‖_{Osc_{exp L^{r_j}}}`.
    pub fn norm(&self) -> f64 {
        self.osc_norms().iter().product()
    }

    /// `‖b⃗_σ‖ = Π_{i ∈ σ} ‖b_i‖_{Osc_{exp L^{r_i}}}` (0-based indices).
    pub fn subset_norm(&self, subset: &[usize]) -> f64 {
        let norms = self.osc_norms();
        subset.iter().map(|&i| norms[i]).product()
    }

    /// All `j`-element subsets of `{0, …, m−1}` in lexicographic order.
    pub fn subsets(&self, j: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            for i in start..m {
                if m - i < left {
                    break;
                }
                cur.push(i);
                rec(i + 1, m, left - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if j <= self.m() {
            rec(0, self.m(), j, &mut Vec::new(), &mut out);
        }
        out
    }

    /// `{0, …, m−1} \ σ`.
    pub fn complement(&self, subset: &[usize]) -> Vec<usize> {
        (0..self.m()).filter(|i| !subset.contains(i)).collect()
    }
}
