//! Homogeneous degree-zero kernels `Ω` on the unit sphere, sphere
//! quadrature for the cancellation condition, modulus-of-continuity fitting,
//! and the builtin catalog.

use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum KernelShape {
    /// `sin(kθ)`, `n = 2`.
    OddHarmonic(u32),
    /// `Ω(±1) = ±1`, `n = 1`.
    Sign1d,
    /// `sign(x'_1)`; bounded with cancellation but discontinuous.
    SignFirstCoord,
    /// `φ(θ) − φ(θ + π)` with `φ` a concave cusp in `a = |θ̃|` (`θ̃` the
    /// wrap of `θ` into `(−π, π]`): `(ln 1/a)^{−ρ₀}` up to `a₁ = e^{−(ρ₀+1)}`
    /// (the end of its concave range), tangent line up to `3π/8`, constant
    /// beyond, normalized to `[0, 1]`. Concavity makes the modulus of
    /// continuity equal to `φ` itself, `(log 1/s)^{−ρ₀}` for `s ≤ a₁`;
    /// `n = 2`.
    LogRough { rho: f64 },
    /// Periodic piecewise-linear interpolation of `(θ, Ω)` samples, `n = 2`.
    Tabulated(Arc<Table>),
    /// `Ω ≡ c`; violates cancellation unless `c = 0`.
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    theta: Vec<f64>,
    omega: Vec<f64>,
}

impl Table {
    /// Rows must be strictly increasing in `θ` and lie in `[0, 2π)`.
    pub fn new(theta: Vec<f64>, omega: Vec<f64>) -> std::result::Result<Self, String> {
        if theta.is_empty() || theta.len() != omega.len() {
            return Err("need at least one row with matching columns".into());
        }
        if let Some(t) = theta.iter().find(|t| !(**t >= 0.0 && **t < TAU)) {
            return Err(format!("theta {t} outside [0, 2π)"));
        }
        if theta.windows(2).any(|w| !(w[1] > w[0])) {
            return Err("theta must be strictly increasing".into());
        }
        if omega.iter().any(|v| !v.is_finite()) {
            return Err("omega values must be finite".into());
        }
        Ok(Table { theta, omega })
    }

    fn eval(&self, theta: f64) -> f64 {
        let t = theta.rem_euclid(TAU);
        let n = self.theta.len();
        if n == 1 {
            return self.omega[0];
        }
        // Index of the last row at or before t, wrapping below the first row.
        let upper = self.theta.partition_point(|&x| x <= t);
        let (i0, i1) = if upper == 0 || upper == n { (n - 1, 0) } else { (upper - 1, upper) };
        let t0 = self.theta[i0];
        let mut t1 = self.theta[i1];
        let mut tt = t;
        if i1 == 0 {
            t1 += TAU;
            if tt < t0 {
                tt += TAU;
            }
        }
        let w = (tt - t0) / (t1 - t0);
        self.omega[i0] + w * (self.omega[i1] - self.omega[i0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    dimension: usize,
    shape: KernelShape,
    sup_bound: f64,
    label: String,
    negative_example: bool,
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// End of the rising part of the log-rough profile.
const LOG_ROUGH_PLATEAU: f64 = 3.0 * PI / 8.0;

fn log_rough_profile(a: f64, rho: f64) -> f64 {
    let a1 = (-(rho + 1.0)).exp();
    let g = |x: f64| (1.0 / x).ln().powf(-rho);
    let slope = rho * (rho + 1.0).powf(-rho - 1.0) / a1;
    let rise = |x: f64| {
        if x == 0.0 {
            0.0
        } else if x <= a1 {
            g(x)
        } else {
            g(a1) + slope * (x - a1)
        }
    };
    rise(a.min(LOG_ROUGH_PLATEAU)) / rise(LOG_ROUGH_PLATEAU)
}

fn log_rough_phi(theta: f64, rho: f64) -> f64 {
    log_rough_profile(wrap_angle(theta).abs(), rho)
}

/// `Im((x + iy)^k)`, which is `sin kθ` on the unit circle. Sign flips of
/// `x` or `y` commute with every rounding step, so mirrored directions give
/// bitwise mirrored values.
fn harmonic_sin(x: f64, y: f64, k: u32) -> f64 {
    let (mut re, mut im) = (1.0, 0.0);
    let (mut br, mut bi) = (x, y);
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            (re, im) = (re * br - im * bi, re * bi + im * br);
        }
        (br, bi) = (br * br - bi * bi, 2.0 * br * bi);
        e >>= 1;
    }
    im
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Kernel {
    pub fn new(dimension: usize, shape: KernelShape, label: impl Into<String>) -> Result<Self> {
        let need = |n: usize| -> Result<()> {
            if dimension == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "kernel needs dimension {n}, got {dimension}"
                )))
            }
        };
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let (sup_bound, negative_example) = match &shape {
            KernelShape::OddHarmonic(k) => {
                need(2)?;
                if *k == 0 {
                    return Err(Error::InvalidParameter("harmonic order must be positive".into()));
                }
                (1.0, false)
            }
            KernelShape::Sign1d => {
                need(1)?;
                (1.0, false)
            }
            KernelShape::SignFirstCoord => (1.0, true),
            KernelShape::LogRough { rho } => {
                need(2)?;
                if !(*rho > 2.0 && rho.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "log-continuity exponent must exceed 2, got {rho}"
                    )));
                }
                (1.0, false)
            }
            KernelShape::Tabulated(t) => {
                need(2)?;
                (t.omega.iter().fold(0.0f64, |m, v| m.max(v.abs())), false)
            }
            KernelShape::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::InvalidParameter("constant kernel must be finite".into()));
                }
                (c.abs(), *c != 0.0)
            }
        };
        Ok(Kernel {
            dimension,
            shape,
            sup_bound,
            label: label.into(),
            negative_example,
        })
    }

    /// Reads a two-column CSV with header `theta,omega` (`n = 2`).
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|source| Error::KernelTableCsv {
            path: path.to_path_buf(),
            source,
        })?;
        let headers = reader
            .headers()
            .map_err(|source| Error::KernelTableCsv {
                path: path.to_path_buf(),
                source,
            })?
            .clone();
        let names: Vec<&str> = headers.iter().map(str::trim).collect();
        if names != ["theta", "omega"] {
            return Err(Error::KernelTable {
                path: path.to_path_buf(),
                reason: format!("header must be `theta,omega`, got `{}`", names.join(",")),
            });
        }
        let mut theta = Vec::new();
        let mut omega = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|source| Error::KernelTableCsv {
                path: path.to_path_buf(),
                source,
            })?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::KernelTable {
                        path: path.to_path_buf(),
                        reason: format!("row {}: expected two numbers", line + 1),
                    })
            };
            theta.push(parse(0)?);
            omega.push(parse(1)?);
        }
        let table = Table::new(theta, omega).map_err(|reason| Error::KernelTable {
            path: path.to_path_buf(),
            reason,
        })?;
        let label = format!("table({})", path.display());
        Kernel::new(2, KernelShape::Tabulated(Arc::new(table)), label)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn shape(&self) -> &KernelShape {
        &self.shape
    }

    /// `‖Ω‖_{L^∞(S^{n−1})}`.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Kernels built to violate a hypothesis (discontinuous or without
    /// cancellation). Operators accept them; experiments label them.
    pub fn is_negative_example(&self) -> bool {
        self.negative_example
    }

    /// `Ω(x')` for a unit vector `x'`.
    pub fn eval_direction(&self, unit: &[f64]) -> f64 {
        debug_assert_eq!(unit.len(), self.dimension);
        match &self.shape {
            KernelShape::Sign1d | KernelShape::SignFirstCoord => sign(unit[0]),
            KernelShape::Constant(c) => *c,
            KernelShape::OddHarmonic(k) => harmonic_sin(unit[0], unit[1], *k),
            // |atan2| is exact under y → −y, and −u gives the wrap of θ + π.
            KernelShape::LogRough { rho } => {
                log_rough_profile(unit[1].atan2(unit[0]).abs(), *rho)
                    - log_rough_profile((-unit[1]).atan2(-unit[0]).abs(), *rho)
            }
            KernelShape::Tabulated(_) => self.eval_angle(unit[1].atan2(unit[0])),
        }
    }

    /// `Ω(v/|v|)` for nonzero `v`.
    pub fn eval(&self, v: &[f64]) -> f64 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let unit: Vec<f64> = v.iter().map(|x| x / norm).collect();
        self.eval_direction(&unit)
    }

    /// `Ω(cos θ, sin θ)` for planar kernels.
    pub fn eval_angle(&self, theta: f64) -> f64 {
        match &self.shape {
            KernelShape::OddHarmonic(k) => (*k as f64 * theta).sin(),
            KernelShape::LogRough { rho } => {
                log_rough_phi(theta, *rho) - log_rough_phi(theta + PI, *rho)
            }
            KernelShape::Tabulated(t) => t.eval(theta),
            KernelShape::SignFirstCoord => sign(theta.cos()),
            KernelShape::Constant(c) => *c,
            KernelShape::Sign1d => sign(theta.cos()),
        }
    }
}

/// Builds a catalog kernel. `param` is the harmonic order for
/// `odd_harmonic` (default 1), the exponent `ρ₀` for `log_rough` (default
/// 3) and the value for `constant` (default 1).
pub fn builtin_kernel(id: &str, dimension: usize, param: Option<f64>) -> Result<Kernel> {
    match id {
        "odd_harmonic" => {
            let k = param.unwrap_or(1.0);
            if !(k >= 1.0 && k.fract() == 0.0 && k <= u32::MAX as f64) {
                return Err(Error::InvalidParameter(format!(
                    "harmonic order must be a positive integer, got {k}"
                )));
            }
            Kernel::new(dimension, KernelShape::OddHarmonic(k as u32), format!("odd_harmonic({k})"))
        }
        "sign_1d" => Kernel::new(dimension, KernelShape::Sign1d, "sign_1d"),
        "sign_first_coord" => Kernel::new(dimension, KernelShape::SignFirstCoord, "sign_first_coord"),
        "log_rough" => {
            let rho = param.unwrap_or(3.0);
            Kernel::new(dimension, KernelShape::LogRough { rho }, format!("log_rough({rho})"))
        }
        "constant" => {
            let c = param.unwrap_or(1.0);
            Kernel::new(dimension, KernelShape::Constant(c), format!("constant({c})"))
        }
        other => Err(Error::UnknownKernel(other.to_string())),
    }
}

/// Bound on the number of kernel evaluations in the `n ≥ 4` product rule.
const MAX_SPHERE_NODES: f64 = 16_777_216.0;

/// `|∫_{S^{n−1}} Ω|` by the sphere rule for the kernel's dimension:
/// two-point sum (`n = 1`), uniform angular trapezoid with `quad_nodes`
/// nodes (`n = 2`), product rule in spherical coordinates (`n ≥ 3`).
pub fn check_cancellation(kernel: &Kernel, quad_nodes: usize) -> Result<f64> {
    if quad_nodes < 16 {
        return Err(Error::InvalidParameter(format!(
            "need at least 16 quadrature nodes, got {quad_nodes}"
        )));
    }
    let n = kernel.dimension();
    let value = match n {
        1 => kernel.eval_direction(&[1.0]) + kernel.eval_direction(&[-1.0]),
        2 => {
            let m = quad_nodes as f64;
            let sum: f64 = (0..quad_nodes)
                .map(|i| kernel.eval_angle(TAU * i as f64 / m))
                .sum();
            sum * TAU / m
        }
        _ => product_rule(kernel, quad_nodes),
    };
    Ok(value.abs())
}

/// Azimuth `θ` on a uniform `quad_nodes` grid, polar angles `φ_1..φ_{n−2}`
/// on midpoint grids with Jacobian `Π sin^{n−1−i} φ_i`.
fn product_rule(kernel: &Kernel, quad_nodes: usize) -> f64 {
    let n = kernel.dimension();
    let polar_axes = n - 2;
    let mut polar_nodes = (quad_nodes / 2).max(8);
    let budget = (MAX_SPHERE_NODES / quad_nodes as f64).powf(1.0 / polar_axes as f64) as usize;
    polar_nodes = polar_nodes.min(budget.max(8));
    let dphi = PI / polar_nodes as f64;
    let dtheta = TAU / quad_nodes as f64;
    let mut idx = vec![0usize; polar_axes];
    let mut unit = vec![0.0; n];
    let mut total = 0.0;
    loop {
        let mut jac = 1.0;
        let mut sin_prod = 1.0;
        for (a, &i) in idx.iter().enumerate() {
            let phi = (i as f64 + 0.5) * dphi;
            unit[a] = sin_prod * phi.cos();
            jac *= phi.sin().powi((n - 2 - a) as i32);
            sin_prod *= phi.sin();
        }
        let mut ring = 0.0;
        for t in 0..quad_nodes {
            let theta = t as f64 * dtheta;
            unit[n - 2] = sin_prod * theta.cos();
            unit[n - 1] = sin_prod * theta.sin();
            ring += kernel.eval_direction(&unit);
        }
        total += ring * jac;
        let mut a = polar_axes;
        loop {
            if a == 0 {
                return total * dtheta * dphi.powi(polar_axes as i32);
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < polar_nodes {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Continuity diagnostics for a kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub label: String,
    pub cancellation_residual: f64,
    /// Largest sampled `|Ω|`.
    pub linf_estimate: f64,
    /// `C` in the fit `ω(s) ≈ C (log 1/s)^{−ρ}`.
    pub fitted_c: f64,
    pub fitted_rho: f64,
    /// `(s, ω(s)/s)` per scale, largest scale first.
    pub lipschitz_estimates: Vec<(f64, f64)>,
    /// `ω(s)/s` stays within a factor 2 of its value at the largest scale.
    pub lipschitz: bool,
    /// Lipschitz, or the fitted `ρ` exceeds 2.
    pub log_continuous: bool,
    pub negative_example: bool,
}

/// Default nodes for [`check_cancellation`] inside [`fit_continuity`].
pub const DEFAULT_QUAD_NODES: usize = 4096;

/// Samples `ω(s) = max |Ω(x') − Ω(y')|` over pairs at chord distance `s`
/// and fits `log ω(s) = log C − ρ log log(1/s)` by least squares.
///
/// Pairs start at `samples` evenly spaced directions (azimuths for `n = 2`,
/// a product lattice for `n ≥ 3`) and are taken both forward and centered
/// on each node, so singular points on the lattice are always straddled.
pub fn fit_continuity(kernel: &Kernel, scales: &[f64], samples: usize) -> Result<KernelReport> {
    if scales.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 scales, got {}",
            scales.len()
        )));
    }
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0 && **s < 0.5)) {
        return Err(Error::InvalidParameter(format!("scale {s} outside (0, 1/2)")));
    }
    if scales.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("scales must be strictly decreasing".into()));
    }
    if kernel.dimension() < 2 {
        return Err(Error::InvalidParameter(
            "continuity fitting needs n >= 2 (S^0 has no small scales)".into(),
        ));
    }
    if samples < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 samples, got {samples}")));
    }
    let moduli: Vec<f64> = scales
        .iter()
        .map(|&s| modulus_at(kernel, s, samples))
        .collect();
    let linf_estimate = sample_directions(kernel.dimension(), samples)
        .iter()
        .fold(0.0f64, |m, u| m.max(kernel.eval_direction(u).abs()));

    let (mut sx, mut sy, mut sxx, mut sxy, mut count) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&s, &w) in scales.iter().zip(&moduli) {
        if w > 0.0 {
            let x = (1.0 / s).ln().ln();
            let y = w.ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            count += 1.0;
        }
    }
    let (fitted_c, fitted_rho) = if count >= 2.0 {
        let slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
        let intercept = (sy - slope * sx) / count;
        (intercept.exp(), -slope)
    } else {
        (0.0, 0.0)
    };
    let lipschitz_estimates: Vec<(f64, f64)> =
        scales.iter().zip(&moduli).map(|(&s, &w)| (s, w / s)).collect();
    let first = lipschitz_estimates[0].1;
    let lipschitz = lipschitz_estimates.iter().all(|&(_, l)| l <= 2.0 * first);
    Ok(KernelReport {
        label: kernel.label().to_string(),
        cancellation_residual: check_cancellation(kernel, DEFAULT_QUAD_NODES)?,
        linf_estimate,
        fitted_c,
        fitted_rho,
        lipschitz_estimates,
        lipschitz,
        log_continuous: lipschitz || fitted_rho > 2.0,
        negative_example: kernel.is_negative_example(),
    })
}

/// Scales `2^{−k}` for `k` in `lo..=hi`.
pub fn dyadic_scales(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(-k)).collect()
}

fn modulus_at(kernel: &Kernel, s: f64, samples: usize) -> f64 {
    // Angle subtended by a chord of length s.
    let delta = 2.0 * (0.5 * s).asin();
    if kernel.dimension() == 2 {
        let m = samples as f64;
        return (0..samples)
            .map(|i| {
                let t = TAU * i as f64 / m;
                let forward = (kernel.eval_angle(t) - kernel.eval_angle(t + delta)).abs();
                let centered =
                    (kernel.eval_angle(t - 0.5 * delta) - kernel.eval_angle(t + 0.5 * delta)).abs();
                forward.max(centered)
            })
            .fold(0.0, f64::max);
    }
    let n = kernel.dimension();
    let mut best = 0.0f64;
    for x in sample_directions(n, samples) {
        for axis in 0..n {
            // Unit tangent at x from Gram–Schmidt on e_axis.
            let mut u: Vec<f64> = (0..n).map(|i| if i == axis { 1.0 } else { 0.0 }).collect();
            let dot = x[axis];
            for i in 0..n {
                u[i] -= dot * x[i];
            }
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-8 {
                continue;
            }
            let rotate = |angle: f64| -> Vec<f64> {
                x.iter()
                    .zip(&u)
                    .map(|(a, b)| angle.cos() * a + angle.sin() * b / norm)
                    .collect()
            };
            let forward = (kernel.eval_direction(&x) - kernel.eval_direction(&rotate(delta))).abs();
            let centered = (kernel.eval_direction(&rotate(-0.5 * delta))
                - kernel.eval_direction(&rotate(0.5 * delta)))
            .abs();
            best = best.max(forward).max(centered);
        }
    }
    best
}

/// Roughly `samples` directions: azimuths for `n = 2`, otherwise a
/// spherical-coordinate lattice with the same number of azimuths per ring.
fn sample_directions(n: usize, samples: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    if n == 2 {
        return (0..samples)
            .map(|i| {
                let t = TAU * i as f64 / samples as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
    }
    // Odd count so the equator φ = π/2 is a lattice latitude.
    let per_axis = ((samples as f64).powf(1.0 / (n - 1) as f64).ceil() as usize).max(5) | 1;
    let polar_axes = n - 2;
    let mut out = Vec::new();
    let mut idx = vec![0usize; polar_axes];
    loop {
        let mut prefix = Vec::with_capacity(n);
        let mut sin_prod = 1.0;
        for &i in &idx {
            let phi = PI * i as f64 / (per_axis - 1) as f64;
            prefix.push(sin_prod * phi.cos());
            sin_prod *= phi.sin();
        }
        for t in 0..per_axis {
            let theta = TAU * t as f64 / per_axis as f64;
            let mut v = prefix.clone();
            v.push(sin_prod * theta.cos());
            v.push(sin_prod * theta.sin());
            out.push(v);
        }
        let mut a = polar_axes;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < per_axis {
                break;
            }
            idx[a] = 0;
        }
    }
}
