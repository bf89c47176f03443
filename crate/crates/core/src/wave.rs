//! Wave equation u_tt = Δu in the plane with u(·,0) = 0, u_t(·,0) = h, via
//! Poisson's formula written as an Abel transform of the radial profile
//! F_x(r) = A h(x, r) · r:
//!
//! u(x, t) = 𝒥F_x(t) = ∫₀ᵗ F_x(r) / √(t² − r²) dr = ∫₀^{π/2} F_x(t sin θ) dθ.
//!
//! Also: grid Hölder norms of time traces, the radial mixed norm over
//! [0, T] assembled from dyadic blocks, and a box-counting summary of
//! where the traces are rough.

use std::collections::HashSet;
use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::averaging::average_profile;
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::grid::{DiscreteMeasure, GridFunction};
use crate::mixed_norm::{inner_norm, mixed_norm_weighted, Exponent, ProfileTable};
use crate::scaling::fit_loglog;

/// Minimum number of θ-nodes accepted by [`abel_transform`].
pub const MIN_QUAD_POINTS: usize = 64;

/// Uniform grid of `n ≥ 2` points on [0, t_max].
pub fn uniform_grid(t_max: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidParameter(format!("uniform grid needs n ≥ 2 and T > 0, got n = {n}, T = {t_max}")));
    }
    let step = t_max / (n - 1) as f64;
    Ok((0..n).map(|i| if i + 1 == n { t_max } else { i as f64 * step }).collect())
}

/// Samples of a radial function on a uniform grid of [0, T], linearly
/// interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    t_max: f64,
    values: Vec<f64>,
}

impl RadialProfile {
    /// Knots r_i = i·T/(n−1), i = 0..n.
    pub fn new(t_max: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidParameter("radial profile needs at least 2 knots on [0, T], T > 0".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite profile value {v}")));
        }
        Ok(Self { t_max, values })
    }

    /// Samples `g` at `n` uniform knots of [0, T].
    pub fn from_fn(t_max: f64, n: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        let r = uniform_grid(t_max, n)?;
        Self::new(t_max, r.into_iter().map(g).collect())
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn r_grid(&self) -> Vec<f64> {
        uniform_grid(self.t_max, self.values.len()).expect("validated on construction")
    }

    pub fn step(&self) -> f64 {
        self.t_max / (self.values.len() - 1) as f64
    }

    /// Linear interpolation at r ∈ [0, T].
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.values.len();
        let u = (r / self.step()).clamp(0.0, (n - 1) as f64);
        let i = (u.floor() as usize).min(n - 2);
        let w = u - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// (∫₀^t |F|^s dr)^{1/s} of the interpolant, by composite Simpson on
    /// each knot interval.
    pub fn ls_norm(&self, s: f64, t: f64) -> f64 {
        let h = self.step();
        let t = t.clamp(0.0, self.t_max);
        let mut acc = 0.0;
        let mut a = 0.0;
        while a < t - 1e-15 {
            let b = (a + h).min(t);
            let m = 0.5 * (a + b);
            let f = |r: f64| self.eval(r).abs().powf(s);
            acc += (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
            a = b;
        }
        acc.powf(1.0 / s)
    }
}

/// Samples of u(x, ·) on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeTrace {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// 𝒥F(t) = ∫₀^{π/2} F(t sin θ) dθ by the midpoint rule with `quad_points`
/// nodes.
pub fn abel_transform(f: &RadialProfile, t: f64, quad_points: usize) -> Result<f64> {
    if quad_points < MIN_QUAD_POINTS {
        return Err(Error::InvalidParameter(format!("quad_points must be at least {MIN_QUAD_POINTS}, got {quad_points}")));
    }
    if !(t >= 0.0) || t > f.t_max * (1.0 + 1e-12) {
        return Err(Error::OutOfRange(format!("t = {t} lies outside the profile range [0, {}]", f.t_max)));
    }
    let w = FRAC_PI_2 / quad_points as f64;
    Ok((0..quad_points).map(|j| f.eval(t * ((j as f64 + 0.5) * w).sin())).sum::<f64>() * w)
}

/// Evaluates [`abel_transform`] on every point of `t_grid`.
pub fn abel_trace(f: &RadialProfile, t_grid: &[f64], quad_points: usize) -> Result<TimeTrace> {
    let values = t_grid.iter().map(|&t| abel_transform(f, t, quad_points)).collect::<Result<Vec<_>>>()?;
    Ok(TimeTrace { t_grid: t_grid.to_vec(), values })
}

/// F_x(r) = A_δ h(x, r)·r on knots of spacing min(δ_eval, T/quad_points).
pub fn radial_profile(h: &GridFunction, x: [f64; 2], t_max: f64, delta_eval: f64, quad_points: usize) -> Result<RadialProfile> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidParameter(format!("time horizon must be positive, got {t_max}")));
    }
    let spacing = delta_eval.min(t_max / quad_points.max(1) as f64);
    let n = (t_max / spacing).ceil() as usize + 1;
    let r = uniform_grid(t_max, n)?;
    let avg = average_profile(h, x, &r, delta_eval)?;
    RadialProfile::new(t_max, avg.iter().zip(&r).map(|(a, r)| a * r).collect())
}

/// u(x, t) on `t_grid` from Poisson's formula.
pub fn solve_wave(h: &GridFunction, x: [f64; 2], t_grid: &[f64], delta_eval: f64, quad_points: usize) -> Result<TimeTrace> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidParameter(format!("times must be nonnegative, got {t}")));
    }
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    if t_max == 0.0 {
        return Ok(TimeTrace { t_grid: t_grid.to_vec(), values: vec![0.0; t_grid.len()] });
    }
    let f = radial_profile(h, x, t_max, delta_eval, quad_points)?;
    let mut tr = abel_trace(&f, t_grid, quad_points)?;
    for (t, v) in tr.t_grid.iter().zip(tr.values.iter_mut()) {
        if *t == 0.0 {
            *v = 0.0;
        }
    }
    Ok(tr)
}

/// sup|F| + max_{i≠j} |F(t_i) − F(t_j)| / |t_i − t_j|^β over the trace's
/// grid: a lower bound for the C^β norm on the sampled interval.
pub fn holder_norm(trace: &TimeTrace, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("Hölder exponent must lie in (0, 1], got {beta}")));
    }
    let (t, v) = (&trace.t_grid, &trace.values);
    if t.is_empty() || t.len() != v.len() {
        return Err(Error::InvalidParameter("empty or malformed trace".into()));
    }
    let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut q = 0.0f64;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            let dt = (t[j] - t[i]).abs();
            if dt > 0.0 {
                q = q.max((v[j] - v[i]).abs() / dt.powf(beta));
            }
        }
    }
    Ok(sup + q)
}

/// Radii and weights of the dyadic-block discretization of [0, T]: block
/// k covers [λ_k, 2λ_k] with λ_k = T·2^{-k}, evaluated at thickness
/// max(λ_k·δ_eval, g) and spacing λ_k·δ_eval, down to λ_k ≥ 8g (g = grid
/// scale); the remainder [0, λ_K] is sampled at thickness and spacing g.
pub fn dyadic_blocks(t_max: f64, delta_eval: f64, grid_delta: f64) -> Vec<RadialBlock> {
    let mut blocks = Vec::new();
    let mut lam = t_max / 2.0;
    while lam >= 8.0 * grid_delta {
        let n = (1.0 / delta_eval).round().max(1.0) as usize;
        let step = lam / n as f64;
        blocks.push(RadialBlock {
            radii: (0..n).map(|j| lam + (j as f64 + 0.5) * step).collect(),
            weight: step,
            thickness: (lam * delta_eval).max(grid_delta),
        });
        lam /= 2.0;
    }
    let top = (lam * 2.0).min(t_max);
    let n = (top / grid_delta).floor() as usize;
    if n > 0 {
        let step = top / n as f64;
        blocks.push(RadialBlock { radii: (0..n).map(|j| (j as f64 + 0.5) * step).collect(), weight: step, thickness: grid_delta });
    }
    blocks
}

/// One block of [`dyadic_blocks`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialBlock {
    pub radii: Vec<f64>,
    pub weight: f64,
    pub thickness: f64,
}

fn check_exponents(q: Exponent, s: Exponent) -> Result<()> {
    for e in [q, s] {
        if let Exponent::Finite(v) = e {
            Exponent::finite(v)?;
        }
    }
    Ok(())
}

/// ‖F_x(r)‖_{L^q_x(ν) L^s_r[0,T]} assembled from dyadic blocks of r.
pub fn radial_mixed_norm_0t(
    h: &GridFunction,
    nu: &DiscreteMeasure,
    q: Exponent,
    s: Exponent,
    t_max: f64,
    delta_eval: f64,
    policy: ExecPolicy,
) -> Result<f64> {
    check_exponents(q, s)?;
    if nu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidParameter(format!("time horizon must be positive, got {t_max}")));
    }
    let blocks = dyadic_blocks(t_max, delta_eval, h.spec().delta());
    let centres = nu.centers();
    let inner = policy.try_map(&centres, |&x| -> Result<f64> {
        let mut acc = 0.0f64;
        for b in &blocks {
            let avg = average_profile(h, x, &b.radii, b.thickness)?;
            let f: Vec<f64> = avg.iter().zip(&b.radii).map(|(a, r)| a * r).collect();
            acc = match s {
                Exponent::Infinity => acc.max(inner_norm(&f, s, b.weight)),
                Exponent::Finite(sv) => acc + inner_norm(&f, s, b.weight).powf(sv),
            };
        }
        Ok(match s {
            Exponent::Infinity => acc,
            Exponent::Finite(sv) => acc.powf(1.0 / sv),
        })
    })?;
    let table = ProfileTable::new(inner.len(), 1, inner)?;
    mixed_norm_weighted(&table, nu.weights(), q, Exponent::Finite(1.0), 1.0)
}

/// Box-counting summary of the super-level set {x : ‖u(x,·)‖ > threshold}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCount {
    pub beta: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    pub threshold: f64,
    /// Slope of log N(ε) against log(1/ε); `None` with fewer than three
    /// nonempty box sizes.
    pub box_dim_slope: Option<f64>,
    #[serde(skip)]
    pub counts: Vec<(f64, usize)>,
}

/// Result of [`holder_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct HolderSweep {
    pub points: Vec<[f64; 2]>,
    pub norms: Vec<f64>,
    pub summaries: Vec<BoxCount>,
}

impl HolderSweep {
    /// `x1,x2,holder_norm` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2,holder_norm\n");
        for (p, n) in self.points.iter().zip(&self.norms) {
            s.push_str(&format!("{},{},{}\n", p[0], p[1], n));
        }
        s
    }
}

/// Number of boxes of side `size` (anchored at `origin`) meeting `pts`.
pub fn box_count(pts: &[[f64; 2]], origin: [f64; 2], size: f64) -> usize {
    let set: HashSet<(i64, i64)> = pts
        .iter()
        .map(|p| (((p[0] - origin[0]) / size + 1e-9).floor() as i64, ((p[1] - origin[1]) / size + 1e-9).floor() as i64))
        .collect();
    set.len()
}

/// Spacing of a set of points laid out on a uniform axis-parallel grid.
fn sample_spacing(points: &[[f64; 2]]) -> Result<f64> {
    let mut coords: Vec<f64> = points.iter().flat_map(|p| [p[0], p[1]]).collect();
    coords.sort_by(f64::total_cmp);
    coords.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    coords
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 1e-12)
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))))
        .ok_or_else(|| Error::InvalidParameter("sample points must span a grid with at least two distinct coordinates".into()))
}

/// Hölder norms ‖u(x,·)‖_{C^β[0,T]} at every sample point (traces on
/// `n_times` uniform times), plus a box-counting slope of each
/// super-level set at box sizes spacing·2^j.
#[allow(clippy::too_many_arguments)]
pub fn holder_sweep(
    h: &GridFunction,
    points: &[[f64; 2]],
    beta: f64,
    t_max: f64,
    thresholds: &[f64],
    n_times: usize,
    delta_eval: f64,
    quad_points: usize,
    policy: ExecPolicy,
) -> Result<HolderSweep> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    let t_grid = uniform_grid(t_max, n_times)?;
    let norms = policy.try_map(points, |&x| holder_norm(&solve_wave(h, x, &t_grid, delta_eval, quad_points)?, beta))?;
    let spacing = if points.len() > 1 { sample_spacing(points)? } else { 1.0 };
    let origin = points.iter().fold([f64::INFINITY; 2], |o, p| [o[0].min(p[0]), o[1].min(p[1])]);
    let extent = points.iter().fold(0.0f64, |m, p| m.max(p[0] - origin[0]).max(p[1] - origin[1])).max(spacing);
    let mut summaries = Vec::new();
    for &th in thresholds {
        let sup: Vec<[f64; 2]> = points.iter().zip(&norms).filter(|(_, n)| **n > th).map(|(p, _)| *p).collect();
        let mut counts = Vec::new();
        let mut size = spacing;
        while size <= 2.0 * extent {
            counts.push((size, box_count(&sup, [origin[0] - spacing / 2.0, origin[1] - spacing / 2.0], size)));
            size *= 2.0;
        }
        let nonzero: Vec<&(f64, usize)> = counts.iter().filter(|c| c.1 > 0).collect();
        let box_dim_slope = if nonzero.len() >= 3 {
            let inv: Vec<f64> = nonzero.iter().map(|c| 1.0 / c.0).collect();
            let n: Vec<f64> = nonzero.iter().map(|c| c.1 as f64).collect();
            fit_loglog(&inv, &n).ok().map(|f| f.slope)
        } else {
            None
        };
        summaries.push(BoxCount { beta, t_max, threshold: th, box_dim_slope, counts });
    }
    Ok(HolderSweep { points: points.to_vec(), norms, summaries })
}
