//! The five extremal (f, ν) pairs, the necessary-condition system they
//! witness, the classifier for the (1/q, 1/s) admissible ranges, and seeded
//! random indicator unions used as a generic test family.
//!
//! All examples live on the standard box [-3,3]² with f sampled at δ/8.
//! Examples 2–4 put f near the focal point c = (0, −1.5), so that circles
//! centred in B(0, 1/4) with radius in [1, 2] can pass through it; the
//! measures ν sit in a box around the origin.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cantor::CantorBuilder;
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::geometry::{rasterize_annulus, Annulus, Circle};
use crate::grid::{dyadic_exponent, frostman_constant, measure_from_katz_tao, DiscreteMeasure, GridFunction, GridSpec};
use crate::mixed_norm::{Exponent, NormParams, ProfileTable};

/// Point through which the circles of Examples 2–4 are tangent to f.
pub const FOCUS: [f64; 2] = [0.0, -1.5];

/// Extra refinement of the f grid relative to δ (cells of side δ/8).
pub const F_GRID_EXTRA: u32 = 3;

/// Seed of the Cantor measures used by the examples.
pub const EXAMPLE_SEED: u64 = 0x00A1_7EAD;

/// A configured extremal example at scale δ.
#[derive(Debug, Clone)]
pub struct ExampleConfig {
    pub id: u8,
    pub delta: f64,
    pub alpha: f64,
    pub f: GridFunction,
    pub nu: DiscreteMeasure,
    /// Radius interval over which the inner L^s norm is taken.
    pub r_window: (f64, f64),
}

/// JSON-friendly summary of an [`ExampleConfig`].
#[derive(Debug, Clone, Serialize)]
pub struct ExampleSummary {
    pub id: u8,
    pub delta: f64,
    pub alpha: f64,
    pub f_cells: usize,
    pub f_grid_delta: f64,
    pub nu_support: usize,
    pub nu_mass: f64,
    pub frostman_constant: f64,
    pub r_window: (f64, f64),
    pub predicted_lhs_exponent: f64,
    pub predicted_rhs_exponent: f64,
}

/// Valid α range of each example, as (lo, lo_inclusive, hi).
fn alpha_range(id: u8) -> Result<(f64, bool, f64)> {
    match id {
        1..=3 => Ok((0.0, false, 2.0)),
        4 => Ok((1.0, true, 2.0)),
        5 => Ok((0.0, false, 1.0)),
        _ => Err(Error::InvalidParameter(format!("example id must be in 1..=5, got {id}"))),
    }
}

fn check_alpha(id: u8, alpha: f64) -> Result<()> {
    let (lo, incl, hi) = alpha_range(id)?;
    let ok = (if incl { alpha >= lo } else { alpha > lo }) && alpha <= hi;
    if !ok {
        let open = if incl { '[' } else { '(' };
        return Err(Error::OutOfRange(format!("example {id} requires α ∈ {open}{lo}, {hi}], got {alpha}")));
    }
    Ok(())
}

/// Predicted δ-exponents (LHS, RHS) of example `id`: the mixed norm of
/// A_δ f scales like δ^{LHS} and ‖f‖_p like δ^{RHS}.
pub fn predicted_exponents(id: u8, params: &NormParams) -> Result<(f64, f64)> {
    let a = params.alpha;
    check_alpha(id, a)?;
    let (ip, iq, is) = (params.p.inverse(), params.q.inverse(), params.s.inverse());
    Ok(match id {
        1 => (is + a * iq, ip),
        2 if a >= 1.0 => (0.5 + is + (a - 1.0) * iq / 2.0, 1.5 * ip),
        2 => (0.5 + is, 1.5 * ip),
        3 => (1.0 + is, 2.0 * ip),
        4 => (0.5 + is, (4.0 - a) * ip / 2.0),
        5 => (is, (1.0 - a) * ip),
        _ => unreachable!("id validated by check_alpha"),
    })
}

/// Side of the centred box holding the Cantor measures: 1/2 for α ≤ 1 and
/// 1/8 for α > 1 (keeps #supp ν ≲ 1500 at δ = 2^-9).
pub fn cantor_side(alpha: f64) -> f64 {
    if alpha > 1.0 {
        0.125
    } else {
        0.5
    }
}

fn example_scale(delta: f64) -> Result<u32> {
    match dyadic_exponent(delta) {
        Some(k) if (4..=MAX_EXAMPLE_K).contains(&k) => Ok(k),
        _ => Err(Error::InvalidScale { value: delta, reason: format!("examples need δ = 2^-k with 4 ≤ k ≤ {}", MAX_EXAMPLE_K) }),
    }
}

const MAX_EXAMPLE_K: u32 = GridSpec::MAX_K - F_GRID_EXTRA;

/// Grid on which the examples' measures live: δ-cells of [-1/2, 1/2]².
fn nu_spec(k: u32) -> Result<GridSpec> {
    GridSpec::covering(k, [-0.5, -0.5], [0.5, 0.5])
}

/// Centre of the δ-cell (anchored at the origin) containing `x`.
fn snap(x: f64, delta: f64) -> f64 {
    ((x / delta).floor() + 0.5) * delta
}

/// Cantor measure of dimension α in the centred box of side
/// [`cantor_side`], with mass δ^α on each surviving δ-cell.
pub fn cantor_measure(alpha: f64, delta: f64, seed: u64, anchor: Option<[f64; 2]>) -> Result<DiscreteMeasure> {
    let mut b = CantorBuilder::centered(alpha, seed, cantor_side(alpha));
    if let Some(p) = anchor {
        b = b.with_anchor(p);
    }
    let x = b.build(delta)?;
    measure_from_katz_tao(x.points(), delta, delta.powf(alpha))
}

/// Measure of density `density` on the δ-cells whose centres lie in the
/// union of vertical strips |x − x_i| ≤ √δ/2, |y| ≤ 1/4.
fn strip_measure(k: u32, delta: f64, xs: &[f64], density: f64) -> Result<DiscreteMeasure> {
    let spec = nu_spec(k)?;
    let half = delta.sqrt() / 2.0;
    let mass = density * delta * delta;
    let mut cells = Vec::new();
    for j in 0..spec.ny() {
        let cy = spec.cell_center(0, j)[1];
        if cy.abs() > 0.25 {
            continue;
        }
        for i in 0..spec.nx() {
            let cx = spec.cell_center(i, 0)[0];
            if xs.iter().any(|&x0| (cx - x0).abs() <= half) {
                cells.push(((i, j), mass));
            }
        }
    }
    DiscreteMeasure::new(spec, cells)
}

/// Indicator of the axis-parallel box of half-sizes (hw, hh) centred at `c`,
/// as row intervals of `spec`.
fn box_intervals(spec: &GridSpec, c: [f64; 2], hw: f64, hh: f64) -> Result<Vec<(usize, usize, usize)>> {
    let l = spec.lattice();
    let i0 = ((c[0] - hw - l.ox) / l.h - 0.5).ceil();
    let i1 = ((c[0] + hw - l.ox) / l.h - 0.5).floor();
    let j0 = ((c[1] - hh - l.oy) / l.h - 0.5).ceil();
    let j1 = ((c[1] + hh - l.oy) / l.h - 0.5).floor();
    if i0 < 0.0 || j0 < 0.0 || i1 >= l.nx as f64 || j1 >= l.ny as f64 {
        return Err(Error::OutOfExtent(format!("box at ({:.4},{:.4}) leaves the grid", c[0], c[1])));
    }
    if i1 < i0 || j1 < j0 {
        return Ok(Vec::new());
    }
    Ok((j0 as usize..=j1 as usize).map(|j| (j, i0 as usize, i1 as usize)).collect())
}

fn annulus_intervals(spec: &GridSpec, c: [f64; 2], r: f64, delta: f64) -> Result<Vec<(usize, usize, usize)>> {
    let a = Annulus::new(Circle::new(c, r)?, delta)?;
    Ok(rasterize_annulus(&a, spec)?.into_iter().map(|s| (s.j, s.i0, s.i1)).collect())
}

/// Horizontal positions of Example 4's rectangles: spacing
/// σ = δ^{(α−1)/2}/2, ⌊1/(2σ)⌋ of them, centred on 0.
pub fn example4_positions(delta: f64, alpha: f64) -> Vec<f64> {
    let sigma = 0.5 * delta.powf((alpha - 1.0) / 2.0);
    let n = ((0.5 / sigma).floor() as usize).max(1);
    (0..n).map(|i| (i as f64 - (n as f64 - 1.0) / 2.0) * sigma).collect()
}

/// Centres of Example 5's balls: (iδ^α, 0) with |iδ^α| ≤ 1/4, snapped to
/// δ-cell centres.
pub fn example5_centres(delta: f64, alpha: f64) -> Vec<[f64; 2]> {
    let step = delta.powf(alpha);
    let n = (0.25 / step).floor() as i64;
    let mut out: Vec<[f64; 2]> = (-n..=n).map(|i| [snap(i as f64 * step, delta), snap(0.0, delta)]).collect();
    out.dedup();
    out
}

/// Builds example `id` at scale δ = 2^-k (4 ≤ k ≤ 27) and dimension α.
pub fn build_example(id: u8, delta: f64, alpha: f64) -> Result<ExampleConfig> {
    check_alpha(id, alpha)?;
    let k = example_scale(delta)?;
    let fspec = GridSpec::standard(k + F_GRID_EXTRA)?;
    let rect = |spec: &GridSpec, x0: f64| box_intervals(spec, [x0, FOCUS[1]], delta.sqrt() / 2.0, delta / 2.0);
    let strip_density = if alpha >= 1.0 { delta.powf(alpha / 2.0 - 1.0) } else { delta.powf(-0.5) };
    let (f, nu) = match id {
        1 => {
            let f = GridFunction::from_row_intervals(fspec, annulus_intervals(&fspec, [0.0, 0.0], 1.0, delta)?, 1.0)?;
            (f, cantor_measure(alpha, delta, EXAMPLE_SEED, Some([0.0, 0.0]))?)
        }
        2 => {
            let f = GridFunction::from_row_intervals(fspec, rect(&fspec, FOCUS[0])?, 1.0)?;
            (f, strip_measure(k, delta, &[FOCUS[0]], strip_density)?)
        }
        3 => {
            let ball = GridFunction::from_fn(fspec, [FOCUS[0] - delta, FOCUS[1] - delta], [FOCUS[0] + delta, FOCUS[1] + delta], |p| {
                let (dx, dy) = (p[0] - FOCUS[0], p[1] - FOCUS[1]);
                if dx * dx + dy * dy <= delta * delta {
                    1.0
                } else {
                    0.0
                }
            })?;
            (ball, cantor_measure(alpha, delta, EXAMPLE_SEED, None)?)
        }
        4 => {
            let xs = example4_positions(delta, alpha);
            let mut iv = Vec::new();
            for &x0 in &xs {
                iv.extend(rect(&fspec, x0)?);
            }
            let f = GridFunction::from_row_intervals(fspec, iv, 1.0)?;
            (f, strip_measure(k, delta, &xs, delta.powf(alpha / 2.0 - 1.0))?)
        }
        5 => {
            let cs = example5_centres(delta, alpha);
            let mut iv = Vec::new();
            for &c in &cs {
                iv.extend(annulus_intervals(&fspec, c, 1.0, delta)?);
            }
            let f = GridFunction::from_row_intervals(fspec, iv, 1.0)?;
            let spec = nu_spec(k)?;
            let cells = cs
                .iter()
                .map(|&c| spec.cell_of(c).map(|ij| (ij, delta.powf(alpha))).ok_or_else(|| Error::OutOfExtent(format!("{c:?}"))))
                .collect::<Result<Vec<_>>>()?;
            (f, DiscreteMeasure::new(spec, cells)?)
        }
        _ => unreachable!("id validated by check_alpha"),
    };
    Ok(ExampleConfig { id, delta, alpha, f, nu, r_window: (1.0, 2.0) })
}

impl ExampleConfig {
    /// Predicted exponent of ‖A_δ f‖_{L^q(ν)L^s(I)}.
    pub fn predicted_lhs_exponent(&self, q: Exponent, s: Exponent) -> f64 {
        let params = NormParams { p: Exponent::Finite(1.0), q, s, alpha: self.alpha };
        predicted_exponents(self.id, &params).map(|e| e.0).unwrap_or(f64::NAN)
    }

    /// Predicted exponent of ‖f‖_p.
    pub fn predicted_rhs_exponent(&self, p: Exponent) -> f64 {
        let params = NormParams { p, q: Exponent::Finite(1.0), s: Exponent::Finite(1.0), alpha: self.alpha };
        predicted_exponents(self.id, &params).map(|e| e.1).unwrap_or(f64::NAN)
    }

    /// Radii at which the inner norm is sampled: midpoints of δ-steps
    /// across the radius window.
    pub fn radii(&self) -> Vec<f64> {
        let (a, b) = self.r_window;
        let n = ((b - a) / self.delta).round().max(1.0) as usize;
        (0..n).map(|k| a + (k as f64 + 0.5) * self.delta).collect()
    }

    /// Table of A_δ f over supp ν × radii; reusable across (q, s).
    pub fn profile_table(&self, policy: ExecPolicy) -> Result<ProfileTable> {
        crate::averaging::average_table(&self.f, &self.nu.centers(), &self.radii(), self.delta, policy)
    }

    /// ‖A_δ f‖_{L^q(ν)L^s(r_window)}.
    pub fn lhs(&self, q: Exponent, s: Exponent, policy: ExecPolicy) -> Result<f64> {
        crate::mixed_norm::mixed_norm(&self.profile_table(policy)?, &self.nu, q, s, self.delta)
    }

    /// ⟨ν⟩_α^{1/q} · ‖f‖_p.
    pub fn rhs(&self, p: Exponent, q: Exponent) -> Result<f64> {
        Ok(frostman_constant(&self.nu, self.alpha)?.powf(q.inverse()) * self.f.lp_norm(p))
    }

    pub fn summary(&self, params: &NormParams) -> Result<ExampleSummary> {
        let (lhs_e, rhs_e) = predicted_exponents(self.id, params)?;
        Ok(ExampleSummary {
            id: self.id,
            delta: self.delta,
            alpha: self.alpha,
            f_cells: self.f.nnz(),
            f_grid_delta: self.f.spec().delta(),
            nu_support: self.nu.len(),
            nu_mass: self.nu.total_mass(),
            frostman_constant: frostman_constant(&self.nu, self.alpha)?,
            r_window: self.r_window,
            predicted_lhs_exponent: lhs_e,
            predicted_rhs_exponent: rhs_e,
        })
    }
}

/// Slack used when evaluating the inequality system.
pub const CONDITION_TOL: f64 = 1e-12;

/// Margins (LHS − RHS) of the five necessary conditions, `None` where the
/// condition is gated out by α:
/// (i) 1/s + α/q ≥ 1/p; (ii) 1 + 2/s + max{0, α−1}/q ≥ 3/p;
/// (iii) 1 + 1/s ≥ 2/p; (iv, α ∈ [1,2]) 1 + 2/s ≥ (4−α)/p;
/// (v, α ∈ (0,1]) 1/s ≥ (1−α)/p.
pub fn necessary_margins(params: &NormParams) -> [Option<f64>; 5] {
    let a = params.alpha;
    let (ip, iq, is) = (params.p.inverse(), params.q.inverse(), params.s.inverse());
    [
        Some(is + a * iq - ip),
        Some(1.0 + 2.0 * is + (a - 1.0).max(0.0) * iq - 3.0 * ip),
        Some(1.0 + is - 2.0 * ip),
        (1.0..=2.0).contains(&a).then_some(1.0 + 2.0 * is - (4.0 - a) * ip),
        (a > 0.0 && a <= 1.0).then_some(is - (1.0 - a) * ip),
    ]
}

/// The five necessary conditions; gated-out conditions report `true`.
pub fn necessary_conditions(params: &NormParams) -> [bool; 5] {
    necessary_margins(params).map(|m| m.map_or(true, |v| v >= -CONDITION_TOL))
}

/// Classification of a point (1/q, 1/s) of the admissible-range figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// Covered by the proved estimate (including solid boundary pieces).
    Proved,
    /// Not covered by the proof but not excluded by any necessary condition.
    ConjecturedOnly,
    /// Violates a necessary condition or lies outside [0,1]².
    Excluded,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Region::Proved => "proved",
            Region::ConjecturedOnly => "conjectured-only",
            Region::Excluded => "excluded",
        })
    }
}

/// Named vertices of the figure for the given (p, α).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionVertices {
    pub p: f64,
    pub alpha: f64,
    /// Lower boundary of the proved region from x = 0 to x = 1.
    pub boundary: Vec<[f64; 2]>,
    pub vertices: Vec<(String, [f64; 2])>,
}

fn p_value(p: Exponent) -> Option<u8> {
    match p {
        Exponent::Finite(v) if (v - 2.0).abs() < 1e-12 => Some(2),
        Exponent::Finite(v) if (v - 3.0).abs() < 1e-12 => Some(3),
        _ => None,
    }
}

/// Vertices and proved-region boundary for p = 3, α ∈ (0,1] or p = 2, α ∈ (1,2].
pub fn region_vertices(p: Exponent, alpha: f64) -> Result<RegionVertices> {
    let pv = p_value(p).ok_or_else(|| Error::OutOfRange(format!("admissible ranges are tabulated for p ∈ {{2, 3}}, got p = {p}")))?;
    let a = alpha;
    match pv {
        3 => {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::OutOfRange(format!("p = 3 requires α ∈ (0, 1], got {a}")));
            }
            let pt = [1.0 / 3.0, (1.0 - a) / 3.0];
            let h = 1.0 / (3.0 * a + 3.0);
            let mut vertices = vec![("P".to_string(), pt), ("H".to_string(), [h, h]), ("O2".to_string(), pt)];
            if a > 0.5 {
                vertices.push(("O1".to_string(), [1.0 / (3.0 * a), 1.0 / 6.0]));
            }
            Ok(RegionVertices { p: 3.0, alpha: a, boundary: vec![[0.0, 1.0 / 3.0], pt, [1.0, pt[1]]], vertices })
        }
        _ => {
            if !(a > 1.0 && a <= 2.0) {
                return Err(Error::OutOfRange(format!("p = 2 requires α ∈ (1, 2], got {a}")));
            }
            let pt = [0.5, (2.0 - a) / 2.0];
            let h = [1.0 / (4.0 * a - 2.0); 2];
            let o = [1.0 / (2.0 * a), 0.25];
            let q1 = [0.5, (2.0 - a) / 4.0];
            let q2 = [1.0 / (2.0 * a + 2.0); 2];
            let boundary = if a <= 4.0 / 3.0 {
                vec![[0.0, 0.5], o, [1.0, 0.25]]
            } else if a <= 1.5 {
                vec![[0.0, 0.5], h, o, [1.0, 0.25]]
            } else {
                vec![[0.0, 0.5], h, pt, [1.0, pt[1]]]
            };
            let vertices =
                vec![("P".to_string(), pt), ("H".to_string(), h), ("O".to_string(), o), ("Q1".to_string(), q1), ("Q2".to_string(), q2)];
            Ok(RegionVertices { p: 2.0, alpha: a, boundary, vertices })
        }
    }
}

/// Height of a piecewise-linear boundary at abscissa x ∈ [0, 1].
fn polyline_at(poly: &[[f64; 2]], x: f64) -> f64 {
    for w in poly.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x >= a[0] && x <= b[0] {
            if b[0] == a[0] {
                return a[1].max(b[1]);
            }
            return a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0]);
        }
    }
    poly.last().map_or(0.0, |p| p[1])
}

/// Classifies (1/q, 1/s) against the figure for the given (p, α).
///
/// The proved region is the open region strictly above the boundary
/// polyline together with its solid edges: the segment x = 0 above the
/// starting vertex, the top edge y = 1, and the right edge x = 1 strictly
/// above the final (open) vertex. Everything else satisfying all necessary
/// conditions is conjectured-only.
pub fn admissible_region(p: Exponent, alpha: f64, q_inv: f64, s_inv: f64) -> Result<Region> {
    let rv = region_vertices(p, alpha)?;
    let (x, y) = (q_inv, s_inv);
    if !(x.is_finite() && y.is_finite()) || !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Ok(Region::Excluded);
    }
    let eps = 1e-12;
    let start = rv.boundary[0][1];
    let end = rv.boundary.last().unwrap()[1];
    let proved = if x <= eps {
        y >= start - eps
    } else if x >= 1.0 - eps {
        y > end + eps
    } else {
        y >= 1.0 - eps || y > polyline_at(&rv.boundary, x) + eps
    };
    if proved {
        return Ok(Region::Proved);
    }
    let params = NormParams { p, q: Exponent::from_inverse(x.max(0.0))?, s: Exponent::from_inverse(y.max(0.0))?, alpha };
    Ok(if necessary_conditions(&params).iter().all(|&b| b) { Region::ConjecturedOnly } else { Region::Excluded })
}

/// Seeded union of indicator pieces on the standard box at grid scale δ/4:
/// up to four annuli S_δ(x, r) with x ∈ B(0, 1/4), r ∈ [1, 2], and
/// √δ × δ rectangles (horizontal or vertical) centred in [−2, 2]². The
/// geometry depends on the seed only, so sweeps over δ shrink the same
/// configuration.
pub fn random_union(delta: f64, pieces: usize, seed: u64) -> Result<GridFunction> {
    let k = example_scale(delta)?;
    if pieces == 0 || pieces > 64 {
        return Err(Error::InvalidParameter(format!("piece count must be in 1..=64, got {pieces}")));
    }
    let spec = GridSpec::standard(k + 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut intervals = Vec::new();
    let mut annuli = 0;
    for n in 0..pieces {
        let annulus = (n == 0 || rng.gen_bool(0.25)) && annuli < 4;
        if annulus {
            annuli += 1;
            let rho = 0.25 * rng.gen::<f64>().sqrt();
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = rng.gen_range(1.0..=2.0);
            intervals.extend(annulus_intervals(&spec, [rho * th.cos(), rho * th.sin()], r, delta)?);
        } else {
            let c = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let (hw, hh) = if rng.gen_bool(0.5) { (delta.sqrt() / 2.0, delta / 2.0) } else { (delta / 2.0, delta.sqrt() / 2.0) };
            intervals.extend(box_intervals(&spec, c, hw, hh)?);
        }
    }
    GridFunction::from_row_intervals(spec, intervals, 1.0)
}
