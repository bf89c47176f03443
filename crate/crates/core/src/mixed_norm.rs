//! Weighted mixed norms L^q_x(ν)(L^s_r), the multiplicity grid behind the
//! duality argument, and the right-hand side of the discretized estimate.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::geometry::{check_shell_extent, shell_area, shell_row_spans, Shell};
use crate::grid::{DiscreteMeasure, GridSpec};
use crate::slicing::CircleFamily;

/// A Lebesgue exponent in [1, ∞]. ∞ is a first-class value with sup
/// semantics rather than a large finite surrogate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    /// A finite exponent ≥ 1.
    pub fn finite(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("exponent must lie in [1,∞], got {p}")));
        }
        Ok(Exponent::Finite(p))
    }

    /// The exponent whose reciprocal is `inv ∈ [0,1]` (0 ↦ ∞).
    pub fn from_inverse(inv: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&inv) {
            return Err(Error::InvalidParameter(format!("reciprocal exponent must lie in [0,1], got {inv}")));
        }
        Ok(if inv == 0.0 { Exponent::Infinity } else { Exponent::Finite(1.0 / inv) })
    }

    /// 1/p with 1/∞ = 0.
    pub fn inverse(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    /// Hölder conjugate p' with 1/p + 1/p' = 1.
    pub fn conjugate(self) -> Self {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(1.0) => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if matches!(t, "inf" | "infinity" | "∞") {
            return Ok(Exponent::Infinity);
        }
        let v: f64 = match t.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.trim().parse().map_err(|_| Error::Parse(format!("bad exponent '{s}'")))?;
                let b: f64 = b.trim().parse().map_err(|_| Error::Parse(format!("bad exponent '{s}'")))?;
                a / b
            }
            None => t.parse().map_err(|_| Error::Parse(format!("bad exponent '{s}'")))?,
        };
        Exponent::finite(v)
    }
}

/// Exponents (p, q, s) and dimension α of a mixed-norm estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParams {
    pub p: Exponent,
    pub q: Exponent,
    pub s: Exponent,
    pub alpha: f64,
}

impl NormParams {
    pub fn new(p: Exponent, q: Exponent, s: Exponent, alpha: f64) -> Result<Self> {
        for e in [p, q, s] {
            if let Exponent::Finite(v) = e {
                Exponent::finite(v)?;
            }
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(Self { p, q, s, alpha })
    }

    /// Convenience constructor for finite exponents.
    pub fn finite(p: f64, q: f64, s: f64, alpha: f64) -> Result<Self> {
        Self::new(Exponent::finite(p)?, Exponent::finite(q)?, Exponent::finite(s)?, alpha)
    }
}

/// A nonnegative table F(x, r): one row per point, one column per radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    n_points: usize,
    n_radii: usize,
    values: Vec<f64>,
}

impl ProfileTable {
    pub fn new(n_points: usize, n_radii: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_points * n_radii {
            return Err(Error::InvalidParameter(format!("table of {} values does not match {n_points}×{n_radii}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Negative(*v));
        }
        Ok(Self { n_points, n_radii, values })
    }

    /// Build from one row per point.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_points = rows.len();
        let n_radii = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_radii) {
            return Err(Error::InvalidParameter("ragged profile table".into()));
        }
        Self::new(n_points, n_radii, rows.concat())
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_radii(&self) -> usize {
        self.n_radii
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.values[x * self.n_radii..(x + 1) * self.n_radii]
    }

    pub fn get(&self, x: usize, r: usize) -> f64 {
        self.values[x * self.n_radii + r]
    }
}

/// L^s norm of a sampled r-profile with Riemann weight `r_weight`.
pub fn inner_norm(row: &[f64], s: Exponent, r_weight: f64) -> f64 {
    match s {
        Exponent::Infinity => row.iter().cloned().fold(0.0, f64::max),
        Exponent::Finite(s) => (row.iter().map(|v| v.powf(s)).sum::<f64>() * r_weight).powf(1.0 / s),
    }
}

/// ( Σ_x ν(x) ( Σ_r F(x,r)^s · w )^{q/s} )^{1/q}, with sup semantics for
/// s = ∞ or q = ∞. Row `x` of the table belongs to the `x`-th supported cell
/// of `nu` (in [`DiscreteMeasure::centers`] order).
pub fn mixed_norm(table: &ProfileTable, nu: &DiscreteMeasure, q: Exponent, s: Exponent, r_weight: f64) -> Result<f64> {
    mixed_norm_weighted(table, nu.weights(), q, s, r_weight)
}

/// [`mixed_norm`] against explicit point weights.
pub fn mixed_norm_weighted(table: &ProfileTable, weights: &[f64], q: Exponent, s: Exponent, r_weight: f64) -> Result<f64> {
    if weights.len() != table.n_points {
        return Err(Error::InvalidParameter(format!("{} weights for a table with {} points", weights.len(), table.n_points)));
    }
    if !(r_weight > 0.0) {
        return Err(Error::InvalidParameter(format!("radial weight must be positive, got {r_weight}")));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::Negative(*w));
    }
    let inner: Vec<f64> = (0..table.n_points).map(|x| inner_norm(table.row(x), s, r_weight)).collect();
    Ok(match q {
        Exponent::Infinity => inner.iter().zip(weights).filter(|(_, &w)| w > 0.0).map(|(v, _)| *v).fold(0.0, f64::max),
        Exponent::Finite(q) => inner.iter().zip(weights).map(|(v, w)| w * v.powf(q)).sum::<f64>().powf(1.0 / q),
    })
}

/// Per-cell count of how many annuli of a family cover the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicityGrid {
    spec: GridSpec,
    counts: Vec<u32>,
}

impl MultiplicityGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Row-major counts (`j * nx + i`).
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// (Σ mult^p · cell area)^{1/p}, or the largest multiplicity for p = ∞.
    pub fn lp_norm(&self, p: Exponent) -> f64 {
        match p {
            Exponent::Infinity => self.counts.iter().copied().max().unwrap_or(0) as f64,
            Exponent::Finite(p) => {
                let hist = self.histogram();
                let s: f64 = hist.iter().enumerate().map(|(m, &n)| n as f64 * (m as f64).powf(p)).sum();
                (s * self.spec.cell_area()).powf(1.0 / p)
            }
        }
    }

    /// `hist[m]` = number of cells covered exactly `m` times.
    pub fn histogram(&self) -> Vec<u64> {
        let max = self.counts.iter().copied().max().unwrap_or(0) as usize;
        let mut h = vec![0u64; max + 1];
        for &c in &self.counts {
            h[c as usize] += 1;
        }
        h
    }
}

/// Rasterizes Σ_i Σ_j χ_{S_{10δ}(x_i, r_j)} on `spec`.
pub fn multiplicity_grid(family: &CircleFamily, spec: &GridSpec, policy: ExecPolicy) -> Result<MultiplicityGrid> {
    let delta = family.base().delta();
    let shells: Vec<Shell> = family.circles().map(|(c, r)| Shell::new(c, r, 10.0 * delta)).collect();
    let lat = spec.lattice();
    for s in &shells {
        if !check_shell_extent(s, &lat)? {
            return Err(Error::OutOfExtent(format!("annulus at ({:.4},{:.4}) radius {:.4} misses the grid", s.c[0], s.c[1], s.r)));
        }
    }
    let nx = lat.nx;
    // One chunk per worker, each with a private per-row difference array;
    // chunks are merged by integer addition, so the partition cannot change the result.
    let chunk = shells.len().div_ceil(policy.workers()).max(1);
    let batches: Vec<&[Shell]> = shells.chunks(chunk).collect();
    let partial = policy.map(&batches, |batch| {
        let mut diff = vec![0i32; lat.ny * (nx + 1)];
        for s in batch.iter() {
            for sp in shell_row_spans(s, &lat) {
                diff[sp.j * (nx + 1) + sp.i0] += 1;
                diff[sp.j * (nx + 1) + sp.i1 + 1] -= 1;
            }
        }
        diff
    });
    let mut diff = vec![0i32; lat.ny * (nx + 1)];
    for p in partial {
        diff.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    let mut counts = vec![0u32; lat.ny * nx];
    for j in 0..lat.ny {
        let mut acc = 0i32;
        for i in 0..nx {
            acc += diff[j * (nx + 1) + i];
            counts[j * nx + i] = acc as u32;
        }
    }
    Ok(MultiplicityGrid { spec: *spec, counts })
}

/// ‖Σ_i Σ_j χ_{S_{10δ}(x_i, r_j)}‖_{L^{p'}} on the grid `spec`.
pub fn dual_counting_norm(family: &CircleFamily, pprime: Exponent, spec: &GridSpec) -> Result<f64> {
    Ok(multiplicity_grid(family, spec, ExecPolicy::default())?.lp_norm(pprime))
}

/// Grid of cell side 2^{-k} whose extent contains every annulus
/// S_{10δ}(x_i, r_j) of the family, with a margin of one thickness plus one
/// cell on each side.
pub fn family_grid(family: &CircleFamily, k: u32) -> Result<GridSpec> {
    let pad = 10.0 * family.base().delta() + crate::grid::dyadic(k);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for (c, r) in family.circles() {
        for a in 0..2 {
            lo[a] = lo[a].min(c[a] - r - pad);
            hi[a] = hi[a].max(c[a] + r + pad);
        }
    }
    if !lo[0].is_finite() {
        return Err(Error::InvalidParameter("empty circle family".into()));
    }
    // Snap the corner to the lattice so cell boundaries stay dyadic.
    let d = crate::grid::dyadic(k);
    GridSpec::covering(k, [(lo[0] / d).floor() * d, (lo[1] / d).floor() * d], hi)
}

/// Exact total area Σ_i Σ_j |S_{10δ}(x_i, r_j)| of a family.
pub fn family_shell_area(family: &CircleFamily) -> f64 {
    let d = 10.0 * family.base().delta();
    family.circles().map(|(_, r)| shell_area(r, d)).sum()
}

/// (mδ)^{1/s'} δ^{−α/q} (#X)^{1/q'}.
pub fn theorem_rhs(params: &NormParams, delta: f64, m: usize, count_x: usize) -> Result<f64> {
    if m == 0 || count_x == 0 {
        return Err(Error::InvalidParameter("m and #X must be at least 1".into()));
    }
    let s_conj_inv = params.s.conjugate().inverse();
    let q_conj_inv = params.q.conjugate().inverse();
    Ok((m as f64 * delta).powf(s_conj_inv) * delta.powf(-params.alpha * params.q.inverse()) * (count_x as f64).powf(q_conj_inv))
}
