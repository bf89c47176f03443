//! Dyadic grids, grid functions, discrete measures, and the two
//! non-concentration constants that quantify fractal dimension at scale δ:
//! the Frostman constant ⟨μ⟩_α of a measure and the Katz–Tao constant of a
//! δ-separated point set.
//!
//! Both constants are suprema over balls. They are evaluated over the balls
//! centred at support points with dyadic radii δ, 2δ, …, 1. The true
//! supremum over all centres and all radii ρ ≤ 1 is at most 2^{α+1} times the
//! returned value: any ball B(x,ρ) that meets the support is contained in a
//! ball around a support point whose radius is the next dyadic radius above
//! 2ρ, which costs a factor ≤ 2 in the radius and ≤ 2^α in ρ^α.

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::mixed_norm::Exponent;

/// Exact dyadic scale 2^{-k}.
pub fn dyadic(k: u32) -> f64 {
    2f64.powi(-(k as i32))
}

/// Returns `k` if `delta == 2^{-k}` exactly for some `k ≥ 1`.
pub fn dyadic_exponent(delta: f64) -> Option<u32> {
    if !(delta > 0.0 && delta < 1.0) {
        return None;
    }
    let k = (-delta.log2()).round();
    if !(1.0..=60.0).contains(&k) {
        return None;
    }
    let k = k as u32;
    (dyadic(k) == delta).then_some(k)
}

/// Closed-ball membership shared by every ball-counting routine (and by the
/// brute-force oracles in the tests), so that boundary decisions agree.
#[inline]
pub fn in_ball(dx: f64, dy: f64, rho: f64) -> bool {
    dx * dx + dy * dy <= rho * rho * (1.0 + 1e-12)
}

/// A uniform lattice of cell centres `origin + (i + ½) h`. This is the
/// geometry of a [`GridSpec`] without the dyadic restriction on `h`; the
/// rasterizers also use it at sub-cell resolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub ox: f64,
    pub oy: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Lattice {
    #[inline]
    pub fn cx(&self, i: usize) -> f64 {
        self.ox + (i as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn cy(&self, j: usize) -> f64 {
        self.oy + (j as f64 + 0.5) * self.h
    }

    /// Upper-right corner of the covered box.
    pub fn hi(&self) -> [f64; 2] {
        [self.ox + self.nx as f64 * self.h, self.oy + self.ny as f64 * self.h]
    }
}

/// A dyadic δ-lattice on an axis-parallel box: cells of side δ = 2^{-k}
/// starting at `origin`, `nx × ny` of them. Cell `(i, j)` has centre
/// `origin + ((i+½)δ, (j+½)δ)`; `i` runs along x, `j` along y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    k: u32,
    origin: [f64; 2],
    nx: usize,
    ny: usize,
}

impl GridSpec {
    /// Largest supported dyadic exponent.
    pub const MAX_K: u32 = 30;

    /// Build a grid with cell side 2^{-k}.
    pub fn new(k: u32, origin: [f64; 2], nx: usize, ny: usize) -> Result<Self> {
        if k == 0 || k > Self::MAX_K {
            return Err(Error::InvalidScale {
                value: dyadic(k.min(62)),
                reason: format!("grid exponent k must lie in 1..={}", Self::MAX_K),
            });
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter("grid extent must be positive".into()));
        }
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(Error::InvalidParameter("grid origin must be finite".into()));
        }
        Ok(Self { k, origin, nx, ny })
    }

    /// Smallest grid with cell side 2^{-k} and lower-left corner `lo` whose
    /// cells cover the box `[lo, hi]`.
    pub fn covering(k: u32, lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        let d = dyadic(k);
        let nx = ((hi[0] - lo[0]) / d).ceil().max(1.0) as usize;
        let ny = ((hi[1] - lo[1]) / d).ceil().max(1.0) as usize;
        Self::new(k, lo, nx, ny)
    }

    /// The default box [-3,3]², which contains every annulus S_δ(x,r) with
    /// x ∈ B(0,1/4), r ∈ [1,2] and δ ≤ 1/2.
    pub fn standard(k: u32) -> Result<Self> {
        Self::covering(k, [-3.0, -3.0], [3.0, 3.0])
    }

    /// Same box, cell side divided by 2^{extra}.
    pub fn refined(&self, extra: u32) -> Result<Self> {
        let f = 1usize << extra;
        Self::new(self.k + extra, self.origin, self.nx * f, self.ny * f)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Cell side δ = 2^{-k}.
    pub fn delta(&self) -> f64 {
        dyadic(self.k)
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        let d = self.delta();
        d * d
    }

    /// Lower-left and upper-right corners of the covered box.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        (self.origin, self.lattice().hi())
    }

    pub fn lattice(&self) -> Lattice {
        Lattice { ox: self.origin[0], oy: self.origin[1], h: self.delta(), nx: self.nx, ny: self.ny }
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        let l = self.lattice();
        [l.cx(i), l.cy(j)]
    }

    /// Cell containing `p` (half-open cells), if inside the grid.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let d = self.delta();
        let fi = ((p[0] - self.origin[0]) / d).floor();
        let fj = ((p[1] - self.origin[1]) / d).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// Whether the closed box `[lo, hi]` lies inside the grid.
    pub fn contains_box(&self, lo: [f64; 2], hi: [f64; 2]) -> bool {
        let (a, b) = self.bounds();
        lo[0] >= a[0] && lo[1] >= a[1] && hi[0] <= b[0] && hi[1] <= b[1]
    }
}

/// How duplicate cells are merged when building a [`GridFunction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    /// Keep the larger value (indicator unions).
    Max,
    /// Add the values.
    Sum,
}

/// A nonnegative function on the cells of a [`GridSpec`]: a uniform
/// background value plus a sparse, row-compressed set of extra values.
///
/// Fine grids over [-3,3]² have up to ~10^9 cells, while the functions of
/// interest (annuli, rectangles, small balls) occupy a tiny fraction of them,
/// so the sparse part is stored in CSR form with per-row prefix sums. Cell
/// value = `background + extra`.
#[derive(Debug, Clone)]
pub struct GridFunction {
    spec: GridSpec,
    background: f64,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    cum: Vec<f64>,
}

impl GridFunction {
    /// The zero function.
    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, background: 0.0, row_ptr: vec![0; spec.ny + 1], cols: Vec::new(), vals: Vec::new(), cum: Vec::new() }
    }

    /// The constant function `c` on the whole grid.
    pub fn constant(spec: GridSpec, c: f64) -> Result<Self> {
        check_nonneg(c)?;
        let mut f = Self::zeros(spec);
        f.background = c;
        Ok(f)
    }

    /// Build from `(i, j, value)` entries. Zero entries are dropped.
    pub fn from_cells(spec: GridSpec, mut entries: Vec<(usize, usize, f64)>, combine: Combine) -> Result<Self> {
        for &(i, j, v) in &entries {
            check_nonneg(v)?;
            if i >= spec.nx || j >= spec.ny {
                return Err(Error::OutOfExtent(format!("cell ({i},{j}) outside {}x{} grid", spec.nx, spec.ny)));
            }
        }
        entries.sort_by_key(|e| (e.1, e.0));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if last.0 == e.0 && last.1 == e.1 => {
                    last.2 = match combine {
                        Combine::Max => last.2.max(e.2),
                        Combine::Sum => last.2 + e.2,
                    }
                }
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.2 > 0.0);
        Ok(Self::from_sorted(spec, merged))
    }

    /// Indicator (times `value`) of a union of row intervals
    /// `(j, i_start, i_end_inclusive)`. Overlaps are merged, so the result is
    /// `value · χ_union`.
    pub fn from_row_intervals(spec: GridSpec, mut intervals: Vec<(usize, usize, usize)>, value: f64) -> Result<Self> {
        check_nonneg(value)?;
        if value == 0.0 {
            return Ok(Self::zeros(spec));
        }
        for &(j, a, b) in &intervals {
            if j >= spec.ny || b >= spec.nx || a > b {
                return Err(Error::OutOfExtent(format!("row interval ({j},{a},{b}) outside {}x{} grid", spec.nx, spec.ny)));
            }
        }
        intervals.sort_unstable();
        let mut entries = Vec::new();
        let mut idx = 0;
        while idx < intervals.len() {
            let j = intervals[idx].0;
            let (mut a, mut b) = (intervals[idx].1, intervals[idx].2);
            idx += 1;
            loop {
                let next = intervals.get(idx).filter(|n| n.0 == j).copied();
                match next {
                    Some((_, na, nb)) if na <= b + 1 => {
                        b = b.max(nb);
                        idx += 1;
                    }
                    _ => {
                        entries.extend((a..=b).map(|i| (i, j, value)));
                        match next {
                            Some((_, na, nb)) => {
                                a = na;
                                b = nb;
                                idx += 1;
                            }
                            None => break,
                        }
                    }
                }
            }
        }
        Ok(Self::from_sorted(spec, entries))
    }

    /// Sample `g` at the centres of all cells whose centres lie in the box
    /// `[lo, hi]`; cells outside the box are zero.
    pub fn from_fn<G: Fn([f64; 2]) -> f64>(spec: GridSpec, lo: [f64; 2], hi: [f64; 2], g: G) -> Result<Self> {
        let l = spec.lattice();
        let i0 = (((lo[0] - l.ox) / l.h) - 0.5).ceil().max(0.0) as usize;
        let j0 = (((lo[1] - l.oy) / l.h) - 0.5).ceil().max(0.0) as usize;
        let i1 = ((((hi[0] - l.ox) / l.h) - 0.5).floor()).min(l.nx as f64 - 1.0);
        let j1 = ((((hi[1] - l.oy) / l.h) - 0.5).floor()).min(l.ny as f64 - 1.0);
        if i1 < 0.0 || j1 < 0.0 {
            return Ok(Self::zeros(spec));
        }
        let mut entries = Vec::new();
        for j in j0..=(j1 as usize) {
            for i in i0..=(i1 as usize) {
                let v = g([l.cx(i), l.cy(j)]);
                check_nonneg(v)?;
                if v > 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Ok(Self::from_sorted(spec, entries))
    }

    fn from_sorted(spec: GridSpec, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut row_ptr = vec![0usize; spec.ny + 1];
        for &(_, j, _) in &entries {
            row_ptr[j + 1] += 1;
        }
        for j in 0..spec.ny {
            row_ptr[j + 1] += row_ptr[j];
        }
        let cols: Vec<u32> = entries.iter().map(|e| e.0 as u32).collect();
        let vals: Vec<f64> = entries.iter().map(|e| e.2).collect();
        let mut cum = vec![0.0; vals.len()];
        for j in 0..spec.ny {
            let mut acc = 0.0;
            for t in row_ptr[j]..row_ptr[j + 1] {
                acc += vals[t];
                cum[t] = acc;
            }
        }
        Self { spec, background: 0.0, row_ptr, cols, vals, cum }
    }

    /// Replace the uniform background value.
    pub fn with_background(mut self, c: f64) -> Result<Self> {
        check_nonneg(c)?;
        self.background = c;
        Ok(self)
    }

    /// Multiply every value by `c ≥ 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        check_nonneg(c)?;
        let mut g = self.clone();
        g.background *= c;
        g.vals.iter_mut().for_each(|v| *v *= c);
        g.cum.iter_mut().for_each(|v| *v *= c);
        Ok(g)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn background(&self) -> f64 {
        self.background
    }

    /// Number of explicitly stored cells.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Value at cell `(i, j)`.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(j);
        match c.binary_search(&(i as u32)) {
            Ok(t) => self.background + v[t],
            Err(_) => self.background,
        }
    }

    /// Largest cell value.
    pub fn max_value(&self) -> f64 {
        self.background + self.vals.iter().cloned().fold(0.0, f64::max)
    }

    /// Stored cells of row `j`: column indices and extra values.
    pub fn row(&self, j: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.row_ptr[j], self.row_ptr[j + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// Iterate the stored cells as `(i, j, value)` with the background included.
    pub fn iter_stored(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.spec.ny).flat_map(move |j| {
            let (c, v) = self.row(j);
            c.iter().zip(v).map(move |(&i, &x)| (i as usize, j, self.background + x))
        })
    }

    /// Sum of the cell values over columns `i0..=i1` of row `j`.
    pub fn row_range_sum(&self, j: usize, i0: usize, i1: usize) -> f64 {
        let mut s = self.background * (i1 + 1 - i0) as f64;
        let (a, b) = (self.row_ptr[j], self.row_ptr[j + 1]);
        if a == b {
            return s;
        }
        let cols = &self.cols[a..b];
        let lo = cols.partition_point(|&c| (c as usize) < i0);
        let hi = cols.partition_point(|&c| (c as usize) <= i1);
        if hi > lo {
            let upper = self.cum[a + hi - 1];
            let lower = if lo > 0 { self.cum[a + lo - 1] } else { 0.0 };
            s += upper - lower;
        }
        s
    }

    /// ‖f‖_{L^p} with cell-area weights.
    pub fn lp_norm(&self, p: Exponent) -> f64 {
        let area = self.spec.cell_area();
        match p {
            Exponent::Infinity => self.max_value(),
            Exponent::Finite(p) => {
                let empty = (self.spec.cell_count() - self.nnz()) as f64;
                let mut s = if self.background > 0.0 { empty * self.background.powf(p) } else { 0.0 };
                for &v in &self.vals {
                    s += (self.background + v).powf(p);
                }
                (s * area).powf(1.0 / p)
            }
        }
    }

    /// First and last rows holding stored cells, if any.
    pub fn stored_row_range(&self) -> Option<(usize, usize)> {
        let nnz = self.nnz();
        if nnz == 0 {
            return None;
        }
        let first = self.row_ptr[1..].partition_point(|&p| p == 0);
        let last = self.row_ptr.partition_point(|&p| p < nnz) - 1;
        Some((first, last))
    }

    /// Bounding box (cell-index ranges) of the stored cells, if any.
    pub fn stored_bbox(&self) -> Option<((usize, usize), (usize, usize))> {
        if self.nnz() == 0 {
            return None;
        }
        let mut i0 = usize::MAX;
        let mut i1 = 0;
        let mut j0 = usize::MAX;
        let mut j1 = 0;
        for j in 0..self.spec.ny {
            let (c, _) = self.row(j);
            if let (Some(&a), Some(&b)) = (c.first(), c.last()) {
                j0 = j0.min(j);
                j1 = j1.max(j);
                i0 = i0.min(a as usize);
                i1 = i1.max(b as usize);
            }
        }
        Some(((i0, j0), (i1, j1)))
    }
}

fn check_nonneg(v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Negative(v));
    }
    Ok(())
}

/// A nonnegative atomic measure on the cells of a [`GridSpec`]; each
/// supported cell carries its mass at the cell centre.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    spec: GridSpec,
    support: Vec<usize>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Build from `((i, j), weight)` pairs. Duplicate cells are summed and
    /// zero weights dropped.
    pub fn new(spec: GridSpec, cells: Vec<((usize, usize), f64)>) -> Result<Self> {
        let mut flat: Vec<(usize, f64)> = Vec::with_capacity(cells.len());
        for ((i, j), w) in cells {
            check_nonneg(w)?;
            if i >= spec.nx || j >= spec.ny {
                return Err(Error::OutOfExtent(format!("cell ({i},{j}) outside {}x{} grid", spec.nx, spec.ny)));
            }
            flat.push((spec.flat(i, j), w));
        }
        flat.sort_by_key(|e| e.0);
        let mut support = Vec::with_capacity(flat.len());
        let mut weights: Vec<f64> = Vec::with_capacity(flat.len());
        for (idx, w) in flat {
            if support.last() == Some(&idx) {
                *weights.last_mut().unwrap() += w;
            } else {
                support.push(idx);
                weights.push(w);
            }
        }
        let keep: Vec<bool> = weights.iter().map(|&w| w > 0.0).collect();
        let support = support.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(s, _)| s).collect();
        let weights = weights.into_iter().filter(|&w| w > 0.0).collect();
        Ok(Self { spec, support, weights })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Number of supported cells.
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Supported cells as `(i, j)`.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.support.iter().map(|&s| self.spec.unflat(s)).collect()
    }

    /// Centres of the supported cells, in support order.
    pub fn centers(&self) -> Vec<[f64; 2]> {
        self.support
            .iter()
            .map(|&s| {
                let (i, j) = self.spec.unflat(s);
                self.spec.cell_center(i, j)
            })
            .collect()
    }

    /// Mass of the closed ball B(c, ρ) (atoms at cell centres).
    pub fn ball_mass(&self, c: [f64; 2], rho: f64) -> f64 {
        self.centers().iter().zip(&self.weights).filter(|(p, _)| in_ball(p[0] - c[0], p[1] - c[1], rho)).map(|(_, w)| w).sum()
    }

    /// Multiply every weight by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        check_nonneg(c)?;
        let mut m = self.clone();
        m.weights.iter_mut().for_each(|w| *w *= c);
        Ok(m)
    }
}

/// Row-bucketed index answering exact closed-ball weight queries.
///
/// Points are bucketed into horizontal rows of height `h`; inside a row they
/// are sorted by x with prefix sums of the weights. A query visits the rows
/// meeting the ball, counts the points that are certainly inside with two
/// binary searches, and tests only the few boundary candidates with
/// [`in_ball`]. The answer therefore agrees exactly with a brute-force scan
/// using the same predicate.
pub(crate) struct BallIndex {
    y0: f64,
    h: f64,
    rows: Vec<IndexRow>,
    total: f64,
}

#[derive(Default)]
struct IndexRow {
    xs: Vec<f64>,
    ys: Vec<f64>,
    cum: Vec<f64>,
    ymin: f64,
    ymax: f64,
}

impl BallIndex {
    pub(crate) fn new(points: &[[f64; 2]], weights: &[f64], h: f64) -> Self {
        let y0 = points.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let y1 = points.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let nrows = if points.is_empty() { 0 } else { ((y1 - y0) / h).floor() as usize + 1 };
        let mut buckets: Vec<Vec<(f64, f64, f64)>> = vec![Vec::new(); nrows];
        for (p, &w) in points.iter().zip(weights) {
            let r = (((p[1] - y0) / h).floor() as usize).min(nrows - 1);
            buckets[r].push((p[0], p[1], w));
        }
        let rows = buckets
            .into_iter()
            .map(|mut b| {
                b.sort_by(|a, c| a.0.total_cmp(&c.0));
                let mut row = IndexRow { ymin: f64::INFINITY, ymax: f64::NEG_INFINITY, ..Default::default() };
                let mut acc = 0.0;
                for (x, y, w) in b {
                    acc += w;
                    row.xs.push(x);
                    row.ys.push(y);
                    row.cum.push(acc);
                    row.ymin = row.ymin.min(y);
                    row.ymax = row.ymax.max(y);
                }
                row
            })
            .collect();
        Self { y0, h, rows, total: weights.iter().sum() }
    }

    pub(crate) fn total(&self) -> f64 {
        self.total
    }

    /// Total weight of the points in the closed ball B(c, ρ).
    pub(crate) fn query(&self, c: [f64; 2], rho: f64) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        let slack = rho * 1e-9 + 1e-300;
        let jlo = (((c[1] - rho - slack - self.y0) / self.h).floor()).max(0.0);
        let jhi = (((c[1] + rho + slack - self.y0) / self.h).floor()).min(self.rows.len() as f64 - 1.0);
        if jhi < 0.0 || jlo > jhi {
            return 0.0;
        }
        let mut sum = 0.0;
        for row in &self.rows[jlo as usize..=jhi as usize] {
            if row.xs.is_empty() {
                continue;
            }
            let dy_min = if c[1] >= row.ymin && c[1] <= row.ymax { 0.0 } else { (c[1] - row.ymin).abs().min((c[1] - row.ymax).abs()) };
            let dy_max = (c[1] - row.ymin).abs().max((c[1] - row.ymax).abs());
            let r2 = rho * rho * (1.0 + 2e-12);
            if dy_min * dy_min > r2 {
                continue;
            }
            let w_out = (r2 - dy_min * dy_min).max(0.0).sqrt() + slack;
            let lo = row.xs.partition_point(|&x| x < c[0] - w_out);
            let hi = row.xs.partition_point(|&x| x <= c[0] + w_out);
            let (ilo, ihi) = if rho * rho > dy_max * dy_max {
                let w_in = (rho * rho - dy_max * dy_max).sqrt() * (1.0 - 1e-9);
                let a = row.xs.partition_point(|&x| x < c[0] - w_in).max(lo);
                let b = row.xs.partition_point(|&x| x <= c[0] + w_in).min(hi);
                if b > a {
                    (a, b)
                } else {
                    (lo, lo)
                }
            } else {
                (lo, lo)
            };
            if ihi > ilo {
                sum += row.cum[ihi - 1] - if ilo > 0 { row.cum[ilo - 1] } else { 0.0 };
            }
            for t in (lo..ilo).chain(ihi.max(lo)..hi) {
                if in_ball(row.xs[t] - c[0], row.ys[t] - c[1], rho) {
                    sum += row.cum[t] - if t > 0 { row.cum[t - 1] } else { 0.0 };
                }
            }
        }
        sum
    }
}

/// Witness of a ball-condition supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallSup {
    /// The supremum value.
    pub value: f64,
    /// Centre of the maximizing ball.
    pub center: [f64; 2],
    /// Radius of the maximizing ball.
    pub radius: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Dyadic radii δ, 2δ, 4δ, … up to and including 1.
pub fn dyadic_radii(delta: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = delta;
    while r <= 1.0 + 1e-12 {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// Ball-weight index for points that sit exactly on the centres of a
/// δ-lattice. Offsets between points are then exact multiples of δ, so the
/// chord half-width of a ball in each lattice row can be tabulated once per
/// radius and every query is one prefix-sum difference per row.
struct LatticeIndex {
    nx: usize,
    ny: usize,
    prefix: Vec<f64>,
    cells: Vec<(usize, usize)>,
    total: f64,
}

/// Dense lattice indexes larger than this fall back to [`BallIndex`].
const MAX_LATTICE_CELLS: usize = 1 << 26;

impl LatticeIndex {
    fn try_new(points: &[[f64; 2]], weights: &[f64], delta: f64) -> Option<Self> {
        let ox = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min) - delta / 2.0;
        let oy = points.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min) - delta / 2.0;
        let mut cells = Vec::with_capacity(points.len());
        let (mut nx, mut ny) = (0usize, 0usize);
        for p in points {
            let i = ((p[0] - ox) / delta - 0.5).round();
            let j = ((p[1] - oy) / delta - 0.5).round();
            if ox + (i + 0.5) * delta != p[0] || oy + (j + 0.5) * delta != p[1] || i < 0.0 || j < 0.0 {
                return None;
            }
            let (i, j) = (i as usize, j as usize);
            nx = nx.max(i + 1);
            ny = ny.max(j + 1);
            if nx.saturating_mul(ny) > MAX_LATTICE_CELLS {
                return None;
            }
            cells.push((i, j));
        }
        let stride = nx + 1;
        let mut prefix = vec![0.0; ny * stride];
        for (&(i, j), &w) in cells.iter().zip(weights) {
            prefix[j * stride + i + 1] += w;
        }
        for row in prefix.chunks_mut(stride) {
            for t in 1..stride {
                row[t] += row[t - 1];
            }
        }
        Some(Self { nx, ny, prefix, cells, total: weights.iter().sum() })
    }

    /// Largest `di` with (di·δ)² + (dj·δ)² inside the ball, for each `dj`.
    fn half_widths(rho: f64, delta: f64) -> Vec<usize> {
        let mut out = Vec::new();
        for dj in 0.. {
            let dy = dj as f64 * delta;
            if !in_ball(0.0, dy, rho) {
                break;
            }
            let mut hw = (((rho * rho - dy * dy).max(0.0)).sqrt() / delta).floor() as usize;
            while in_ball((hw + 1) as f64 * delta, dy, rho) {
                hw += 1;
            }
            while hw > 0 && !in_ball(hw as f64 * delta, dy, rho) {
                hw -= 1;
            }
            out.push(hw);
        }
        out
    }

    fn query(&self, (ci, cj): (usize, usize), hws: &[usize]) -> f64 {
        let stride = self.nx + 1;
        let reach = hws.len() - 1;
        let j0 = cj.saturating_sub(reach);
        let j1 = (cj + reach).min(self.ny - 1);
        let mut sum = 0.0;
        for j in j0..=j1 {
            let hw = hws[j.abs_diff(cj)];
            let lo = ci.saturating_sub(hw);
            let hi = (ci + hw).min(self.nx - 1);
            let row = &self.prefix[j * stride..(j + 1) * stride];
            sum += row[hi + 1] - row[lo];
        }
        sum
    }
}

/// Largest `weight(ball) / normalizer(ρ)` over balls centred at the points
/// with radii from `radii`.
fn ball_sup<N: Fn(f64) -> f64 + Sync>(
    points: &[[f64; 2]],
    weights: &[f64],
    h: f64,
    radii: &[f64],
    normalizer: N,
    policy: ExecPolicy,
) -> BallSup {
    let per_point = match LatticeIndex::try_new(points, weights, h) {
        Some(index) => {
            let tables: Vec<Vec<usize>> = radii.iter().map(|&r| LatticeIndex::half_widths(r, h)).collect();
            policy.map_range(points.len(), |n| {
                sup_at(points[n], radii, &normalizer, index.total, |k| index.query(index.cells[n], &tables[k]))
            })
        }
        None => {
            let index = BallIndex::new(points, weights, h);
            policy.map(points, |&c| sup_at(c, radii, &normalizer, index.total(), |k| index.query(c, radii[k])))
        }
    };
    per_point.into_iter().fold(BallSup { value: 0.0, center: [0.0; 2], radius: radii[0] }, |a, b| if b.value > a.value { b } else { a })
}

fn sup_at<N: Fn(f64) -> f64, Q: Fn(usize) -> f64>(c: [f64; 2], radii: &[f64], normalizer: &N, total: f64, query: Q) -> BallSup {
    let mut best = BallSup { value: 0.0, center: c, radius: radii[0] };
    for (k, &rho) in radii.iter().enumerate() {
        let mass = query(k);
        let v = mass / normalizer(rho);
        if v > best.value {
            best = BallSup { value: v, center: c, radius: rho };
        }
        // Once the ball holds everything, larger radii only shrink the ratio.
        if mass >= total * (1.0 - 1e-12) {
            break;
        }
    }
    best
}

/// Frostman constant ⟨μ⟩_α = sup μ(B(x,ρ))/ρ^α over support centres `x` and
/// dyadic radii ρ ∈ {δ, 2δ, …, 1}, where δ is the cell side of the measure's grid.
pub fn frostman_constant(mu: &DiscreteMeasure, alpha: f64) -> Result<f64> {
    frostman_witness(mu, alpha, ExecPolicy::default()).map(|w| w.value)
}

/// [`frostman_constant`] with the maximizing ball and an explicit execution policy.
pub fn frostman_witness(mu: &DiscreteMeasure, alpha: f64, policy: ExecPolicy) -> Result<BallSup> {
    check_alpha(alpha)?;
    if mu.is_empty() || !(mu.total_mass() > 0.0) {
        return Err(Error::EmptyMeasure);
    }
    let delta = mu.spec.delta();
    let radii = dyadic_radii(delta);
    Ok(ball_sup(&mu.centers(), &mu.weights, delta, &radii, |r| r.powf(alpha), policy))
}

/// Katz–Tao constant sup #(X ∩ B(x,r)) / (r/δ)^α over `x ∈ X` and dyadic
/// radii r ∈ {δ, 2δ, …} ∩ [δ, 1].
pub fn katz_tao_constant(points: &[[f64; 2]], delta: f64, alpha: f64) -> Result<f64> {
    katz_tao_witness(points, delta, alpha, ExecPolicy::default()).map(|w| w.value)
}

/// [`katz_tao_constant`] with the maximizing ball and an explicit execution policy.
pub fn katz_tao_witness(points: &[[f64; 2]], delta: f64, alpha: f64, policy: ExecPolicy) -> Result<BallSup> {
    check_alpha(alpha)?;
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidScale { value: delta, reason: "δ must lie in (0,1]".into() });
    }
    let radii = dyadic_radii(delta);
    let ones = vec![1.0; points.len()];
    Ok(ball_sup(points, &ones, delta, &radii, |r| (r / delta).powf(alpha), policy))
}

/// Constant-weight measure on the δ-cells containing the points of `X`.
///
/// The cells belong to the δ-lattice anchored at the origin, so for sets of
/// δ-cell centres (such as the Cantor sets of this crate) every point is
/// the centre of its own cell. Total mass = #X · `mass_per_cell` when the
/// points occupy distinct cells.
pub fn measure_from_katz_tao(points: &[[f64; 2]], delta: f64, mass_per_cell: f64) -> Result<DiscreteMeasure> {
    check_nonneg(mass_per_cell)?;
    measure_from_points(points, &vec![mass_per_cell; points.len()], delta)
}

/// Measure with weight `weights[n]` on the δ-cell (lattice anchored at the
/// origin) containing `points[n]`; weights of shared cells add up.
pub fn measure_from_points(points: &[[f64; 2]], weights: &[f64], delta: f64) -> Result<DiscreteMeasure> {
    let k = dyadic_exponent(delta)
        .ok_or_else(|| Error::InvalidScale { value: delta, reason: "measure discretization needs δ = 2^-k".into() })?;
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    if weights.len() != points.len() {
        return Err(Error::InvalidParameter(format!("{} weights for {} points", weights.len(), points.len())));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let origin = [(lo[0] / delta).floor() * delta, (lo[1] / delta).floor() * delta];
    let nx = ((hi[0] - origin[0]) / delta).floor() as usize + 1;
    let ny = ((hi[1] - origin[1]) / delta).floor() as usize + 1;
    let spec = GridSpec::new(k, origin, nx, ny)?;
    let cells = points
        .iter()
        .zip(weights)
        .map(|(&p, &w)| {
            let c = spec.cell_of(p).ok_or_else(|| Error::OutOfExtent(format!("point {p:?} outside its own bounding grid")))?;
            Ok((c, w))
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::new(spec, cells)
}
