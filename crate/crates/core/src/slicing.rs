//! Katz–Tao sets, circle families over them, dyadic pigeonholing, slicing of
//! an α-dimensional set (α > 1) into δ-tubes whose slices are
//! (α−1)-dimensional, and the per-slice L² overlap of arcs.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::geometry::{anchored_lattice, shell_row_spans, Shell};
use crate::grid::katz_tao_constant;

pub use crate::cantor::{cantor_1d, generate_cantor_set, CantorBuilder};

/// A δ-separated point set together with its Katz–Tao constant.
#[derive(Debug, Clone, PartialEq)]
pub struct KatzTaoSet {
    points: Vec<[f64; 2]>,
    delta: f64,
    alpha: f64,
    kt_constant: f64,
}

/// Relative slack allowed in the δ-separation check.
const SEPARATION_SLACK: f64 = 1e-9;

impl KatzTaoSet {
    /// Validates δ-separation and computes the Katz–Tao (δ, α) constant.
    pub fn new(points: Vec<[f64; 2]>, delta: f64, alpha: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        check_separated(&points, delta)?;
        let kt_constant = katz_tao_constant(&points, delta, alpha)?;
        Ok(Self { points, delta, alpha, kt_constant })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kt_constant(&self) -> f64 {
        self.kt_constant
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The sub-family at `indices`, revalidated.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let pts = indices
            .iter()
            .map(|&i| self.points.get(i).copied().ok_or_else(|| Error::OutOfRange(format!("point index {i}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts, self.delta, self.alpha)
    }
}

fn check_separated(points: &[[f64; 2]], delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::InvalidScale { value: delta, reason: "δ must be positive".into() });
    }
    let key = |p: &[f64; 2]| ((p[0] / delta).floor() as i64, (p[1] / delta).floor() as i64);
    let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::with_capacity(points.len());
    for (n, p) in points.iter().enumerate() {
        cells.entry(key(p)).or_default().push(n);
    }
    let min = delta * (1.0 - SEPARATION_SLACK);
    for (n, p) in points.iter().enumerate() {
        let (cx, cy) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &m in cells.get(&(cx + dx, cy + dy)).into_iter().flatten() {
                    if m > n && (p[0] - points[m][0]).hypot(p[1] - points[m][1]) < min {
                        return Err(Error::Separation(format!("points {n} and {m} are closer than δ = {delta}")));
                    }
                }
            }
        }
    }
    Ok(())
}

/// The circle family {(x, r) : x ∈ X, r ∈ R_x} with #R_x = m for all x.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleFamily {
    base: KatzTaoSet,
    radii: Vec<Vec<f64>>,
}

impl CircleFamily {
    /// Validates uniform cardinality, radii in [1,2] and δ-separation within
    /// each radius set.
    pub fn new(base: KatzTaoSet, mut radii: Vec<Vec<f64>>) -> Result<Self> {
        if radii.len() != base.len() {
            return Err(Error::InvalidParameter(format!("{} radius sets for {} points", radii.len(), base.len())));
        }
        let m = radii[0].len();
        if m == 0 {
            return Err(Error::InvalidParameter("radius sets must be nonempty".into()));
        }
        let d = base.delta();
        for set in radii.iter_mut() {
            if set.len() != m {
                return Err(Error::InvalidParameter(format!("radius sets must all have {m} elements")));
            }
            set.sort_by(f64::total_cmp);
            if set.iter().any(|&r| !(1.0 - 1e-12..=2.0 + 1e-12).contains(&r)) {
                return Err(Error::OutOfRange("radii must lie in [1,2]".into()));
            }
            if set.windows(2).any(|w| w[1] - w[0] < d * (1.0 - SEPARATION_SLACK)) {
                return Err(Error::Separation("radii within a set must be δ-separated".into()));
            }
        }
        Ok(Self { base, radii })
    }

    /// `m` distinct radii per point drawn from {1 + jδ} ∩ [1,2].
    pub fn random(base: KatzTaoSet, m: usize, seed: u64) -> Result<Self> {
        let d = base.delta();
        let slots = (1.0 / d).round() as usize + 1;
        if m == 0 || m > slots {
            return Err(Error::InvalidParameter(format!("m must lie in 1..={slots}, got {m}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radii = (0..base.len()).map(|_| sample(&mut rng, slots, m).into_iter().map(|j| 1.0 + j as f64 * d).collect()).collect();
        Self::new(base, radii)
    }

    /// Keep the `m` smallest radii of every set.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.m() {
            return Err(Error::InvalidParameter(format!("cannot truncate {} radii to {m}", self.m())));
        }
        Self::new(self.base.clone(), self.radii.iter().map(|r| r[..m].to_vec()).collect())
    }

    pub fn base(&self) -> &KatzTaoSet {
        &self.base
    }

    pub fn radii(&self) -> &[Vec<f64>] {
        &self.radii
    }

    /// Common cardinality m of the radius sets.
    pub fn m(&self) -> usize {
        self.radii[0].len()
    }

    /// All (centre, radius) pairs.
    pub fn circles(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.base.points.iter().zip(&self.radii).flat_map(|(&c, rs)| rs.iter().map(move |&r| (c, r)))
    }
}

/// Outcome of [`dyadic_pigeonhole`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pigeonhole {
    /// Relative level 2^{-j}: the block is [2^{-j}, 2^{-j+1}) · max.
    pub level: f64,
    /// Block number j ≥ 1.
    pub block: u32,
    /// Indices in the block, ascending.
    pub indices: Vec<usize>,
    /// Sum of the values in the block.
    pub captured: f64,
    /// Sum of all values.
    pub total: f64,
}

/// Number of dyadic blocks kept at scale δ: values below δ^{100}·max are
/// treated as negligible.
pub fn pigeonhole_blocks(delta: f64) -> u32 {
    (100.0 * (1.0 / delta).log2()).ceil().max(1.0) as u32
}

/// Dyadic block of `v` relative to `max`: j ≥ 1 with v ∈ [2^{-j}, 2^{-j+1})·max,
/// the top block [max/2, max] being closed.
fn block_of(v: f64, max: f64) -> u32 {
    if v >= max / 2.0 {
        return 1;
    }
    let mut j = ((max / v).log2().floor() as i64 + 1).max(1) as i32;
    while v < max * 2f64.powi(-j) {
        j += 1;
    }
    while j > 1 && v >= max * 2f64.powi(-j + 1) {
        j -= 1;
    }
    j as u32
}

/// Splits positive values into dyadic blocks [2^{-j}, 2^{-j+1})·max and
/// returns the block with the largest total (the larger level on ties).
/// Values below 2^{-J}·max with J = ⌈100·log₂(1/δ)⌉ are dropped.
pub fn dyadic_pigeonhole(values: &[f64], delta: f64) -> Result<Pigeonhole> {
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Negative(*v));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidScale { value: delta, reason: "δ must lie in (0,1)".into() });
    }
    let max = values.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::InvalidParameter("pigeonholing needs at least one positive value".into()));
    }
    let limit = pigeonhole_blocks(delta);
    let mut sums: BTreeMap<u32, f64> = BTreeMap::new();
    let blocks: Vec<u32> = values.iter().map(|&v| if v > 0.0 { block_of(v, max) } else { u32::MAX }).collect();
    for (&b, &v) in blocks.iter().zip(values) {
        if b <= limit {
            *sums.entry(b).or_insert(0.0) += v;
        }
    }
    let (&block, &captured) = sums
        .iter()
        .fold(None::<(&u32, &f64)>, |best, cur| match best {
            Some(b) if *b.1 >= *cur.1 => Some(b),
            _ => Some(cur),
        })
        .expect("top block is nonempty");
    let indices = blocks.iter().enumerate().filter(|(_, &b)| b == block).map(|(i, _)| i).collect();
    Ok(Pigeonhole { level: 2f64.powi(-(block as i32)), block, indices, captured, total: values.iter().sum() })
}

/// One δ-tube perpendicular to the slicing direction: the points with
/// ⟨x, u⟩ ∈ [index·δ, (index+1)·δ).
#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    pub index: i64,
    pub offset: f64,
    pub points: Vec<usize>,
    /// Katz–Tao (δ, α−1) constant of the tube's points.
    pub kt_constant: f64,
}

/// Result of [`slice_by_tubes`].
#[derive(Debug, Clone, PartialEq)]
pub struct SliceDecomposition {
    /// Angle of the direction u.
    pub angle: f64,
    pub direction: [f64; 2],
    /// Tubes kept by pigeonholing, ordered by offset.
    pub tubes: Vec<Tube>,
    /// For every point of X, the position in `tubes` of its tube (if kept).
    pub assignment: Vec<Option<usize>>,
    /// X′: the points in kept tubes, ascending.
    pub refined_points: Vec<usize>,
    /// Fraction of sampled directions whose worst tube exceeds log₂(1/δ)·KT(X).
    pub epsilon0: f64,
    /// Worst per-tube constant for every sampled direction.
    pub direction_scores: Vec<(f64, f64)>,
}

impl SliceDecomposition {
    /// #X′ / #X.
    pub fn retention(&self) -> f64 {
        self.refined_points.len() as f64 / self.assignment.len() as f64
    }

    pub fn max_tube_constant(&self) -> f64 {
        self.tubes.iter().map(|t| t.kt_constant).fold(0.0, f64::max)
    }

    /// CSV rows `tube_index,offset,point_count,kt_constant_alpha_minus_1`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tube_index,offset,point_count,kt_constant_alpha_minus_1\n");
        for t in &self.tubes {
            s.push_str(&format!("{},{:.12e},{},{:.12e}\n", t.index, t.offset, t.points.len(), t.kt_constant));
        }
        s
    }
}

/// The constant C in the retention floor 1/(C·ln²(1/δ)).
pub const RETENTION_CONSTANT: f64 = 200.0;

/// Retention floor #X′/#X ≥ 1/(200·ln²(1/δ)).
pub fn retention_floor(delta: f64) -> f64 {
    1.0 / (RETENTION_CONSTANT * (1.0 / delta).ln().powi(2))
}

struct Candidate {
    angle: f64,
    tubes: Vec<Tube>,
    worst: f64,
}

fn evaluate_direction(x: &KatzTaoSet, angle: f64) -> Result<Candidate> {
    let d = x.delta();
    let (sn, cs) = angle.sin_cos();
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (n, p) in x.points().iter().enumerate() {
        let off = p[0] * cs + p[1] * sn;
        groups.entry((off / d).floor() as i64).or_default().push(n);
    }
    let keys: Vec<i64> = groups.keys().copied().collect();
    let counts: Vec<f64> = groups.values().map(|v| v.len() as f64).collect();
    let ph = dyadic_pigeonhole(&counts, d)?;
    let mut tubes = Vec::with_capacity(ph.indices.len());
    let mut worst: f64 = 0.0;
    for &t in &ph.indices {
        let idx = &groups[&keys[t]];
        let pts: Vec<[f64; 2]> = idx.iter().map(|&n| x.points()[n]).collect();
        let kt = katz_tao_constant(&pts, d, x.alpha() - 1.0)?;
        worst = worst.max(kt);
        tubes.push(Tube { index: keys[t], offset: keys[t] as f64 * d, points: idx.clone(), kt_constant: kt });
    }
    Ok(Candidate { angle, tubes, worst })
}

/// Slices X into δ-tubes perpendicular to the best of `candidates` evenly
/// spaced directions in `sector` (both endpoints included). For each
/// direction the per-tube counts are dyadically pigeonholed; the direction
/// whose kept tubes have the smallest worst Katz–Tao (δ, α−1) constant wins.
pub fn slice_by_tubes(x: &KatzTaoSet, sector: (f64, f64), candidates: usize) -> Result<SliceDecomposition> {
    slice_by_tubes_with(x, sector, candidates, ExecPolicy::default())
}

/// [`slice_by_tubes`] with an explicit execution policy.
pub fn slice_by_tubes_with(x: &KatzTaoSet, sector: (f64, f64), candidates: usize, policy: ExecPolicy) -> Result<SliceDecomposition> {
    if !(x.alpha() > 1.0) {
        return Err(Error::SlicingAlpha(x.alpha()));
    }
    if candidates < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 candidate directions, got {candidates}")));
    }
    let angles: Vec<f64> = (0..candidates).map(|k| sector.0 + (sector.1 - sector.0) * k as f64 / (candidates - 1) as f64).collect();
    let evaluated = policy.try_map(&angles, |&a| evaluate_direction(x, a))?;
    let limit = (1.0 / x.delta()).log2() * x.kt_constant();
    let failing = evaluated.iter().filter(|c| c.worst > limit).count();
    let direction_scores = evaluated.iter().map(|c| (c.angle, c.worst)).collect();
    let best = evaluated.into_iter().reduce(|a, b| if b.worst < a.worst { b } else { a }).expect("at least ten candidates");
    let mut assignment = vec![None; x.len()];
    let mut refined = Vec::new();
    for (t, tube) in best.tubes.iter().enumerate() {
        for &n in &tube.points {
            assignment[n] = Some(t);
            refined.push(n);
        }
    }
    refined.sort_unstable();
    Ok(SliceDecomposition {
        angle: best.angle,
        direction: [best.angle.cos(), best.angle.sin()],
        tubes: best.tubes,
        assignment,
        refined_points: refined,
        epsilon0: failing as f64 / candidates as f64,
        direction_scores,
    })
}

/// Number of equal arcs the circle is split into.
pub const ARC_COUNT: usize = 100;

/// Constant K in the same-slice pair bound |C*₁ ∩ C*₂| ≤ K·δ²/(|x₁−x₂|+δ).
pub const SLICE_PAIR_CONSTANT: f64 = 40.0;

/// Result of [`slice_l2_overlap`].
#[derive(Debug, Clone, PartialEq)]
pub struct SliceOverlap {
    /// Σ over ordered pairs (diagonal included) of |C*_p ∩ C*_q| = ‖Σ χ‖²₂.
    pub value: f64,
    /// Diagonal part Σ |C*_p|.
    pub diagonal: f64,
    /// Largest area/(δ²/(|x₁−x₂|+δ)) over off-diagonal pairs (0 if none).
    pub max_pair_ratio: f64,
    /// Number of unordered off-diagonal pairs examined.
    pub pairs: usize,
}

type GlobalSpan = (i64, i64, i64);

/// Pixels (on the global lattice of spacing h anchored at 0) of the arc
/// piece of S_δ(c, r) with polar angle in [a0, a1).
fn arc_pixels(c: [f64; 2], r: f64, delta: f64, a0: f64, a1: f64, h: f64) -> Vec<GlobalSpan> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut include = |phi: f64| {
        for rho in [r - delta, r + delta] {
            let p = [c[0] + rho * phi.cos(), c[1] + rho * phi.sin()];
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
    };
    include(a0);
    include(a1);
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut q = (a0 / quarter).ceil() * quarter;
    while q < a1 {
        include(q);
        q += quarter;
    }
    let lat = anchored_lattice(lo, hi, h);
    let gi0 = (lat.ox / h).round() as i64;
    let gj0 = (lat.oy / h).round() as i64;
    let mut out = Vec::new();
    for sp in shell_row_spans(&Shell::new(c, r, delta), &lat) {
        let dy = lat.cy(sp.j) - c[1];
        let mut run: Option<(usize, usize)> = None;
        for i in sp.i0..=sp.i1 {
            let phi = dy.atan2(lat.cx(i) - c[0]).rem_euclid(std::f64::consts::TAU);
            if phi >= a0 && phi < a1 {
                run = Some(run.map_or((i, i), |(s, _)| (s, i)));
            } else if let Some((s, e)) = run.take() {
                out.push((gj0 + sp.j as i64, gi0 + s as i64, gi0 + e as i64));
            }
        }
        if let Some((s, e)) = run {
            out.push((gj0 + sp.j as i64, gi0 + s as i64, gi0 + e as i64));
        }
    }
    out.sort_unstable();
    out
}

fn pixel_overlap(a: &[GlobalSpan], b: &[GlobalSpan]) -> u64 {
    let (mut p, mut q, mut n) = (0, 0, 0u64);
    while p < a.len() && q < b.len() {
        let (x, y) = (a[p], b[q]);
        if x.0 != y.0 {
            if x.0 < y.0 {
                p += 1;
            } else {
                q += 1;
            }
            continue;
        }
        let lo = x.1.max(y.1);
        let hi = x.2.min(y.2);
        if hi >= lo {
            n += (hi - lo + 1) as u64;
        }
        if x.2 < y.2 {
            p += 1;
        } else {
            q += 1;
        }
    }
    n
}

/// Pixel resolution divisor of [`slice_l2_overlap`].
pub const SLICE_RESOLUTION: f64 = 8.0;

/// ‖Σ_{x,r} χ_{C*_δ(x,r)}‖²₂ for centres on one horizontal line, where
/// C*_δ(x,r) is the part of S_δ(x,r) with polar angle (around x) in the
/// `arc_index`-th of 100 equal arcs. Areas are pixel counts at δ/8.
pub fn slice_l2_overlap(points: &[[f64; 2]], radii: &[Vec<f64>], delta: f64, arc_index: usize) -> Result<SliceOverlap> {
    if points.is_empty() {
        return Err(Error::EmptySet);
    }
    if radii.len() != points.len() {
        return Err(Error::InvalidParameter(format!("{} radius sets for {} points", radii.len(), points.len())));
    }
    if arc_index >= ARC_COUNT {
        return Err(Error::OutOfRange(format!("arc index {arc_index} not in 0..{ARC_COUNT}")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidScale { value: delta, reason: "δ must be positive".into() });
    }
    let y0 = points[0][1];
    if let Some(p) = points.iter().find(|p| (p[1] - y0).abs() > delta) {
        return Err(Error::InvalidParameter(format!("non-collinear centres: y = {} vs {}", p[1], y0)));
    }
    let tau = std::f64::consts::TAU;
    let (a0, a1) = (tau * arc_index as f64 / ARC_COUNT as f64, tau * (arc_index + 1) as f64 / ARC_COUNT as f64);
    let h = delta / SLICE_RESOLUTION;
    let arcs: Vec<(usize, Vec<GlobalSpan>)> = points
        .iter()
        .zip(radii)
        .enumerate()
        .flat_map(|(n, (&c, rs))| rs.iter().map(move |&r| (n, c, r)))
        .map(|(n, c, r)| (n, arc_pixels(c, r, delta, a0, a1, h)))
        .collect();
    let area = h * h;
    let mut diagonal = 0.0;
    let mut off = 0.0;
    let mut max_ratio: f64 = 0.0;
    let mut pairs = 0;
    for (u, (pu, su)) in arcs.iter().enumerate() {
        diagonal += su.iter().map(|s| (s.2 - s.1 + 1) as f64).sum::<f64>() * area;
        for (pv, sv) in &arcs[u + 1..] {
            let a = pixel_overlap(su, sv) as f64 * area;
            off += 2.0 * a;
            pairs += 1;
            let sep = (points[*pu][0] - points[*pv][0]).abs();
            max_ratio = max_ratio.max(a / (delta * delta / (sep + delta)));
        }
    }
    Ok(SliceOverlap { value: diagonal + off, diagonal, max_pair_ratio: max_ratio, pairs })
}
