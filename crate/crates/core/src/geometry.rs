//! Circles, δ-thickened annuli, tangency parameters, intersection areas, and
//! (δ,t)-rectangles.
//!
//! Everything that needs to decide whether a point lies in an annulus goes
//! through [`in_shell`], and every rasterization goes through the row-span
//! routine [`shell_row_spans`], so that intersection areas, averages and
//! multiplicity grids agree cell for cell.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Lattice};

/// Closed-shell membership: `| |p − c| − r | ≤ δ`.
#[inline]
pub fn in_shell(dx: f64, dy: f64, r: f64, delta: f64) -> bool {
    ((dx * dx + dy * dy).sqrt() - r).abs() <= delta
}

/// Exact area of S_δ(x,r) = {y : ||y−x| − r| ≤ δ}; equals 4πrδ when r ≥ δ.
pub fn shell_area(r: f64, delta: f64) -> f64 {
    let inner = (r - delta).max(0.0);
    std::f64::consts::PI * ((r + delta).powi(2) - inner * inner)
}

/// A circle C(x, r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Circle {
    pub fn new(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter(format!("circle radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// Euclidean distance between the parameter triples (x₁, x₂, r).
    pub fn param_distance(&self, other: &Circle) -> f64 {
        let dx = self.center[0] - other.center[0];
        let dy = self.center[1] - other.center[1];
        let dr = self.radius - other.radius;
        (dx * dx + dy * dy + dr * dr).sqrt()
    }

    /// Point on the circle at angle `theta`.
    pub fn point_at(&self, theta: f64) -> [f64; 2] {
        [self.center[0] + self.radius * theta.cos(), self.center[1] + self.radius * theta.sin()]
    }

    /// Distance from `p` to the circle.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        ((p[0] - self.center[0]).hypot(p[1] - self.center[1]) - self.radius).abs()
    }
}

/// The closed annulus S_δ(x, r) with thickness parameter δ < r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub circle: Circle,
    pub thickness: f64,
}

impl Annulus {
    pub fn new(circle: Circle, thickness: f64) -> Result<Self> {
        if !(thickness > 0.0) || thickness >= circle.radius {
            return Err(Error::DegenerateAnnulus { radius: circle.radius, thickness });
        }
        Ok(Self { circle, thickness })
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        in_shell(p[0] - self.circle.center[0], p[1] - self.circle.center[1], self.circle.radius, self.thickness)
    }

    pub fn area(&self) -> f64 {
        shell_area(self.circle.radius, self.thickness)
    }

    fn shell(&self) -> Shell {
        Shell { c: self.circle.center, r: self.circle.radius, d: self.thickness }
    }
}

/// Tangency parameter Δ = ||x−y| − |r−s|| and distance parameter
/// d = |x−y| + |r−s|.
pub fn tangency_params(c1: &Circle, c2: &Circle) -> (f64, f64) {
    let dist = (c1.center[0] - c2.center[0]).hypot(c1.center[1] - c2.center[1]);
    let dr = (c1.radius - c2.radius).abs();
    ((dist - dr).abs(), dist + dr)
}

/// A raw shell `| |p − c| − r | ≤ d` with `r ≥ 0`, `d > 0` (the disc of
/// radius r + d when r ≤ d).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Shell {
    pub c: [f64; 2],
    pub r: f64,
    pub d: f64,
}

impl Shell {
    pub(crate) fn new(c: [f64; 2], r: f64, d: f64) -> Self {
        Self { c, r, d }
    }

    fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        let big = self.r + self.d;
        ([self.c[0] - big, self.c[1] - big], [self.c[0] + big, self.c[1] + big])
    }
}

/// A maximal run of cells `i0..=i1` in row `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RowSpan {
    pub j: usize,
    pub i0: usize,
    pub i1: usize,
}

impl RowSpan {
    pub fn len(&self) -> usize {
        self.i1 + 1 - self.i0
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Cells of `lat` whose centres lie in the shell, as row spans, clipped to the
/// lattice. Each row contributes at most two spans (left and right of the
/// centre); spans are ordered by row, then column.
pub(crate) fn shell_row_spans(s: &Shell, lat: &Lattice) -> Vec<RowSpan> {
    let mut out = Vec::new();
    let big = s.r + s.d;
    let h = lat.h;
    let jlo = ((s.c[1] - big - lat.oy) / h - 0.5).floor() - 1.0;
    let jhi = ((s.c[1] + big - lat.oy) / h - 0.5).ceil() + 1.0;
    let jlo = jlo.max(0.0) as i64;
    let jhi = jhi.min(lat.ny as f64 - 1.0) as i64;
    if jhi < jlo {
        return out;
    }
    // Last column whose centre is at or left of the shell centre.
    let split = ((s.c[0] - lat.ox) / h - 0.5).floor() as i64;
    let nx = lat.nx as i64;
    let inner_r = s.r - s.d;
    for j in jlo..=jhi {
        let dy = lat.cy(j as usize) - s.c[1];
        let r2 = big * big - dy * dy;
        if r2 < -h * h {
            continue;
        }
        let b = r2.max(0.0).sqrt();
        let a = if inner_r > 0.0 && dy.abs() < inner_r { (inner_r * inner_r - dy * dy).sqrt() } else { 0.0 };
        let test = |i: i64| in_shell(lat.cx(i as usize) - s.c[0], dy, s.r, s.d);
        // Left half: dx ∈ [−b, −a], columns ≤ split.
        let left = half_span(lat, test, s.c[0] - b, s.c[0] - a, 0, split.min(nx - 1));
        // Right half: dx ∈ [a, b], columns > split.
        let right = half_span(lat, test, s.c[0] + a, s.c[0] + b, (split + 1).max(0), nx - 1);
        let j = j as usize;
        match (left, right) {
            (Some((l0, l1)), Some((r0, r1))) if l1 + 1 == r0 => out.push(RowSpan { j, i0: l0, i1: r1 }),
            (l, r) => {
                for (i0, i1) in [l, r].into_iter().flatten() {
                    out.push(RowSpan { j, i0, i1 });
                }
            }
        }
    }
    out
}

/// Columns in `[cmin, cmax]` whose centres satisfy `test`, given that the
/// true set is the centres inside `[xlo, xhi]`. The analytic interval is
/// corrected at both ends with the exact predicate.
fn half_span<T: Fn(i64) -> bool>(lat: &Lattice, test: T, xlo: f64, xhi: f64, cmin: i64, cmax: i64) -> Option<(usize, usize)> {
    if cmax < cmin {
        return None;
    }
    let h = lat.h;
    let mut i0 = (((xlo - lat.ox) / h - 0.5).ceil() as i64).clamp(cmin, cmax);
    let mut i1 = (((xhi - lat.ox) / h - 0.5).floor() as i64).clamp(cmin, cmax);
    if i0 > i1 {
        // Thin chord: at most a couple of cells can qualify.
        let lo = i1.min(i0) - 1;
        let hi = i1.max(i0) + 1;
        let hits: Vec<i64> = (lo.max(cmin)..=hi.min(cmax)).filter(|&i| test(i)).collect();
        return match (hits.first(), hits.last()) {
            (Some(&a), Some(&b)) => Some(extend(a, b, &test, cmin, cmax)),
            _ => None,
        };
    }
    while i0 <= i1 && !test(i0) {
        i0 += 1;
    }
    while i1 >= i0 && !test(i1) {
        i1 -= 1;
    }
    if i0 > i1 {
        return None;
    }
    Some(extend(i0, i1, &test, cmin, cmax))
}

fn extend<T: Fn(i64) -> bool>(mut i0: i64, mut i1: i64, test: &T, cmin: i64, cmax: i64) -> (usize, usize) {
    while i0 > cmin && test(i0 - 1) {
        i0 -= 1;
    }
    while i1 < cmax && test(i1 + 1) {
        i1 += 1;
    }
    (i0 as usize, i1 as usize)
}

/// Checks that a shell lies inside the lattice box. Returns `Ok(false)` if it
/// misses the box entirely and an error naming the offending bound if it only
/// partially overlaps.
pub(crate) fn check_shell_extent(s: &Shell, lat: &Lattice) -> Result<bool> {
    let (lo, hi) = s.bbox();
    let (glo, ghi) = ([lat.ox, lat.oy], lat.hi());
    if hi[0] < glo[0] || hi[1] < glo[1] || lo[0] > ghi[0] || lo[1] > ghi[1] {
        return Ok(false);
    }
    let names = ["x_min", "y_min", "x_max", "y_max"];
    let bad = [lo[0] < glo[0], lo[1] < glo[1], hi[0] > ghi[0], hi[1] > ghi[1]];
    if let Some(k) = bad.iter().position(|&b| b) {
        let (val, lim) = match k {
            0 => (lo[0], glo[0]),
            1 => (lo[1], glo[1]),
            2 => (hi[0], ghi[0]),
            _ => (hi[1], ghi[1]),
        };
        return Err(Error::OutOfExtent(format!(
            "shell centre ({:.6},{:.6}) radius {:.6} thickness {:.3e}: {} = {val:.6} beyond grid bound {lim:.6}",
            s.c[0], s.c[1], s.r, s.d, names[k]
        )));
    }
    Ok(true)
}

/// Cells of `spec` whose centres lie in the annulus, as row spans.
///
/// An annulus that misses the grid entirely yields the empty set; one that
/// sticks out of the grid is an error.
pub fn rasterize_annulus(a: &Annulus, spec: &GridSpec) -> Result<Vec<RowSpan>> {
    rasterize_shell(&a.shell(), &spec.lattice())
}

pub(crate) fn rasterize_shell(s: &Shell, lat: &Lattice) -> Result<Vec<RowSpan>> {
    if !check_shell_extent(s, lat)? {
        return Ok(Vec::new());
    }
    Ok(shell_row_spans(s, lat))
}

/// Total number of cells in a span list.
pub fn span_cell_count(spans: &[RowSpan]) -> usize {
    spans.iter().map(RowSpan::len).sum()
}

/// Number of cells common to two span lists (both sorted by row, then column).
pub fn span_overlap_count(a: &[RowSpan], b: &[RowSpan]) -> usize {
    let (mut p, mut q) = (0, 0);
    let mut n = 0;
    while p < a.len() && q < b.len() {
        let (x, y) = (a[p], b[q]);
        if x.j != y.j {
            if x.j < y.j {
                p += 1;
            } else {
                q += 1;
            }
            continue;
        }
        let lo = x.i0.max(y.i0);
        let hi = x.i1.min(y.i1);
        if hi >= lo {
            n += hi + 1 - lo;
        }
        if x.i1 < y.i1 {
            p += 1;
        } else {
            q += 1;
        }
    }
    n
}

/// Lattice of spacing `h` anchored at multiples of `h`, covering `[lo, hi]`.
pub(crate) fn anchored_lattice(lo: [f64; 2], hi: [f64; 2], h: f64) -> Lattice {
    let i0 = (lo[0] / h).floor() - 1.0;
    let j0 = (lo[1] / h).floor() - 1.0;
    let i1 = (hi[0] / h).ceil() + 1.0;
    let j1 = (hi[1] / h).ceil() + 1.0;
    Lattice { ox: i0 * h, oy: j0 * h, h, nx: (i1 - i0) as usize, ny: (j1 - j0) as usize }
}

/// Pixel-counted area of S_δ₁(x,r) ∩ S_δ₂(y,s) on a lattice of spacing
/// min(δ₁,δ₂)/`resolution_divisor` anchored at the origin.
pub fn annulus_intersection_area(a1: &Annulus, a2: &Annulus, resolution_divisor: u32) -> Result<f64> {
    if resolution_divisor < 16 {
        return Err(Error::InvalidParameter(format!("resolution divisor must be at least 16, got {resolution_divisor}")));
    }
    let (s1, s2) = (a1.shell(), a2.shell());
    let h = a1.thickness.min(a2.thickness) / resolution_divisor as f64;
    let (lo1, hi1) = s1.bbox();
    let (lo2, hi2) = s2.bbox();
    let lo = [lo1[0].max(lo2[0]), lo1[1].max(lo2[1])];
    let hi = [hi1[0].min(hi2[0]), hi1[1].min(hi2[1])];
    if lo[0] > hi[0] || lo[1] > hi[1] {
        return Ok(0.0);
    }
    let lat = anchored_lattice(lo, hi, h);
    let n = span_overlap_count(&shell_row_spans(&s1, &lat), &shell_row_spans(&s2, &lat));
    Ok(n as f64 * h * h)
}

/// A (δ,t)-rectangle: the set of points at polar coordinates (ρ, φ) around the
/// parent's centre with |ρ − r| ≤ δ and |φ − θ| ≤ L/(2r), where L = √(δ/t)
/// is the arc length and θ the arc's centre angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangencyRectangle {
    pub parent: Circle,
    pub arc_center_angle: f64,
    pub delta: f64,
    pub t: f64,
}

impl TangencyRectangle {
    pub fn new(parent: Circle, arc_center_angle: f64, delta: f64, t: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= t) {
            return Err(Error::InvalidParameter(format!("(δ,t)-rectangle needs 0 < δ ≤ t, got δ={delta}, t={t}")));
        }
        Ok(Self { parent, arc_center_angle, delta, t })
    }

    /// Arc length √(δ/t).
    pub fn arc_length(&self) -> f64 {
        (self.delta / self.t).sqrt()
    }

    /// Angular half-width of the arc.
    pub fn half_angle(&self) -> f64 {
        (self.arc_length() / (2.0 * self.parent.radius)).min(std::f64::consts::PI)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let dx = p[0] - self.parent.center[0];
        let dy = p[1] - self.parent.center[1];
        let rho = dx.hypot(dy);
        if (rho - self.parent.radius).abs() > self.delta * (1.0 + 1e-12) {
            return false;
        }
        angle_diff(dy.atan2(dx), self.arc_center_angle).abs() <= self.half_angle() * (1.0 + 1e-12)
    }

    /// Sample points: `per_delta` samples per δ of arc length, at the given
    /// relative radial offsets (in units of δ).
    pub fn samples(&self, per_delta: f64, radial: &[f64]) -> Vec<[f64; 2]> {
        let n = ((per_delta * self.arc_length() / self.delta).ceil() as usize).max(2);
        let ha = self.half_angle();
        let mut out = Vec::with_capacity(n * radial.len());
        for k in 0..n {
            let phi = self.arc_center_angle - ha + 2.0 * ha * k as f64 / (n - 1) as f64;
            let (sn, cs) = phi.sin_cos();
            for &o in radial {
                let rho = self.parent.radius + o * self.delta;
                out.push([self.parent.center[0] + rho * cs, self.parent.center[1] + rho * sn]);
            }
        }
        out
    }

    /// Points on the core arc (radial offset 0).
    pub fn core_samples(&self, n: usize) -> Vec<[f64; 2]> {
        let ha = self.half_angle();
        (0..n)
            .map(|k| {
                let phi = self.arc_center_angle - ha + 2.0 * ha * k as f64 / (n.max(2) - 1) as f64;
                self.parent.point_at(phi)
            })
            .collect()
    }
}

/// Signed angle difference wrapped to (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut d = (a - b).rem_euclid(tau);
    if d > std::f64::consts::PI {
        d -= tau;
    }
    d
}

const RADIAL_OFFSETS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// Samples per δ of arc length used by [`comparable`].
pub const COMPARABLE_DENSITY: f64 = 9.0;

/// Whether a single (λδ, t)-rectangle contains both rectangles.
///
/// The container is searched among rectangles on four candidate circles —
/// both parents, their parameter midpoint, and the algebraic least-squares
/// circle through all sample points — each centred at the circular mean angle
/// of the samples. Containment is tested on a dense sample of both
/// rectangles (9 points per δ of arc length, five radial offsets).
pub fn comparable(r1: &TangencyRectangle, r2: &TangencyRectangle, lambda: f64) -> Result<bool> {
    comparable_at_density(r1, r2, lambda, COMPARABLE_DENSITY)
}

/// [`comparable`] with an explicit sampling density.
pub fn comparable_at_density(r1: &TangencyRectangle, r2: &TangencyRectangle, lambda: f64, density: f64) -> Result<bool> {
    if r1.t != r2.t {
        return Err(Error::InvalidParameter(format!("comparability needs equal t, got {} and {}", r1.t, r2.t)));
    }
    if !(lambda >= 1.0) {
        return Err(Error::InvalidParameter(format!("λ must be at least 1, got {lambda}")));
    }
    // Quick rejection: containers have diameter at most λδ·2 + arc length.
    let reach = 2.0 * lambda * r1.delta.max(r2.delta) + (lambda * r1.delta.max(r2.delta) / r1.t).sqrt();
    let m1 = r1.parent.point_at(r1.arc_center_angle);
    let m2 = r2.parent.point_at(r2.arc_center_angle);
    if (m1[0] - m2[0]).hypot(m1[1] - m2[1]) > reach + r1.arc_length() + r2.arc_length() {
        return Ok(false);
    }
    let mut pts = r1.samples(density, &RADIAL_OFFSETS);
    pts.extend(r2.samples(density, &RADIAL_OFFSETS));
    let delta = r1.delta.max(r2.delta);
    let mut circles = vec![r1.parent, r2.parent];
    circles.push(Circle {
        center: [(r1.parent.center[0] + r2.parent.center[0]) / 2.0, (r1.parent.center[1] + r2.parent.center[1]) / 2.0],
        radius: (r1.parent.radius + r2.parent.radius) / 2.0,
    });
    if let Some(c) = kasa_fit(&pts) {
        circles.push(c);
    }
    for c in circles {
        let angle = circular_mean(&pts, c.center);
        let container = TangencyRectangle { parent: c, arc_center_angle: angle, delta: lambda * delta, t: r1.t };
        if pts.iter().all(|&p| container.contains(p)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Mean direction of `pts` seen from `center`.
fn circular_mean(pts: &[[f64; 2]], center: [f64; 2]) -> f64 {
    let (mut s, mut c) = (0.0, 0.0);
    for p in pts {
        let a = (p[1] - center[1]).atan2(p[0] - center[0]);
        s += a.sin();
        c += a.cos();
    }
    s.atan2(c)
}

/// Algebraic (Kåsa) least-squares circle fit.
fn kasa_fit(pts: &[[f64; 2]]) -> Option<Circle> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut suu, mut svv, mut suv, mut suuu, mut svvv, mut suvv, mut svuu) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in pts {
        let u = p[0] - mx;
        let v = p[1] - my;
        suu += u * u;
        svv += v * v;
        suv += u * v;
        suuu += u * u * u;
        svvv += v * v * v;
        suvv += u * v * v;
        svuu += v * u * u;
    }
    let det = suu * svv - suv * suv;
    if det.abs() < 1e-300 {
        return None;
    }
    let b1 = 0.5 * (suuu + suvv);
    let b2 = 0.5 * (svvv + svuu);
    let uc = (b1 * svv - b2 * suv) / det;
    let vc = (suu * b2 - suv * b1) / det;
    let r = (uc * uc + vc * vc + (suu + svv) / n).sqrt();
    (r.is_finite() && r > 0.0).then_some(Circle { center: [uc + mx, vc + my], radius: r })
}

/// Outcome of [`incidence_count_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceResult {
    /// Size of the greedy family of pairwise 100-incomparable rich rectangles.
    pub rect_count: usize,
    /// (#W/μ + #B/ν)^{3/2}.
    pub bound: f64,
    /// The selected rectangles.
    pub rectangles: Vec<TangencyRectangle>,
    /// Number of candidate rectangles that were rich enough.
    pub rich_candidates: usize,
}

/// CSV header of incidence experiment output.
pub const INCIDENCE_CSV_HEADER: &str = "delta,t,mu,nu,rect_count,bound";

impl IncidenceResult {
    pub fn ratio(&self) -> f64 {
        self.rect_count as f64 / self.bound
    }

    /// One row under [`INCIDENCE_CSV_HEADER`].
    pub fn csv_row(&self, delta: f64, t: f64, mu: usize, nu: usize) -> String {
        format!("{delta},{t},{mu},{nu},{},{}", self.rect_count, self.bound)
    }
}

/// Comparability factor for the incidence experiment.
pub const INCIDENCE_LAMBDA: f64 = 100.0;

/// Number of core-arc samples used to decide δ-tangency.
pub const TANGENCY_SAMPLES: usize = 17;

/// Whether circle `c` is δ-tangent to rectangle `rect`: every core-arc
/// sample of the rectangle lies within δ of `c`.
pub fn is_delta_tangent(rect: &TangencyRectangle, c: &Circle) -> bool {
    rect.core_samples(TANGENCY_SAMPLES).iter().all(|&p| c.distance_to(p) <= rect.delta)
}

/// Candidate (δ,t)-rectangles along a circle, spaced by half an arc length.
pub fn candidate_rectangles(c: &Circle, delta: f64, t: f64) -> Result<Vec<TangencyRectangle>> {
    let proto = TangencyRectangle::new(*c, 0.0, delta, t)?;
    let step = proto.half_angle();
    let n = (std::f64::consts::TAU / step).ceil() as usize;
    Ok((0..n).map(|k| TangencyRectangle { arc_center_angle: k as f64 * std::f64::consts::TAU / n as f64, ..proto }).collect())
}

/// Greedy incidence experiment: among all candidate rectangles on circles of
/// W ∪ B, keep those δ-tangent to at least `mu` circles of W and `nu` of B,
/// and extract (in candidate order) a maximal pairwise 100-incomparable
/// subfamily.
pub fn incidence_count_experiment(w: &[Circle], b: &[Circle], delta: f64, t: f64, mu: usize, nu: usize) -> Result<IncidenceResult> {
    if w.is_empty() || b.is_empty() || mu == 0 || nu == 0 {
        return Err(Error::InvalidParameter("incidence experiment needs nonempty W, B and μ, ν ≥ 1".into()));
    }
    if !(delta > 0.0 && delta <= t) {
        return Err(Error::InvalidParameter(format!("need 0 < δ ≤ t, got δ={delta}, t={t}")));
    }
    let all: Vec<Circle> = w.iter().chain(b).copied().collect();
    for (i, c1) in all.iter().enumerate() {
        for c2 in &all[i + 1..] {
            let d = c1.param_distance(c2);
            if d > 6.0 * t {
                return Err(Error::Separation(format!("family diameter {d:.4} exceeds 6t = {:.4}", 6.0 * t)));
            }
        }
    }
    for cw in w {
        for cb in b {
            let d = cw.param_distance(cb);
            if d < t / 10.0 {
                return Err(Error::Separation(format!("W/B pair at parameter distance {d:.4} < t/10 = {:.4}", t / 10.0)));
            }
        }
    }
    let mut rich = Vec::new();
    for c in &all {
        for rect in candidate_rectangles(c, delta, t)? {
            let nw = w.iter().filter(|x| is_delta_tangent(&rect, x)).count();
            if nw < mu {
                continue;
            }
            let nb = b.iter().filter(|x| is_delta_tangent(&rect, x)).count();
            if nb >= nu {
                rich.push(rect);
            }
        }
    }
    let mut selected: Vec<TangencyRectangle> = Vec::new();
    for rect in &rich {
        let mut fresh = true;
        for s in &selected {
            if comparable(rect, s, INCIDENCE_LAMBDA)? {
                fresh = false;
                break;
            }
        }
        if fresh {
            selected.push(*rect);
        }
    }
    let bound = (w.len() as f64 / mu as f64 + b.len() as f64 / nu as f64).powf(1.5);
    Ok(IncidenceResult { rect_count: selected.len(), bound, rectangles: selected, rich_candidates: rich.len() })
}
