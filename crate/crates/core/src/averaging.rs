//! The δ-discretized spherical average
//!
//! A_δ f(x, r) = |S_δ(x,r)|^{-1} ∫_{S_δ(x,r)} f,
//!
//! evaluated on a [`GridFunction`] by summing the cells whose centres lie in
//! the annulus and dividing by the exact annulus area π((r+δ)² − (r−δ)²₊)
//! (= 4πrδ for r ≥ δ). The evaluation scale δ must be at least the grid
//! scale; at δ ≥ 8·(grid δ) the cell count matches the area to a few percent.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::geometry::{check_shell_extent, in_shell, shell_area, shell_row_spans, span_cell_count, Shell};
use crate::grid::{DiscreteMeasure, GridFunction};
use crate::mixed_norm::{mixed_norm, Exponent, ProfileTable};

/// One evaluated average A_δ f(x, r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageSample {
    pub x: [f64; 2],
    pub r: f64,
    pub value: f64,
}

impl AverageSample {
    pub fn evaluate(f: &GridFunction, x: [f64; 2], r: f64, delta: f64) -> Result<Self> {
        Ok(Self { x, r, value: discretized_average(f, x, r, delta)? })
    }
}

fn check_scale(f: &GridFunction, delta: f64) -> Result<()> {
    let g = f.spec().delta();
    if !(delta >= g * (1.0 - 1e-12)) || !delta.is_finite() {
        return Err(Error::InvalidScale { value: delta, reason: format!("evaluation scale must be at least the grid scale {g}") });
    }
    Ok(())
}

fn check_inside(f: &GridFunction, s: &Shell) -> Result<()> {
    if !(s.r >= 0.0) || !s.r.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be nonnegative, got {}", s.r)));
    }
    if !check_shell_extent(s, &f.spec().lattice())? {
        return Err(Error::OutOfExtent(format!("annulus at ({:.6},{:.6}) radius {:.6} lies outside the grid", s.c[0], s.c[1], s.r)));
    }
    Ok(())
}

/// A_δ f(x, r).
pub fn discretized_average(f: &GridFunction, x: [f64; 2], r: f64, delta: f64) -> Result<f64> {
    check_scale(f, delta)?;
    let s = Shell::new(x, r, delta);
    check_inside(f, &s)?;
    let total: f64 = shell_row_spans(&s, &f.spec().lattice()).iter().map(|sp| f.row_range_sum(sp.j, sp.i0, sp.i1)).sum();
    Ok(total * f.spec().cell_area() / shell_area(r, delta))
}

/// Number of grid cells in S_δ(x, r_k) for every radius.
fn shell_counts(f: &GridFunction, x: [f64; 2], r_grid: &[f64], delta: f64) -> Vec<usize> {
    let lat = f.spec().lattice();
    r_grid.iter().map(|&r| span_cell_count(&shell_row_spans(&Shell::new(x, r, delta), &lat))).collect()
}

fn validate_profile(f: &GridFunction, x: [f64; 2], r_grid: &[f64], delta: f64) -> Result<()> {
    check_scale(f, delta)?;
    if r_grid.is_empty() {
        return Err(Error::InvalidParameter("empty radius grid".into()));
    }
    if r_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidParameter("radius grid must be nondecreasing".into()));
    }
    check_inside(f, &Shell::new(x, r_grid[0], delta))?;
    check_inside(f, &Shell::new(x, *r_grid.last().unwrap(), delta))
}

/// Profile core: bins the stored cells by radius; the background enters
/// through per-radius cell counts.
fn profile_core(f: &GridFunction, x: [f64; 2], r_grid: &[f64], delta: f64, counts: Option<&[usize]>) -> Vec<f64> {
    let spec = f.spec();
    let lat = spec.lattice();
    let n = r_grid.len();
    let mut sums = vec![0.0; n];
    let reach = r_grid[n - 1] + delta;
    let jlo = (((x[1] - reach - lat.oy) / lat.h) - 1.0).floor().max(0.0) as usize;
    let jhi = ((((x[1] + reach - lat.oy) / lat.h) + 1.0).ceil().max(0.0) as usize).min(lat.ny);
    let (jlo, jhi) = match f.stored_row_range() {
        Some((a, b)) => (jlo.max(a), jhi.min(b + 1)),
        None => (0, 0),
    };
    let uniform = n >= 2 && {
        let step = (r_grid[n - 1] - r_grid[0]) / (n - 1) as f64;
        step > 0.0 && r_grid.iter().enumerate().all(|(k, &r)| (r - (r_grid[0] + k as f64 * step)).abs() <= 1e-12 * r.max(1.0))
    };
    let step = if uniform { (r_grid[n - 1] - r_grid[0]) / (n - 1) as f64 } else { 0.0 };
    for j in jlo..jhi {
        let (cols, vals) = f.row(j);
        if cols.is_empty() {
            continue;
        }
        let dy = lat.cy(j) - x[1];
        if dy.abs() > reach + lat.h {
            continue;
        }
        let ilo = ((x[0] - reach - lat.ox) / lat.h - 1.0).floor().max(0.0) as u32;
        let ihi = ((x[0] + reach - lat.ox) / lat.h + 1.0).ceil().max(0.0) as u32;
        let a = cols.partition_point(|&c| c < ilo);
        let b = cols.partition_point(|&c| c <= ihi);
        for t in a..b {
            let dx = lat.cx(cols[t] as usize) - x[0];
            let rho = (dx * dx + dy * dy).sqrt();
            let lo = rho - delta;
            let mut k = if uniform {
                (((lo - r_grid[0]) / step).floor() - 1.0).max(0.0) as usize
            } else {
                r_grid.partition_point(|&r| r < lo - 1e-9 * delta)
            };
            while k < n && r_grid[k] <= rho + delta * (1.0 + 1e-9) {
                if in_shell(dx, dy, r_grid[k], delta) {
                    sums[k] += vals[t];
                }
                k += 1;
            }
        }
    }
    let bg = f.background();
    let owned;
    let counts = match (bg > 0.0, counts) {
        (false, _) => None,
        (true, Some(c)) => Some(c),
        (true, None) => {
            owned = shell_counts(f, x, r_grid, delta);
            Some(owned.as_slice())
        }
    };
    let area = spec.cell_area();
    (0..n)
        .map(|k| {
            let base = counts.map_or(0.0, |c| bg * c[k] as f64);
            (base + sums[k]) * area / shell_area(r_grid[k], delta)
        })
        .collect()
}

/// A_δ f(x, r) for every r in a nondecreasing radius grid.
pub fn average_profile(f: &GridFunction, x: [f64; 2], r_grid: &[f64], delta: f64) -> Result<Vec<f64>> {
    validate_profile(f, x, r_grid, delta)?;
    Ok(profile_core(f, x, r_grid, delta, None))
}

/// Offset of `x` inside its grid cell; cell counts of annuli depend on the
/// centre only through this offset.
fn offset_class(f: &GridFunction, x: [f64; 2]) -> (u64, u64) {
    let l = f.spec().lattice();
    let ox = (x[0] - l.ox).rem_euclid(l.h);
    let oy = (x[1] - l.oy).rem_euclid(l.h);
    (ox.to_bits(), oy.to_bits())
}

/// One profile per centre: row `n` holds A_δ f(points[n], r) for r in `r_grid`.
pub fn average_table(f: &GridFunction, points: &[[f64; 2]], r_grid: &[f64], delta: f64, policy: ExecPolicy) -> Result<ProfileTable> {
    for &x in points {
        validate_profile(f, x, r_grid, delta)?;
    }
    // Background cell counts are shared by all centres with the same sub-cell offset.
    let mut classes: HashMap<(u64, u64), usize> = HashMap::new();
    let mut reps: Vec<[f64; 2]> = Vec::new();
    if f.background() > 0.0 {
        for &x in points {
            classes.entry(offset_class(f, x)).or_insert_with(|| {
                reps.push(x);
                reps.len() - 1
            });
        }
    }
    let counts = policy.map(&reps, |&x| shell_counts(f, x, r_grid, delta));
    let rows = policy.map(points, |&x| {
        let c = classes.get(&offset_class(f, x)).map(|&k| counts[k].as_slice());
        profile_core(f, x, r_grid, delta, c)
    });
    ProfileTable::from_rows(rows)
}

/// `x1,x2,r,value` rows for a profile table over `points` × `r_grid`.
pub fn profile_csv(points: &[[f64; 2]], r_grid: &[f64], table: &ProfileTable) -> String {
    let mut s = String::from("x1,x2,r,value\n");
    for (n, x) in points.iter().enumerate() {
        for (k, r) in r_grid.iter().enumerate() {
            s.push_str(&format!("{},{},{},{}\n", x[0], x[1], r, table.get(n, k)));
        }
    }
    s
}

/// Midpoint radii 1 + (k + ½)δ, k = 0..1/δ, sampling I = [1, 2] at spacing δ.
pub fn unit_interval_radii(delta: f64) -> Vec<f64> {
    let n = (1.0 / delta).round().max(1.0) as usize;
    (0..n).map(|k| 1.0 + (k as f64 + 0.5) * delta).collect()
}

/// ‖A_δ f‖_{L^q(ν) L^s(I)} with I = [1,2] sampled at the midpoint radii.
pub fn averaged_mixed_norm(
    f: &GridFunction,
    nu: &DiscreteMeasure,
    q: Exponent,
    s: Exponent,
    delta: f64,
    policy: ExecPolicy,
) -> Result<f64> {
    if nu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    let radii = unit_interval_radii(delta);
    let table = average_table(f, &nu.centers(), &radii, delta, policy)?;
    mixed_norm(&table, nu, q, s, delta)
}
