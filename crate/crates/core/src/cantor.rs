//! Seeded base-4 Cantor-type sets with prescribed Katz–Tao dimension.
//!
//! A square of side `side` is split into 4×4 children; T = round(4^α) of
//! them survive, and the construction recurses. After n levels the set is
//! the T^n surviving cell centres at scale side·4^{-n}, so N(δ) ≈ δ^{-α}.
//!
//! The surviving children are those with the T smallest ranks in a 4×4
//! ordered-dither matrix, after a per-node pseudo-random symmetry of the
//! square and a toroidal shift. The dither order spreads the survivors
//! evenly, which keeps the Katz–Tao constant small (≤ 8 in practice). The
//! per-node randomness is a pure function of (seed, level, node index), so
//! the set at scale δ/4 refines the set at scale δ.

use crate::error::{Error, Result};
use crate::grid::dyadic_exponent;
use crate::slicing::KatzTaoSet;

const DITHER: [[u8; 4]; 4] = [[0, 8, 2, 10], [12, 4, 14, 6], [3, 11, 1, 9], [15, 7, 13, 5]];
const DITHER_1D: [u8; 4] = [0, 2, 1, 3];

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn node_hash(seed: u64, level: u32, ix: u64, iy: u64) -> u64 {
    splitmix64(seed ^ splitmix64((level as u64) << 58 ^ splitmix64(ix ^ (iy << 32))))
}

/// Branch count T = round(4^α) for a planar set of dimension α.
pub fn branch_count(alpha: f64) -> usize {
    4f64.powf(alpha).round().clamp(1.0, 16.0) as usize
}

/// Branch count round(4^β) for a one-dimensional set of dimension β ≤ 1.
pub fn branch_count_1d(beta: f64) -> usize {
    4f64.powf(beta).round().clamp(1.0, 4.0) as usize
}

/// Surviving children (a, b) ∈ {0..4}² of one node.
fn children(seed: u64, level: u32, ix: u64, iy: u64, t: usize, forced: Option<(u64, u64)>) -> Vec<(u64, u64)> {
    let h = node_hash(seed, level, ix, iy);
    let sym = h & 7;
    let (sx, sy) = ((h >> 3) & 3, (h >> 5) & 3);
    let rank = |a: u64, b: u64| {
        let (mut u, mut v) = if sym & 4 != 0 { (b, a) } else { (a, b) };
        if sym & 1 != 0 {
            u = 3 - u;
        }
        if sym & 2 != 0 {
            v = 3 - v;
        }
        DITHER[((v + sy) & 3) as usize][((u + sx) & 3) as usize] as usize
    };
    let mut ranked: Vec<(usize, u64, u64)> = (0..4).flat_map(|b| (0..4).map(move |a| (rank(a, b), a, b))).collect();
    ranked.sort_unstable();
    let mut keep: Vec<(u64, u64)> = ranked[..t].iter().map(|&(_, a, b)| (a, b)).collect();
    if let Some(f) = forced {
        if !keep.contains(&f) {
            keep.pop();
            keep.push(f);
        }
    }
    keep
}

/// Builder for planar Cantor sets inside the square `[lo, lo + side]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorBuilder {
    pub alpha: f64,
    pub seed: u64,
    pub lo: [f64; 2],
    pub side: f64,
    /// If set, every level keeps the child containing this point.
    pub anchor: Option<[f64; 2]>,
}

impl CantorBuilder {
    /// Sets in the unit square [0,1]².
    pub fn unit(alpha: f64, seed: u64) -> Self {
        Self { alpha, seed, lo: [0.0, 0.0], side: 1.0, anchor: None }
    }

    /// Sets in the centred square [−side/2, side/2]².
    pub fn centered(alpha: f64, seed: u64, side: f64) -> Self {
        Self { alpha, seed, lo: [-side / 2.0, -side / 2.0], side, anchor: None }
    }

    pub fn with_anchor(mut self, p: [f64; 2]) -> Self {
        self.anchor = Some(p);
        self
    }

    /// Cell indices (at scale side·4^{-levels}) of the surviving cells.
    fn cells(&self, levels: u32) -> Vec<(u64, u64)> {
        let t = branch_count(self.alpha);
        let n_final = 4f64.powi(levels as i32);
        let anchor_cell = self.anchor.map(|p| {
            let fx = ((p[0] - self.lo[0]) / self.side * n_final).floor().clamp(0.0, n_final - 1.0) as u64;
            let fy = ((p[1] - self.lo[1]) / self.side * n_final).floor().clamp(0.0, n_final - 1.0) as u64;
            (fx, fy)
        });
        let mut nodes = vec![(0u64, 0u64)];
        for level in 0..levels {
            let shift = 2 * (levels - level - 1);
            let mut next = Vec::with_capacity(nodes.len() * t);
            for &(ix, iy) in &nodes {
                let forced = anchor_cell.and_then(|(ax, ay)| {
                    ((ax >> (shift + 2)) == ix && (ay >> (shift + 2)) == iy).then(|| ((ax >> shift) & 3, (ay >> shift) & 3))
                });
                for (a, b) in children(self.seed, level, ix, iy, t, forced) {
                    next.push((4 * ix + a, 4 * iy + b));
                }
            }
            nodes = next;
        }
        nodes.sort_unstable_by_key(|&(x, y)| (y, x));
        nodes
    }

    /// The set at scale δ, which must equal side·4^{-n} or side·2·4^{-n-1}
    /// (the latter is built one level finer and merged 2×2).
    pub fn build(&self, delta: f64) -> Result<KatzTaoSet> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        let ratio = self.side / delta;
        let steps = ratio.log2().round();
        if !(steps >= 0.0) || 2f64.powi(steps as i32) != ratio || steps > 40.0 {
            return Err(Error::InvalidScale {
                value: delta,
                reason: format!("δ must be side·2^-j for the Cantor square of side {}", self.side),
            });
        }
        let steps = steps as u32;
        let points = if steps % 2 == 0 {
            self.cells(steps / 2)
                .into_iter()
                .map(|(i, j)| [self.lo[0] + (i as f64 + 0.5) * delta, self.lo[1] + (j as f64 + 0.5) * delta])
                .collect()
        } else {
            let mut merged: Vec<(u64, u64)> = self.cells(steps / 2 + 1).into_iter().map(|(i, j)| (i / 2, j / 2)).collect();
            merged.sort_unstable_by_key(|&(x, y)| (y, x));
            merged.dedup();
            merged.into_iter().map(|(i, j)| [self.lo[0] + (i as f64 + 0.5) * delta, self.lo[1] + (j as f64 + 0.5) * delta]).collect()
        };
        KatzTaoSet::new(points, delta, self.alpha)
    }
}

/// Base-4 Cantor set in [0,1]² at scale δ = 4^{-k}, with T = round(4^α)
/// branches per level chosen pseudo-randomly from `seed`.
pub fn generate_cantor_set(delta: f64, alpha: f64, seed: u64) -> Result<KatzTaoSet> {
    match dyadic_exponent(delta) {
        Some(k) if k % 2 == 0 => CantorBuilder::unit(alpha, seed).build(delta),
        _ => Err(Error::InvalidScale { value: delta, reason: "δ must be a power of 4 (4^-k)".into() }),
    }
}

/// One-dimensional base-4 Cantor set in `[lo, lo + side]` at scale
/// δ = side·4^{-n}: cell centres of the round(4^β) survivors per level.
pub fn cantor_1d(delta: f64, beta: f64, seed: u64, lo: f64, side: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidAlpha(beta));
    }
    let ratio = side / delta;
    let levels = (ratio.log2() / 2.0).round();
    if !(levels >= 0.0) || 4f64.powi(levels as i32) != ratio {
        return Err(Error::InvalidScale { value: delta, reason: "δ must be side·4^-n".into() });
    }
    let t = branch_count_1d(beta);
    let mut nodes = vec![0u64];
    for level in 0..levels as u32 {
        let mut next = Vec::with_capacity(nodes.len() * t);
        for &ix in &nodes {
            let h = node_hash(seed ^ 0x5EED_1D1D, level, ix, 0);
            let flip = h & 1 != 0;
            let shift = (h >> 1) & 3;
            let mut ranked: Vec<(u8, u64)> = (0..4u64)
                .map(|a| {
                    let u = if flip { 3 - a } else { a };
                    (DITHER_1D[((u + shift) & 3) as usize], a)
                })
                .collect();
            ranked.sort_unstable();
            next.extend(ranked[..t].iter().map(|&(_, a)| 4 * ix + a));
        }
        nodes = next;
    }
    nodes.sort_unstable();
    Ok(nodes.into_iter().map(|i| lo + (i as f64 + 0.5) * delta).collect())
}
