//! Text and binary formats: exact dyadic literals, point sets, circle
//! families, multiplicity grids, `key = value` configuration files, and
//! reproducibility headers carrying a SHA-256 of the body.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{dyadic, dyadic_exponent};

/// Crate version embedded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parses a scale: either an exact dyadic literal `2^-k` or a positive
/// decimal.
pub fn parse_scale(s: &str) -> Result<f64> {
    let t = s.trim();
    if let Some(rest) = t.strip_prefix("2^") {
        let e: i32 = rest.trim().parse().map_err(|_| Error::Parse(format!("bad dyadic literal {t:?}")))?;
        if !(-1000..=0).contains(&e) {
            return Err(Error::Parse(format!("dyadic exponent must be in -1000..=0, got {e}")));
        }
        return Ok(2f64.powi(e));
    }
    let v: f64 = t.parse().map_err(|_| Error::Parse(format!("bad scale {t:?}")))?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Parse(format!("scale must be positive, got {t:?}")));
    }
    Ok(v)
}

/// Renders a scale as `2^-k` when dyadic, otherwise as a decimal.
pub fn format_scale(d: f64) -> String {
    match dyadic_exponent(d) {
        Some(k) => format!("2^-{k}"),
        None => format!("{d}"),
    }
}

/// Parses a list of scales: `2^-a..2^-b` (every dyadic scale between the
/// two, in the order written) or a comma-separated list.
pub fn parse_scale_list(s: &str) -> Result<Vec<f64>> {
    let t = s.trim();
    if let Some((a, b)) = t.split_once("..") {
        let (da, db) = (parse_scale(a)?, parse_scale(b)?);
        let (ka, kb) = match (dyadic_exponent(da), dyadic_exponent(db)) {
            (Some(ka), Some(kb)) => (ka, kb),
            _ => return Err(Error::Parse(format!("range endpoints must be dyadic: {t:?}"))),
        };
        return Ok(if ka <= kb { (ka..=kb).map(dyadic).collect() } else { (kb..=ka).rev().map(dyadic).collect() });
    }
    t.split(',').filter(|x| !x.trim().is_empty()).map(parse_scale).collect()
}

/// Parses a rational or decimal number such as `1/2`, `7/4` or `0.75`.
pub fn parse_real(s: &str) -> Result<f64> {
    let t = s.trim();
    let v = match t.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| Error::Parse(format!("bad number {t:?}")))?;
            let b: f64 = b.trim().parse().map_err(|_| Error::Parse(format!("bad number {t:?}")))?;
            a / b
        }
        None => t.parse().map_err(|_| Error::Parse(format!("bad number {t:?}")))?,
    };
    if !v.is_finite() {
        return Err(Error::Parse(format!("number must be finite, got {t:?}")));
    }
    Ok(v)
}

/// A point set (optionally weighted) in the line-oriented text format:
/// header `delta=<2^-k> alpha=<float>`, then `x y [weight]` per line.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSetFile {
    pub delta: f64,
    pub alpha: f64,
    pub points: Vec<[f64; 2]>,
    pub weights: Option<Vec<f64>>,
}

impl PointSetFile {
    pub fn to_text(&self) -> String {
        let mut s = format!("delta={} alpha={}\n", format_scale(self.delta), self.alpha);
        for (n, p) in self.points.iter().enumerate() {
            match &self.weights {
                Some(w) => writeln!(s, "{:.16e} {:.16e} {:.16e}", p[0], p[1], w[n]),
                None => writeln!(s, "{:.16e} {:.16e}", p[0], p[1]),
            }
            .expect("writing to a String cannot fail");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Parse("empty point-set file".into()))?;
        let (mut delta, mut alpha) = (None, None);
        for tok in header.split_whitespace() {
            match tok.split_once('=') {
                Some(("delta", v)) => delta = Some(parse_scale(v)?),
                Some(("alpha", v)) => alpha = Some(parse_real(v)?),
                _ => return Err(Error::Parse(format!("unexpected header token {tok:?}"))),
            }
        }
        let delta = delta.ok_or_else(|| Error::Parse("header lacks delta=".into()))?;
        let alpha = alpha.ok_or_else(|| Error::Parse("header lacks alpha=".into()))?;
        let mut points = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut arity = None;
        for (n, line) in lines.enumerate() {
            let vals = line.split_whitespace().map(parse_real).collect::<Result<Vec<f64>>>()?;
            if !(vals.len() == 2 || vals.len() == 3) || arity.is_some_and(|a| a != vals.len()) {
                return Err(Error::Parse(format!("point line {} has {} fields", n + 2, vals.len())));
            }
            arity = Some(vals.len());
            points.push([vals[0], vals[1]]);
            if vals.len() == 3 {
                weights.push(vals[2]);
            }
        }
        let weights = (arity == Some(3)).then_some(weights);
        Ok(Self { delta, alpha, points, weights })
    }
}

/// Circles as `x y r` lines.
pub fn circles_to_text(circles: impl IntoIterator<Item = ([f64; 2], f64)>) -> String {
    let mut s = String::new();
    for (c, r) in circles {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", c[0], c[1], r);
    }
    s
}

pub fn parse_circles(text: &str) -> Result<Vec<([f64; 2], f64)>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let v = l.split_whitespace().map(parse_real).collect::<Result<Vec<f64>>>()?;
            match v.as_slice() {
                [x, y, r] => Ok(([*x, *y], *r)),
                _ => Err(Error::Parse(format!("circle line {l:?} must have 3 fields"))),
            }
        })
        .collect()
}

/// Size of the text header of the multiplicity binary format.
pub const GRID_HEADER_LEN: usize = 32;

/// Flat row-major little-endian f64 values behind a 32-byte text header
/// `delta=2^-k extent=NXxNY`, space-padded and newline-terminated.
pub fn encode_grid(delta: f64, nx: usize, ny: usize, values: &[f64]) -> Result<Vec<u8>> {
    if values.len() != nx * ny {
        return Err(Error::InvalidParameter(format!("{} values for a {nx}x{ny} grid", values.len())));
    }
    let head = format!("delta={} extent={nx}x{ny}", format_scale(delta));
    if head.len() > GRID_HEADER_LEN - 1 {
        return Err(Error::InvalidParameter(format!("grid header {head:?} exceeds {} bytes", GRID_HEADER_LEN - 1)));
    }
    let mut out = Vec::with_capacity(GRID_HEADER_LEN + 8 * values.len());
    out.extend_from_slice(format!("{head:<31}\n").as_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Inverse of [`encode_grid`]: (δ, nx, ny, values).
pub fn decode_grid(bytes: &[u8]) -> Result<(f64, usize, usize, Vec<f64>)> {
    if bytes.len() < GRID_HEADER_LEN || bytes[GRID_HEADER_LEN - 1] != b'\n' {
        return Err(Error::Parse("missing 32-byte grid header".into()));
    }
    let head = std::str::from_utf8(&bytes[..GRID_HEADER_LEN - 1]).map_err(|_| Error::Parse("grid header is not UTF-8".into()))?;
    let (mut delta, mut ext) = (None, None);
    for tok in head.split_whitespace() {
        match tok.split_once('=') {
            Some(("delta", v)) => delta = Some(parse_scale(v)?),
            Some(("extent", v)) => {
                let (a, b) = v.split_once('x').ok_or_else(|| Error::Parse(format!("bad extent {v:?}")))?;
                let nx: usize = a.parse().map_err(|_| Error::Parse(format!("bad extent {v:?}")))?;
                let ny: usize = b.parse().map_err(|_| Error::Parse(format!("bad extent {v:?}")))?;
                ext = Some((nx, ny));
            }
            _ => return Err(Error::Parse(format!("unexpected grid header token {tok:?}"))),
        }
    }
    let delta = delta.ok_or_else(|| Error::Parse("grid header lacks delta".into()))?;
    let (nx, ny) = ext.ok_or_else(|| Error::Parse("grid header lacks extent".into()))?;
    let body = &bytes[GRID_HEADER_LEN..];
    if body.len() != 8 * nx * ny {
        return Err(Error::Parse(format!("grid body has {} bytes, expected {}", body.len(), 8 * nx * ny)));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    Ok((delta, nx, ny, values))
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("config line {} lacks '=': {raw:?}", n + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse(format!("config line {} has an empty key", n + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Hex SHA-256 of `data`.
pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Run metadata written ahead of every output body.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunHeader {
    pub command: String,
    pub seed: u64,
    pub params: BTreeMap<String, String>,
}

impl RunHeader {
    /// `#`-prefixed header lines (program, version, seed, every parameter,
    /// SHA-256 of the body) followed by the body itself.
    pub fn wrap(&self, body: &str) -> String {
        let mut s = format!("# annulus-lab {VERSION} {}\n# seed={}\n", self.command, self.seed);
        for (k, v) in &self.params {
            let _ = writeln!(s, "# {k}={v}");
        }
        let _ = writeln!(s, "# sha256={}", sha256_hex(body.as_bytes()));
        s.push_str(body);
        s
    }
}

/// Splits a wrapped output into (header lines, body) and checks the hash.
pub fn verify_wrapped(text: &str) -> Result<&str> {
    let mut rest = text;
    let mut hash = None;
    while let Some(line) = rest.strip_prefix('#') {
        let (l, tail) = line.split_once('\n').unwrap_or((line, ""));
        if let Some(h) = l.trim().strip_prefix("sha256=") {
            hash = Some(h.to_string());
        }
        rest = tail;
    }
    let hash = hash.ok_or_else(|| Error::Parse("output lacks a sha256 header".into()))?;
    if sha256_hex(rest.as_bytes()) != hash {
        return Err(Error::Parse("body does not match its sha256 header".into()));
    }
    Ok(rest)
}
