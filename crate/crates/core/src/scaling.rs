//! Multi-scale sweeps: one [`ExperimentRecord`] per δ, least-squares fits of
//! log-log slopes, and the conformance verdict for the main mixed-norm
//! estimate.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::averaging::averaged_mixed_norm;
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::extremal::{build_example, cantor_measure, random_union};
use crate::grid::{dyadic_exponent, frostman_constant, DiscreteMeasure, GridFunction, GridSpec};
use crate::mixed_norm::{Exponent, NormParams};

/// Default tolerance on the ratio slope.
pub const DEFAULT_TOLERANCE: f64 = 0.2;

/// CSV header of sweep output.
pub const CSV_HEADER: &str = "id,delta,p,q,s,alpha,m,count_X,lhs,rhs,ratio";

/// One (configuration, δ) measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub id: String,
    pub delta: f64,
    #[serde(skip)]
    pub params: NormParams,
    pub lhs: f64,
    pub rhs: f64,
    /// Metadata such as `m`, `count_X` or `frostman`.
    pub extra: BTreeMap<String, f64>,
}

impl ExperimentRecord {
    pub fn new(id: impl Into<String>, delta: f64, params: NormParams, lhs: f64, rhs: f64) -> Self {
        Self { id: id.into(), delta, params, lhs, rhs, extra: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }

    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// Least-squares line through log-log data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log units.
    pub residual: f64,
    pub n_points: usize,
}

/// Fits log y = slope · log x + intercept.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter(format!("{} abscissae for {} values", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::Precondition(format!("a slope fit needs at least 3 points, got {}", xs.len())));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("log-log fit needs positive finite values, got {v}")));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("log-log fit needs at least two distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(SlopeFit { slope, intercept, residual: (rss / n).sqrt(), n_points: lx.len() })
}

/// Slope of log(lhs) against log(δ).
pub fn fit_scaling_exponent(records: &[ExperimentRecord]) -> Result<SlopeFit> {
    let d: Vec<f64> = records.iter().map(|r| r.delta).collect();
    let l: Vec<f64> = records.iter().map(|r| r.lhs).collect();
    fit_loglog(&d, &l)
}

/// Slope of log(rhs) against log(δ).
pub fn fit_rhs_exponent(records: &[ExperimentRecord]) -> Result<SlopeFit> {
    let d: Vec<f64> = records.iter().map(|r| r.delta).collect();
    let l: Vec<f64> = records.iter().map(|r| r.rhs).collect();
    fit_loglog(&d, &l)
}

/// Slope of log(lhs/rhs) against log(1/δ); positive means the ratio grows
/// as δ → 0.
pub fn fit_ratio_slope(records: &[ExperimentRecord]) -> Result<SlopeFit> {
    let inv: Vec<f64> = records.iter().map(|r| 1.0 / r.delta).collect();
    let ratio: Vec<f64> = records.iter().map(ExperimentRecord::ratio).collect();
    fit_loglog(&inv, &ratio)
}

/// Checks that a δ list is dyadic, strictly decreasing and has ≥ 3 entries.
pub fn validate_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.len() < 3 {
        return Err(Error::Precondition(format!("a sweep needs at least 3 scales, got {}", deltas.len())));
    }
    for &d in deltas {
        if dyadic_exponent(d).is_none() {
            return Err(Error::InvalidScale { value: d, reason: "sweep scales must be 2^-k".into() });
        }
    }
    if deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Precondition("sweep scales must be strictly decreasing".into()));
    }
    Ok(())
}

/// Dyadic scales 2^-k for k = from..=to.
pub fn dyadic_range(from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(crate::grid::dyadic).collect()
}

/// Runs `builder` at every δ (in parallel under `policy`); failures are
/// reported with the scale at which they happened.
pub fn run_sweep<F>(builder: F, deltas: &[f64], policy: ExecPolicy) -> Result<Vec<ExperimentRecord>>
where
    F: Fn(f64) -> Result<ExperimentRecord> + Sync,
{
    validate_deltas(deltas)?;
    policy.try_map(deltas, |&d| builder(d).map_err(|e| Error::AtScale { delta: d, source: Box::new(e) }))
}

fn fmt_exponent(e: Exponent) -> String {
    match e {
        Exponent::Finite(v) => format!("{v}"),
        Exponent::Infinity => "inf".into(),
    }
}

fn fmt_count(v: Option<&f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}

/// CSV rendering, ordered by (id, δ decreasing).
pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut sorted: Vec<&ExperimentRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id).then(b.delta.total_cmp(&a.delta)));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in sorted {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.id,
            r.delta,
            fmt_exponent(r.params.p),
            fmt_exponent(r.params.q),
            fmt_exponent(r.params.s),
            r.params.alpha,
            fmt_count(r.extra.get("m")),
            fmt_count(r.extra.get("count_X")),
            r.lhs,
            r.rhs,
            r.ratio()
        );
    }
    out
}

/// Which of the two cases of the main estimate a parameter set falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremCase {
    /// p = q = 3, α ∈ (0, 1], s ≤ 3/(1−α).
    One,
    /// p = q = 2, α ∈ (1, 2], s ≤ 2/(2−α).
    Two,
}

impl TheoremCase {
    pub fn number(self) -> u8 {
        match self {
            TheoremCase::One => 1,
            TheoremCase::Two => 2,
        }
    }
}

fn is(e: Exponent, v: f64) -> bool {
    matches!(e, Exponent::Finite(x) if (x - v).abs() < 1e-12)
}

/// Classifies `params` into a case of the main estimate or names the
/// violated range.
pub fn theorem_case(params: &NormParams) -> Result<TheoremCase> {
    let (a, is_inv) = (params.alpha, params.s.inverse());
    let bound = |num: f64, den: f64| if den <= 0.0 { "∞".to_string() } else { format!("{}", num / den) };
    if is(params.p, 3.0) && is(params.q, 3.0) {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::OutOfRange(format!("p = q = 3 requires α ∈ (0, 1], got α = {a}")));
        }
        if is_inv < (1.0 - a) / 3.0 - 1e-12 {
            return Err(Error::OutOfRange(format!("s = {} exceeds 3/(1−α) = {} for p = q = 3, α = {a}", params.s, bound(3.0, 1.0 - a))));
        }
        return Ok(TheoremCase::One);
    }
    if is(params.p, 2.0) && is(params.q, 2.0) {
        if !(a > 1.0 && a <= 2.0) {
            return Err(Error::OutOfRange(format!("p = q = 2 requires α ∈ (1, 2], got α = {a}")));
        }
        if is_inv < (2.0 - a) / 2.0 - 1e-12 {
            return Err(Error::OutOfRange(format!("s = {} exceeds 2/(2−α) = {} for p = q = 2, α = {a}", params.s, bound(2.0, 2.0 - a))));
        }
        return Ok(TheoremCase::Two);
    }
    Err(Error::OutOfRange(format!("(p, q) must be (3, 3) or (2, 2), got ({}, {})", params.p, params.q)))
}

/// Family of functions f for conformance sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FFamily {
    /// The f of an extremal example.
    Example(u8),
    /// Seeded union of annuli and rectangles.
    RandomUnion { pieces: usize, seed: u64 },
    /// f ≡ 1 on the standard box (a control with no δ dependence).
    Constant,
}

impl FFamily {
    pub fn label(&self) -> String {
        match self {
            FFamily::Example(id) => format!("ex{id}"),
            FFamily::RandomUnion { pieces, seed } => format!("union{pieces}s{seed}"),
            FFamily::Constant => "const".into(),
        }
    }
}

/// Family of measures ν for conformance sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NuFamily {
    /// Seeded Cantor measure of dimension α, mass δ^α per cell.
    Cantor { seed: u64 },
    /// The ν of the example whose f is used (requires [`FFamily::Example`]).
    ExampleOwn,
}

/// Outcome of a conformance sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub case: u8,
    pub slope: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Builds (f, ν) for one family pair at scale δ.
pub fn build_pair(f: FFamily, nu: NuFamily, delta: f64, alpha: f64) -> Result<(GridFunction, DiscreteMeasure)> {
    let cantor = |seed| cantor_measure(alpha, delta, seed, None);
    match (f, nu) {
        (FFamily::Example(id), NuFamily::ExampleOwn) => {
            let ex = build_example(id, delta, alpha)?;
            Ok((ex.f, ex.nu))
        }
        (FFamily::Example(id), NuFamily::Cantor { seed }) => Ok((build_example(id, delta, alpha)?.f, cantor(seed)?)),
        (FFamily::RandomUnion { pieces, seed: s }, NuFamily::Cantor { seed }) => Ok((random_union(delta, pieces, s)?, cantor(seed)?)),
        (FFamily::Constant, NuFamily::Cantor { seed }) => {
            let k = dyadic_exponent(delta).ok_or_else(|| Error::InvalidScale { value: delta, reason: "δ must be 2^-k".into() })?;
            Ok((GridFunction::constant(GridSpec::standard(k)?, 1.0)?, cantor(seed)?))
        }
        (_, NuFamily::ExampleOwn) => Err(Error::InvalidParameter("the example's own ν needs an example f".into())),
    }
}

/// One record of the main-estimate ratio at scale δ.
pub fn main_estimate_record(params: &NormParams, f: FFamily, nu: NuFamily, delta: f64, policy: ExecPolicy) -> Result<ExperimentRecord> {
    let (func, meas) = build_pair(f, nu, delta, params.alpha)?;
    let lhs = averaged_mixed_norm(&func, &meas, params.q, params.s, delta, policy)?;
    let frostman = frostman_constant(&meas, params.alpha)?;
    let rhs = frostman.powf(params.q.inverse()) * func.lp_norm(params.p);
    Ok(ExperimentRecord::new(f.label(), delta, *params, lhs, rhs).with("count_X", meas.len() as f64).with("frostman", frostman))
}

/// Sweeps the ratio ‖A_δ f‖_{L^q(ν)L^s(I)} / (⟨ν⟩_α^{1/q}‖f‖_p) over δ and
/// passes iff its slope against log(1/δ) is at most `tolerance`.
pub fn verify_main_estimate(
    params: &NormParams,
    f: FFamily,
    nu: NuFamily,
    deltas: &[f64],
    tolerance: f64,
    policy: ExecPolicy,
) -> Result<(Vec<ExperimentRecord>, Verdict)> {
    let case = theorem_case(params)?;
    validate_deltas(deltas)?;
    let records = run_sweep(|d| main_estimate_record(params, f, nu, d, policy), deltas, policy)?;
    let fit = fit_ratio_slope(&records)?;
    let verdict = Verdict { case: case.number(), slope: fit.slope, tolerance, pass: fit.slope <= tolerance };
    Ok((records, verdict))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(d: f64, lhs: f64) -> ExperimentRecord {
        ExperimentRecord::new("t", d, NormParams::finite(2.0, 2.0, 4.0, 1.5).unwrap(), lhs, 1.0)
    }

    #[test]
    fn exact_power_law() {
        let recs: Vec<_> = dyadic_range(3, 9).into_iter().map(|d| rec(d, d.sqrt())).collect();
        let fit = fit_scaling_exponent(&recs).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert_eq!(fit.n_points, 7);
        assert!(fit.residual < 1e-12);
        let r = fit_ratio_slope(&recs).unwrap();
        assert!((r.slope + 0.5).abs() < 1e-12);
    }

    #[test]
    fn fit_preconditions() {
        assert!(fit_scaling_exponent(&[rec(0.5, 1.0), rec(0.25, 2.0)]).is_err());
        assert!(fit_scaling_exponent(&[rec(0.5, 1.0), rec(0.25, 0.0), rec(0.125, 1.0)]).is_err());
    }

    #[test]
    fn delta_list_checks() {
        assert!(matches!(validate_deltas(&[]), Err(Error::Precondition(_))));
        assert!(validate_deltas(&[0.25, 0.5, 0.125]).is_err());
        assert!(validate_deltas(&[0.25, 0.2, 0.125]).is_err());
        assert!(validate_deltas(&dyadic_range(5, 9)).is_ok());
    }

    #[test]
    fn sweep_errors_carry_scale() {
        let e = run_sweep(|d| if d < 0.1 { Err(Error::EmptySet) } else { Ok(rec(d, 1.0)) }, &dyadic_range(2, 5), ExecPolicy::Sequential)
            .unwrap_err();
        assert!(matches!(e, Error::AtScale { delta, .. } if delta == 0.0625));
    }

    #[test]
    fn theorem_cases() {
        let p = |p, q, s, a| NormParams::finite(p, q, s, a).unwrap();
        assert_eq!(theorem_case(&p(3.0, 3.0, 6.0, 0.5)).unwrap(), TheoremCase::One);
        assert_eq!(theorem_case(&p(2.0, 2.0, 8.0, 1.75)).unwrap(), TheoremCase::Two);
        assert_eq!(theorem_case(&p(2.0, 2.0, 9999.0, 2.0)).unwrap(), TheoremCase::Two);
        let e = theorem_case(&p(3.0, 3.0, 9999.0, 0.5)).unwrap_err().to_string();
        assert!(e.contains("3/(1−α)"), "{e}");
        assert!(theorem_case(&p(3.0, 2.0, 2.0, 0.5)).is_err());
        assert!(theorem_case(&p(2.0, 2.0, 2.0, 0.5)).is_err());
    }

    #[test]
    fn csv_layout() {
        let recs = vec![rec(0.25, 2.0).with("count_X", 7.0), rec(0.5, 1.0)];
        let csv = records_to_csv(&recs);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "t,0.5,2,2,4,1.5,,,1,1,1");
        assert_eq!(lines[2], "t,0.25,2,2,4,1.5,,7,2,1,2");
    }
}
