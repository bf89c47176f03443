//! `annulus-lab`: command-line front end for the experiments.
//!
//! Exit codes: 0 on success, 1 when a verdict fails, 2 on usage or
//! precondition errors.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use annulus_lab::averaging::{average_profile, average_table, profile_csv, unit_interval_radii};
use annulus_lab::cantor::CantorBuilder;
use annulus_lab::exec::set_worker_threads;
use annulus_lab::extremal::{admissible_region, build_example, necessary_margins, region_vertices};
use annulus_lab::geometry::{incidence_count_experiment, Circle, INCIDENCE_CSV_HEADER};
use annulus_lab::grid::{frostman_witness, katz_tao_witness, measure_from_points, GridFunction, GridSpec};
use annulus_lab::io::{encode_grid, parse_circles, parse_config, parse_real, parse_scale, parse_scale_list, PointSetFile, RunHeader};
use annulus_lab::mixed_norm::{dual_counting_norm, family_grid, multiplicity_grid, theorem_rhs, Exponent, NormParams};
use annulus_lab::scaling::{
    build_pair, fit_ratio_slope, fit_rhs_exponent, fit_scaling_exponent, main_estimate_record, records_to_csv, run_sweep,
    verify_main_estimate, ExperimentRecord, FFamily, NuFamily, DEFAULT_TOLERANCE,
};
use annulus_lab::slicing::{retention_floor, slice_by_tubes_with, CircleFamily, KatzTaoSet};
use annulus_lab::wave::holder_sweep;
use annulus_lab::ExecPolicy;

#[derive(Debug, Parser)]
#[command(name = "annulus-lab", version, about = "δ-discretized circular averages against fractal measures")]
struct Cli {
    /// Seed for every pseudo-random construction.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the main output (with a reproducibility header) to this file.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads; 1 selects the sequential path.
    #[arg(long, global = true, env = "ANNULUS_LAB_JOBS")]
    jobs: Option<usize>,
    /// `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded Cantor-type Katz–Tao set.
    #[command(args_override_self = true)]
    Generate(GenerateArgs),
    /// Frostman and Katz–Tao constants of a point set.
    #[command(args_override_self = true)]
    Frostman(FrostmanArgs),
    /// Discretized averages A_δ f(x, r).
    #[command(args_override_self = true)]
    Avg(AvgArgs),
    /// ‖A_δ f‖_{L^q(ν)L^s(I)} and the right-hand side ⟨ν⟩_α^{1/q}‖f‖_p.
    #[command(args_override_self = true)]
    MixedNorm(MixedNormArgs),
    /// Dual counting norm of a circle family against its predicted bound.
    #[command(args_override_self = true)]
    DualNorm(DualNormArgs),
    /// Configuration summary of an extremal example.
    #[command(args_override_self = true)]
    Example(ExampleArgs),
    /// Multi-scale sweep with log-log slope fits.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Slice a Katz–Tao set into δ-tubes.
    #[command(args_override_self = true)]
    Slice(SliceArgs),
    /// Tangency-rectangle incidence count.
    #[command(args_override_self = true)]
    Incidence(IncidenceArgs),
    /// Hölder regularity of wave traces and box counts of rough points.
    #[command(args_override_self = true)]
    Wave(WaveArgs),
    /// Classify (1/q, 1/s) against the admissible ranges.
    #[command(args_override_self = true)]
    Region(RegionArgs),
}

fn scale(s: &str) -> Result<f64, String> {
    parse_scale(s).map_err(|e| e.to_string())
}

fn real(s: &str) -> Result<f64, String> {
    parse_real(s).map_err(|e| e.to_string())
}

fn exponent(s: &str) -> Result<Exponent, String> {
    s.parse::<Exponent>().map_err(|e| e.to_string())
}

/// A list of scales, parsed as one argument (`2^-5..2^-9` or `a,b,c`).
#[derive(Debug, Clone)]
struct Scales(Vec<f64>);

fn scales(s: &str) -> Result<Scales, String> {
    parse_scale_list(s).map(Scales).map_err(|e| e.to_string())
}

fn point(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected x1,x2, got {s:?}"))?;
    Ok([real(a)?, real(b)?])
}

fn pair(s: &str) -> Result<(f64, f64), String> {
    point(s).map(|p| (p[0], p[1]))
}

/// Comma-separated reals, parsed as one argument.
#[derive(Debug, Clone)]
struct Reals(Vec<f64>);

fn reals(s: &str) -> Result<Reals, String> {
    s.split(',').map(real).collect::<Result<_, _>>().map(Reals)
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Scale δ = 2^-k, written `2^-k` or as a decimal.
    #[arg(long, value_parser = scale)]
    delta: f64,
    /// Dimension α ∈ (0, 2].
    #[arg(long, value_parser = real)]
    alpha: f64,
    /// Side of a centred square; the unit square [0,1]² when omitted.
    #[arg(long, value_parser = real)]
    side: Option<f64>,
}

#[derive(Debug, Args)]
struct FrostmanArgs {
    /// Point-set file; a Cantor set is generated when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Scale δ = 2^-k, written `2^-k` or as a decimal.
    #[arg(long, value_parser = scale)]
    delta: Option<f64>,
    /// Dimension α ∈ (0, 2].
    #[arg(long, value_parser = real)]
    alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NuChoice {
    Own,
    Cantor,
}

#[derive(Debug, Args)]
struct FSelect {
    /// f of an extremal example (1–5).
    #[arg(long, conflicts_with_all = ["union", "constant"])]
    example: Option<u8>,
    /// Seeded union of this many annuli/rectangles.
    #[arg(long, conflicts_with = "constant")]
    union: Option<usize>,
    /// f ≡ 1.
    #[arg(long)]
    constant: bool,
}

impl FSelect {
    fn family(&self, seed: u64) -> Result<FFamily> {
        match (self.example, self.union, self.constant) {
            (Some(id), None, false) => Ok(FFamily::Example(id)),
            (None, Some(pieces), false) => Ok(FFamily::RandomUnion { pieces, seed }),
            (None, None, true) => Ok(FFamily::Constant),
            _ => bail!("choose exactly one of --example, --union, --constant"),
        }
    }
}

fn nu_family(choice: Option<NuChoice>, f: FFamily, seed: u64) -> NuFamily {
    match (choice, f) {
        (Some(NuChoice::Own), _) | (None, FFamily::Example(_)) => NuFamily::ExampleOwn,
        _ => NuFamily::Cantor { seed },
    }
}

#[derive(Debug, Args)]
struct AvgArgs {
    #[command(flatten)]
    f: FSelect,
    /// Scale δ = 2^-k, written `2^-k` or as a decimal.
    #[arg(long, value_parser = scale)]
    delta: f64,
    /// Dimension α ∈ (0, 2].
    #[arg(long, value_parser = real)]
    alpha: f64,
    /// Measure ν: the example's own, or a seeded Cantor measure.
    #[arg(long, value_enum)]
    nu: Option<NuChoice>,
    /// Single centre; the support of ν is used when omitted.
    #[arg(long, value_parser = point)]
    x: Option<[f64; 2]>,
    /// Single radius; the midpoints of I = [1,2] at spacing δ when omitted.
    #[arg(long, value_parser = real)]
    r: Option<f64>,
}

#[derive(Debug, Args)]
struct MixedNormArgs {
    #[command(flatten)]
    f: FSelect,
    /// Scale δ = 2^-k, written `2^-k` or as a decimal.
    #[arg(long, value_parser = scale)]
    delta: f64,
    /// Dimension α ∈ (0, 2].
    #[arg(long, value_parser = real)]
    alpha: f64,
    /// Measure ν: the example's own, or a seeded Cantor measure.
    #[arg(long, value_enum)]
    nu: Option<NuChoice>,
    /// Exponent p of ‖f‖_p (`inf` allowed).
    #[arg(long, value_parser = exponent)]
    p: Exponent,
    /// Outer exponent q over ν (`inf` allowed).
    #[arg(long, value_parser = exponent)]
    q: Exponent,
    /// Inner exponent s over the radius (`inf` allowed).
    #[arg(long, value_parser = exponent)]
    s: Exponent,
}

#[derive(Debug, Args)]
struct DualNormArgs {
    /// Scale δ = 2^-k, written `2^-k` or as a decimal.
    #[arg(long, value_parser = scale)]
    delta: f64,
    /// Dimension α ∈ (0, 2].
    #[arg(long, value_parser = real)]
    alpha: f64,
    /// Radii per centre.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Exponent p' of the counting norm.
    #[arg(long, value_parser = exponent, default_value = "2")]
    pprime: Exponent,
    /// Defaults to the conjugate of p'.
    #[arg(long, value_parser = exponent)]
    q: Option<Exponent>,
    /// Inner exponent s over the radius (`inf` allowed).
    #[arg(long, value_parser = exponent)]
    s: Exponent,
    /// Also write the multiplicity grid in the binary format.
    #[arg(long)]
    grid_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExampleArgs {
    /// Example number, 1–5.
    #[arg(long)]
    id: u8,
    /// Scale δ = 2^-k, written `2^-k` or as a decimal.
    #[arg(long, value_parser = scale)]
    delta: f64,
    /// Dimension α ∈ (0, 2].
    #[arg(long, value_parser = real)]
    alpha: f64,
    /// Exponent p of ‖f‖_p (`inf` allowed).
    #[arg(long, value_parser = exponent)]
    p: Option<Exponent>,
    /// Outer exponent q over ν (`inf` allowed).
    #[arg(long, value_parser = exponent)]
    q: Option<Exponent>,
    /// Inner exponent s over the radius (`inf` allowed).
    #[arg(long, value_parser = exponent)]
    s: Option<Exponent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Ex1,
    Ex2,
    Ex3,
    Ex4,
    Ex5,
    Union,
    Const,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep an extremal example (LHS/RHS exponents).
    #[arg(long, conflicts_with = "theorem")]
    example: Option<u8>,
    /// Verify the main estimate's ratio slope instead.
    #[arg(long)]
    theorem: bool,
    /// f family for --theorem.
    #[arg(long, value_enum, default_value = "const")]
    family: Family,
    /// Measure ν: the example's own, or a seeded Cantor measure.
    #[arg(long, value_enum)]
    nu: Option<NuChoice>,
    /// Pieces of the random union family.
    #[arg(long, default_value_t = 16)]
    pieces: usize,
    /// Dimension α ∈ (0, 2].
    #[arg(long, value_parser = real)]
    alpha: f64,
    /// Exponent p of ‖f‖_p (`inf` allowed).
    #[arg(long, value_parser = exponent)]
    p: Exponent,
    /// Outer exponent q over ν (`inf` allowed).
    #[arg(long, value_parser = exponent)]
    q: Exponent,
    /// Inner exponent s over the radius (`inf` allowed).
    #[arg(long, value_parser = exponent)]
    s: Exponent,
    /// Scales, as a range `2^-a..2^-b` or a comma list.
    #[arg(long, value_parser = scales, default_value = "2^-5..2^-9")]
    deltas: Scales,
    /// Largest ratio slope accepted by --theorem.
    #[arg(long, value_parser = real, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
}

#[derive(Debug, Args)]
struct SliceArgs {
    /// Point-set file; a Cantor set is generated when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Scale δ = 2^-k, written `2^-k` or as a decimal.
    #[arg(long, value_parser = scale)]
    delta: Option<f64>,
    /// Dimension α ∈ (0, 2].
    #[arg(long, value_parser = real)]
    alpha: Option<f64>,
    /// Direction sector `a,b` in radians.
    #[arg(long, value_parser = pair)]
    sector: Option<(f64, f64)>,
    /// Directions sampled in the sector.
    #[arg(long, default_value_t = 32)]
    candidates: usize,
}

#[derive(Debug, Args)]
struct IncidenceArgs {
    /// Scale δ = 2^-k, written `2^-k` or as a decimal.
    #[arg(long, value_parser = scale)]
    delta: f64,
    /// Tangency parameter t ∈ [δ, 1] of the (δ, t)-rectangles.
    #[arg(long, value_parser = scale)]
    t: f64,
    /// Keep rectangles δ-tangent to at least this many circles of W.
    #[arg(long, default_value_t = 1)]
    mu: usize,
    /// Keep rectangles δ-tangent to at least this many circles of B.
    #[arg(long, default_value_t = 1)]
    nu: usize,
    /// Circles of W as `x y r` lines; a seeded tangent family when omitted.
    #[arg(long)]
    w: Option<PathBuf>,
    /// Circles of B as `x y r` lines.
    #[arg(long)]
    b: Option<PathBuf>,
    /// Size of each generated family.
    #[arg(long, default_value_t = 8)]
    n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Source {
    Ball,
    Singular,
    TwoSingular,
}

#[derive(Debug, Args)]
struct WaveArgs {
    /// Initial velocity h.
    #[arg(long, value_enum, default_value = "ball")]
    h: Source,
    /// Ball radius, or singularity exponent γ for the singular sources.
    #[arg(long, value_parser = real, default_value = "1/2")]
    a: f64,
    /// Hölder exponent β of the time-trace norm.
    #[arg(long, value_parser = real, default_value = "1/4")]
    beta: f64,
    /// Final time T.
    #[arg(long = "T", value_parser = real, default_value = "1")]
    t_max: f64,
    /// Comma-separated thresholds λ for the rough-point box counts.
    #[arg(long, value_parser = reals, default_value = "2")]
    thresholds: Reals,
    /// Sample points per axis of [−1/4, 1/4]².
    #[arg(long, default_value_t = 9)]
    samples: usize,
    /// Points of the uniform time grid on [0, T].
    #[arg(long, default_value_t = 129)]
    times: usize,
    /// Cell side of the grid carrying h.
    #[arg(long, value_parser = scale, default_value = "2^-9")]
    grid: f64,
    /// Shell thickness δ of the circular means.
    #[arg(long, value_parser = scale, default_value = "2^-6")]
    delta_eval: f64,
    /// Quadrature nodes of the Abel transform.
    #[arg(long, default_value_t = 256)]
    quad: usize,
}

#[derive(Debug, Args)]
struct RegionArgs {
    /// Exponent p of ‖f‖_p (`inf` allowed).
    #[arg(long, value_parser = exponent)]
    p: Exponent,
    /// Dimension α ∈ (0, 2].
    #[arg(long, value_parser = real)]
    alpha: f64,
    /// 1/q.
    #[arg(long, value_parser = real)]
    q_inv: f64,
    /// 1/s.
    #[arg(long, value_parser = real)]
    s_inv: f64,
}

/// Result of one command: main body, optional stdout summary, verdict.
struct Output {
    body: String,
    summary: Option<String>,
    pass: bool,
}

impl Output {
    fn body(body: String) -> Self {
        Self { body, summary: None, pass: true }
    }
}

fn json_line(v: serde_json::Value) -> String {
    format!("{v}\n")
}

fn k_of(delta: f64) -> Result<u32> {
    annulus_lab::grid::dyadic_exponent(delta).ok_or_else(|| anyhow!("δ must be 2^-k, got {delta}"))
}

fn load_points(input: &Option<PathBuf>, delta: Option<f64>, alpha: Option<f64>, seed: u64) -> Result<PointSetFile> {
    match input {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut f = PointSetFile::parse(&text)?;
            if let Some(a) = alpha {
                f.alpha = a;
            }
            Ok(f)
        }
        None => {
            let (d, a) = match (delta, alpha) {
                (Some(d), Some(a)) => (d, a),
                _ => bail!("give --input or both --delta and --alpha"),
            };
            let x = CantorBuilder::unit(a, seed).build(d)?;
            Ok(PointSetFile { delta: d, alpha: a, points: x.points().to_vec(), weights: None })
        }
    }
}

fn generate(a: &GenerateArgs, seed: u64) -> Result<Output> {
    let b = match a.side {
        Some(side) => CantorBuilder::centered(a.alpha, seed, side),
        None => CantorBuilder::unit(a.alpha, seed),
    };
    let x = b.build(a.delta)?;
    Ok(Output::body(PointSetFile { delta: a.delta, alpha: a.alpha, points: x.points().to_vec(), weights: None }.to_text()))
}

fn frostman(a: &FrostmanArgs, seed: u64, policy: ExecPolicy) -> Result<Output> {
    let f = load_points(&a.input, a.delta, a.alpha, seed)?;
    let weights = f.weights.clone().unwrap_or_else(|| vec![f.delta.powf(f.alpha); f.points.len()]);
    let mu = measure_from_points(&f.points, &weights, f.delta)?;
    let fw = frostman_witness(&mu, f.alpha, policy)?;
    let kt = katz_tao_witness(&f.points, f.delta, f.alpha, policy)?;
    Ok(Output::body(json_line(json!({
        "n": f.points.len(),
        "delta": f.delta,
        "alpha": f.alpha,
        "mass": mu.total_mass(),
        "frostman_constant": fw.value,
        "frostman_center": fw.center,
        "frostman_radius": fw.radius,
        "katz_tao_constant": kt.value,
        "katz_tao_center": kt.center,
        "katz_tao_radius": kt.radius,
    }))))
}

fn avg(a: &AvgArgs, seed: u64, policy: ExecPolicy) -> Result<Output> {
    let fam = a.f.family(seed)?;
    let (f, nu) = build_pair(fam, nu_family(a.nu, fam, seed), a.delta, a.alpha)?;
    let points = match a.x {
        Some(x) => vec![x],
        None => nu.centers(),
    };
    if let (Some(x), Some(r)) = (a.x, a.r) {
        let v = average_profile(&f, x, &[r], a.delta)?[0];
        return Ok(Output::body(json_line(json!({ "x": x, "r": r, "delta": a.delta, "value": v }))));
    }
    let radii = match a.r {
        Some(r) => vec![r],
        None => unit_interval_radii(a.delta),
    };
    let table = average_table(&f, &points, &radii, a.delta, policy)?;
    Ok(Output::body(profile_csv(&points, &radii, &table)))
}

fn mixed_norm_cmd(a: &MixedNormArgs, seed: u64, policy: ExecPolicy) -> Result<Output> {
    let fam = a.f.family(seed)?;
    let params = NormParams::new(a.p, a.q, a.s, a.alpha)?;
    let rec = main_estimate_record(&params, fam, nu_family(a.nu, fam, seed), a.delta, policy)?;
    Ok(Output::body(json_line(json!({
        "family": rec.id,
        "delta": rec.delta,
        "lhs": rec.lhs,
        "rhs": rec.rhs,
        "ratio": rec.ratio(),
        "frostman_constant": rec.extra["frostman"],
        "count_X": rec.extra["count_X"],
    }))))
}

fn dual_norm(a: &DualNormArgs, seed: u64, policy: ExecPolicy) -> Result<Output> {
    let k = k_of(a.delta)?;
    let q = a.q.unwrap_or_else(|| a.pprime.conjugate());
    let params = NormParams::new(a.pprime.conjugate(), q, a.s, a.alpha)?;
    let x = CantorBuilder::unit(a.alpha, seed).build(a.delta)?;
    let count = x.len();
    let fam = CircleFamily::random(x, a.m, seed)?;
    let spec = family_grid(&fam, k)?;
    let norm = if let Some(path) = &a.grid_out {
        let g = multiplicity_grid(&fam, &spec, policy)?;
        let vals: Vec<f64> = g.counts().iter().map(|&c| c as f64).collect();
        std::fs::write(path, encode_grid(a.delta, spec.nx(), spec.ny(), &vals)?).with_context(|| format!("writing {}", path.display()))?;
        g.lp_norm(a.pprime)
    } else {
        dual_counting_norm(&fam, a.pprime, &spec)?
    };
    let rhs = theorem_rhs(&params, a.delta, a.m, count)?;
    Ok(Output::body(json_line(json!({
        "delta": a.delta, "alpha": a.alpha, "m": a.m, "count_X": count,
        "dual_norm": norm, "rhs": rhs, "ratio": norm / rhs,
    }))))
}

fn default_params(alpha: f64, p: Option<Exponent>, q: Option<Exponent>, s: Option<Exponent>) -> Result<NormParams> {
    let (dp, ds) = if alpha <= 1.0 {
        (3.0, Exponent::from_inverse((1.0 - alpha) / 3.0)?)
    } else {
        (2.0, Exponent::from_inverse((2.0 - alpha) / 2.0)?)
    };
    let dp = Exponent::finite(dp)?;
    Ok(NormParams::new(p.unwrap_or(dp), q.unwrap_or(dp), s.unwrap_or(ds), alpha)?)
}

fn example(a: &ExampleArgs) -> Result<Output> {
    let params = default_params(a.alpha, a.p, a.q, a.s)?;
    let ex = build_example(a.id, a.delta, a.alpha)?;
    let summary = ex.summary(&params)?;
    let mut v = serde_json::to_value(summary)?;
    v["p"] = json!(params.p.to_string());
    v["q"] = json!(params.q.to_string());
    v["s"] = json!(params.s.to_string());
    Ok(Output::body(json_line(v)))
}

fn sweep(a: &SweepArgs, seed: u64, policy: ExecPolicy) -> Result<Output> {
    let params = NormParams::new(a.p, a.q, a.s, a.alpha)?;
    if a.theorem {
        let f = match a.family {
            Family::Ex1 => FFamily::Example(1),
            Family::Ex2 => FFamily::Example(2),
            Family::Ex3 => FFamily::Example(3),
            Family::Ex4 => FFamily::Example(4),
            Family::Ex5 => FFamily::Example(5),
            Family::Union => FFamily::RandomUnion { pieces: a.pieces, seed },
            Family::Const => FFamily::Constant,
        };
        let (records, verdict) = verify_main_estimate(&params, f, nu_family(a.nu, f, seed), &a.deltas.0, a.tolerance, policy)?;
        return Ok(Output { body: records_to_csv(&records), summary: Some(json_line(serde_json::to_value(verdict)?)), pass: verdict.pass });
    }
    let id = a.example.ok_or_else(|| anyhow!("give --example ID or --theorem"))?;
    let (lhs_pred, rhs_pred) = annulus_lab::extremal::predicted_exponents(id, &params)?;
    let records = run_sweep(
        |d| -> annulus_lab::Result<ExperimentRecord> {
            let ex = build_example(id, d, a.alpha)?;
            let lhs = ex.lhs(params.q, params.s, policy)?;
            let rhs = ex.rhs(params.p, params.q)?;
            Ok(ExperimentRecord::new(format!("ex{id}"), d, params, lhs, rhs).with("count_X", ex.nu.len() as f64))
        },
        &a.deltas.0,
        policy,
    )?;
    let lf = fit_scaling_exponent(&records)?;
    let rf = fit_rhs_exponent(&records)?;
    let ratio = fit_ratio_slope(&records)?;
    let summary = json!({
        "example": id,
        "lhs_slope": lf.slope, "lhs_residual": lf.residual, "predicted_lhs_exponent": lhs_pred,
        "rhs_slope": rf.slope, "predicted_rhs_exponent": rhs_pred,
        "ratio_slope": ratio.slope, "n_points": lf.n_points,
    });
    Ok(Output { body: records_to_csv(&records), summary: Some(json_line(summary)), pass: true })
}

fn slice(a: &SliceArgs, seed: u64, policy: ExecPolicy) -> Result<Output> {
    let f = load_points(&a.input, a.delta, a.alpha, seed)?;
    let x = KatzTaoSet::new(f.points, f.delta, f.alpha)?;
    let sector = a.sector.unwrap_or((0.0, TAU / 100.0));
    let dec = slice_by_tubes_with(&x, sector, a.candidates, policy)?;
    let summary = json!({
        "angle": dec.angle, "tubes": dec.tubes.len(), "retention": dec.retention(),
        "retention_floor": retention_floor(f.delta), "max_tube_constant": dec.max_tube_constant(),
        "kt_constant": x.kt_constant(), "epsilon0": dec.epsilon0,
    });
    Ok(Output { body: dec.to_csv(), summary: Some(json_line(summary)), pass: true })
}

fn read_circles(path: &PathBuf) -> Result<Vec<Circle>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_circles(&text)?.into_iter().map(|(c, r)| Circle::new(c, r).map_err(Into::into)).collect()
}

/// Two families internally tangent at a common point: W slightly larger,
/// B slightly smaller than the unit circle.
fn tangent_families(n: usize, t: f64, seed: u64) -> Result<(Vec<Circle>, Vec<Circle>)> {
    let theta = (seed % 360) as f64 * TAU / 360.0;
    let p = [theta.cos(), theta.sin()];
    let make = |sign: f64| -> Result<Vec<Circle>> {
        (0..n)
            .map(|i| {
                let r = 1.0 + sign * t * (0.2 + 0.3 * i as f64 / n.max(1) as f64);
                Ok(Circle::new([(1.0 - r) * p[0], (1.0 - r) * p[1]], r)?)
            })
            .collect()
    };
    Ok((make(1.0)?, make(-1.0)?))
}

fn incidence(a: &IncidenceArgs, seed: u64) -> Result<Output> {
    let (w, b) = match (&a.w, &a.b) {
        (Some(w), Some(b)) => (read_circles(w)?, read_circles(b)?),
        (None, None) => tangent_families(a.n, a.t, seed)?,
        _ => bail!("give both --w and --b, or neither"),
    };
    let res = incidence_count_experiment(&w, &b, a.delta, a.t, a.mu, a.nu)?;
    Ok(Output::body(format!("{INCIDENCE_CSV_HEADER}\n{}\n", res.csv_row(a.delta, a.t, a.mu, a.nu))))
}

fn wave(a: &WaveArgs, policy: ExecPolicy) -> Result<Output> {
    let k = k_of(a.grid)?;
    let half = a.t_max + 0.25 + 2.0 * a.delta_eval + 0.5;
    let spec = GridSpec::covering(k, [-half, -half], [half, half])?;
    let (lo, hi) = ([-half, -half], [half, half]);
    let gamma = a.a;
    let sing = |p: [f64; 2], c: [f64; 2]| {
        let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
        if d <= 1.0 {
            d.max(a.grid / 2.0).powf(-gamma)
        } else {
            0.0
        }
    };
    let h = match a.h {
        Source::Ball => GridFunction::from_fn(spec, lo, hi, |p| if p[0] * p[0] + p[1] * p[1] <= a.a * a.a { 1.0 } else { 0.0 })?,
        Source::Singular => GridFunction::from_fn(spec, lo, hi, |p| sing(p, [0.0, 0.0]))?,
        Source::TwoSingular => GridFunction::from_fn(spec, lo, hi, |p| sing(p, [-0.125, 0.0]) + sing(p, [0.125, 0.0]))?,
    };
    let n = a.samples.max(1);
    let points: Vec<[f64; 2]> = (0..n * n)
        .map(|i| {
            let step = if n > 1 { 0.5 / (n - 1) as f64 } else { 0.0 };
            [-0.25 + (i % n) as f64 * step, -0.25 + (i / n) as f64 * step]
        })
        .collect();
    let sw = holder_sweep(&h, &points, a.beta, a.t_max, &a.thresholds.0, a.times, a.delta_eval, a.quad, policy)?;
    let summary: String = sw.summaries.iter().map(|s| json_line(serde_json::to_value(s).expect("serializable"))).collect();
    Ok(Output { body: sw.to_csv(), summary: Some(summary), pass: true })
}

fn region(a: &RegionArgs) -> Result<Output> {
    let r = admissible_region(a.p, a.alpha, a.q_inv, a.s_inv)?;
    let verts = region_vertices(a.p, a.alpha)?;
    let conds = match (Exponent::from_inverse(a.q_inv), Exponent::from_inverse(a.s_inv)) {
        (Ok(q), Ok(s)) => necessary_margins(&NormParams { p: a.p, q, s, alpha: a.alpha }).map(|m| m.map(|v| v >= -1e-12)).to_vec(),
        _ => vec![None; 5],
    };
    Ok(Output::body(json_line(json!({
        "p": a.p.to_string(), "alpha": a.alpha, "q_inv": a.q_inv, "s_inv": a.s_inv,
        "region": r.to_string(), "necessary": conds, "boundary": verts.boundary,
        "vertices": verts.vertices.into_iter().collect::<BTreeMap<_, _>>(),
    }))))
}

/// Inserts `--key value` pairs from the config file right after the
/// subcommand, so explicit flags (which come later) override them.
fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let pos = argv.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else { return Ok(argv) };
    let path = match argv[pos].split_once('=') {
        Some((_, p)) => p.to_string(),
        None => argv.get(pos + 1).cloned().ok_or_else(|| anyhow!("--config needs a path"))?,
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let map = parse_config(&text)?;
    let sub = argv.iter().skip(1).position(|a| !a.starts_with('-') && Command::is_name(a)).map(|i| i + 1);
    let Some(sub) = sub else { return Ok(argv) };
    let mut extra = Vec::new();
    for (k, v) in map {
        let flag = format!("--{}", k.replace('_', "-"));
        match v.as_str() {
            "true" => extra.push(flag),
            "false" => {}
            _ => {
                extra.push(flag);
                extra.push(v);
            }
        }
    }
    let mut out = argv[..=sub].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[sub + 1..]);
    Ok(out)
}

impl Command {
    fn is_name(s: &str) -> bool {
        use clap::CommandFactory;
        Cli::command().get_subcommands().any(|c| c.get_name() == s)
    }
}

fn run(cli: &Cli) -> Result<Output> {
    let policy = match cli.jobs {
        Some(1) => ExecPolicy::Sequential,
        Some(n) => {
            set_worker_threads(n);
            ExecPolicy::Parallel
        }
        None => ExecPolicy::Parallel,
    };
    let seed = cli.seed;
    match &cli.command {
        Command::Generate(a) => generate(a, seed),
        Command::Frostman(a) => frostman(a, seed, policy),
        Command::Avg(a) => avg(a, seed, policy),
        Command::MixedNorm(a) => mixed_norm_cmd(a, seed, policy),
        Command::DualNorm(a) => dual_norm(a, seed, policy),
        Command::Example(a) => example(a),
        Command::Sweep(a) => sweep(a, seed, policy),
        Command::Slice(a) => slice(a, seed, policy),
        Command::Incidence(a) => incidence(a, seed),
        Command::Wave(a) => wave(a, policy),
        Command::Region(a) => region(a),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Generate(_) => "generate",
        Command::Frostman(_) => "frostman",
        Command::Avg(_) => "avg",
        Command::MixedNorm(_) => "mixed-norm",
        Command::DualNorm(_) => "dual-norm",
        Command::Example(_) => "example",
        Command::Sweep(_) => "sweep",
        Command::Slice(_) => "slice",
        Command::Incidence(_) => "incidence",
        Command::Wave(_) => "wave",
        Command::Region(_) => "region",
    }
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
    let out = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let header = RunHeader {
        command: command_name(&cli.command).into(),
        seed: cli.seed,
        params: BTreeMap::from([("args".to_string(), format!("{:?}", cli.command))]),
    };
    let wrapped = header.wrap(&out.body);
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &wrapped) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{wrapped}"),
    }
    if let Some(s) = &out.summary {
        print!("{s}");
    }
    ExitCode::from(if out.pass { 0 } else { 1 })
}
