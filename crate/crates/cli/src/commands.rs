use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use stiefel_fourier::asymptotics::stationary_phase_leading;
use stiefel_fourier::evaluate::{applicable_methods, evaluate_spectrum, EvalConfig, MethodChoice};
use stiefel_fourier::haar::{mc_trace_moment, pool, MIN_SAMPLES};
use stiefel_fourier::verify::{loglog_slope, run_suite, sign_check};
use stiefel_fourier::{ErrorEstimate, FourierEstimate, Normalization};

use crate::args::{CompareArgs, EvalArgs, Format, MomentsArgs, NormArg, NumericArgs, SweepArgs, VerifyArgs};
use crate::error::{CliError, CliResult};
use crate::input::{resolve, spectrum_from_values, Frequency};
use crate::report::{
    join_values, write_csv, write_json, CheckRow, CompareRow, EvalRow, MomentRow, PairRow, SignCheckRow, SweepRow,
};

/// Deviations above this many combined error units are flagged.
pub const FLAG_UNITS: f64 = 3.0;

/// Sign-check taus; the separation is judged at 64.
const SIGN_TAUS: [f64; 5] = [8.0, 16.0, 32.0, 64.0, 128.0];

fn checked_config(numeric: &NumericArgs) -> CliResult<EvalConfig> {
    if numeric.samples < MIN_SAMPLES {
        return Err(CliError::Usage(format!("--samples must be at least {MIN_SAMPLES}")));
    }
    for (name, v) in [("--tol-zero", numeric.tol_zero), ("--tol-gap", numeric.tol_gap), ("--quad-tol", numeric.quad_tol)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(numeric.config())
}

fn error_kind(e: ErrorEstimate) -> &'static str {
    match e {
        ErrorEstimate::Statistical(_) => "statistical",
        ErrorEstimate::Truncation(_) => "truncation",
    }
}

fn normalize(est: FourierEstimate, f: &Frequency, norm: NormArg) -> FourierEstimate {
    let factor = Normalization::from(norm).factor(f.n, f.k);
    if factor == 1.0 {
        return est;
    }
    est.scaled(factor).with_note(format!("normalization: {} (factor {factor})", norm.as_str()))
}

#[derive(Serialize)]
struct EvalJson<'a> {
    n: usize,
    k: usize,
    spectrum: &'a [f64],
    normalization: &'a str,
    requested_method: &'a str,
    method: &'a str,
    value: f64,
    error: f64,
    error_kind: &'a str,
    samples_or_nodes: u64,
    total_mass: f64,
    trail: &'a [String],
}

pub fn eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult<bool> {
    let f = resolve(&args.input)?;
    let cfg = checked_config(&args.numeric)?;
    let requested = MethodChoice::from(args.method);
    let mut est = evaluate_spectrum(&f.spectrum, requested, &cfg)?;
    if f.from_matrix {
        est.trail.insert(0, format!("svd: singular values {}", join_values(f.spectrum.values())));
    }
    let est = normalize(est, &f, args.output.normalization);
    let norm = args.output.normalization.as_str();
    match args.output.format {
        Format::Table => {
            writeln!(out, "St({}, {}) at singular values ({})", f.n, f.k, join_values(f.spectrum.values()).replace(';', ", "))?;
            writeln!(out, "value          {}", est.value)?;
            writeln!(out, "error          {} ({})", est.error.magnitude(), error_kind(est.error))?;
            writeln!(out, "method         {}", est.method)?;
            writeln!(out, "samples/nodes  {}", est.samples_or_nodes)?;
            writeln!(out, "total mass     {} ({norm})", est.total_mass)?;
            writeln!(out, "decision trail")?;
            for (i, step) in est.trail.iter().enumerate() {
                writeln!(out, "  {}. {step}", i + 1)?;
            }
        }
        Format::Csv => write_csv(
            out,
            &[EvalRow {
                n: f.n,
                k: f.k,
                spectrum: join_values(f.spectrum.values()),
                normalization: norm.into(),
                method: est.method.as_str().into(),
                value: est.value,
                error: est.error.magnitude(),
                error_kind: error_kind(est.error).into(),
                samples_or_nodes: est.samples_or_nodes,
                total_mass: est.total_mass,
                trail: est.trail.join(" | "),
            }],
        )?,
        Format::Json => write_json(
            out,
            "eval",
            &EvalJson {
                n: f.n,
                k: f.k,
                spectrum: f.spectrum.values(),
                normalization: norm,
                requested_method: requested.as_str(),
                method: est.method.as_str(),
                value: est.value,
                error: est.error.magnitude(),
                error_kind: error_kind(est.error),
                samples_or_nodes: est.samples_or_nodes,
                total_mass: est.total_mass,
                trail: &est.trail,
            },
        )?,
    }
    Ok(true)
}

/// Pairwise deviations between successful rows, in combined-error units.
/// A floor of `1e-12·max(1, |a|, |b|)` keeps two exact values comparable.
pub fn pairwise(rows: &[CompareRow]) -> Vec<PairRow> {
    let ok: Vec<&CompareRow> = rows.iter().filter(|r| r.status == "ok").collect();
    let mut pairs = Vec::new();
    for (i, a) in ok.iter().enumerate() {
        for b in &ok[i + 1..] {
            let delta = a.value - b.value;
            let floor = 1e-12 * 1f64.max(a.value.abs()).max(b.value.abs());
            let combined = a.error.hypot(b.error).max(floor);
            let units = delta.abs() / combined;
            pairs.push(PairRow {
                a: a.method.clone(),
                b: b.method.clone(),
                delta,
                combined_error: combined,
                units,
                flagged: units > FLAG_UNITS,
            });
        }
    }
    pairs
}

#[derive(Serialize)]
struct CompareJson<'a> {
    n: usize,
    k: usize,
    spectrum: &'a [f64],
    normalization: &'a str,
    methods: &'a [CompareRow],
    pairs: &'a [PairRow],
    flagged: usize,
}

pub fn compare(args: &CompareArgs, out: &mut dyn Write) -> CliResult<bool> {
    let f = resolve(&args.input)?;
    let cfg = checked_config(&args.numeric)?;
    let applicable = applicable_methods(&f.spectrum, &cfg);
    let mut rows: Vec<CompareRow> = MethodChoice::ALL_CONCRETE
        .iter()
        .map(|&m| {
            let blank = |status: &str, message: String| CompareRow {
                method: m.as_str().into(),
                status: status.into(),
                value: f64::NAN,
                error: f64::NAN,
                error_kind: String::new(),
                worst_units: f64::NAN,
                worst_against: String::new(),
                message,
            };
            if !applicable.contains(&m) {
                return blank("skipped", "preconditions not met".into());
            }
            match evaluate_spectrum(&f.spectrum, m, &cfg) {
                Ok(est) => {
                    let est = normalize(est, &f, args.output.normalization);
                    CompareRow {
                        value: est.value,
                        error: est.error.magnitude(),
                        error_kind: error_kind(est.error).into(),
                        ..blank("ok", String::new())
                    }
                }
                Err(e) => blank("error", e.to_string()),
            }
        })
        .collect();
    let pairs = pairwise(&rows);
    for row in &mut rows {
        for p in pairs.iter().filter(|p| p.a == row.method || p.b == row.method) {
            if row.worst_units.is_nan() || p.units > row.worst_units {
                row.worst_units = p.units;
                row.worst_against = if p.a == row.method { p.b.clone() } else { p.a.clone() };
            }
        }
    }
    let flagged = pairs.iter().filter(|p| p.flagged).count();
    let norm = args.output.normalization.as_str();
    match args.output.format {
        Format::Table => {
            writeln!(out, "St({}, {}) at singular values ({}), {norm} measure", f.n, f.k, join_values(f.spectrum.values()).replace(';', ", "))?;
            writeln!(out, "{:<12} {:<8} {:>24} {:>12} {:<12}", "method", "status", "value", "error", "kind")?;
            for r in &rows {
                if r.status == "ok" {
                    writeln!(out, "{:<12} {:<8} {:>24.16e} {:>12.3e} {:<12}", r.method, r.status, r.value, r.error, r.error_kind)?;
                } else {
                    writeln!(out, "{:<12} {:<8} {}", r.method, r.status, r.message)?;
                }
            }
            writeln!(out)?;
            writeln!(out, "{:<12} {:<12} {:>12} {:>10}", "a", "b", "delta", "units")?;
            for p in &pairs {
                writeln!(
                    out,
                    "{:<12} {:<12} {:>12.3e} {:>10.2}{}",
                    p.a,
                    p.b,
                    p.delta,
                    p.units,
                    if p.flagged { "  FLAGGED" } else { "" }
                )?;
            }
            writeln!(out, "{flagged} pair(s) differ by more than {FLAG_UNITS} combined error units")?;
        }
        Format::Csv => write_csv(out, &rows)?,
        Format::Json => write_json(
            out,
            "compare",
            &CompareJson {
                n: f.n,
                k: f.k,
                spectrum: f.spectrum.values(),
                normalization: norm,
                methods: &rows,
                pairs: &pairs,
                flagged,
            },
        )?,
    }
    Ok(true)
}

#[derive(Serialize)]
struct SweepJson<'a> {
    n: usize,
    k: usize,
    direction: &'a [f64],
    exact_method: &'a str,
    normalization: &'a str,
    rows: &'a [SweepRow],
    rel_err_slope: f64,
    notes: &'a [String],
}

/// Best exact evaluator for `spectrum`, if any.
fn exact_method(applicable: &[MethodChoice]) -> Option<MethodChoice> {
    [MethodChoice::ClosedForm, MethodChoice::Quadrature, MethodChoice::Recursive]
        .into_iter()
        .find(|m| applicable.contains(m))
}

pub fn sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult<bool> {
    let (n, k) = (args.n, args.k);
    let direction = spectrum_from_values(n, k, &args.direction)?;
    if args.taus.is_empty() || args.taus.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(CliError::Usage("--taus must be positive".into()));
    }
    let cfg = checked_config(&args.numeric)?;
    let method = match args.method {
        Some(m) => MethodChoice::from(m),
        None => exact_method(&applicable_methods(&direction, &cfg))
            .ok_or_else(|| CliError::Eval(stiefel_fourier::Error::Unsupported(format!("no exact method for St({n}, {k})"))))?,
    };
    let factor = Normalization::from(args.output.normalization).factor(n, k);
    let order = (n as f64 - k as f64 + 2.0) / 2.0;
    let results: Vec<CliResult<(SweepRow, Option<String>)>> = pool().install(|| {
        args.taus
            .par_iter()
            .map(|&tau| {
                let s = direction.scaled(tau);
                let exact = evaluate_spectrum(&s, method, &cfg)?.value * factor;
                let (leading, note) = match stationary_phase_leading(&s) {
                    Ok(est) => (est.value * factor, None),
                    Err(e) => (f64::NAN, Some(format!("tau = {tau}: leading term unavailable: {e}"))),
                };
                let abs_err = (exact - leading).abs();
                Ok((
                    SweepRow {
                        tau,
                        exact,
                        leading,
                        abs_err,
                        scaled_err: abs_err * tau.powf(order),
                        rel_err: abs_err / exact.abs(),
                    },
                    note,
                ))
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    let mut notes = Vec::new();
    for r in results {
        let (row, note) = r?;
        rows.push(row);
        notes.extend(note);
    }
    let taus: Vec<f64> = rows.iter().map(|r| r.tau).collect();
    let rel: Vec<f64> = rows.iter().map(|r| r.rel_err).collect();
    let slope = if rows.len() >= 2 && rel.iter().all(|v| v.is_finite() && *v > 0.0) {
        loglog_slope(&taus, &rel)
    } else {
        f64::NAN
    };
    match args.output.format {
        Format::Table => {
            writeln!(out, "St({n}, {k}) along direction ({}), exact by {method}", join_values(direction.values()).replace(';', ", "))?;
            writeln!(
                out,
                "{:>8} {:>24} {:>24} {:>12} {:>12} {:>12}",
                "tau", "exact", "leading", "abs_err", "scaled_err", "rel_err"
            )?;
            for r in &rows {
                writeln!(
                    out,
                    "{:>8} {:>24.16e} {:>24.16e} {:>12.4e} {:>12.4e} {:>12.4e}",
                    r.tau, r.exact, r.leading, r.abs_err, r.scaled_err, r.rel_err
                )?;
            }
            if slope.is_finite() {
                writeln!(out, "log-log slope of rel_err: {slope:.4}")?;
            }
            for note in &notes {
                writeln!(out, "note: {note}")?;
            }
        }
        Format::Csv => write_csv(out, &rows)?,
        Format::Json => write_json(
            out,
            "sweep",
            &SweepJson {
                n,
                k,
                direction: direction.values(),
                exact_method: method.as_str(),
                normalization: args.output.normalization.as_str(),
                rows: &rows,
                rel_err_slope: slope,
                notes: &notes,
            },
        )?,
    }
    Ok(true)
}

#[derive(Serialize)]
struct MomentsJson<'a> {
    k: usize,
    samples: u64,
    seed: u64,
    rows: &'a [MomentRow],
}

pub fn moments(args: &MomentsArgs, out: &mut dyn Write) -> CliResult<bool> {
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    if args.samples < MIN_SAMPLES {
        return Err(CliError::Usage(format!("--samples must be at least {MIN_SAMPLES}")));
    }
    let rows = (0..=args.max_m)
        .map(|m| {
            let (mean, std_error) = mc_trace_moment(args.k, m, args.samples, args.seed)?;
            Ok(MomentRow { m, mean, std_error })
        })
        .collect::<CliResult<Vec<_>>>()?;
    match args.format {
        Format::Table => {
            writeln!(out, "E[(Tr X)^m] for Haar X in O({}), {} samples, seed {}", args.k, args.samples, args.seed)?;
            writeln!(out, "{:>4} {:>24} {:>12}", "m", "mean", "std_error")?;
            for r in &rows {
                writeln!(out, "{:>4} {:>24.16e} {:>12.4e}", r.m, r.mean, r.std_error)?;
            }
        }
        Format::Csv => write_csv(out, &rows)?,
        Format::Json => write_json(
            out,
            "moments",
            &MomentsJson {
                k: args.k,
                samples: args.samples,
                seed: args.seed,
                rows: &rows,
            },
        )?,
    }
    Ok(true)
}

#[derive(Serialize)]
struct VerifyJson<'a> {
    passed: usize,
    failed: usize,
    checks: &'a [CheckRow],
}

#[derive(Serialize)]
struct SignJson<'a> {
    rows: &'a [SignCheckRow],
    separation: &'a [(usize, f64)],
    passed: bool,
}

pub fn verify(args: &VerifyArgs, out: &mut dyn Write) -> CliResult<bool> {
    if args.sign_check {
        return verify_signs(args.format, out);
    }
    let report = run_suite(args.quick)?;
    let rows: Vec<CheckRow> = report
        .checks
        .iter()
        .map(|c| CheckRow {
            name: c.name.clone(),
            passed: c.passed,
            observed: c.observed,
            bound: c.bound,
        })
        .collect();
    let (passed, failed) = (report.passed(), report.failed());
    match args.format {
        Format::Table => {
            for r in &rows {
                writeln!(
                    out,
                    "{} {:<48} {:>10.3e} <= {:.1e}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.observed,
                    r.bound
                )?;
            }
            writeln!(out, "{passed} passed, {failed} failed")?;
        }
        Format::Csv => write_csv(out, &rows)?,
        Format::Json => write_json(
            out,
            "verify",
            &VerifyJson {
                passed,
                failed,
                checks: &rows,
            },
        )?,
    }
    Ok(failed == 0)
}

/// Both amplitude conventions against exact `k = 2` values along `(2, 1)`.
/// For `n = 5` integer taus make the two conventions coincide, so that
/// sweep is shifted by `1/8`.
fn verify_signs(format: Format, out: &mut dyn Write) -> CliResult<bool> {
    let mut rows = Vec::new();
    let mut separation = Vec::new();
    for (n, offset) in [(4, 0.0), (5, 0.125)] {
        let sweep = sign_check(n, &SIGN_TAUS, offset)?;
        let at64 = &sweep[3];
        separation.push((n, at64.rel_minus() / at64.rel_plus()));
        rows.extend(sweep.iter().map(|r| SignCheckRow {
            n: r.n,
            tau: r.tau,
            exact: r.exact,
            plus: r.plus,
            minus: r.minus,
            rel_plus: r.rel_plus(),
            rel_minus: r.rel_minus(),
        }));
    }
    let passed = separation.iter().all(|&(_, ratio)| ratio >= 10.0);
    match format {
        Format::Table => {
            writeln!(
                out,
                "{:>3} {:>9} {:>24} {:>12} {:>12}",
                "n", "tau", "exact", "rel_plus", "rel_minus"
            )?;
            for r in &rows {
                writeln!(out, "{:>3} {:>9} {:>24.16e} {:>12.4e} {:>12.4e}", r.n, r.tau, r.exact, r.rel_plus, r.rel_minus)?;
            }
            for (n, ratio) in &separation {
                writeln!(out, "n = {n}: minus-form residual / plus-form residual near tau = 64: {ratio:.3e}")?;
            }
            writeln!(out, "{}", if passed { "PASS plus form resolves the sign" } else { "FAIL residuals not separated by 10x" })?;
        }
        Format::Csv => write_csv(out, &rows)?,
        Format::Json => write_json(
            out,
            "verify-sign-check",
            &SignJson {
                rows: &rows,
                separation: &separation,
                passed,
            },
        )?,
    }
    Ok(passed)
}
