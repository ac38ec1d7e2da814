//! Command implementations. Each returns the text to print on success.

use std::path::Path;

use log::{info, warn};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use rau_core::makharko::{check_integrability, IntegrabilityCase, SignBranch};
use rau_core::models::{eigen_analysis, pt_phase, DEFAULT_PHASE_TOL};
use rau_core::riccati::{closed_form_b_proportional, grid_with_points, integrate_factors_on, particular_b0, ParticularRoots};
use rau_core::verify::run_suite;
use rau_core::{simulate, Error, FactorState, Model, PTModelParams, PoleEvent, SimulationResult, StaticPTParams};

use crate::config::{load, MakHarkoConfig, RunConfig};
use crate::format::{g17, simulation_csv};
use crate::CliError;

/// `|1 − p²|` below which the proportional family is flagged as ill conditioned.
const CONDITIONING_WARN: f64 = 1e-4;

/// Classifies a library error: bad input is a configuration error, anything
/// else a numerical failure.
pub fn classify(e: Error) -> CliError {
    match e {
        Error::CouplingDomain { .. } | Error::InvalidCoupling(_) | Error::InvalidParameter(_) | Error::InsufficientData { .. } => {
            CliError::Config(e.to_string())
        }
        _ => CliError::Numerical(e.to_string()),
    }
}

fn complex_json(z: Complex64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn eigen(r: f64, s: f64, theta: f64, as_json: bool) -> Result<String, CliError> {
    if ![r, s, theta].iter().all(|v| v.is_finite()) {
        return Err(CliError::Config("r, s and theta must be finite".into()));
    }
    let p = StaticPTParams::new(r, s, theta);
    let e = eigen_analysis(&p);
    let phase = pt_phase(&p, DEFAULT_PHASE_TOL);
    let report = json!({
        "r": r, "s": s, "theta": theta,
        "phase": phase.to_string(),
        "lambda_plus": complex_json(e.lambda_plus),
        "lambda_minus": complex_json(e.lambda_minus),
        "alpha": complex_json(e.alpha),
        "psi_plus": e.psi_plus.map(complex_json),
        "psi_minus": e.psi_minus.map(complex_json),
        "pt_eigenstates": e.pt_eigenstates,
        "normalized": e.normalized,
    });
    if as_json {
        return Ok(serde_json::to_string_pretty(&report).expect("serializable"));
    }
    // Adding +0.0 turns -0.0 into 0.0, avoiding "+-0i" in the text form.
    let z = |c: Complex64| Complex64::new(c.re + 0.0, c.im + 0.0);
    let vec = |v: [Complex64; 2]| format!("({}, {})", z(v[0]), z(v[1]));
    Ok(format!(
        "phase        {phase}\nlambda_plus  {}\nlambda_minus {}\nalpha        {}\npsi_plus     {}\npsi_minus    {}\n\n{}",
        z(e.lambda_plus),
        z(e.lambda_minus),
        z(e.alpha),
        vec(e.psi_plus),
        vec(e.psi_minus),
        serde_json::to_string(&report).expect("serializable"),
    ))
}

/// JSON summary written next to the CSV.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub model: &'static str,
    pub method: rau_core::Method,
    pub points: usize,
    /// Largest defining-equation residual of the factorized series (of the
    /// oracle series when only the oracle ran).
    pub residual: Option<f64>,
    pub det_error: Option<f64>,
    pub cross_method_error: Option<f64>,
    pub pole_events: Vec<PoleEvent>,
    pub factorized_complete: Option<bool>,
    pub oracle_residual: Option<f64>,
    pub oracle_det_error: Option<f64>,
    pub alternate_convention_residual: Option<f64>,
}

pub fn summarize(res: &SimulationResult, method: rau_core::Method) -> Summary {
    let primary = res.factorized_report.or(res.oracle_report);
    Summary {
        model: match res.model_tag {
            rau_core::ModelTag::Pt => "pt",
            rau_core::ModelTag::Spin => "spin",
        },
        method,
        points: res.times.len(),
        residual: primary.map(|r| r.max_schrodinger_residual),
        det_error: primary.map(|r| r.max_det_error),
        cross_method_error: res.cross_method_error,
        pole_events: res.pole_events.clone(),
        factorized_complete: res.factorized.as_ref().map(|_| !res.factorized_incomplete()),
        oracle_residual: res.oracle_report.map(|r| r.max_schrodinger_residual),
        oracle_det_error: res.oracle_report.map(|r| r.max_det_error),
        alternate_convention_residual: res.alternate_convention_residual,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub struct SimulateArgs<'a> {
    pub config: &'a Path,
    pub csv: Option<&'a Path>,
    pub summary: Option<&'a Path>,
    /// CSV only, to stdout unless a path is given.
    pub csv_only: bool,
}

/// Runs `simulate` / `plot-data`. Outputs are written before a pole-induced
/// numerical failure is reported.
pub fn simulate_cmd(args: SimulateArgs<'_>) -> Result<String, CliError> {
    let cfg: RunConfig = load(args.config)?;
    cfg.validate()?;
    let res = simulate(&cfg.model, cfg.time.t0, cfg.time.t1, &cfg.simulation()).map_err(classify)?;
    info!("simulated {} points, {} pole event(s)", res.times.len(), res.pole_events.len());

    let csv = simulation_csv(&res);
    let csv_path = args.csv.or(cfg.output.csv.as_deref());
    let mut printed = String::new();
    match csv_path {
        Some(path) => write_file(path, &csv)?,
        None if args.csv_only => printed.push_str(&csv),
        None => {}
    }
    if !args.csv_only {
        let summary = serde_json::to_string_pretty(&summarize(&res, cfg.method)).expect("serializable");
        if let Some(path) = args.summary.or(cfg.output.summary.as_deref()) {
            write_file(path, &(summary.clone() + "\n"))?;
        }
        printed.push_str(&summary);
    }

    if res.factorized_incomplete() && !cfg.method.wants_oracle() && !cfg.reanchor {
        let at = res.pole_events.first().map_or(f64::NAN, |e| e.t_lo);
        return Err(CliError::NumericalWithOutput {
            message: format!("factorized coordinates diverge near t = {at} and no oracle fallback was requested"),
            output: printed,
        });
    }
    Ok(printed)
}

/// `lo:hi:n` with `n ≥ 1` points; `n = 1` gives just `lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            vec![self.lo]
        } else {
            grid_with_points(self.lo, self.hi, self.n)
        }
    }
}

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(format!("expected lo:hi:n, got {s:?}"));
        };
        let lo: f64 = lo.parse().map_err(|_| format!("bad lower bound in {s:?}"))?;
        let hi: f64 = hi.parse().map_err(|_| format!("bad upper bound in {s:?}"))?;
        let n: usize = n.parse().map_err(|_| format!("bad point count in {s:?}"))?;
        if n == 0 || !lo.is_finite() || !hi.is_finite() || hi < lo {
            return Err(format!("need finite lo ≤ hi and n ≥ 1, got {s:?}"));
        }
        Ok(Self { lo, hi, n })
    }
}

pub const PHASE_SCAN_HEADER: &str = "r,s,theta,phase,re_lambda_plus,im_lambda_plus,re_lambda_minus,im_lambda_minus";

/// One row per grid point, ordered by (r, s, theta) index.
pub fn phase_scan(r: Range, s: Range, theta: Range, jobs: usize) -> Result<String, CliError> {
    let (rs, ss, ts) = (r.values(), s.values(), theta.values());
    let mut points = Vec::with_capacity(rs.len() * ss.len() * ts.len());
    for &r in &rs {
        for &s in &ss {
            points.extend(ts.iter().map(|&t| StaticPTParams::new(r, s, t)));
        }
    }
    let row = |p: &StaticPTParams| {
        let e = eigen_analysis(p);
        format!(
            "{},{},{},{},{},{},{},{}\n",
            g17(p.r),
            g17(p.s),
            g17(p.theta),
            pt_phase(p, DEFAULT_PHASE_TOL),
            g17(e.lambda_plus.re),
            g17(e.lambda_plus.im),
            g17(e.lambda_minus.re),
            g17(e.lambda_minus.im)
        )
    };
    let rows: Vec<String> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
        pool.install(|| points.par_iter().map(row).collect())
    } else {
        points.iter().map(row).collect()
    };
    let mut out = String::from(PHASE_SCAN_HEADER);
    out.push('\n');
    out.extend(rows);
    Ok(out)
}

pub fn makharko_check(path: &Path) -> Result<String, CliError> {
    let cfg: MakHarkoConfig = load(path)?;
    let p = cfg.p;
    if !p.is_finite() || p.abs() == 1.0 {
        return Err(CliError::Config(format!("p must be finite and different from ±1, got {p}")));
    }
    if !(cfg.t1 > cfg.t0) || cfg.points < 2 {
        return Err(CliError::Config("need t1 > t0 and points ≥ 2".into()));
    }
    cfg.kappa.validate().map_err(classify)?;
    let mut notes = Vec::new();
    if (1.0 - p * p).abs() < CONDITIONING_WARN {
        let msg = format!("1 − p² = {:e} is close to zero; λ and f are ill conditioned", 1.0 - p * p);
        warn!("{msg}");
        notes.push(msg);
    }
    let grid = grid_with_points(cfg.t0, cfg.t1, cfg.points);

    let integrability = if p == 0.0 {
        notes.push("p = 0 gives λ ≡ 0: the residual divides by λ and is skipped".into());
        serde_json::Value::Null
    } else {
        let case = IntegrabilityCase::new(p, cfg.kappa.clone(), SignBranch::Plus).map_err(classify)?;
        match check_integrability(&case, &grid, cfg.fd_width) {
            Ok(report) => serde_json::to_value(report).expect("serializable"),
            Err(e @ (Error::ZeroLambda { .. } | Error::NegativeGenerating { .. })) => {
                notes.push(format!("residual check skipped: {e}"));
                serde_json::Value::Null
            }
            Err(e) => return Err(classify(e)),
        }
    };

    let agreement = closed_form_agreement(&cfg, &grid, &mut notes)?;
    let report = json!({
        "p": p,
        "points": cfg.points,
        "fd_width": cfg.fd_width,
        "integrability": integrability,
        "closed_form_vs_numeric": agreement,
        "notes": notes,
    });
    Ok(serde_json::to_string_pretty(&report).expect("serializable"))
}

/// Largest `|b_closed − b_numeric|` over grid points before any pole.
fn closed_form_agreement(cfg: &MakHarkoConfig, grid: &[f64], notes: &mut Vec<String>) -> Result<serde_json::Value, CliError> {
    match particular_b0(cfg.p) {
        Ok(ParticularRoots::Real { .. }) => {}
        Ok(ParticularRoots::ComplexPair { .. }) => {
            notes.push(format!("particular solution is complex for p = {}; closed form not compared", cfg.p));
            return Ok(serde_json::Value::Null);
        }
        Err(_) => {
            notes.push("no particular solution for p = 0; closed form not compared".into());
            return Ok(serde_json::Value::Null);
        }
    }
    let lambda = rau_core::makharko::lambda_from_kappa(cfg.p, &cfg.kappa).map_err(classify)?;
    let model = Model::Pt(PTModelParams::new(0.0, cfg.kappa.clone(), lambda));
    let traj = integrate_factors_on(&model, grid, FactorState::default(), &cfg.integrator).map_err(classify)?;
    let closed = closed_form_b_proportional(cfg.p, &cfg.kappa, cfg.t0, cfg.t1, grid.len()).map_err(classify)?;
    let mut max_diff: f64 = 0.0;
    let mut compared = 0usize;
    for (s, b) in traj.states.iter().zip(&closed.values) {
        if let Some(s) = s {
            if b.is_finite() {
                max_diff = max_diff.max((s.b - b).abs());
                compared += 1;
            }
        }
    }
    if !traj.pole_events.is_empty() {
        notes.push(format!("b has a pole near t = {}; compared {compared} points before it", traj.pole_events[0].t_lo));
    }
    Ok(json!({ "max_abs_diff": max_diff, "points_compared": compared, "b0": closed.b0 }))
}

/// Runs the invariant suite; the report text is returned in both outcomes.
pub fn verify(tolerance: Option<f64>, as_json: bool) -> Result<String, CliError> {
    let report = run_suite(tolerance);
    let text = if as_json { serde_json::to_string_pretty(&report).expect("serializable") } else { report.to_string() };
    if report.all_passed() {
        Ok(text)
    } else {
        Err(CliError::Verify(text))
    }
}
