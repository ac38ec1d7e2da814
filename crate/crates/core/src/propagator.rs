//! Product-form propagators, their inversion, and residual diagnostics.
//!
//! PT model: `U = e^{−ia} e^{ibσ+} e^{icσ−} e^{dσz}` with `i dU/dt = H U`.
//! Spin model: `U = i e^{a} e^{ibσ+} e^{icσ−} e^{dσz}` with `dU/dt = H U`.
//! Since `σ±² = 0` both nilpotent exponentials are linear in their argument and
//! the product is explicit:
//!
//! ```text
//! e^{ibσ+} e^{icσ−} e^{dσz} = [[(1 − 4bc) e^d, 2ib e^{−d}], [2ic e^d, e^{−d}]]
//! ```

use log::{debug, warn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Convention, Model, ModelTag};
use crate::oracle::{propagate_on, OracleConfig};
use crate::pauli::Complex2x2;
use crate::riccati::{a_rate, grid_with_points, integrate_factors_on, FactorState, FactorTrajectory, IntegratorConfig, PoleEvent};

/// `|U22|` (after removing the scalar prefactor) below which the chart fails.
pub const CHART_THRESHOLD: f64 = 1e-12;

/// Imaginary parts of recovered coordinates tolerated as round-off.
const REALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesSource {
    Factorized,
    Oracle,
}

/// Propagator samples on a time grid; `None` where the method has no value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagatorSeries {
    pub times: Vec<f64>,
    pub matrices: Vec<Option<Complex2x2>>,
    pub convention: Convention,
    pub source: SeriesSource,
}

impl PropagatorSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<Complex2x2> {
        self.matrices.last().copied().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_schrodinger_residual: f64,
    pub max_det_error: f64,
    /// Only defined when two methods ran on the same grid.
    pub max_cross_method_error: Option<f64>,
}

/// `e^{ibσ+} e^{icσ−} e^{dσz}`.
fn gauss_product(b: f64, c: f64, d: f64) -> Complex2x2 {
    let (ed, emd) = (d.exp(), (-d).exp());
    Complex2x2::new(
        Complex64::new((1.0 - 4.0 * b * c) * ed, 0.0),
        Complex64::new(0.0, 2.0 * b * emd),
        Complex64::new(0.0, 2.0 * c * ed),
        Complex64::new(emd, 0.0),
    )
}

pub fn assemble_pt(s: &FactorState) -> Complex2x2 {
    gauss_product(s.b, s.c, s.d).scale(Complex64::new(0.0, -s.a).exp())
}

pub fn assemble_spin(s: &FactorState) -> Complex2x2 {
    gauss_product(s.b, s.c, s.d).scale(Complex64::new(0.0, s.a.exp()))
}

pub fn assemble(s: &FactorState, tag: ModelTag) -> Complex2x2 {
    match tag {
        ModelTag::Pt => assemble_pt(s),
        ModelTag::Spin => assemble_spin(s),
    }
}

/// Scalar prefactor of the product form for a given `a`.
fn prefactor(tag: ModelTag, a: Complex64) -> Complex64 {
    match tag {
        ModelTag::Pt => (Complex64::new(0.0, -1.0) * a).exp(),
        ModelTag::Spin => Complex64::new(0.0, 1.0) * a.exp(),
    }
}

/// Inverts the product form. `a` comes from the determinant (principal
/// branch for the PT model), so the round trip needs `|a| < π/2` there.
pub fn gauss_decompose(u: &Complex2x2, tag: ModelTag) -> Result<FactorState> {
    let det = u.det();
    let a = match tag {
        // det U = e^{−2ia}
        ModelTag::Pt => Complex64::new(0.0, 0.5) * det.ln(),
        // det U = −e^{2a}
        ModelTag::Spin => 0.5 * (-det).ln(),
    };
    let (state, sign) = decompose_with_phase(u, tag, a)?;
    if sign < 0.0 {
        return Err(Error::NonRealCoordinates { imag: std::f64::consts::PI });
    }
    Ok(state)
}

/// Inverts the product form for a known (possibly complex) `a`, allowing an
/// overall sign: returns `(state, sign)` with `u = sign · assemble(state)`.
/// The sign is `−1` once the flow has crossed a pole of the chart.
pub fn decompose_with_phase(u: &Complex2x2, tag: ModelTag, a: Complex64) -> Result<(FactorState, f64)> {
    let v = u.scale(prefactor(tag, a).inv());
    if v.m22.norm() < CHART_THRESHOLD {
        return Err(Error::ChartFailure { u22: v.m22.norm() });
    }
    let sign = if v.m22.re >= 0.0 { 1.0 } else { -1.0 };
    let v = v.scale_re(sign);
    let d = -v.m22.ln();
    let two_i = Complex64::new(0.0, 2.0);
    let b = v.m12 / (two_i * v.m22);
    let c = v.m21 * v.m22 / two_i;
    let imag = [a.im, b.im, c.im, d.im]
        .iter()
        .zip([a.re, b.re, c.re, d.re])
        .map(|(im, re)| im.abs() / (1.0 + re.abs()))
        .fold(0.0, f64::max);
    if imag > REALITY_TOL {
        return Err(Error::NonRealCoordinates { imag });
    }
    Ok((FactorState::new(a.re, b.re, c.re, d.re), sign))
}

/// Pointwise residual of the defining equation, `‖i dU/dt − HU‖` or
/// `‖dU/dt − HU‖` in the max-entry norm. Central differences at interior
/// points, second-order one-sided differences at the ends; `None` where the
/// stencil touches a missing sample.
pub fn residual_profile(series: &PropagatorSeries, model: &Model) -> Result<Vec<Option<f64>>> {
    let n = series.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let t = &series.times;
    let u = &series.matrices;
    let lhs_factor = match series.convention {
        Convention::Schrodinger => Complex64::new(0.0, 1.0),
        Convention::Flow => Complex64::new(1.0, 0.0),
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (j0, j1, j2) = match i {
            0 => (0, 1, 2),
            _ if i == n - 1 => (n - 3, n - 2, n - 1),
            _ => (i - 1, i, i + 1),
        };
        let (Some(u0), Some(u1), Some(u2), Some(ui)) = (u[j0], u[j1], u[j2], u[i]) else {
            out.push(None);
            continue;
        };
        // derivative of the quadratic through the three points, evaluated at t[i]
        let (x0, x1, x2, x) = (t[j0], t[j1], t[j2], t[i]);
        let w0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
        let w1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
        let w2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
        let du = u0 * w0 + u1 * w1 + u2 * w2;
        let h = model.hamiltonian_at(x)?;
        out.push(Some((du.scale(lhs_factor) - h * ui).max_norm()));
    }
    Ok(out)
}

/// `det U(t)` predicted by Liouville's formula from `det U(t_ref)`.
///
/// `∫ tr(G H)` uses Simpson's rule on each grid interval.
pub fn liouville_determinants(times: &[f64], start_det: Complex64, model: &Model, convention: Convention) -> Result<Vec<Complex64>> {
    let g = convention.generator_factor();
    let tr = |t: f64| -> Result<Complex64> { Ok(g * model.hamiltonian_at(t)?.trace()) };
    let mut out = Vec::with_capacity(times.len());
    let mut log_det = Complex64::new(0.0, 0.0);
    out.push(start_det);
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        log_det += (tr(a)? + tr(0.5 * (a + b))? * 4.0 + tr(b)?) * ((b - a) / 6.0);
        out.push(start_det * log_det.exp());
    }
    Ok(out)
}

/// `|det U(t) − det U(t0)·exp(∫ tr(G H))|` for every available sample.
pub fn det_error_profile(series: &PropagatorSeries, model: &Model, start_det: Complex64) -> Result<Vec<Option<f64>>> {
    let predicted = liouville_determinants(&series.times, start_det, model, series.convention)?;
    Ok(series
        .matrices
        .iter()
        .zip(predicted)
        .map(|(u, p)| u.map(|u| (u.det() - p).norm()))
        .collect())
}

/// Maximum interior residual and maximum determinant error of a series.
pub fn schrodinger_residual(series: &PropagatorSeries, model: &Model) -> Result<ResidualReport> {
    let profile = residual_profile(series, model)?;
    let n = profile.len();
    let max_schrodinger_residual = profile[1..n - 1].iter().flatten().copied().fold(0.0, f64::max);
    let start_det = model.initial_matrix(series.convention).det();
    let max_det_error = det_error_profile(series, model, start_det)?.into_iter().flatten().fold(0.0, f64::max);
    Ok(ResidualReport { max_schrodinger_residual, max_det_error, max_cross_method_error: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Factorized,
    Oracle,
    #[default]
    Both,
}

impl Method {
    pub fn wants_factorized(self) -> bool {
        matches!(self, Method::Factorized | Method::Both)
    }

    pub fn wants_oracle(self) -> bool {
        matches!(self, Method::Oracle | Method::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    /// Number of points of the shared output grid.
    pub output_points: usize,
    pub integrator: IntegratorConfig,
    pub oracle: OracleConfig,
    pub method: Method,
    /// Restart the factorized method from the oracle after each pole.
    pub reanchor: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            output_points: 1001,
            integrator: IntegratorConfig::default(),
            oracle: OracleConfig::default(),
            method: Method::Both,
            reanchor: false,
        }
    }
}

impl SimulationConfig {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_points(mut self, output_points: usize) -> Self {
        self.output_points = output_points;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub model_tag: ModelTag,
    pub times: Vec<f64>,
    pub trajectory: Option<FactorTrajectory>,
    pub factorized: Option<PropagatorSeries>,
    pub oracle: Option<PropagatorSeries>,
    /// Pointwise residual and determinant error of the factorized series.
    pub residual_profile: Vec<Option<f64>>,
    pub det_error_profile: Vec<Option<f64>>,
    pub factorized_report: Option<ResidualReport>,
    pub oracle_report: Option<ResidualReport>,
    pub cross_method_error: Option<f64>,
    pub pole_events: Vec<PoleEvent>,
    /// Spin model only: residual of the factorized series under the
    /// Schrödinger reading `i dU/dt = H U`, for comparison with the flow
    /// convention actually used.
    pub alternate_convention_residual: Option<f64>,
}

impl SimulationResult {
    /// The report of the factorized series when present, else the oracle's.
    pub fn report(&self) -> ResidualReport {
        let mut r = self
            .factorized_report
            .or(self.oracle_report)
            .unwrap_or(ResidualReport { max_schrodinger_residual: 0.0, max_det_error: 0.0, max_cross_method_error: None });
        r.max_cross_method_error = self.cross_method_error;
        r
    }

    /// True when the factorized method hit a pole it could not continue past.
    pub fn factorized_incomplete(&self) -> bool {
        self.factorized.as_ref().is_some_and(|s| s.matrices.iter().any(Option::is_none))
    }
}

/// Runs the requested methods on a shared grid of `cfg.output_points` points.
/// Residual diagnostics are left empty on a two-point grid.
pub fn simulate(model: &Model, t0: f64, t1: f64, cfg: &SimulationConfig) -> Result<SimulationResult> {
    model.validate()?;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidParameter(format!("need t1 > t0, got [{t0}, {t1}]")));
    }
    if cfg.output_points < 2 {
        return Err(Error::InsufficientData { needed: 2, got: cfg.output_points });
    }
    model.check_span(t0, t1)?;
    let times = grid_with_points(t0, t1, cfg.output_points);
    let tag = model.tag();

    let oracle = if cfg.method.wants_oracle() || cfg.reanchor {
        let oracle_cfg = OracleConfig { convention: Some(model.convention()), ..cfg.oracle };
        Some(propagate_on(model, &times, &oracle_cfg)?)
    } else {
        None
    };

    let mut trajectory = None;
    let mut factorized = None;
    if cfg.method.wants_factorized() {
        let (traj, signs) = factor_segments(model, &times, cfg, oracle.as_ref())?;
        let matrices = traj
            .states
            .iter()
            .zip(&signs)
            .map(|(s, sign)| s.map(|s| assemble(&s, tag).scale_re(*sign)))
            .collect();
        factorized = Some(PropagatorSeries { times: times.clone(), matrices, convention: model.convention(), source: SeriesSource::Factorized });
        trajectory = Some(traj);
    }

    let start_det = model.initial_matrix(model.convention()).det();
    // residuals need a three-point stencil
    let stencil = times.len() >= 3;
    let (residual_profile, det_error_profile, factorized_report, alternate_convention_residual) = match &factorized {
        Some(series) if stencil => {
            let profile = residual_profile(series, model)?;
            let dets = det_error_profile(series, model, start_det)?;
            let report = schrodinger_residual(series, model)?;
            let alternate = match tag {
                ModelTag::Spin => {
                    let as_schrodinger = PropagatorSeries { convention: Convention::Schrodinger, ..series.clone() };
                    Some(schrodinger_residual(&as_schrodinger, model)?.max_schrodinger_residual)
                }
                ModelTag::Pt => None,
            };
            (profile, dets, Some(report), alternate)
        }
        _ => (vec![None; times.len()], vec![None; times.len()], None, None),
    };
    let oracle_report = match (&oracle, cfg.method.wants_oracle()) {
        (Some(series), true) if stencil => Some(schrodinger_residual(series, model)?),
        _ => None,
    };

    let pole_events = trajectory.as_ref().map(|t| t.pole_events.clone()).unwrap_or_default();
    let cross_method_error = match (&factorized, &oracle, cfg.method) {
        (Some(f), Some(o), Method::Both) => {
            let gaps: Vec<f64> = f
                .matrices
                .iter()
                .zip(&o.matrices)
                .zip(&times)
                .filter(|(_, t)| !pole_events.iter().any(|e| e.contains(**t)))
                .filter_map(|((a, b), _)| Some(a.as_ref()?.distance(b.as_ref()?)))
                .collect();
            (!gaps.is_empty()).then(|| gaps.into_iter().fold(0.0, f64::max))
        }
        _ => None,
    };

    Ok(SimulationResult {
        model_tag: tag,
        times,
        trajectory,
        factorized,
        oracle: if cfg.method.wants_oracle() { oracle } else { None },
        residual_profile,
        det_error_profile,
        factorized_report,
        oracle_report,
        cross_method_error,
        pole_events,
        alternate_convention_residual,
    })
}

/// Integrates the factor system over the whole grid, re-anchoring on the
/// oracle after each pole when requested. Returns the merged trajectory and
/// the overall sign of each sample.
fn factor_segments(
    model: &Model,
    times: &[f64],
    cfg: &SimulationConfig,
    oracle: Option<&PropagatorSeries>,
) -> Result<(FactorTrajectory, Vec<f64>)> {
    let tag = model.tag();
    let da = a_rate(model);
    let mut states = vec![None; times.len()];
    let mut signs = vec![1.0; times.len()];
    let mut pole_events = Vec::new();
    let mut start_idx = 0;
    let mut start_state = FactorState::default();
    let mut sign = 1.0;

    loop {
        let segment = integrate_factors_on(model, &times[start_idx..], start_state, &cfg.integrator)?;
        for (k, s) in segment.states.iter().enumerate() {
            states[start_idx + k] = *s;
            signs[start_idx + k] = sign;
        }
        let Some(event) = segment.pole_events.first().copied() else { break };
        pole_events.push(event);
        if !cfg.reanchor {
            break;
        }
        let Some(oracle) = oracle else { break };
        let Some(next) = anchor_index(oracle, tag, da, times, start_idx, event.t_hi) else { break };
        let Some(u) = oracle.matrices[next] else { break };
        let a = Complex64::new(da * (times[next] - times[0]), 0.0);
        match decompose_with_phase(&u, tag, a) {
            Ok((state, s)) => {
                debug!("re-anchored at t = {} with sign {s}", times[next]);
                start_idx = next;
                start_state = state;
                sign = s;
            }
            Err(e) => {
                warn!("cannot re-anchor after pole at t ≈ {}: {e}", event.t_hi);
                break;
            }
        }
    }

    Ok((FactorTrajectory { times: times.to_vec(), states, pole_events, model_tag: tag }, signs))
}

/// Chart coordinate `|U22|` (prefactor removed) a re-anchor point should reach.
const ANCHOR_MIN_U22: f64 = 0.25;

/// Grid index to restart from after a pole bracket ending at `t_hi`: the
/// first point where the chart is well conditioned, else the best one. The
/// last grid point is excluded so the new segment has at least one step.
fn anchor_index(oracle: &PropagatorSeries, tag: ModelTag, da: f64, times: &[f64], from: usize, t_hi: f64) -> Option<usize> {
    let chart_u22 = |i: usize| {
        let a = Complex64::new(da * (times[i] - times[0]), 0.0);
        oracle.matrices[i].map_or(0.0, |u| (u.m22 / prefactor(tag, a)).norm())
    };
    let candidates: Vec<usize> = (from..times.len() - 1).filter(|&i| times[i] > t_hi).collect();
    candidates
        .iter()
        .copied()
        .find(|&i| chart_u22(i) >= ANCHOR_MIN_U22)
        .or_else(|| candidates.iter().copied().max_by(|&i, &j| chart_u22(i).total_cmp(&chart_u22(j))))
        .filter(|&i| chart_u22(i) >= CHART_THRESHOLD)
}
