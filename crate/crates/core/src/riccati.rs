//! Factor functions `a, b, c, d` of the product-form propagator.
//!
//! Matching the product form against the Hamiltonian gives four first-order
//! equations. For the PT model `ȧ = ν` and `b` obeys the Riccati equation
//!
//! ```text
//! ḃ = 2κb − 2λb² − λ/2,    ḋ = κ − 2λb,    ċ = −λ/2 − 2cḋ
//! ```
//!
//! and for the spin model (flow convention) `ȧ = −ω/2` with
//!
//! ```text
//! ḃ = −ακb − κb² − κ/4,    ḋ = −ακ/2 − κb,    ċ = −κ/4 − 2cḋ.
//! ```
//!
//! All factors start at zero since `U(t0)` is the identity (up to the spin
//! model's constant prefactor). Riccati solutions can blow up in finite time;
//! such poles are detected and bracketed, never stepped over.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingFunction;
use crate::error::{Error, Result};
use crate::models::{Model, ModelTag, PTModelParams, SpinModelParams};
use crate::ode::{step_factor, trial_step};
use crate::quad::gauss_legendre;

/// Exponents of the product-form propagator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FactorState {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl FactorState {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.d].iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorComponent {
    B,
    C,
    D,
}

/// A bracket `[t_lo, t_hi]` around a blow-up of the factor functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleEvent {
    pub t_lo: f64,
    pub t_hi: f64,
    pub diverging_component: FactorComponent,
}

impl PoleEvent {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_lo && t <= self.t_hi
    }

    pub fn width(&self) -> f64 {
        self.t_hi - self.t_lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub initial_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub pole_threshold: f64,
    /// Budget of attempted (accepted or rejected) steps.
    pub max_steps: u64,
    /// Spacing of the uniform output grid.
    pub output_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            pole_threshold: 1e6,
            max_steps: 10_000_000,
            output_step: 1e-3,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.initial_step, self.rel_tol, self.abs_tol, self.pole_threshold, self.output_step]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if positive && self.max_steps > 0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("integrator settings must be positive: {self:?}")))
        }
    }
}

/// Factor functions sampled on an output grid.
///
/// `states[i]` is `None` once the factorization has broken down (at or after a
/// pole), so `times` always spans the requested interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Option<FactorState>>,
    pub pole_events: Vec<PoleEvent>,
    pub model_tag: ModelTag,
}

impl FactorTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// True when every grid point carries a state.
    pub fn is_complete(&self) -> bool {
        self.states.iter().all(Option::is_some)
    }

    /// `(t, state)` pairs for the grid points that carry a state.
    pub fn valid(&self) -> impl Iterator<Item = (f64, &FactorState)> {
        self.times.iter().zip(&self.states).filter_map(|(t, s)| s.as_ref().map(|s| (*t, s)))
    }

    pub fn in_pole_bracket(&self, t: f64) -> bool {
        self.pole_events.iter().any(|e| e.contains(t))
    }
}

/// `db/dt` for the PT model: `2κb − 2λb² − λ/2`.
pub fn riccati_rhs_pt(b: f64, kappa_val: f64, lambda_val: f64) -> f64 {
    2.0 * kappa_val * b - 2.0 * lambda_val * b * b - 0.5 * lambda_val
}

/// `db/dt` for the spin model: `−ακb − κb² − κ/4`.
pub fn riccati_rhs_spin(b: f64, kappa_val: f64, alpha_coeff: f64) -> f64 {
    -alpha_coeff * kappa_val * b - kappa_val * b * b - 0.25 * kappa_val
}

/// Derivatives of `[b, d, c]`.
fn factor_rates(model: &Model, t: f64, y: &[f64; 3]) -> Result<[f64; 3]> {
    let [b, _, c] = *y;
    Ok(match model {
        Model::Pt(m) => {
            let kappa = m.kappa.eval(t)?;
            let lambda = m.lambda.eval(t)?;
            let d_dot = kappa - 2.0 * lambda * b;
            [riccati_rhs_pt(b, kappa, lambda), d_dot, -0.5 * lambda - 2.0 * c * d_dot]
        }
        Model::Spin(m) => {
            let kappa = m.kappa.eval(t)?;
            let d_dot = -0.5 * m.alpha_coeff * kappa - kappa * b;
            [riccati_rhs_spin(b, kappa, m.alpha_coeff), d_dot, -0.25 * kappa - 2.0 * c * d_dot]
        }
    })
}

/// Constant `da/dt`.
pub fn a_rate(model: &Model) -> f64 {
    match model {
        Model::Pt(m) => m.nu,
        Model::Spin(m) => -0.5 * m.omega,
    }
}

/// `n + 1` equally spaced points from `t0` to `t1`, with `n` the smallest
/// count whose spacing does not exceed `step`.
pub fn uniform_grid(t0: f64, t1: f64, step: f64) -> Result<Vec<f64>> {
    if !(t1 > t0) || !(step > 0.0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidParameter(format!("bad grid: t0 = {t0}, t1 = {t1}, step = {step}")));
    }
    let n = (((t1 - t0) / step) - 1e-9).ceil().max(1.0) as usize;
    Ok(grid_with_points(t0, t1, n + 1))
}

/// `points` equally spaced values from `t0` to `t1` inclusive.
pub fn grid_with_points(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    let n = points.max(2) - 1;
    let dt = (t1 - t0) / n as f64;
    (0..=n).map(|k| if k == n { t1 } else { t0 + k as f64 * dt }).collect()
}

pub fn integrate_factors_pt(model: &PTModelParams, t0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<FactorTrajectory> {
    integrate_factors(&Model::Pt(model.clone()), t0, t1, cfg)
}

pub fn integrate_factors_spin(model: &SpinModelParams, t0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<FactorTrajectory> {
    integrate_factors(&Model::Spin(model.clone()), t0, t1, cfg)
}

/// Integrates the factor system from zero initial data on the uniform grid
/// with spacing `cfg.output_step`.
pub fn integrate_factors(model: &Model, t0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<FactorTrajectory> {
    cfg.validate()?;
    model.check_span(t0, t1)?;
    let grid = uniform_grid(t0, t1, cfg.output_step)?;
    integrate_factors_on(model, &grid, FactorState::default(), cfg)
}

/// Integrates the factor system on an arbitrary increasing grid starting from
/// `start` at `grid[0]`. Integration stops at the first pole; later grid
/// points carry no state.
pub fn integrate_factors_on(
    model: &Model,
    grid: &[f64],
    start: FactorState,
    cfg: &IntegratorConfig,
) -> Result<FactorTrajectory> {
    cfg.validate()?;
    if grid.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: grid.len() });
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }

    let mut rhs = |t: f64, y: &[f64; 3]| factor_rates(model, t, y);
    let da = a_rate(model);
    let t_start = grid[0];
    let mut states = vec![None; grid.len()];
    states[0] = Some(start);
    let mut pole_events = Vec::new();

    let mut t = t_start;
    let mut y = [start.b, start.d, start.c];
    let mut k1 = rhs(t, &y)?;
    let mut h = cfg.initial_step;
    let mut attempts = 0u64;

    'grid: for (i, &target) in grid.iter().enumerate().skip(1) {
        while t < target {
            let remaining = target - t;
            let lands = h >= remaining;
            let h_try = if lands { remaining } else { h };
            if h_try <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
                if let Some(event) = pole_from_state(t, t, &y, &k1, cfg.pole_threshold.sqrt()) {
                    pole_events.push(event);
                    break 'grid;
                }
                return Err(Error::StepUnderflow { t, h: h_try });
            }
            attempts += 1;
            if attempts > cfg.max_steps {
                return Err(Error::StepBudget { max_steps: cfg.max_steps, t });
            }

            let trial = trial_step(&mut rhs, t, &y, &k1, h_try, cfg.rel_tol, cfg.abs_tol)?;
            let factor = step_factor(trial.err);
            if trial.err > 1.0 {
                h = h_try * factor;
                continue;
            }

            let t_new = if lands { target } else { t + h_try };
            if let Some(event) = pole_from_state(t, t_new, &trial.y, &trial.dy, cfg.pole_threshold) {
                debug!("pole in {:?} bracketed by [{}, {}]", event.diverging_component, event.t_lo, event.t_hi);
                pole_events.push(event);
                break 'grid;
            }
            t = t_new;
            y = trial.y;
            k1 = trial.dy;
            h = if lands { h.max(h_try * factor) } else { h_try * factor };
        }
        states[i] = Some(FactorState { a: start.a + da * (target - t_start), b: y[0], c: y[2], d: y[1] });
    }

    Ok(FactorTrajectory { times: grid.to_vec(), states, pole_events, model_tag: model.tag() })
}

/// Bracket for a component of `[b, d, c]` beyond `threshold`. The far end
/// uses the local pole-distance estimate `|y / ẏ|` (exact for a simple pole).
fn pole_from_state(t_prev: f64, t: f64, y: &[f64; 3], dy: &[f64; 3], threshold: f64) -> Option<PoleEvent> {
    let (idx, _) = y
        .iter()
        .enumerate()
        .filter(|(_, v)| !(v.abs() <= threshold))
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
    let distance = (y[idx] / dy[idx]).abs();
    let distance = if distance.is_finite() { distance } else { 0.0 };
    let component = match idx {
        0 => FactorComponent::B,
        1 => FactorComponent::D,
        _ => FactorComponent::C,
    };
    Some(PoleEvent { t_lo: t_prev, t_hi: t + 2.0 * distance, diverging_component: component })
}

/// Central-difference check of the four matching equations along a
/// trajectory. Returns `(t, max |residual|)` for every interior grid point
/// whose stencil is free of pole breakdowns.
///
/// Derivatives use fourth-order five-point stencils (off-centre next to the
/// ends); the grid must be uniform.
pub fn consistency_residuals(traj: &FactorTrajectory, model: &Model) -> Result<Vec<(f64, f64)>> {
    let n = traj.times.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let h = (traj.times[n - 1] - traj.times[0]) / (n - 1) as f64;
    let uniform = traj.times.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.max(1.0));
    if !uniform {
        return Err(Error::InvalidParameter("consistency residuals need a uniform grid".into()));
    }
    let as_vec = |s: &FactorState| [s.a, s.b, s.c, s.d];
    let mut out = Vec::new();
    for i in 1..n - 1 {
        // (window start, derivative weights); all stencils are fourth order
        // when five points fit, else the three-point central rule
        let (lo, weights): (usize, &[f64]) = if n < 5 {
            (i - 1, &[-6.0, 0.0, 6.0])
        } else if i == 1 {
            (0, &[-3.0, -10.0, 18.0, -6.0, 1.0])
        } else if i == n - 2 {
            (n - 5, &[-1.0, 6.0, -18.0, 10.0, 3.0])
        } else {
            (i - 2, &[1.0, -8.0, 0.0, 8.0, -1.0])
        };
        let Some(window) = traj.states[lo..lo + weights.len()].iter().map(|s| s.map(|s| as_vec(&s))).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let mut deriv = [0.0; 4];
        for (k, d) in deriv.iter_mut().enumerate() {
            *d = window.iter().zip(weights).map(|(y, w)| w * y[k]).sum::<f64>() / (12.0 * h);
        }
        let s = traj.states[i].expect("window checked");
        let t = traj.times[i];
        out.push((t, matching_residual(model, t, &s, deriv)?));
    }
    Ok(out)
}

/// Max absolute residual of the four matching equations given the state and
/// its derivatives `[ȧ, ḃ, ċ, ḋ]`.
pub fn matching_residual(model: &Model, t: f64, s: &FactorState, deriv: [f64; 4]) -> Result<f64> {
    let [a_dot, b_dot, c_dot, d_dot] = deriv;
    let (b, c) = (s.b, s.c);
    let sigma_z = -4.0 * b * c_dot + d_dot - 8.0 * b * c * d_dot;
    let sigma_plus = b_dot + 4.0 * b * b * c_dot - 2.0 * b * d_dot + 8.0 * b * b * c * d_dot;
    let sigma_minus = c_dot + 2.0 * c * d_dot;
    let residuals = match model {
        Model::Pt(m) => {
            let kappa = m.kappa.eval(t)?;
            let lambda = m.lambda.eval(t)?;
            [a_dot - m.nu, sigma_z - kappa, sigma_plus + 0.5 * lambda, sigma_minus + 0.5 * lambda]
        }
        Model::Spin(m) => {
            let kappa = m.kappa.eval(t)?;
            [
                a_dot + 0.5 * m.omega,
                sigma_z + 0.5 * m.alpha_coeff * kappa,
                sigma_plus + 0.25 * kappa,
                sigma_minus + 0.25 * kappa,
            ]
        }
    };
    Ok(residuals.iter().map(|r| r.abs()).fold(0.0, f64::max))
}

/// Roots of `4p·b0² − 2(1 − p²)·b0 + p = 0`, the constant solutions of the PT
/// Riccati equation when `λ = 2pκ/(1 − p²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParticularRoots {
    /// Real roots ordered by magnitude. Equal at the double root.
    Real { larger: f64, smaller: f64 },
    ComplexPair { re: f64, im: f64 },
}

/// Discriminants with magnitude below this are treated as a double root.
const DOUBLE_ROOT_TOL: f64 = 1e-14;

pub fn particular_b0(p: f64) -> Result<ParticularRoots> {
    if !p.is_finite() || p == 0.0 || p.abs() == 1.0 {
        return Err(Error::InvalidParameter(format!("particular solution needs p ∉ {{0, ±1}}, got {p}")));
    }
    let q = 1.0 - p * p;
    let disc = 1.0 - 6.0 * p * p + p.powi(4);
    if disc.abs() <= DOUBLE_ROOT_TOL {
        let root = q / (4.0 * p);
        return Ok(ParticularRoots::Real { larger: root, smaller: root });
    }
    if disc < 0.0 {
        return Ok(ParticularRoots::ComplexPair { re: q / (4.0 * p), im: (-disc).sqrt() / (4.0 * p.abs()) });
    }
    // the product of the roots is 1/4, so the small root comes from the large one
    let larger = (q + q.signum() * disc.sqrt()) / (4.0 * p);
    Ok(ParticularRoots::Real { larger, smaller: 0.25 / larger })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootChoice {
    #[default]
    SmallerMagnitude,
    LargerMagnitude,
}

/// `b(t)` for the proportional family from the particular-solution reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionalSolution {
    pub b0: f64,
    pub times: Vec<f64>,
    /// Infinite only at a sample that sits exactly on a pole.
    pub values: Vec<f64>,
    pub pole_events: Vec<PoleEvent>,
}

/// Closed-form Riccati solution for `λ = 2pκ/(1 − p²)` via `b = b0 + 1/u`.
///
/// The substitution turns the Riccati equation into the linear
/// `u̇ = −(2κ − 4λb0)u + 2λ`. Because `λ` is proportional to `κ` its
/// integrating factor depends only on `K(t) = ∫κ`:
///
/// ```text
/// u(t) = u0·e^{−βK} + 2γK·(1 − e^{−βK})/(βK),   β = 2 − 4γb0,  γ = 2p/(1 − p²)
/// ```
///
/// `K` is computed by composite Gauss–Legendre quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct ProportionalRiccati {
    pub p: f64,
    pub kappa: CouplingFunction,
    pub root: RootChoice,
    pub b_initial: f64,
    /// Quadrature panels per sample interval.
    pub panels: usize,
}

impl ProportionalRiccati {
    pub fn new(p: f64, kappa: CouplingFunction) -> Self {
        Self { p, kappa, root: RootChoice::default(), b_initial: 0.0, panels: 8 }
    }

    pub fn with_root(mut self, root: RootChoice) -> Self {
        self.root = root;
        self
    }

    pub fn with_initial(mut self, b_initial: f64) -> Self {
        self.b_initial = b_initial;
        self
    }

    pub fn b0(&self) -> Result<f64> {
        match particular_b0(self.p)? {
            ParticularRoots::Real { larger, smaller } => Ok(match self.root {
                RootChoice::SmallerMagnitude => smaller,
                RootChoice::LargerMagnitude => larger,
            }),
            ParticularRoots::ComplexPair { .. } => {
                Err(Error::ComplexParticular { p: self.p, discriminant: 1.0 - 6.0 * self.p.powi(2) + self.p.powi(4) })
            }
        }
    }

    pub fn solve(&self, t0: f64, t1: f64, samples: usize) -> Result<ProportionalSolution> {
        if samples < 2 || !(t1 > t0) {
            return Err(Error::InvalidParameter(format!("need t1 > t0 and samples ≥ 2 (got {samples})")));
        }
        let b0 = self.b0()?;
        let times = grid_with_points(t0, t1, samples);
        if self.b_initial == b0 {
            return Ok(ProportionalSolution { b0, values: vec![b0; times.len()], times, pole_events: vec![] });
        }

        let gamma = 2.0 * self.p / (1.0 - self.p * self.p);
        let beta = 2.0 - 4.0 * gamma * b0;
        let u0 = 1.0 / (self.b_initial - b0);
        let u_of = |k: f64| {
            let x = -beta * k;
            let growth = if x.abs() < 1e-12 { 1.0 } else { x.exp_m1() / x };
            u0 * x.exp() + 2.0 * gamma * k * growth
        };
        let kappa_integral = |a: f64, b: f64| gauss_legendre(|t| self.kappa.eval(t), a, b, self.panels);

        let mut values = Vec::with_capacity(times.len());
        let mut pole_events = Vec::new();
        let mut k_prev = 0.0;
        let mut u_prev = u0;
        values.push(self.b_initial);
        for w in times.windows(2) {
            let k_next = k_prev + kappa_integral(w[0], w[1])?;
            let u_next = u_of(k_next);
            if u_next == 0.0 || u_prev.signum() != u_next.signum() {
                // bisect on u(t) inside the sample interval
                let (mut lo, mut hi) = (w[0], w[1]);
                while hi - lo > 1e-12 * hi.abs().max(1.0) {
                    let mid = 0.5 * (lo + hi);
                    let u_mid = u_of(k_prev + kappa_integral(w[0], mid)?);
                    if u_mid == 0.0 || u_mid.signum() != u_prev.signum() {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                pole_events.push(PoleEvent { t_lo: lo, t_hi: hi, diverging_component: FactorComponent::B });
            }
            values.push(b0 + 1.0 / u_next);
            k_prev = k_next;
            u_prev = u_next;
        }
        Ok(ProportionalSolution { b0, times, values, pole_events })
    }
}

/// Samples the closed-form `b(t)` with default options (smaller-magnitude
/// root, `b(t0) = 0`).
pub fn closed_form_b_proportional(
    p: f64,
    kappa: &CouplingFunction,
    t0: f64,
    t1: f64,
    samples: usize,
) -> Result<ProportionalSolution> {
    ProportionalRiccati::new(p, kappa.clone()).solve(t0, t1, samples)
}
