//! Reference propagators that do not use the factorization: a time-ordered
//! product of short-time exponentials and a direct RK4 integration of the
//! matrix equation `dU/dt = G H(t) U`, with `G = −i` (Schrödinger) or `1`
//! (flow).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Convention, Model};
use crate::pauli::{exp2, Complex2x2};
use crate::propagator::{PropagatorSeries, SeriesSource};
use crate::riccati::uniform_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleScheme {
    /// `U ← exp(G h H(t + h/2)) U`; second order, each factor an exact
    /// group element.
    #[default]
    MidpointExponential,
    /// Classic fourth-order Runge–Kutta on the matrix equation.
    Rk4Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    /// Largest internal step.
    pub step: f64,
    pub scheme: OracleScheme,
    /// Overrides the model's own convention when set.
    pub convention: Option<Convention>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { step: 1e-4, scheme: OracleScheme::default(), convention: None }
    }
}

impl OracleConfig {
    pub fn with_scheme(mut self, scheme: OracleScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.step > 0.0 && self.step.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("oracle step must be positive, got {}", self.step)))
        }
    }
}

/// Midpoint exponential product on the oracle's native grid (spacing at most
/// `cfg.step`).
pub fn time_ordered_product(model: &Model, t0: f64, t1: f64, cfg: &OracleConfig) -> Result<PropagatorSeries> {
    let cfg = cfg.with_scheme(OracleScheme::MidpointExponential);
    propagate_on(model, &uniform_grid(t0, t1, cfg.step)?, &cfg)
}

/// RK4 on the oracle's native grid.
pub fn rk4_direct(model: &Model, t0: f64, t1: f64, cfg: &OracleConfig) -> Result<PropagatorSeries> {
    let cfg = cfg.with_scheme(OracleScheme::Rk4Direct);
    propagate_on(model, &uniform_grid(t0, t1, cfg.step)?, &cfg)
}

/// Propagates from the model's initial matrix at `grid[0]` and samples on
/// `grid`. Each grid interval is split into equal substeps no longer than
/// `cfg.step`.
pub fn propagate_on(model: &Model, grid: &[f64], cfg: &OracleConfig) -> Result<PropagatorSeries> {
    let convention = cfg.convention.unwrap_or_else(|| model.convention());
    propagate_from(model, grid, model.initial_matrix(convention), cfg)
}

/// As [`propagate_on`] with an explicit `U(grid[0])`.
pub fn propagate_from(model: &Model, grid: &[f64], initial: Complex2x2, cfg: &OracleConfig) -> Result<PropagatorSeries> {
    cfg.validate()?;
    if grid.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: grid.len() });
    }
    model.check_span(grid[0], grid[grid.len() - 1])?;
    let convention = cfg.convention.unwrap_or_else(|| model.convention());
    let g = convention.generator_factor();

    let mut u = initial;
    let mut matrices = Vec::with_capacity(grid.len());
    matrices.push(Some(u));
    for w in grid.windows(2) {
        let span = w[1] - w[0];
        let substeps = (span / cfg.step - 1e-9).ceil().max(1.0) as usize;
        let h = span / substeps as f64;
        for k in 0..substeps {
            let t = w[0] + k as f64 * h;
            u = match cfg.scheme {
                OracleScheme::MidpointExponential => exp2(&model.hamiltonian_at(t + 0.5 * h)?.scale(g * h)) * u,
                OracleScheme::Rk4Direct => rk4_step(model, g, t, h, &u)?,
            };
        }
        matrices.push(Some(u));
    }
    Ok(PropagatorSeries { times: grid.to_vec(), matrices, convention, source: SeriesSource::Oracle })
}

fn rk4_step(model: &Model, g: num_complex::Complex64, t: f64, h: f64, u: &Complex2x2) -> Result<Complex2x2> {
    let gen = |t: f64| -> Result<Complex2x2> { Ok(model.hamiltonian_at(t)?.scale(g)) };
    let (a, mid, b) = (gen(t)?, gen(t + 0.5 * h)?, gen(t + h)?);
    let k1 = a * *u;
    let k2 = mid * (*u + k1 * (0.5 * h));
    let k3 = mid * (*u + k2 * (0.5 * h));
    let k4 = b * (*u + k3 * h);
    Ok(*u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingFunction as Cf;
    use crate::models::{static_hamiltonian, PTModelParams, StaticPTParams};
    use num_complex::Complex64;
    use std::f64::consts::FRAC_PI_6;

    fn pt(nu: f64, kappa: Cf, lambda: Cf) -> Model {
        Model::Pt(PTModelParams::new(nu, kappa, lambda))
    }

    #[test]
    fn zero_hamiltonian_is_constant() {
        let m = pt(0.0, Cf::constant(0.0), Cf::constant(0.0));
        for scheme in [OracleScheme::MidpointExponential, OracleScheme::Rk4Direct] {
            let cfg = OracleConfig::default().with_scheme(scheme).with_step(1e-2);
            let s = propagate_on(&m, &uniform_grid(0.0, 1.0, 0.1).unwrap(), &cfg).unwrap();
            assert!(s.matrices.iter().all(|u| u.unwrap() == Complex2x2::IDENTITY));
        }
    }

    #[test]
    fn constant_hamiltonian_matches_exponential() {
        let p = StaticPTParams::new(1.0, 2.0, FRAC_PI_6);
        let m = Model::Pt(PTModelParams::from_static(&p));
        let s = time_ordered_product(&m, 0.0, 1.0, &OracleConfig::default()).unwrap();
        let exact = exp2(&static_hamiltonian(&p).scale(Complex64::new(0.0, -1.0)));
        assert!(s.last().unwrap().approx_eq(&exact, 1e-8));
        // scipy.linalg.expm(-1j*H)[0, 1]
        assert!((exact.m12 - Complex64::new(-0.73471925, -0.62486183)).norm() < 1e-8);
    }

    #[test]
    fn schemes_agree_for_constant_couplings() {
        let m = pt(0.0, Cf::constant(0.3), Cf::constant(0.5));
        let cfg = OracleConfig::default();
        let a = time_ordered_product(&m, 0.0, 1.0, &cfg).unwrap();
        let b = rk4_direct(&m, 0.0, 1.0, &cfg).unwrap();
        assert!(a.last().unwrap().distance(&b.last().unwrap()) <= 1e-9);
    }

    #[test]
    fn determinant_follows_trace() {
        let m = pt(1.0, Cf::cosine(), Cf::constant(0.5));
        let s = rk4_direct(&m, 0.0, 1.0, &OracleConfig::default()).unwrap();
        let expected = Complex64::new(0.0, -2.0).exp();
        assert!((s.last().unwrap().det() - expected).norm() <= 1e-9);
    }

    #[test]
    fn second_order_convergence() {
        let m = pt(0.0, Cf::cosine(), Cf::constant(0.5));
        let end = |step: f64| time_ordered_product(&m, 0.0, 1.0, &OracleConfig::default().with_step(step)).unwrap().last().unwrap();
        let reference = end(1e-5);
        let ratio = end(1e-3).distance(&reference) / end(5e-4).distance(&reference);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_step() {
        let m = pt(0.0, Cf::constant(0.0), Cf::constant(0.0));
        assert!(time_ordered_product(&m, 0.0, 1.0, &OracleConfig::default().with_step(0.0)).is_err());
    }
}
