//! A fixed, deterministic battery of invariant checks, each reduced to one
//! measured error compared against a tolerance.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::coupling::CouplingFunction as Cf;
use crate::error::Result;
use crate::makharko::{check_integrability, IntegrabilityCase, SignBranch, DEFAULT_FD_WIDTH};
use crate::models::{eigen_analysis, pt_conjugate, pt_phase, static_hamiltonian, Model, PTModelParams, PTPhase, SpinModelParams, StaticPTParams, DEFAULT_PHASE_TOL};
use crate::oracle::{propagate_from, propagate_on, OracleConfig};
use crate::pauli::{commutator, conjugate_by_exp, exp2, Complex2x2};
use crate::propagator::{assemble_pt, gauss_decompose, simulate, SimulationConfig};
use crate::riccati::{closed_form_b_proportional, consistency_residuals, grid_with_points, integrate_factors, particular_b0, FactorState, IntegratorConfig, ParticularRoots};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Set when the check could not be evaluated.
    pub error: Option<String>,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<28} measured {:.3e} tol {:.1e}", self.name, self.measured, self.tolerance)?;
        if let Some(e) = &self.error {
            write!(f, " ({e})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        write!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

type Measure = fn() -> Result<f64>;

const CHECKS: &[(&str, f64, Measure)] = &[
    ("sigma_nilpotency", 1e-15, sigma_nilpotency),
    ("commutators", 1e-15, commutators),
    ("bch_push_through", 1e-13, bch_push_through),
    ("exp2_determinant", 1e-12, exp2_determinant),
    ("static_pt_symmetry", 1e-15, static_pt_symmetry),
    ("eigen_residual", 1e-10, eigen_residual),
    ("phase_tags", 0.5, phase_tags),
    ("analytic_closure_pt", 1e-8, analytic_closure_pt),
    ("method_agreement", 1e-6, method_agreement),
    ("pole_bracket", 0.01, pole_bracket),
    ("integrability_residual", 1e-6, integrability_residual),
    ("closed_form_riccati", 1e-8, closed_form_riccati),
    ("particular_roots", 1e-12, particular_roots),
    ("spin_consistency", 1e-5, spin_consistency),
    ("hermitian_unitarity", 1e-8, hermitian_unitarity),
    ("oracle_composition", 1e-8, oracle_composition),
    ("gauss_round_trip", 1e-10, gauss_round_trip),
];

/// Runs every check. `tolerance_override` replaces all tolerances.
pub fn run_suite(tolerance_override: Option<f64>) -> VerifyReport {
    let checks = CHECKS
        .iter()
        .map(|&(name, tol, measure)| {
            let tolerance = tolerance_override.unwrap_or(tol);
            match measure() {
                Ok(measured) => Check { name, measured, tolerance, passed: measured <= tolerance, error: None },
                Err(e) => Check { name, measured: f64::INFINITY, tolerance, passed: false, error: Some(e.to_string()) },
            }
        })
        .collect();
    VerifyReport { checks }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn b_samples() -> impl Iterator<Item = f64> {
    (0..100).map(|k| -5.0 + 10.0 * k as f64 / 99.0)
}

fn sigma_nilpotency() -> Result<f64> {
    let p = Complex2x2::sigma_plus();
    let m = Complex2x2::sigma_minus();
    Ok((p * p).max_norm().max((m * m).max_norm()))
}

fn commutators() -> Result<f64> {
    let (p, m, z) = (Complex2x2::sigma_plus(), Complex2x2::sigma_minus(), Complex2x2::sigma_z());
    Ok(max_of([
        commutator(&z, &p).distance(&p.scale_re(2.0)),
        commutator(&z, &m).distance(&m.scale_re(-2.0)),
        commutator(&p, &m).distance(&z.scale_re(4.0)),
    ]))
}

fn bch_push_through() -> Result<f64> {
    let (p, m, z) = (Complex2x2::sigma_plus(), Complex2x2::sigma_minus(), Complex2x2::sigma_z());
    let i = Complex64::new(0.0, 1.0);
    Ok(max_of(b_samples().map(|b| {
        let gen = p.scale(i * b);
        let lower = m + z.scale(i * 4.0 * b) + p.scale_re(4.0 * b * b);
        let diag = z - p.scale(i * 2.0 * b);
        conjugate_by_exp(&gen, &m).distance(&lower).max(conjugate_by_exp(&gen, &z).distance(&diag))
    })))
}

fn exp2_determinant() -> Result<f64> {
    Ok(max_of((0..50).map(|k| {
        let x = k as f64 * 0.37;
        let m = Complex2x2::new(
            Complex64::new(x.sin() * 2.0, (1.3 * x).cos()),
            Complex64::new((0.7 * x).cos() * 3.0, -x.sin()),
            Complex64::new(-(0.5 * x).sin(), 2.0 * (0.9 * x).cos()),
            Complex64::new((1.1 * x).cos(), 0.4 * x.sin()),
        );
        let expected = m.trace().exp();
        (exp2(&m).det() - expected).norm() / expected.norm()
    })))
}

fn static_grid() -> impl Iterator<Item = StaticPTParams> {
    (0..8).flat_map(|i| {
        (0..8).flat_map(move |j| {
            (0..8).map(move |k| StaticPTParams::new(3.0 * i as f64 / 7.0, 0.1 + 2.9 * j as f64 / 7.0, PI * k as f64 / 7.0))
        })
    })
}

fn static_pt_symmetry() -> Result<f64> {
    Ok(max_of(static_grid().map(|p| {
        let h = static_hamiltonian(&p);
        pt_conjugate(&h).distance(&h)
    })))
}

fn eigen_residual() -> Result<f64> {
    Ok(max_of(static_grid().map(|p| {
        let e = eigen_analysis(&p);
        let h = static_hamiltonian(&p);
        let res = |v: [Complex64; 2], l: Complex64| {
            let hv = h.apply(v);
            (hv[0] - l * v[0]).norm().max((hv[1] - l * v[1]).norm())
        };
        res(e.psi_plus, e.lambda_plus).max(res(e.psi_minus, e.lambda_minus))
    })))
}

/// Fraction of grid points off the boundary band whose tag disagrees with
/// the sign of the discriminant, as a 0/1 indicator.
fn phase_tags() -> Result<f64> {
    let wrong = static_grid().any(|p| {
        let disc = p.discriminant();
        let expected = if disc > 1e-12 {
            PTPhase::Unbroken
        } else if disc < -1e-12 {
            PTPhase::Broken
        } else {
            return false;
        };
        pt_phase(&p, DEFAULT_PHASE_TOL) != expected
    });
    Ok(if wrong { 1.0 } else { 0.0 })
}

fn pt(nu: f64, kappa: Cf, lambda: Cf) -> Model {
    Model::Pt(PTModelParams::new(nu, kappa, lambda))
}

fn analytic_closure_pt() -> Result<f64> {
    let traj = integrate_factors(&pt(0.0, Cf::constant(0.0), Cf::constant(1.0)), 0.0, 1.4, &IntegratorConfig::default())?;
    Ok(max_of(traj.valid().map(|(t, s)| {
        let expected = FactorState::new(0.0, -0.5 * t.tan(), -0.25 * (2.0 * t).sin(), -t.cos().ln());
        let u = Complex2x2::new(t.cos().into(), Complex64::new(0.0, -t.sin()), Complex64::new(0.0, -t.sin()), t.cos().into());
        s.max_abs_diff(&expected).max(assemble_pt(s).distance(&u))
    })))
}

fn method_agreement() -> Result<f64> {
    let kappa = Cf::sinusoid(0.3, 1.0, 0.0);
    let lambda = crate::makharko::lambda_from_kappa(0.25, &kappa)?;
    let res = simulate(&pt(1.0, kappa, lambda), 0.0, 2.0, &SimulationConfig::default().with_points(201))?;
    Ok(res.cross_method_error.unwrap_or(f64::INFINITY))
}

/// Bracket width, or infinity unless exactly one bracket contains π/2.
fn pole_bracket() -> Result<f64> {
    let traj = integrate_factors(&pt(0.0, Cf::constant(0.0), Cf::constant(1.0)), 0.0, 2.0, &IntegratorConfig::default())?;
    Ok(match traj.pole_events.as_slice() {
        [e] if e.contains(FRAC_PI_2) => e.width(),
        _ => f64::INFINITY,
    })
}

fn integrability_residual() -> Result<f64> {
    let grid = grid_with_points(0.0, 1.0, 100);
    let mut worst: f64 = 0.0;
    for p in [0.1, 0.25, 0.4] {
        for kappa in [Cf::constant(1.0), Cf::cosine(), Cf::exponential_decay(1.0, 1.0)] {
            let report = check_integrability(&IntegrabilityCase::new(p, kappa, SignBranch::Plus)?, &grid, DEFAULT_FD_WIDTH)?;
            worst = worst.max(report.best.max_residual);
        }
    }
    Ok(worst)
}

fn closed_form_riccati() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for kappa in [Cf::constant(1.0), Cf::cosine()] {
        let lambda = crate::makharko::lambda_from_kappa(0.25, &kappa)?;
        let traj = integrate_factors(&pt(0.0, kappa.clone(), lambda), 0.0, 1.0, &IntegratorConfig::default())?;
        let closed = closed_form_b_proportional(0.25, &kappa, 0.0, 1.0, traj.len())?;
        for (s, b) in traj.states.iter().zip(&closed.values) {
            worst = worst.max(s.map_or(f64::INFINITY, |s| (s.b - b).abs()));
        }
    }
    Ok(worst)
}

fn particular_roots() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in [0.1, 0.25, 0.4, -0.3] {
        if let ParticularRoots::Real { larger, smaller } = particular_b0(p)? {
            for b in [larger, smaller] {
                let q = 4.0 * p * b * b - 2.0 * (1.0 - p * p) * b + p;
                worst = worst.max(q.abs());
            }
        }
    }
    Ok(worst)
}

fn spin_consistency() -> Result<f64> {
    let m = Model::Spin(SpinModelParams::new(1.0, 2.0, Cf::sinusoid(0.5, 1.0, 0.0)));
    let traj = integrate_factors(&m, 0.0, 2.0, &IntegratorConfig::default())?;
    Ok(max_of(consistency_residuals(&traj, &m)?.into_iter().map(|(_, r)| r)))
}

fn hermitian_unitarity() -> Result<f64> {
    let m = Model::Pt(PTModelParams::from_static(&StaticPTParams::new(1.0, 2.0, 0.0)));
    let series = propagate_on(&m, &grid_with_points(0.0, 2.0, 21), &OracleConfig::default())?;
    Ok(max_of(series.matrices.iter().flatten().map(|u| (u.adjoint() * *u).distance(&Complex2x2::IDENTITY))))
}

fn oracle_composition() -> Result<f64> {
    let m = pt(0.5, Cf::cosine(), Cf::constant(0.7));
    let cfg = OracleConfig::default();
    let whole = propagate_on(&m, &[0.0, 1.0, 2.0], &cfg)?;
    let second = propagate_from(&m, &[1.0, 2.0], Complex2x2::IDENTITY, &cfg)?;
    let (Some(u1), Some(u2), Some(u12)) = (whole.matrices[1], whole.last(), second.last()) else {
        return Ok(f64::INFINITY);
    };
    Ok(u2.distance(&(u12 * u1)))
}

fn gauss_round_trip() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let x = k as f64;
        let s = FactorState::new(1.45 * (0.7 * x).sin(), 3.0 * (1.3 * x).cos(), 3.0 * (0.37 * x).sin(), 3.0 * (2.1 * x).cos());
        worst = worst.max(gauss_decompose(&assemble_pt(&s), crate::models::ModelTag::Pt)?.max_abs_diff(&s));
    }
    Ok(worst)
}
