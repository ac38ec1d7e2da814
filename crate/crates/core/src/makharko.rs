//! Integrability condition for the PT Riccati equation in terms of a
//! generating function `f(t)`:
//!
//! ```text
//! λ + d/dt[(−2κ ± √f) / (2λ)] + (4κ² − f) / (4λ) = 0
//! ```
//!
//! When the bracketed ratio is a constant `p`, consistency forces
//! `λ = 2pκ/(1 − p²)` and `f = 4κ²((1 + p²)/(1 − p²))²`.

use serde::{Deserialize, Serialize};

use crate::coupling::CouplingFunction;
use crate::error::{Error, Result};

/// Default central-difference width for the derivative term.
pub const DEFAULT_FD_WIDTH: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignBranch {
    Plus,
    Minus,
}

impl SignBranch {
    pub const BOTH: [SignBranch; 2] = [SignBranch::Plus, SignBranch::Minus];

    fn sign(self) -> f64 {
        match self {
            SignBranch::Plus => 1.0,
            SignBranch::Minus => -1.0,
        }
    }
}

/// A proportional-coupling instance of the integrability condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityCase {
    /// The constant value of the ratio `(−2κ ± √f)/(2λ)`.
    pub p: f64,
    pub kappa: CouplingFunction,
    pub lambda: CouplingFunction,
    pub f: CouplingFunction,
    pub sign_branch: SignBranch,
}

impl IntegrabilityCase {
    pub fn new(p: f64, kappa: CouplingFunction, sign_branch: SignBranch) -> Result<Self> {
        let lambda = lambda_from_kappa(p, &kappa)?;
        let f = proportional_f(p, &kappa)?;
        Ok(Self { p, kappa, lambda, f, sign_branch })
    }
}

fn check_p(p: f64) -> Result<()> {
    if !p.is_finite() || p.abs() == 1.0 {
        Err(Error::InvalidParameter(format!("proportionality constant must be finite and ≠ ±1, got {p}")))
    } else {
        Ok(())
    }
}

/// `λ = 2pκ/(1 − p²)`, as a rescaled copy of `κ`.
pub fn lambda_from_kappa(p: f64, kappa: &CouplingFunction) -> Result<CouplingFunction> {
    check_p(p)?;
    Ok(kappa.scaled(2.0 * p / (1.0 - p * p)))
}

/// `f = 4κ²((1 + p²)/(1 − p²))²` as a coupling function.
pub fn proportional_f(p: f64, kappa: &CouplingFunction) -> Result<CouplingFunction> {
    check_p(p)?;
    let ratio = (1.0 + p * p) / (1.0 - p * p);
    Ok(CouplingFunction::product(vec![
        CouplingFunction::constant(4.0 * ratio * ratio),
        kappa.clone(),
        kappa.clone(),
    ]))
}

/// `f = 4(λ² + κ²)`, the form forced by a constant ratio.
pub fn generating_f(kappa_val: f64, lambda_val: f64) -> f64 {
    4.0 * (lambda_val * lambda_val + kappa_val * kappa_val)
}

/// `f = 4(κ + pλ)²`, the definition of a constant ratio `p`.
pub fn generating_f_from_ratio(kappa_val: f64, lambda_val: f64, p: f64) -> f64 {
    let s = kappa_val + p * lambda_val;
    4.0 * s * s
}

/// `f = 4κ²((1 + p²)/(1 − p²))²`.
pub fn generating_f_proportional(kappa_val: f64, p: f64) -> f64 {
    let ratio = (1.0 + p * p) / (1.0 - p * p);
    4.0 * kappa_val * kappa_val * ratio * ratio
}

/// `(−2κ ± √f)/(2λ)` at time `t`.
pub fn branch_ratio(
    kappa: &CouplingFunction,
    lambda: &CouplingFunction,
    f: &CouplingFunction,
    sign_branch: SignBranch,
    t: f64,
) -> Result<f64> {
    let kappa_val = kappa.eval(t)?;
    let lambda_val = lambda.eval(t)?;
    let f_val = f.eval(t)?;
    if lambda_val == 0.0 {
        return Err(Error::ZeroLambda { t });
    }
    if f_val < 0.0 {
        return Err(Error::NegativeGenerating { t, f: f_val });
    }
    Ok((-2.0 * kappa_val + sign_branch.sign() * f_val.sqrt()) / (2.0 * lambda_val))
}

/// Signed left-hand side of the integrability condition at `t`, with the
/// derivative taken by a central difference of half-width `h`.
pub fn integrability_residual(
    kappa: &CouplingFunction,
    lambda: &CouplingFunction,
    f: &CouplingFunction,
    sign_branch: SignBranch,
    t: f64,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("finite-difference width must be positive, got {h}")));
    }
    let kappa_val = kappa.eval(t)?;
    let lambda_val = lambda.eval(t)?;
    let f_val = f.eval(t)?;
    if lambda_val == 0.0 {
        return Err(Error::ZeroLambda { t });
    }
    if f_val < 0.0 {
        return Err(Error::NegativeGenerating { t, f: f_val });
    }
    let forward = branch_ratio(kappa, lambda, f, sign_branch, t + h)?;
    let backward = branch_ratio(kappa, lambda, f, sign_branch, t - h)?;
    let derivative = (forward - backward) / (2.0 * h);
    Ok(lambda_val + derivative + (4.0 * kappa_val * kappa_val - f_val) / (4.0 * lambda_val))
}

/// Residual statistics of one sign branch over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchStats {
    pub branch: SignBranch,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub ratio_mean: f64,
    /// Sample standard deviation of the ratio; zero when it is constant.
    pub constancy_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub branches: Vec<BranchStats>,
    /// Branch with the smallest maximum residual.
    pub best: BranchStats,
}

/// Evaluates both sign branches of the condition on `grid`.
pub fn check_integrability(case: &IntegrabilityCase, grid: &[f64], h: f64) -> Result<IntegrabilityReport> {
    if grid.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: grid.len() });
    }
    let mut branches = Vec::with_capacity(2);
    for branch in SignBranch::BOTH {
        let mut residuals = Vec::with_capacity(grid.len());
        let mut ratios = Vec::with_capacity(grid.len());
        for &t in grid {
            residuals.push(integrability_residual(&case.kappa, &case.lambda, &case.f, branch, t, h)?.abs());
            ratios.push(branch_ratio(&case.kappa, &case.lambda, &case.f, branch, t)?);
        }
        let n = grid.len() as f64;
        let ratio_mean = ratios.iter().sum::<f64>() / n;
        let variance = ratios.iter().map(|r| (r - ratio_mean).powi(2)).sum::<f64>() / (n - 1.0);
        branches.push(BranchStats {
            branch,
            max_residual: residuals.iter().copied().fold(0.0, f64::max),
            mean_residual: residuals.iter().sum::<f64>() / n,
            ratio_mean,
            constancy_deviation: variance.sqrt(),
        });
    }
    let best = *branches
        .iter()
        .min_by(|a, b| a.max_residual.total_cmp(&b.max_residual).then(a.constancy_deviation.total_cmp(&b.constancy_deviation)))
        .expect("two branches");
    Ok(IntegrabilityReport { branches, best })
}
