//! Hamiltonian families: the static PT-symmetric 2×2 model, its time-dependent
//! counterpart, and the time-dependent two-level spin model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::CouplingFunction;
use crate::error::{Error, Result};
use crate::pauli::Complex2x2;

/// Default relative half-width of the exceptional-point band in [`pt_phase`].
pub const DEFAULT_PHASE_TOL: f64 = 1e-12;

pub type Vector2 = [Complex64; 2];

/// Parameters of `H = [[r e^{iθ}, s], [s, r e^{-iθ}]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticPTParams {
    pub r: f64,
    pub s: f64,
    pub theta: f64,
}

impl StaticPTParams {
    pub fn new(r: f64, s: f64, theta: f64) -> Self {
        Self { r, s, theta }
    }

    /// `s² - r² sin²θ`; positive in the unbroken phase.
    pub fn discriminant(&self) -> f64 {
        let rs = self.r * self.theta.sin();
        self.s * self.s - rs * rs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PTPhase {
    Unbroken,
    Broken,
    Exceptional,
}

impl std::fmt::Display for PTPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PTPhase::Unbroken => "unbroken",
            PTPhase::Broken => "broken",
            PTPhase::Exceptional => "exceptional",
        })
    }
}

/// How the eigenvectors in an [`EigenSystem`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenvectorForm {
    /// The α-parameterized pair `(e^{±iα/2}, ±e^{∓iα/2}) / sqrt(2 cos α)`.
    Angle,
    /// `s = 0`: the matrix is already diagonal.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub psi_plus: Vector2,
    pub psi_minus: Vector2,
    /// `sin α = (r/s) sin θ`; complex in the broken phase, zero when `s = 0`.
    pub alpha: Complex64,
    pub form: EigenvectorForm,
    /// False when α is complex (or `s = 0`): the vectors are eigenvectors of
    /// `H` but not of the antilinear PT operator.
    pub pt_eigenstates: bool,
    /// False when `cos α` vanishes and the `1/sqrt(2 cos α)` factor was dropped.
    pub normalized: bool,
}

pub fn static_hamiltonian(p: &StaticPTParams) -> Complex2x2 {
    let s = Complex64::new(p.s, 0.0);
    Complex2x2::new(Complex64::from_polar(p.r, p.theta), s, s, Complex64::from_polar(p.r, -p.theta))
}

pub fn eigen_analysis(p: &StaticPTParams) -> EigenSystem {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let base = Complex64::new(p.r * p.theta.cos(), 0.0);
    let root = Complex64::new(p.discriminant(), 0.0).sqrt();
    let lambda_plus = base + root;
    let lambda_minus = base - root;

    if p.s == 0.0 {
        let upper = Complex64::from_polar(p.r, p.theta);
        // assign the basis vector whose diagonal entry is closest to λ+
        let (psi_plus, psi_minus) = if (upper - lambda_plus).norm() <= (upper - lambda_minus).norm() {
            ([one, zero], [zero, one])
        } else {
            ([zero, one], [one, zero])
        };
        return EigenSystem {
            lambda_plus,
            lambda_minus,
            psi_plus,
            psi_minus,
            alpha: zero,
            form: EigenvectorForm::Diagonal,
            pt_eigenstates: false,
            normalized: true,
        };
    }

    let sin_alpha = Complex64::new(p.r * p.theta.sin() / p.s, 0.0);
    let alpha = sin_alpha.asin();
    let cos_alpha = alpha.cos();
    let half = Complex64::new(0.0, 0.5) * alpha;
    let norm = (cos_alpha * 2.0).sqrt().inv();
    let normalized = norm.is_finite();
    let norm = if normalized { norm } else { one };

    let a = [half.exp() * norm, (-half).exp() * norm];
    let b = [(-half).exp() * norm, -(half.exp()) * norm];
    // `a` carries r cosθ + s cos α, which is λ+ only for s > 0
    let (psi_plus, psi_minus) = if p.s > 0.0 { (a, b) } else { (b, a) };

    EigenSystem {
        lambda_plus,
        lambda_minus,
        psi_plus,
        psi_minus,
        alpha,
        form: EigenvectorForm::Angle,
        pt_eigenstates: alpha.im == 0.0,
        normalized,
    }
}

/// Classifies the PT phase with a relative tolerance band around `s² = r² sin²θ`.
pub fn pt_phase(p: &StaticPTParams, tol: f64) -> PTPhase {
    let rs = p.r * p.theta.sin();
    let (s2, r2) = (p.s * p.s, rs * rs);
    let band = tol * s2.max(r2).max(1e-300);
    let diff = s2 - r2;
    if diff > band {
        PTPhase::Unbroken
    } else if diff < -band {
        PTPhase::Broken
    } else {
        PTPhase::Exceptional
    }
}

/// The antilinear PT operation: conjugate both components and swap them.
pub fn pt_apply(v: Vector2) -> Vector2 {
    [v[1].conj(), v[0].conj()]
}

/// `P · conj(m) · P` with `P = σx`.
pub fn pt_conjugate(m: &Complex2x2) -> Complex2x2 {
    Complex2x2::new(m.m22.conj(), m.m21.conj(), m.m12.conj(), m.m11.conj())
}

/// `H(t) = ν I + iκ(t) σz + λ(t) σx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PTModelParams {
    pub nu: f64,
    pub kappa: CouplingFunction,
    pub lambda: CouplingFunction,
}

impl PTModelParams {
    pub fn new(nu: f64, kappa: CouplingFunction, lambda: CouplingFunction) -> Self {
        Self { nu, kappa, lambda }
    }

    /// The static Hamiltonian as a constant-coupling instance:
    /// `ν = r cos θ`, `κ = r sin θ`, `λ = s`.
    pub fn from_static(p: &StaticPTParams) -> Self {
        Self::new(
            p.r * p.theta.cos(),
            CouplingFunction::constant(p.r * p.theta.sin()),
            CouplingFunction::constant(p.s),
        )
    }

    pub fn hamiltonian_at(&self, t: f64) -> Result<Complex2x2> {
        let kappa = self.kappa.eval(t)?;
        let lambda = self.lambda.eval(t)?;
        Ok(Complex2x2::new(
            Complex64::new(self.nu, kappa),
            lambda.into(),
            lambda.into(),
            Complex64::new(self.nu, -kappa),
        ))
    }
}

/// `H(t) = -(1/2) [ω I + α κ(t) σz + i κ(t) σx]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinModelParams {
    pub omega: f64,
    #[serde(rename = "alpha")]
    pub alpha_coeff: f64,
    pub kappa: CouplingFunction,
}

impl SpinModelParams {
    pub fn new(omega: f64, alpha_coeff: f64, kappa: CouplingFunction) -> Self {
        Self { omega, alpha_coeff, kappa }
    }

    pub fn hamiltonian_at(&self, t: f64) -> Result<Complex2x2> {
        let kappa = self.kappa.eval(t)?;
        Ok(spin_static_hamiltonian(self.omega, self.alpha_coeff * kappa, kappa))
    }
}

/// `-(1/2) [ω I + λ σz + i κ σx]` for constant couplings.
pub fn spin_static_hamiltonian(omega: f64, lambda: f64, kappa: f64) -> Complex2x2 {
    let off = Complex64::new(0.0, -0.5 * kappa);
    Complex2x2::new(
        Complex64::new(-0.5 * (omega + lambda), 0.0),
        off,
        off,
        Complex64::new(-0.5 * (omega - lambda), 0.0),
    )
}

/// Eigenvalues of the static spin Hamiltonian by direct 2×2 diagonalization.
pub fn spin_static_eigenvalues(omega: f64, lambda: f64, kappa: f64) -> (Complex64, Complex64) {
    spin_static_hamiltonian(omega, lambda, kappa).eigenvalues()
}

/// The spin spectrum is real iff `|λ| > |κ|`.
pub fn spin_reality_check(lambda_val: f64, kappa_val: f64) -> bool {
    lambda_val.abs() > kappa_val.abs()
}

/// Which linear equation the propagator obeys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `i dU/dt = H U`
    Schrodinger,
    /// `dU/dt = H U`
    Flow,
}

impl Convention {
    /// The generator prefactor `G` in `dU/dt = G H U`.
    pub fn generator_factor(self) -> Complex64 {
        match self {
            Convention::Schrodinger => Complex64::new(0.0, -1.0),
            Convention::Flow => Complex64::new(1.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Pt,
    Spin,
}

/// A time-dependent model together with its evolution convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    Pt(PTModelParams),
    Spin(SpinModelParams),
}

impl Model {
    pub fn tag(&self) -> ModelTag {
        match self {
            Model::Pt(_) => ModelTag::Pt,
            Model::Spin(_) => ModelTag::Spin,
        }
    }

    pub fn hamiltonian_at(&self, t: f64) -> Result<Complex2x2> {
        match self {
            Model::Pt(m) => m.hamiltonian_at(t),
            Model::Spin(m) => m.hamiltonian_at(t),
        }
    }

    /// Schrödinger for the PT model, flow for the spin model.
    pub fn convention(&self) -> Convention {
        match self {
            Model::Pt(_) => Convention::Schrodinger,
            Model::Spin(_) => Convention::Flow,
        }
    }

    /// `U(t0)` under the given convention: `I`, except the spin flow which
    /// starts at `i·I` to match its factorized form.
    pub fn initial_matrix(&self, convention: Convention) -> Complex2x2 {
        match (self, convention) {
            (Model::Spin(_), Convention::Flow) => Complex2x2::scalar(Complex64::new(0.0, 1.0)),
            _ => Complex2x2::IDENTITY,
        }
    }

    pub fn couplings(&self) -> Vec<&CouplingFunction> {
        match self {
            Model::Pt(m) => vec![&m.kappa, &m.lambda],
            Model::Spin(m) => vec![&m.kappa],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = match self {
            Model::Pt(m) => vec![m.nu],
            Model::Spin(m) => vec![m.omega, m.alpha_coeff],
        };
        if scalars.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("model constants must be finite".into()));
        }
        self.couplings().into_iter().try_for_each(CouplingFunction::validate)
    }

    /// Fails when some coupling is not defined on all of `[t0, t1]`.
    pub fn check_span(&self, t0: f64, t1: f64) -> Result<()> {
        for c in self.couplings() {
            if let Some((lo, hi)) = c.domain() {
                if t0 < lo || t1 > hi {
                    let t = if t0 < lo { t0 } else { t1 };
                    return Err(Error::CouplingDomain { t, lo, hi });
                }
            }
        }
        Ok(())
    }
}
