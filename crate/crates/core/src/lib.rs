//! Factorized propagators for time-dependent two-level Hamiltonians.
//!
//! Two models are covered. The PT-symmetric model is
//! `H = ν I + iκ(t) σz + λ(t) σx`, with `i dU/dt = H U`. The spin model is
//! `H = −½ [ω I + ακ(t) σz + iκ(t) σx]`, with `dU/dt = H U`. In both cases the
//! propagator is written as an ordered product
//! `e^{ibσ+} e^{icσ−} e^{dσz}` times a scalar, and the real factors obey a
//! Riccati system integrated in [`riccati`]. The [`oracle`] module provides
//! independent reference propagators.

// `!(x > y)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod error;
pub mod makharko;
pub mod models;
pub mod ode;
pub mod oracle;
pub mod pauli;
pub mod propagator;
pub mod quad;
pub mod riccati;
pub mod verify;

pub use coupling::CouplingFunction;
pub use error::{Error, Result};
pub use models::{Convention, Model, ModelTag, PTModelParams, SpinModelParams, StaticPTParams};
pub use oracle::{OracleConfig, OracleScheme};
pub use pauli::Complex2x2;
pub use propagator::{simulate, Method, PropagatorSeries, SimulationConfig, SimulationResult};
pub use riccati::{FactorState, FactorTrajectory, IntegratorConfig, PoleEvent};
