//! Real scalar coupling functions of time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed, serializable description of a real function `f(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingFunction {
    Constant {
        value: f64,
    },
    /// `amplitude · cos(angular_frequency · t + phase)`
    Sinusoid {
        amplitude: f64,
        angular_frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Coefficients in ascending powers of `t`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    /// `amplitude · exp(-rate · t)`
    ExponentialDecay {
        amplitude: f64,
        rate: f64,
    },
    /// Piecewise-linear interpolation through `(t, value)` pairs with strictly
    /// increasing abscissae.
    Tabulated {
        points: Vec<(f64, f64)>,
    },
    /// Pointwise product of the factors.
    Product {
        factors: Vec<CouplingFunction>,
    },
}

impl CouplingFunction {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn sinusoid(amplitude: f64, angular_frequency: f64, phase: f64) -> Self {
        Self::Sinusoid { amplitude, angular_frequency, phase }
    }

    pub fn cosine() -> Self {
        Self::sinusoid(1.0, 1.0, 0.0)
    }

    pub fn polynomial(coefficients: Vec<f64>) -> Self {
        Self::Polynomial { coefficients }
    }

    pub fn exponential_decay(amplitude: f64, rate: f64) -> Self {
        Self::ExponentialDecay { amplitude, rate }
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let f = Self::Tabulated { points };
        f.validate()?;
        Ok(f)
    }

    pub fn product(factors: Vec<CouplingFunction>) -> Self {
        Self::Product { factors }
    }

    /// Checks the structural invariants (finite parameters, table ordering).
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match self {
            Self::Constant { value } => finite(&[*value]),
            Self::Sinusoid { amplitude, angular_frequency, phase } => {
                finite(&[*amplitude, *angular_frequency, *phase])
            }
            Self::Polynomial { coefficients } => finite(coefficients),
            Self::ExponentialDecay { amplitude, rate } => finite(&[*amplitude, *rate]),
            Self::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidCoupling(format!(
                        "tabulated coupling needs at least 2 points, got {}",
                        points.len()
                    )));
                }
                if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::InvalidCoupling(
                        "tabulated abscissae must be strictly increasing".into(),
                    ));
                }
                points.iter().all(|(t, v)| t.is_finite() && v.is_finite())
            }
            Self::Product { factors } => {
                for f in factors {
                    f.validate()?;
                }
                true
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidCoupling(format!("non-finite parameter in {self:?}")))
        }
    }

    /// The closed interval on which the function is defined, or `None` for all `t`.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match self {
            Self::Tabulated { points } => {
                Some((points.first().map_or(0.0, |p| p.0), points.last().map_or(0.0, |p| p.0)))
            }
            Self::Product { factors } => factors.iter().filter_map(Self::domain).reduce(|a, b| (a.0.max(b.0), a.1.min(b.1))),
            _ => None,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(match self {
            Self::Constant { value } => *value,
            Self::Sinusoid { amplitude, angular_frequency, phase } => {
                amplitude * (angular_frequency * t + phase).cos()
            }
            Self::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c),
            Self::ExponentialDecay { amplitude, rate } => amplitude * (-rate * t).exp(),
            Self::Tabulated { points } => interpolate(points, t)?,
            Self::Product { factors } => {
                let mut acc = 1.0;
                for f in factors {
                    acc *= f.eval(t)?;
                }
                acc
            }
        })
    }

    /// `factor · f(t)`, expressed within the same variant.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Self::Constant { value } => Self::Constant { value: value * factor },
            Self::Sinusoid { amplitude, angular_frequency, phase } => Self::Sinusoid {
                amplitude: amplitude * factor,
                angular_frequency: *angular_frequency,
                phase: *phase,
            },
            Self::Polynomial { coefficients } => Self::Polynomial {
                coefficients: coefficients.iter().map(|c| c * factor).collect(),
            },
            Self::ExponentialDecay { amplitude, rate } => Self::ExponentialDecay {
                amplitude: amplitude * factor,
                rate: *rate,
            },
            Self::Tabulated { points } => Self::Tabulated {
                points: points.iter().map(|&(t, v)| (t, v * factor)).collect(),
            },
            Self::Product { factors } => {
                let mut factors = factors.clone();
                match factors.first_mut() {
                    Some(first) => *first = first.scaled(factor),
                    None => factors.push(Self::constant(factor)),
                }
                Self::Product { factors }
            }
        }
    }

    /// True when `t` lies in the declared domain.
    pub fn contains(&self, t: f64) -> bool {
        self.domain().is_none_or(|(lo, hi)| t >= lo && t <= hi)
    }
}

fn interpolate(points: &[(f64, f64)], t: f64) -> Result<f64> {
    let (lo, hi) = (points[0].0, points[points.len() - 1].0);
    if !(t >= lo && t <= hi) {
        return Err(Error::CouplingDomain { t, lo, hi });
    }
    // first index with abscissa > t, clamped so the last point uses the final segment
    let idx = points.partition_point(|p| p.0 <= t).clamp(1, points.len() - 1);
    let (t0, v0) = points[idx - 1];
    let (t1, v1) = points[idx];
    let w = (t - t0) / (t1 - t0);
    Ok(v0 + w * (v1 - v0))
}
