//! Dormand–Prince 5(4) embedded Runge–Kutta pair with FSAL and a standard
//! elementary step-size controller.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

pub type State<const N: usize> = [f64; N];

fn axpy<const N: usize>(y: &State<N>, terms: &[(f64, &State<N>)], h: f64) -> State<N> {
    let mut out = *y;
    for (coef, k) in terms {
        for i in 0..N {
            out[i] += h * coef * k[i];
        }
    }
    out
}

/// Result of one trial step.
pub struct Trial<const N: usize> {
    pub y: State<N>,
    /// Derivative at the new point (first stage of the next step).
    pub dy: State<N>,
    /// Scaled RMS error; the step is acceptable when `err <= 1`.
    pub err: f64,
}

/// One Dormand–Prince trial step from `(t, y)` with known derivative `k1`.
///
/// Returns `Err` from the right-hand side unchanged; non-finite stages are
/// reported as an infinite error so the controller shrinks the step.
pub fn trial_step<const N: usize, E>(
    f: &mut impl FnMut(f64, &State<N>) -> Result<State<N>, E>,
    t: f64,
    y: &State<N>,
    k1: &State<N>,
    h: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trial<N>, E> {
    let k2 = f(t + C2 * h, &axpy(y, &[(A21, k1)], h))?;
    let k3 = f(t + C3 * h, &axpy(y, &[(A31, k1), (A32, &k2)], h))?;
    let k4 = f(t + C4 * h, &axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h))?;
    let k5 = f(t + C5 * h, &axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h))?;
    let k6 = f(t + h, &axpy(y, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h))?;
    let y_new = axpy(y, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
    let k7 = f(t + h, &y_new)?;

    let mut sum = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = abs_tol + rel_tol * y[i].abs().max(y_new[i].abs());
        sum += (e / scale).powi(2);
    }
    let err = (sum / N as f64).sqrt();
    let finite = y_new.iter().chain(k7.iter()).all(|v| v.is_finite());
    Ok(Trial { y: y_new, dy: k7, err: if finite && err.is_finite() { err } else { f64::INFINITY } })
}

/// Step-size factor proposed by the controller for a given scaled error.
pub fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        MAX_FACTOR
    } else if !err.is_finite() {
        MIN_FACTOR
    } else {
        (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn integrate(mut h: f64, t1: f64, tol: f64) -> (f64, usize) {
        let mut f = |_t: f64, y: &State<1>| -> Result<State<1>, Infallible> { Ok([-2.0 * y[0]]) };
        let (mut t, mut y) = (0.0, [1.0]);
        let mut k1 = f(t, &y).unwrap();
        let mut steps = 0;
        while t < t1 {
            h = h.min(t1 - t);
            let trial = trial_step(&mut f, t, &y, &k1, h, tol, tol * 1e-3).unwrap();
            let fac = step_factor(trial.err);
            if trial.err <= 1.0 {
                t += h;
                y = trial.y;
                k1 = trial.dy;
                steps += 1;
            }
            h *= fac;
        }
        (y[0], steps)
    }

    #[test]
    fn exponential_decay_to_tolerance() {
        let (y, _) = integrate(0.1, 2.0, 1e-10);
        assert!((y - (-4.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn fixed_step_error_is_fifth_order() {
        let mut f = |_t: f64, y: &State<1>| -> Result<State<1>, Infallible> { Ok([y[0]]) };
        let err_at = |h: f64, f: &mut dyn FnMut(f64, &State<1>) -> Result<State<1>, Infallible>| {
            let k1 = f(0.0, &[1.0]).unwrap();
            let mut g = |t: f64, y: &State<1>| f(t, y);
            let trial = trial_step(&mut g, 0.0, &[1.0], &k1, h, 1.0, 1.0).unwrap();
            (trial.y[0] - h.exp()).abs()
        };
        let e1 = err_at(0.1, &mut f);
        let e2 = err_at(0.05, &mut f);
        // local error O(h^6) for the propagated 5th-order solution
        let ratio = e1 / e2;
        assert!(ratio > 50.0 && ratio < 80.0, "ratio {ratio}");
    }

    #[test]
    fn controller_limits() {
        assert_eq!(step_factor(0.0), MAX_FACTOR);
        assert_eq!(step_factor(f64::INFINITY), MIN_FACTOR);
        assert!(step_factor(1.0) < 1.0);
    }
}
