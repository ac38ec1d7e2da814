//! C-style `%.17g` number formatting and the time-series CSV writer.

use std::fmt::Write as _;

use rau_core::{Complex2x2, SimulationResult};

/// Header of the time-series CSV.
pub const CSV_HEADER: &str = "t,a,b,c,d,pole_flag,\
reU11_f,imU11_f,reU12_f,imU12_f,reU21_f,imU21_f,reU22_f,imU22_f,\
reU11_o,imU11_o,reU12_o,imU12_o,reU21_o,imU21_o,reU22_o,imU22_o,\
residual_f,det_err_f";

/// Formats `x` like C's `printf("%.17g", x)`.
pub fn g17(x: f64) -> String {
    const PRECISION: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // the exponent after rounding to 17 significant digits decides the style
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..PRECISION).contains(&exp) {
        let fixed = format!("{:.*}", (PRECISION - 1 - exp) as usize, x);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn push_matrix(row: &mut String, u: Option<Complex2x2>) {
    match u {
        Some(u) => {
            for z in u.entries() {
                let _ = write!(row, ",{},{}", g17(z.re), g17(z.im));
            }
        }
        None => row.push_str(",,,,,,,,"),
    }
}

fn push_opt(row: &mut String, v: Option<f64>) {
    row.push(',');
    if let Some(v) = v {
        row.push_str(&g17(v));
    }
}

/// Renders the full CSV with `\n` line endings.
pub fn simulation_csv(res: &SimulationResult) -> String {
    let mut out = String::with_capacity(res.times.len() * 400);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, &t) in res.times.iter().enumerate() {
        let state = res.trajectory.as_ref().and_then(|tr| tr.states[i]);
        let in_bracket = res.pole_events.iter().any(|e| e.contains(t));
        let lost = res.factorized.is_some() && state.is_none();
        let mut row = g17(t);
        match state {
            Some(s) => {
                for v in [s.a, s.b, s.c, s.d] {
                    let _ = write!(row, ",{}", g17(v));
                }
            }
            None => row.push_str(",,,,"),
        }
        row.push_str(if in_bracket || lost { ",1" } else { ",0" });
        push_matrix(&mut row, res.factorized.as_ref().and_then(|s| s.matrices[i]));
        push_matrix(&mut row, res.oracle.as_ref().and_then(|s| s.matrices[i]));
        push_opt(&mut row, res.residual_profile.get(i).copied().flatten());
        push_opt(&mut row, res.det_error_profile.get(i).copied().flatten());
        out.push_str(&row);
        out.push('\n');
    }
    out
}
