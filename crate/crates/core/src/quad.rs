//! Fixed-order quadrature rules.

const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Composite 5-point Gauss–Legendre rule over `panels` equal panels of `[a, b]`.
pub fn gauss_legendre<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    panels: usize,
) -> Result<f64, E> {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        let mut panel = 0.0;
        for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
            panel += w * f(mid + half * x)?;
        }
        total += half * panel;
    }
    Ok(total)
}
