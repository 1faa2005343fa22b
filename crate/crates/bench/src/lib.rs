//! Fixtures shared by the benchmarks.

use vortexlp::equilibria::equilateral_center4;
use vortexlp::{momentum_map, ChargeConfig, CoadjointPoint, Complex64, VortexState};

/// `n` unit vortices spread on a spiral inside the disc.
pub fn spiral(n: usize, c: f64) -> (ChargeConfig, VortexState) {
    let cfg = ChargeConfig::uniform(n, c).expect("valid coupling");
    let z = (0..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            Complex64::from_polar(0.15 + 0.6 * t, 2.4 * k as f64)
        })
        .collect();
    (cfg, VortexState::new(z))
}

pub fn spiral_point(n: usize, c: f64) -> (ChargeConfig, CoadjointPoint) {
    let (cfg, z) = spiral(n, c);
    (cfg, momentum_map(&z))
}

/// The centred equilateral triangle at `(c, r) = (0.1, 0.4)`.
pub fn centred_triangle() -> (ChargeConfig, CoadjointPoint) {
    let cfg = ChargeConfig::uniform(4, 0.1).expect("valid coupling");
    let mu = equilateral_center4(&cfg, 0.4).expect("equal charges");
    (cfg, mu)
}
