//! Relative equilibria: closed-form families and a Newton solver for rigidly
//! rotating configurations.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coalgebra::lie_poisson_rhs;
use crate::dynamics::vortex_rhs;
use crate::error::{Error, Result};
use crate::fd;
use crate::model::{momentum_map, ChargeConfig, CoadjointPoint, VortexState};

/// Grid size for the sign-change scan in the curve solvers.
pub const CURVE_SCAN_POINTS: usize = 10_000;
/// Bisection stops once `|g| <` this.
pub const CURVE_TOL: f64 = 1e-13;
/// Newton target for `‖F‖∞`.
pub const NEWTON_TOL: f64 = 1e-11;
const NEWTON_MAX_ITER: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelEqKind {
    PairA,
    PairB,
    Equilateral3,
    EquilateralCenter4,
    Numeric,
}

/// A family together with its parameters (`r`, `r1`, `r2`, `omega` as
/// applicable; the coupling comes from the charge configuration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelEqSpec {
    pub kind: RelEqKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl RelEqSpec {
    pub fn new(kind: RelEqKind) -> Self {
        Self { kind, params: BTreeMap::new() }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingParameter(name.to_string()))
    }

    fn radius(&self, name: &str) -> Result<f64> {
        let r = self.param(name)?;
        check_radius(name, r)?;
        Ok(r)
    }
}

fn check_radius(name: &str, r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {r} must lie in (0, 1)")))
    }
}

/// A located relative equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeEquilibrium {
    pub mu0: CoadjointPoint,
    pub z0: VortexState,
    pub omega: f64,
}

/// `(c(μ₁-μ₂)/(μ₁+μ₂-2μ₃) + (1/(1-μ₁) - 1/(1-μ₂))μ₃, μ₄)` for `N = 2`.
pub fn pair_fixed_point_residual(cfg: &ChargeConfig, mu: &CoadjointPoint) -> Result<[f64; 2]> {
    cfg.check_dim(2)?;
    if mu.n() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: mu.n() });
    }
    let (m1, m2, m3, m4) = (mu.coords[0], mu.coords[1], mu.coords[2], mu.coords[3]);
    let d = m1 + m2 - 2.0 * m3;
    if d == 0.0 {
        return Err(Error::Domain("mu_1 + mu_2 - 2 mu_3 = 0".into()));
    }
    let first = cfg.coupling() * (m1 - m2) / d + (1.0 / (1.0 - m1) - 1.0 / (1.0 - m2)) * m3;
    Ok([first, m4])
}

/// Same-sign opposite-side pair curve, `c(1-r1²)(1-r2²) - r1 r2 (r1+r2)²`.
pub fn family_b_curve(c: f64, r1: f64, r2: f64) -> f64 {
    c * (1.0 - r1 * r1) * (1.0 - r2 * r2) - r1 * r2 * (r1 + r2).powi(2)
}

/// Dipole pair curve, `c(1-r1²)(1-r2²) - r1 r2 (2 - r1² - r2²)`.
pub fn dipole_curve(c: f64, r1: f64, r2: f64) -> f64 {
    c * (1.0 - r1 * r1) * (1.0 - r2 * r2) - r1 * r2 * (2.0 - r1 * r1 - r2 * r2)
}

/// All roots of `g` in `(0, 1)`: sign changes on a uniform grid, refined by
/// bisection.
fn curve_roots(g: impl Fn(f64) -> f64) -> Vec<f64> {
    let grid: Vec<f64> = (1..CURVE_SCAN_POINTS)
        .map(|k| k as f64 / CURVE_SCAN_POINTS as f64)
        .collect();
    let mut roots = Vec::new();
    let mut prev = (grid[0], g(grid[0]));
    if prev.1 == 0.0 {
        roots.push(prev.0);
    }
    for &x in &grid[1..] {
        let gx = g(x);
        if gx == 0.0 {
            roots.push(x);
        } else if prev.1 != 0.0 && prev.1.signum() != gx.signum() {
            roots.push(bisect(&g, prev.0, x, prev.1));
        }
        prev = (x, gx);
    }
    roots
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    let mut best = (a, ga.abs());
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm.abs() < best.1 {
            best = (m, gm.abs());
        }
        if gm.abs() < CURVE_TOL || b - a <= f64::EPSILON * m {
            return m;
        }
        if gm.signum() == ga.signum() {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    best.0
}

/// Radii `r2` completing `r1` to a same-sign pair `(r1, -r2)` off family A.
pub fn pair_family_b_solve(cfg: &ChargeConfig, r1: f64) -> Result<Vec<f64>> {
    check_radius("r1", r1)?;
    let c = cfg.coupling();
    Ok(curve_roots(|r2| family_b_curve(c, r1, r2))
        .into_iter()
        .filter(|r2| (r2 - r1).abs() > 1e-9)
        .collect())
}

/// Radii `r2` completing `r1` to a dipole pair `(r1, -r2)`.
pub fn dipole_family_curve(cfg: &ChargeConfig, r1: f64) -> Result<Vec<f64>> {
    check_radius("r1", r1)?;
    let c = cfg.coupling();
    Ok(curve_roots(|r2| dipole_curve(c, r1, r2)))
}

fn require_equal_charges(cfg: &ChargeConfig, count: usize, what: &str) -> Result<()> {
    let g = cfg.charges();
    if g[..count].iter().any(|&q| q != g[0]) {
        return Err(Error::NotRelativeEquilibrium(format!(
            "{what} requires equal charges, got {:?}",
            &g[..count]
        )));
    }
    Ok(())
}

fn triangle(r: f64) -> Vec<Complex64> {
    (0..3).map(|k| Complex64::from_polar(r, 2.0 * PI * k as f64 / 3.0)).collect()
}

/// Equilateral triangle of radius `r`.
pub fn equilateral3(cfg: &ChargeConfig, r: f64) -> Result<CoadjointPoint> {
    cfg.check_dim(3)?;
    check_radius("r", r)?;
    require_equal_charges(cfg, 3, "the equilateral triangle")?;
    let s = 0.5 * 3f64.sqrt() * r * r;
    let h = -0.5 * r * r;
    let r2 = r * r;
    CoadjointPoint::new(vec![r2, r2, r2, h, -s, h, s, h, -s])
}

/// Equilateral triangle of radius `r` with a fourth vortex at the centre.
pub fn equilateral_center4(cfg: &ChargeConfig, r: f64) -> Result<CoadjointPoint> {
    cfg.check_dim(4)?;
    check_radius("r", r)?;
    require_equal_charges(cfg, 3, "the centred equilateral triangle")?;
    let s = 0.5 * 3f64.sqrt() * r * r;
    let h = -0.5 * r * r;
    let r2 = r * r;
    CoadjointPoint::new(vec![
        r2, r2, r2, 0.0, h, -s, h, s, 0.0, 0.0, h, -s, 0.0, 0.0, 0.0, 0.0,
    ])
}

/// Least-squares rotation rate `ω` with `ż ≈ iωz`.
pub fn rotation_rate(cfg: &ChargeConfig, z: &VortexState) -> Result<f64> {
    let v = vortex_rhs(cfg, z)?;
    let num: f64 = z.positions.iter().zip(&v).map(|(zk, vk)| ((Complex64::i() * zk).conj() * vk).re).sum();
    let den: f64 = z.positions.iter().map(|zk| zk.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::InvalidParameter("all vortices at the origin".into()));
    }
    Ok(num / den)
}

/// Closed-form or numerically refined equilibria described by `spec`.
///
/// `PairB` returns one entry per branch root for the given `r1` unless `r2`
/// is also supplied. `Numeric` expects `x1, y1, ..., omega` guesses in
/// `params` and is refined by [`newton_relative_equilibrium`].
pub fn relative_equilibria(cfg: &ChargeConfig, spec: &RelEqSpec) -> Result<Vec<RelativeEquilibrium>> {
    let from_state = |z: VortexState| -> Result<RelativeEquilibrium> {
        let omega = rotation_rate(cfg, &z)?;
        Ok(RelativeEquilibrium { mu0: momentum_map(&z), z0: z, omega })
    };
    let pair = |r1: f64, r2: f64| {
        VortexState::new(vec![Complex64::new(r1, 0.0), Complex64::new(-r2, 0.0)])
    };
    match spec.kind {
        RelEqKind::PairA => {
            cfg.check_dim(2)?;
            require_equal_charges(cfg, 2, "family A")?;
            let r = spec.radius("r")?;
            Ok(vec![from_state(pair(r, r))?])
        }
        RelEqKind::PairB => {
            cfg.check_dim(2)?;
            let r1 = spec.radius("r1")?;
            let (g1, g2) = (cfg.charges()[0], cfg.charges()[1]);
            let curve: fn(f64, f64, f64) -> f64 = if g1 == g2 {
                family_b_curve
            } else if g1 == -g2 {
                dipole_curve
            } else {
                return Err(Error::NotRelativeEquilibrium(format!(
                    "pair family B needs equal or opposite charges, got {:?}",
                    cfg.charges()
                )));
            };
            let roots = match spec.params.get("r2") {
                Some(&r2) => {
                    check_radius("r2", r2)?;
                    let g = curve(cfg.coupling(), r1, r2);
                    if g.abs() > 1e-10 {
                        return Err(Error::NotRelativeEquilibrium(format!(
                            "(r1, r2) = ({r1}, {r2}) is off the pair curve (g = {g:e})"
                        )));
                    }
                    vec![r2]
                }
                None if g1 == g2 => pair_family_b_solve(cfg, r1)?,
                None => dipole_family_curve(cfg, r1)?,
            };
            roots.into_iter().map(|r2| from_state(pair(r1, r2))).collect()
        }
        RelEqKind::Equilateral3 => {
            let r = spec.radius("r")?;
            let mu0 = equilateral3(cfg, r)?;
            let z = VortexState::new(triangle(r));
            let omega = rotation_rate(cfg, &z)?;
            Ok(vec![RelativeEquilibrium { mu0, z0: z, omega }])
        }
        RelEqKind::EquilateralCenter4 => {
            let r = spec.radius("r")?;
            let mu0 = equilateral_center4(cfg, r)?;
            let mut pos = triangle(r);
            pos.push(Complex64::new(0.0, 0.0));
            let z = VortexState::new(pos);
            let omega = rotation_rate(cfg, &z)?;
            Ok(vec![RelativeEquilibrium { mu0, z0: z, omega }])
        }
        RelEqKind::Numeric => {
            let n = cfg.n();
            let mut xy = Vec::with_capacity(2 * n);
            for k in 1..=n {
                xy.push([spec.param(&format!("x{k}"))?, spec.param(&format!("y{k}"))?]);
            }
            let z = VortexState::from_xy(&xy);
            let omega = match spec.params.get("omega") {
                Some(&w) => w,
                None => rotation_rate(cfg, &z)?,
            };
            let (z0, omega, _) = newton_relative_equilibrium(cfg, &z, omega)?;
            Ok(vec![RelativeEquilibrium { mu0: momentum_map(&z0), z0, omega }])
        }
    }
}

fn rigid_residual(cfg: &ChargeConfig, u: &[f64]) -> Result<Vec<f64>> {
    let n = cfg.n();
    let z = VortexState::from_real(&u[..2 * n]);
    let omega = u[2 * n];
    let v = vortex_rhs(cfg, &z)?;
    let mut f = vec![0.0; 2 * n + 1];
    for k in 0..n {
        let r = v[k] - Complex64::i() * omega * z.positions[k];
        f[k] = r.re;
        f[n + k] = r.im;
    }
    f[2 * n] = z.positions[0].im;
    Ok(f)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves `vortex_rhs(z) - iωz = 0` with the gauge `Im z₁ = 0` by damped
/// Gauss–Newton with pseudo-inverse steps. The output is rotated so that
/// `z₁` is real and positive. Returns `(z0, ω, ‖F‖∞)`.
pub fn newton_relative_equilibrium(
    cfg: &ChargeConfig,
    z_guess: &VortexState,
    omega_guess: f64,
) -> Result<(VortexState, f64, f64)> {
    let n = cfg.n();
    cfg.check_dim(z_guess.n())?;
    let z1 = z_guess.positions[0];
    let start = if z1.norm() > 0.0 { z_guess.rotated(-z1.arg()) } else { z_guess.clone() };
    let mut u = start.to_real();
    u.push(omega_guess);
    let mut f = rigid_residual(cfg, &u)?;
    // A poor rate guess can trap the iteration; start from the better of it
    // and the least-squares rate of the guessed positions.
    if let Ok(w) = rotation_rate(cfg, &start) {
        let mut alt = start.to_real();
        alt.push(w);
        let fa = rigid_residual(cfg, &alt)?;
        if norm2(&fa) < norm2(&f) {
            u = alt;
            f = fa;
        }
    }
    let mut res = norm_inf(&f);
    let mut iterations = 0;
    while res >= NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::NoConvergence { iterations, residual: res });
        }
        iterations += 1;
        let resid = |x: &[f64]| rigid_residual(cfg, x);
        let jac = fd::jacobian(&resid, &u, 1e-7)?;
        let svd = SVD::new(jac, true, true);
        let sv = &svd.singular_values;
        let smax = sv.max();
        let rank = sv.iter().filter(|&&s| s > 1e-9 * smax).count();
        if rank + 2 < 2 * n + 1 {
            return Err(Error::SingularJacobian { rank, expected: 2 * n - 1 });
        }
        // One equation is a combination of the others (the angular impulse
        // identity), so the useful rank is at most 2N.
        let mut order: Vec<usize> = (0..sv.len()).collect();
        order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
        let (uu, vt) = (svd.u.as_ref().expect("u"), svd.v_t.as_ref().expect("v_t"));
        let fv = DVector::from_vec(f.clone());
        let mut step = DVector::zeros(2 * n + 1);
        for &k in order.iter().take(rank.min(2 * n)) {
            let coef = uu.column(k).dot(&fv) / sv[k];
            step += vt.row(k).transpose() * coef;
        }
        let merit = norm2(&f);
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-6 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, s)| a - alpha * s).collect();
            if let Ok(ft) = rigid_residual(cfg, &trial) {
                let rt = norm_inf(&ft);
                if norm2(&ft) < merit || rt < NEWTON_TOL {
                    u = trial;
                    f = ft;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { iterations, residual: res });
        }
    }
    let z = VortexState::from_real(&u[..2 * n]);
    let omega = u[2 * n];
    let mut z = z.rotated(-z.positions[0].arg());
    z.positions[0].im = 0.0;
    let res = norm_inf(&rigid_residual(cfg, &[z.to_real(), vec![omega]].concat())?);
    let reduced = lie_poisson_rhs(cfg, &momentum_map(&z))?.norm_inf();
    if reduced > 1e-8 {
        return Err(Error::NotRelativeEquilibrium(format!(
            "reduced field does not vanish at the Newton solution ({reduced:e})"
        )));
    }
    Ok((z, omega, res))
}

/// Jacobian helper kept public for diagnostics: `∂F/∂(x, y, ω)`.
pub fn rigid_rotation_jacobian(cfg: &ChargeConfig, z: &VortexState, omega: f64) -> Result<DMatrix<f64>> {
    let mut u = z.to_real();
    u.push(omega);
    fd::jacobian(&|x: &[f64]| rigid_residual(cfg, x), &u, 1e-7)
}
