//! The unreduced N-vortex Hamiltonian system on `ℝ^{2N} ≅ ℂ^N`.
//!
//! Real coordinates are laid out as `(x_1..x_N, y_1..y_N)`.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::coalgebra::rank_residuals;
use crate::error::Result;
#[cfg(test)]
use crate::error::Error;
use crate::model::{
    momentum_map, validate_state, ChargeConfig, VortexState, DEFAULT_BOUNDARY_EPS,
    DEFAULT_COLLISION_EPS,
};
use crate::ode::{self, IntegrationError, IntegratorSettings};
use crate::fd;

fn check(cfg: &ChargeConfig, z: &VortexState) -> Result<()> {
    cfg.check_dim(z.n())?;
    validate_state(z, DEFAULT_BOUNDARY_EPS, DEFAULT_COLLISION_EPS)?;
    Ok(())
}

/// `H(z) = ½(Σ Γ_i² ln(1-|z_i|²) - c Σ_{i<j} Γ_iΓ_j ln|z_i-z_j|²)`.
pub fn hamiltonian(cfg: &ChargeConfig, z: &VortexState) -> Result<f64> {
    check(cfg, z)?;
    Ok(hamiltonian_unchecked(cfg, &z.positions))
}

fn hamiltonian_unchecked(cfg: &ChargeConfig, z: &[Complex64]) -> f64 {
    let n = z.len();
    let mut self_part = 0.0;
    let mut pair_part = 0.0;
    for i in 0..n {
        let g = cfg.charge(i);
        self_part += g * g * (1.0 - z[i].norm_sqr()).ln();
        for j in i + 1..n {
            pair_part += g * cfg.charge(j) * (z[i] - z[j]).norm_sqr().ln();
        }
    }
    0.5 * (self_part - cfg.coupling() * pair_part)
}

/// `H` on the real layout, without guards; for finite-difference use.
pub fn hamiltonian_real(cfg: &ChargeConfig, xy: &[f64]) -> f64 {
    hamiltonian_unchecked(cfg, &VortexState::from_real(xy).positions)
}

/// `ż_i = i(Γ_i z_i/(1-|z_i|²) + c Σ_{j≠i} Γ_j (z_i-z_j)/|z_i-z_j|²)`.
pub fn vortex_rhs(cfg: &ChargeConfig, z: &VortexState) -> Result<Vec<Complex64>> {
    check(cfg, z)?;
    Ok(rhs_unchecked(cfg, &z.positions))
}

fn rhs_unchecked(cfg: &ChargeConfig, z: &[Complex64]) -> Vec<Complex64> {
    let n = z.len();
    let c = cfg.coupling();
    (0..n)
        .map(|i| {
            let mut v = z[i] * (cfg.charge(i) / (1.0 - z[i].norm_sqr()));
            for j in (0..n).filter(|&j| j != i) {
                let d = z[i] - z[j];
                v += d * (c * cfg.charge(j) / d.norm_sqr());
            }
            Complex64::i() * v
        })
        .collect()
}

/// `Σ_i (1/Γ_i)(∂F/∂x_i ∂G/∂y_i - ∂F/∂y_i ∂G/∂x_i)` with central-difference
/// gradients.
pub fn poisson_bracket(
    cfg: &ChargeConfig,
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
    xy: &[f64],
) -> f64 {
    let n = cfg.n();
    let df = fd::gradient(f, xy);
    let dg = fd::gradient(g, xy);
    (0..n)
        .map(|i| (df[i] * dg[n + i] - df[n + i] * dg[i]) / cfg.charge(i))
        .sum()
}

/// Noether invariant of the rotation symmetry, `Σ Γ_i |z_i|²`.
pub fn angular_impulse(cfg: &ChargeConfig, z: &VortexState) -> f64 {
    z.positions
        .iter()
        .enumerate()
        .map(|(i, zi)| cfg.charge(i) * zi.norm_sqr())
        .sum()
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    /// Number of vortices.
    pub n: usize,
    pub times: Vec<f64>,
    pub states: Vec<VortexState>,
    pub energy: Vec<f64>,
    pub angular_impulse: Vec<f64>,
    /// `‖R(J(z))‖∞` per sample.
    pub rank_residual: Vec<f64>,
}

impl Trajectory {
    fn from_samples(cfg: &ChargeConfig, samples: ode::Samples) -> Self {
        let mut out = Trajectory { n: cfg.n(), ..Trajectory::default() };
        for (t, y) in samples.times.into_iter().zip(samples.states) {
            let z = VortexState::from_real(&y);
            out.energy.push(hamiltonian_unchecked(cfg, &z.positions));
            out.angular_impulse.push(angular_impulse(cfg, &z));
            out.rank_residual.push(rank_residuals(&momentum_map(&z)).norm_inf());
            out.times.push(t);
            out.states.push(z);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&VortexState> {
        self.states.last()
    }

    /// Largest deviation of `H` from its initial value.
    pub fn energy_drift(&self) -> f64 {
        max_drift(&self.energy)
    }

    pub fn angular_impulse_drift(&self) -> f64 {
        max_drift(&self.angular_impulse)
    }

    /// Header `t,x1,y1,...,xN,yN,H,C,rankres`; 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.n;
        let mut header = vec!["t".to_string()];
        for i in 1..=n {
            header.push(format!("x{i}"));
            header.push(format!("y{i}"));
        }
        header.extend(["H", "C", "rankres"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.len() {
            let mut row = vec![fmt17(self.times[k])];
            for z in &self.states[k].positions {
                row.push(fmt17(z.re));
                row.push(fmt17(z.im));
            }
            row.push(fmt17(self.energy[k]));
            row.push(fmt17(self.angular_impulse[k]));
            row.push(fmt17(self.rank_residual[k]));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub(crate) fn max_drift(values: &[f64]) -> f64 {
    match values.first() {
        Some(&v0) => values.iter().fold(0.0, |m, v| m.max((v - v0).abs())),
        None => 0.0,
    }
}

/// Formats with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// A run that hit a guard or failed to step; `trajectory` ends at the last
/// accepted step.
#[derive(Debug, Clone)]
pub struct TrajectoryFailure {
    pub trajectory: Trajectory,
    pub error: IntegrationError,
}

impl std::fmt::Display for TrajectoryFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} samples kept)", self.error, self.trajectory.len())
    }
}

impl std::error::Error for TrajectoryFailure {}

pub fn integrate(
    cfg: &ChargeConfig,
    z0: &VortexState,
    t_span: (f64, f64),
    settings: &IntegratorSettings,
) -> std::result::Result<Trajectory, TrajectoryFailure> {
    if let Err(e) = cfg.check_dim(z0.n()) {
        return Err(TrajectoryFailure {
            trajectory: Trajectory { n: cfg.n(), ..Trajectory::default() },
            error: IntegrationError::InvalidSettings(e.to_string()),
        });
    }
    let n = cfg.n();
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> std::result::Result<(), String> {
        let z = VortexState::from_real(y);
        validate_state(&z, 0.0, 0.0).map_err(|e| e.to_string())?;
        for (i, v) in rhs_unchecked(cfg, &z.positions).into_iter().enumerate() {
            dy[i] = v.re;
            dy[n + i] = v.im;
        }
        Ok(())
    };
    let guard = |y: &[f64]| {
        validate_state(&VortexState::from_real(y), DEFAULT_BOUNDARY_EPS, DEFAULT_COLLISION_EPS)
            .map_err(|e| e.to_string())
    };
    match ode::integrate(&rhs, &guard, &z0.to_real(), t_span, settings) {
        Ok(samples) => Ok(Trajectory::from_samples(cfg, samples)),
        Err(t) => Err(TrajectoryFailure {
            trajectory: Trajectory::from_samples(cfg, t.samples),
            error: t.error,
        }),
    }
}
