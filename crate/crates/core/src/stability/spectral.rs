use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coalgebra::{lie_poisson_jacobian, lie_poisson_rhs};
use crate::error::Result;
use crate::fd;
use crate::linalg;
use crate::model::{ChargeConfig, CoadjointPoint};

/// Relative finite-difference step for [`linearize_reduced`].
pub const LINEARIZATION_STEP: f64 = 1e-7;
/// Residual above which the linearization point is flagged.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;
/// Default instability threshold relative to `‖J‖_F`.
pub const SPECTRAL_REL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum JacobianMethod {
    #[default]
    FiniteDifference,
    Analytic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub matrix: DMatrix<f64>,
    pub rhs_residual: f64,
    pub warning: Option<String>,
}

/// Jacobian of the reduced vector field at `μ0`.
pub fn linearize_reduced(
    cfg: &ChargeConfig,
    mu0: &CoadjointPoint,
    method: JacobianMethod,
) -> Result<Linearization> {
    let rhs_residual = lie_poisson_rhs(cfg, mu0)?.norm_inf();
    let matrix = match method {
        JacobianMethod::Analytic => lie_poisson_jacobian(cfg, mu0)?,
        JacobianMethod::FiniteDifference => {
            let f = |x: &[f64]| {
                lie_poisson_rhs(cfg, &CoadjointPoint { coords: x.to_vec() }).map(|p| p.coords)
            };
            fd::jacobian(&f, &mu0.coords, LINEARIZATION_STEP)?
        }
    };
    let warning = (rhs_residual > EQUILIBRIUM_TOL)
        .then(|| format!("not an equilibrium: reduced field residual {rhs_residual:e}"));
    Ok(Linearization { matrix, rhs_residual, warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralVerdict {
    Unstable,
    SpectrallyNeutral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAnalysis {
    pub eigenvalues: Vec<Complex64>,
    pub max_re: f64,
    pub tolerance: f64,
    pub verdict: SpectralVerdict,
}

/// Unstable iff some eigenvalue has real part above `tol`
/// (default `1e-7·‖J‖_F`).
pub fn spectral_verdict(j: &DMatrix<f64>, tol: Option<f64>) -> Result<SpectralAnalysis> {
    let eigenvalues = linalg::eigenvalues(j)?;
    let max_re = eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let max_re = if eigenvalues.is_empty() { 0.0 } else { max_re };
    let tolerance = tol.unwrap_or(SPECTRAL_REL_TOL * linalg::frobenius(j));
    let verdict = if max_re > tolerance {
        SpectralVerdict::Unstable
    } else {
        SpectralVerdict::SpectrallyNeutral
    };
    Ok(SpectralAnalysis { eigenvalues, max_re, tolerance, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::closed_form::g2;

    fn family_a(c: f64, r: f64) -> (ChargeConfig, CoadjointPoint) {
        let cfg = ChargeConfig::uniform(2, c).unwrap();
        (cfg, CoadjointPoint::new(vec![r * r, r * r, -r * r, 0.0]).unwrap())
    }

    #[test]
    fn family_a_pattern_and_spectrum() {
        let (cfg, mu) = family_a(0.1, 0.5);
        let lin = linearize_reduced(&cfg, &mu, JacobianMethod::FiniteDifference).unwrap();
        assert!(lin.warning.is_none());
        let scale = lin.matrix.amax();
        for r in 0..4 {
            for k in 0..4 {
                let allowed = matches!((r, k), (0, 3) | (1, 3) | (3, 0) | (3, 1));
                if !allowed {
                    assert!(lin.matrix[(r, k)].abs() < 1e-7 * scale, "({r},{k})");
                }
            }
        }
        let s = spectral_verdict(&lin.matrix, None).unwrap();
        assert_eq!(s.verdict, SpectralVerdict::Unstable);
        let expected = 0.1f64.sqrt() / (2.0 * 0.25 * 0.75) * g2(0.1, 0.5).sqrt();
        assert!((expected - 0.371184).abs() < 1e-6);
        assert!((s.max_re - expected).abs() < 1e-6);
    }

    #[test]
    fn family_a_stable_side_is_neutral() {
        let (cfg, mu) = family_a(0.1, 0.3);
        let lin = linearize_reduced(&cfg, &mu, JacobianMethod::Analytic).unwrap();
        let s = spectral_verdict(&lin.matrix, None).unwrap();
        assert_eq!(s.verdict, SpectralVerdict::SpectrallyNeutral);
    }

    #[test]
    fn zero_matrix_is_neutral() {
        let s = spectral_verdict(&DMatrix::zeros(4, 4), None).unwrap();
        assert_eq!(s.verdict, SpectralVerdict::SpectrallyNeutral);
    }

    #[test]
    fn non_equilibrium_warns() {
        let cfg = ChargeConfig::uniform(2, 0.1).unwrap();
        let mu = CoadjointPoint::new(vec![0.25, 0.16, 0.2, 0.0]).unwrap();
        let lin = linearize_reduced(&cfg, &mu, JacobianMethod::FiniteDifference).unwrap();
        assert!(lin.warning.is_some());
    }
}
