//! Energy–Casimir certificate: find `f = a0·h + a1·C + Σ λ_k R_k` with
//! `Df(μ0) = 0` and check that `D²f(μ0)` is definite on the tangent space of
//! the constraint set `{C = C(μ0), R = 0}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coalgebra::{
    casimir, casimir_gradient, rank_residual_hessians, rank_residual_jacobian, rank_residuals,
    reduced_hamiltonian, reduced_hamiltonian_gradient, reduced_hamiltonian_hessian,
};
use crate::error::Result;
use crate::linalg;
use crate::model::{ChargeConfig, CoadjointPoint};

/// Singular values below this fraction of `σ_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Positive-definiteness margin relative to the projected Hessian's norm.
pub const PD_TOL: f64 = 1e-10;
/// Accepted multiplier residual relative to `‖Dh(μ0)‖`.
pub const MULTIPLIER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcCertificate {
    pub a0: f64,
    pub a1: f64,
    /// Multipliers of `R_1..R_{N-1}`.
    pub b: Vec<f64>,
    /// Multipliers of `Re R_ij` and `Im R_ij`, pairs in lexicographic order.
    pub c_offdiag: Vec<f64>,
    pub d_offdiag: Vec<f64>,
    pub multiplier_residual: f64,
    /// Orthonormal columns spanning `ker DC ∩ ker DR`.
    #[serde(skip)]
    pub tangent_basis: DMatrix<f64>,
    pub projected_hessian_eigs: Vec<f64>,
    pub constraint_rank: usize,
    /// `C` and `R` are numerically dependent at `μ0`.
    pub conditional: bool,
    pub verdict: bool,
}

impl EcCertificate {
    pub fn min_projected_eig(&self) -> f64 {
        self.projected_hessian_eigs.first().copied().unwrap_or(f64::NAN)
    }

    /// All residual multipliers in residual order.
    pub fn residual_multipliers(&self) -> Vec<f64> {
        let mut out = self.b.clone();
        for (c, d) in self.c_offdiag.iter().zip(&self.d_offdiag) {
            out.push(*c);
            out.push(*d);
        }
        out
    }
}

struct Setup {
    dh: DVector<f64>,
    a: DMatrix<f64>,
    d2h: DMatrix<f64>,
    forms: Vec<DMatrix<f64>>,
    basis: DMatrix<f64>,
    rank: usize,
}

fn setup(cfg: &ChargeConfig, mu0: &CoadjointPoint) -> Result<Setup> {
    let n = mu0.n();
    cfg.check_dim(n)?;
    let dim = n * n;
    let dh = DVector::from_vec(reduced_hamiltonian_gradient(cfg, mu0)?);
    let d2h = reduced_hamiltonian_hessian(cfg, mu0)?;
    let forms = rank_residual_hessians(n);
    let dr = rank_residual_jacobian(mu0, &forms);
    let dc = DVector::from_vec(casimir_gradient(cfg));

    let mut a = DMatrix::zeros(dim, 1 + forms.len());
    a.set_column(0, &dc);
    for k in 0..forms.len() {
        a.set_column(k + 1, &dr.row(k).transpose());
    }
    let (basis, rank) = linalg::null_space(&a.transpose(), RANK_TOL);
    Ok(Setup { dh, a, d2h, forms, basis, rank })
}

fn solve_multipliers(s: &Setup, a0: f64) -> (DVector<f64>, f64) {
    linalg::least_squares(&s.a, &(-a0 * &s.dh))
}

fn build(s: &Setup, a0: f64, n: usize) -> EcCertificate {
    let (x, residual) = solve_multipliers(s, a0);
    let mut d2f = a0 * &s.d2h;
    for (k, q) in s.forms.iter().enumerate() {
        d2f += x[k + 1] * q;
    }
    let projected = s.basis.transpose() * &d2f * &s.basis;
    let eigs = linalg::symmetric_eigenvalues(&projected);
    let scale = eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let ok_residual = residual <= MULTIPLIER_TOL * s.dh.norm().max(f64::MIN_POSITIVE);
    let definite = !eigs.is_empty() && eigs[0] > PD_TOL * scale;

    let m = n - 1;
    let b = (0..m).map(|k| x[1 + k]).collect();
    let pairs = x.len() - 1 - m;
    let c_offdiag = (0..pairs / 2).map(|p| x[1 + m + 2 * p]).collect();
    let d_offdiag = (0..pairs / 2).map(|p| x[2 + m + 2 * p]).collect();
    EcCertificate {
        a0,
        a1: x[0],
        b,
        c_offdiag,
        d_offdiag,
        multiplier_residual: residual,
        tangent_basis: s.basis.clone(),
        projected_hessian_eigs: eigs,
        constraint_rank: s.rank,
        conditional: s.rank < s.a.ncols(),
        verdict: ok_residual && definite,
    }
}

/// Certificate with a prescribed `a0`.
pub fn energy_casimir_with_a0(
    cfg: &ChargeConfig,
    mu0: &CoadjointPoint,
    a0: f64,
) -> Result<EcCertificate> {
    let s = setup(cfg, mu0)?;
    Ok(build(&s, a0, mu0.n()))
}

/// Tries `a0 = 1`, then `a0 = -1`; returns the first certificate found, or
/// the `a0 = 1` attempt with `verdict = false`.
pub fn energy_casimir_certificate(cfg: &ChargeConfig, mu0: &CoadjointPoint) -> Result<EcCertificate> {
    let s = setup(cfg, mu0)?;
    let plus = build(&s, 1.0, mu0.n());
    if plus.verdict {
        return Ok(plus);
    }
    let minus = build(&s, -1.0, mu0.n());
    Ok(if minus.verdict { minus } else { plus })
}

/// `f(μ) = a0·h + a1·C + Σ λ_k R_k` for the multipliers of `cert`.
pub fn ec_function(cfg: &ChargeConfig, cert: &EcCertificate, mu: &CoadjointPoint) -> Result<f64> {
    let r = rank_residuals(mu);
    let lambda = cert.residual_multipliers();
    let constraint: f64 = r.values.iter().zip(&lambda).map(|(v, l)| v * l).sum();
    Ok(cert.a0 * reduced_hamiltonian(cfg, mu)? + cert.a1 * casimir(cfg, mu) + constraint)
}

/// Analytic `D²f(μ)`.
pub fn ec_hessian(cfg: &ChargeConfig, cert: &EcCertificate, mu: &CoadjointPoint) -> Result<DMatrix<f64>> {
    let mut d2f = cert.a0 * reduced_hamiltonian_hessian(cfg, mu)?;
    for (q, l) in rank_residual_hessians(mu.n()).iter().zip(cert.residual_multipliers()) {
        d2f += l * q;
    }
    Ok(d2f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use crate::stability::closed_form::g2;

    fn family_a(c: f64, r: f64) -> (ChargeConfig, CoadjointPoint) {
        (
            ChargeConfig::uniform(2, c).unwrap(),
            CoadjointPoint::new(vec![r * r, r * r, -r * r, 0.0]).unwrap(),
        )
    }

    #[test]
    fn family_a_multipliers() {
        let (cfg, mu) = family_a(0.1, 0.3);
        let cert = energy_casimir_with_a0(&cfg, &mu, 1.0).unwrap();
        assert!((cert.a1 - 0.827228).abs() < 1e-6);
        assert!((cert.b[0] + 1.543210).abs() < 1e-6);
        assert!(cert.c_offdiag.is_empty() && cert.d_offdiag.is_empty());
        assert!(cert.verdict);
        assert!(!cert.conditional);
        assert!(g2(0.1, 0.3) < 0.0);
    }

    #[test]
    fn family_a_tangent_space() {
        let (cfg, mu) = family_a(0.1, 0.3);
        let cert = energy_casimir_certificate(&cfg, &mu).unwrap();
        let b = &cert.tangent_basis;
        assert_eq!(b.ncols(), 2);
        // span{(1,-1,0,0), (0,0,0,1)}
        for col in b.column_iter() {
            assert!((col[0] + col[1]).abs() < 1e-12 && col[2].abs() < 1e-12);
        }
    }

    #[test]
    fn family_a_unstable_side_has_indefinite_hessian() {
        let (cfg, mu) = family_a(0.1, 0.5);
        let cert = energy_casimir_certificate(&cfg, &mu).unwrap();
        assert!(!cert.verdict);
        let e = &cert.projected_hessian_eigs;
        assert!(e[0] < 0.0 && e[1] > 0.0);
    }

    #[test]
    fn analytic_hessian_matches_differences() {
        let cfg = ChargeConfig::uniform(3, 0.2).unwrap();
        let mu = crate::equilibria::equilateral3(&cfg, 0.5).unwrap();
        let cert = energy_casimir_certificate(&cfg, &mu).unwrap();
        let f = |x: &[f64]| ec_function(&cfg, &cert, &CoadjointPoint { coords: x.to_vec() }).unwrap();
        let fd_h = fd::hessian(&f, &mu.coords);
        let an = ec_hessian(&cfg, &cert, &mu).unwrap();
        assert!((fd_h - an).amax() < 1e-6);
        let grad = fd::gradient(&f, &mu.coords);
        assert!(grad.iter().all(|g| g.abs() < 1e-8));
    }
}
