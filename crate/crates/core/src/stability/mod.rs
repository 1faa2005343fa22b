//! Stability of relative equilibria: linearization, the Energy–Casimir
//! certificate, closed-form criteria and parameter sweeps.

pub mod closed_form;
pub mod energy_casimir;
pub mod spectral;
pub mod sweep;

use std::collections::BTreeMap;

pub use closed_form::{closed_form, ClosedForm};
pub use energy_casimir::{
    ec_function, ec_hessian, energy_casimir_certificate, energy_casimir_with_a0, EcCertificate,
};
pub use spectral::{
    linearize_reduced, spectral_verdict, JacobianMethod, Linearization, SpectralAnalysis,
    SpectralVerdict,
};
pub use sweep::{sweep, Axis, CellOutcome, StabilitySweep, SweepCell, SweepFamily, SweepGrid};

use crate::coalgebra::rank_residuals;
use crate::equilibria::rotation_rate;
use crate::error::{Error, Result};
use crate::model::{state_from_rank_one, ChargeConfig, CoadjointPoint, EcVerdict, EquilibriumReport};

/// Reduced-field residual above which `classify` refuses the input.
pub const CLASSIFY_EQUILIBRIUM_TOL: f64 = 1e-8;

/// Everything computed by [`classify`].
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: EquilibriumReport,
    pub spectral: SpectralAnalysis,
    pub certificate: EcCertificate,
}

/// Spectral test first, then the Energy–Casimir certificate.
pub fn classify(cfg: &ChargeConfig, mu0: &CoadjointPoint) -> Result<EquilibriumReport> {
    analyze(cfg, mu0).map(|a| a.report)
}

pub fn analyze(cfg: &ChargeConfig, mu0: &CoadjointPoint) -> Result<Analysis> {
    let lin = linearize_reduced(cfg, mu0, JacobianMethod::Analytic)?;
    if lin.rhs_residual > CLASSIFY_EQUILIBRIUM_TOL {
        return Err(Error::NotRelativeEquilibrium(format!(
            "reduced field residual {:e}",
            lin.rhs_residual
        )));
    }
    let spectral = spectral_verdict(&lin.matrix, None)?;
    let certificate = energy_casimir_certificate(cfg, mu0)?;
    let ec_verdict = if spectral.verdict == SpectralVerdict::Unstable {
        EcVerdict::LinearlyUnstable
    } else if certificate.verdict {
        EcVerdict::CertifiedStable
    } else {
        EcVerdict::Inconclusive
    };

    let on_image = rank_residuals(mu0).norm_inf() <= 1e-10 * mu0.norm_inf().max(1.0);
    let z0 = on_image.then(|| state_from_rank_one(mu0));
    let omega = z0.as_ref().and_then(|z| rotation_rate(cfg, z).ok());
    let report = EquilibriumReport {
        mu0: mu0.clone(),
        z0,
        omega,
        rhs_residual: lin.rhs_residual,
        spectrum: spectral.eigenvalues.clone(),
        ec_verdict,
        closed_form_values: closed_form_values(cfg, mu0),
    };
    Ok(Analysis { report, spectral, certificate })
}

/// Closed-form criteria for `μ0` when it belongs to a known family.
pub fn closed_form_values(cfg: &ChargeConfig, mu0: &CoadjointPoint) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let n = mu0.n();
    if rank_residuals(mu0).norm_inf() > 1e-10 {
        return out;
    }
    let z = state_from_rank_one(mu0).positions;
    let c = cfg.coupling();
    let g = cfg.charges();
    let tol = 1e-9;
    let mut put = |forms: &[ClosedForm], a: f64, b: f64| {
        for f in forms {
            out.insert(f.name().to_string(), f.eval(a, b));
        }
    };
    let equilateral = |pts: &[num_complex::Complex64]| {
        let r = pts[0].norm();
        let side = (pts[0] - pts[1]).norm();
        pts.iter().all(|p| (p.norm() - r).abs() < tol)
            && (1..3).all(|k| ((pts[k] - pts[(k + 1) % 3]).norm() - side).abs() < tol)
            && (side - 3f64.sqrt() * r).abs() < tol
    };
    match n {
        2 if g[0] == g[1] => {
            let (r1, r2) = (z[0].norm(), z[1].norm());
            let opposite = (z[0] * z[1].conj()).re < 0.0 && (z[0] * z[1].conj()).im.abs() < tol;
            if opposite && (r1 - r2).abs() < tol {
                put(&[ClosedForm::G1, ClosedForm::G2], c, r1);
            } else if opposite {
                put(&[ClosedForm::F1], r1, r2);
            }
        }
        3 if g[0] == g[1] && g[1] == g[2] && equilateral(&z) => {
            put(&[ClosedForm::F2, ClosedForm::F3], c, z[0].norm());
        }
        4 if g[0] == g[1] && g[1] == g[2] && z[3].norm() < tol && equilateral(&z[..3]) => {
            put(&[ClosedForm::F4, ClosedForm::F5, ClosedForm::F6], c, z[0].norm());
        }
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{equilateral3, equilateral_center4};
    use crate::stability::closed_form::{f2, family_a_critical_radius};

    fn pair_a(c: f64, r: f64) -> (ChargeConfig, CoadjointPoint) {
        (
            ChargeConfig::uniform(2, c).unwrap(),
            CoadjointPoint::new(vec![r * r, r * r, -r * r, 0.0]).unwrap(),
        )
    }

    #[test]
    fn family_a_across_boundary() {
        let rs = family_a_critical_radius(0.1);
        let (cfg, below) = pair_a(0.1, rs - 0.01);
        let rep = classify(&cfg, &below).unwrap();
        assert_eq!(rep.ec_verdict, EcVerdict::CertifiedStable);
        assert!(rep.closed_form_values["g2"] < 0.0);
        let (cfg, above) = pair_a(0.1, rs + 0.01);
        assert_eq!(classify(&cfg, &above).unwrap().ec_verdict, EcVerdict::LinearlyUnstable);
    }

    #[test]
    fn equilateral3_verdicts() {
        let cfg = ChargeConfig::uniform(3, 0.2).unwrap();
        let stable = equilateral3(&cfg, 0.3).unwrap();
        assert!(f2(0.2, 0.3) < 0.0);
        let rep = classify(&cfg, &stable).unwrap();
        assert_eq!(rep.ec_verdict, EcVerdict::CertifiedStable);
        assert!(rep.closed_form_values.contains_key("F2"));
        let unstable = equilateral3(&cfg, 0.5).unwrap();
        let a = analyze(&cfg, &unstable).unwrap();
        assert!(!a.certificate.verdict);
        assert_eq!(a.spectral.verdict, SpectralVerdict::Unstable);
    }

    #[test]
    fn center4_reports_f_values() {
        let cfg = ChargeConfig::uniform(4, 0.1).unwrap();
        let mu = equilateral_center4(&cfg, 0.5).unwrap();
        let rep = classify(&cfg, &mu).unwrap();
        assert!(rep.closed_form_values.contains_key("F6"));
        assert!(rep.z0.is_some() && rep.omega.is_some());
    }

    #[test]
    fn non_equilibrium_is_rejected() {
        let cfg = ChargeConfig::uniform(2, 0.1).unwrap();
        let mu = CoadjointPoint::new(vec![0.25, 0.16, 0.2, 0.0]).unwrap();
        assert!(matches!(classify(&cfg, &mu), Err(Error::NotRelativeEquilibrium(_))));
    }
}
