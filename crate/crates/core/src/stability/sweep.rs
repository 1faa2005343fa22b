use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::closed_form::ClosedForm;
use super::{analyze, Analysis};
use crate::equilibria::{equilateral3, equilateral_center4};
use crate::error::{Error, Result};
use crate::model::{momentum_map, ChargeConfig, CoadjointPoint, EcVerdict, VortexState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepFamily {
    /// `(c, r)` for the symmetric pair.
    PairA,
    /// `(r1, r2)` for the asymmetric pair; `c` is fixed by the pair curve.
    PairB,
    /// `(c, r)` for the equilateral triangle.
    Equilateral3,
    /// `(c, r)` for the centred equilateral triangle.
    EquilateralCenter4,
}

impl SweepFamily {
    pub fn closed_form(self) -> ClosedForm {
        match self {
            SweepFamily::PairA => ClosedForm::G2,
            SweepFamily::PairB => ClosedForm::F1,
            SweepFamily::Equilateral3 => ClosedForm::F2,
            SweepFamily::EquilateralCenter4 => ClosedForm::F6,
        }
    }

    pub fn axis_names(self) -> (&'static str, &'static str) {
        match self {
            SweepFamily::PairB => ("r1", "r2"),
            _ => ("c", "r"),
        }
    }
}

/// Inclusive uniform axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.count <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.value(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub param1: Axis,
    pub param2: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellOutcome {
    Classified(EcVerdict),
    Undefined(String),
    FamilyAOverlap,
    Failed(String),
}

impl CellOutcome {
    pub fn label(&self) -> &str {
        match self {
            CellOutcome::Classified(EcVerdict::CertifiedStable) => "CertifiedStable",
            CellOutcome::Classified(EcVerdict::LinearlyUnstable) => "LinearlyUnstable",
            CellOutcome::Classified(EcVerdict::Inconclusive) => "Inconclusive",
            CellOutcome::Undefined(_) => "undefined",
            CellOutcome::FamilyAOverlap => "family_A_overlap",
            CellOutcome::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub i: usize,
    pub j: usize,
    pub param1: f64,
    pub param2: f64,
    pub closed_form_value: Option<f64>,
    pub outcome: CellOutcome,
    pub min_proj_hess_eig: Option<f64>,
    pub max_re_eig: Option<f64>,
}

impl SweepCell {
    pub fn certified(&self) -> bool {
        self.outcome == CellOutcome::Classified(EcVerdict::CertifiedStable)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySweep {
    pub family: SweepFamily,
    pub grid: SweepGrid,
    /// Row-major: `param1` index outer, `param2` index inner.
    pub cells: Vec<SweepCell>,
}

fn unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} outside (0, 1)")))
    }
}

fn positive_c(c: f64) -> Result<()> {
    if c > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveCoupling(c))
    }
}

/// Builds the configuration and equilibrium for one cell.
fn cell_equilibrium(
    template: &ChargeConfig,
    family: SweepFamily,
    p1: f64,
    p2: f64,
) -> Result<(ChargeConfig, CoadjointPoint)> {
    match family {
        SweepFamily::PairA => {
            positive_c(p1)?;
            unit("r", p2)?;
            let cfg = template.with_coupling(p1)?;
            cfg.check_dim(2)?;
            if cfg.charges()[0] != cfg.charges()[1] {
                return Err(Error::NotRelativeEquilibrium("family A needs equal charges".into()));
            }
            let r2 = p2 * p2;
            Ok((cfg, CoadjointPoint::new(vec![r2, r2, -r2, 0.0])?))
        }
        SweepFamily::PairB => {
            unit("r1", p1)?;
            unit("r2", p2)?;
            template.check_dim(2)?;
            let (g1, g2) = (template.charges()[0], template.charges()[1]);
            let q = (1.0 - p1 * p1) * (1.0 - p2 * p2);
            let c = if g1 == g2 {
                p1 * p2 * (p1 + p2).powi(2) / q
            } else if g1 == -g2 {
                p1 * p2 * (2.0 - p1 * p1 - p2 * p2) / q
            } else {
                return Err(Error::NotRelativeEquilibrium(
                    "pair family B needs equal or opposite charges".into(),
                ));
            };
            let cfg = template.with_coupling(c)?;
            let z = VortexState::new(vec![Complex64::new(p1, 0.0), Complex64::new(-p2, 0.0)]);
            Ok((cfg, momentum_map(&z)))
        }
        SweepFamily::Equilateral3 => {
            positive_c(p1)?;
            let cfg = template.with_coupling(p1)?;
            let mu = equilateral3(&cfg, p2)?;
            Ok((cfg, mu))
        }
        SweepFamily::EquilateralCenter4 => {
            positive_c(p1)?;
            let cfg = template.with_coupling(p1)?;
            let mu = equilateral_center4(&cfg, p2)?;
            Ok((cfg, mu))
        }
    }
}

fn evaluate(template: &ChargeConfig, family: SweepFamily, i: usize, j: usize, p1: f64, p2: f64) -> SweepCell {
    let mut cell = SweepCell {
        i,
        j,
        param1: p1,
        param2: p2,
        closed_form_value: None,
        outcome: CellOutcome::FamilyAOverlap,
        min_proj_hess_eig: None,
        max_re_eig: None,
    };
    if family == SweepFamily::PairB && (p1 - p2).abs() <= 1e-12 * p1.abs().max(1.0) {
        return cell;
    }
    let equal_pair = template.n() == 2 && template.charges()[0] == template.charges()[1];
    if family != SweepFamily::PairB || equal_pair {
        cell.closed_form_value = Some(family.closed_form().eval(p1, p2));
    }
    let (cfg, mu) = match cell_equilibrium(template, family, p1, p2) {
        Ok(v) => v,
        Err(e) => {
            cell.closed_form_value = None;
            cell.outcome = CellOutcome::Undefined(e.to_string());
            return cell;
        }
    };
    match analyze(&cfg, &mu) {
        Ok(Analysis { report, spectral, certificate }) => {
            cell.outcome = CellOutcome::Classified(report.ec_verdict);
            cell.min_proj_hess_eig = Some(certificate.min_projected_eig());
            cell.max_re_eig = Some(spectral.max_re);
        }
        Err(e) => cell.outcome = CellOutcome::Failed(e.to_string()),
    }
    cell
}

/// Classifies every grid cell in parallel; the output order is fixed.
pub fn sweep(cfg_template: &ChargeConfig, family: SweepFamily, grid: &SweepGrid) -> StabilitySweep {
    let (n1, n2) = (grid.param1.count, grid.param2.count);
    let cells = (0..n1 * n2)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n2, k % n2);
            evaluate(cfg_template, family, i, j, grid.param1.value(i), grid.param2.value(j))
        })
        .collect();
    StabilitySweep { family, grid: *grid, cells }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), crate::dynamics::fmt17)
}

impl StabilitySweep {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell {
        &self.cells[i * self.grid.param2.count + j]
    }

    /// Header `param1,param2,closed_form_value,numeric_verdict,min_proj_hess_eig,max_re_eig`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "param1,param2,closed_form_value,numeric_verdict,min_proj_hess_eig,max_re_eig")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                crate::dynamics::fmt17(c.param1),
                crate::dynamics::fmt17(c.param2),
                fmt_opt(c.closed_form_value),
                c.outcome.label(),
                fmt_opt(c.min_proj_hess_eig),
                fmt_opt(c.max_re_eig),
            )?;
        }
        Ok(())
    }

    /// Cells where "certified stable" disagrees with "closed form < 0" and no
    /// neighbouring cell lies across the closed-form zero contour. Failed
    /// cells are always reported.
    pub fn contour_mismatches(&self) -> Vec<(usize, usize)> {
        let (n1, n2) = (self.grid.param1.count, self.grid.param2.count);
        let mut out = Vec::new();
        for c in &self.cells {
            if matches!(c.outcome, CellOutcome::Failed(_)) {
                out.push((c.i, c.j));
                continue;
            }
            let (Some(v), CellOutcome::Classified(_)) = (c.closed_form_value, &c.outcome) else {
                continue;
            };
            if c.certified() == (v < 0.0) {
                continue;
            }
            let near_contour = v == 0.0
                || (c.i.saturating_sub(1)..=(c.i + 1).min(n1 - 1)).any(|i| {
                    (c.j.saturating_sub(1)..=(c.j + 1).min(n2 - 1)).any(|j| {
                        self.cell(i, j)
                            .closed_form_value
                            .is_some_and(|w| (w < 0.0) != (v < 0.0))
                    })
                });
            if !near_contour {
                out.push((c.i, c.j));
            }
        }
        out
    }

    pub fn count(&self, pred: impl Fn(&SweepCell) -> bool) -> usize {
        self.cells.iter().filter(|c| pred(c)).count()
    }
}
