//! Closed-form stability functions for the known families.
//!
//! Arguments are `(c, r)` for every entry except `F1`, which takes `(r1, r2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClosedForm {
    G1,
    G2,
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
}

impl ClosedForm {
    pub const ALL: [ClosedForm; 8] = [
        ClosedForm::G1,
        ClosedForm::G2,
        ClosedForm::F1,
        ClosedForm::F2,
        ClosedForm::F3,
        ClosedForm::F4,
        ClosedForm::F5,
        ClosedForm::F6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClosedForm::G1 => "g1",
            ClosedForm::G2 => "g2",
            ClosedForm::F1 => "F1",
            ClosedForm::F2 => "F2",
            ClosedForm::F3 => "F3",
            ClosedForm::F4 => "F4",
            ClosedForm::F5 => "F5",
            ClosedForm::F6 => "F6",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownClosedForm(name.to_string()))
    }

    pub fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            ClosedForm::G1 => g1(a, b),
            ClosedForm::G2 => g2(a, b),
            ClosedForm::F1 => f1(a, b),
            ClosedForm::F2 => f2(a, b),
            ClosedForm::F3 => f3(a, b),
            ClosedForm::F4 => f4(a, b),
            ClosedForm::F5 => f5(a, b),
            ClosedForm::F6 => f6(a, b),
        }
    }
}

/// Looks up `name` and evaluates it on two arguments.
pub fn closed_form(name: &str, args: &[f64]) -> Result<f64> {
    let f = ClosedForm::from_name(name)?;
    match args {
        [a, b] => Ok(f.eval(*a, *b)),
        _ => Err(Error::InvalidParameter(format!(
            "{} takes 2 arguments, got {}",
            f.name(),
            args.len()
        ))),
    }
}

pub fn g1(c: f64, r: f64) -> f64 {
    2.0 * c * (1.0 - r * r).powi(2)
}

pub fn g2(c: f64, r: f64) -> f64 {
    4.0 * r.powi(4) - c * (1.0 - r * r).powi(2)
}

pub fn f1(r1: f64, r2: f64) -> f64 {
    let s = r1 * r1 + r2 * r2;
    s * s + s * (r1 * r1 * r2 * r2 + 4.0 * r1 * r2 - 3.0) + 2.0 * (r1 - r2).powi(2)
}

pub fn f2(c: f64, r: f64) -> f64 {
    2.0 * r.powi(4) - c * (1.0 - r * r).powi(2)
}

pub fn f3(c: f64, r: f64) -> f64 {
    9.0 * r.powi(4) - 5.0 * c * (1.0 - r * r).powi(2)
}

pub fn f4(c: f64, r: f64) -> f64 {
    r.powi(4) + 2.0 * c * (1.0 - r * r)
}

pub fn f5(c: f64, r: f64) -> f64 {
    let q = 1.0 - r * r;
    9.0 * r.powi(8) + 2.0 * c * r.powi(4) * q * (7.0 * r * r + 2.0) - 25.0 * c * c * q.powi(3)
}

pub fn f6(c: f64, r: f64) -> f64 {
    2.0 * r.powi(4) - c * (1.0 - r * r) * (2.0 - 3.0 * r * r)
}

/// Leading principal minors of the projected Energy–Casimir Hessian for the
/// equilateral triangle (unit charges, `a0 = 1`), each multiplied by
/// `r⁴(1-r²)²`.
pub fn equilateral3_minors(c: f64, r: f64) -> [f64; 4] {
    let q2 = (1.0 - r * r).powi(2);
    let (ff2, ff3) = (f2(c, r), f3(c, r));
    [
        -ff3 / 3.0,
        -(4.0 * c / 3.0) * q2 * ff2,
        (c / 3.0) * q2 * ff2 * ff3,
        c * c * q2 * q2 * ff2 * ff2,
    ]
}

/// Unstable/stable boundary of the family-A pair: `r² = √c/(2+√c)`.
pub fn family_a_critical_radius(c: f64) -> f64 {
    (c.sqrt() / (2.0 + c.sqrt())).sqrt()
}
