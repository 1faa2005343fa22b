//! Time integrators shared by the full and reduced systems.
//!
//! The adaptive scheme is the Dormand–Prince 5(4) pair with FSAL and a PI
//! step-size controller. The implicit midpoint rule runs at fixed step
//! `max_step` and solves its stage equation by fixed-point iteration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    #[default]
    AdaptiveExplicitRK45,
    ImplicitMidpoint,
}

/// Smallest relative tolerance a double-precision step can honour.
pub const MIN_REL_TOL: f64 = 10.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub scheme: Scheme,
    /// Record samples on this uniform grid. `None` records every accepted step.
    pub output_interval: Option<f64>,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            max_step: 0.1,
            scheme: Scheme::AdaptiveExplicitRK45,
            output_interval: None,
        }
    }
}

impl IntegratorSettings {
    pub fn with_tolerance(tol: f64) -> Self {
        Self { rel_tol: tol, abs_tol: tol, ..Self::default() }
    }

    pub fn sampled(mut self, interval: f64) -> Self {
        self.output_interval = Some(interval);
        self
    }

    fn validate(&self) -> Result<(), IntegrationError> {
        let tol_ok = |v: f64| v > 0.0 && v < 1.0;
        if !tol_ok(self.rel_tol) || !tol_ok(self.abs_tol) {
            return Err(IntegrationError::InvalidSettings("tolerances must lie in (0, 1)".into()));
        }
        if self.rel_tol < MIN_REL_TOL {
            return Err(IntegrationError::InvalidSettings(format!(
                "rel_tol must be at least {MIN_REL_TOL:e}"
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(IntegrationError::InvalidSettings("max_step must be positive".into()));
        }
        if let Some(dt) = self.output_interval {
            if !(dt > 0.0) {
                return Err(IntegrationError::InvalidSettings(
                    "output_interval must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("singularity approach at t = {t}: {reason}")]
    SingularityApproach { t: f64, reason: String },
    #[error("step underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("invalid integrator settings: {0}")]
    InvalidSettings(String),
}

/// Accepted samples `(t, y)`.
#[derive(Debug, Clone, Default)]
pub struct Samples {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Samples {
    fn push(&mut self, t: f64, y: &[f64]) {
        self.times.push(t);
        self.states.push(y.to_vec());
    }
}

/// Integration that stopped early: samples up to the last accepted step.
#[derive(Debug, Clone)]
pub struct Truncated {
    pub samples: Samples,
    pub error: IntegrationError,
}

/// Right-hand side `(t, y, dy)`; `Err` marks a point outside the domain.
pub type Rhs<'a> = dyn Fn(f64, &[f64], &mut [f64]) -> Result<(), String> + 'a;
/// Guard applied to every accepted state.
pub type Guard<'a> = dyn Fn(&[f64]) -> Result<(), String> + 'a;

const MAX_STEPS: usize = 50_000_000;

pub fn integrate(
    rhs: &Rhs<'_>,
    guard: &Guard<'_>,
    y0: &[f64],
    t_span: (f64, f64),
    settings: &IntegratorSettings,
) -> Result<Samples, Truncated> {
    let fail = |samples: Samples, error| Err(Truncated { samples, error });
    if let Err(e) = settings.validate() {
        return fail(Samples::default(), e);
    }
    let (t0, t_end) = t_span;
    if !(t0.is_finite() && t_end.is_finite()) || t_end < t0 {
        return fail(
            Samples::default(),
            IntegrationError::InvalidSettings("t_span must be finite and increasing".into()),
        );
    }
    if let Err(reason) = guard(y0) {
        return fail(Samples::default(), IntegrationError::SingularityApproach { t: t0, reason });
    }
    let mut samples = Samples::default();
    samples.push(t0, y0);
    if t_end == t0 {
        return Ok(samples);
    }
    let mut grid = OutputGrid::new(t0, t_end, settings.output_interval);
    let result = match settings.scheme {
        Scheme::AdaptiveExplicitRK45 => dopri5(rhs, guard, y0, t0, settings, &mut grid, &mut samples),
        Scheme::ImplicitMidpoint => midpoint(rhs, guard, y0, t0, settings, &mut grid, &mut samples),
    };
    match result {
        Ok(()) => Ok(samples),
        Err(error) => fail(samples, error),
    }
}

struct OutputGrid {
    t0: f64,
    t_end: f64,
    dt: Option<f64>,
    next_k: usize,
}

impl OutputGrid {
    fn new(t0: f64, t_end: f64, dt: Option<f64>) -> Self {
        Self { t0, t_end, dt, next_k: 1 }
    }

    /// Next time the integrator must land on exactly.
    fn next_stop(&self) -> f64 {
        match self.dt {
            Some(dt) => (self.t0 + self.next_k as f64 * dt).min(self.t_end),
            None => self.t_end,
        }
    }

    /// Called after landing on `t`; returns whether `t` is a sample time.
    fn record_at(&mut self, t: f64) -> bool {
        match self.dt {
            None => true,
            Some(_) => {
                if t >= self.next_stop() {
                    self.next_k += 1;
                    true
                } else {
                    false
                }
            }
        }
    }
}

fn error_norm(err: &[f64], y: &[f64], y_new: &[f64], s: &IntegratorSettings) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| {
            let sk = s.abs_tol + s.rel_tol * a.abs().max(b.abs());
            (e / sk).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn min_step(t: f64) -> f64 {
    1e-14 * t.abs().max(1.0)
}

fn initial_step(
    rhs: &Rhs<'_>,
    y: &[f64],
    f0: &[f64],
    t: f64,
    s: &IntegratorSettings,
) -> f64 {
    let zeros = vec![0.0; y.len()];
    let d0 = error_norm(y, &zeros, &zeros, s);
    let d1 = error_norm(f0, &zeros, &zeros, s);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(s.max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; y.len()];
    if rhs(t + h0, &y1, &mut f1).is_err() {
        return h0;
    }
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = error_norm(&diff, &zeros, &zeros, s) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(s.max_step)
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn dopri5(
    rhs: &Rhs<'_>,
    guard: &Guard<'_>,
    y0: &[f64],
    t0: f64,
    s: &IntegratorSettings,
    grid: &mut OutputGrid,
    samples: &mut Samples,
) -> Result<(), IntegrationError> {
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = vec![0.0; n];
    rhs(t, &y, &mut k1).map_err(|reason| IntegrationError::SingularityApproach { t, reason })?;
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut h = initial_step(rhs, &y, &k1, t, s);
    let mut err_old: f64 = 1e-4;
    let expo = 0.2 - BETA * 0.75;
    let mut last_reject = false;

    for _ in 0..MAX_STEPS {
        let stop = grid.next_stop();
        let landing = t + h >= stop - min_step(stop);
        if landing {
            h = stop - t;
        }
        if h < min_step(t) {
            return Err(IntegrationError::StepUnderflow { t, h });
        }

        macro_rules! stage_eval {
            ($out:expr, $c:expr, [$(($a:expr, $k:expr)),*]) => {{
                for i in 0..n {
                    stage[i] = y[i] + h * (0.0 $(+ $a * $k[i])*);
                }
                rhs(t + $c * h, &stage, &mut $out)
            }};
        }
        let trial = (|| -> Result<(), String> {
            stage_eval!(k2, C2, [(A21, k1)])?;
            stage_eval!(k3, C3, [(A31, k1), (A32, k2)])?;
            stage_eval!(k4, C4, [(A41, k1), (A42, k2), (A43, k3)])?;
            stage_eval!(k5, C5, [(A51, k1), (A52, k2), (A53, k3), (A54, k4)])?;
            stage_eval!(k6, 1.0, [(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)])?;
            for i in 0..n {
                y_new[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            rhs(t + h, &y_new, &mut k7)
        })();
        if let Err(reason) = trial {
            // Stage left the domain: shrink and retry.
            h *= 0.25;
            if h < min_step(t) {
                return Err(IntegrationError::SingularityApproach { t, reason });
            }
            last_reject = true;
            continue;
        }
        for i in 0..n {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&err, &y, &y_new, s);
        if !e.is_finite() {
            h *= 0.25;
            last_reject = true;
            continue;
        }
        let fac11 = e.powf(expo);
        if e <= 1.0 {
            if let Err(reason) = guard(&y_new) {
                return Err(IntegrationError::SingularityApproach { t: t + h, reason });
            }
            t = if landing { stop } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            if landing && grid.record_at(t) || !landing && grid.dt.is_none() {
                samples.push(t, &y);
            }
            if landing && t >= grid.t_end {
                return Ok(());
            }
            let mut fac = fac11 / err_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_reject {
                h_new = h_new.min(h);
            }
            err_old = e.max(1e-4);
            h = h_new.min(s.max_step);
            last_reject = false;
        } else {
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_reject = true;
        }
    }
    Err(IntegrationError::StepUnderflow { t, h })
}

fn midpoint(
    rhs: &Rhs<'_>,
    guard: &Guard<'_>,
    y0: &[f64],
    t0: f64,
    s: &IntegratorSettings,
    grid: &mut OutputGrid,
    samples: &mut Samples,
) -> Result<(), IntegrationError> {
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k = vec![0.0; n];
    let mut k_next = vec![0.0; n];
    let mut mid = vec![0.0; n];
    let mut h = s.max_step;

    for _ in 0..MAX_STEPS {
        let stop = grid.next_stop();
        let landing = t + h >= stop - min_step(stop);
        let step = if landing { stop - t } else { h };
        if step < min_step(t) {
            return Err(IntegrationError::StepUnderflow { t, h: step });
        }
        let solved = (|| -> Result<bool, String> {
            rhs(t, &y, &mut k)?;
            for _ in 0..100 {
                for i in 0..n {
                    mid[i] = y[i] + 0.5 * step * k[i];
                }
                rhs(t + 0.5 * step, &mid, &mut k_next)?;
                let delta = k
                    .iter()
                    .zip(&k_next)
                    .zip(&y)
                    .map(|((a, b), yi)| step * (a - b).abs() / (s.abs_tol + s.rel_tol * yi.abs()))
                    .fold(0.0, f64::max);
                std::mem::swap(&mut k, &mut k_next);
                if delta <= 1e-3 {
                    return Ok(true);
                }
            }
            Ok(false)
        })();
        match solved {
            Ok(true) => {
                let y_new: Vec<f64> = y.iter().zip(&k).map(|(a, b)| a + step * b).collect();
                if let Err(reason) = guard(&y_new) {
                    return Err(IntegrationError::SingularityApproach { t: t + step, reason });
                }
                y = y_new;
                t = if landing { stop } else { t + step };
                if landing && grid.record_at(t) || !landing && grid.dt.is_none() {
                    samples.push(t, &y);
                }
                if landing && t >= grid.t_end {
                    return Ok(());
                }
                h = (2.0 * h).min(s.max_step);
            }
            Ok(false) => {
                h = 0.5 * step;
            }
            Err(reason) => {
                h = 0.25 * step;
                if h < min_step(t) {
                    return Err(IntegrationError::SingularityApproach { t, reason });
                }
            }
        }
    }
    Err(IntegrationError::StepUnderflow { t, h })
}
