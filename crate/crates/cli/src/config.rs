use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use vortexlp::equilibria::{relative_equilibria, RelEqSpec};
use vortexlp::stability::{Axis, SweepFamily, SweepGrid};
use vortexlp::{
    physical_to_scaled, ChargeConfig, CoadjointPoint, Complex64, IntegratorSettings,
    PhysicalParams, ScaledUnits, VortexState,
};

use crate::presets;

/// Where the initial vortex positions come from.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default)]
    pub positions: Option<Vec<[f64; 2]>>,
    /// Start from the first relative equilibrium of this spec.
    #[serde(default)]
    pub equilibrium: Option<RelEqSpec>,
    /// Each coordinate is shifted by a uniform draw from `[-a, a]`.
    #[serde(default)]
    pub perturbation: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityTarget {
    #[serde(default)]
    pub equilibrium: Option<RelEqSpec>,
    #[serde(default)]
    pub mu0: Option<Vec<f64>>,
    #[serde(default)]
    pub positions: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub family: SweepFamily,
    pub param1: Axis,
    pub param2: Axis,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub charges: Vec<i64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub physical: Option<PhysicalParams>,
    #[serde(default)]
    pub initial: Option<InitialState>,
    /// Starting point for `reduce` off the image of the momentum map.
    #[serde(default)]
    pub mu0: Option<Vec<f64>>,
    #[serde(default = "default_t_span")]
    pub t_span: [f64; 2],
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub cointegrate: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub equilibria: Vec<RelEqSpec>,
    #[serde(default)]
    pub stability: Option<StabilityTarget>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_t_span() -> [f64; 2] {
    [0.0, 10.0]
}

/// A validated configuration ready to run.
#[derive(Debug, Clone)]
pub struct Problem {
    pub raw: RunConfig,
    pub charges: ChargeConfig,
    pub scaled: Option<ScaledUnits>,
    pub seed: u64,
}

pub fn parse(text: &str, origin: &str) -> Result<RunConfig> {
    serde_json::from_str(text).with_context(|| format!("cannot parse config {origin}"))
}

pub fn load(config: Option<&Path>, preset: Option<&str>) -> Result<RunConfig> {
    match (config, preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            parse(&text, &path.display().to_string())
        }
        (None, Some(name)) => {
            let text = presets::get(name).ok_or_else(|| {
                anyhow!("unknown preset `{name}`; available: {}", presets::names().join(", "))
            })?;
            parse(text, &format!("preset `{name}`"))
        }
        (Some(_), Some(_)) => bail!("--config and --preset are mutually exclusive"),
        (None, None) => bail!("one of --config or --preset is required"),
    }
}

impl Problem {
    pub fn new(raw: RunConfig, seed_override: Option<u64>) -> Result<Self> {
        let (c, scaled) = match (raw.c, raw.physical) {
            (Some(c), None) => (c, None),
            (None, Some(p)) => {
                let s = physical_to_scaled(&p)?;
                (s.coupling_c, Some(s))
            }
            _ => bail!("exactly one of `c` and `physical` must be given"),
        };
        let charges = ChargeConfig::new(raw.charges.clone(), c)?;
        let seed = seed_override.or(raw.seed).unwrap_or(0);
        Ok(Self { raw, charges, scaled, seed })
    }

    pub fn t_span(&self) -> (f64, f64) {
        (self.raw.t_span[0], self.raw.t_span[1])
    }

    /// Initial positions with the configured perturbation applied.
    pub fn initial_state(&self) -> Result<VortexState> {
        let init = self.raw.initial.as_ref().ok_or_else(|| anyhow!("missing `initial` section"))?;
        let base = match (&init.positions, &init.equilibrium) {
            (Some(p), None) => VortexState::from_xy(p),
            (None, Some(spec)) => relative_equilibria(&self.charges, spec)?
                .into_iter()
                .next()
                .map(|e| e.z0)
                .ok_or_else(|| anyhow!("initial equilibrium spec yields no equilibrium"))?,
            _ => bail!("`initial` needs exactly one of `positions` and `equilibrium`"),
        };
        self.charges.check_dim(base.n())?;
        let a = init.perturbation;
        if !(a >= 0.0 && a.is_finite()) {
            bail!("perturbation must be a nonnegative number, got {a}");
        }
        if a == 0.0 {
            return Ok(base);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let positions = base
            .positions
            .iter()
            .map(|z| z + Complex64::new(rng.random_range(-a..=a), rng.random_range(-a..=a)))
            .collect();
        Ok(VortexState::new(positions))
    }

    pub fn explicit_mu0(&self) -> Result<Option<CoadjointPoint>> {
        match &self.raw.mu0 {
            Some(v) => {
                let mu = CoadjointPoint::new(v.clone())?;
                self.charges.check_dim(mu.n())?;
                Ok(Some(mu))
            }
            None => Ok(None),
        }
    }

    pub fn sweep_grid(&self) -> Result<(SweepFamily, SweepGrid)> {
        let s = self.raw.sweep.as_ref().ok_or_else(|| anyhow!("missing `sweep` section"))?;
        for (name, axis) in [("param1", s.param1), ("param2", s.param2)] {
            if axis.count == 0 || !(axis.min <= axis.max) {
                bail!("sweep axis {name} needs count > 0 and min <= max");
            }
        }
        Ok((s.family, SweepGrid { param1: s.param1, param2: s.param2 }))
    }
}
