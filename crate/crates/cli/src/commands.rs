use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use vortexlp::coalgebra::integrate_reduced;
use vortexlp::dynamics::{self, fmt17, Trajectory};
use vortexlp::equilibria::relative_equilibria;
use vortexlp::stability::{analyze, classify, sweep, EcCertificate};
use vortexlp::{momentum_map, validate_state, CoadjointPoint, EquilibriumReport, IntegrationError, VortexState};

use crate::config::Problem;

/// A failure after the configuration was accepted; exits with code 2.
#[derive(Debug)]
pub struct Abort(pub String);

impl std::fmt::Display for Abort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Abort {}

fn abort(msg: impl Into<String>) -> anyhow::Error {
    Abort(msg.into()).into()
}

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| abort(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn write(&self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let run = || -> std::io::Result<()> {
            let mut w = BufWriter::new(File::create(&path)?);
            body(&mut w)?;
            w.flush()
        };
        run().map_err(|e| abort(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
            writeln!(w)
        })
    }
}

fn base_summary(p: &Problem, command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!(command));
    m.insert("n".into(), json!(p.charges.n()));
    m.insert("charges".into(), json!(p.charges.charges()));
    m.insert("c".into(), json!(p.charges.coupling()));
    if let Some(s) = &p.scaled {
        m.insert("scaled_units".into(), json!(s));
    }
    m
}

/// Mean angular velocity of each vortex about the origin from the unwrapped
/// polar angle.
pub fn mean_angular_velocity(times: &[f64], states: &[VortexState]) -> Vec<f64> {
    let (Some(&t0), Some(&t1)) = (times.first(), times.last()) else {
        return Vec::new();
    };
    let n = states.first().map_or(0, VortexState::n);
    if t1 <= t0 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|k| {
            let mut total = 0.0;
            for pair in states.windows(2) {
                let d = (pair[1].positions[k] * pair[0].positions[k].conj()).arg();
                total += d;
            }
            total / (t1 - t0)
        })
        .collect()
}

fn rotation_period(omega: &[f64]) -> Option<f64> {
    omega.first().filter(|w| w.abs() > 0.0).map(|w| 2.0 * PI / w.abs())
}

pub fn simulate(p: &Problem, out: &Output) -> Result<()> {
    let z0 = p.initial_state()?;
    validate_state(&z0, 0.0, 0.0)?;
    let (traj, error) = match dynamics::integrate(&p.charges, &z0, p.t_span(), &p.raw.integrator) {
        Ok(t) => (t, None),
        Err(f) => (f.trajectory, Some(settings_check(f.error)?)),
    };
    out.write("trajectory.csv", |w| traj.write_csv(w))?;
    let omega = mean_angular_velocity(&traj.times, &traj.states);
    let mut s = base_summary(p, "simulate");
    s.insert("seed".into(), json!(p.seed));
    s.insert("initial_positions".into(), json!(z0.positions));
    s.insert("t_span".into(), json!(p.raw.t_span));
    s.insert("samples".into(), json!(traj.len()));
    s.insert("t_final".into(), json!(traj.times.last()));
    s.insert("completed".into(), json!(error.is_none()));
    s.insert("error".into(), json!(error.as_ref().map(ToString::to_string)));
    s.insert("energy_drift".into(), json!(traj.energy_drift()));
    s.insert("angular_impulse_drift".into(), json!(traj.angular_impulse_drift()));
    s.insert("max_rank_residual".into(), json!(max(&traj.rank_residual)));
    s.insert("mean_angular_velocity".into(), json!(omega));
    s.insert("rotation_period".into(), json!(rotation_period(&omega)));
    out.json("summary.json", &s)?;
    match error {
        Some(e) => Err(abort(format!("integration aborted: {e}"))),
        None => Ok(()),
    }
}

/// Bad integrator settings are a configuration problem, not an abort.
fn settings_check(e: IntegrationError) -> Result<IntegrationError> {
    match e {
        IntegrationError::InvalidSettings(msg) => bail!("invalid integrator settings: {msg}"),
        other => Ok(other),
    }
}

fn max(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(*x))
}

/// `‖μ(t) − J(z(t))‖∞` on the shared sample grid.
fn cointegration_deviation(traj: &Trajectory, points: &[CoadjointPoint], times: &[f64]) -> Vec<(f64, f64)> {
    traj.times
        .iter()
        .zip(&traj.states)
        .zip(times.iter().zip(points))
        .map(|((t, z), (_, mu))| (*t, momentum_map(z).max_abs_diff(mu)))
        .collect()
}

pub fn reduce(p: &Problem, out: &Output) -> Result<()> {
    let explicit = p.explicit_mu0()?;
    let z0 = match (&explicit, &p.raw.initial) {
        (Some(_), Some(_)) => bail!("`mu0` and `initial` are mutually exclusive"),
        (Some(_), None) => None,
        (None, _) => Some(p.initial_state()?),
    };
    if p.raw.cointegrate && z0.is_none() {
        bail!("cointegration needs vortex positions in `initial`");
    }
    let mu0 = match (&explicit, &z0) {
        (Some(mu), _) => mu.clone(),
        (None, Some(z)) => momentum_map(z),
        (None, None) => unreachable!(),
    };
    let mut settings = p.raw.integrator;
    if p.raw.cointegrate && settings.output_interval.is_none() {
        let (t0, t1) = p.t_span();
        settings.output_interval = Some(((t1 - t0) / 1000.0).max(f64::MIN_POSITIVE));
    }
    let (red, error) = match integrate_reduced(&p.charges, &mu0, p.t_span(), &settings) {
        Ok(t) => (t, None),
        Err(f) => (f.trajectory, Some(settings_check(f.error)?.to_string())),
    };
    out.write("reduced.csv", |w| red.write_csv(w))?;

    let mut s = base_summary(p, "reduce");
    s.insert("seed".into(), json!(p.seed));
    s.insert("mu0".into(), json!(mu0.coords));
    s.insert("t_span".into(), json!(p.raw.t_span));
    s.insert("samples".into(), json!(red.len()));
    s.insert("t_final".into(), json!(red.times.last()));
    s.insert("energy_drift".into(), json!(red.energy_drift()));
    s.insert("casimir_drift".into(), json!(red.casimir_drift()));
    s.insert("max_rank_residual".into(), json!(red.max_rank_residual()));

    let mut error = error;
    if let (true, Some(z0)) = (p.raw.cointegrate, &z0) {
        let full = match dynamics::integrate(&p.charges, z0, p.t_span(), &settings) {
            Ok(t) => t,
            Err(f) => {
                error.get_or_insert_with(|| format!("full system: {}", f.error));
                f.trajectory
            }
        };
        let dev = cointegration_deviation(&full, &red.points, &red.times);
        out.write("cointegration.csv", |w| {
            writeln!(w, "t,deviation")?;
            for (t, d) in &dev {
                writeln!(w, "{},{}", fmt17(*t), fmt17(*d))?;
            }
            Ok(())
        })?;
        s.insert("cointegration_deviation".into(), json!(dev.iter().fold(0.0f64, |m, d| m.max(d.1))));
        s.insert("cointegration_samples".into(), json!(dev.len()));
    }
    s.insert("completed".into(), json!(error.is_none()));
    s.insert("error".into(), json!(error));
    out.json("summary.json", &s)?;
    match error {
        Some(e) => Err(abort(format!("integration aborted: {e}"))),
        None => Ok(()),
    }
}

pub fn equilibria(p: &Problem, out: &Output) -> Result<()> {
    if p.raw.equilibria.is_empty() {
        bail!("missing or empty `equilibria` list");
    }
    let mut reports: Vec<EquilibriumReport> = Vec::new();
    for (k, spec) in p.raw.equilibria.iter().enumerate() {
        let found = relative_equilibria(&p.charges, spec)
            .with_context(|| format!("equilibrium spec {} ({:?})", k + 1, spec.kind))?;
        for eq in found {
            let mut report = classify(&p.charges, &eq.mu0)
                .with_context(|| format!("classifying equilibrium from spec {}", k + 1))?;
            report.z0 = Some(eq.z0);
            report.omega = Some(eq.omega);
            reports.push(report);
        }
    }
    out.json("equilibria.json", &reports)?;
    let mut s = base_summary(p, "equilibria");
    s.insert("count".into(), json!(reports.len()));
    s.insert("max_rhs_residual".into(), json!(reports.iter().fold(0.0f64, |m, r| m.max(r.rhs_residual))));
    s.insert("verdicts".into(), json!(reports.iter().map(|r| r.ec_verdict).collect::<Vec<_>>()));
    out.json("summary.json", &s)
}

#[derive(Serialize)]
struct StabilityRecord {
    #[serde(flatten)]
    report: EquilibriumReport,
    max_re_eig: f64,
    spectral_tolerance: f64,
    certificate: EcCertificate,
}

pub fn stability(p: &Problem, out: &Output) -> Result<()> {
    let target = p.raw.stability.clone().ok_or_else(|| anyhow!("missing `stability` section"))?;
    let points: Vec<(CoadjointPoint, Option<(VortexState, f64)>)> =
        match (&target.equilibrium, &target.mu0, &target.positions) {
            (Some(spec), None, None) => relative_equilibria(&p.charges, spec)?
                .into_iter()
                .map(|e| (e.mu0, Some((e.z0, e.omega))))
                .collect(),
            (None, Some(mu), None) => {
                let mu = CoadjointPoint::new(mu.clone())?;
                p.charges.check_dim(mu.n())?;
                vec![(mu, None)]
            }
            (None, None, Some(xy)) => {
                let z = VortexState::from_xy(xy);
                p.charges.check_dim(z.n())?;
                vec![(momentum_map(&z), None)]
            }
            _ => bail!("`stability` needs exactly one of `equilibrium`, `mu0` and `positions`"),
        };
    if points.is_empty() {
        bail!("stability target yields no equilibrium");
    }
    let mut records = Vec::new();
    for (mu, known) in points {
        let a = analyze(&p.charges, &mu)?;
        let mut report = a.report;
        if let Some((z, w)) = known {
            report.z0 = Some(z);
            report.omega = Some(w);
        }
        records.push(StabilityRecord {
            report,
            max_re_eig: a.spectral.max_re,
            spectral_tolerance: a.spectral.tolerance,
            certificate: a.certificate,
        });
    }
    out.json("stability.json", &records)?;
    let mut s = base_summary(p, "stability");
    s.insert("count".into(), json!(records.len()));
    s.insert("verdicts".into(), json!(records.iter().map(|r| r.report.ec_verdict).collect::<Vec<_>>()));
    out.json("summary.json", &s)
}

pub fn sweep_cmd(p: &Problem, out: &Output) -> Result<()> {
    let (family, grid) = p.sweep_grid()?;
    let result = sweep(&p.charges, family, &grid);
    out.write("sweep.csv", |w| result.write_csv(w))?;
    let mut counts = std::collections::BTreeMap::new();
    for cell in &result.cells {
        *counts.entry(cell.outcome.label().to_string()).or_insert(0usize) += 1;
    }
    let failed: Vec<String> = result
        .cells
        .iter()
        .filter_map(|c| match &c.outcome {
            vortexlp::stability::CellOutcome::Failed(msg) => {
                Some(format!("({}, {}): {msg}", c.param1, c.param2))
            }
            _ => None,
        })
        .collect();
    let (name1, name2) = family.axis_names();
    let mut s = base_summary(p, "sweep");
    s.insert("family".into(), json!(family));
    s.insert("param1".into(), json!(name1));
    s.insert("param2".into(), json!(name2));
    s.insert("cells".into(), json!(result.cells.len()));
    s.insert("outcomes".into(), json!(counts));
    s.insert("contour_mismatches".into(), json!(result.contour_mismatches().len()));
    s.insert("failures".into(), json!(failed));
    out.json("summary.json", &s)
}
