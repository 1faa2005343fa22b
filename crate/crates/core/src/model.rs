//! Core value types: charges, vortex positions, points of the coadjoint
//! space, and the conversion from trap parameters to the scaled model.
//!
//! A point `μ` of the dual algebra is stored as `N²` real coordinates. The
//! Hermitian matrix `m = -iμ` has diagonal `μ_1..μ_N` (stored first) and
//! strictly upper entries `μ_ij`, stored as `(Re μ_ij, Im μ_ij)` pairs in
//! lexicographic `(i, j)` order.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StateViolation};

/// Default guard distances used by [`validate_state`] during integration.
pub const DEFAULT_BOUNDARY_EPS: f64 = 1e-9;
pub const DEFAULT_COLLISION_EPS: f64 = 1e-9;

const HERMITIAN_TOL: f64 = 1e-12;

/// Topological charges and the interaction coupling `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeConfig {
    charges: Vec<i64>,
    coupling_c: f64,
}

impl ChargeConfig {
    pub fn new(charges: Vec<i64>, coupling_c: f64) -> Result<Self> {
        if let Some(index) = charges.iter().position(|&g| g == 0) {
            return Err(Error::ZeroCharge { index: index + 1 });
        }
        if !(coupling_c > 0.0) || !coupling_c.is_finite() {
            return Err(Error::NonPositiveCoupling(coupling_c));
        }
        Ok(Self { charges, coupling_c })
    }

    /// `n` vortices of unit positive charge.
    pub fn uniform(n: usize, coupling_c: f64) -> Result<Self> {
        Self::new(vec![1; n], coupling_c)
    }

    pub fn n(&self) -> usize {
        self.charges.len()
    }

    pub fn charges(&self) -> &[i64] {
        &self.charges
    }

    pub fn charge(&self, i: usize) -> f64 {
        self.charges[i] as f64
    }

    pub fn coupling(&self) -> f64 {
        self.coupling_c
    }

    pub fn with_coupling(&self, coupling_c: f64) -> Result<Self> {
        Self::new(self.charges.clone(), coupling_c)
    }

    /// `D_Γ = diag(Γ_1, ..., Γ_N)`.
    pub fn d_gamma(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n(), self.n(), |i, j| {
            if i == j {
                Complex64::new(self.charge(i), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn d_gamma_inv(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n(), self.n(), |i, j| {
            if i == j {
                Complex64::new(1.0 / self.charge(i), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: n });
        }
        Ok(())
    }
}

/// Dimensional trap parameters of the condensate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Chemical potential.
    pub mu: f64,
    /// Transversal-to-longitudinal trap frequency ratio.
    pub omega_tr: f64,
    /// Empirical vortex interaction strength.
    pub b: f64,
}

/// Result of [`physical_to_scaled`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledUnits {
    pub coupling_c: f64,
    /// Precession frequency at the trap centre; time unit of the scaled model.
    pub omega_pr0: f64,
    /// Thomas–Fermi radius; length unit of the scaled model.
    pub r_tf: f64,
}

/// Rescales trap parameters into the unit-disc model.
pub fn physical_to_scaled(p: &PhysicalParams) -> Result<ScaledUnits> {
    for (name, value) in [("mu", p.mu), ("omega_tr", p.omega_tr), ("b", p.b)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveParameter { name, value });
        }
    }
    let arg = 2.0 * 2f64.sqrt() * PI * p.mu / p.omega_tr;
    if arg <= 1.0 {
        return Err(Error::LogArgument(arg));
    }
    let log = arg.ln();
    let r_tf = (2.0 * p.mu).sqrt() / p.omega_tr;
    Ok(ScaledUnits {
        coupling_c: p.b / (2.0 * log),
        omega_pr0: log / (r_tf * r_tf),
        r_tf,
    })
}

/// Vortex positions `z_i = x_i + i y_i` in Thomas–Fermi units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexState {
    pub positions: Vec<Complex64>,
}

impl VortexState {
    pub fn new(positions: Vec<Complex64>) -> Self {
        Self { positions }
    }

    pub fn from_xy(xy: &[[f64; 2]]) -> Self {
        Self::new(xy.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// Real layout `(x_1..x_N, y_1..y_N)`.
    pub fn to_real(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.positions.iter().map(|z| z.re).collect();
        out.extend(self.positions.iter().map(|z| z.im));
        out
    }

    pub fn from_real(v: &[f64]) -> Self {
        let n = v.len() / 2;
        Self::new((0..n).map(|i| Complex64::new(v[i], v[n + i])).collect())
    }

    /// Global rotation `e^{iθ} z`.
    pub fn rotated(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self::new(self.positions.iter().map(|z| phase * z).collect())
    }

    pub fn max_abs_diff(&self, other: &VortexState) -> f64 {
        self.positions
            .iter()
            .zip(&other.positions)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Checks the unit-disc and no-collision guards. Indices in the diagnostic
/// are 1-based.
pub fn validate_state(
    z: &VortexState,
    eps_bound: f64,
    eps_coll: f64,
) -> std::result::Result<(), StateViolation> {
    for (i, zi) in z.positions.iter().enumerate() {
        let radius = zi.norm();
        if !(radius < 1.0 - eps_bound) {
            return Err(StateViolation::Boundary { index: i + 1, radius });
        }
    }
    for i in 0..z.n() {
        for j in i + 1..z.n() {
            let distance = (z.positions[i] - z.positions[j]).norm();
            if !(distance > eps_coll) {
                return Err(StateViolation::Collision { first: i + 1, second: j + 1, distance });
            }
        }
    }
    Ok(())
}

/// Strictly upper-triangular index pairs in lexicographic order.
pub fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Position of `Re μ_ij` in the coordinate vector (`Im μ_ij` follows it).
pub fn offdiag_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    // pairs before row i: sum_{k<i} (n-1-k)
    let before = i * (2 * n - i - 1) / 2;
    n + 2 * (before + (j - i - 1))
}

/// A point of `u(N)_Γ*` in real coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoadjointPoint {
    pub coords: Vec<f64>,
}

impl CoadjointPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        dim_from_len(coords.len())?;
        Ok(Self { coords })
    }

    pub fn zeros(n: usize) -> Self {
        Self { coords: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        // Constructors guarantee a perfect square.
        (self.coords.len() as f64).sqrt().round() as usize
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.coords[i]
    }

    /// `μ_ij` for `i < j`.
    pub fn offdiag(&self, i: usize, j: usize) -> Complex64 {
        let k = offdiag_index(self.n(), i, j);
        Complex64::new(self.coords[k], self.coords[k + 1])
    }

    /// Entry `(p, q)` of the Hermitian matrix `-iμ`.
    pub fn entry(&self, p: usize, q: usize) -> Complex64 {
        match p.cmp(&q) {
            std::cmp::Ordering::Equal => Complex64::new(self.coords[p], 0.0),
            std::cmp::Ordering::Less => self.offdiag(p, q),
            std::cmp::Ordering::Greater => self.offdiag(q, p).conj(),
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.coords.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &CoadjointPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

fn dim_from_len(len: usize) -> Result<usize> {
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len || n == 0 {
        return Err(Error::NotSquareLength(len));
    }
    Ok(n)
}

/// Packs a Hermitian matrix `H = -iμ` into coordinates.
pub fn mu_pack(h: &DMatrix<Complex64>) -> Result<CoadjointPoint> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: h.ncols() });
    }
    let scale = h.iter().fold(1.0f64, |m, v| m.max(v.norm()));
    let mut dev = 0.0f64;
    for p in 0..n {
        for q in 0..n {
            dev = dev.max((h[(p, q)] - h[(q, p)].conj()).norm());
        }
    }
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    Ok(pack_unchecked(h))
}

pub(crate) fn pack_unchecked(h: &DMatrix<Complex64>) -> CoadjointPoint {
    let n = h.nrows();
    let mut coords = Vec::with_capacity(n * n);
    coords.extend((0..n).map(|i| h[(i, i)].re));
    for (i, j) in upper_pairs(n) {
        coords.push(h[(i, j)].re);
        coords.push(h[(i, j)].im);
    }
    CoadjointPoint { coords }
}

/// Unpacks coordinates into the Hermitian matrix `-iμ`.
pub fn mu_unpack(mu: &CoadjointPoint) -> Result<DMatrix<Complex64>> {
    let n = dim_from_len(mu.coords.len())?;
    Ok(DMatrix::from_fn(n, n, |p, q| mu.entry(p, q)))
}

/// `J(z) = i z z*`, returned in coordinates (`μ_i = |z_i|²`, `μ_ij = z_i z_j*`).
pub fn momentum_map(z: &VortexState) -> CoadjointPoint {
    let n = z.n();
    let zs = &z.positions;
    let mut coords = Vec::with_capacity(n * n);
    coords.extend(zs.iter().map(|v| v.norm_sqr()));
    for (i, j) in upper_pairs(n) {
        let m = zs[i] * zs[j].conj();
        coords.push(m.re);
        coords.push(m.im);
    }
    CoadjointPoint { coords }
}

/// Recovers positions from a rank-one `μ`, up to the global phase. The phase
/// is fixed by making the vortex of largest modulus real and positive.
pub fn state_from_rank_one(mu: &CoadjointPoint) -> VortexState {
    let n = mu.n();
    let k = (0..n)
        .max_by(|&a, &b| mu.diag(a).total_cmp(&mu.diag(b)))
        .unwrap_or(0);
    let pivot = mu.diag(k).max(0.0).sqrt();
    if pivot == 0.0 {
        return VortexState::new(vec![Complex64::new(0.0, 0.0); n]);
    }
    VortexState::new((0..n).map(|j| mu.entry(j, k) / pivot).collect())
}

/// Outcome of the combined stability analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EcVerdict {
    CertifiedStable,
    LinearlyUnstable,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub mu0: CoadjointPoint,
    pub z0: Option<VortexState>,
    pub omega: Option<f64>,
    pub rhs_residual: f64,
    pub spectrum: Vec<Complex64>,
    pub ec_verdict: EcVerdict,
    pub closed_form_values: BTreeMap<String, f64>,
}
