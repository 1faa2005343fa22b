//! The Lie algebra `u(N)_Γ` (skew-Hermitian matrices with the bracket
//! `[ξ,η]_Γ = ξ D_Γ⁻¹ η - η D_Γ⁻¹ ξ`) and the reduced dynamics on its dual.
//!
//! Points of the dual are identified with the algebra through
//! `⟨ξ,η⟩ = ½ tr(ξ*η)` and stored as [`CoadjointPoint`] coordinates.
//!
//! Sign convention: the momentum map `J(z) = i z z*` is a Poisson map for
//! the bracket `{f,g}_Γ(μ) = -⟨μ, [δf/δμ, δg/δμ]_Γ⟩`, so collective
//! dynamics reads `μ̇ = ad*_{δh/δμ} μ`. Fixed points, linear spectra and the
//! Energy–Casimir conditions do not depend on this sign.

use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::{fmt17, max_drift};
use crate::error::{Error, Result};
use crate::fd;
use crate::model::{
    offdiag_index, pack_unchecked, upper_pairs, ChargeConfig, CoadjointPoint, DEFAULT_BOUNDARY_EPS,
    DEFAULT_COLLISION_EPS,
};
use crate::ode::{self, IntegrationError, IntegratorSettings};

const SKEW_TOL: f64 = 1e-12;

fn cz(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// An element `ξ` of `u(N)_Γ`, i.e. a skew-Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    pub matrix: DMatrix<Complex64>,
}

impl AlgebraElement {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.ncols() });
        }
        let scale = matrix.iter().fold(1.0f64, |m, v| m.max(v.norm()));
        let dev = (&matrix + matrix.adjoint()).iter().fold(0.0f64, |m, v| m.max(v.norm()));
        if dev > SKEW_TOL * scale {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { matrix })
    }

    /// `i·H` for a Hermitian `H`.
    pub fn from_hermitian(h: &DMatrix<Complex64>) -> Result<Self> {
        Self::new(h * Complex64::i())
    }

    /// The element `μ = i·m` represented by a dual point.
    pub fn from_point(mu: &CoadjointPoint) -> Self {
        let n = mu.n();
        Self { matrix: DMatrix::from_fn(n, n, |p, q| Complex64::i() * mu.entry(p, q)) }
    }

    /// Inverse of [`AlgebraElement::from_point`].
    pub fn to_point(&self) -> CoadjointPoint {
        pack_unchecked(&(&self.matrix * -Complex64::i()))
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.matrix.iter().all(|v| v.norm() <= tol)
    }
}

fn check_pair(cfg: &ChargeConfig, a: usize, b: usize) -> Result<()> {
    cfg.check_dim(a)?;
    cfg.check_dim(b)
}

/// `[ξ,η]_Γ = ξ D_Γ⁻¹ η - η D_Γ⁻¹ ξ`.
pub fn bracket_gamma(
    cfg: &ChargeConfig,
    xi: &AlgebraElement,
    eta: &AlgebraElement,
) -> Result<AlgebraElement> {
    check_pair(cfg, xi.n(), eta.n())?;
    let dinv = cfg.d_gamma_inv();
    let m = &xi.matrix * &dinv * &eta.matrix - &eta.matrix * &dinv * &xi.matrix;
    Ok(AlgebraElement { matrix: m })
}

/// `⟨ξ,η⟩ = ½ tr(ξ*η)`.
pub fn inner_product(xi: &AlgebraElement, eta: &AlgebraElement) -> f64 {
    let n = xi.n();
    let mut tr = Complex64::new(0.0, 0.0);
    for p in 0..n {
        for q in 0..n {
            tr += xi.matrix[(q, p)].conj() * eta.matrix[(q, p)];
        }
    }
    0.5 * tr.re
}

/// `d_ij = μ_i + μ_j - 2 Re μ_ij`, equal to `|z_i - z_j|²` on the image of `J`.
fn pair_distance(mu: &CoadjointPoint, i: usize, j: usize) -> f64 {
    mu.diag(i) + mu.diag(j) - 2.0 * mu.offdiag(i, j).re
}

fn check_domain(cfg: &ChargeConfig, mu: &CoadjointPoint) -> Result<()> {
    check_domain_with(cfg, mu, 0.0, 0.0)
}

/// Requires `1 - μ_i > min_gap` and pair distances squared above `min_dist2`.
fn check_domain_with(cfg: &ChargeConfig, mu: &CoadjointPoint, min_gap: f64, min_dist2: f64) -> Result<()> {
    let n = mu.n();
    cfg.check_dim(n)?;
    for i in 0..n {
        let v = 1.0 - mu.diag(i);
        if !(v > min_gap) {
            return Err(Error::Domain(format!("1 - mu_{} = {v:e} is not positive", i + 1)));
        }
    }
    for (i, j) in upper_pairs(n) {
        let d = pair_distance(mu, i, j);
        if !(d > min_dist2) {
            return Err(Error::Domain(format!(
                "mu_{a} + mu_{b} - 2 Re mu_{a}{b} = {d:e} is not positive",
                a = i + 1,
                b = j + 1
            )));
        }
    }
    Ok(())
}

/// The reduced Hamiltonian `h` with `h ∘ J = H`.
pub fn reduced_hamiltonian(cfg: &ChargeConfig, mu: &CoadjointPoint) -> Result<f64> {
    check_domain(cfg, mu)?;
    Ok(reduced_hamiltonian_unchecked(cfg, mu))
}

fn reduced_hamiltonian_unchecked(cfg: &ChargeConfig, mu: &CoadjointPoint) -> f64 {
    let n = mu.n();
    let mut self_part = 0.0;
    for i in 0..n {
        let g = cfg.charge(i);
        self_part += g * g * (1.0 - mu.diag(i)).ln();
    }
    let mut pair_part = 0.0;
    for (i, j) in upper_pairs(n) {
        pair_part += cfg.charge(i) * cfg.charge(j) * pair_distance(mu, i, j).ln();
    }
    0.5 * (self_part - cfg.coupling() * pair_part)
}

/// `∂h/∂μ_k` in coordinates.
///
/// `∂h/∂μ_i = -½Γ_i²/(1-μ_i) - (c/2) Σ_{j≠i} Γ_iΓ_j/d_ij`,
/// `∂h/∂Re μ_ij = cΓ_iΓ_j/d_ij`, `∂h/∂Im μ_ij = 0`.
pub fn reduced_hamiltonian_gradient(cfg: &ChargeConfig, mu: &CoadjointPoint) -> Result<Vec<f64>> {
    check_domain(cfg, mu)?;
    let n = mu.n();
    let mut g = vec![0.0; n * n];
    for (i, gi) in g.iter_mut().enumerate().take(n) {
        let q = cfg.charge(i);
        *gi = -0.5 * q * q / (1.0 - mu.diag(i));
    }
    for (i, j) in upper_pairs(n) {
        let w = -0.5 * cfg.coupling() * cfg.charge(i) * cfg.charge(j) / pair_distance(mu, i, j);
        g[i] += w;
        g[j] += w;
        g[offdiag_index(n, i, j)] -= 2.0 * w;
    }
    Ok(g)
}

/// `D²h` in coordinates.
pub fn reduced_hamiltonian_hessian(
    cfg: &ChargeConfig,
    mu: &CoadjointPoint,
) -> Result<DMatrix<f64>> {
    check_domain(cfg, mu)?;
    let n = mu.n();
    let mut hess = DMatrix::zeros(n * n, n * n);
    for i in 0..n {
        let gi = cfg.charge(i);
        hess[(i, i)] = -0.5 * gi * gi / (1.0 - mu.diag(i)).powi(2);
    }
    for (i, j) in upper_pairs(n) {
        // -(c/2)ΓiΓj ln d with ∇d = e_i + e_j - 2 e_Re(ij)
        let d = pair_distance(mu, i, j);
        let w = 0.5 * cfg.coupling() * cfg.charge(i) * cfg.charge(j) / (d * d);
        let k = offdiag_index(n, i, j);
        let grad = [(i, 1.0), (j, 1.0), (k, -2.0)];
        for &(a, ga) in &grad {
            for &(b, gb) in &grad {
                hess[(a, b)] += w * ga * gb;
            }
        }
    }
    Ok(hess)
}

/// `δf/δμ = i M` from the coordinate gradient: `M_ii = 2∂f/∂μ_i`,
/// `M_ij = ∂f/∂Re μ_ij + i ∂f/∂Im μ_ij`.
pub fn gradient_to_algebra(grad: &[f64], n: usize) -> AlgebraElement {
    let m = gradient_to_hermitian(grad, n);
    AlgebraElement { matrix: m * Complex64::i() }
}

fn gradient_to_hermitian(grad: &[f64], n: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(n, n, cz(0.0));
    for i in 0..n {
        m[(i, i)] = cz(2.0 * grad[i]);
    }
    for (i, j) in upper_pairs(n) {
        let k = offdiag_index(n, i, j);
        m[(i, j)] = Complex64::new(grad[k], grad[k + 1]);
        m[(j, i)] = Complex64::new(grad[k], -grad[k + 1]);
    }
    m
}

/// Variational derivative of a scalar field on coordinates, by central
/// differences.
pub fn variational_derivative(f: &dyn Fn(&[f64]) -> f64, mu: &CoadjointPoint) -> AlgebraElement {
    gradient_to_algebra(&fd::gradient(f, &mu.coords), mu.n())
}

/// `C(μ) = tr(-i D_Γ μ) = Σ Γ_i μ_i`.
pub fn casimir(cfg: &ChargeConfig, mu: &CoadjointPoint) -> f64 {
    (0..mu.n()).map(|i| cfg.charge(i) * mu.diag(i)).sum()
}

pub fn casimir_gradient(cfg: &ChargeConfig) -> Vec<f64> {
    let n = cfg.n();
    let mut g = vec![0.0; n * n];
    for (i, gi) in g.iter_mut().enumerate().take(n) {
        *gi = cfg.charge(i);
    }
    g
}

/// The `(N-1)²` rank-one residuals: `R_1..R_{N-1}` then
/// `(Re R_ij, Im R_ij)` for `1 ≤ i < j ≤ N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankResidual {
    pub values: Vec<f64>,
}

impl RankResidual {
    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn residual_count(n: usize) -> usize {
    (n.saturating_sub(1)).pow(2)
}

pub fn rank_residuals(mu: &CoadjointPoint) -> RankResidual {
    let n = mu.n();
    let mut values = Vec::with_capacity(residual_count(n));
    for i in 0..n.saturating_sub(1) {
        values.push(mu.diag(i) * mu.diag(i + 1) - mu.offdiag(i, i + 1).norm_sqr());
    }
    for (i, j) in upper_pairs(n.saturating_sub(1)) {
        let m = |p, q| mu.entry(p, q);
        let r = m(i, j) * m(i + 1, j + 1) - m(i, j + 1) * m(i + 1, j);
        values.push(r.re);
        values.push(r.im);
    }
    RankResidual { values }
}

/// Each residual is a homogeneous quadratic `R_k(x) = ½ xᵀ Q_k x`; returns
/// the symmetric `Q_k`, recovered exactly by polarization.
pub fn rank_residual_hessians(n: usize) -> Vec<DMatrix<f64>> {
    let dim = n * n;
    let count = residual_count(n);
    let eval = |coords: Vec<f64>| rank_residuals(&CoadjointPoint { coords }).values;
    let unit = |a: usize| {
        let mut v = vec![0.0; dim];
        v[a] = 1.0;
        v
    };
    let singles: Vec<Vec<f64>> = (0..dim).map(|a| eval(unit(a))).collect();
    let mut forms = vec![DMatrix::zeros(dim, dim); count];
    for a in 0..dim {
        for k in 0..count {
            forms[k][(a, a)] = 2.0 * singles[a][k];
        }
        for b in a + 1..dim {
            let mut v = unit(a);
            v[b] = 1.0;
            let both = eval(v);
            for k in 0..count {
                let q = both[k] - singles[a][k] - singles[b][k];
                forms[k][(a, b)] = q;
                forms[k][(b, a)] = q;
            }
        }
    }
    forms
}

/// Jacobian `DR(μ)`, one row per residual.
pub fn rank_residual_jacobian(mu: &CoadjointPoint, forms: &[DMatrix<f64>]) -> DMatrix<f64> {
    let x = nalgebra::DVector::from_column_slice(&mu.coords);
    let mut jac = DMatrix::zeros(forms.len(), mu.coords.len());
    for (k, q) in forms.iter().enumerate() {
        jac.set_row(k, &(q * &x).transpose());
    }
    jac
}

/// Stacked constraint Jacobian `[DR; DC]` at `μ`.
pub fn constraint_jacobian(cfg: &ChargeConfig, mu: &CoadjointPoint) -> DMatrix<f64> {
    let forms = rank_residual_hessians(mu.n());
    let dr = rank_residual_jacobian(mu, &forms);
    let mut out = DMatrix::zeros(dr.nrows() + 1, dr.ncols());
    out.view_mut((0, 0), (dr.nrows(), dr.ncols())).copy_from(&dr);
    out.set_row(dr.nrows(), &nalgebra::RowDVector::from_vec(casimir_gradient(cfg)));
    out
}

/// `ad*_ξ μ = μ ξ D_Γ⁻¹ - D_Γ⁻¹ ξ μ`.
pub fn coadjoint_action(
    cfg: &ChargeConfig,
    xi: &AlgebraElement,
    mu: &CoadjointPoint,
) -> Result<CoadjointPoint> {
    check_pair(cfg, xi.n(), mu.n())?;
    let m = AlgebraElement::from_point(mu).matrix;
    let dinv = cfg.d_gamma_inv();
    let out = &m * &xi.matrix * &dinv - &dinv * &xi.matrix * &m;
    Ok(AlgebraElement { matrix: out }.to_point())
}

/// Reduced vector field `μ̇ = ad*_{δh/δμ} μ`.
pub fn lie_poisson_rhs(cfg: &ChargeConfig, mu: &CoadjointPoint) -> Result<CoadjointPoint> {
    let grad = reduced_hamiltonian_gradient(cfg, mu)?;
    coadjoint_action(cfg, &gradient_to_algebra(&grad, mu.n()), mu)
}

/// Analytic Jacobian of [`lie_poisson_rhs`] in coordinates.
pub fn lie_poisson_jacobian(cfg: &ChargeConfig, mu: &CoadjointPoint) -> Result<DMatrix<f64>> {
    let n = mu.n();
    let dim = n * n;
    let hess = reduced_hamiltonian_hessian(cfg, mu)?;
    let grad = reduced_hamiltonian_gradient(cfg, mu)?;
    let big_m = gradient_to_hermitian(&grad, n);
    let m = DMatrix::from_fn(n, n, |p, q| mu.entry(p, q));
    let dinv = cfg.d_gamma_inv();
    let minus_i = -Complex64::i();
    let mut jac = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let mut e = vec![0.0; dim];
        e[k] = 1.0;
        let dm = DMatrix::from_fn(n, n, |p, q| CoadjointPoint { coords: e.clone() }.entry(p, q));
        let dgrad: Vec<f64> = hess.column(k).iter().copied().collect();
        let d_big_m = gradient_to_hermitian(&dgrad, n);
        // ṁ = -i(D⁻¹ M m - m M D⁻¹)
        let dmdot = (&dinv * &d_big_m * &m + &dinv * &big_m * &dm
            - &dm * &big_m * &dinv
            - &m * &d_big_m * &dinv)
            * minus_i;
        let col = pack_unchecked(&dmdot);
        for r in 0..dim {
            jac[(r, k)] = col.coords[r];
        }
    }
    Ok(jac)
}

/// `{f,g}_Γ(μ) = -⟨μ, [δf/δμ, δg/δμ]_Γ⟩`, derivatives by central differences.
pub fn lie_poisson_bracket(
    cfg: &ChargeConfig,
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
    mu: &CoadjointPoint,
) -> Result<f64> {
    let df = variational_derivative(f, mu);
    let dg = variational_derivative(g, mu);
    lie_poisson_bracket_of(cfg, &df, &dg, mu)
}

/// The bracket evaluated from given variational derivatives.
pub fn lie_poisson_bracket_of(
    cfg: &ChargeConfig,
    df: &AlgebraElement,
    dg: &AlgebraElement,
    mu: &CoadjointPoint,
) -> Result<f64> {
    let br = bracket_gamma(cfg, df, dg)?;
    Ok(-inner_product(&AlgebraElement::from_point(mu), &br))
}

/// Reduced trajectory with per-sample `h`, `C` and `‖R‖∞`.
#[derive(Debug, Clone, Default)]
pub struct ReducedTrajectory {
    /// Number of vortices.
    pub n: usize,
    pub times: Vec<f64>,
    pub points: Vec<CoadjointPoint>,
    pub energy: Vec<f64>,
    pub casimir: Vec<f64>,
    pub rank_residual: Vec<f64>,
}

impl ReducedTrajectory {
    fn from_samples(cfg: &ChargeConfig, samples: ode::Samples) -> Self {
        let mut out = Self { n: cfg.n(), ..Self::default() };
        for (t, coords) in samples.times.into_iter().zip(samples.states) {
            let mu = CoadjointPoint { coords };
            out.energy.push(reduced_hamiltonian_unchecked(cfg, &mu));
            out.casimir.push(casimir(cfg, &mu));
            out.rank_residual.push(rank_residuals(&mu).norm_inf());
            out.times.push(t);
            out.points.push(mu);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn energy_drift(&self) -> f64 {
        max_drift(&self.energy)
    }

    pub fn casimir_drift(&self) -> f64 {
        max_drift(&self.casimir)
    }

    pub fn max_rank_residual(&self) -> f64 {
        self.rank_residual.iter().fold(0.0, |m, v| m.max(*v))
    }

    /// Header `t,mu_1,...,mu_{N²},h,C,rankres_inf`; 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let dim = self.n * self.n;
        let mut header = vec!["t".to_string()];
        header.extend((1..=dim).map(|k| format!("mu_{k}")));
        header.extend(["h", "C", "rankres_inf"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.len() {
            let mut row = vec![fmt17(self.times[k])];
            row.extend(self.points[k].coords.iter().map(|v| fmt17(*v)));
            row.push(fmt17(self.energy[k]));
            row.push(fmt17(self.casimir[k]));
            row.push(fmt17(self.rank_residual[k]));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ReducedFailure {
    pub trajectory: ReducedTrajectory,
    pub error: IntegrationError,
}

impl std::fmt::Display for ReducedFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} samples kept)", self.error, self.trajectory.len())
    }
}

impl std::error::Error for ReducedFailure {}

pub fn integrate_reduced(
    cfg: &ChargeConfig,
    mu0: &CoadjointPoint,
    t_span: (f64, f64),
    settings: &IntegratorSettings,
) -> std::result::Result<ReducedTrajectory, ReducedFailure> {
    let fail = |error| ReducedFailure {
        trajectory: ReducedTrajectory { n: cfg.n(), ..Default::default() },
        error,
    };
    if let Err(e) = check_domain(cfg, mu0) {
        return Err(fail(IntegrationError::SingularityApproach { t: t_span.0, reason: e.to_string() }));
    }
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> std::result::Result<(), String> {
        let mu = CoadjointPoint { coords: y.to_vec() };
        let v = lie_poisson_rhs(cfg, &mu).map_err(|e| e.to_string())?;
        dy.copy_from_slice(&v.coords);
        Ok(())
    };
    // Same safety band as the vortex guard: radius 1 - ε, separation ε.
    let gap = 1.0 - (1.0 - DEFAULT_BOUNDARY_EPS).powi(2);
    let dist2 = DEFAULT_COLLISION_EPS * DEFAULT_COLLISION_EPS;
    let guard = |y: &[f64]| {
        check_domain_with(cfg, &CoadjointPoint { coords: y.to_vec() }, gap, dist2)
            .map_err(|e| e.to_string())
    };
    match ode::integrate(&rhs, &guard, &mu0.coords, t_span, settings) {
        Ok(samples) => Ok(ReducedTrajectory::from_samples(cfg, samples)),
        Err(t) => Err(ReducedFailure {
            trajectory: ReducedTrajectory::from_samples(cfg, t.samples),
            error: t.error,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{momentum_map, VortexState};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn skew(n: usize, seed: u64) -> AlgebraElement {
        // deterministic pseudo-random entries
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = DMatrix::from_element(n, n, c(0.0, 0.0));
        for p in 0..n {
            m[(p, p)] = c(0.0, next());
            for q in p + 1..n {
                let v = c(next(), next());
                m[(p, q)] = v;
                m[(q, p)] = -v.conj();
            }
        }
        AlgebraElement::new(m).unwrap()
    }

    #[test]
    fn bracket_is_antisymmetric_and_reduces_to_commutator() {
        let ones = ChargeConfig::uniform(3, 0.2).unwrap();
        let (a, b) = (skew(3, 1), skew(3, 2));
        assert!(bracket_gamma(&ones, &a, &a).unwrap().is_zero(1e-15));
        let comm = &a.matrix * &b.matrix - &b.matrix * &a.matrix;
        let br = bracket_gamma(&ones, &a, &b).unwrap();
        assert!((br.matrix - comm).norm() < 1e-15);
    }

    #[test]
    fn bracket_dimension_mismatch() {
        let cfg = ChargeConfig::uniform(2, 0.2).unwrap();
        assert!(matches!(
            bracket_gamma(&cfg, &skew(3, 1), &skew(3, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inner_product_identity() {
        for n in 1..5 {
            let ii = AlgebraElement::new(DMatrix::identity(n, n) * Complex64::i()).unwrap();
            assert_eq!(inner_product(&ii, &ii), n as f64 / 2.0);
        }
        let a = skew(4, 9);
        assert!(inner_product(&a, &a) > 0.0);
    }

    #[test]
    fn point_algebra_round_trip() {
        let mu = CoadjointPoint::new((0..9).map(|k| 0.1 * k as f64 - 0.3).collect()).unwrap();
        assert_eq!(AlgebraElement::from_point(&mu).to_point(), mu);
    }

    #[test]
    fn casimir_pairing_with_gradient() {
        let cfg = ChargeConfig::new(vec![1, -2, 3], 0.3).unwrap();
        let z = VortexState::new(vec![c(0.1, 0.2), c(-0.3, 0.4), c(0.5, -0.1)]);
        let mu = momentum_map(&z);
        let grad_c = AlgebraElement { matrix: cfg.d_gamma() * c(0.0, 2.0) };
        let lhs = inner_product(&AlgebraElement::from_point(&mu), &grad_c);
        let impulse: f64 = (0..3).map(|i| cfg.charge(i) * z.positions[i].norm_sqr()).sum();
        assert!((lhs - impulse).abs() < 1e-15);
        assert!((casimir(&cfg, &mu) - impulse).abs() < 1e-15);
    }

    #[test]
    fn casimir_dipole_cancels() {
        let cfg = ChargeConfig::new(vec![1, -1], 0.3).unwrap();
        let mu = CoadjointPoint::new(vec![0.4, 0.4, 0.1, -0.2]).unwrap();
        assert_eq!(casimir(&cfg, &mu), 0.0);
    }

    #[test]
    fn casimir_variational_derivative() {
        let cfg = ChargeConfig::new(vec![2, -1, 1], 0.3).unwrap();
        let mu = CoadjointPoint::new(vec![0.2, 0.1, 0.3, 0.05, -0.02, 0.0, 0.1, 0.03, 0.04]).unwrap();
        let d = variational_derivative(&|x: &[f64]| casimir(&cfg, &CoadjointPoint { coords: x.to_vec() }), &mu);
        let expected = cfg.d_gamma() * c(0.0, 2.0);
        assert!((d.matrix - expected).norm() < 1e-10);
    }

    #[test]
    fn reduced_hamiltonian_pair_formula() {
        let cfg = ChargeConfig::new(vec![2, 3], 0.7).unwrap();
        let mu = CoadjointPoint::new(vec![0.2, 0.3, -0.1, 0.05]).unwrap();
        let expected = 0.5
            * (4.0 * (0.8f64).ln() + 9.0 * (0.7f64).ln() - 0.7 * 6.0 * (0.2f64 + 0.3 + 0.2).ln());
        assert!((reduced_hamiltonian(&cfg, &mu).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn reduced_hamiltonian_domain_error() {
        let cfg = ChargeConfig::uniform(2, 0.1).unwrap();
        let err = reduced_hamiltonian(&cfg, &CoadjointPoint::zeros(2)).unwrap_err();
        match err {
            Error::Domain(msg) => assert!(msg.contains("mu_1 + mu_2 - 2 Re mu_12")),
            other => panic!("unexpected {other:?}"),
        }
        let out = CoadjointPoint::new(vec![1.2, 0.1, 0.0, 0.0]).unwrap();
        assert!(matches!(reduced_hamiltonian(&cfg, &out), Err(Error::Domain(m)) if m.contains("1 - mu_1")));
    }

    #[test]
    fn analytic_gradient_and_hessian_match_differences() {
        let cfg = ChargeConfig::new(vec![1, -2, 1], 0.4).unwrap();
        let z = VortexState::new(vec![c(0.2, 0.3), c(-0.4, 0.1), c(0.1, -0.5)]);
        let mu = momentum_map(&z);
        let h = |x: &[f64]| reduced_hamiltonian_unchecked(&cfg, &CoadjointPoint { coords: x.to_vec() });
        let g = reduced_hamiltonian_gradient(&cfg, &mu).unwrap();
        let g_fd = fd::gradient(&h, &mu.coords);
        for (a, b) in g.iter().zip(&g_fd) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let hess = reduced_hamiltonian_hessian(&cfg, &mu).unwrap();
        let hess_fd = fd::hessian(&h, &mu.coords);
        assert!((hess - hess_fd).amax() < 1e-5);
    }

    #[test]
    fn pair_variational_derivative_closed_form() {
        // δh/δμ = i [[2∂h/∂μ1, ∂h/∂μ3 + i∂h/∂μ4], [.., 2∂h/∂μ2]]
        let cfg = ChargeConfig::new(vec![1, 2], 0.3).unwrap();
        let mu = CoadjointPoint::new(vec![0.2, 0.35, -0.1, 0.12]).unwrap();
        let (g1, g2, c_) = (1.0, 2.0, 0.3);
        let d = 0.2 + 0.35 + 0.2;
        let p1 = -0.5 * g1 * g1 / 0.8 - 0.5 * c_ * g1 * g2 / d;
        let p2 = -0.5 * g2 * g2 / 0.65 - 0.5 * c_ * g1 * g2 / d;
        let p3 = c_ * g1 * g2 / d;
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[c(2.0 * p1, 0.0), c(p3, 0.0), c(p3, 0.0), c(2.0 * p2, 0.0)],
        ) * Complex64::i();
        let h = |x: &[f64]| reduced_hamiltonian_unchecked(&cfg, &CoadjointPoint { coords: x.to_vec() });
        let d_fd = variational_derivative(&h, &mu);
        assert!((d_fd.matrix - &expected).iter().all(|v| v.norm() < 1e-9));
        let grad = reduced_hamiltonian_gradient(&cfg, &mu).unwrap();
        assert!((gradient_to_algebra(&grad, 2).matrix - expected).iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn rank_residuals_examples() {
        let z = VortexState::new(vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.5, 0.0), c(0.0, -0.6)]);
        let mu = momentum_map(&z);
        let r = rank_residuals(&mu);
        assert_eq!(r.values.len(), 9);
        assert!(r.norm_inf() < 1e-16);

        let mu2 = CoadjointPoint::new(vec![0.3, 0.5, 0.1, 0.2]).unwrap();
        assert_eq!(rank_residuals(&mu2).values, vec![0.3 * 0.5 - 0.01 - 0.04]);
        let full = CoadjointPoint::new(vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(rank_residuals(&full).values, vec![1.0]);
    }

    #[test]
    fn residual_dimension_count() {
        for n in 2..8 {
            assert_eq!(residual_count(n), (n - 1) * (n - 1));
            assert_eq!(n * n - residual_count(n), 2 * n - 1);
            assert_eq!(rank_residuals(&CoadjointPoint::zeros(n)).values.len(), residual_count(n));
        }
    }

    #[test]
    fn residual_quadratic_forms_reproduce_residuals() {
        let n = 4;
        let forms = rank_residual_hessians(n);
        let mu = CoadjointPoint::new((0..16).map(|k| ((k * 7 % 5) as f64 - 2.0) * 0.13).collect()).unwrap();
        let x = nalgebra::DVector::from_column_slice(&mu.coords);
        let r = rank_residuals(&mu).values;
        for (k, q) in forms.iter().enumerate() {
            let val = 0.5 * x.dot(&(q * &x));
            assert!((val - r[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn central_direction_annihilates() {
        let cfg = ChargeConfig::new(vec![1, -3, 2], 0.3).unwrap();
        let xi = AlgebraElement::new(cfg.d_gamma() * c(0.0, 2.0)).unwrap();
        let mu = CoadjointPoint::new((0..9).map(|k| 0.05 * k as f64).collect()).unwrap();
        assert!(coadjoint_action(&cfg, &xi, &mu).unwrap().norm_inf() < 1e-15);
    }

    #[test]
    fn coadjoint_action_unit_charges() {
        let cfg = ChargeConfig::uniform(3, 0.3).unwrap();
        let xi = skew(3, 4);
        let mu = CoadjointPoint::new((0..9).map(|k| 0.05 * k as f64 - 0.1).collect()).unwrap();
        let m = AlgebraElement::from_point(&mu).matrix;
        let expected = AlgebraElement { matrix: &m * &xi.matrix - &xi.matrix * &m }.to_point();
        assert!(coadjoint_action(&cfg, &xi, &mu).unwrap().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn reduced_field_is_negated_printed_pair_equations() {
        // The printed N=2 component equations describe the time-reversed flow.
        let cfg = ChargeConfig::uniform(2, 0.3).unwrap();
        let (m1, m2, m3, m4): (f64, f64, f64, f64) = (0.2, 0.3, 0.1, 0.05);
        let mu = CoadjointPoint::new(vec![m1, m2, m3, m4]).unwrap();
        let d = m1 + m2 - 2.0 * m3;
        let c_ = 0.3;
        let printed = [
            2.0 * c_ * m4 / d,
            -2.0 * c_ * m4 / d,
            (m1 - m2) * m4 / ((1.0 - m1) * (1.0 - m2)),
            -(c_ * (m1 - m2) / d + (1.0 / (1.0 - m1) - 1.0 / (1.0 - m2)) * m3),
        ];
        let rhs = lie_poisson_rhs(&cfg, &mu).unwrap();
        for (got, p) in rhs.coords.iter().zip(printed) {
            assert!((got + p).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let cfg = ChargeConfig::new(vec![1, 2, -1], 0.25).unwrap();
        let z = VortexState::new(vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.1, -0.5)]);
        let mu = momentum_map(&z);
        let jac = lie_poisson_jacobian(&cfg, &mu).unwrap();
        let f = |x: &[f64]| lie_poisson_rhs(&cfg, &CoadjointPoint { coords: x.to_vec() }).map(|p| p.coords);
        let jac_fd = fd::jacobian(&f, &mu.coords, 1e-6).unwrap();
        assert!((jac - jac_fd).amax() < 1e-7);
    }

    #[test]
    fn constraint_rank_on_momentum_image() {
        let cfg = ChargeConfig::new(vec![1, 1, 1], 0.2).unwrap();
        let z = VortexState::new(vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.1, -0.5)]);
        let jac = constraint_jacobian(&cfg, &momentum_map(&z));
        assert_eq!(jac.nrows(), 5);
        assert_eq!(crate::linalg::rank(&jac, 1e-10), 5);
    }
}
