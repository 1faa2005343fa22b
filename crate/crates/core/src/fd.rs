//! Central finite differences with the standard `ε^{1/3}` step.

/// `ε^{1/3} · max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

pub fn gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut work = x.to_vec();
    (0..x.len())
        .map(|k| {
            let h = fd_step(x[k]);
            work[k] = x[k] + h;
            let fp = f(&work);
            work[k] = x[k] - h;
            let fm = f(&work);
            work[k] = x[k];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `d/ds f(x + s v)` at `s = 0`.
pub fn directional(f: &dyn Fn(&[f64]) -> f64, x: &[f64], v: &[f64]) -> f64 {
    let scale = x.iter().fold(1.0f64, |m, a| m.max(a.abs()));
    let vn = v.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(f64::MIN_POSITIVE);
    let h = f64::EPSILON.cbrt() * scale / vn;
    let shifted = |s: f64| -> Vec<f64> { x.iter().zip(v).map(|(a, b)| a + s * b).collect() };
    (f(&shifted(h)) - f(&shifted(-h))) / (2.0 * h)
}

/// Central-difference Jacobian of a vector field, with per-coordinate step
/// `rel · max(1, |x_k|)`. Returned row-major as `rows × x.len()`.
pub fn jacobian<E>(
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>, E>,
    x: &[f64],
    rel: f64,
) -> Result<nalgebra::DMatrix<f64>, E> {
    let f0 = f(x)?;
    let mut jac = nalgebra::DMatrix::zeros(f0.len(), x.len());
    let mut work = x.to_vec();
    for k in 0..x.len() {
        let h = rel * x[k].abs().max(1.0);
        work[k] = x[k] + h;
        let fp = f(&work)?;
        work[k] = x[k] - h;
        let fm = f(&work)?;
        work[k] = x[k];
        for r in 0..f0.len() {
            jac[(r, k)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Central-difference Hessian of a scalar field.
pub fn hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> nalgebra::DMatrix<f64> {
    let n = x.len();
    let mut out = nalgebra::DMatrix::zeros(n, n);
    let mut w = x.to_vec();
    let step = |v: f64| f64::EPSILON.powf(0.25) * v.abs().max(1.0);
    for a in 0..n {
        for b in a..n {
            let (ha, hb) = (step(x[a]), step(x[b]));
            let mut eval = |sa: f64, sb: f64| {
                w[a] += sa * ha;
                w[b] += sb * hb;
                let v = f(&w);
                w[a] = x[a];
                w[b] = x[b];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * ha * hb);
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    out
}
