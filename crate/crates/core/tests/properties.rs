use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use vortexlp::coalgebra::{
    bracket_gamma, casimir_gradient, coadjoint_action, lie_poisson_bracket_of,
    lie_poisson_jacobian, lie_poisson_rhs, rank_residual_hessians, rank_residuals,
    reduced_hamiltonian, reduced_hamiltonian_gradient, AlgebraElement,
};
use vortexlp::dynamics::{hamiltonian, vortex_rhs};
use vortexlp::model::state_from_rank_one;
use vortexlp::{fd, momentum_map, mu_pack, mu_unpack, ChargeConfig, CoadjointPoint, Complex64, VortexState};

#[derive(Debug, Clone)]
struct Config {
    cfg: ChargeConfig,
    z: VortexState,
}

fn separated(z: &[Complex64], min: f64) -> bool {
    (0..z.len()).all(|i| (i + 1..z.len()).all(|j| (z[i] - z[j]).norm() >= min))
}

fn configs() -> impl Strategy<Value = Config> {
    (2usize..=4)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(prop_oneof![-2i64..=-1, 1i64..=2], n),
                prop::collection::vec((0.05f64..0.8, 0.0f64..2.0 * PI), n),
                0.02f64..1.0,
            )
        })
        .prop_filter_map("vortices too close", |(charges, polar, c)| {
            let z: Vec<Complex64> = polar.iter().map(|&(r, t)| Complex64::from_polar(r, t)).collect();
            separated(&z, 0.05).then(|| Config {
                cfg: ChargeConfig::new(charges, c).unwrap(),
                z: VortexState::new(z),
            })
        })
}

fn skew(n: usize) -> impl Strategy<Value = AlgebraElement> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |v| {
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        let mut it = v.into_iter();
        for p in 0..n {
            m[(p, p)] = Complex64::new(0.0, it.next().unwrap());
            for q in p + 1..n {
                let w = Complex64::new(it.next().unwrap(), it.next().unwrap());
                m[(p, q)] = w;
                m[(q, p)] = -w.conj();
            }
        }
        AlgebraElement::new(m).unwrap()
    })
}

fn charges(n: usize) -> impl Strategy<Value = ChargeConfig> {
    prop::collection::vec(prop_oneof![-3i64..=-1, 1i64..=3], n)
        .prop_map(|g| ChargeConfig::new(g, 0.1).unwrap())
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pack_unpack_round_trip(coords in (1usize..=5).prop_flat_map(|n| prop::collection::vec(-2.0f64..2.0, n * n))) {
        let mu = CoadjointPoint::new(coords.clone()).unwrap();
        let h = mu_unpack(&mu).unwrap();
        prop_assert!(max_abs_diff(&h, &h.adjoint()) == 0.0);
        prop_assert_eq!(mu_pack(&h).unwrap().coords, coords);
    }

    #[test]
    fn momentum_map_lands_on_rank_one_orbit(c in configs()) {
        let mu = momentum_map(&c.z);
        prop_assert!(rank_residuals(&mu).norm_inf() < 1e-14);
        let back = state_from_rank_one(&mu);
        prop_assert!(momentum_map(&back).max_abs_diff(&mu) < 1e-14);
    }

    #[test]
    fn momentum_map_is_rotation_invariant(c in configs(), theta in 0.0f64..2.0 * PI) {
        let mu = momentum_map(&c.z);
        prop_assert!(momentum_map(&c.z.rotated(theta)).max_abs_diff(&mu) < 1e-14);
    }

    #[test]
    fn reduced_hamiltonian_matches_full(c in configs()) {
        let h_full = hamiltonian(&c.cfg, &c.z).unwrap();
        let h_red = reduced_hamiltonian(&c.cfg, &momentum_map(&c.z)).unwrap();
        prop_assert!((h_full - h_red).abs() <= 1e-12 * (1.0 + h_full.abs()));
    }

    #[test]
    fn reduced_field_is_pushforward(c in configs()) {
        let v = vortex_rhs(&c.cfg, &c.z).unwrap();
        let z = &c.z.positions;
        let n = z.len();
        let dj = DMatrix::from_fn(n, n, |p, q| v[p] * z[q].conj() + z[p] * v[q].conj());
        let expected = mu_pack(&dj).unwrap();
        let got = lie_poisson_rhs(&c.cfg, &momentum_map(&c.z)).unwrap();
        let scale = expected.norm_inf().max(1.0);
        prop_assert!(got.max_abs_diff(&expected) <= 1e-11 * scale, "{:?} vs {:?}", got, expected);
    }

    #[test]
    fn reduced_field_conserves_h_and_c(c in configs()) {
        let mu = momentum_map(&c.z);
        let rhs = lie_poisson_rhs(&c.cfg, &mu).unwrap();
        let grad = reduced_hamiltonian_gradient(&c.cfg, &mu).unwrap();
        let scale = rhs.norm_inf() * grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) + 1.0;
        prop_assert!(dot(&grad, &rhs.coords).abs() <= 1e-12 * scale);
        prop_assert!(dot(&casimir_gradient(&c.cfg), &rhs.coords).abs() <= 1e-12 * scale);
    }

    #[test]
    fn analytic_jacobian_matches_differences(c in configs()) {
        let mu = momentum_map(&c.z);
        let an = lie_poisson_jacobian(&c.cfg, &mu).unwrap();
        let f = |x: &[f64]| lie_poisson_rhs(&c.cfg, &CoadjointPoint { coords: x.to_vec() }).map(|p| p.coords);
        let num = fd::jacobian(&f, &mu.coords, 1e-6).unwrap();
        let scale = an.amax().max(1.0);
        prop_assert!((an - num).amax() <= 1e-5 * scale);
    }

    #[test]
    fn rank_residuals_are_exact_quadratic_forms(coords in (2usize..=4).prop_flat_map(|n| prop::collection::vec(-1.0f64..1.0, n * n))) {
        let mu = CoadjointPoint::new(coords.clone()).unwrap();
        let x = DVector::from_vec(coords);
        let r = rank_residuals(&mu);
        let forms = rank_residual_hessians(mu.n());
        prop_assert_eq!(forms.len(), r.values.len());
        for (q, v) in forms.iter().zip(&r.values) {
            prop_assert!((0.5 * x.dot(&(q * &x)) - v).abs() < 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi(
        (cfg, a, b, c) in (2usize..=4).prop_flat_map(|n| (charges(n), skew(n), skew(n), skew(n)))
    ) {
        let ab = bracket_gamma(&cfg, &a, &b).unwrap();
        let ba = bracket_gamma(&cfg, &b, &a).unwrap();
        prop_assert!(max_abs_diff(&ab.matrix, &(-&ba.matrix)) < 1e-14);
        prop_assert!(AlgebraElement::new(ab.matrix.clone()).is_ok());

        let t1 = bracket_gamma(&cfg, &a, &bracket_gamma(&cfg, &b, &c).unwrap()).unwrap();
        let t2 = bracket_gamma(&cfg, &b, &bracket_gamma(&cfg, &c, &a).unwrap()).unwrap();
        let t3 = bracket_gamma(&cfg, &c, &ab).unwrap();
        let sum = &t1.matrix + &t2.matrix + &t3.matrix;
        prop_assert!(sum.iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn coadjoint_action_preserves_casimir(
        (cfg, xi, m) in (2usize..=4).prop_flat_map(|n| (charges(n), skew(n), skew(n)))
    ) {
        let mu = m.to_point();
        let v = coadjoint_action(&cfg, &xi, &mu).unwrap();
        prop_assert!(dot(&casimir_gradient(&cfg), &v.coords).abs() < 1e-13);
    }

    #[test]
    fn lie_poisson_bracket_is_antisymmetric(
        (cfg, a, b, m) in (2usize..=4).prop_flat_map(|n| (charges(n), skew(n), skew(n), skew(n)))
    ) {
        let mu = m.to_point();
        let ab = lie_poisson_bracket_of(&cfg, &a, &b, &mu).unwrap();
        let ba = lie_poisson_bracket_of(&cfg, &b, &a, &mu).unwrap();
        prop_assert!((ab + ba).abs() < 1e-13);
        prop_assert!(lie_poisson_bracket_of(&cfg, &a, &a, &mu).unwrap().abs() < 1e-13);
    }
}
