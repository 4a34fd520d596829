use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn real(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| c(x, 0.0)).collect()
}

fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
}

fn e11() -> Vec<C64> {
    real(&[1.0, 0.0, 0.0, 0.0])
}

#[test]
fn reference_operator_of_identity_medium_is_the_projection() {
    let k = [0.3, -1.1];
    let g = gamma_reference(&ProjectionSpec::Grad, &linalg::identity(2), &k).unwrap();
    let k2 = k[0] * k[0] + k[1] * k[1];
    let expect = real(&[k[0] * k[0] / k2, k[0] * k[1] / k2, k[1] * k[0] / k2, k[1] * k[1] / k2]);
    assert!(close(&g, &expect, 1e-15));
    let g3 = gamma_reference(&ProjectionSpec::Grad, &linalg::scaled_identity(2, c(3.0, 0.0)), &k).unwrap();
    assert!(close(&g3, &linalg::scale(&expect, c(1.0 / 3.0, 0.0)), 1e-15));
    assert!(gamma_reference(&ProjectionSpec::Grad, &linalg::identity(2), &[0.0, 0.0]).is_err());
    let singular = real(&[0.0, 0.0, 0.0, 0.0]);
    assert!(matches!(gamma_reference(&ProjectionSpec::Grad, &singular, &k), Err(crate::Error::RestrictedSingular { .. })));
}

#[test]
fn w_transform_basics() {
    let l0 = real(&[2.0, 0.0, 0.0, 2.0]);
    let g = gamma_reference(&ProjectionSpec::Grad, &l0, &[1.0, 0.5]).unwrap();
    assert!(close(&w_transform(&l0, &l0, &g).unwrap(), &[c(0.0, 0.0); 4], 0.0));
    let d = real(&[1e-4, 2e-5, -3e-5, 5e-5]);
    let l = linalg::add(&l0, &d);
    let k = w_transform(&l, &l0, &g).unwrap();
    assert!(linalg::frobenius(&linalg::sub(&k, &d)) < 1e-7);
}

#[test]
fn closure_examples() {
    let l0 = linalg::identity(2);
    let uni = Subspace::new(2, &[e11()]).unwrap();
    let r = check_closure(&uni, &ProjectionSpec::Grad, &l0, 2, 100, 3).unwrap();
    assert!(r.passed, "{r:?}");
    assert_eq!(r.samples, 100 + REVERIFY_SAMPLES);
    let iso = Subspace::new(2, &[linalg::identity(2)]).unwrap();
    let r = check_closure(&iso, &ProjectionSpec::Grad, &l0, 2, 20, 3).unwrap();
    assert!(!r.passed);
    assert!(r.witness.unwrap().distance > 0.1);
    let full = Subspace::full(2);
    assert!(check_closure(&full, &ProjectionSpec::Grad, &l0, 2, 20, 3).unwrap().passed);
    assert!(Subspace::new(2, &[e11(), linalg::scale(&e11(), c(2.0, 0.0))]).is_err());
}

#[test]
fn levin_examples() {
    assert!((levin_alpha(1.0, 2.0, 1.0, 0.0, 1.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert!((levin_alpha(1.0, 2.0, 0.7, 0.7, 1.3).unwrap() - 0.7).abs() < 1e-15);
    assert!((levin_alpha(1.0, 2.0, 0.4, -0.9, 1.0).unwrap() - 0.4).abs() < 1e-15);
    assert!(matches!(levin_alpha(1.0, 1.0, 0.4, 0.2, 1.0), Err(crate::Error::Degenerate(_))));
    assert!(levin_alpha(-1.0, 1.0, 0.4, 0.2, 1.0).is_err());
}

fn mat(v: &[f64], w: &[f64]) -> Vec<C64> {
    v.iter().zip(w).map(|(&a, &b)| c(a, b)).collect()
}

proptest! {
    #[test]
    fn w_transform_round_trip(
        lr in proptest::collection::vec(-1.0..1.0f64, 9),
        li in proptest::collection::vec(-1.0..1.0f64, 9),
        k in proptest::collection::vec(-2.0..2.0f64, 3),
    ) {
        prop_assume!(k.iter().any(|v| v.abs() > 1e-3));
        let l0 = linalg::scaled_identity(3, c(2.0, 0.0));
        let l = linalg::add(&l0, &mat(&lr, &li));
        let g = gamma_reference(&ProjectionSpec::Grad, &l0, &k).unwrap();
        if let Ok(kk) = w_transform(&l, &l0, &g) {
            let back = inverse_w_transform(&kk, &l0, &g).unwrap();
            prop_assert!(linalg::frobenius(&linalg::sub(&back, &l)) <= 1e-12 * linalg::frobenius(&l).max(1.0));
        }
    }

    #[test]
    fn reference_operator_defining_property(seed in proptest::collection::vec(-1.0..1.0f64, 9), k in proptest::collection::vec(-2.0..2.0f64, 3)) {
        prop_assume!(k.iter().any(|v| v.abs() > 1e-3));
        let a = real(&seed);
        let l0 = linalg::add(&linalg::mat_mul(3, 3, 3, &a, &linalg::adjoint(3, 3, &a)), &linalg::scaled_identity(3, c(0.2, 0.0)));
        let g = gamma_reference(&ProjectionSpec::Grad, &l0, &k).unwrap();
        let g1 = ProjectionSpec::Grad.evaluate(&k).unwrap();
        // Γ L₀ Γ = Γ and Γ L₀ Γ₁ = Γ₁ on the range.
        let glg = linalg::mat_mul(3, 3, 3, &linalg::mat_mul(3, 3, 3, &g, &l0), &g);
        prop_assert!(close(&glg, &g, 1e-12 * linalg::frobenius(&g).max(1.0)));
        let glg1 = linalg::mat_mul(3, 3, 3, &linalg::mat_mul(3, 3, 3, &g, &l0), &g1);
        prop_assert!(close(&glg1, &g1, 1e-10));
    }

    #[test]
    fn manifold_membership_is_independent_of_k0(beta in 0.1..3.0f64, dirs in proptest::collection::vec(-1.0..1.0f64, 12)) {
        // Uniaxial relation: 𝒦 = span{e₁⊗e₁} is closed, so L = L₀ + W⁻¹(βe₁⊗e₁) keeps K ∈ 𝒦 for every k₀.
        let l0 = linalg::identity(2);
        let sub = Subspace::new(2, &[e11()]).unwrap();
        let k_first = [dirs[0], dirs[1] + 2.0];
        let g0 = gamma_reference(&ProjectionSpec::Grad, &l0, &k_first).unwrap();
        let l = inverse_w_transform(&linalg::scale(&e11(), c(beta, 0.0)), &l0, &g0).unwrap();
        for w in dirs[2..].chunks(2) {
            prop_assume!(w[0].abs() + w[1].abs() > 1e-3);
            let g = gamma_reference(&ProjectionSpec::Grad, &l0, w).unwrap();
            if let Ok(kk) = w_transform(&l, &l0, &g) {
                prop_assert!(sub.distance(&kk) <= 1e-10 * linalg::frobenius(&kk).max(1.0));
            }
        }
    }
}
