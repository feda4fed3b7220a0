//! End-to-end checks across modules: algebra file → scalings → group → embedding.

use proptest::prelude::*;
use shearlet_core::algebra::{canonical_basis, check_shearing_invariants, families, load_algebra, recognize_shearing};
use shearlet_core::group::{GroupElement, ShearletGroup};
use shearlet_core::rational::{qi, Q};
use shearlet_core::scaling::{
    build_mu_system, exponents_from_mu, solve_mu_system, verify_compatibility, wavefront_window, ExponentVector,
};
use shearlet_core::symplectic::{phi, phi_inverse};

fn members() -> Vec<(String, shearlet_core::algebra::CheckedAlgebra)> {
    let mut out = Vec::new();
    for d in 2..=6 {
        out.push((format!("class2:{d}"), families::build("class2", d, None).unwrap()));
        out.push((format!("toeplitz:{d}"), families::build("toeplitz", d, None).unwrap()));
    }
    for a in [-1, 0, 1] {
        out.push((format!("alpha:4:{a}"), families::build("alpha", 4, Some(qi(a))).unwrap()));
    }
    out.push(("isotropic-only:4".into(), families::build("isotropic-only", 4, None).unwrap()));
    out
}

#[test]
fn every_kernel_point_is_compatible() {
    for (name, alg) in members() {
        let s = canonical_basis(&alg);
        assert!(check_shearing_invariants(&s), "{name}");
        let sol = solve_mu_system(&build_mu_system(&alg));
        assert!(verify_compatibility(&s, &ExponentVector::isotropic(alg.dim())).unwrap(), "{name}");
        for v in &sol.basis {
            assert!(verify_compatibility(&s, &exponents_from_mu(v)).unwrap(), "{name}: {v:?}");
        }
        if let Some(mu) = wavefront_window(&sol) {
            let ev = exponents_from_mu(&mu);
            assert!(ev.in_wavefront_range(), "{name}");
            assert!(verify_compatibility(&s, &ev).unwrap(), "{name}");
        }
    }
}

#[test]
fn file_round_trip_preserves_structure() {
    for (name, alg) in members() {
        let again = load_algebra(&alg.to_file_string()).unwrap();
        assert!(again.same_structure(&alg), "{name}");
        let rebuilt = recognize_shearing(canonical_basis(&alg).basis()).unwrap();
        assert!(rebuilt.algebra().same_structure(&alg), "{name}");
    }
}

#[test]
fn incompatible_exponents_are_rejected() {
    // Toeplitz forces λ_i - λ_{i+1} to be constant.
    let s = canonical_basis(&families::build("toeplitz", 4, None).unwrap());
    let bad: Vec<Q> = vec![qi(1), Q::new(1.into(), 2.into()), Q::new(1.into(), 3.into()), Q::new(1.into(), 4.into())];
    assert!(!verify_compatibility(&s, &ExponentVector::new(bad)).unwrap());
}

fn toeplitz3() -> ShearletGroup {
    let alg = families::build("toeplitz", 3, None).unwrap();
    let mu = wavefront_window(&solve_mu_system(&build_mu_system(&alg))).unwrap();
    ShearletGroup::new(canonical_basis(&alg), exponents_from_mu(&mu)).unwrap()
}

proptest! {
    #[test]
    fn group_elements_survive_the_embedding(
        log_a in -1.5f64..1.5,
        t in proptest::collection::vec(-2.0f64..2.0, 2),
        b in proptest::collection::vec(-3.0f64..3.0, 3),
    ) {
        let g = toeplitz3();
        let h = g.element_matrix(&GroupElement::from_log(1, log_a, t.clone())).unwrap();
        let b = nalgebra::DVector::from_vec(b);
        let emb = phi(&b, &h).unwrap();
        prop_assert!(emb.symplectic_residual() < 1e-10);
        let (b2, h2) = phi_inverse(&emb).unwrap();
        prop_assert!((b2 - &b).amax() < 1e-9 && (&h2 - &h).amax() < 1e-9 * h.amax());
        let back = g.factorize(&h2).unwrap();
        prop_assert!((back.log_a - log_a).abs() < 1e-9);
        prop_assert!(back.t.iter().zip(&t).all(|(x, y)| (x - y).abs() < 1e-8));
    }
}
