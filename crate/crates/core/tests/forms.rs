mod common;

use common::{rng, word, Frame};
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use transverse_cd::exact::{q, qr, Q};
use transverse_cd::forms::{
    cd_coefficients, check_bochner, check_cd, check_commutation_hypothesis, check_improved_bounds, evaluate_forms,
    falsify_cd, nu_grid, CDParams, FormEngine,
};
use transverse_cd::ncdiff::{random_jet, Jet};
use transverse_cd::structures::{catalog_model, parse_model_spec, random_step2, StructureConstants};

fn model(spec: &str) -> StructureConstants {
    catalog_model(&parse_model_spec(spec).unwrap()).unwrap()
}

fn params(s: &str) -> CDParams {
    CDParams::parse(s).unwrap()
}

fn h1_jet(entries: &[(&str, Q)]) -> Jet {
    Jet::from_entries(2, 1, 3, entries.iter().map(|(w, v)| (word(w), v.clone()))).unwrap()
}

/// Forms from the jet engine against the same forms computed by differentiating a
/// polynomial in exponential coordinates.
#[test]
fn forms_match_coordinate_oracle() {
    let models: Vec<StructureConstants> = ["heisenberg:1", "heisenberg:2", "quaternionic_heisenberg"]
        .iter()
        .map(|s| model(s))
        .chain((0..2).map(|s| random_step2(3, 2, s).unwrap()))
        .collect();
    for (k, sc) in models.iter().enumerate() {
        let frame = Frame { sc };
        let engine = FormEngine::new(sc).unwrap();
        let (hs, vs) = (frame.horizontal(), frame.vertical());
        for trial in 0..3 {
            let mut r = rng(1000 * k as u64 + trial);
            let f = frame.random_poly(&mut r, 3);
            let p = frame.random_point(&mut r);
            let jet = frame.jet(&f, &p, 3);
            let v = engine.evaluate(&jet).unwrap();
            let at = |g: &common::Poly| g.eval(&p);
            assert_eq!(v.gamma, at(&frame.bilinear(&hs, &f, &f)));
            assert_eq!(v.gamma_z, at(&frame.bilinear(&vs, &f, &f)));
            assert_eq!(v.lf, at(&frame.laplacian(&f)));
            assert_eq!(v.gamma2, at(&frame.iterated(&hs, &f)), "Γ₂ on {}", sc.name);
            assert_eq!(v.gamma2_z, at(&frame.iterated(&vs, &f)), "Γ₂^Z on {}", sc.name);

            let gf = frame.bilinear(&hs, &f, &f);
            let gzf = frame.bilinear(&vs, &f, &f);
            let (gg, ggz) = engine.gamma_of_gamma(&jet).unwrap();
            assert_eq!(gg, at(&frame.bilinear(&hs, &gf, &gf)));
            assert_eq!(ggz, at(&frame.bilinear(&hs, &gzf, &gzf)));

            let comm = at(&frame.bilinear(&hs, &f, &gzf)) - at(&frame.bilinear(&vs, &f, &gf));
            assert_eq!(comm, q(0));
            assert_eq!(engine.commutation(&jet).unwrap(), comm);
        }
    }
}

#[test]
fn documented_values_on_h1() {
    let h1 = model("heisenberg:1");
    let v = evaluate_forms(&h1_jet(&[("X1", q(3)), ("X2", q(4))]), &h1).unwrap();
    assert_eq!((v.gamma, v.gamma_z, v.t), (q(25), q(0), q(25)));

    let w = h1_jet(&[("X1", q(1)), ("X2Z1", q(1))]);
    let v = evaluate_forms(&w, &h1).unwrap();
    assert_eq!((v.gamma2.clone(), v.gamma2_z.clone()), (q(-2), q(1)));
    let p = params("0,1/2,1,2");
    assert_eq!(check_cd(&w, &h1, &p, &q(1)).unwrap(), q(0));
    // Residual along ν is −2 + ν + 1/ν, minimal at ν = 1.
    for nu in [qr(1, 2), q(2), q(5)] {
        let expect = q(-2) + &nu + q(1) / &nu;
        assert_eq!(check_cd(&w, &h1, &p, &nu).unwrap(), expect);
    }

    let z = h1_jet(&[("Z1", q(1)), ("X1Z1", q(1))]);
    let (_, res2) = check_improved_bounds(&z, &h1, &p, &q(1)).unwrap();
    assert_eq!(res2, q(0));
}

#[test]
fn zero_jet_gives_zero() {
    for spec in ["heisenberg:1", "su2", "quaternionic_heisenberg"] {
        let sc = model(spec);
        let jet = Jet::zero(sc.d(), sc.h(), 3);
        assert_eq!(check_bochner(&jet, &sc).unwrap(), (q(0), q(0)));
        assert_eq!(check_cd(&jet, &sc, &params("1,1,1,1"), &q(3)).unwrap(), q(0));
        if spec != "su2" {
            assert_eq!(check_improved_bounds(&jet, &sc, &params("0,1/2,1,2"), &q(1)).unwrap(), (q(0), q(0)));
        }
    }
}

#[test]
fn commutation_hypothesis_needs_killing_deltas() {
    for spec in ["heisenberg:1", "su2", "g_rho1:-3/4"] {
        let sc = model(spec);
        for s in 0..20 {
            assert_eq!(check_commutation_hypothesis(&random_jet(2, 1, 2, s, 6), &sc).unwrap(), q(0));
        }
    }
    let mut bad = model("heisenberg:1");
    bad.set_delta(0, 0, 0, q(1));
    let nonzero = (0..20).filter(|&s| !check_commutation_hypothesis(&random_jet(2, 1, 2, s, 6), &bad).unwrap().is_zero()).count();
    assert!(nonzero > 10);
}

#[test]
fn falsifier_examples() {
    let h1 = model("heisenberg:1");
    // Hand witness for the dimension: X²f = Y²f = 1.
    let j = h1_jet(&[("X1X1", q(1)), ("X2X2", q(1))]);
    assert!(check_cd(&j, &h1, &params("0,1/2,1,19/10"), &q(1)).unwrap().is_negative());
    for bad in ["0,1/2,1,19/10", "0,3/5,1,2", "1/10,1/2,1,2"] {
        let c = falsify_cd(&h1, &params(bad), 10_000, 7).unwrap().expect(bad);
        assert!(c.residual.is_negative());
        assert_eq!(check_cd(&c.jet, &h1, &params(bad), &c.nu).unwrap(), c.residual);
    }
    assert!(falsify_cd(&h1, &params("0,1/2,1,2"), 2_000, 7).unwrap().is_none());
}

fn catalog_params() -> Vec<(StructureConstants, CDParams)> {
    vec![
        (model("heisenberg:1"), params("0,1/2,1,2")),
        (model("heisenberg:2"), params("0,1,1,4")),
        (model("quaternionic_heisenberg"), params("0,1,3,4")),
        (model("su2"), params("1,1/2,1,2")),
        (model("sl2"), params("-1,1/2,1,2")),
        (model("g_rho1:7/3"), params("7/3,1/2,1,2")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn bochner_residuals_vanish(num in -40i64..40, den in 1i64..12, seed in 0u64..1_000_000) {
        let sc = catalog_model(&parse_model_spec(&format!("g_rho1:{num}/{den}")).unwrap()).unwrap();
        let jet = random_jet(2, 1, 3, seed, 9);
        prop_assert_eq!(check_bochner(&jet, &sc).unwrap(), (q(0), q(0)));
        let r = random_step2(3 + (seed % 2) as usize, 2, seed).unwrap();
        let jet = random_jet(r.d(), r.h(), 3, seed ^ 0x55, 9);
        prop_assert_eq!(check_bochner(&jet, &r).unwrap(), (q(0), q(0)));
    }

    #[test]
    fn forms_scale_homogeneously(seed in 0u64..1_000_000, ln in -7i64..=7, ld in 1i64..=5, model_ix in 0usize..6) {
        let (sc, p) = &catalog_params()[model_ix];
        let lambda = qr(ln, ld);
        let jet = random_jet(sc.d(), sc.h(), 3, seed, 8);
        let a = evaluate_forms(&jet, sc).unwrap();
        let b = evaluate_forms(&jet.scaled(&lambda), sc).unwrap();
        let l2 = &lambda * &lambda;
        for (x, y) in [
            (&a.gamma, &b.gamma), (&a.gamma_z, &b.gamma_z), (&a.gamma2, &b.gamma2), (&a.gamma2_z, &b.gamma2_z),
            (&a.hess_h_sq, &b.hess_h_sq), (&a.hess_hv_sq, &b.hess_hv_sq), (&a.r, &b.r), (&a.s, &b.s), (&a.t, &b.t),
        ] {
            prop_assert_eq!(x * &l2, y.clone());
        }
        prop_assert_eq!(&a.lf * &lambda, b.lf.clone());
        let nu = qr(3, 7);
        prop_assert_eq!(check_cd(&jet, sc, p, &nu).unwrap() * &l2, check_cd(&jet.scaled(&lambda), sc, p, &nu).unwrap());
        // Nonnegative forms and the vertical Bochner identity.
        prop_assert!(!a.gamma.is_negative() && !a.gamma_z.is_negative() && !a.t.is_negative());
        prop_assert!(!a.hess_h_sq.is_negative() && !a.hess_hv_sq.is_negative());
        prop_assert_eq!(a.gamma2_z, a.hess_hv_sq);
    }

    #[test]
    fn residual_is_a_plus_b_nu_plus_c_over_nu(seed in 0u64..1_000_000, model_ix in 0usize..6) {
        let (sc, p) = &catalog_params()[model_ix];
        let jet = random_jet(sc.d(), sc.h(), 3, seed, 8);
        // Solve for A, B, C from ν = 1, 2, 1/2 and compare with a fourth value.
        let r = |nu: Q| check_cd(&jet, sc, p, &nu).unwrap();
        let (r1, r2, rh) = (r(q(1)), r(q(2)), r(qr(1, 2)));
        // r2 − rh = (3/2)(B − C), r1 = A + B + C, r2 + rh = 2A + (5/2)(B + C).
        let b_minus_c = (&r2 - &rh) * qr(2, 3);
        let b_plus_c = (&r2 + &rh - q(2) * &r1) * q(2);
        let b = (&b_plus_c + &b_minus_c) / q(2);
        let c = (&b_plus_c - &b_minus_c) / q(2);
        let a = &r1 - &b - &c;
        prop_assert!(!b.is_negative() && !c.is_negative());
        let v = evaluate_forms(&jet, sc).unwrap();
        prop_assert_eq!(cd_coefficients(&v, p), (a.clone(), b.clone(), c.clone()));
        let nu = qr(5, 3);
        prop_assert_eq!(r(nu.clone()), &a + &b * &nu + &c / &nu);
    }

    #[test]
    fn catalog_constants_hold_on_the_grid(seed in 0u64..1_000_000, model_ix in 0usize..6) {
        let (sc, p) = &catalog_params()[model_ix];
        let engine = FormEngine::new(sc).unwrap();
        let jet = engine.random_jet(seed, 10);
        let v = engine.evaluate(&jet).unwrap();
        let (a, b, c) = cd_coefficients(&v, p);
        for nu in nu_grid() {
            prop_assert!(!(&a + &b * &nu + &c / &nu).is_negative());
        }
    }
}
