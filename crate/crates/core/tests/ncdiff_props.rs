mod common;

use common::{rng, word, Frame};
use num_traits::Zero;
use proptest::prelude::*;
use std::collections::BTreeMap;
use transverse_cd::exact::{q, qr, Q};
use transverse_cd::ncdiff::{
    jet_eval, random_jet, reduce, verify_vertical_commutation, FrameWord, Jet, NCExpression, Symbol,
};
use transverse_cd::structures::{catalog_model, parse_model_spec, random_step2, StructureConstants};

fn catalog() -> Vec<StructureConstants> {
    ["g_rho1:3/2", "g_rho1:-2/5", "su2", "sl2", "heisenberg:1", "heisenberg:2", "quaternionic_heisenberg", "random_step2:3:2:11"]
        .iter()
        .map(|s| catalog_model(&parse_model_spec(s).unwrap()).unwrap())
        .collect()
}

fn all_words(sc: &StructureConstants, len: usize) -> Vec<FrameWord> {
    let syms = sc.symbols();
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out.into_iter().flat_map(|w: Vec<Symbol>| syms.iter().map(move |&s| [w.clone(), vec![s]].concat())).collect();
    }
    out.into_iter().map(FrameWord).collect()
}

/// Rewrites the rightmost out-of-order pair first: a different strategy from the library.
fn reduce_rightmost(w: &[Symbol], sc: &StructureConstants, out: &mut BTreeMap<FrameWord, Q>, c: Q) {
    match w.windows(2).rposition(|p| p[0] > p[1]) {
        None => {
            let slot = out.entry(FrameWord(w.to_vec())).or_insert_with(Q::zero);
            *slot += c;
        }
        Some(k) => {
            let mut swapped = w.to_vec();
            swapped.swap(k, k + 1);
            reduce_rightmost(&swapped, sc, out, c.clone());
            for (s, b) in sc.bracket(w[k], w[k + 1]) {
                let shorter: Vec<Symbol> = w[..k].iter().copied().chain([s]).chain(w[k + 2..].iter().copied()).collect();
                reduce_rightmost(&shorter, sc, out, &c * &b);
            }
        }
    }
}

fn as_map(e: &NCExpression) -> BTreeMap<FrameWord, Q> {
    e.terms().map(|(w, c)| (w.clone(), c.clone())).collect()
}

#[test]
fn swaps_on_catalog_models() {
    let h1 = catalog_model(&parse_model_spec("heisenberg:1").unwrap()).unwrap();
    let yx = reduce(&NCExpression::word(word("X2X1")), &h1).unwrap();
    let expect = NCExpression::word(word("X1X2")).minus(&NCExpression::word(word("Z1")));
    assert_eq!(yx, expect);

    let rho = qr(-7, 3);
    let g = catalog_model(&parse_model_spec("g_rho1:-7/3").unwrap()).unwrap();
    let zx = reduce(&NCExpression::word(word("Z1X1")), &g).unwrap();
    let expect = NCExpression::word(word("X1Z1")).plus(&NCExpression::term(word("X2"), rho));
    assert_eq!(zx, expect);
}

#[test]
fn jet_eval_examples() {
    let h1 = catalog_model(&parse_model_spec("heisenberg:1").unwrap()).unwrap();
    let jet = Jet::from_entries(2, 1, 3, [(word("X1"), qr(3, 2))]).unwrap();
    assert_eq!(jet_eval(&NCExpression::word(word("X1")), &jet, &h1).unwrap(), qr(3, 2));
    assert_eq!(jet_eval(&NCExpression::zero(), &jet, &h1).unwrap(), q(0));

    let g1 = catalog_model(&parse_model_spec("g_rho1:1").unwrap()).unwrap();
    let jet = random_jet(2, 1, 3, 5, 9);
    let comm = NCExpression::word(word("Z1X1")).minus(&NCExpression::word(word("X1Z1")));
    assert_eq!(jet_eval(&comm, &jet, &g1).unwrap(), jet.get(&word("X2")).unwrap().clone());
}

#[test]
fn random_jets_are_deterministic_and_sized() {
    assert_eq!(random_jet(2, 1, 3, 42, 7), random_jet(2, 1, 3, 42, 7));
    assert_eq!(random_jet(4, 3, 1, 1, 7).values().len(), 1 + 4 + 3);
    let any_x1 = (0..1000).any(|s| !random_jet(2, 1, 1, s, 3).get(&word("X1")).unwrap().is_zero());
    assert!(any_x1);
    // Values stay in the generator's support.
    for s in 0..50 {
        for v in random_jet(2, 1, 3, s, 4).values() {
            assert!(v.numer().magnitude() <= &4u32.into() && v.denom() <= &4.into());
        }
    }
}

#[test]
fn confluence_on_all_length_three_words() {
    for sc in catalog() {
        for w in all_words(&sc, 3) {
            let lib = reduce(&NCExpression::word(w.clone()), &sc).unwrap();
            let mut alt = BTreeMap::new();
            reduce_rightmost(&w.0, &sc, &mut alt, q(1));
            alt.retain(|_, c| !c.is_zero());
            assert_eq!(as_map(&lib), alt, "{} on {}", w, sc.name);
        }
    }
}

#[test]
fn bracket_recovery() {
    for sc in catalog() {
        let d = sc.d();
        for i in 0..d {
            for j in i + 1..d {
                let xi = NCExpression::symbol(Symbol::H(i));
                let xj = NCExpression::symbol(Symbol::H(j));
                let got = reduce(&xi.compose(&xj).minus(&xj.compose(&xi)), &sc).unwrap();
                let mut expect = NCExpression::zero();
                for l in 0..d {
                    expect.add_term(FrameWord(vec![Symbol::H(l)]), sc.omega(l, i, j).clone());
                }
                for m in 0..sc.h() {
                    expect.add_term(FrameWord(vec![Symbol::V(m)]), sc.gamma(m, i, j).clone());
                }
                assert_eq!(got, expect, "[X{}, X{}] on {}", i + 1, j + 1, sc.name);
            }
        }
    }
}

#[test]
fn sub_laplacian_commutes_with_vertical_fields() {
    for sc in catalog() {
        for r in verify_vertical_commutation(&sc).unwrap() {
            assert!(r.is_zero(), "{}: {}", sc.name, r);
        }
    }
    // Breaking the Killing relation with δ¹₁₁ = 1 leaves an X₁ component.
    let mut bad = catalog_model(&parse_model_spec("heisenberg:1").unwrap()).unwrap();
    bad.set_delta(0, 0, 0, q(1));
    let r = &verify_vertical_commutation(&bad).unwrap()[0];
    assert!(!r.is_zero());
    assert!(r.terms().any(|(w, _)| w.0.contains(&Symbol::H(0))));
}

/// Every word, reduced and paired with the jet of a polynomial, equals the word applied
/// to the polynomial in coordinates.
#[test]
fn normal_forms_agree_with_coordinate_fields() {
    let models: Vec<StructureConstants> = ["heisenberg:1", "heisenberg:2", "quaternionic_heisenberg"]
        .iter()
        .map(|s| catalog_model(&parse_model_spec(s).unwrap()).unwrap())
        .chain((0..3).map(|s| random_step2(3, 2, s).unwrap()))
        .collect();
    for (k, sc) in models.iter().enumerate() {
        let frame = Frame { sc };
        let mut r = rng(100 + k as u64);
        let f = frame.random_poly(&mut r, 3);
        let p = frame.random_point(&mut r);
        let jet = frame.jet(&f, &p, 3);
        for len in 1..=3 {
            for w in all_words(sc, len) {
                let got = jet_eval(&NCExpression::word(w.clone()), &jet, sc).unwrap();
                assert_eq!(got, frame.apply_word(&w, &f).eval(&p), "{} on {}", w, sc.name);
            }
        }
    }
}

fn arb_expr(syms: usize) -> impl Strategy<Value = Vec<(Vec<usize>, i64, i64)>> {
    prop::collection::vec((prop::collection::vec(0..syms, 0..=3), -9i64..=9, 1i64..=5), 0..6)
}

fn build(sc: &StructureConstants, raw: &[(Vec<usize>, i64, i64)]) -> NCExpression {
    let syms = sc.symbols();
    let mut e = NCExpression::zero();
    for (idx, n, d) in raw {
        e.add_term(FrameWord(idx.iter().map(|&k| syms[k]).collect()), qr(*n, *d));
    }
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduce_is_idempotent_linear_and_length_preserving(
        model in 0usize..8,
        a in arb_expr(3), b in arb_expr(3),
        (ln, ld) in (-6i64..=6, 1i64..=4), (mn, md) in (-6i64..=6, 1i64..=4),
    ) {
        let sc = &catalog()[model];
        let n = sc.symbols().len();
        let clip = |raw: Vec<(Vec<usize>, i64, i64)>| -> Vec<(Vec<usize>, i64, i64)> {
            raw.into_iter().map(|(w, x, y)| (w.into_iter().map(|k| k % n).collect(), x, y)).collect()
        };
        let (e1, e2) = (build(sc, &clip(a)), build(sc, &clip(b)));
        let r1 = reduce(&e1, sc).unwrap();
        let r2 = reduce(&e2, sc).unwrap();
        prop_assert!(r1.is_normal());
        prop_assert_eq!(reduce(&r1, sc).unwrap(), r1.clone());
        prop_assert!(r1.max_len() <= e1.max_len());
        let (l, m) = (qr(ln, ld), qr(mn, md));
        let combo = e1.scale(&l).plus(&e2.scale(&m));
        prop_assert_eq!(reduce(&combo, sc).unwrap(), r1.scale(&l).plus(&r2.scale(&m)));
        prop_assert!(r1.terms().all(|(_, c)| !c.is_zero()));
    }
}
