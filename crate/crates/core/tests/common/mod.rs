//! Coordinate oracle for step-2 Carnot groups: the frame fields act on polynomials in
//! exponential coordinates, `X_i = ∂_{x_i} − ½ Σ γ^m_il x_l ∂_{z_m}` and `Z_m = ∂_{z_m}`.
//! Nothing here goes through the rewriting engine.
#![allow(dead_code)]

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use transverse_cd::exact::{q, Q};
use transverse_cd::ncdiff::{FrameWord, Jet, JetLayout, Symbol};
use transverse_cd::structures::StructureConstants;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub terms: BTreeMap<Vec<u32>, Q>,
}

impl Poly {
    fn add_term(&mut self, e: Vec<u32>, c: Q) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e.clone()).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn plus(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn scale(&self, c: &Q) -> Poly {
        let mut r = Poly::default();
        for (e, v) in &self.terms {
            r.add_term(e.clone(), v * c);
        }
        r
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::default();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                r.add_term(e, c1 * c2);
            }
        }
        r
    }

    pub fn deriv(&self, k: usize) -> Poly {
        let mut r = Poly::default();
        for (e, c) in &self.terms {
            if e[k] > 0 {
                let mut e2 = e.clone();
                e2[k] -= 1;
                r.add_term(e2, c * q(e[k] as i64));
            }
        }
        r
    }

    /// Multiplication by the coordinate `k`.
    pub fn times_var(&self, k: usize) -> Poly {
        let mut r = Poly::default();
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2[k] += 1;
            r.add_term(e2, c.clone());
        }
        r
    }

    pub fn eval(&self, p: &[Q]) -> Q {
        let mut s = Q::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (x, &k) in p.iter().zip(e) {
                for _ in 0..k {
                    m *= x;
                }
            }
            s += m;
        }
        s
    }
}

pub struct Frame<'a> {
    pub sc: &'a StructureConstants,
}

impl Frame<'_> {
    fn n(&self) -> usize {
        self.sc.d() + self.sc.h()
    }

    pub fn apply(&self, s: Symbol, f: &Poly) -> Poly {
        let d = self.sc.d();
        match s {
            Symbol::V(m) => f.deriv(d + m),
            Symbol::H(i) => {
                let mut r = f.deriv(i);
                for m in 0..self.sc.h() {
                    let dz = f.deriv(d + m);
                    for l in 0..d {
                        let g = self.sc.gamma(m, i, l);
                        if !g.is_zero() {
                            r = r.plus(&dz.times_var(l).scale(&(-g / q(2))));
                        }
                    }
                }
                r
            }
        }
    }

    /// Applies `w = s_1 ⋯ s_k` as `s_1(⋯(s_k f))`.
    pub fn apply_word(&self, w: &FrameWord, f: &Poly) -> Poly {
        w.0.iter().rev().fold(f.clone(), |acc, &s| self.apply(s, &acc))
    }

    pub fn horizontal(&self) -> Vec<Symbol> {
        (0..self.sc.d()).map(Symbol::H).collect()
    }

    pub fn vertical(&self) -> Vec<Symbol> {
        (0..self.sc.h()).map(Symbol::V).collect()
    }

    /// `Σ_s (s f)(s g)` over the given symbols.
    pub fn bilinear(&self, syms: &[Symbol], f: &Poly, g: &Poly) -> Poly {
        syms.iter().fold(Poly::default(), |acc, &s| acc.plus(&self.apply(s, f).mul(&self.apply(s, g))))
    }

    /// `L = Σ X_i²`; ω = 0 on Carnot groups so there is no drift.
    pub fn laplacian(&self, f: &Poly) -> Poly {
        self.horizontal().iter().fold(Poly::default(), |acc, &s| acc.plus(&self.apply(s, &self.apply(s, f))))
    }

    /// `½ L B(f,f) − B(f, Lf)` for the bilinear form over `syms`.
    pub fn iterated(&self, syms: &[Symbol], f: &Poly) -> Poly {
        let half = Q::new(1.into(), 2.into());
        let lf = self.laplacian(f);
        self.laplacian(&self.bilinear(syms, f, f)).scale(&half).plus(&self.bilinear(syms, f, &lf).scale(&-Q::one()))
    }

    /// The order-`order` jet of `f` at `p`.
    pub fn jet(&self, f: &Poly, p: &[Q], order: usize) -> Jet {
        let layout = JetLayout::shared(self.sc.d(), self.sc.h(), order);
        let values = layout.words().iter().map(|w| self.apply_word(w, f).eval(p)).collect();
        Jet::from_values(layout, values)
    }

    pub fn random_poly(&self, rng: &mut ChaCha8Rng, degree: u32) -> Poly {
        let n = self.n();
        let mut f = Poly::default();
        let mut exps = vec![vec![]];
        for _ in 0..n {
            exps = exps
                .into_iter()
                .flat_map(|e: Vec<u32>| (0..=degree).map(move |k| [e.clone(), vec![k]].concat()))
                .collect();
        }
        // Sparser in high dimension so products stay small.
        let density = if n > 4 { 0.25 } else { 0.6 };
        for e in exps.into_iter().filter(|e| e.iter().sum::<u32>() <= degree) {
            if rng.gen_bool(density) {
                f.add_term(e, Q::new(rng.gen_range(-5i64..=5).into(), rng.gen_range(1i64..=4).into()));
            }
        }
        f
    }

    pub fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<Q> {
        (0..self.n()).map(|_| Q::new(rng.gen_range(-3i64..=3).into(), rng.gen_range(1i64..=3).into())).collect()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn word(s: &str) -> FrameWord {
    FrameWord::parse(s).unwrap_or_else(|| panic!("bad word {s}"))
}
