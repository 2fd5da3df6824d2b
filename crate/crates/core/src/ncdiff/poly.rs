//! Commutative polynomials in the derivatives of one function.
//!
//! [`DiffPoly`] keeps factors as raw words so frame fields can act by the Leibniz rule;
//! [`JetPoly`] is the same polynomial after every factor has been reduced to normal form,
//! ready for fast exact evaluation on many jets.

use super::{AlgebraError, FrameWord, Jet, JetLayout, NCExpression, Reducer, Symbol};
use crate::exact::Q;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// `Σ c · Π (w_k f)` with each monomial stored as a sorted list of words.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiffPoly {
    terms: BTreeMap<Vec<FrameWord>, Q>,
}

impl DiffPoly {
    pub fn zero() -> Self {
        DiffPoly::default()
    }

    pub fn constant(c: Q) -> Self {
        let mut p = DiffPoly::zero();
        p.add_monomial(Vec::new(), c);
        p
    }

    /// The linear polynomial `w f`.
    pub fn word(w: FrameWord) -> Self {
        let mut p = DiffPoly::zero();
        p.add_monomial(vec![w], Q::one());
        p
    }

    /// `Σ c_w (w f)` for an operator expression.
    pub fn apply_expr(e: &NCExpression) -> Self {
        let mut p = DiffPoly::zero();
        for (w, c) in e.terms() {
            p.add_monomial(vec![w.clone()], c.clone());
        }
        p
    }

    pub fn symbol(s: Symbol) -> Self {
        DiffPoly::word(FrameWord(vec![s]))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_monomial(&mut self, mut factors: Vec<FrameWord>, c: Q) {
        if c.is_zero() {
            return;
        }
        factors.sort();
        let slot = self.terms.entry(factors).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add_scaled(&mut self, other: &DiffPoly, c: &Q) {
        for (m, a) in &other.terms {
            self.add_monomial(m.clone(), a * c);
        }
    }

    pub fn plus(&self, other: &DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        out.add_scaled(other, &Q::one());
        out
    }

    pub fn minus(&self, other: &DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        out.add_scaled(other, &-Q::one());
        out
    }

    pub fn scale(&self, c: &Q) -> DiffPoly {
        let mut out = DiffPoly::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn mul(&self, other: &DiffPoly) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m1, a) in &self.terms {
            for (m2, b) in &other.terms {
                let mut f = m1.clone();
                f.extend(m2.iter().cloned());
                out.add_monomial(f, a * b);
            }
        }
        out
    }

    /// Action of the frame field `s` (Leibniz rule).
    pub fn apply(&self, s: Symbol) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m, c) in &self.terms {
            for k in 0..m.len() {
                let mut f = m.clone();
                f[k] = m[k].prepend(s);
                out.add_monomial(f, c.clone());
            }
        }
        out
    }

    /// Longest word appearing in any factor.
    pub fn max_word_len(&self) -> usize {
        self.terms.keys().flat_map(|m| m.iter().map(FrameWord::len)).max().unwrap_or(0)
    }

    /// Reduces every factor to normal form and expands into jet coordinates of `layout`.
    pub fn lower(&self, reducer: &mut Reducer<'_>, layout: &Arc<JetLayout>) -> Result<JetPoly, AlgebraError> {
        let mut cache: HashMap<FrameWord, Vec<(u32, Q)>> = HashMap::new();
        let mut acc: HashMap<Vec<u32>, Q> = HashMap::new();
        for (factors, c) in &self.terms {
            let mut partial: Vec<(Vec<u32>, Q)> = vec![(Vec::new(), c.clone())];
            for w in factors {
                if !cache.contains_key(w) {
                    let nf = reducer.normal_form(w)?;
                    let mut lin = Vec::with_capacity(nf.len());
                    for (nw, a) in nf.terms() {
                        let idx = layout
                            .index_of(nw)
                            .ok_or(AlgebraError::OrderOverflow { length: nw.len(), limit: layout.order() })?;
                        lin.push((idx as u32, a.clone()));
                    }
                    cache.insert(w.clone(), lin);
                }
                let lin = &cache[w];
                let mut next = Vec::with_capacity(partial.len() * lin.len());
                for (idx, a) in &partial {
                    for (k, b) in lin {
                        let mut v = idx.clone();
                        v.push(*k);
                        next.push((v, a * b));
                    }
                }
                partial = next;
            }
            for (mut idx, a) in partial {
                idx.sort_unstable();
                *acc.entry(idx).or_insert_with(Q::zero) += a;
            }
        }
        let mut terms: Vec<(Vec<u32>, Q)> = acc.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        terms.sort();
        Ok(JetPoly::new(terms))
    }
}

/// Polynomial in jet coordinates with exact coefficients.
#[derive(Clone, Debug)]
pub struct JetPoly {
    terms: Vec<(Vec<u32>, Q)>,
    /// Common degree of all terms, if homogeneous.
    degree: Option<usize>,
    /// Integer coefficients `c · coef_den` for the fast path.
    int_coefs: Option<Vec<i128>>,
    coef_den: BigInt,
    max_index: Option<u32>,
}

impl JetPoly {
    fn new(terms: Vec<(Vec<u32>, Q)>) -> JetPoly {
        let degree = match terms.first() {
            None => Some(0),
            Some((m, _)) => terms.iter().all(|(v, _)| v.len() == m.len()).then_some(m.len()),
        };
        let coef_den = crate::exact::common_denominator(terms.iter().map(|(_, c)| c));
        let int_coefs =
            terms.iter().map(|(_, c)| (c.numer() * (&coef_den / c.denom())).to_i128()).collect::<Option<Vec<_>>>();
        let max_index = terms.iter().flat_map(|(v, _)| v.iter().copied()).max();
        JetPoly { terms, degree, int_coefs, coef_den, max_index }
    }

    pub fn terms(&self) -> &[(Vec<u32>, Q)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Smallest jet length able to evaluate this polynomial.
    pub fn required_len(&self) -> usize {
        self.max_index.map_or(0, |m| m as usize + 1)
    }

    /// Exact value on `jet`. The jet's layout must extend the layout this was lowered on.
    pub fn eval(&self, jet: &Jet) -> Q {
        if let (Some(k), Some(coefs), Some(int)) = (self.degree, &self.int_coefs, jet.integer_form()) {
            if let Some(v) = self.eval_integer(coefs, &int.numerators) {
                let den = &self.coef_den * num_traits::pow(int.denominator.clone(), k);
                return Q::new(BigInt::from(v), den);
            }
        }
        let values = jet.values();
        let mut acc = Q::zero();
        for (idx, c) in &self.terms {
            let mut t = c.clone();
            for &k in idx {
                t *= &values[k as usize];
            }
            acc += t;
        }
        acc
    }

    fn eval_integer(&self, coefs: &[i128], nums: &[i128]) -> Option<i128> {
        let mut acc: i128 = 0;
        for ((idx, _), &c) in self.terms.iter().zip(coefs) {
            let mut t = c;
            for &k in idx {
                let n = nums[k as usize];
                if n == 0 {
                    t = 0;
                    break;
                }
                t = t.checked_mul(n)?;
            }
            acc = acc.checked_add(t)?;
        }
        Some(acc)
    }
}
