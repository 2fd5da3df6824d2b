use super::{AlgebraError, FrameWord, Symbol};
use crate::exact::{format_rational, Q};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Enumeration of the normal-form words of length `<= order`, shortest first.
///
/// Because words are listed by length, the layout of a lower order is a prefix of the
/// layout of a higher order with the same `(d, h)`.
#[derive(Debug)]
pub struct JetLayout {
    d: usize,
    h: usize,
    order: usize,
    words: Vec<FrameWord>,
    index: HashMap<FrameWord, usize>,
}

impl JetLayout {
    fn build(d: usize, h: usize, order: usize) -> Self {
        let symbols: Vec<Symbol> = (0..d).map(Symbol::H).chain((0..h).map(Symbol::V)).collect();
        let mut words = vec![FrameWord::empty()];
        let mut level: Vec<(Vec<Symbol>, usize)> = vec![(Vec::new(), 0)];
        for _ in 0..order {
            let mut next = Vec::new();
            for (w, start) in &level {
                for (k, s) in symbols.iter().enumerate().skip(*start) {
                    let mut v = w.clone();
                    v.push(*s);
                    next.push((v, k));
                }
            }
            words.extend(next.iter().map(|(v, _)| FrameWord(v.clone())));
            level = next;
        }
        let index = words.iter().enumerate().map(|(k, w)| (w.clone(), k)).collect();
        JetLayout { d, h, order, words, index }
    }

    /// Shared layout for `(d, h, order)`; built once per process.
    pub fn shared(d: usize, h: usize, order: usize) -> Arc<JetLayout> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize, usize), Arc<JetLayout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut guard = cache.lock().expect("layout cache poisoned");
        guard.entry((d, h, order)).or_insert_with(|| Arc::new(JetLayout::build(d, h, order))).clone()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[FrameWord] {
        &self.words
    }

    pub fn index_of(&self, w: &FrameWord) -> Option<usize> {
        self.index.get(w).copied()
    }
}

/// Values of all normal-form derivatives of an abstract function at one point.
#[derive(Clone, Debug)]
pub struct Jet {
    layout: Arc<JetLayout>,
    values: Vec<Q>,
    integer: OnceLock<Option<IntegerForm>>,
}

/// `values[k] = numerators[k] / denominator` with all parts fitting in `i128`.
#[derive(Clone, Debug)]
pub(crate) struct IntegerForm {
    pub numerators: Vec<i128>,
    pub denominator: BigInt,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.d() == other.d() && self.h() == other.h() && self.order() == other.order() && self.values == other.values
    }
}

impl Eq for Jet {}

impl Jet {
    pub fn zero(d: usize, h: usize, order: usize) -> Jet {
        let layout = JetLayout::shared(d, h, order);
        let values = vec![Q::zero(); layout.len()];
        Jet { layout, values, integer: OnceLock::new() }
    }

    /// Jet with the listed entries and zero elsewhere.
    pub fn from_entries<I>(d: usize, h: usize, order: usize, entries: I) -> Result<Jet, AlgebraError>
    where
        I: IntoIterator<Item = (FrameWord, Q)>,
    {
        let mut jet = Jet::zero(d, h, order);
        for (w, v) in entries {
            jet.set(&w, v)?;
        }
        Ok(jet)
    }

    pub fn from_values(layout: Arc<JetLayout>, values: Vec<Q>) -> Jet {
        assert_eq!(layout.len(), values.len(), "jet values must match the layout");
        Jet { layout, values, integer: OnceLock::new() }
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    pub fn d(&self) -> usize {
        self.layout.d
    }

    pub fn h(&self) -> usize {
        self.layout.h
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn get(&self, w: &FrameWord) -> Option<&Q> {
        self.layout.index_of(w).map(|k| &self.values[k])
    }

    pub fn set(&mut self, w: &FrameWord, v: Q) -> Result<(), AlgebraError> {
        if !w.is_normal() {
            return Err(AlgebraError::NotNormalForm(w.to_string()));
        }
        if w.len() > self.order() {
            return Err(AlgebraError::OrderOverflow { length: w.len(), limit: self.order() });
        }
        let k = self.layout.index_of(w).ok_or_else(|| AlgebraError::NotNormalForm(w.to_string()))?;
        self.values[k] = v;
        self.integer = OnceLock::new();
        Ok(())
    }

    /// Every value multiplied by `lambda`.
    pub fn scaled(&self, lambda: &Q) -> Jet {
        Jet::from_values(self.layout.clone(), self.values.iter().map(|v| v * lambda).collect())
    }

    /// `(word, value)` pairs with nonzero value, in layout order.
    pub fn nonzero_entries(&self) -> Vec<(String, String)> {
        self.layout
            .words
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| !v.is_zero())
            .map(|(w, v)| (w.to_string(), format_rational(v)))
            .collect()
    }

    pub(crate) fn integer_form(&self) -> Option<&IntegerForm> {
        self.integer
            .get_or_init(|| {
                let den = crate::exact::common_denominator(&self.values);
                let numerators = self
                    .values
                    .iter()
                    .map(|v| (v.numer() * (&den / v.denom())).to_i128())
                    .collect::<Option<Vec<_>>>()?;
                Some(IntegerForm { numerators, denominator: den })
            })
            .as_ref()
    }
}

/// Independent rational values `n/q`, `n ∈ [−M, M]`, `q ∈ [1, M]`, for every normal-form word
/// of length `<= order`. Deterministic in `seed`.
pub fn random_jet(d: usize, h: usize, order: usize, seed: u64, magnitude: u32) -> Jet {
    let layout = JetLayout::shared(d, h, order);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = i64::from(magnitude.max(1));
    let values = (0..layout.len())
        .map(|_| {
            let n: i64 = rng.gen_range(-m..=m);
            let q: i64 = rng.gen_range(1..=m);
            Q::new(n.into(), q.into())
        })
        .collect();
    Jet::from_values(layout, values)
}
