//! Words in the frame symbols, their rewriting to normal form, and pairing with jets.
//!
//! A word `s_1 s_2 … s_k` stands for the operator `s_1 ∘ s_2 ∘ … ∘ s_k`, so it acts on a
//! function by applying `s_k` first. Normal form: horizontal symbols first, each block
//! sorted by nondecreasing index.

mod jet;
mod poly;

pub use jet::{random_jet, Jet, JetLayout};
pub use poly::{DiffPoly, JetPoly};

use crate::exact::{format_rational, Q};
use crate::structures::{StructureConstants, StructureError};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use thiserror::Error;

pub const DEFAULT_ORDER_CAP: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("word of length {length} exceeds the order limit {limit}")]
    OrderOverflow { length: usize, limit: usize },
    #[error(transparent)]
    Index(#[from] StructureError),
    #[error("jet key {0} is not in normal form")]
    NotNormalForm(String),
    #[error("jet dimensions (d={jet_d}, h={jet_h}) do not match structure (d={d}, h={h})")]
    DimensionMismatch { jet_d: usize, jet_h: usize, d: usize, h: usize },
}

/// A frame symbol: `H(i)` is `X_{i+1}`, `V(m)` is `Z_{m+1}`.
///
/// The derived order puts every horizontal symbol before every vertical one, so a word
/// is in normal form exactly when it is sorted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    H(usize),
    V(usize),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::H(i) => write!(f, "X{}", i + 1),
            Symbol::V(m) => write!(f, "Z{}", m + 1),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrameWord(pub Vec<Symbol>);

impl FrameWord {
    pub fn empty() -> Self {
        FrameWord(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_normal(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }

    /// `s ∘ self`.
    pub fn prepend(&self, s: Symbol) -> FrameWord {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(s);
        v.extend_from_slice(&self.0);
        FrameWord(v)
    }

    pub fn concat(&self, other: &FrameWord) -> FrameWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        FrameWord(v)
    }

    /// Parses words such as `X1X2Z1`; `1` or the empty string is the empty word.
    pub fn parse(s: &str) -> Option<FrameWord> {
        let s = s.trim();
        if s.is_empty() || s == "1" {
            return Some(FrameWord::empty());
        }
        let mut out = Vec::new();
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let idx: usize = digits.parse().ok().filter(|&n: &usize| n >= 1)?;
            out.push(match c {
                'X' => Symbol::H(idx - 1),
                'Z' => Symbol::V(idx - 1),
                _ => return None,
            });
        }
        Some(FrameWord(out))
    }
}

impl fmt::Display for FrameWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl From<Vec<Symbol>> for FrameWord {
    fn from(v: Vec<Symbol>) -> Self {
        FrameWord(v)
    }
}

/// Finite rational combination of words; zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct NCExpression {
    terms: BTreeMap<FrameWord, Q>,
}

impl NCExpression {
    pub fn zero() -> Self {
        NCExpression::default()
    }

    pub fn word(w: FrameWord) -> Self {
        Self::term(w, Q::one())
    }

    pub fn symbol(s: Symbol) -> Self {
        Self::word(FrameWord(vec![s]))
    }

    pub fn term(w: FrameWord, c: Q) -> Self {
        let mut e = NCExpression::zero();
        e.add_term(w, c);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FrameWord, &Q)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, w: &FrameWord) -> Q {
        self.terms.get(w).cloned().unwrap_or_else(Q::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, w: FrameWord, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(w);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &NCExpression, c: &Q) {
        for (w, a) in &other.terms {
            self.add_term(w.clone(), a * c);
        }
    }

    pub fn scale(&self, c: &Q) -> NCExpression {
        let mut out = NCExpression::zero();
        out.add_scaled(self, c);
        out
    }

    pub fn plus(&self, other: &NCExpression) -> NCExpression {
        let mut out = self.clone();
        out.add_scaled(other, &Q::one());
        out
    }

    pub fn minus(&self, other: &NCExpression) -> NCExpression {
        let mut out = self.clone();
        out.add_scaled(other, &-Q::one());
        out
    }

    /// Operator composition `self ∘ other`.
    pub fn compose(&self, other: &NCExpression) -> NCExpression {
        let mut out = NCExpression::zero();
        for (w1, a) in &self.terms {
            for (w2, b) in &other.terms {
                out.add_term(w1.concat(w2), a * b);
            }
        }
        out
    }

    pub fn max_len(&self) -> usize {
        self.terms.keys().map(FrameWord::len).max().unwrap_or(0)
    }

    pub fn is_normal(&self) -> bool {
        self.terms.keys().all(FrameWord::is_normal)
    }
}

impl fmt::Display for NCExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (w, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if c.is_one() {
                write!(f, "{w}")?;
            } else {
                write!(f, "({})·{w}", format_rational(c))?;
            }
        }
        Ok(())
    }
}

/// Rewrites words to normal form, memoizing each word it has seen.
pub struct Reducer<'a> {
    sc: &'a StructureConstants,
    limit: usize,
    memo: HashMap<FrameWord, NCExpression>,
}

impl<'a> Reducer<'a> {
    /// Words may be at most `cap + 1` symbols long.
    pub fn new(sc: &'a StructureConstants, cap: usize) -> Self {
        Reducer { sc, limit: cap + 1, memo: HashMap::new() }
    }

    pub fn structure(&self) -> &StructureConstants {
        self.sc
    }

    pub fn reduce(&mut self, expr: &NCExpression) -> Result<NCExpression, AlgebraError> {
        let mut out = NCExpression::zero();
        for (w, c) in expr.terms() {
            let nf = self.normal_form(w)?;
            out.add_scaled(&nf, c);
        }
        Ok(out)
    }

    pub fn normal_form(&mut self, w: &FrameWord) -> Result<NCExpression, AlgebraError> {
        if let Some(e) = self.memo.get(w) {
            return Ok(e.clone());
        }
        if w.len() > self.limit {
            return Err(AlgebraError::OrderOverflow { length: w.len(), limit: self.limit });
        }
        for &s in &w.0 {
            self.sc.check_symbol(s)?;
        }
        let result = match w.0.windows(2).position(|p| p[0] > p[1]) {
            None => NCExpression::word(w.clone()),
            Some(k) => {
                // a b = b a + [a, b]
                let (a, b) = (w.0[k], w.0[k + 1]);
                let mut swapped = w.0.clone();
                swapped.swap(k, k + 1);
                let mut res = self.normal_form(&FrameWord(swapped))?;
                for (s, c) in self.sc.bracket(a, b) {
                    let mut shorter = Vec::with_capacity(w.len() - 1);
                    shorter.extend_from_slice(&w.0[..k]);
                    shorter.push(s);
                    shorter.extend_from_slice(&w.0[k + 2..]);
                    let sub = self.normal_form(&FrameWord(shorter))?;
                    res.add_scaled(&sub, &c);
                }
                res
            }
        };
        self.memo.insert(w.clone(), result.clone());
        Ok(result)
    }
}

/// Normal form of `expr` with the default order cap.
pub fn reduce(expr: &NCExpression, sc: &StructureConstants) -> Result<NCExpression, AlgebraError> {
    Reducer::new(sc, DEFAULT_ORDER_CAP).reduce(expr)
}

/// `Σ c_w · jet[w]` over the normal form of `expr`.
pub fn jet_eval(expr: &NCExpression, jet: &Jet, sc: &StructureConstants) -> Result<Q, AlgebraError> {
    check_dims(jet, sc)?;
    let cap = jet.order().max(expr.max_len());
    let nf = Reducer::new(sc, cap).reduce(expr)?;
    let mut acc = Q::zero();
    for (w, c) in nf.terms() {
        if w.len() > jet.order() {
            return Err(AlgebraError::OrderOverflow { length: w.len(), limit: jet.order() });
        }
        acc += c * jet.get(w).expect("normal-form word within jet order");
    }
    Ok(acc)
}

pub(crate) fn check_dims(jet: &Jet, sc: &StructureConstants) -> Result<(), AlgebraError> {
    if jet.d() != sc.d() || jet.h() != sc.h() {
        return Err(AlgebraError::DimensionMismatch { jet_d: jet.d(), jet_h: jet.h(), d: sc.d(), h: sc.h() });
    }
    Ok(())
}

/// The sub-Laplacian `L = Σ X_i² + X_0` as an operator expression.
pub fn sub_laplacian(sc: &StructureConstants) -> NCExpression {
    let mut l = NCExpression::zero();
    for (i, c) in sc.drift().into_iter().enumerate() {
        l.add_term(FrameWord(vec![Symbol::H(i), Symbol::H(i)]), Q::one());
        l.add_term(FrameWord(vec![Symbol::H(i)]), c);
    }
    l
}

/// `reduce(L Z_m − Z_m L)` for each vertical index `m`.
pub fn verify_vertical_commutation(sc: &StructureConstants) -> Result<Vec<NCExpression>, AlgebraError> {
    let l = sub_laplacian(sc);
    let mut reducer = Reducer::new(sc, DEFAULT_ORDER_CAP);
    (0..sc.h())
        .map(|m| {
            let z = NCExpression::symbol(Symbol::V(m));
            reducer.reduce(&l.compose(&z).minus(&z.compose(&l)))
        })
        .collect()
}
