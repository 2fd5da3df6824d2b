//! Constant adapted-frame structure constants and their validation.
//!
//! Conventions (all indices 0-based in code, 1-based in files and reports):
//!
//! ```text
//! [X_i, X_j] = Σ_l ω^l_ij X_l + Σ_m γ^m_ij Z_m
//! [X_i, Z_m] = Σ_l δ^l_im X_l
//! [Z_m, Z_n] = Σ_p θ^p_mn Z_p
//! ```

mod catalog;
mod file;
mod yang_mills;

pub use catalog::{catalog_model, known_failures, parse_model_spec, random_step2, KnownFailure, ModelId, CATALOG_NAMES};
pub use file::{StructureFile, TensorEntry};
pub use yang_mills::{connection_coefficient, divergence_of_torsion, yang_mills_check};

use crate::exact::{format_rational, Q};
use crate::ncdiff::Symbol;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("tensor {tensor} has {found} entries, expected {expected}")]
    ShapeMismatch { tensor: &'static str, expected: usize, found: usize },
    #[error("index {index} out of range for {what} (dimension {dim})")]
    IndexOutOfRange { what: &'static str, index: usize, dim: usize },
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("structure file: {0}")]
    Format(String),
}

/// Dense constant structure tensors of an adapted frame `X_1..X_d, Z_1..Z_h`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureConstants {
    pub name: String,
    d: usize,
    h: usize,
    omega: Vec<Q>,
    gamma: Vec<Q>,
    delta: Vec<Q>,
    theta: Vec<Q>,
}

impl StructureConstants {
    pub fn zero(d: usize, h: usize) -> Self {
        StructureConstants {
            name: String::new(),
            d,
            h,
            omega: vec![Q::zero(); d * d * d],
            gamma: vec![Q::zero(); h * d * d],
            delta: vec![Q::zero(); d * d * h],
            theta: vec![Q::zero(); h * h * h],
        }
    }

    /// Builds from dense row-major tensors `ω[l][i][j]`, `γ[m][i][j]`, `δ[l][i][m]`, `θ[p][m][n]`.
    pub fn from_tensors(
        d: usize,
        h: usize,
        omega: Vec<Q>,
        gamma: Vec<Q>,
        delta: Vec<Q>,
        theta: Vec<Q>,
    ) -> Result<Self, StructureError> {
        let check = |tensor, v: &Vec<Q>, expected| {
            if v.len() == expected {
                Ok(())
            } else {
                Err(StructureError::ShapeMismatch { tensor, expected, found: v.len() })
            }
        };
        check("omega", &omega, d * d * d)?;
        check("gamma", &gamma, h * d * d)?;
        check("delta", &delta, d * d * h)?;
        check("theta", &theta, h * h * h)?;
        Ok(StructureConstants { name: String::new(), d, h, omega, gamma, delta, theta })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn omega(&self, l: usize, i: usize, j: usize) -> &Q {
        &self.omega[(l * self.d + i) * self.d + j]
    }

    pub fn gamma(&self, m: usize, i: usize, j: usize) -> &Q {
        &self.gamma[(m * self.d + i) * self.d + j]
    }

    pub fn delta(&self, l: usize, i: usize, m: usize) -> &Q {
        &self.delta[(l * self.d + i) * self.h + m]
    }

    pub fn theta(&self, p: usize, m: usize, n: usize) -> &Q {
        &self.theta[(p * self.h + m) * self.h + n]
    }

    pub fn set_omega(&mut self, l: usize, i: usize, j: usize, v: Q) {
        let k = (l * self.d + i) * self.d + j;
        self.omega[k] = v;
    }

    pub fn set_gamma(&mut self, m: usize, i: usize, j: usize, v: Q) {
        let k = (m * self.d + i) * self.d + j;
        self.gamma[k] = v;
    }

    pub fn set_delta(&mut self, l: usize, i: usize, m: usize, v: Q) {
        let k = (l * self.d + i) * self.h + m;
        self.delta[k] = v;
    }

    pub fn set_theta(&mut self, p: usize, m: usize, n: usize, v: Q) {
        let k = (p * self.h + m) * self.h + n;
        self.theta[k] = v;
    }

    /// Sets `ω^l_ij = v` and `ω^l_ji = -v`.
    pub fn set_omega_skew(&mut self, l: usize, i: usize, j: usize, v: Q) {
        self.set_omega(l, j, i, -v.clone());
        self.set_omega(l, i, j, v);
    }

    /// Sets `γ^m_ij = v` and `γ^m_ji = -v`.
    pub fn set_gamma_skew(&mut self, m: usize, i: usize, j: usize, v: Q) {
        self.set_gamma(m, j, i, -v.clone());
        self.set_gamma(m, i, j, v);
    }

    /// Sets `δ^l_im = v` and `δ^i_lm = -v`.
    pub fn set_delta_skew(&mut self, l: usize, i: usize, m: usize, v: Q) {
        self.set_delta(i, l, m, -v.clone());
        self.set_delta(l, i, m, v);
    }

    /// Sets `θ^p_mn = v` and `θ^p_nm = -v`.
    pub fn set_theta_skew(&mut self, p: usize, m: usize, n: usize, v: Q) {
        self.set_theta(p, n, m, -v.clone());
        self.set_theta(p, m, n, v);
    }

    pub fn omega_tensor(&self) -> &[Q] {
        &self.omega
    }

    pub fn gamma_tensor(&self) -> &[Q] {
        &self.gamma
    }

    pub fn delta_tensor(&self) -> &[Q] {
        &self.delta
    }

    pub fn theta_tensor(&self) -> &[Q] {
        &self.theta
    }

    /// True when ω, δ and θ vanish: a step-2 Carnot algebra in an adapted frame.
    pub fn is_carnot(&self) -> bool {
        self.omega.iter().chain(&self.delta).chain(&self.theta).all(Zero::is_zero)
    }

    pub fn check_symbol(&self, s: Symbol) -> Result<(), StructureError> {
        match s {
            Symbol::H(i) if i >= self.d => {
                Err(StructureError::IndexOutOfRange { what: "horizontal symbol", index: i + 1, dim: self.d })
            }
            Symbol::V(m) if m >= self.h => {
                Err(StructureError::IndexOutOfRange { what: "vertical symbol", index: m + 1, dim: self.h })
            }
            _ => Ok(()),
        }
    }

    /// `[a, b]` expanded in the frame, zero coefficients omitted.
    pub fn bracket(&self, a: Symbol, b: Symbol) -> Vec<(Symbol, Q)> {
        let mut out = Vec::new();
        match (a, b) {
            (Symbol::H(i), Symbol::H(j)) => {
                for l in 0..self.d {
                    push_nonzero(&mut out, Symbol::H(l), self.omega(l, i, j));
                }
                for m in 0..self.h {
                    push_nonzero(&mut out, Symbol::V(m), self.gamma(m, i, j));
                }
            }
            (Symbol::H(i), Symbol::V(m)) => {
                for l in 0..self.d {
                    push_nonzero(&mut out, Symbol::H(l), self.delta(l, i, m));
                }
            }
            (Symbol::V(m), Symbol::H(i)) => {
                for l in 0..self.d {
                    push_nonzero(&mut out, Symbol::H(l), &-self.delta(l, i, m));
                }
            }
            (Symbol::V(m), Symbol::V(n)) => {
                for p in 0..self.h {
                    push_nonzero(&mut out, Symbol::V(p), self.theta(p, m, n));
                }
            }
        }
        out
    }

    /// All frame symbols in normal-form order.
    pub fn symbols(&self) -> Vec<Symbol> {
        (0..self.d).map(Symbol::H).chain((0..self.h).map(Symbol::V)).collect()
    }

    /// Coefficients `c_i` of the drift `X_0 = Σ_i c_i X_i`, `c_i = -Σ_k ω^k_ik`.
    pub fn drift(&self) -> Vec<Q> {
        (0..self.d)
            .map(|i| -(0..self.d).fold(Q::zero(), |acc, k| acc + self.omega(k, i, k)))
            .collect()
    }
}

fn push_nonzero(out: &mut Vec<(Symbol, Q)>, s: Symbol, c: &Q) {
    if !c.is_zero() {
        out.push((s, c.clone()));
    }
}

/// One failed structural check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    /// 1-based indices; layout documented per check.
    pub indices: Vec<usize>,
    pub residual: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
    /// Non-fatal notes, e.g. a structure that is not generated in two steps.
    pub diagnostics: Vec<String>,
}

impl ValidationReport {
    pub fn from_violations(violations: Vec<Violation>, diagnostics: Vec<String>) -> Self {
        ValidationReport { passed: violations.is_empty(), violations, diagnostics }
    }
}

/// Checks skew-symmetry of ω, γ, θ, the Killing relation of δ, the Jacobi identity and
/// step-2 bracket generation.
///
/// Skew violations are reported as `[i, j, upper]` with `i < j` (for δ: `[i, l, m]`);
/// Jacobi violations as the three symbol positions followed by the offending component,
/// where vertical symbols are numbered `d+1..d+h`.
pub fn validate_structure(sc: &StructureConstants) -> ValidationReport {
    let (d, h) = (sc.d, sc.h);
    let mut v = Vec::new();
    let mut diagnostics = Vec::new();
    let skew = |check: &str, a: &Q, b: &Q, idx: [usize; 3], v: &mut Vec<Violation>| {
        let r = a + b;
        if !r.is_zero() {
            v.push(Violation { check: check.into(), indices: idx.to_vec(), residual: format_rational(&r) });
        }
    };
    for i in 0..d {
        for j in i..d {
            for l in 0..d {
                skew("omega_skew", sc.omega(l, i, j), sc.omega(l, j, i), [i + 1, j + 1, l + 1], &mut v);
            }
            for m in 0..h {
                skew("gamma_skew", sc.gamma(m, i, j), sc.gamma(m, j, i), [i + 1, j + 1, m + 1], &mut v);
            }
        }
    }
    for m in 0..h {
        for i in 0..d {
            for l in i..d {
                skew("delta_killing", sc.delta(l, i, m), sc.delta(i, l, m), [i + 1, l + 1, m + 1], &mut v);
            }
        }
        for n in m..h {
            for p in 0..h {
                skew("theta_skew", sc.theta(p, m, n), sc.theta(p, n, m), [m + 1, n + 1, p + 1], &mut v);
            }
        }
    }

    // Jacobi over all triples of distinct basis elements.
    let syms = sc.symbols();
    let n = syms.len();
    let pos = |s: Symbol| match s {
        Symbol::H(i) => i,
        Symbol::V(m) => d + m,
    };
    let bracket_vec = |x: &[(Symbol, Q)], c: Symbol| {
        let mut acc = vec![Q::zero(); n];
        for (s, coef) in x {
            for (t, c2) in sc.bracket(*s, c) {
                acc[pos(t)] += coef * c2;
            }
        }
        acc
    };
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let (x, y, z) = (syms[a], syms[b], syms[c]);
                let t1 = bracket_vec(&sc.bracket(x, y), z);
                let t2 = bracket_vec(&sc.bracket(y, z), x);
                let t3 = bracket_vec(&sc.bracket(z, x), y);
                for k in 0..n {
                    let r = &t1[k] + &t2[k] + &t3[k];
                    if !r.is_zero() {
                        v.push(Violation {
                            check: "jacobi".into(),
                            indices: vec![a + 1, b + 1, c + 1, k + 1],
                            residual: format_rational(&r),
                        });
                    }
                }
            }
        }
    }

    // Step-2 generation: the vertical parts of [X_i, X_j] must span V.
    let rows: Vec<Vec<Q>> = (0..h)
        .map(|m| {
            let mut row = Vec::new();
            for i in 0..d {
                for j in i + 1..d {
                    row.push(sc.gamma(m, i, j).clone());
                }
            }
            row
        })
        .collect();
    let rank = rational_rank(rows);
    if rank < h {
        v.push(Violation {
            check: "bracket_generation".into(),
            indices: vec![rank, h],
            residual: format_rational(&Q::from_integer(((h - rank) as i64).into())),
        });
        diagnostics.push(format!(
            "vertical projections of horizontal brackets span {rank} of {h} dimensions; generation in more than two steps is not checked"
        ));
    }
    ValidationReport::from_violations(v, diagnostics)
}

/// Exact rank by Gaussian elimination over the rationals.
pub fn rational_rank(mut rows: Vec<Vec<Q>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else { continue };
        rows.swap(rank, piv);
        let pivot = rows[rank][col].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let f = &rows[r][col] / &pivot;
                for c in col..ncols {
                    let sub = &f * &rows[rank][c];
                    rows[r][c] -= sub;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Largest absolute entry over all four tensors (a cheap size measure for diagnostics).
pub fn max_abs_entry(sc: &StructureConstants) -> Q {
    sc.omega
        .iter()
        .chain(&sc.gamma)
        .chain(&sc.delta)
        .chain(&sc.theta)
        .map(Signed::abs)
        .fold(Q::zero(), |a, b| if b > a { b } else { a })
}
