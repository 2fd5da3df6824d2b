//! Γ-calculus on jets: bilinear forms, curvature terms, and the pointwise CD checks.
//!
//! Every form is built once per structure as a polynomial in the jet coordinates (by the
//! Leibniz rule followed by normal-form reduction) and then evaluated exactly.
//!
//! The curvature term `R` uses the adapted-frame formula with all derivatives of the
//! structure functions dropped; this is exact only because the structure constants here
//! are constant.

use crate::exact::{approximate, format_rational, serde_q, to_f64, Q};
use crate::ncdiff::{check_dims, random_jet, sub_laplacian, AlgebraError, DiffPoly, Jet, JetLayout, JetPoly, Reducer, Symbol};
use crate::structures::{yang_mills_check, StructureConstants};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("nu must be positive, got {0}")]
    NonPositiveNu(String),
    #[error("invalid CD parameters: {0}")]
    InvalidParams(String),
    #[error("structure is not of Yang-Mills type")]
    NotYangMills,
}

/// Constants of the inequality `CD(ρ₁, ρ₂, κ, d)`; `d` is finite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CDParams {
    #[serde(with = "serde_q")]
    pub rho1: Q,
    #[serde(with = "serde_q")]
    pub rho2: Q,
    #[serde(with = "serde_q")]
    pub kappa: Q,
    #[serde(with = "serde_q")]
    pub d: Q,
}

impl CDParams {
    pub fn new(rho1: Q, rho2: Q, kappa: Q, d: Q) -> Result<Self, FormError> {
        if !rho2.is_positive() {
            return Err(FormError::InvalidParams(format!("rho2 must be > 0, got {rho2}")));
        }
        if kappa.is_negative() {
            return Err(FormError::InvalidParams(format!("kappa must be >= 0, got {kappa}")));
        }
        if !d.is_positive() {
            return Err(FormError::InvalidParams(format!("d must be > 0, got {d}")));
        }
        Ok(CDParams { rho1, rho2, kappa, d })
    }

    /// Parses `"rho1,rho2,kappa,d"` with each entry a fraction or decimal.
    pub fn parse(s: &str) -> Result<Self, FormError> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(FormError::InvalidParams(format!("expected rho1,rho2,kappa,d; got {s:?}")));
        }
        let mut v = Vec::with_capacity(4);
        for p in parts {
            v.push(crate::exact::parse_rational(p).map_err(|e| FormError::InvalidParams(e.to_string()))?);
        }
        let d = v.pop().expect("four entries");
        let kappa = v.pop().expect("four entries");
        let rho2 = v.pop().expect("four entries");
        let rho1 = v.pop().expect("four entries");
        CDParams::new(rho1, rho2, kappa, d)
    }

    pub fn to_f64(&self) -> [f64; 4] {
        [to_f64(&self.rho1), to_f64(&self.rho2), to_f64(&self.kappa), to_f64(&self.d)]
    }

    /// `D = d (1 + 3κ/(2ρ₂))`, exact.
    pub fn big_d(&self) -> Q {
        &self.d * (Q::one() + Q::from_integer(3.into()) * &self.kappa / (Q::from_integer(2.into()) * &self.rho2))
    }
}

impl std::fmt::Display for CDParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CD({}, {}, {}, {})", self.rho1, self.rho2, self.kappa, self.d)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormValues {
    #[serde(with = "serde_q")]
    pub gamma: Q,
    #[serde(with = "serde_q")]
    pub gamma_z: Q,
    #[serde(with = "serde_q")]
    pub lf: Q,
    #[serde(with = "serde_q")]
    pub gamma2: Q,
    #[serde(with = "serde_q")]
    pub gamma2_z: Q,
    #[serde(with = "serde_q")]
    pub hess_h_sq: Q,
    #[serde(with = "serde_q")]
    pub hess_hv_sq: Q,
    #[serde(with = "serde_q")]
    pub r: Q,
    #[serde(with = "serde_q")]
    pub s: Q,
    #[serde(with = "serde_q")]
    pub t: Q,
}

/// Precomputed jet polynomials of every form for one structure.
pub struct FormEngine {
    sc: StructureConstants,
    layout: Arc<JetLayout>,
    gamma: JetPoly,
    gamma_z: JetPoly,
    lf: JetPoly,
    gamma2: JetPoly,
    gamma2_z: JetPoly,
    hess_h: JetPoly,
    hess_hv: JetPoly,
    r: JetPoly,
    s: JetPoly,
    t: JetPoly,
    gamma_of_gamma: JetPoly,
    gamma_of_gamma_z: JetPoly,
    commutation: JetPoly,
}

fn x(i: usize) -> DiffPoly {
    DiffPoly::symbol(Symbol::H(i))
}

fn z(m: usize) -> DiffPoly {
    DiffPoly::symbol(Symbol::V(m))
}

fn xx(i: usize, j: usize) -> DiffPoly {
    x(j).apply(Symbol::H(i))
}

fn half() -> Q {
    Q::new(1.into(), 2.into())
}

/// Γ(p, q) = Σ_i X_i p · X_i q.
fn gamma_bilinear(sc: &StructureConstants, p: &DiffPoly, q: &DiffPoly) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for i in 0..sc.d() {
        out = out.plus(&p.apply(Symbol::H(i)).mul(&q.apply(Symbol::H(i))));
    }
    out
}

/// Γ^Z(p, q) = Σ_m Z_m p · Z_m q.
fn gamma_z_bilinear(sc: &StructureConstants, p: &DiffPoly, q: &DiffPoly) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for m in 0..sc.h() {
        out = out.plus(&p.apply(Symbol::V(m)).mul(&q.apply(Symbol::V(m))));
    }
    out
}

fn apply_l(sc: &StructureConstants, p: &DiffPoly) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for (i, c) in sc.drift().into_iter().enumerate() {
        let xi = p.apply(Symbol::H(i));
        out = out.plus(&xi.apply(Symbol::H(i)));
        if !c.is_zero() {
            out.add_scaled(&xi, &c);
        }
    }
    out
}

/// Symmetrized horizontal Hessian norm with constant structure functions.
fn hessian_poly(sc: &StructureConstants) -> DiffPoly {
    let d = sc.d();
    let mut out = DiffPoly::zero();
    for l in 0..d {
        let mut e = xx(l, l);
        for i in 0..d {
            e.add_scaled(&x(i), &-sc.omega(l, i, l));
        }
        out = out.plus(&e.mul(&e));
    }
    for l in 0..d {
        for j in l + 1..d {
            let mut e = xx(j, l).plus(&xx(l, j)).scale(&half());
            for i in 0..d {
                let c = (sc.omega(l, i, j) + sc.omega(j, i, l)) * half();
                e.add_scaled(&x(i), &-c);
            }
            out.add_scaled(&e.mul(&e), &Q::from_integer(2.into()));
        }
    }
    out
}

/// Ricci-type term `R(f)` for constant structure constants.
fn r_poly(sc: &StructureConstants) -> DiffPoly {
    let (d, h) = (sc.d(), sc.h());
    let w = |l, i, j| sc.omega(l, i, j);
    let mut out = DiffPoly::zero();
    for k in 0..d {
        for l in 0..d {
            let mut c = Q::zero();
            for j in 0..d {
                for m in 0..h {
                    c += sc.gamma(m, k, j) * sc.delta(l, j, m);
                }
            }
            for i in 0..d {
                for j in 0..d {
                    c += w(i, j, i) * w(l, k, j);
                }
                c -= w(i, k, i) * w(i, l, i);
            }
            for i in 0..d {
                for j in i + 1..d {
                    let t = w(l, i, j) * w(k, i, j) - (w(i, l, j) + w(j, l, i)) * (w(i, k, j) + w(j, k, i));
                    c += t * half();
                }
            }
            if !c.is_zero() {
                out.add_scaled(&x(k).mul(&x(l)), &c);
            }
        }
    }
    for k in 0..d {
        for m in 0..h {
            let mut c = Q::zero();
            for l in 0..d {
                for j in 0..d {
                    c += w(l, j, l) * sc.gamma(m, k, j);
                    if l < j {
                        c += w(k, l, j) * sc.gamma(m, l, j);
                    }
                }
            }
            if !c.is_zero() {
                out.add_scaled(&z(m).mul(&x(k)), &c);
            }
        }
    }
    for l in 0..d {
        for j in l + 1..d {
            let mut e = DiffPoly::zero();
            for m in 0..h {
                e.add_scaled(&z(m), sc.gamma(m, l, j));
            }
            out.add_scaled(&e.mul(&e), &half());
        }
    }
    out
}

/// `S(f) = −2 Σ γ^m_ij (X_j Z_m f)(X_i f)`.
fn s_poly(sc: &StructureConstants) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for m in 0..sc.h() {
        for i in 0..sc.d() {
            for j in 0..sc.d() {
                let g = sc.gamma(m, i, j);
                if !g.is_zero() {
                    out.add_scaled(&z(m).apply(Symbol::H(j)).mul(&x(i)), &(g * Q::from_integer((-2).into())));
                }
            }
        }
    }
    out
}

/// `T(f) = Σ_j Σ_m (Σ_i γ^m_ij X_i f)²`.
fn t_poly(sc: &StructureConstants) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for j in 0..sc.d() {
        for m in 0..sc.h() {
            let mut e = DiffPoly::zero();
            for i in 0..sc.d() {
                e.add_scaled(&x(i), sc.gamma(m, i, j));
            }
            out = out.plus(&e.mul(&e));
        }
    }
    out
}

impl FormEngine {
    pub fn new(sc: &StructureConstants) -> Result<Self, FormError> {
        let layout = JetLayout::shared(sc.d(), sc.h(), 3);
        let mut red = Reducer::new(sc, 3);
        let f = DiffPoly::word(Default::default());
        let lf = DiffPoly::apply_expr(&sub_laplacian(sc));
        let gamma = gamma_bilinear(sc, &f, &f);
        let gamma_z = gamma_z_bilinear(sc, &f, &f);
        let gamma2 = apply_l(sc, &gamma).scale(&half()).minus(&gamma_bilinear(sc, &f, &lf));
        let gamma2_z = apply_l(sc, &gamma_z).scale(&half()).minus(&gamma_z_bilinear(sc, &f, &lf));
        let mut hess_hv = DiffPoly::zero();
        for i in 0..sc.d() {
            for m in 0..sc.h() {
                let e = z(m).apply(Symbol::H(i));
                hess_hv = hess_hv.plus(&e.mul(&e));
            }
        }
        let gamma_of_gamma = gamma_bilinear(sc, &gamma, &gamma);
        let gamma_of_gamma_z = gamma_bilinear(sc, &gamma_z, &gamma_z);
        let commutation = gamma_bilinear(sc, &f, &gamma_z).minus(&gamma_z_bilinear(sc, &f, &gamma));
        let mut low = |p: &DiffPoly| p.lower(&mut red, &layout);
        Ok(FormEngine {
            gamma: low(&gamma)?,
            gamma_z: low(&gamma_z)?,
            lf: low(&lf)?,
            gamma2: low(&gamma2)?,
            gamma2_z: low(&gamma2_z)?,
            hess_h: low(&hessian_poly(sc))?,
            hess_hv: low(&hess_hv)?,
            r: low(&r_poly(sc))?,
            s: low(&s_poly(sc))?,
            t: low(&t_poly(sc))?,
            gamma_of_gamma: low(&gamma_of_gamma)?,
            gamma_of_gamma_z: low(&gamma_of_gamma_z)?,
            commutation: low(&commutation)?,
            sc: sc.clone(),
            layout,
        })
    }

    pub fn structure(&self) -> &StructureConstants {
        &self.sc
    }

    pub fn layout(&self) -> &Arc<JetLayout> {
        &self.layout
    }

    fn check_jet(&self, jet: &Jet, min_order: usize) -> Result<(), FormError> {
        check_dims(jet, &self.sc)?;
        if jet.order() < min_order {
            return Err(AlgebraError::OrderOverflow { length: min_order, limit: jet.order() }.into());
        }
        Ok(())
    }

    pub fn evaluate(&self, jet: &Jet) -> Result<FormValues, FormError> {
        self.check_jet(jet, 3)?;
        Ok(FormValues {
            gamma: self.gamma.eval(jet),
            gamma_z: self.gamma_z.eval(jet),
            lf: self.lf.eval(jet),
            gamma2: self.gamma2.eval(jet),
            gamma2_z: self.gamma2_z.eval(jet),
            hess_h_sq: self.hess_h.eval(jet),
            hess_hv_sq: self.hess_hv.eval(jet),
            r: self.r.eval(jet),
            s: self.s.eval(jet),
            t: self.t.eval(jet),
        })
    }

    /// `(Γ₂ − ‖∇²_H f‖² − R − S, Γ₂^Z − ‖∇_H∇_V f‖²)`.
    pub fn bochner(&self, jet: &Jet) -> Result<(Q, Q), FormError> {
        let v = self.evaluate(jet)?;
        Ok((&v.gamma2 - &v.hess_h_sq - &v.r - &v.s, &v.gamma2_z - &v.hess_hv_sq))
    }

    /// `Γ(f, Γ^Z f) − Γ^Z(f, Γ f)`; needs only second derivatives.
    pub fn commutation(&self, jet: &Jet) -> Result<Q, FormError> {
        check_dims(jet, &self.sc)?;
        if jet.layout().len() < self.commutation.required_len() || jet.order() < 2 {
            return Err(AlgebraError::OrderOverflow { length: 2, limit: jet.order() }.into());
        }
        Ok(self.commutation.eval(jet))
    }

    pub fn gamma_of_gamma(&self, jet: &Jet) -> Result<(Q, Q), FormError> {
        self.check_jet(jet, 3)?;
        Ok((self.gamma_of_gamma.eval(jet), self.gamma_of_gamma_z.eval(jet)))
    }

    /// Random order-3 jet for this structure.
    pub fn random_jet(&self, seed: u64, magnitude: u32) -> Jet {
        random_jet(self.sc.d(), self.sc.h(), 3, seed, magnitude)
    }
}

/// Coefficients of the CD residual `A + Bν + C/ν` at fixed form values.
pub fn cd_coefficients(v: &FormValues, p: &CDParams) -> (Q, Q, Q) {
    let a = &v.gamma2 - &v.lf * &v.lf / &p.d - &p.rho1 * &v.gamma - &p.rho2 * &v.gamma_z;
    (a, v.gamma2_z.clone(), &p.kappa * &v.gamma)
}

pub fn cd_residual(v: &FormValues, p: &CDParams, nu: &Q) -> Result<Q, FormError> {
    if !nu.is_positive() {
        return Err(FormError::NonPositiveNu(format_rational(nu)));
    }
    let (a, b, c) = cd_coefficients(v, p);
    Ok(a + b * nu + c / nu)
}

/// `(res1, res2)` of the second-derivative bounds at fixed ν.
pub fn improved_residuals(v: &FormValues, gg: &(Q, Q), p: &CDParams, nu: &Q) -> Result<(Q, Q), FormError> {
    if !nu.is_positive() {
        return Err(FormError::NonPositiveNu(format_rational(nu)));
    }
    let four = Q::from_integer(4.into());
    let inner = &v.gamma2 + nu * &v.gamma2_z - (&p.rho1 - &p.kappa / nu) * &v.gamma;
    let res1 = &four * &v.gamma * inner - &gg.0;
    let res2 = four * &v.gamma_z * &v.gamma2_z - &gg.1;
    Ok((res1, res2))
}

pub fn evaluate_forms(jet: &Jet, sc: &StructureConstants) -> Result<FormValues, FormError> {
    FormEngine::new(sc)?.evaluate(jet)
}

pub fn check_bochner(jet: &Jet, sc: &StructureConstants) -> Result<(Q, Q), FormError> {
    FormEngine::new(sc)?.bochner(jet)
}

pub fn check_commutation_hypothesis(jet: &Jet, sc: &StructureConstants) -> Result<Q, FormError> {
    FormEngine::new(sc)?.commutation(jet)
}

pub fn check_cd(jet: &Jet, sc: &StructureConstants, p: &CDParams, nu: &Q) -> Result<Q, FormError> {
    if !nu.is_positive() {
        return Err(FormError::NonPositiveNu(format_rational(nu)));
    }
    cd_residual(&FormEngine::new(sc)?.evaluate(jet)?, p, nu)
}

/// Fails with `NotYangMills` unless `δT = 0`.
pub fn check_improved_bounds(jet: &Jet, sc: &StructureConstants, p: &CDParams, nu: &Q) -> Result<(Q, Q), FormError> {
    if !nu.is_positive() {
        return Err(FormError::NonPositiveNu(format_rational(nu)));
    }
    if !yang_mills_check(sc).passed {
        return Err(FormError::NotYangMills);
    }
    let engine = FormEngine::new(sc)?;
    let v = engine.evaluate(jet)?;
    improved_residuals(&v, &engine.gamma_of_gamma(jet)?, p, nu)
}

/// A jet and ν at which the CD residual is negative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub trial: u64,
    pub jet: Jet,
    pub nu: Q,
    pub residual: Q,
}

/// `{2^k : −10 ≤ k ≤ 10}`.
pub fn nu_grid() -> Vec<Q> {
    (-10..=10).map(|k: i32| if k >= 0 { Q::from_integer((1i64 << k).into()) } else { Q::new(1.into(), (1i64 << -k).into()) }).collect()
}

/// Grid values plus, when useful, rational points near the minimizer of `A + Bν + C/ν`.
pub fn candidate_nus(a: &Q, b: &Q, c: &Q) -> Vec<Q> {
    let mut nus = nu_grid();
    let (bf, cf) = (to_f64(b), to_f64(c));
    if b.is_positive() && c.is_positive() {
        let star = approximate((cf / bf).sqrt(), 1_000_000);
        if star.is_positive() {
            nus.push(star);
        }
    } else if a.is_negative() {
        // One of B, C vanishes: the residual tends to A at an end of (0, ∞).
        let two = Q::from_integer(2.into());
        if c.is_positive() {
            nus.push(&two * c / -a);
        } else if b.is_positive() {
            nus.push(-a / (&two * b));
        }
    }
    nus
}

/// Jet sampler mixing dense jets with sparse ones supported on a few coordinates.
pub fn sample_jet(engine: &FormEngine, seed: u64, trial: u64) -> Jet {
    let mix = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03);
    match trial % 3 {
        0 => engine.random_jet(mix, 10),
        _ => {
            let layout = engine.layout().clone();
            let mut rng = ChaCha8Rng::seed_from_u64(mix);
            let mut values = vec![Q::zero(); layout.len()];
            let support = rng.gen_range(1..=4);
            for _ in 0..support {
                let k = rng.gen_range(1..layout.len());
                let n: i64 = rng.gen_range(-6..=6);
                let q: i64 = rng.gen_range(1..=6);
                values[k] = Q::new(n.into(), q.into());
            }
            Jet::from_values(layout, values)
        }
    }
}

/// Randomized search for a jet and ν violating `CD(p)`; deterministic in `seed`.
pub fn falsify_cd(sc: &StructureConstants, p: &CDParams, trials: u64, seed: u64) -> Result<Option<Counterexample>, FormError> {
    let engine = FormEngine::new(sc)?;
    Ok(falsify_with(&engine, p, trials, seed))
}

pub fn falsify_with(engine: &FormEngine, p: &CDParams, trials: u64, seed: u64) -> Option<Counterexample> {
    for trial in 0..trials {
        let jet = sample_jet(engine, seed, trial);
        let v = engine.evaluate(&jet).expect("sampled jets match the engine layout");
        let (a, b, c) = cd_coefficients(&v, p);
        for nu in candidate_nus(&a, &b, &c) {
            let r = &a + &b * &nu + &c / &nu;
            if r.is_negative() {
                return Some(Counterexample { trial, jet, nu, residual: r });
            }
        }
    }
    None
}
