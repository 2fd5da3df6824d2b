//! CD constants of step-2 Carnot groups and the closed-form geometric constants.

use crate::exact::{approximate, directed_decimal, to_f64, Q};
use num_traits::Zero;
use crate::forms::CDParams;
use crate::structures::StructureConstants;
use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstError {
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("Jacobi iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("structure is not a step-2 Carnot structure (omega, delta, theta must vanish)")]
    NotCarnot,
    #[error("input must be nonnegative, got {0}")]
    NegativeInput(f64),
    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tol:e}")]
    QuadratureFailure { estimate: f64, tol: f64 },
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector of `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations for a symmetric matrix given by rows.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> Result<Eigen, ConstError> {
    let n = a.len();
    if a.iter().any(|r| r.len() != n) {
        return Err(ConstError::InvalidParameter("matrix must be square".into()));
    }
    let norm = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((a[i][j] - a[j][i]).abs());
        }
    }
    if norm > 0.0 && asym / norm > 1e-12 {
        return Err(ConstError::NotSymmetric(asym / norm));
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let off = |m: &Vec<Vec<f64>>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i][j] * m[i][j];
                }
            }
        }
        s.sqrt()
    };
    let mut converged = off(&m) <= 1e-14 * norm;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(ConstError::NoConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&m) <= 1e-14 * norm;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    Ok(Eigen {
        values: order.iter().map(|&k| m[k][k]).collect(),
        vectors: order.iter().map(|&k| (0..n).map(|i| v[i][k]).collect()).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarnotConstants {
    pub rho2: f64,
    pub kappa: f64,
    pub is_htype: bool,
}

/// `M_mn = Σ_ij γ^m_ij γ^n_ij` (ρ₂ = λ_min/4) as floats.
pub fn rho2_matrix(sc: &StructureConstants) -> Vec<Vec<f64>> {
    let (d, h) = (sc.d(), sc.h());
    (0..h)
        .map(|m| {
            (0..h)
                .map(|n| {
                    let mut s = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            s += to_f64(sc.gamma(m, i, j)) * to_f64(sc.gamma(n, i, j));
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

/// `K_ik = Σ_j Σ_m γ^m_ij γ^m_kj` (κ = λ_max) as floats.
pub fn kappa_matrix(sc: &StructureConstants) -> Vec<Vec<f64>> {
    let (d, h) = (sc.d(), sc.h());
    (0..d)
        .map(|i| {
            (0..d)
                .map(|k| {
                    let mut s = 0.0;
                    for j in 0..d {
                        for m in 0..h {
                            s += to_f64(sc.gamma(m, i, j)) * to_f64(sc.gamma(m, k, j));
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

/// True iff `J_mᵀJ_n + J_nᵀJ_m = 2δ_mn I` within `1e-12`, with `(J_m)_ij = γ^m_ij`.
pub fn is_htype(sc: &StructureConstants) -> bool {
    let (d, h) = (sc.d(), sc.h());
    let j = |m: usize, a: usize, b: usize| to_f64(sc.gamma(m, a, b));
    for m in 0..h {
        for n in m..h {
            for a in 0..d {
                for b in 0..d {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += j(m, k, a) * j(n, k, b) + j(n, k, a) * j(m, k, b);
                    }
                    let target = if m == n && a == b { 2.0 } else { 0.0 };
                    if (s - target).abs() > 1e-12 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

pub fn carnot_cd_constants(sc: &StructureConstants) -> Result<CarnotConstants, ConstError> {
    if !sc.is_carnot() || sc.h() == 0 {
        return Err(ConstError::NotCarnot);
    }
    let m = symmetric_eigen(&rho2_matrix(sc))?;
    let k = symmetric_eigen(&kappa_matrix(sc))?;
    Ok(CarnotConstants {
        rho2: m.values[0] / 4.0,
        kappa: *k.values.last().expect("d >= 1"),
        is_htype: is_htype(sc),
    })
}

/// Exact `CD(0, ρ₂, κ, d)` for a Carnot structure. Eigenvalues within `1e-9` of a rational
/// with denominator at most `10⁶` snap to it; otherwise ρ₂ is rounded down and κ up on a
/// `10⁻⁹` grid, so the rational constants are never more optimistic than the float ones.
pub fn auto_cd_params(sc: &StructureConstants) -> Result<CDParams, ConstError> {
    let c = carnot_cd_constants(sc)?;
    let snap = |x: f64, up: bool| {
        let r = approximate(x, 1_000_000);
        if (to_f64(&r) - x).abs() <= 1e-9 {
            r
        } else {
            directed_decimal(x, 9, up)
        }
    };
    let rho2 = snap(c.rho2, false);
    let kappa = snap(c.kappa, true);
    CDParams::new(Q::zero(), rho2, kappa, Q::from_integer((sc.d() as i64).into()))
        .map_err(|e| ConstError::InvalidParameter(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricConstants {
    /// `d(1 + 3κ/(2ρ₂))`.
    pub big_d: f64,
    /// `2ρ₁ρ₂/(3(ρ₂+κ))`, only for ρ₁ > 0.
    pub alpha: Option<f64>,
    /// `2√3 π √((ρ₂+κ)/(ρ₁ρ₂) (1 + 3κ/(2ρ₂)) d)`, only for ρ₁ > 0.
    pub diameter_bound: Option<f64>,
}

pub fn geometric_constants(p: &CDParams) -> GeometricConstants {
    let [rho1, rho2, kappa, d] = p.to_f64();
    let big_d = d * (1.0 + 3.0 * kappa / (2.0 * rho2));
    let positive = rho1 > 0.0;
    GeometricConstants {
        big_d,
        alpha: positive.then(|| 2.0 * rho1 * rho2 / (3.0 * (rho2 + kappa))),
        diameter_bound: positive
            .then(|| 2.0 * 3f64.sqrt() * PI * ((rho2 + kappa) / (rho1 * rho2) * (1.0 + 3.0 * kappa / (2.0 * rho2)) * d).sqrt()),
    }
}

fn positive_curvature(p: &CDParams) -> Result<(f64, f64), ConstError> {
    let g = geometric_constants(p);
    match g.alpha {
        Some(alpha) => Ok((g.big_d, alpha)),
        None => Err(ConstError::InvalidParameter(format!("rho1 must be positive, got {}", p.rho1))),
    }
}

/// `2√2 π √(D/α)`.
pub fn diameter_closed_form(p: &CDParams) -> Result<f64, ConstError> {
    let (big_d, alpha) = positive_curvature(p)?;
    Ok(2.0 * 2f64.sqrt() * PI * (big_d / alpha).sqrt())
}

/// `Φ(x) = D[(1+y)ln(1+y) − y ln y]`, `y = 2x/(αD)`, with `Φ(0) = 0`.
pub fn entropy_phi(x: f64, p: &CDParams) -> Result<f64, ConstError> {
    if x < 0.0 || x.is_nan() {
        return Err(ConstError::NegativeInput(x));
    }
    let (big_d, alpha) = positive_curvature(p)?;
    let y = 2.0 * x / (alpha * big_d);
    if y == 0.0 {
        return Ok(0.0);
    }
    Ok(big_d * ((1.0 + y) * y.ln_1p() - y * y.ln()))
}

/// `(1 − e^{−αt})^{−D/2}`.
pub fn kernel_global_bound(t: f64, p: &CDParams) -> Result<f64, ConstError> {
    if t <= 0.0 || t.is_nan() {
        return Err(ConstError::NonPositiveTime(t));
    }
    let (big_d, alpha) = positive_curvature(p)?;
    Ok((-(-alpha * t).exp_m1()).powf(-big_d / 2.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    pub value: f64,
    pub error_estimate: f64,
    /// Analytic bound on the discarded tail beyond `upper`.
    pub tail_bound: f64,
    pub upper: f64,
    pub intervals: usize,
}

/// Diameter bound as `8D ∫₀^∞ du/(2u² + αD)` (the `x = u²` form of `−2∫√x Φ″`).
pub fn diameter_via_quadrature(p: &CDParams, tol: f64) -> Result<f64, ConstError> {
    diameter_quadrature_report(p, tol).map(|r| r.value)
}

pub fn diameter_quadrature_report(p: &CDParams, tol: f64) -> Result<QuadratureReport, ConstError> {
    if tol <= 0.0 || tol.is_nan() {
        return Err(ConstError::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let (big_d, alpha) = positive_curvature(p)?;
    // Tail beyond U is at most 4D/U.
    let upper = 40.0 * big_d / tol;
    let f = |u: f64| 8.0 * big_d / (2.0 * u * u + alpha * big_d);
    let (value, err, intervals) = adaptive_gk(&f, 0.0, upper, tol / 2.0, 20_000)?;
    let tail = 4.0 * big_d / upper;
    if err + tail > tol {
        return Err(ConstError::QuadratureFailure { estimate: err + tail, tol });
    }
    Ok(QuadratureReport { value, error_estimate: err, tail_bound: tail, upper, intervals })
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Gauss–Kronrod 7/15 on `[a, b]`: `(kronrod, |kronrod − gauss|)`.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = hw * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * hw, ((k - g) * hw).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive bisection: always split the panel with the largest error estimate.
pub fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_panels: usize) -> Result<(f64, f64, usize), ConstError> {
    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(f, a, b);
    heap.push(Panel { a, b, value: v, err: e });
    let mut total_err = e;
    while total_err > tol {
        if heap.len() >= max_panels {
            return Err(ConstError::QuadratureFailure { estimate: total_err, tol });
        }
        let p = heap.pop().expect("heap never empty");
        let mid = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        total_err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: p.b, value: v2, err: e2 });
    }
    // Re-sum to shed the drift of the running error total.
    let value = heap.iter().map(|p| p.value).sum();
    let err = heap.iter().map(|p| p.err).sum();
    Ok((value, err, heap.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_polynomial_exactly() {
        let (v, e, _) = adaptive_gk(&|x| x.powi(5) - 3.0 * x, 0.0, 2.0, 1e-12, 100).unwrap();
        assert!((v - (64.0 / 6.0 - 6.0)).abs() < 1e-12 && e < 1e-12);
    }

    #[test]
    fn not_symmetric_rejected() {
        assert!(matches!(symmetric_eigen(&[vec![1.0, 2.0], vec![0.0, 1.0]]), Err(ConstError::NotSymmetric(_))));
    }
}
