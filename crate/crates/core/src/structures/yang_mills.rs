use super::{StructureConstants, ValidationReport, Violation};
use crate::exact::{format_rational, qr, Q};
use num_traits::Zero;

/// Coefficient of `X_k` in `∇_{X_i} X_j` for the canonical connection:
/// `½(ω^k_ij + ω^j_ki + ω^i_kj)`.
pub fn connection_coefficient(sc: &StructureConstants, i: usize, j: usize, k: usize) -> Q {
    (sc.omega(k, i, j) + sc.omega(j, k, i) + sc.omega(i, k, j)) * qr(1, 2)
}

/// Vertical components of `δT(X_k)`, as a `d × h` table indexed `[k][m]`.
///
/// With `T(X_a, X_b) = -Σ_m γ^m_ab Z_m`,
/// `δT(X_k) = -Σ_l [T(∇_{X_l}X_l, X_k) + T(X_l, ∇_{X_l}X_k)]`.
pub fn divergence_of_torsion(sc: &StructureConstants) -> Vec<Vec<Q>> {
    let (d, h) = (sc.d(), sc.h());
    let nabla: Vec<Q> =
        (0..d * d * d).map(|n| connection_coefficient(sc, n / (d * d), (n / d) % d, n % d)).collect();
    let nab = |i: usize, j: usize, k: usize| &nabla[(i * d + j) * d + k];
    (0..d)
        .map(|k| {
            (0..h)
                .map(|m| {
                    let mut acc = Q::zero();
                    for l in 0..d {
                        for a in 0..d {
                            acc += nab(l, l, a) * sc.gamma(m, a, k);
                            acc += nab(l, k, a) * sc.gamma(m, l, a);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Passes iff `δT(X_k) = 0` for every horizontal `X_k`. Violations carry `[k, m]`.
pub fn yang_mills_check(sc: &StructureConstants) -> ValidationReport {
    let mut violations = Vec::new();
    for (k, row) in divergence_of_torsion(sc).iter().enumerate() {
        for (m, v) in row.iter().enumerate() {
            if !v.is_zero() {
                violations.push(Violation {
                    check: "yang_mills".into(),
                    indices: vec![k + 1, m + 1],
                    residual: format_rational(v),
                });
            }
        }
    }
    ValidationReport::from_violations(violations, Vec::new())
}
