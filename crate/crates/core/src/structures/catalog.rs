use super::{rational_rank, StructureConstants, StructureError};
use crate::exact::{parse_rational, q, Q};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Names accepted by [`parse_model_spec`], with their parameter syntax.
pub const CATALOG_NAMES: &[(&str, &str)] = &[
    ("g_rho1:<rho1>", "three-dimensional model G(rho1): [X,Y]=Z, [X,Z]=-rho1 Y, [Y,Z]=rho1 X"),
    ("su2", "SU(2), same as g_rho1:1"),
    ("sl2", "SL(2), same as g_rho1:-1"),
    ("heisenberg:<n>", "Heisenberg group of dimension 2n+1"),
    ("quaternionic_heisenberg", "quaternionic Heisenberg group, d=4, h=3 (H-type)"),
    ("random_step2:<d>:<h>:<seed>", "random bracket-generating step-2 Carnot structure"),
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelId {
    GRho1(Q),
    Su2,
    Sl2,
    Heisenberg(usize),
    QuaternionicHeisenberg,
    /// Step-2 Carnot structure from a dense `γ[m][i][j]` tensor.
    CarnotStep2 { d: usize, h: usize, gamma: Vec<Q> },
    RandomStep2 { d: usize, h: usize, seed: u64 },
}

/// Parses `name[:param[:param...]]`, e.g. `heisenberg:2` or `g_rho1:-1/2`.
pub fn parse_model_spec(spec: &str) -> Result<ModelId, StructureError> {
    let mut parts = spec.trim().split(':');
    let name = parts.next().unwrap_or_default();
    let params: Vec<&str> = parts.collect();
    let bad = |msg: &str| StructureError::InvalidParameter(format!("{spec}: {msg}"));
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad("expected a nonnegative integer"));
    let want = |n: usize| if params.len() == n { Ok(()) } else { Err(bad(&format!("expected {n} parameter(s)"))) };
    match name {
        "g_rho1" => {
            want(1)?;
            Ok(ModelId::GRho1(parse_rational(params[0]).map_err(|e| bad(&e.to_string()))?))
        }
        "su2" => want(0).map(|_| ModelId::Su2),
        "sl2" => want(0).map(|_| ModelId::Sl2),
        "heisenberg" => {
            want(1)?;
            Ok(ModelId::Heisenberg(int(params[0])?))
        }
        "quaternionic_heisenberg" => want(0).map(|_| ModelId::QuaternionicHeisenberg),
        "random_step2" => {
            want(3)?;
            let seed = params[2].parse::<u64>().map_err(|_| bad("seed must be an integer"))?;
            Ok(ModelId::RandomStep2 { d: int(params[0])?, h: int(params[1])?, seed })
        }
        _ => Err(StructureError::UnknownModel(name.to_string())),
    }
}

pub fn catalog_model(id: &ModelId) -> Result<StructureConstants, StructureError> {
    match id {
        ModelId::GRho1(rho) => Ok(g_rho1(rho.clone())),
        ModelId::Su2 => Ok(g_rho1(q(1)).with_name("su2")),
        ModelId::Sl2 => Ok(g_rho1(q(-1)).with_name("sl2")),
        ModelId::Heisenberg(n) => heisenberg(*n),
        ModelId::QuaternionicHeisenberg => Ok(quaternionic_heisenberg()),
        ModelId::CarnotStep2 { d, h, gamma } => carnot_step2(*d, *h, gamma.clone()),
        ModelId::RandomStep2 { d, h, seed } => random_step2(*d, *h, *seed),
    }
}

fn g_rho1(rho: Q) -> StructureConstants {
    let mut sc = StructureConstants::zero(2, 1).with_name(format!("g_rho1({rho})"));
    sc.set_gamma_skew(0, 0, 1, Q::one());
    // [X,Z] = -rho Y and [Y,Z] = rho X.
    sc.set_delta_skew(1, 0, 0, -rho);
    sc
}

fn heisenberg(n: usize) -> Result<StructureConstants, StructureError> {
    if n == 0 {
        return Err(StructureError::InvalidParameter("heisenberg requires n >= 1".into()));
    }
    let mut sc = StructureConstants::zero(2 * n, 1).with_name(format!("heisenberg({n})"));
    for i in 0..n {
        sc.set_gamma_skew(0, i, n + i, Q::one());
    }
    Ok(sc)
}

/// `γ^m_ij = <e_i, J_m e_j>`-type table from left multiplication by i, j, k on ℍ ≅ ℝ⁴.
fn quaternionic_heisenberg() -> StructureConstants {
    let mut sc = StructureConstants::zero(4, 3).with_name("quaternionic_heisenberg");
    let one = Q::one();
    sc.set_gamma_skew(0, 0, 1, one.clone());
    sc.set_gamma_skew(0, 2, 3, one.clone());
    sc.set_gamma_skew(1, 0, 2, one.clone());
    sc.set_gamma_skew(1, 1, 3, -one.clone());
    sc.set_gamma_skew(2, 0, 3, one.clone());
    sc.set_gamma_skew(2, 1, 2, one);
    sc
}

fn carnot_step2(d: usize, h: usize, gamma: Vec<Q>) -> Result<StructureConstants, StructureError> {
    let zero = |n| vec![Q::zero(); n];
    let sc = StructureConstants::from_tensors(d, h, zero(d * d * d), gamma, zero(d * d * h), zero(h * h * h))?;
    for m in 0..h {
        for i in 0..d {
            for j in i..d {
                if (sc.gamma(m, i, j) + sc.gamma(m, j, i)) != Q::zero() {
                    return Err(StructureError::InvalidParameter(format!(
                        "gamma is not skew at (i={}, j={}, m={})",
                        i + 1,
                        j + 1,
                        m + 1
                    )));
                }
            }
        }
    }
    Ok(sc.with_name(format!("carnot_step2(d={d}, h={h})")))
}

/// Random step-2 Carnot structure with small integer γ whose vertical part spans all `h`
/// directions. Deterministic in `seed`.
pub fn random_step2(d: usize, h: usize, seed: u64) -> Result<StructureConstants, StructureError> {
    let pairs = d * d.saturating_sub(1) / 2;
    if d < 2 || h == 0 || h > pairs {
        return Err(StructureError::InvalidParameter(format!(
            "random_step2 needs d >= 2 and 1 <= h <= d(d-1)/2, got d={d}, h={h}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut sc = StructureConstants::zero(d, h);
        for m in 0..h {
            for i in 0..d {
                for j in i + 1..d {
                    let v: i64 = rng.gen_range(-2..=2);
                    sc.set_gamma_skew(m, i, j, q(v));
                }
            }
        }
        let rows: Vec<Vec<Q>> = (0..h)
            .map(|m| (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).map(|(i, j)| sc.gamma(m, i, j).clone()).collect())
            .collect();
        if rational_rank(rows) == h {
            return Ok(sc.with_name(format!("random_step2(d={d}, h={h}, seed={seed})")));
        }
    }
}

/// A structure that one of the structural checks must reject.
#[derive(Clone, Debug)]
pub struct KnownFailure {
    pub structure: StructureConstants,
    /// `"validate"` or `"yang_mills"`.
    pub rejected_by: &'static str,
    /// Violation name expected in the report.
    pub violation: &'static str,
}

/// Hand-checked structures that must fail validation or the Yang-Mills test.
pub fn known_failures() -> Vec<KnownFailure> {
    let mut not_skew = heisenberg(1).expect("n = 1").with_name("gamma_not_skew");
    not_skew.set_gamma(0, 1, 0, Q::one());

    let mut not_killing = heisenberg(1).expect("n = 1").with_name("delta_not_killing");
    not_killing.set_delta(0, 0, 0, Q::one());

    let not_generating = StructureConstants::zero(2, 1).with_name("abelian_with_vertical");

    // [X3,X1] = X2 − Z, [X3,X2] = −X1: δT(X2) = Z. The d = 2 candidate has δT = 0.
    let mut ym = StructureConstants::zero(3, 1).with_name("not_yang_mills");
    ym.set_omega_skew(1, 2, 0, Q::one());
    ym.set_omega_skew(0, 2, 1, -Q::one());
    ym.set_gamma_skew(0, 2, 0, -Q::one());

    vec![
        KnownFailure { structure: not_skew, rejected_by: "validate", violation: "gamma_skew" },
        KnownFailure { structure: not_killing, rejected_by: "validate", violation: "delta_killing" },
        KnownFailure { structure: not_generating, rejected_by: "validate", violation: "bracket_generation" },
        KnownFailure { structure: ym, rejected_by: "yang_mills", violation: "yang_mills" },
    ]
}
