//! JSON structure files: sparse 1-based triplets with exact rational strings.

use super::{StructureConstants, StructureError};
use crate::exact::{format_rational, parse_rational, Q};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// `[a, b, c, "p/q"]` with 1-based indices.
pub type TensorEntry = (usize, usize, usize, String);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFile {
    #[serde(default)]
    pub name: String,
    pub d: usize,
    pub h: usize,
    #[serde(default)]
    pub omega: Vec<TensorEntry>,
    #[serde(default)]
    pub gamma: Vec<TensorEntry>,
    #[serde(default)]
    pub delta: Vec<TensorEntry>,
    #[serde(default)]
    pub theta: Vec<TensorEntry>,
}

impl StructureFile {
    /// Lists every nonzero entry in index order; the result is canonical.
    pub fn from_structure(sc: &StructureConstants) -> Self {
        let (d, h) = (sc.d(), sc.h());
        let collect = |n0: usize, n1: usize, n2: usize, get: &dyn Fn(usize, usize, usize) -> Q| {
            let mut out = Vec::new();
            for a in 0..n0 {
                for b in 0..n1 {
                    for c in 0..n2 {
                        let v = get(a, b, c);
                        if !v.is_zero() {
                            out.push((a + 1, b + 1, c + 1, format_rational(&v)));
                        }
                    }
                }
            }
            out
        };
        StructureFile {
            name: sc.name.clone(),
            d,
            h,
            omega: collect(d, d, d, &|l, i, j| sc.omega(l, i, j).clone()),
            gamma: collect(h, d, d, &|m, i, j| sc.gamma(m, i, j).clone()),
            delta: collect(d, d, h, &|l, i, m| sc.delta(l, i, m).clone()),
            theta: collect(h, h, h, &|p, m, n| sc.theta(p, m, n).clone()),
        }
    }

    pub fn to_structure(&self) -> Result<StructureConstants, StructureError> {
        let (d, h) = (self.d, self.h);
        let mut sc = StructureConstants::zero(d, h).with_name(self.name.clone());
        type Setter = fn(&mut StructureConstants, usize, usize, usize, Q);
        let tables: [(&str, &Vec<TensorEntry>, [usize; 3], Setter); 4] = [
            ("omega", &self.omega, [d, d, d], StructureConstants::set_omega),
            ("gamma", &self.gamma, [h, d, d], StructureConstants::set_gamma),
            ("delta", &self.delta, [d, d, h], StructureConstants::set_delta),
            ("theta", &self.theta, [h, h, h], StructureConstants::set_theta),
        ];
        for (what, entries, dims, set) in tables {
            for (a, b, c, val) in entries {
                for (idx, dim) in [*a, *b, *c].into_iter().zip(dims) {
                    if idx == 0 || idx > dim {
                        return Err(StructureError::Format(format!(
                            "{what} entry [{a},{b},{c}] index {idx} outside 1..={dim}"
                        )));
                    }
                }
                let v = parse_rational(val).map_err(|e| StructureError::Format(format!("{what}: {e}")))?;
                set(&mut sc, a - 1, b - 1, c - 1, v);
            }
        }
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("structure files always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, StructureError> {
        serde_json::from_str(text).map_err(|e| StructureError::Format(e.to_string()))
    }
}
