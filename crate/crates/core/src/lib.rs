//! Exact and numerical checks of generalized curvature-dimension inequalities on
//! sub-Riemannian manifolds with transverse symmetries.
//!
//! * [`ncdiff`]: words in the frame fields and their normal form.
//! * [`structures`]: structure constants, validation, catalog, Yang-Mills test.
//! * [`forms`]: Γ-calculus on jets and the pointwise CD checks.
//! * [`cdconst`]: Carnot CD constants and the closed-form geometric constants.
//! * [`heat`]: heat semigroup simulation on step-2 Carnot groups and its estimates.

// Index loops read better than iterator chains in the tensor code; `!(x > 0.0)` is
// deliberate wherever NaN must be rejected.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod exact;
pub mod cdconst;
pub mod forms;
pub mod heat;
pub mod ncdiff;
pub mod structures;

pub use exact::Q;
