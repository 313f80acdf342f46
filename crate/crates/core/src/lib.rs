//! Defect-tolerant bipartite designs.
//!
//! Construction and composition of designs, exact verification by exhaustive
//! search, the finite-k and asymptotic functionals whose reciprocals trace out
//! the redundancy/wiring trade-off, and assembly of region boundaries.

pub mod asymptotic;
pub mod design;
pub mod error;
pub mod lp;
pub mod oracle;
pub mod rational;
pub mod regions;
pub mod subset_eval;

pub use design::{
    copy_designs, hamming_block, is_permutation_invariant, make_complete, make_repetition,
    make_subset, merge_designs, metrics, metrics_exact, symmetrize, BipartiteDesign,
    ExactTradePoint, Labeling, TradePoint,
};
pub use error::{Error, Result};
