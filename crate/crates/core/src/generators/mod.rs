//! Constructors for the example point sets and exact dimer counts.

mod lattice;
mod model_set;
mod special;
mod substitution;
mod tilings;

pub use lattice::{gauss_reduce, lattice};
pub use model_set::{model_set, CutProjectScheme, InternalWindow, TAU, TAU_CONJ};
pub use special::{euler_gap_set, euler_partial_sum, uniform_random, visible_points};
pub use substitution::{substitution_chain, SubstitutionRule, MAX_WORD_LEN};
pub use tilings::{
    domino_count, ln_big, lozenge_count, TilingCountResult, TilingShape, MAX_DOMINO_WIDTH, MAX_DOMINO_WORDS,
    MAX_LOZENGE_STATES,
};
