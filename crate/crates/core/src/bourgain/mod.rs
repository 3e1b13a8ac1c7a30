//! Spacetime fields, the dyadic `A_j ∩ B_k` decomposition and the Bourgain
//! type norms built on it.

pub mod dyadic;
pub mod field;
pub mod norms;
pub mod probes;

pub use dyadic::{
    decompose, dyadic_index_mod, dyadic_index_xi, in_region_d, modulation, BlockDecomposition,
};
pub use field::{SpacetimeField, TauLattice};
pub use norms::{mixed_l2_lp, norm, xmod_parts, NormSpec, NormVariant};
pub use probes::{
    cutoff_psi, probe_embedding_29, restriction_norm_upper, windowed_extension, EmbeddingRatios,
    RestrictionBound,
};
