//! Limiting spectral moments of weighted symmetric random matrices with
//! dependent entries.
//!
//! The limit moments are computed analytically as sums of tree integrals over
//! non-crossing pair partitions ([`tree_integrals`]) and empirically by sampling
//! the ensembles ([`ensembles`]) and measuring trace moments and spectra
//! ([`spectra`]).

pub mod ensembles;
pub mod error;
pub mod nc_partitions;
pub mod relations;
pub mod spectra;
pub mod tree_integrals;
pub mod weights;

#[cfg(feature = "cli")]
pub mod cli;

pub use error::{Error, Result};
pub use ensembles::{sample_matrix, BlockMode, EnsembleKind, EnsembleSpec, EntryDist, MatrixSample};
pub use nc_partitions::{
    adopted_graph, build_adopted_sequence, catalan, enumerate_nc_pair_partitions, AdoptedGraph,
    AdoptedSequence, PairPartition,
};
pub use relations::{block_relation, condition_counts, wigner_relation, EquivalenceRelation};
pub use spectra::{eigenvalues, empirical_moments, trace_power_moment, SpectralSample};
pub use tree_integrals::{j_alpha, scl_verdict, theoretical_moment, TreeIntegrator};
pub use weights::{is_phi_constant, phi, WeightFn};
