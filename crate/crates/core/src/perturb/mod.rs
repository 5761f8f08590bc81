//! Perturbation of a maximally homogeneous connecting map into one whose
//! eigenvalue images cover every source base, with an exact distance bound.
//!
//! Pipeline: uncovered arcs are found exactly, grouped into chains, and each
//! arc is covered by grafting a tent onto an eigenvalue function that reaches
//! one of its endpoints. Every graft is replicated over the fibers of the
//! covering tree and re-checked for maximal homogeneity; leftover isolated
//! coincidences are removed by small bumps at the end.

mod descent;
mod gaps;
mod graft;
mod pipeline;

pub use descent::{entry_distances, verify_descent, verify_properties, DescentFailure, DescentReport, PropertyReport};
pub use gaps::{gap_decomposition, maximal_chains, Chain, ChainClass, ChainStructure, GapDecomposition};
pub use graft::{descend, fiber_permutation, graft_tent, FiberCopy, Modification};
pub use pipeline::{
    admissible_delta_bound, check_delta, make_surjective_mh, perturb_chain, repair_distinctness, select_anchor, Anchor, LogEntry,
    PerturbOptions, PerturbationLog, StepKind,
};
