//! Inductive systems with generalized diagonal connecting maps
//! `a ↦ Σ_y (a ∘ λ_y) ⊗ q_y`, their example families, and the
//! approximate-intertwining test for pairs of systems.

mod generators;
mod intertwine;
mod mapexpr;
mod space;
mod system;

pub use generators::{
    constant_schedule, dense_schedule, doubling_map, dynamics, goodearl, van_der_corput, villadsen1, villadsen2_skeleton,
};
pub use intertwine::{check_approx_intertwining, FiniteSystemPair, IntertwiningReport, IntertwiningVerdict, LevelBound};
pub use mapexpr::{compose, MapExpr};
pub use space::{Space, SpaceHandle, SpacePoint};
pub(crate) use system::covers;
pub use system::{
    composite_eigenvalue, gendiag_check, untwist, Bundle, GenDiagReport, GenDiagSystem, Level, Step, StepReport, Verdict, YEntry,
};
