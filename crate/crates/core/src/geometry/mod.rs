//! Finite metric graphs with exact rational geometry.
//!
//! Every coordinate is a [`Q`](crate::Q); no floating point is used anywhere in
//! this layer, so equality of points is decided exactly.

pub mod cover;
pub mod graph;
pub mod plmap;
pub mod point;
pub mod subset;

pub use cover::{build_covering_tree, fiber, CoveringTree};
pub use graph::{Edge, Graph};
pub use plmap::{pl_compose, pl_eval, pl_image, pl_sup_distance, PLMap, Piece, SupDistance};
pub use point::{geodesic, point_distance, GraphPoint, Leg, RawPoint};
pub use subset::{ClosedSubset, GapArc};
