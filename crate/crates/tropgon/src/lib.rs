//! Tropical morphisms from metric graphs to metric trees.
//!
//! The central gadget is the gluing datum `(T, d, ~)`: `d` copies of a finite
//! tree `T` glued along per-element partitions of `{1..d}`. A valid datum
//! induces a degree-`d` discrete tropical morphism from its quotient graph to
//! `T`, and an exact-rational edge-length matrix mapping tree edge lengths to
//! skeleton edge lengths. Contracting tree edges gives limits; regrowing a
//! limit produces the finite set of candidate datums whose determinants
//! satisfy a balancing condition. Walking a straight segment through the cone
//! of a trivalent combinatorial type, switching datums at each limit, realizes
//! any genus-g metric graph by a tropical morphism of degree `ceil(g/2) + 1`
//! to a tree, certifying the tree-gonality bound.
//!
//! See the `examples/` directory for runnable entry points, and the `tropgon`
//! binary for file-based workflows.

pub mod datum;
pub mod deform;
pub mod dot;
pub mod dtm;
pub mod elmap;
pub mod enumerate;
pub mod error;
pub mod graph;
pub mod iso;
pub mod json;
pub mod limits;
pub mod metric;
pub mod props;
pub mod regrow;
pub mod util;

pub use error::{Error, Result};
