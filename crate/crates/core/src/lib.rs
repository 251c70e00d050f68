//! Hole-aware geometric routing on unit disk graphs.
//!
//! Networks are random unit disk graphs ([`netgen`]) reduced to their planar
//! 2-localized Delaunay subgraph ([`topology`]). Holes are abstracted into
//! bounding boxes and visibility graphs ([`abstraction`]), which the
//! bounding-box router uses next to the classical face-routing baselines
//! ([`routing`]). [`overlay`] simulates the distributed box computation and
//! [`harness`] runs density sweeps.

pub mod abstraction;
pub mod fixtures;
pub mod geom;
pub mod harness;
pub mod netgen;
pub mod overlay;
pub mod routing;
pub mod topology;
