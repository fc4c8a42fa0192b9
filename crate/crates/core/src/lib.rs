//! Object-level place recognition by graph matching.
//!
//! Local maps of semantically labelled objects become distance-weighted
//! graphs; two such graphs are compared through a Lawler quadratic
//! assignment problem whose affinity matrix mixes uncertainty-aware
//! embedding affinities with edge-length agreement.

pub mod affinity;
pub mod bench;
pub mod config;
pub mod graph;
pub mod mapping;
pub mod render;
pub mod scenario;
pub mod solvers;
pub mod uncertainty;

/// Schema tag carried by every JSON document this crate writes.
pub const SCHEMA: &str = "constellation-match/1";
