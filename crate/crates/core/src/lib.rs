//! Cube-complex lattice approximations of bounded domains and the reflecting
//! random walks that live on them.
//!
//! * [`domain`]: membership and cube-clearance oracles, built-in domains.
//! * [`grid`]: level-`k` cube complexes, the segment-based comparison grid,
//!   the measure `m_k`, extension and restriction operators.
//! * [`walk`]: discrete- and continuous-time simple random walks, time reversal.
//! * [`operators`]: transition operator, generator, discrete energies.
//! * [`analysis`]: Neumann heat kernel oracle and Monte Carlo diagnostics.
//! * [`experiment`]: JSON-configured batch runs.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod domain;
pub mod experiment;
pub mod functions;
pub mod geometry;
pub mod grid;
pub mod operators;
pub mod quadrature;
pub mod rng;
pub mod walk;

pub use domain::{make_builtin_domain, BuiltinDomain, CombDomainParams, DomainSpec};
pub use grid::{build_cube_complex, build_edge_graph, GridFunction, GridGraph, GridTag};
pub use rng::RandomSource;
pub use walk::{PathSample, WalkConfig};
