//! Exact and numerical tools for sequential Wigner's-friend correlation scenarios.
//!
//! The crate is organised around the behaviour table `p(a,b|x,y)`:
//!
//! * [`scenario`] holds the measurement scenario, behaviours and linear
//!   functionals, plus the canonical text schema in [`schema`];
//! * [`geometry`] does exact rational polytope work (double description,
//!   simplex with certificates, affine hulls);
//! * [`models`] builds the LFIC, no-signalling, local and LF polytopes behind a
//!   common [`models::CorrelationModel`] trait and a name registry;
//! * [`symmetry`] computes relabelling groups and facet orbits;
//! * [`quantum`] turns states and measurements into behaviours;
//! * [`npa`] builds moment relaxations and ships a dense SDP solver;
//! * [`slice`] intersects the models with a 2-plane and renders the result;
//! * [`simulator`] runs the protocol shot by shot.

pub mod error;
pub mod geometry;
pub mod models;
pub mod npa;
pub mod presets;
pub mod quantum;
pub mod rational;
pub mod scenario;
pub mod schema;
pub mod simulator;
pub mod slice;
pub mod symmetry;

pub use error::{Error, Result};
pub use rational::Q;
pub use scenario::{BellFunctional, Behavior, Scenario, Sense, Value};
