//! Measurable Riemannian geometry for strongly local Dirichlet forms, at desk scale.
//!
//! The crate is organised bottom-up:
//!
//! * [`poly`]: exact sparse polynomials in coordinate variables, the function class `F ∘ y`.
//! * [`graph_form`]: finite weighted-graph Dirichlet forms. Energy measures, generator,
//!   resolvent and harmonic extension are all computed exactly and serve as the oracle
//!   for every continuum statement checked elsewhere.
//! * [`sg`]: the Sierpinski gasket in harmonic coordinates, the Kusuoka measure and the
//!   cellwise metric `Z_w`.
//! * [`models`]: Euclidean divergence-form operators and the first Heisenberg group.
//! * [`calculus`]: fiber inner products, energy, gradient, divergence and generator in
//!   coordinates over any [`CoordinateModel`].
//! * [`builder`]: coordinates and an energy dominant measure built from resolvent
//!   functions on a finite graph.

pub mod builder;
pub mod calculus;
mod error;
pub mod graph_form;
pub mod linalg;
pub mod models;
pub mod poly;
pub mod sg;

pub use builder::{BoundsReport, BuiltCoordinates};
pub use calculus::FiberElement;
pub use error::{Error, Result};
pub use graph_form::{GraphForm, VertexMeasure};
pub use models::{BoxDomain, CoefficientField, CoordinateModel};
pub use poly::{Polynomial, VarNames};
pub use sg::{BoundaryPair, CellData, GasketGraph, LevelStats, Word};
