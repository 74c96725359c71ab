//! Vector-space reasoning over description-and-situation ontologies.
//!
//! An ontology of roles and descriptions is parsed ([`parser`]), validated
//! ([`ontology`]), and embedded in `R^n` with one coordinate per element
//! ([`encoder`]). Each description spans a subspace; the reasoner projects a
//! situation vector onto it and reads satisfaction off the signs of the
//! coefficients ([`reasoner`]).
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod encoder;
pub mod enumerate;
pub mod gradcheck;
pub mod numerics;
pub mod ontology;
pub mod parser;
pub mod reasoner;
pub mod scalar;
pub mod synthetic;

pub use encoder::{Basis, EncodeError, Encoder, Vector};
pub use numerics::{Matrix, NumericsError};
pub use ontology::{build_ontology, Declaration, ElementId, ElementKind, Ontology, OntologyError, OntologyWarning};
pub use parser::{parse_ontology, parse_situation, ParseError, Situation};
pub use reasoner::{Activation, ReasonerError};
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Vector64 = Vector<f64>;
pub type Vector32 = Vector<f32>;
pub type Basis64 = Basis<f64>;
pub type Basis32 = Basis<f32>;
pub type Encoder64<'o> = Encoder<'o, f64>;
pub type Encoder32<'o> = Encoder<'o, f32>;
pub type Bases64 = encoder::Bases<f64>;
pub type Bases32 = encoder::Bases<f32>;
