//! Quantitative equational reasoning over finite generalized metric
//! spaces.
//!
//! The pieces, bottom-up: [`gmet`] (finite spaces and their axioms),
//! [`liftings`] (how operations extend distances to tuples), [`terms`] and
//! [`theory`] (signatures, Horn clauses, theories), [`saturation`] (the
//! bounded deduction engine), [`freealg`] (models, satisfaction, the term
//! monad) and [`distributions`] (exact ŁK and Kantorovich distances).

pub mod distributions;
pub mod error;
pub mod expr;
pub mod fixtures;
pub mod freealg;
pub mod gmet;
pub mod liftings;
pub mod parse;
pub mod saturation;
pub mod terms;
pub mod theory;
pub mod transport;
pub mod unit;
pub mod verify;

pub use error::{Error, ParseError};
pub use gmet::{Axiom, FiniteSpace, KindName, MetricKind, SpaceMap};
pub use liftings::{Lifting, LiftingSpec};
pub use saturation::{saturate, SaturationConfig, SaturationResult};
pub use terms::{Signature, Symbol, Term};
pub use theory::{EquationLike, HornClause, Theory};
pub use unit::{Rational, UnitValue};
