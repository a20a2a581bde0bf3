//! Weighted conditional expectation operators `T = M_w E M_u` on finite
//! measure spaces.
//!
//! The crate is split in two halves that never share code paths:
//!
//! * closed forms, evaluated pointwise from the conditional moments
//!   `E(u)`, `E(w)`, `E(uw)`, `E(|u|²)`, `E(|w|²)` ([`wce_operator`],
//!   [`operator_classes`], [`spectral_analysis`]);
//! * a dense numerical oracle over `L²(μ)` ([`operator_algebra`]) that
//!   computes the same objects from the operator matrix alone.
//!
//! Every quantity is available from both sides so one can be checked
//! against the other.

pub mod cli;
pub mod error;
pub mod instance_factory;
pub mod measure_space;
pub mod operator_algebra;
pub mod operator_classes;
pub mod spectral_analysis;
pub mod tolerance;
pub mod wce_operator;

pub use error::{Error, Result};
pub use measure_space::{FiniteMeasureSpace, IndexSet, MeasurableFunction, SubSigmaAlgebra};
pub use operator_algebra::{PolarParts, WeightedOperator};
pub use tolerance::Tolerances;
pub use wce_operator::WceOperator;

/// Complex scalar used throughout.
pub type Scalar = num_complex::Complex64;
