//! Exact geometry, good labellings, folding projections and reflected random
//! walks on planar simple nested fractals.

pub mod budget;
pub mod complexes;
pub mod error;
pub mod field;
pub mod geometry;
pub mod labeling;
pub mod metric;
pub mod projection;
pub mod verify;
pub mod walk;

pub use budget::Budget;
pub use error::{Error, Result};
pub use field::{FieldElement, Rational};
pub use geometry::{FractalSpec, ValidationReport};
