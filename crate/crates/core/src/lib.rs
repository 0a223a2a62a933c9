//! Numerical laboratory for Hilbert geometries of bounded convex bodies.

pub mod convex_body;
pub mod discretization;
pub mod error;
pub mod hilbert_measure;
pub mod hilbert_metric;
pub mod point;
pub mod quadrature;
pub mod selftest;
pub mod spectral;

pub use convex_body::{BodyKind, Chord, ChordParams, ConvexBody};
pub use error::{Error, Result};
pub use point::{Point, Vector};
