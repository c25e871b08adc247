//! Finite-dimensional operator theory for Ritt_E operators: peripheral point
//! sets and their convex regions, Taylor coefficient machinery, mean ergodic
//! decompositions, square functions, explicit unitary dilations, joint
//! dilations of commuting tuples, von Neumann ratios, joint similarity to
//! contractions and the contour-integral polygonal functional calculus.

pub mod dilation;
pub mod error;
pub mod numerics;
pub mod ergodic;
pub mod funcalc;
pub mod instances;
pub mod multivar;
pub mod polygonal;
pub mod squarefn;
pub mod taylor;

pub use error::{Error, Result};
pub use numerics::{CMatrix, CVector, C64};
