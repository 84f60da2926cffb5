//! Finite samples of point sets with finite local complexity, and the order
//! diagnostics computed on them: patch counting and its entropy, cluster
//! frequencies, repetitivity, the hull metric and separated sets, finite
//! volume diffraction, and Mahler-measure entropies of dimer models.

pub mod delone;
pub mod diffraction;
pub mod error;
pub mod generators;
pub mod hullmetric;
pub mod index;
pub mod io;
pub mod mahler;
pub mod patchstat;
pub mod pointset;

pub use error::{Error, Result};
pub use pointset::{crop, translate, BallQuery, PointSet, Vector, Window};
