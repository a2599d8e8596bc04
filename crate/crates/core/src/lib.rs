//! Volumetric convolution on the unit ball.
//!
//! Functions on the ball are represented by 3D Zernike moments. Convolution with an
//! axially symmetric kernel is evaluated in moment space, over the sphere of rotation
//! axes or over the ball of axes and radial shifts. The same machinery yields a
//! rotation-invariant measure of axial symmetry and a small trainable classification
//! and retrieval pipeline.

pub mod conv;
pub mod error;
pub mod geometry;
pub mod moments;
pub mod net;
pub mod quadrature;
pub mod shape;
pub mod special;
pub mod symmetry;
pub mod verify;

pub use error::{Error, Result};
