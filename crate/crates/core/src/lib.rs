//! Transform-learning NMF: jointly learns an orthogonal short-time transform
//! and a nonnegative factorization of its power spectrogram.

pub mod analysis;
pub mod audio;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod manifold;
pub mod nmf;
pub mod objective;
pub mod synthetic;

pub use error::{Error, Result};
