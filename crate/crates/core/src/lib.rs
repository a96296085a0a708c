//! Spatio-temporal receptive fields of the generalized Gaussian derivative
//! model, and numerical checks of their joint covariance under spatial
//! scaling, affine, Galilean and temporal scaling transformations.

mod conv;
pub mod error;
pub mod geom;
pub mod kernels;
pub mod scspace;
pub mod verify;
pub mod volume;
pub mod warp;

pub use error::{Error, Result};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
