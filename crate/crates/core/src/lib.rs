pub mod error;
pub mod fits;
pub mod frame;
pub mod geostat;
pub mod healpix;
pub mod sampling;
pub mod sphere;
pub mod stats;
pub mod window;

pub use error::{Error, Result};
