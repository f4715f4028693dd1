pub mod constitutive;
pub mod coupling;
pub mod driver;
pub mod error;
pub mod fem;
pub mod mechanics;
pub mod mesh;
pub mod newton;
pub mod phasefield;
pub mod postprocess;
pub mod vtk;

pub use error::{Error, Result};
