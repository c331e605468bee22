pub mod curve;
pub mod error;
pub mod rng;
pub mod roots;

pub use curve::{ComplexCurve, CurveSpec, Phi, RealPoint};
pub use error::{Error, Result};
pub mod bands;
pub mod cli;
pub mod extremizers;
pub mod jacobian;
pub mod lorentz;
pub mod measure;
pub mod region;
