pub mod astf;
pub mod epsr;
pub mod error;
pub mod eval;
pub mod features;
pub mod geometry;
pub mod gesr;
pub mod io;
pub mod numerics;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};
