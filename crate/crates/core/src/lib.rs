pub mod continuum;
pub mod entanglement;
pub mod error;
pub mod fitting;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod qubism;
pub mod sdrg;
pub mod spectra;

pub use error::{Error, Result};
