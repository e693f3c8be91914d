//! Simulation and analysis of Mølmer-Sørensen entangling gates on trapped-ion
//! hyperfine qubits: gate dynamics, noise, two-qubit tomography, entanglement
//! measures and bootstrap error bars.

pub mod entanglement;
pub mod error;
pub mod gate;
pub mod linalg;
pub mod pipeline;
pub mod state;
pub mod stats;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use state::{Basis, DensityMatrix, PauliCoeffs, PureState};
pub use stats::Seed;
pub use tomography::{CountsRecord, DetectionModel, DetectorKind, MeasurementSetting};
