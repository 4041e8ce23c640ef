//! Multipartite resource states for key distribution and secret sharing.
//!
//! A dealer and `N` players each hold an information register of dimension
//! `d` and optional shield registers. A resource state gives perfectly
//! correlated, unbiased information digits (the players' digits sum to the
//! negative of the dealer's modulo `d`) that no coalition of dishonest
//! players, even with a purifying eavesdropper, can correlate with the
//! dealer's digit.
//!
//! * [`tensor`]: dense states over labeled registers
//! * [`registers`]: layouts and modular index sets
//! * [`construct`]: state families
//! * [`verify`]: the operational certificate
//! * [`protocols`]: reduction to fewer players, composition of dealers
//! * [`analysis`]: partial-transpose cuts and trace distance
//! * [`fixtures`]: negative controls and separable products
//! * [`statefile`]: JSON state files and reports

pub mod analysis;
pub mod construct;
pub mod error;
pub mod fixtures;
pub mod protocols;
pub mod random;
pub mod registers;
pub mod statefile;
pub mod tensor;
pub mod verify;

pub use error::{QcrError, Result};
pub use registers::SystemLayout;
pub use tensor::{ComplexMatrix, ComplexVector, QuantumState, Role, StateData, Subsystem};
pub use verify::VerificationReport;
