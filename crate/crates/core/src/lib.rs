//! Weak-measurement reversal protection of generalized GHZ states under
//! local amplitude damping.
//!
//! Two engines are provided: [`dense`] keeps full 2ⁿ×2ⁿ density matrices
//! and serves as the reference, [`compact`] keeps the O(n) parameters of the
//! GHZ-structured family. Closed-form measures and fidelities live in
//! [`measures`] and [`fidelity`].

pub mod compact;
pub mod dense;
pub mod error;
pub mod fidelity;
pub mod linalg;
pub mod measures;
pub mod optimize;
pub mod params;

pub use compact::CompactGhzState;
pub use error::{Error, Result};
pub use params::{transmissivity, GhzParams, ProtocolParams};
