//! Consistent-histories toolkit at desk scale.
//!
//! Dense complex linear algebra ([`tensor`]), projectors and sample spaces
//! ([`quantum`]), Bell-CHSH analysis ([`chsh`]), the ancilla-controlled
//! measurement circuit ([`circuit`]), decoherence functionals and master
//! distributions ([`histories`]), a bounded quantum-hidden-variable search
//! ([`hidden`]) and a numerical check that local operations on a distant
//! system leave A-histories untouched ([`locality`]).

pub mod chsh;
pub mod circuit;
pub mod error;
pub mod hidden;
pub mod histories;
pub mod locality;
pub mod quantum;
pub mod random;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{c, kron, partial_trace, CMatrix, Ket, SpaceLayout, C64};
