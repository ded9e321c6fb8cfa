//! Lattice points in Heisenberg dilates of the Cygan–Korányi unit ball.
//!
//! The count |Z^{2q+1} ∩ δ_x𝓑| is computed exactly by slicing along the
//! central axis, and its error term 𝓔_q(x) is compared against the
//! trigonometric approximations, mean-square constants and resonance
//! lower bounds that describe it.

pub mod arithmetic;
pub mod budgets;
pub mod cli;
pub mod counting;
pub mod error;
pub mod geometry;
pub mod moments;
pub mod numeric;
pub mod resonance;
pub mod trig;
pub mod verify;

pub use arithmetic::{RepTable, Q};
pub use counting::{Counter, ErrorSample};
pub use error::{Error, Result};
pub use geometry::Dilation;
