//! LMMSE channel estimation and training-sequence design for correlated MIMO
//! two-way relay links under colored disturbance.
//!
//! The multiple-access (MAC) phase estimates both source-to-relay channels
//! from a stacked training matrix `[S₁; S₂]`; the broadcast (BC) phase
//! estimates each relay-to-source channel from one relay training matrix
//! `S_R`. Channels are Kronecker correlated and the disturbance covariance is
//! `K_q ⊗ K_r`.

pub mod alternate;
pub mod bc;
pub mod channel;
pub mod convex;
pub mod error;
pub mod linalg;
pub mod mac;
pub mod lmmse;
pub mod rng;
pub mod special;
pub mod waterfill;

pub use error::{Error, Result};
