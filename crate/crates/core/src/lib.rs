//! Excitable oscillator networks under weak excitatory synaptic coupling.
//!
//! The crate models each cell as a planar relaxation oscillator with an
//! N-shaped `v`-nullcline and offers two engines on top of it:
//!
//! * [`ifsim`]: the singular (ε → 0) limit, where the network reduces to a
//!   hybrid integrate-and-fire system driven by travel-time tables;
//! * [`odesim`]: a fixed-step RK4 integrator of the full two-timescale ODE.
//!
//! [`analysis`] evaluates the contraction constants, the existence and
//! global synchronization criteria, and locates the synchronous fixed point
//! of the return map.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub(crate) mod numeric;

pub mod analysis;
pub mod ifsim;
pub mod network;
pub mod neuron;
pub mod odesim;

pub use error::{Error, Result};
