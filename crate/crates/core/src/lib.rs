//! Post-quantum IPsec over an emulated O-RAN E2 link.
//!
//! The crate is layered bottom-up: [`kem`] and [`crypto`] hold the
//! primitives, [`ike`] and [`esp`] the protocol machinery, [`netlab`] the
//! emulated network, and [`e2`] the control-plane workload that runs on top.

pub mod crypto;
pub mod e2;
pub mod esp;
pub mod ike;
pub mod kat;
pub mod kem;
pub mod netlab;
pub mod rng;
pub mod testbed;

pub use rng::Drbg;
