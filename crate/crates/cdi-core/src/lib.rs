//! One-dimensional transient model of water desalination by
//! flow-through-electrode capacitive deionization (FTE CDI).
//!
//! The cell is an anode / spacer / cathode stack through which the feed
//! flows parallel to the electric field. Macropore salt and ionic charge
//! transport are solved on a finite-volume grid and closed at every
//! electrode cell by a modified-Donnan double-layer model with a Stern
//! capacitance and an ion attraction term. On top of the transport core
//! sit constant-voltage charge/discharge protocols, the downstream
//! mixing-tank/plug-flow sensor model, and equilibrium calibration of the
//! three electrode parameters (micropore volume, attraction energy, Stern
//! capacitance).
//!
//! The crate is `no_std`-compatible (`alloc` required); disable default
//! features and enable `libm` for builds without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("cdi-core requires either the `std` or the `libm` feature");

extern crate alloc;

pub mod calibrate;
pub mod constants;
pub mod downstream;
pub mod dynamics;
pub mod edl;
pub mod error;
pub mod grid;
pub mod linalg;
mod math;
pub mod params;
pub mod protocol;
mod roots;
pub mod transport;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use grid::{Grid, Region};
pub use params::{CellParams, EDLParams};
pub use transport::CellState;
