//! Behavioral model, design equations and simulators for a voltage-mode
//! biquad filter / quadrature oscillator built from two CCCCTAs
//! (current-controlled current-conveyor transconductance amplifiers) and two
//! grounded capacitors.
//!
//! * [`element`]: one CCCCTA, bias currents to `R_X` and `g_m`.
//! * [`biquad`]: transfer functions, the five filter modes, `ω0`, Q,
//!   frequency sweeps and sensitivities.
//! * [`oscillator`]: the same circuit with grounded inputs, simulated in time.
//! * [`designer`]: bias currents from design targets.
//! * [`quantity`], [`circuit_file`], [`cli`]: text formats and the command line.

pub mod biquad;
pub mod checks;
pub mod circuit_file;
pub mod cli;
pub mod designer;
pub mod element;
pub mod error;
pub mod oscillator;
pub mod quantity;

pub use error::{Error, Result};
