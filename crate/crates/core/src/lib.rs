//! Perfect state transfer in chains of Rydberg atoms.
//!
//! Pipeline: atomic parameters ([`params`]) feed the linear-spectrum targets
//! ([`targets`]), which the inverse solver ([`inversion`]) turns into atom
//! positions and site detunings. [`evolution`] propagates a single excitation
//! under the effective XX or full Rydberg Hamiltonians, [`sweeps`] scans
//! detuning, principal quantum number and chain length, and [`analysis`]
//! turns the optima into concurrence and a critical chain length.

pub mod analysis;
pub mod basis;
pub mod evolution;
pub mod inversion;
pub mod oracle;
pub mod params;
pub mod sweeps;
pub mod targets;
pub mod units;
