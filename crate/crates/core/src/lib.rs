//! Rotational excitation of linear molecules by trains of intense, short
//! laser pulses.
//!
//! The crate models each pulse as an impulsive kick `exp(iP cos²θ)` acting on
//! a thermal ensemble of rigid or centrifugally distorted rotors, and derives
//! the observables needed to study resonant and aperiodic pulse trains:
//! rotational coherences, state-resolved Raman spectra, spectrograms over a
//! scanned train parameter, delay optimization, and the phase modulation the
//! aligned gas imprints on a probe pulse.
//!
//! Module map:
//!
//! * [`molecule`], [`rotor`], [`tdse`]: single-molecule building blocks.
//! * [`ensemble`]: thermal mixtures, train propagation, intensity averaging.
//! * [`trains`]: pulse-train construction and resonance planning.
//! * [`observables`], [`spectrum`]: coherences, alignment, Raman spectra.
//! * [`optimize`]: delay scans and coordinate-descent search.
//! * [`mpm`]: molecular phase modulation of a probe pulse.

pub mod constants;
pub mod ensemble;
pub mod error;
pub mod molecule;
pub mod mpm;
pub mod observables;
pub mod optimize;
pub mod rotor;
pub mod scenario;
pub mod spectrum;
pub mod tdse;
pub mod trains;

pub use error::{Error, Result};
pub use molecule::{MoleculeSpec, Parity};
pub use scenario::Scenario;

pub type C64 = num_complex::Complex64;
