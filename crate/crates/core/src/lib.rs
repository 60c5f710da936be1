//! Optical response of a semiconductor quantum dot coupled to a metal
//! nanoparticle.
//!
//! The dot is a driven two-level system; the nanoparticle is a classical
//! polarizable sphere whose near field feeds the dot's own coherence back into
//! its Rabi frequency. That feedback makes the stationary response multivalued
//! over a window of drive amplitudes, which shows up as hysteresis when the
//! drive is swept up and down.
//!
//! * [`materials`]: tabulated metal permittivity, Drude model, polarizability.
//! * [`coupling`]: geometry to enhancement factor and self-action constant.
//! * [`bloch`]: equations of motion, stationary states, stability, integration.
//! * [`sweep`]: branch diagrams, bistable window, hysteresis runs, phase maps.

pub mod bloch;
pub mod coupling;
pub mod materials;
pub mod sweep;

pub use bloch::{BlochState, BranchPoint, DriveParams};
pub use coupling::{CouplingParams, Orientation, SystemConfig};
pub use materials::{DielectricTable, MaterialFormat};
pub use num_complex::Complex64;
