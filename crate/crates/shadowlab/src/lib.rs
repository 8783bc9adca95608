//! Simulation and learning toolkit: statevector circuits, free fermions, classical
//! shadows, kernel methods, phase fixtures and entropy features.

pub mod features;
pub mod fermion;
pub mod phases;
pub mod ml;
pub mod rng;
pub mod shadows;
pub mod sim;
