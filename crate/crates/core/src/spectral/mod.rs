//! Spectral machinery of the matrix linearization around the ground state:
//! the operator H = -Δσ₃ - 3W⁴σ₃ - 2W⁴σ₃σ₁, its imaginary eigenvalue pair,
//! Jost solutions of the reduced line problem, low-energy scattering data,
//! the distorted Fourier transform with its quasi-resonant substitutes for
//! the zero-energy resonance, coercivity of ⟨Hf, σ₃f⟩ under orthogonality
//! constraints, and the linearized propagator with projection onto the
//! essential spectrum.

mod coercivity;
mod jost;
mod operator;
mod scattering;
mod transform;

pub use coercivity::{coercivity_check, CoercivityConstraints, CoercivityForm, CoercivityReport};
pub use jost::{jost_solve, JostControls, JostKind, JostSolution, JostWorkspace};
pub use operator::{eigenpairs, line_spectrum, EigenData, LinearizedOperator};
pub use scattering::{scattering_data, ScatteringPoint, ScatteringTable};
pub use transform::{quasi_resonant, DistortedTransform, QuasiResonant, TransformControls};
