//! Numerical laboratory for ground-state bubble dynamics of the 3D
//! energy-critical focusing NLS, `i ψ_t = -Δψ - |ψ|⁴ψ`,
//! built around the static profile W(ρ) = (1 + ρ²/3)^{-1/2}.  The crate
//! constructs matched asymptotic approximate solutions (inner, self-similar
//! and remote regions glued by smooth cutoffs), evolves radial data with a
//! conservative split-step scheme, and implements the spectral machinery of
//! the linearized operator: discrete modes, Jost solutions, the distorted
//! Fourier transform at low energies, coercivity of the energy quadratic
//! form, and a contraction iteration for the dispersive component.

pub mod cutoff;
pub mod error;
pub mod evolve;
pub mod field;
pub mod grid;
pub mod ground_state;
pub mod inner;
pub mod jet;
pub mod linalg;
pub mod ode;
pub mod oscquad;
pub mod remote;
pub mod self_similar;
pub mod series;
pub mod spectral;

pub use error::{CoreError, Result};
