//! Simulation and verification toolkit for the misorientation-coupled curve
//! shortening flow of a single periodic grain boundary.
//!
//! The energy of a boundary given as the graph of a zero-mean periodic
//! `u: [0, 1) -> R` with misorientation `α` is `E[u, α] = σ(α) L(u)`, with
//! `L` the arc length of one period. The crate provides
//!
//! * [`grid`]: spectral calculus on zero-mean periodic grid functions,
//! * [`sigma`]: analytic energy densities and their critical points,
//! * [`energy`]: `E`, its gradient `Ė` and the second variation `DĖ`,
//! * [`flow`]: the gradient flow with per-step structural diagnostics,
//! * [`analysis`]: Łojasiewicz–Simon exponent fitting, stability and length
//!   estimates, and decay classification,
//! * [`bounds`]: elementary inequalities the analysis relies on.

pub mod analysis;
pub mod bounds;
pub mod energy;
pub mod error;
pub mod flow;
pub mod grid;
pub mod sigma;

pub use analysis::{DecayClass, LsFit, LsSample, LsSampling};
pub use energy::{energy, frechet_derivative, gateaux_second_derivative, EnergyGradient};
pub use error::{Error, Result};
pub use flow::{evolve, Diagnostics, EvolveError, FlowParams, State, Trajectory};
pub use grid::{GridFunction, XVector};
pub use sigma::{CriticalPoint, CriticalSet, SigmaModel};
