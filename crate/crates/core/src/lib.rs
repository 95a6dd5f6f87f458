//! Pseudospectral solver for the two-dimensional semi-relativistic Hartree
//! equation `i∂ₜu = ⟨D⟩u - λ(|x|^{-γ} * |u|²)u` on a periodic box, with the
//! phase-corrected scattering diagnostics used to observe modified scattering.

pub mod cli_io;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod hartree;
pub mod oracle;
pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
pub use evolve::{evolve, IndexBundle, Integrator, RunPlan, SimState};
pub use hartree::{HartreeOperator, NonlinearityParams};
pub use spectral::{forward_ft, inverse_ft, make_grid, ComplexField, Space, SpectralGrid};
