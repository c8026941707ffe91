//! Lyapunov-feedback state transfer along periodic spin-1/2 chains.
//!
//! Everything lives in the single-excitation sector, where the XY chain
//! reduces to a real symmetric tridiagonal matrix. The crate builds that
//! matrix ([`chain`]), diagonalizes it numerically and, for period-3 chains,
//! in closed form ([`spectral`]), designs the feedback law ([`control`]),
//! integrates the closed loop ([`dynamics`]) and runs disorder studies
//! ([`robustness`]). [`config`] and [`experiment`] drive the `lyapchain`
//! binary.

pub mod chain;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod output;
pub mod robustness;
pub mod spectral;

pub use chain::{ChainSpec, TridiagonalHamiltonian};
pub use control::{ControlMode, ControlSetup, POperator, PulseShaping, Termination};
pub use dynamics::{averaged_fidelity, run_transfer, Integration, StateVector, TrajectoryRecord};
pub use error::{Error, Result};
pub use spectral::{eigendecompose, select_target, Provenance, SpectralDecomposition, TargetSelection};

pub use num_complex::Complex64 as C64;
