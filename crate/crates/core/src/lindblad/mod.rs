//! Master-equation engine: operators built from [`SystemSpec`], the
//! Lindblad right-hand side, the RK4 integrator and the `exp(L t)` oracle.

mod kernel;

pub mod integrate;
pub mod liouvillian;
pub mod master;
pub mod model;
pub mod observables;

pub use integrate::{propagate, Diagnostics, IntegratorConfig, Method, Trajectory};
pub use kernel::Stepping;
pub use liouvillian::{expm_evolve, liouvillian_matrix};
pub use master::{dissipator, rhs};
pub use model::{build_collapse, build_coupled_hamiltonian, build_drive, build_hamiltonian, CollapseMode, Frame, SystemSpec};
pub use observables::{occupation_probabilities, photon_numbers};

pub(crate) use integrate::{whole_multiple, Engine};
pub(crate) use kernel::{from_flat, to_flat};
