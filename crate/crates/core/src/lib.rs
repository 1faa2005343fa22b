//! Point vortices in a trapped condensate, their reduction by rotational
//! symmetry to a Lie–Poisson system on `u(N)_Γ*`, relative equilibria, and
//! stability certification by linearization and the Energy–Casimir method.

pub mod coalgebra;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod fd;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod stability;

pub use error::{Error, Result, StateViolation};
pub use model::{
    momentum_map, mu_pack, mu_unpack, physical_to_scaled, validate_state, ChargeConfig,
    CoadjointPoint, EcVerdict, EquilibriumReport, PhysicalParams, ScaledUnits, VortexState,
};
pub use ode::{IntegrationError, IntegratorSettings, Scheme};

pub use num_complex::Complex64;
