//! Reduced-order node models and the shared RK4 integrator.

pub mod integrator;
pub mod pulse;
pub mod skyrmion;
pub mod stno;

pub use integrator::{rk4_integrate, rk4_integrate_with};
pub use pulse::{Pulse, PulseTrain};
pub use skyrmion::{SeparabilityReport, SkyrmionParams, SkyrmionState};
pub use stno::{StnoParams, StnoState};
