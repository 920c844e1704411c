pub mod cli;
pub mod error;
pub mod evolution;
pub mod flat_group;
pub mod forms;
pub mod lie_core;
pub mod quadrature;
pub mod tangent_semidirect;
pub mod tol;
