//! Collective spin dynamics of atomic cat states in the symmetric Dicke
//! subspace under thermal collective decay.

pub mod dicke;
pub mod integrator;
pub mod lindblad;
pub mod observables;
pub mod scenario;
pub mod special;
pub mod wigner;
