//! Spherical Wigner function of a collective spin state.

pub mod clebsch;
pub mod grid;
pub mod harmonics;
pub mod multipole;

pub use clebsch::{clebsch_gordan, HalfInt};
pub use grid::{
    fringe_contrast, lobe_centroid, wigner_function, Arc, FringeBand, GridSpec, WignerError, WignerGrid,
    WignerMetadata,
};
pub use harmonics::spherical_harmonic;
pub use multipole::{multipole_basis, MultipoleBasis, MultipoleCoefficient};
