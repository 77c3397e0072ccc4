//! Numerical solvers for the Anderson model on a (K+1)-regular tree.
//!
//! Two independent backends solve the self-consistent distributional equation
//! for the punctured Green's function: a Monte Carlo population-dynamics
//! iteration on half-plane sample pools and a deterministic Cauchy-projected
//! density iteration on the real line. An exact finite-tree recursion serves
//! as an oracle for both. On top sit Lyapunov-exponent estimation, the
//! delocalization-criterion margin, sub-Cauchy tail certificates for the
//! hyperbolic energy regime, and phase classification.

pub mod density;
pub mod disorder;
pub mod halfplane;
pub mod ks;
pub mod population;
pub mod rng;
pub mod spectra;

pub use disorder::{DisorderLaw, UniformScaling, ValidationReport};
pub use halfplane::{branch_sqrt, free_green, hyp_dist, EnergyPoint, HalfPlanePoint, MoebiusMap};
pub use population::{IterationConfig, MeasurePool, PoolStats};
pub use spectra::SpectralReport;
