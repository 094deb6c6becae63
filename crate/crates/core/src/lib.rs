//! overlap-lab: simulation and verification toolkit for eigenvector overlaps
//! (eigenvalue condition numbers) of non-Hermitian random matrices.
//!
//! The library is organized around nine modules:
//!
//! * [`ensembles`] — reproducible sampling of Ginibre / Wigner-type matrices.
//! * [`hermitization`] — the 2N×2N Hermitisation of X−z and its resolvent functionals.
//! * [`eigen_overlaps`] — bi-orthogonal eigenvector overlaps O_nm and partial Schur probes.
//! * [`self_consistent`] — the cubic self-consistent equation for m_z(w) and the
//!   deterministic two-resolvent approximation A₁₁…A₂₂.
//! * [`flow`] — the characteristic flow of spectral parameters and its closed form.
//! * [`limit_densities`] — limiting bulk/edge overlap densities and their CDF tables.
//! * [`gauss_divisible`] — saddle-point scalars (η_{z,t}, σ_{z,t}, …) and regime predicates.
//! * [`girko_stats`] — Girko-style linear statistics, least-SV detectors, overlap estimator.
//! * [`harness`] — seeded Monte Carlo experiments, summary statistics, CSV/JSON emitters.

pub mod ensembles;
pub mod error;
pub mod quad;
pub mod hermitization;
pub mod eigen_overlaps;
pub mod self_consistent;
pub mod flow;
pub mod limit_densities;
pub mod gauss_divisible;
pub mod girko_stats;
pub mod harness;

pub use error::OverlapError;

/// Complex scalar used throughout (f64 re/im).
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = ndarray::Array2<C64>;

/// Dense complex vector.
pub type CVec = ndarray::Array1<C64>;
