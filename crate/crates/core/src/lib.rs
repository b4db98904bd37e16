//! Dirichlet-problem solutions and Riemann mappings on planar Jordan domains.
//!
//! The crate solves the Dirichlet problem on a punctured Jordan domain by a
//! deterministic local-to-global relaxation: the domain is covered by an
//! adaptive layout of discs carrying harmonic patches, boundary zones carry
//! local solvers (power-map straightening plus odd reflection for polygon
//! corners and edges, Fourier ring solvers for circular boundaries), and
//! rounds of Poisson-kernel updates drive the piecewise-harmonic field to the
//! solution. A truncated walk-on-spheres Monte Carlo estimator provides an
//! independent cross-check, and the Riemann mapping of the domain is recovered
//! from the punctured-domain solution through Green-function calibration and
//! harmonic conjugation along paths.
//!
//! Module map:
//! - [`geometry`]: domains (polygons, discs), exact and noisy distance
//!   oracles, step and node radii, boundary parameterization.
//! - [`harmonic`]: Poisson kernels and integrals, harmonic patches on discs,
//!   piecewise-harmonic fields, annulus solvers, circle quadrature.
//! - [`localsolve`]: boundary neighborhoods with attached local Dirichlet
//!   solvers and their covering balls.
//! - [`wos`]: truncated walk-on-spheres estimator with a deterministic
//!   counter-based random stream.
//! - [`layout`]: greedy adaptive disc layouts and their verification.
//! - [`relax`]: the round-based relaxation solver.
//! - [`riemann`]: Riemann-map evaluation from the relaxed field.

pub mod export;
pub mod geometry;
pub mod harmonic;
pub mod layout;
pub mod localsolve;
pub mod relax;
pub mod wos;

pub use geometry::{Disc, DomainSpec, Point, PuncturedDomain, Shape};
pub use harmonic::{BoundaryData, HarmonicPatch, PiecewiseHarmonic};
pub use layout::{build_layout, verify_layout, Layout};
pub use localsolve::{AdmissibleNeighborhood, AnnulusNode, LocalSolution};
pub use relax::{solve_dirichlet, RelaxConfig, RelaxField, RelaxState};
pub use wos::{Estimate, WalkConfig, WalkOutcome};
