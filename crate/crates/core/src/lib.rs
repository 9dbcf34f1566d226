//! Variance-Gamma option pricing: a moment-matched pentanomial lattice,
//! an explicit finite-difference scheme for the Taylor-expanded PIDE,
//! quadrature and Black-Scholes reference pricers, and method-of-moments
//! fitting of return series.

pub mod bessel;
pub mod error;
pub mod estimation;
pub mod lattice;
pub mod option;
pub mod pide_fd;
pub mod quadrature;
pub mod reference;
pub mod vg_model;

pub use error::{Result, VgError};
pub use lattice::{binomial_bs_price, price_lattice, LatticeConfig, PentanomialLattice, ProbVector};
pub use option::{ExerciseStyle, OptionKind, OptionSpec};
pub use pide_fd::{price_fd, FdCoefficients, FdResult, GridConfig};
pub use reference::{black_scholes_price, quadrature_european_price, QuadratureConfig};
pub use vg_model::{Cumulants, VgParams};
