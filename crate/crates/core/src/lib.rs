//! Numerical potential theory for subsets of the real line.
//!
//! The crate computes equilibrium measures and logarithmic capacities of
//! finite interval unions, the comb conformal map of the upper half-plane
//! and the Green functions it encodes, moduli of curve families, and a
//! finite-difference Laplace solver. On top of those it classifies Denjoy
//! domains `C̄ ∖ E` by the dimension (1 or 2) of their cone of positive
//! harmonic functions vanishing on `E`, comparing several independent
//! criteria evaluated over a truncation ladder.

pub mod classify;
pub mod comb;
pub mod cover;
pub mod criteria;
pub mod dirichlet;
pub mod equilibrium;
mod error;
mod grid;
pub mod json;
pub mod modulus;
pub mod quadrature;
pub mod realsets;

pub use classify::{classify, ClassificationReport, ClassifyOptions, Method, Verdict};
pub use comb::{CombData, CombMap, Pole, Slit};
pub use cover::{BlockTag, CoverBlock, CoverSystem};
pub use criteria::{construct_remark4, ThetaSpec, Thresholds};
pub use dirichlet::{benedicks_scan, beta_x, solve_laplace, GridField};
pub use modulus::{module_formula, numeric_modulus, BoundKind, Family, ModuleBound, Quadrilateral};
pub use equilibrium::{capacity, equilibrium_measure, EquilibriumConfig, EquilibriumMeasure};
pub use error::{Error, Result};
pub use realsets::{gaps_to_compact, lebesgue_density, normalize, theta_e, GapSystem, IntervalSet, MobiusMap};
