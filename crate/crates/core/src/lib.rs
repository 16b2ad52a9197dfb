//! Numerical laboratory for the fractional composite membrane problem.
//!
//! The crate discretizes the Dirichlet form of the fractional Laplacian on
//! unions of lattice cells, computes the first eigenvalue of
//! `(-Δ)^s + α χ_D`, minimizes it over supports `D` of prescribed measure,
//! and checks the rearrangement and isoperimetric inequalities that govern
//! the optimum (Faber–Krahn, Lieb-type, Hardy–Littlewood, Pólya–Szegő).
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the scalar to `f64`, which is what the tolerances
//! quoted throughout the tests assume.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigensolve;
pub mod error;
pub mod gagliardo;
pub mod grid;
pub mod inequalities;
pub mod membrane;
pub mod rearrange;
pub mod refine;
pub mod report;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub use eigensolve::{
    dirichlet_eigenvalue, smallest_eigenpair, smallest_eigenpair_with, EigenOptions, EigenPair,
    SolverMethod,
};
pub use gagliardo::{
    assemble_form, normalization_constant, rayleigh_quotient, seminorm_sq, FormSpec,
    NearFieldPolicy, QuadraticForm, TailPolicy,
};
pub use grid::{
    intersect_translate, make_grid, mask_from_shape, measure, overlap_volume_map, DomainSpec,
    Field, Grid, Mask, ShapeSpec, Shift,
};
pub use inequalities::{
    faber_krahn_experiment, lieb_experiment, product_identity_check, FKReport, IdentityReport,
    LiebConfig, LiebReport, ShiftSet,
};
pub use membrane::{
    bathtub_subset, brute_force_lambda, brute_force_optimum, monotonicity_sweep, optimize,
    optimize_from, snap_cells, MembraneConfig, OptimizationResult, SweepTable, TieRule,
};
pub use rearrange::{
    decreasing_rearrangement, hardy_littlewood_check, increasing_rearrangement,
    polya_szego_check, schwarz_decreasing, schwarz_increasing, symmetrize_mask,
    symmetric_grid, RearrangementProfile, SymmetrizedField,
};

/// Crate version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Grid64 = Grid<f64>;
pub type Mask64 = Mask<f64>;
pub type Field64 = Field<f64>;
pub type FormSpec64 = FormSpec<f64>;
pub type QuadraticForm64 = QuadraticForm<f64>;
pub type EigenPair64 = EigenPair<f64>;
pub type MembraneConfig64 = MembraneConfig<f64>;
pub type OptimizationResult64 = OptimizationResult<f64>;

pub type Grid32 = Grid<f32>;
pub type Mask32 = Mask<f32>;
pub type Field32 = Field<f32>;
pub type QuadraticForm32 = QuadraticForm<f32>;
