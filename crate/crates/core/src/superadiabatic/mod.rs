//! Superadiabatic projections: the per-power coefficient recursion, the
//! off-diagonal couplings it induces, and checks of the Moyal defect.

mod defect;
mod projector;
mod symbols;
mod tables;

pub use defect::{projection_defect, DefectReport, DEFAULT_P_SAMPLES};
pub use projector::SuperadiabaticProjector;
pub use symbols::{
    alpha_limit, coupling_leading_poles, coupling_symbol, projection_symbol, CouplingSymbol,
    ProjectionSymbol,
};
pub use tables::{
    ab_polys, ab_tables, coefficient_tables, structurally_nonzero, ABTable, CoefficientTable,
    Component, Mutation, RecursionOptions, AB_MAX, RECURSION_DEFAULT, RECURSION_MAX,
};
