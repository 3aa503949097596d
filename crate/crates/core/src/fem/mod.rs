//! MINI-element discretization: quadrature, element kernels, degrees of
//! freedom, static condensation and the sparse solve backend.

pub mod assembly;
pub mod condense;
pub mod dof;
pub mod element;
pub mod quadrature;
pub mod sparse;

pub use assembly::{
    assemble_convection, assemble_divergence, assemble_viscous, convection_load, saddle_element, solve_mixed,
    Condensation, MiniSpace,
};
pub use condense::{condense_bubbles, BubbleRecovery, ElementSystem};
pub use dof::{apply_dirichlet, DofLayout};
pub use quadrature::QuadratureRule;
pub use sparse::{solve_linear, SparseMatrix, SparseSystem};
