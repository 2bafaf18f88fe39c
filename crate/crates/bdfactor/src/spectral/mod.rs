//! Spectral-side machinery: matrix measures and quadrature, the closed-form
//! Stieltjes transform of the boundary-jump example chain, measure-level
//! Darboux transformations, and transition probabilities by integration.

pub mod km;
pub mod measure;
pub mod stieltjes;
pub mod transforms;

pub use km::{clamp_probability, km_quad_options, km_table, KmTable, KmValue, KM_CLAMP};
pub use measure::{
    constant_chain_measure, integrate_bilinear, Atom, MatrixMeasure, QuadInfo, QuadOptions,
    SqrtKind, SymPolyMat, ATOM_DROP_TOL, ATOM_PSD_TOL, QUAD_MAX_NODES, QUAD_TOL,
};
pub use stieltjes::{
    ar_stieltjes, stieltjes_solve, ResidueReport, StieltjesClosedForm, StieltjesInversion,
    RESIDUE_TOL,
};
pub use transforms::{christoffel, geronimus, GeronimusResult};
