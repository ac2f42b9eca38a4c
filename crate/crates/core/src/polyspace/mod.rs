//! Polynomial spaces on reference simplices and mesh faces.

pub mod basis;
pub mod monomial;
pub mod quadrature;
pub mod trace;

pub use basis::{gram_matrix, reference_basis, BasisTable, Domain, ModalBasis, MAX_DEGREE};
pub use monomial::dim_pk;
pub use quadrature::{simplex_quadrature, QuadratureRule};
pub use trace::{mt_dim, scalar_trace_dim, trace_space_basis, FaceRule, TraceBasis, TraceTable};
