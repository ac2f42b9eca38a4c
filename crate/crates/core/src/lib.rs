//! Hybridizable discontinuous Galerkin discretization of the mixed
//! curl-curl Maxwell problem
//!
//! ```text
//! curl u = w,   curl w + grad p = f,   div u = 0   in Omega,
//! u x n = g,    p = 0                             on the boundary,
//! ```
//!
//! on conforming tetrahedral meshes. Electric field `u` is approximated by
//! piecewise `P_{k+1}`, `w` and `p` by piecewise `P_k`. The globally coupled
//! unknowns are the tangential trace of `u` in the enhanced space
//! `M^t(F) = [P_k(F) + grad P~_{k+2}(F)]^t` and the trace of `p` in
//! `P_{k+1}(F)`; everything else is eliminated element by element.

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod error;
pub mod mesh;
pub mod linsolve;
pub mod manufactured;
pub mod polyspace;
pub mod projections;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/spaces.md")]
    mod spaces {}
    #[doc = include_str!("../../../book/src/projections.md")]
    mod projections {}
    #[doc = include_str!("../../../book/src/scheme.md")]
    mod scheme {}
    #[doc = include_str!("../../../book/src/convergence.md")]
    mod convergence {}
    #[doc = include_str!("../../../book/src/command_line.md")]
    mod command_line {}
}
