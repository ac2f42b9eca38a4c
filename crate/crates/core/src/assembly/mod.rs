//! Element systems, static condensation and the global trace system.
//!
//! Every element couples its interior unknowns `(w, u, p)` to the traces
//! `(u^t, p)` on its four faces. The local matrix is stored with the rows of
//! the `w` and `p` equations negated, which makes the whole element matrix
//! (and hence the condensed trace matrix) symmetric. Solutions are unchanged.

mod diagnostics;
mod global;
mod local;

pub use diagnostics::{divergence_norm, energy_terms, normal_jumps, EnergyTerms};
pub use global::{
    assemble_global, assemble_monolithic, boundary_traces, recover_fields, solve, solve_condensed,
    solve_monolithic, CondensedElement, DofMap, GlobalTraceSystem, MonolithicSystem, SolutionFields,
    SolveOutcome, SolvePath,
};
pub use local::{
    condense, local_matrices, ElementGeometry, OVERKILL_DEGREE, FaceGeometry, LocalLayout, LocalSystem, ReferenceData,
};

use crate::error::Error;

/// Numerical flux for the normal component of `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Flux `u_h . n`; the discrete field is exactly divergence free.
    HdgS,
    /// Flux `u_h . n + tau_n (p_h - p^_h)`.
    HdgG,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::HdgS => "hdgs",
            Variant::HdgG => "hdgg",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "hdgs" | "hdg_s" | "s" => Ok(Variant::HdgS),
            "hdgg" | "hdg_g" | "g" => Ok(Variant::HdgG),
            other => Err(Error::Params(format!("unknown variant '{other}' (expected hdgs or hdgg)"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Largest supported polynomial degree `k`.
pub const MAX_K: usize = 3;

/// Discretization parameters. Stabilization on face `F` with longest edge
/// `h_F` is `tau_t = tau_t_scale / h_F` and `tau_n = tau_n_scale * h_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub k: usize,
    pub variant: Variant,
    pub tau_t_scale: f64,
    pub tau_n_scale: f64,
}

impl SchemeParams {
    /// Validated parameters.
    pub fn new(k: usize, variant: Variant, tau_t_scale: f64, tau_n_scale: f64) -> Result<Self, Error> {
        let p = SchemeParams {
            k,
            variant,
            tau_t_scale,
            tau_n_scale,
        };
        p.validate()?;
        Ok(p)
    }

    /// HDG_s with `tau_t = 1 / h_F`.
    pub fn hdgs(k: usize) -> Self {
        SchemeParams {
            k,
            variant: Variant::HdgS,
            tau_t_scale: 1.0,
            tau_n_scale: 0.0,
        }
    }

    /// HDG_g with `tau_t = 1 / h_F`, `tau_n = h_F`.
    pub fn hdgg(k: usize) -> Self {
        SchemeParams {
            k,
            variant: Variant::HdgG,
            tau_t_scale: 1.0,
            tau_n_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.k > MAX_K {
            return Err(Error::Params(format!("k = {} outside the supported range 0..={MAX_K}", self.k)));
        }
        if !(self.tau_t_scale > 0.0 && self.tau_t_scale.is_finite()) {
            return Err(Error::Params(format!("tau_t_scale must be positive, got {}", self.tau_t_scale)));
        }
        match self.variant {
            Variant::HdgS if self.tau_n_scale != 0.0 => Err(Error::Params(format!(
                "tau_n_scale must be 0 for hdgs, got {}",
                self.tau_n_scale
            ))),
            Variant::HdgG if !(self.tau_n_scale > 0.0 && self.tau_n_scale.is_finite()) => Err(Error::Params(
                format!("tau_n_scale must be positive for hdgg, got {}", self.tau_n_scale),
            )),
            _ => Ok(()),
        }
    }

    pub fn tau_t(&self, h_face: f64) -> f64 {
        self.tau_t_scale / h_face
    }

    pub fn tau_n(&self, h_face: f64) -> f64 {
        match self.variant {
            Variant::HdgS => 0.0,
            Variant::HdgG => self.tau_n_scale * h_face,
        }
    }
}
