//! Structural checks on computed solutions.

use nalgebra::DVector;

use super::global::SolutionFields;
use super::local::{ElementFace, ElementGeometry, FaceGeometry, ReferenceData};
use super::SchemeParams;
use crate::error::Error;
use crate::mesh::Mesh;

/// `(||div u_h||, ||u_h||)` over the domain, divergence taken elementwise.
pub fn divergence_norm(mesh: &Mesh, fields: &SolutionFields) -> Result<(f64, f64), Error> {
    let reference = ReferenceData::new(fields.k)?;
    let rule = reference.basis.rule();
    let (mut div2, mut u2) = (0.0, 0.0);
    for e in 0..mesh.num_tets() {
        let geo = ElementGeometry::new(mesh, e);
        let tab = geo.tabulate(&reference.basis, &rule.points);
        let coeffs: [DVector<f64>; 3] = std::array::from_fn(|c| DVector::from_column_slice(fields.u(e, c)));
        let mut div = DVector::zeros(rule.len());
        for c in 0..3 {
            div += &tab.grads[c] * &coeffs[c];
            u2 += coeffs[c].norm_squared();
        }
        for (q, w) in rule.weights.iter().enumerate() {
            div2 += w * geo.det * div[q] * div[q];
        }
    }
    Ok((div2.sqrt(), u2.sqrt()))
}

/// Largest `L2(F)` norm, over interior faces, of the `P_{k+1}(F)` projection
/// of the jump `u_h . n` across the face.
pub fn normal_jumps(mesh: &Mesh, fields: &SolutionFields) -> Result<f64, Error> {
    let reference = ReferenceData::new(fields.k)?;
    let params = SchemeParams::hdgs(fields.k);
    let mut worst = 0.0f64;
    for f in 0..mesh.num_faces() {
        let adj = mesh.face_adjacency()[f];
        if adj.is_boundary() {
            continue;
        }
        let fg = FaceGeometry::new(mesh, f, fields.k)?;
        let mut moments = DVector::<f64>::zeros(reference.layout.ns);
        for inc in adj.incidences() {
            let geo = ElementGeometry::new(mesh, inc.element);
            let ef = ElementFace::new(mesh, inc.element, inc.local_face, &geo, &fg, &params, &reference);
            for c in 0..3 {
                moments += (&ef.z * DVector::from_column_slice(fields.u(inc.element, c))) * ef.normal[c];
            }
        }
        worst = worst.max(moments.norm());
    }
    Ok(worst)
}

/// The three nonnegative terms of the discrete energy identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    /// `||w_h||^2`.
    pub w: f64,
    /// `sum tau_t ||P_M u_h^t - u^_t||^2` over element boundaries.
    pub tangential: f64,
    /// `sum tau_n ||p_h - p^||^2` over element boundaries.
    pub normal: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.w + self.tangential + self.normal
    }
}

pub fn energy_terms(mesh: &Mesh, params: &SchemeParams, fields: &SolutionFields) -> Result<EnergyTerms, Error> {
    let reference = ReferenceData::new(params.k)?;
    let lay = reference.layout;
    let mut terms = EnergyTerms {
        w: 0.0,
        tangential: 0.0,
        normal: 0.0,
    };
    for e in 0..mesh.num_tets() {
        let geo = ElementGeometry::new(mesh, e);
        for c in 0..3 {
            terms.w += fields.w(e, c).iter().map(|v| v * v).sum::<f64>();
        }
        for (lf, f) in mesh.tet_faces(e).into_iter().enumerate() {
            let fg = FaceGeometry::new(mesh, f, params.k)?;
            let ef = ElementFace::new(mesh, e, lf, &geo, &fg, params, &reference);
            let mut pm = DVector::<f64>::zeros(lay.nm);
            for c in 0..3 {
                pm += &ef.g[c] * DVector::from_column_slice(fields.u(e, c));
            }
            let jump_t = pm - DVector::from_column_slice(fields.lambda(f));
            terms.tangential += ef.tau_t * jump_t.norm_squared();
            if ef.tau_n > 0.0 {
                let p = DVector::from_column_slice(fields.p(e));
                let pz = ef.z.columns(0, lay.nk) * p;
                let jump_n = pz - DVector::from_column_slice(fields.pi(f));
                terms.normal += ef.tau_n * jump_n.norm_squared();
            }
        }
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::solve_condensed;
    use crate::manufactured::{ExactSolution, SmoothSolution};
    use crate::mesh::build_unit_cube_mesh;

    /// `(f, u_h)` with the degree-14 rule.
    fn load_work(mesh: &Mesh, fields: &SolutionFields) -> f64 {
        let reference = ReferenceData::new(fields.k).unwrap();
        let rule = &reference.fine_rule;
        let mut total = 0.0;
        for e in 0..mesh.num_tets() {
            let geo = ElementGeometry::new(mesh, e);
            let vals = geo.tabulate_values(&reference.basis, &rule.points);
            for (q, (xi, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let f = SmoothSolution.source(&geo.to_physical(xi));
                for c in 0..3 {
                    let uh: f64 = fields.u(e, c).iter().enumerate().map(|(i, a)| a * vals[(q, i)]).sum();
                    total += w * geo.det * f[c] * uh;
                }
            }
        }
        total
    }

    #[test]
    fn energy_identity_with_homogeneous_data() {
        // the smooth solution has u x n = 0 and p = 0 on the cube boundary
        let mesh = build_unit_cube_mesh(2);
        for params in [SchemeParams::hdgs(0), SchemeParams::hdgg(0), SchemeParams::hdgg(1)] {
            let fields = solve_condensed(&mesh, &params, &SmoothSolution).unwrap();
            let terms = energy_terms(&mesh, &params, &fields).unwrap();
            let work = load_work(&mesh, &fields);
            assert!((work - terms.total()).abs() <= 1e-9 * work.abs(), "{params:?}: {work} vs {terms:?}");
            assert!(terms.w > 0.0 && terms.tangential > 0.0);
            assert_eq!(terms.normal > 0.0, params.tau_n_scale > 0.0);
        }
    }

    #[test]
    fn hdgs_fields_are_divergence_free() {
        let mesh = build_unit_cube_mesh(2);
        let fields = solve_condensed(&mesh, &SchemeParams::hdgs(1), &SmoothSolution).unwrap();
        let (div, u) = divergence_norm(&mesh, &fields).unwrap();
        assert!(div <= 1e-9 * u);
        assert!(normal_jumps(&mesh, &fields).unwrap() <= 1e-9);
    }
}
