//! Element-level matrices and static condensation.

use nalgebra::{DMatrix, DVector, Matrix3, Point3, Vector3};

use super::SchemeParams;
use crate::error::{Error, SolveError, SpaceError};
use crate::linsolve::DenseLu;
use crate::manufactured::ExactSolution;
use crate::mesh::{FaceFrame, Mesh};
use crate::polyspace::{
    dim_pk, mt_dim, reference_basis, scalar_trace_dim, simplex_quadrature, BasisTable, Domain, FaceRule,
    ModalBasis, QuadratureRule, TraceBasis, TraceTable,
};

/// Degree of the quadrature used for non-polynomial data (loads, boundary
/// data, error norms).
pub const OVERKILL_DEGREE: usize = 14;

/// Sizes and index layout of one element's unknowns.
///
/// Interior unknowns come first: `w` (three components of `P_k`), then `u`
/// (three components of `P_{k+1}`), then `p` (`P_k`). Trace unknowns follow
/// face by face, each face holding its `M^t` block and then its `P_{k+1}(F)`
/// block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalLayout {
    pub nk: usize,
    pub nk1: usize,
    pub nm: usize,
    pub ns: usize,
}

impl LocalLayout {
    pub fn new(k: usize) -> Self {
        LocalLayout {
            nk: dim_pk(3, k),
            nk1: dim_pk(3, k + 1),
            nm: mt_dim(k),
            ns: scalar_trace_dim(k),
        }
    }

    /// Number of interior unknowns.
    pub fn m(&self) -> usize {
        3 * self.nk + 3 * self.nk1 + self.nk
    }

    /// Trace unknowns per face.
    pub fn per_face(&self) -> usize {
        self.nm + self.ns
    }

    /// Trace unknowns per element.
    pub fn nt(&self) -> usize {
        4 * self.per_face()
    }

    pub fn w(&self, c: usize, i: usize) -> usize {
        c * self.nk + i
    }

    pub fn u(&self, c: usize, i: usize) -> usize {
        3 * self.nk + c * self.nk1 + i
    }

    pub fn p(&self, i: usize) -> usize {
        3 * self.nk + 3 * self.nk1 + i
    }

    /// Trace index (relative to the start of the trace block).
    pub fn lambda(&self, face: usize, l: usize) -> usize {
        face * self.per_face() + l
    }

    pub fn pi(&self, face: usize, l: usize) -> usize {
        face * self.per_face() + self.nm + l
    }
}

/// Reference-element data shared by all elements for a given degree.
#[derive(Debug, Clone)]
pub struct ReferenceData {
    pub k: usize,
    pub layout: LocalLayout,
    /// Orthonormal basis of `P_{k+1}` on the reference tetrahedron; its
    /// first `dim P_k` members span `P_k`.
    pub basis: ModalBasis,
    /// Triangle rule exact for products of face polynomials.
    pub face_rule: QuadratureRule,
    pub fine_rule: QuadratureRule,
    pub fine_values: DMatrix<f64>,
    pub fine_face_rule: QuadratureRule,
}

impl ReferenceData {
    pub fn new(k: usize) -> Result<Self, SpaceError> {
        let basis = reference_basis(Domain::Tetrahedron, k + 1)?;
        let fine_rule = simplex_quadrature(3, OVERKILL_DEGREE)?;
        let fine_values = basis.tabulate(&fine_rule.points).values;
        Ok(ReferenceData {
            k,
            layout: LocalLayout::new(k),
            face_rule: simplex_quadrature(2, 2 * k + 2)?,
            fine_face_rule: simplex_quadrature(2, OVERKILL_DEGREE)?,
            basis,
            fine_rule,
            fine_values,
        })
    }
}

/// Affine map `x = v0 + J xi` from the reference tetrahedron.
///
/// Physical basis functions are `psi(J^{-1}(x - v0)) / sqrt(det J)`, which
/// keeps them orthonormal on the physical element.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub vertices: [Point3<f64>; 4],
    pub jac: Matrix3<f64>,
    pub jinv: Matrix3<f64>,
    pub det: f64,
}

impl ElementGeometry {
    pub fn new(mesh: &Mesh, element: usize) -> Self {
        let v = mesh.tet_vertices(element);
        let jac = Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
        let det = jac.determinant();
        let jinv = jac.try_inverse().expect("mesh elements are non-degenerate");
        ElementGeometry {
            vertices: v,
            jac,
            jinv,
            det,
        }
    }

    pub fn to_reference(&self, x: &Point3<f64>) -> [f64; 3] {
        let xi = self.jinv * (x - self.vertices[0]);
        [xi.x, xi.y, xi.z]
    }

    pub fn to_physical(&self, xi: &[f64; 3]) -> Point3<f64> {
        self.vertices[0] + self.jac * Vector3::new(xi[0], xi[1], xi[2])
    }

    pub fn basis_scale(&self) -> f64 {
        1.0 / self.det.sqrt()
    }

    /// Physical values and gradients of `basis` at reference points.
    pub fn tabulate(&self, basis: &ModalBasis, points: &[[f64; 3]]) -> BasisTable {
        let t = basis.tabulate(points);
        let s = self.basis_scale();
        let jt = self.jinv.transpose();
        let mut grads = vec![DMatrix::zeros(points.len(), basis.len()); 3];
        for q in 0..points.len() {
            for i in 0..basis.len() {
                let g = jt * Vector3::new(t.grads[0][(q, i)], t.grads[1][(q, i)], t.grads[2][(q, i)]);
                for a in 0..3 {
                    grads[a][(q, i)] = s * g[a];
                }
            }
        }
        BasisTable {
            values: t.values * s,
            grads,
        }
    }

    /// Physical values only.
    pub fn tabulate_values(&self, basis: &ModalBasis, points: &[[f64; 3]]) -> DMatrix<f64> {
        basis.tabulate(points).values * self.basis_scale()
    }
}

/// A canonical face with its frame and trace bases.
#[derive(Debug, Clone)]
pub struct FaceGeometry {
    pub face: usize,
    pub frame: FaceFrame,
    pub vertices2d: [[f64; 2]; 3],
    pub trace: TraceBasis,
    pub diameter: f64,
}

/// Quadrature on a face with trace bases tabulated at its points.
#[derive(Debug, Clone)]
pub struct FaceQuadrature {
    pub rule: FaceRule,
    pub points: Vec<Point3<f64>>,
    pub table: TraceTable,
}

impl FaceQuadrature {
    /// Cartesian components of the `M^t` basis: `mu[c][(q, l)]`.
    pub fn mt_cartesian(&self, frame: &FaceFrame) -> [DMatrix<f64>; 3] {
        let [m0, m1] = &self.table.mt;
        std::array::from_fn(|c| m0 * frame.tangent1[c] + m1 * frame.tangent2[c])
    }
}

impl FaceGeometry {
    pub fn new(mesh: &Mesh, face: usize, k: usize) -> Result<Self, SpaceError> {
        let frame = *mesh.face_frame(face);
        let verts = mesh.face_vertices(face);
        let vertices2d = verts.map(|v| {
            let (s, t) = frame.coordinates(&v);
            [s, t]
        });
        Ok(FaceGeometry {
            face,
            frame,
            trace: TraceBasis::on_triangle(k, &vertices2d)?,
            vertices2d,
            diameter: mesh.face_diameter(face),
        })
    }

    pub fn quadrature(&self, rule: &QuadratureRule) -> FaceQuadrature {
        let rule = FaceRule::new(&self.vertices2d, rule);
        let points = rule
            .points
            .iter()
            .map(|p| self.frame.origin + self.frame.tangential(p[0], p[1]))
            .collect();
        let table = self.trace.tabulate(&rule.points);
        FaceQuadrature { rule, points, table }
    }
}

/// Face integrals of one element against the trace bases of one face.
pub(crate) struct ElementFace {
    /// Outward unit normal of the element.
    pub normal: Vector3<f64>,
    pub tau_t: f64,
    pub tau_n: f64,
    /// `(phi_i, phi_j)_F` for the `P_{k+1}` element basis.
    pub mass: DMatrix<f64>,
    /// `g[c][(l, i)] = (phi_i, mu_l . e_c)_F`.
    pub g: [DMatrix<f64>; 3],
    /// `(zeta_l, phi_i)_F`.
    pub z: DMatrix<f64>,
    /// `(mu_l, mu_j)_F`.
    pub mt_gram: DMatrix<f64>,
    /// `(zeta_l, zeta_j)_F`.
    pub scalar_gram: DMatrix<f64>,
}

impl ElementFace {
    pub fn new(
        mesh: &Mesh,
        element: usize,
        local_face: usize,
        geo: &ElementGeometry,
        face: &FaceGeometry,
        params: &SchemeParams,
        reference: &ReferenceData,
    ) -> Self {
        let quad = face.quadrature(&reference.face_rule);
        let refpts: Vec<[f64; 3]> = quad.points.iter().map(|x| geo.to_reference(x)).collect();
        let phi = geo.tabulate_values(&reference.basis, &refpts);
        let mut wphi = phi.clone();
        for (q, w) in quad.rule.weights.iter().enumerate() {
            wphi.row_mut(q).scale_mut(*w);
        }
        let mu = quad.mt_cartesian(&face.frame);
        let zeta = &quad.table.scalar;
        let mut wzeta = zeta.clone();
        for (q, w) in quad.rule.weights.iter().enumerate() {
            wzeta.row_mut(q).scale_mut(*w);
        }
        let mut mt_gram = DMatrix::zeros(mu[0].ncols(), mu[0].ncols());
        for m in &mu {
            let mut wm = m.clone();
            for (q, w) in quad.rule.weights.iter().enumerate() {
                wm.row_mut(q).scale_mut(*w);
            }
            mt_gram += m.transpose() * wm;
        }
        ElementFace {
            normal: face.frame.normal * mesh.face_sign(element, local_face),
            tau_t: params.tau_t(face.diameter),
            tau_n: params.tau_n(face.diameter),
            mass: phi.transpose() * &wphi,
            g: std::array::from_fn(|c| mu[c].transpose() * &wphi),
            z: zeta.transpose() * &wphi,
            mt_gram,
            scalar_gram: zeta.transpose() * wzeta,
        }
    }
}

/// Dense blocks of one element:
///
/// ```text
/// [ A  B ] [ x      ]   [ b_int   ]
/// [ C  D ] [ traces ] = [ b_trace ]
/// ```
///
/// `x` holds the interior unknowns, `traces` the four faces' trace unknowns.
/// The `D` and `C` rows are this element's contribution to the trace
/// equations; the global equations are their sums over the two elements of
/// each interior face.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub element: usize,
    pub faces: [usize; 4],
    pub layout: LocalLayout,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub b_int: DVector<f64>,
    pub b_trace: DVector<f64>,
}

impl LocalSystem {
    /// The full `(m + nt)` square matrix.
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let (m, nt) = (self.layout.m(), self.layout.nt());
        let mut k = DMatrix::zeros(m + nt, m + nt);
        k.view_mut((0, 0), (m, m)).copy_from(&self.a);
        k.view_mut((0, m), (m, nt)).copy_from(&self.b);
        k.view_mut((m, 0), (nt, m)).copy_from(&self.c);
        k.view_mut((m, m), (nt, nt)).copy_from(&self.d);
        k
    }

    pub fn full_rhs(&self) -> DVector<f64> {
        let mut r = DVector::zeros(self.layout.m() + self.layout.nt());
        r.rows_mut(0, self.layout.m()).copy_from(&self.b_int);
        r.rows_mut(self.layout.m(), self.layout.nt()).copy_from(&self.b_trace);
        r
    }
}

/// `e_a x e_b`, component `c`.
fn levi(a: usize, b: usize, c: usize) -> f64 {
    let e = |i: usize| Vector3::ith(i, 1.0);
    e(a).cross(&e(b))[c]
}

/// Builds the element system of `element`.
pub fn local_matrices(
    mesh: &Mesh,
    element: usize,
    params: &SchemeParams,
    reference: &ReferenceData,
    solution: &dyn ExactSolution,
) -> Result<LocalSystem, Error> {
    let faces = mesh.tet_faces(element);
    let mut geos = Vec::with_capacity(4);
    for f in faces {
        geos.push(FaceGeometry::new(mesh, f, params.k)?);
    }
    Ok(local_matrices_with(mesh, element, params, reference, &geos, solution))
}

pub(crate) fn local_matrices_with(
    mesh: &Mesh,
    element: usize,
    params: &SchemeParams,
    reference: &ReferenceData,
    face_geos: &[FaceGeometry],
    solution: &dyn ExactSolution,
) -> LocalSystem {
    let lay = reference.layout;
    let (nk, nk1) = (lay.nk, lay.nk1);
    let (m, nt) = (lay.m(), lay.nt());
    let geo = ElementGeometry::new(mesh, element);
    let mut kk = DMatrix::<f64>::zeros(m + nt, m + nt);
    let mut rhs = DVector::<f64>::zeros(m + nt);

    // volume terms
    let rule = reference.basis.rule();
    let tab = geo.tabulate(&reference.basis, &rule.points);
    let mut wv = tab.values.clone();
    for (q, w) in rule.weights.iter().enumerate() {
        wv.row_mut(q).scale_mut(w * geo.det);
    }
    let mass = tab.values.transpose() * &wv;
    // t[a][(i, j)] = (d_a phi_i, phi_j)
    let t: [DMatrix<f64>; 3] = std::array::from_fn(|a| tab.grads[a].transpose() * &wv);

    for c in 0..3 {
        for i in 0..nk {
            for j in 0..nk {
                kk[(lay.w(c, i), lay.w(c, j))] = -mass[(i, j)];
            }
        }
    }
    for c in 0..3 {
        for d in 0..3 {
            for i in 0..nk {
                for j in 0..nk1 {
                    // w rows: (u, curl r) with r = phi_i e_c, u = phi_j e_d
                    let mut s = 0.0;
                    for a in 0..3 {
                        s += levi(a, c, d) * t[a][(i, j)];
                    }
                    kk[(lay.w(c, i), lay.u(d, j))] = s;
                    // u rows: (w, curl v) with v = phi_j e_d, w = phi_i e_c
                    let mut s = 0.0;
                    for a in 0..3 {
                        s += levi(a, d, c) * t[a][(j, i)];
                    }
                    kk[(lay.u(d, j), lay.w(c, i))] = s;
                }
            }
        }
    }
    for c in 0..3 {
        for i in 0..nk1 {
            for j in 0..nk {
                // -(p, div v)
                kk[(lay.u(c, i), lay.p(j))] = -t[c][(i, j)];
                // p rows (negated): (u, grad q)
                kk[(lay.p(j), lay.u(c, i))] = t[c][(j, i)];
            }
        }
    }

    // face terms
    for (lf, fg) in face_geos.iter().enumerate() {
        let ef = ElementFace::new(mesh, element, lf, &geo, fg, params, reference);
        let n = ef.normal;
        let (tt, tn) = (ef.tau_t, ef.tau_n);
        for d in 0..3 {
            for c in 0..3 {
                // <w, v x n> with v = phi_j e_d, w = phi_i e_c
                let cross = Vector3::ith(d, 1.0).cross(&n)[c];
                for i in 0..nk {
                    for j in 0..nk1 {
                        kk[(lay.u(d, j), lay.w(c, i))] += cross * ef.mass[(i, j)];
                    }
                }
            }
            for i in 0..nk {
                for j in 0..nk1 {
                    // p rows (negated): -<u . n, q>
                    kk[(lay.p(i), lay.u(d, j))] -= n[d] * ef.mass[(i, j)];
                }
            }
        }
        // tau_t <P_M u^t, P_M v^t>
        for c in 0..3 {
            for d in 0..3 {
                let gg = ef.g[c].transpose() * &ef.g[d];
                for i in 0..nk1 {
                    for j in 0..nk1 {
                        kk[(lay.u(c, i), lay.u(d, j))] += tt * gg[(i, j)];
                    }
                }
            }
        }
        for i in 0..nk {
            for j in 0..nk {
                kk[(lay.p(i), lay.p(j))] -= tn * ef.mass[(i, j)];
            }
        }
        for l in 0..lay.nm {
            let row = m + lay.lambda(lf, l);
            for c in 0..3 {
                for i in 0..nk1 {
                    // -tau_t <u^_t, v> and -tau_t <u, mu>
                    kk[(lay.u(c, i), row)] = -tt * ef.g[c][(l, i)];
                    kk[(row, lay.u(c, i))] = -tt * ef.g[c][(l, i)];
                }
                for i in 0..nk {
                    // <w x n, mu> and (negated) <u^_t x n, r>
                    let mut lw = 0.0;
                    let mut wl = 0.0;
                    for d in 0..3 {
                        lw += Vector3::ith(c, 1.0).cross(&n)[d] * ef.g[d][(l, i)];
                        wl -= Vector3::ith(d, 1.0).cross(&n)[c] * ef.g[d][(l, i)];
                    }
                    kk[(row, lay.w(c, i))] = lw;
                    kk[(lay.w(c, i), row)] = wl;
                }
            }
            for j in 0..lay.nm {
                kk[(row, m + lay.lambda(lf, j))] = tt * ef.mt_gram[(l, j)];
            }
        }
        for l in 0..lay.ns {
            let row = m + lay.pi(lf, l);
            for c in 0..3 {
                for i in 0..nk1 {
                    // <p^, v . n> and <u . n, zeta>
                    kk[(lay.u(c, i), row)] = n[c] * ef.z[(l, i)];
                    kk[(row, lay.u(c, i))] = n[c] * ef.z[(l, i)];
                }
            }
            for i in 0..nk {
                // p rows (negated): tau_n <p^, q>; trace rows: tau_n <p, zeta>
                kk[(lay.p(i), row)] = tn * ef.z[(l, i)];
                kk[(row, lay.p(i))] = tn * ef.z[(l, i)];
            }
            for j in 0..lay.ns {
                kk[(row, m + lay.pi(lf, j))] = -tn * ef.scalar_gram[(l, j)];
            }
        }
    }

    if !solution.zero_source() {
        let fr = &reference.fine_rule;
        let s = geo.basis_scale();
        for (q, (xi, w)) in fr.points.iter().zip(&fr.weights).enumerate() {
            let f = solution.source(&geo.to_physical(xi));
            let wq = w * geo.det * s;
            for i in 0..nk1 {
                let phi = reference.fine_values[(q, i)] * wq;
                for c in 0..3 {
                    rhs[lay.u(c, i)] += f[c] * phi;
                }
            }
        }
    }

    LocalSystem {
        element,
        faces: mesh.tet_faces(element),
        layout: lay,
        a: kk.view((0, 0), (m, m)).into_owned(),
        b: kk.view((0, m), (m, nt)).into_owned(),
        c: kk.view((m, 0), (nt, m)).into_owned(),
        d: kk.view((m, m), (nt, nt)).into_owned(),
        b_int: rhs.rows(0, m).into_owned(),
        b_trace: rhs.rows(m, nt).into_owned(),
    }
}

/// Schur complement of one element onto its trace unknowns.
#[derive(Debug, Clone)]
pub struct CondensedElement {
    pub element: usize,
    pub faces: [usize; 4],
    /// `S = D - C A^{-1} B`.
    pub s: DMatrix<f64>,
    /// `g = b_trace - C A^{-1} b_int`.
    pub g: DVector<f64>,
    /// `A^{-1} B`.
    pub a_inv_b: DMatrix<f64>,
    /// `A^{-1} b_int`.
    pub a_inv_f: DVector<f64>,
}

impl CondensedElement {
    /// Interior unknowns `A^{-1} (b_int - B traces)`.
    pub fn recover(&self, traces: &DVector<f64>) -> DVector<f64> {
        &self.a_inv_f - &self.a_inv_b * traces
    }
}

/// Eliminates the interior unknowns of a local system.
pub fn condense(local: &LocalSystem) -> Result<CondensedElement, SolveError> {
    let lu = DenseLu::new(&local.a)?;
    let a_inv_b = lu.solve(&local.b);
    let a_inv_f = lu.solve_vec(&local.b_int);
    Ok(CondensedElement {
        element: local.element,
        faces: local.faces,
        s: &local.d - &local.c * &a_inv_b,
        g: &local.b_trace - &local.c * &a_inv_f,
        a_inv_b,
        a_inv_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manufactured::{SmoothSolution, ZeroSolution};
    use crate::mesh::build_unit_cube_mesh;

    fn system(k: usize, params: SchemeParams) -> LocalSystem {
        let mesh = build_unit_cube_mesh(2);
        let r = ReferenceData::new(k).unwrap();
        local_matrices(&mesh, 5, &params, &r, &SmoothSolution).unwrap()
    }

    #[test]
    fn sizes_for_lowest_order() {
        let s = system(0, SchemeParams::hdgs(0));
        assert_eq!(s.layout.m(), 16);
        assert_eq!(s.layout.nt(), 32);
        assert_eq!(s.a.shape(), (16, 16));
        assert_eq!(s.b.shape(), (16, 32));
    }

    #[test]
    fn element_matrix_is_symmetric() {
        for k in 0..=2 {
            for params in [SchemeParams::hdgs(k), SchemeParams::hdgg(k)] {
                let full = system(k, params).full_matrix();
                let asym = (&full - full.transpose()).amax();
                assert!(asym < 1e-12 * full.amax(), "k={k}: {asym:e}");
            }
        }
    }

    #[test]
    fn zero_source_gives_zero_load() {
        let mesh = build_unit_cube_mesh(1);
        let r = ReferenceData::new(1).unwrap();
        let s = local_matrices(&mesh, 0, &SchemeParams::hdgg(1), &r, &ZeroSolution).unwrap();
        assert!(s.b_int.iter().all(|v| *v == 0.0));
        assert!(s.b_trace.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn interior_block_is_invertible_for_both_variants() {
        for k in 0..=2 {
            for params in [SchemeParams::hdgs(k), SchemeParams::hdgg(k)] {
                assert!(condense(&system(k, params)).is_ok(), "k={k} {:?}", params.variant);
            }
        }
    }

    #[test]
    fn hand_condensation() {
        let layout = LocalLayout::new(0);
        let local = LocalSystem {
            element: 0,
            faces: [0; 4],
            layout,
            a: DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]),
            b: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            c: DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
            d: DMatrix::from_row_slice(1, 1, &[3.0]),
            b_int: DVector::zeros(2),
            b_trace: DVector::zeros(1),
        };
        let c = condense(&local).unwrap();
        assert_eq!(c.s, DMatrix::from_row_slice(1, 1, &[3.0]));
    }

    #[test]
    fn physical_basis_is_orthonormal() {
        let mesh = build_unit_cube_mesh(3);
        let r = ReferenceData::new(1).unwrap();
        let geo = ElementGeometry::new(&mesh, 17);
        let t = geo.tabulate_values(&r.basis, &r.fine_rule.points);
        let mut wt = t.clone();
        for (q, w) in r.fine_rule.weights.iter().enumerate() {
            wt.row_mut(q).scale_mut(w * geo.det);
        }
        let g = t.transpose() * wt;
        assert!((g - DMatrix::identity(r.layout.nk1, r.layout.nk1)).amax() < 1e-12);
    }
}
