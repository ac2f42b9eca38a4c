//! L2 projections onto the element and face spaces, the BDM projection, and
//! the discrete norm equivalence between `min_eta ||v + grad eta||` and
//! `||curl v||` on `[P_{k+1}]^3`.
//!
//! Element and face bases are orthonormal, so every L2 projection is a list
//! of inner products. Non-polynomial input is integrated with the degree-14
//! rules.

use nalgebra::{DMatrix, DVector, Point3, Vector3};

use crate::assembly::{ElementGeometry, FaceGeometry, LocalLayout, ReferenceData, SolutionFields};
use crate::error::{Error, SolveError, SpaceError};
use crate::linsolve::dense_solve;
use crate::manufactured::ExactSolution;
use crate::mesh::Mesh;
use crate::polyspace::{dim_pk, reference_basis, simplex_quadrature, Domain};

/// Space a set of projection coefficients refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceTag {
    /// `[P_k(K)]^3`.
    W,
    /// `[P_{k+1}(K)]^3`.
    V,
    /// `P_k(K)`.
    Q,
    /// `M^t(F)`.
    Mt,
    /// `P_{k+1}(F)`.
    FaceScalar,
}

/// Coefficients in the orthonormal basis of a space. Vector element spaces
/// store the components one after another.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedField {
    pub space: SpaceTag,
    pub k: usize,
    pub coeffs: Vec<f64>,
}

impl ProjectedField {
    /// Dimension of the tagged space for degree `k`.
    pub fn space_dim(space: SpaceTag, k: usize) -> usize {
        let lay = LocalLayout::new(k);
        match space {
            SpaceTag::W => 3 * lay.nk,
            SpaceTag::V => 3 * lay.nk1,
            SpaceTag::Q => lay.nk,
            SpaceTag::Mt => lay.nm,
            SpaceTag::FaceScalar => lay.ns,
        }
    }
}

/// Input to an element projection.
#[derive(Clone, Copy)]
pub enum ElementField<'a> {
    Vector(&'a dyn Fn(&Point3<f64>) -> Vector3<f64>),
    Scalar(&'a dyn Fn(&Point3<f64>) -> f64),
}

/// Projection helper holding the reference data for one degree `k`.
#[derive(Debug, Clone)]
pub struct Projector {
    reference: ReferenceData,
}

impl Projector {
    pub fn new(k: usize) -> Result<Self, SpaceError> {
        Ok(Projector {
            reference: ReferenceData::new(k)?,
        })
    }

    pub fn k(&self) -> usize {
        self.reference.k
    }

    fn scalar_moments(&self, geo: &ElementGeometry, n: usize, f: impl Fn(&Point3<f64>) -> f64) -> Vec<f64> {
        let rule = &self.reference.fine_rule;
        let s = geo.basis_scale();
        let mut out = vec![0.0; n];
        for (q, (xi, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let v = f(&geo.to_physical(xi)) * w * geo.det * s;
            for (i, o) in out.iter_mut().enumerate() {
                *o += v * self.reference.fine_values[(q, i)];
            }
        }
        out
    }

    /// L2 projection of `field` onto `space` on one element.
    pub fn element(&self, mesh: &Mesh, element: usize, space: SpaceTag, field: ElementField<'_>) -> Result<ProjectedField, Error> {
        let lay = self.reference.layout;
        let geo = ElementGeometry::new(mesh, element);
        let coeffs = match (space, field) {
            (SpaceTag::W | SpaceTag::V, ElementField::Vector(f)) => {
                let n = if space == SpaceTag::W { lay.nk } else { lay.nk1 };
                (0..3).flat_map(|c| self.scalar_moments(&geo, n, |x| f(x)[c])).collect()
            }
            (SpaceTag::Q, ElementField::Scalar(f)) => self.scalar_moments(&geo, lay.nk, f),
            _ => {
                return Err(Error::Input(format!("field kind does not match element space {space:?}")));
            }
        };
        Ok(ProjectedField {
            space,
            k: self.k(),
            coeffs,
        })
    }

    /// Evaluates element coefficients at a physical point.
    pub fn eval_element(&self, mesh: &Mesh, element: usize, field: &ProjectedField, x: &Point3<f64>) -> Vec<f64> {
        let geo = ElementGeometry::new(mesh, element);
        let vals = geo.tabulate_values(&self.reference.basis, &[geo.to_reference(x)]);
        let n = match field.space {
            SpaceTag::V => self.reference.layout.nk1,
            _ => self.reference.layout.nk,
        };
        let comps = field.coeffs.len() / n;
        (0..comps)
            .map(|c| (0..n).map(|i| field.coeffs[c * n + i] * vals[(0, i)]).sum())
            .collect()
    }

    /// Projection of the tangential part of `f` onto `M^t(F)`.
    pub fn face_tangential(&self, mesh: &Mesh, face: usize, f: impl Fn(&Point3<f64>) -> Vector3<f64>) -> Result<ProjectedField, Error> {
        let fg = FaceGeometry::new(mesh, face, self.k())?;
        let quad = fg.quadrature(&self.reference.fine_face_rule);
        let values: Vec<[f64; 2]> = quad
            .points
            .iter()
            .map(|x| {
                let v = f(x);
                [v.dot(&fg.frame.tangent1), v.dot(&fg.frame.tangent2)]
            })
            .collect();
        Ok(ProjectedField {
            space: SpaceTag::Mt,
            k: self.k(),
            coeffs: fg.trace.project_tangential(&quad.rule, &values),
        })
    }

    /// Projection onto `P_{k+1}(F)`.
    pub fn face_scalar(&self, mesh: &Mesh, face: usize, f: impl Fn(&Point3<f64>) -> f64) -> Result<ProjectedField, Error> {
        let fg = FaceGeometry::new(mesh, face, self.k())?;
        let quad = fg.quadrature(&self.reference.fine_face_rule);
        let values: Vec<f64> = quad.points.iter().map(f).collect();
        Ok(ProjectedField {
            space: SpaceTag::FaceScalar,
            k: self.k(),
            coeffs: fg.trace.project_scalar(&quad.rule, &values),
        })
    }

    /// BDM projection onto `[P_{k+1}(K)]^3`: normal moments against
    /// `P_{k+1}(F)` on every face and interior moments against the
    /// first-kind Nedelec space `[P_{k-1}]^3 + S_k`, where `S_k` holds the
    /// homogeneous degree-`k` fields `q` with `(x - x_c) . q = 0`.
    pub fn bdm(&self, mesh: &Mesh, element: usize, u: impl Fn(&Point3<f64>) -> Vector3<f64>) -> Result<ProjectedField, Error> {
        let k = self.k();
        let lay = self.reference.layout;
        let n = 3 * lay.nk1;
        let geo = ElementGeometry::new(mesh, element);
        let mut dof = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DMatrix::<f64>::zeros(n, 1);
        let mut row = 0;

        for (lf, f) in mesh.tet_faces(element).into_iter().enumerate() {
            let fg = FaceGeometry::new(mesh, f, k)?;
            let normal = fg.frame.normal * mesh.face_sign(element, lf);
            let quad = fg.quadrature(&self.reference.fine_face_rule);
            let refpts: Vec<[f64; 3]> = quad.points.iter().map(|x| geo.to_reference(x)).collect();
            let phi = geo.tabulate_values(&self.reference.basis, &refpts);
            for l in 0..lay.ns {
                for (q, w) in quad.rule.weights.iter().enumerate() {
                    let wz = w * quad.table.scalar[(q, l)];
                    for c in 0..3 {
                        for i in 0..lay.nk1 {
                            dof[(row, c * lay.nk1 + i)] += wz * phi[(q, i)] * normal[c];
                        }
                    }
                    rhs[(row, 0)] += wz * u(&quad.points[q]).dot(&normal);
                }
                row += 1;
            }
        }

        if k > 0 {
            let rule = &self.reference.fine_rule;
            let phys: Vec<Point3<f64>> = rule.points.iter().map(|xi| geo.to_physical(xi)).collect();
            let phi = geo.tabulate_values(&self.reference.basis, &rule.points);
            let uq: Vec<Vector3<f64>> = phys.iter().map(&u).collect();
            let centroid = Point3::from(geo.vertices.iter().map(|v| v.coords).sum::<Vector3<f64>>() / 4.0);
            let scale = mesh.tet_diameter(element);
            // test fields evaluated at the quadrature points
            let mut tests: Vec<Vec<Vector3<f64>>> = Vec::new();
            let nkm1 = dim_pk(3, k - 1);
            for c in 0..3 {
                for i in 0..nkm1 {
                    tests.push((0..rule.len()).map(|q| Vector3::ith(c, phi[(q, i)])).collect());
                }
            }
            let exps = crate::polyspace::monomial::homogeneous_exponents(3, k);
            for coef in rotational_fields(k)? {
                tests.push(
                    phys.iter()
                        .map(|x| {
                            let y = (x - centroid) / scale;
                            let mut m = vec![0.0; exps.len()];
                            crate::polyspace::monomial::eval_monomials(&exps, &[y.x, y.y, y.z], &mut m);
                            Vector3::from_fn(|c, _| {
                                (0..exps.len()).map(|j| coef[c * exps.len() + j] * m[j]).sum()
                            })
                        })
                        .collect(),
                );
            }
            for t in &tests {
                for (q, w) in rule.weights.iter().enumerate() {
                    let wq = w * geo.det;
                    for c in 0..3 {
                        for i in 0..lay.nk1 {
                            dof[(row, c * lay.nk1 + i)] += wq * phi[(q, i)] * t[q][c];
                        }
                    }
                    rhs[(row, 0)] += wq * uq[q].dot(&t[q]);
                }
                row += 1;
            }
        }
        if row != n {
            return Err(SolveError::DimensionMismatch { expected: n, found: row }.into());
        }
        let c = dense_solve(&dof, &rhs)?;
        Ok(ProjectedField {
            space: SpaceTag::V,
            k,
            coeffs: c.column(0).iter().copied().collect(),
        })
    }
}

/// L2 projection of `field` onto the element space `space` of degree `k`.
pub fn l2_project_element(mesh: &Mesh, element: usize, k: usize, space: SpaceTag, field: ElementField<'_>) -> Result<ProjectedField, Error> {
    Projector::new(k)?.element(mesh, element, space, field)
}

/// Projection of the tangential part of `f` onto `M^t(F)`.
pub fn project_face_tangential(mesh: &Mesh, face: usize, k: usize, f: impl Fn(&Point3<f64>) -> Vector3<f64>) -> Result<ProjectedField, Error> {
    Projector::new(k)?.face_tangential(mesh, face, f)
}

/// Projection onto `P_{k+1}(F)`.
pub fn project_face_scalar(mesh: &Mesh, face: usize, k: usize, f: impl Fn(&Point3<f64>) -> f64) -> Result<ProjectedField, Error> {
    Projector::new(k)?.face_scalar(mesh, face, f)
}

/// BDM projection onto `[P_{k+1}(K)]^3`.
pub fn bdm_project(mesh: &Mesh, element: usize, k: usize, u: impl Fn(&Point3<f64>) -> Vector3<f64>) -> Result<ProjectedField, Error> {
    Projector::new(k)?.bdm(mesh, element, u)
}

/// Coefficient vectors (three blocks of homogeneous degree-`k` monomial
/// coefficients) spanning `{q : x . q = 0}`.
fn rotational_fields(k: usize) -> Result<Vec<Vec<f64>>, SpaceError> {
    use crate::polyspace::monomial::homogeneous_exponents;
    let exps = homogeneous_exponents(3, k);
    let target = homogeneous_exponents(3, k + 1);
    let nh = exps.len();
    let mut map = DMatrix::<f64>::zeros(target.len(), 3 * nh);
    for c in 0..3 {
        for (j, e) in exps.iter().enumerate() {
            let mut t = *e;
            t[c] += 1;
            let row = target.iter().position(|x| *x == t).expect("degree k+1 monomial");
            map[(row, c * nh + j)] = 1.0;
        }
    }
    let null = null_space(&map, 1e-10);
    let expected = k * (k + 2);
    if null.ncols() != expected {
        return Err(SpaceError::RankDeficient {
            what: "rotational fields",
            value: null.ncols() as f64,
        });
    }
    Ok(null.column_iter().map(|c| c.iter().copied().collect()).collect())
}

/// Orthonormal basis of the null space of `a` (relative tolerance `tol`).
fn null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    // pad to at least n rows so the SVD yields a full right basis
    let mut padded = DMatrix::<f64>::zeros(a.nrows().max(n), n);
    padded.view_mut((0, 0), a.shape()).copy_from(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors");
    let smax = svd.singular_values.max();
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| svd.singular_values[i] <= tol * smax.max(1.0))
        .map(|i| vt.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the column space of `a`.
fn range_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let smax = svd.singular_values.max();
    let cols: Vec<DVector<f64>> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * smax)
        .map(|i| u.column(i).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

/// Element and face projections of an exact solution, arranged like a
/// discrete solution: `Pi_W w`, `Pi_V u`, `Pi_Q p` on elements, `P_M u^t`
/// and the `P_{k+1}(F)` projection of `p` on faces.
pub fn project_solution(mesh: &Mesh, k: usize, solution: &dyn ExactSolution) -> Result<SolutionFields, Error> {
    let pr = Projector::new(k)?;
    let lay = LocalLayout::new(k);
    let mut interior = Vec::with_capacity(mesh.num_tets() * lay.m());
    for e in 0..mesh.num_tets() {
        let w = |x: &Point3<f64>| solution.eval(x).w;
        let u = |x: &Point3<f64>| solution.eval(x).u;
        let p = |x: &Point3<f64>| solution.eval(x).p;
        interior.extend(pr.element(mesh, e, SpaceTag::W, ElementField::Vector(&w))?.coeffs);
        interior.extend(pr.element(mesh, e, SpaceTag::V, ElementField::Vector(&u))?.coeffs);
        interior.extend(pr.element(mesh, e, SpaceTag::Q, ElementField::Scalar(&p))?.coeffs);
    }
    let mut traces = Vec::with_capacity(mesh.num_faces() * lay.per_face());
    for f in 0..mesh.num_faces() {
        traces.extend(pr.face_tangential(mesh, f, |x| solution.eval(x).u)?.coeffs);
        traces.extend(pr.face_scalar(mesh, f, |x| solution.eval(x).p)?.coeffs);
    }
    Ok(SolutionFields {
        k,
        layout: lay,
        interior,
        traces,
    })
}

/// `min_eta ||v + grad eta||` versus `||curl v||` for `v` in `[P_{k+1}]^3`
/// on the reference tetrahedron, in orthonormal coefficients.
#[derive(Debug, Clone)]
pub struct NormEquivalence {
    pub k: usize,
    /// Orthonormal basis of `grad P_{k+2}` inside `[P_{k+1}]^3`.
    pub gradients: DMatrix<f64>,
    /// Curl as a map from `[P_{k+1}]^3` to `[P_{k+1}]^3` coefficients.
    pub curl: DMatrix<f64>,
}

impl NormEquivalence {
    pub fn new(k: usize) -> Result<Self, SpaceError> {
        let v = reference_basis(Domain::Tetrahedron, k + 1)?;
        let big = reference_basis(Domain::Tetrahedron, k + 2)?;
        let rule = simplex_quadrature(3, 2 * k + 4)?;
        let tv = v.tabulate(&rule.points);
        let tb = big.tabulate(&rule.points);
        let nv = v.len();
        let mut wv = tv.values.clone();
        for (q, w) in rule.weights.iter().enumerate() {
            wv.row_mut(q).scale_mut(*w);
        }
        // gradients of the non-constant members of P_{k+2}
        let mut grad = DMatrix::<f64>::zeros(3 * nv, big.len() - 1);
        for c in 0..3 {
            let proj = wv.transpose() * &tb.grads[c];
            for j in 1..big.len() {
                for i in 0..nv {
                    grad[(c * nv + i, j - 1)] = proj[(i, j)];
                }
            }
        }
        // (curl (phi_i e_c))_d = (grad phi_i x e_c)_d
        let mut curl = DMatrix::<f64>::zeros(3 * nv, 3 * nv);
        for a in 0..3 {
            let t = wv.transpose() * &tv.grads[a];
            for c in 0..3 {
                for d in 0..3 {
                    let coef = Vector3::ith(a, 1.0).cross(&Vector3::ith(c, 1.0))[d];
                    if coef != 0.0 {
                        for j in 0..nv {
                            for i in 0..nv {
                                curl[(d * nv + j, c * nv + i)] += coef * t[(j, i)];
                            }
                        }
                    }
                }
            }
        }
        Ok(NormEquivalence {
            k,
            gradients: range_space(&grad, 1e-10),
            curl,
        })
    }

    /// `min_eta ||v + grad eta||` by least squares.
    pub fn gradient_distance(&self, v: &DVector<f64>) -> f64 {
        let q = &self.gradients;
        (v - q * (q.transpose() * v)).norm()
    }

    pub fn curl_norm(&self, v: &DVector<f64>) -> f64 {
        (&self.curl * v).norm()
    }

    /// The ratio, or `None` when `||curl v|| < 1e-8`.
    pub fn ratio(&self, v: &DVector<f64>) -> Option<f64> {
        let c = self.curl_norm(v);
        (c >= 1e-8).then(|| self.gradient_distance(v) / c)
    }

    /// Smallest singular value of curl on the orthogonal complement of the
    /// gradients.
    pub fn min_singular_value(&self) -> f64 {
        let n = self.curl.ncols();
        let q = &self.gradients;
        let projector = DMatrix::<f64>::identity(n, n) - q * q.transpose();
        let complement = range_space(&projector, 1e-10);
        (&self.curl * complement).singular_values().min()
    }
}
