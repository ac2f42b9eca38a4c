//! Global trace system, monolithic system and field recovery.

use nalgebra::DVector;

use super::local::{condense, local_matrices_with, FaceGeometry, LocalLayout, ReferenceData};
use super::SchemeParams;
use crate::error::{Error, SolveError};
use crate::linsolve::{
    relative_residual, SparseLblt, SparseLu, SparseMatrix, TripletBuilder, DEFAULT_FACTOR_BUDGET_BYTES,
};
use crate::manufactured::ExactSolution;
use crate::mesh::Mesh;

pub use super::local::CondensedElement;

/// Residual bound accepted from the sparse direct solver.
const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Numbering of the global trace unknowns.
///
/// Interior faces are numbered in face order; each holds `nm` coefficients
/// of `u^t` followed by `ns` coefficients of `p^`. Boundary faces carry no
/// unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    pub nm: usize,
    pub ns: usize,
    offsets: Vec<Option<usize>>,
    ndofs: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, layout: &LocalLayout) -> Self {
        let pf = layout.per_face();
        let mut next = 0;
        let offsets = (0..mesh.num_faces())
            .map(|f| {
                if mesh.is_boundary(f) {
                    None
                } else {
                    next += pf;
                    Some(next - pf)
                }
            })
            .collect();
        DofMap {
            nm: layout.nm,
            ns: layout.ns,
            offsets,
            ndofs: next,
        }
    }

    pub fn per_face(&self) -> usize {
        self.nm + self.ns
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    /// First global index of the face's `u^t` block (`None` on the boundary).
    pub fn offset(&self, face: usize) -> Option<usize> {
        self.offsets[face]
    }

    /// Global index of every local trace unknown of an element.
    pub fn element_dofs(&self, faces: &[usize; 4]) -> Vec<Option<usize>> {
        let pf = self.per_face();
        faces
            .iter()
            .flat_map(|&f| (0..pf).map(move |l| self.offsets[f].map(|o| o + l)))
            .collect()
    }
}

/// Traces of every face in face-major layout (`face * per_face + l`), with
/// boundary faces set to the projections of `u^t` and of `p` (zero for a
/// multiplier vanishing on the boundary).
pub fn boundary_traces(
    mesh: &Mesh,
    reference: &ReferenceData,
    faces: &[FaceGeometry],
    solution: &dyn ExactSolution,
) -> Vec<f64> {
    let pf = reference.layout.per_face();
    let mut out = vec![0.0; mesh.num_faces() * pf];
    for (f, fg) in faces.iter().enumerate() {
        if !mesh.is_boundary(f) {
            continue;
        }
        let quad = fg.quadrature(&reference.fine_face_rule);
        let values: Vec<[f64; 2]> = quad
            .points
            .iter()
            .map(|x| crate::manufactured::boundary_data(solution, &fg.frame, x))
            .collect();
        let coef = fg.trace.project_tangential(&quad.rule, &values);
        out[f * pf..f * pf + coef.len()].copy_from_slice(&coef);
        let p: Vec<f64> = quad.points.iter().map(|x| solution.eval(x).p).collect();
        let pc = fg.trace.project_scalar(&quad.rule, &p);
        out[f * pf + coef.len()..(f + 1) * pf].copy_from_slice(&pc);
    }
    out
}

struct Context<'a> {
    mesh: &'a Mesh,
    params: SchemeParams,
    reference: ReferenceData,
    faces: Vec<FaceGeometry>,
    dofmap: DofMap,
    fixed: Vec<f64>,
}

impl<'a> Context<'a> {
    fn new(mesh: &'a Mesh, params: &SchemeParams, solution: &dyn ExactSolution) -> Result<Self, Error> {
        params.validate()?;
        let reference = ReferenceData::new(params.k)?;
        let faces = (0..mesh.num_faces())
            .map(|f| FaceGeometry::new(mesh, f, params.k))
            .collect::<Result<Vec<_>, _>>()?;
        let dofmap = DofMap::new(mesh, &reference.layout);
        let fixed = boundary_traces(mesh, &reference, &faces, solution);
        Ok(Context {
            mesh,
            params: *params,
            reference,
            faces,
            dofmap,
            fixed,
        })
    }

    fn local(&self, e: usize, solution: &dyn ExactSolution) -> super::LocalSystem {
        let geos: Vec<FaceGeometry> = self.mesh.tet_faces(e).iter().map(|&f| self.faces[f].clone()).collect();
        local_matrices_with(self.mesh, e, &self.params, &self.reference, &geos, solution)
    }

    fn local_traces(&self, traces: &[f64], e: usize) -> DVector<f64> {
        let pf = self.dofmap.per_face();
        let faces = self.mesh.tet_faces(e);
        DVector::from_iterator(
            4 * pf,
            faces.iter().flat_map(|&f| traces[f * pf..(f + 1) * pf].iter().copied()),
        )
    }

    /// Sparsity pattern: face blocks couple when the faces share an element.
    fn pattern(&self) -> SparseMatrix {
        let mesh = self.mesh;
        let pf = self.dofmap.per_face();
        let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); mesh.num_faces()];
        for e in 0..mesh.num_tets() {
            let faces = mesh.tet_faces(e);
            for &a in &faces {
                if self.dofmap.offset(a).is_none() {
                    continue;
                }
                for &b in &faces {
                    if self.dofmap.offset(b).is_some() {
                        neighbours[a].push(b);
                    }
                }
            }
        }
        let n = self.dofmap.ndofs();
        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::new();
        for (f, nb) in neighbours.iter_mut().enumerate() {
            if self.dofmap.offset(f).is_none() {
                continue;
            }
            nb.sort_unstable();
            nb.dedup();
            for _ in 0..pf {
                for &g in nb.iter() {
                    let o = self.dofmap.offset(g).expect("interior face");
                    row_idx.extend(o..o + pf);
                }
                col_ptr.push(row_idx.len());
            }
        }
        let values = vec![0.0; row_idx.len()];
        SparseMatrix::from_csc(n, n, col_ptr, row_idx, values).expect("pattern is well formed")
    }

    fn fields(&self, interior: Vec<f64>, traces: Vec<f64>) -> SolutionFields {
        SolutionFields {
            k: self.params.k,
            layout: self.reference.layout,
            interior,
            traces,
        }
    }

    fn expand_traces(&self, trace_solution: &[f64]) -> Vec<f64> {
        let pf = self.dofmap.per_face();
        let mut traces = self.fixed.clone();
        for f in 0..self.mesh.num_faces() {
            if let Some(o) = self.dofmap.offset(f) {
                traces[f * pf..(f + 1) * pf].copy_from_slice(&trace_solution[o..o + pf]);
            }
        }
        traces
    }
}

/// Condensed system over the interior-face trace unknowns.
#[derive(Debug, Clone)]
pub struct GlobalTraceSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub dofmap: DofMap,
    /// All-face trace vector holding the boundary data (zero on interior faces).
    pub boundary: Vec<f64>,
}

/// Assembles the condensed trace system.
///
/// Fails with [`SolveError::Singular`] when an element's interior block
/// cannot be factorized.
pub fn assemble_global(
    mesh: &Mesh,
    params: &SchemeParams,
    solution: &dyn ExactSolution,
) -> Result<GlobalTraceSystem, Error> {
    let ctx = Context::new(mesh, params, solution)?;
    assemble_with(&ctx, solution)
}

fn assemble_with(ctx: &Context<'_>, solution: &dyn ExactSolution) -> Result<GlobalTraceSystem, Error> {
    let mut matrix = ctx.pattern();
    let mut rhs = vec![0.0; ctx.dofmap.ndofs()];
    let pf = ctx.dofmap.per_face();
    for e in 0..ctx.mesh.num_tets() {
        let cond = condense(&ctx.local(e, solution))?;
        let faces = ctx.mesh.tet_faces(e);
        let dofs = ctx.dofmap.element_dofs(&faces);
        for (lj, dj) in dofs.iter().enumerate() {
            match dj {
                Some(cj) => {
                    for (li, di) in dofs.iter().enumerate() {
                        if let Some(ri) = di {
                            matrix.add(*ri, *cj, cond.s[(li, lj)]);
                        }
                    }
                }
                None => {
                    let value = ctx.fixed[faces[lj / pf] * pf + lj % pf];
                    if value != 0.0 {
                        for (li, di) in dofs.iter().enumerate() {
                            if let Some(ri) = di {
                                rhs[*ri] -= cond.s[(li, lj)] * value;
                            }
                        }
                    }
                }
            }
        }
        for (li, di) in dofs.iter().enumerate() {
            if let Some(ri) = di {
                rhs[*ri] += cond.g[li];
            }
        }
    }
    Ok(GlobalTraceSystem {
        matrix,
        rhs,
        dofmap: ctx.dofmap.clone(),
        boundary: ctx.fixed.clone(),
    })
}

/// Discrete solution: element coefficients of `(w, u, p)` in the local
/// layout, and all-face trace coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFields {
    pub k: usize,
    pub layout: LocalLayout,
    pub interior: Vec<f64>,
    pub traces: Vec<f64>,
}

impl SolutionFields {
    pub fn num_elements(&self) -> usize {
        self.interior.len() / self.layout.m()
    }

    pub fn element(&self, e: usize) -> &[f64] {
        let m = self.layout.m();
        &self.interior[e * m..(e + 1) * m]
    }

    /// Coefficients of component `c` of `w_h` on element `e`.
    pub fn w(&self, e: usize, c: usize) -> &[f64] {
        let s = self.layout.w(c, 0);
        &self.element(e)[s..s + self.layout.nk]
    }

    pub fn u(&self, e: usize, c: usize) -> &[f64] {
        let s = self.layout.u(c, 0);
        &self.element(e)[s..s + self.layout.nk1]
    }

    pub fn p(&self, e: usize) -> &[f64] {
        let s = self.layout.p(0);
        &self.element(e)[s..s + self.layout.nk]
    }

    pub fn face(&self, f: usize) -> &[f64] {
        let pf = self.layout.per_face();
        &self.traces[f * pf..(f + 1) * pf]
    }

    pub fn lambda(&self, f: usize) -> &[f64] {
        &self.face(f)[..self.layout.nm]
    }

    pub fn pi(&self, f: usize) -> &[f64] {
        &self.face(f)[self.layout.nm..]
    }

    /// `||w_h||`, `||u_h||`, `||p_h||` over the domain (orthonormal bases make
    /// these plain coefficient norms).
    pub fn field_norms(&self) -> [f64; 3] {
        let mut acc = [0.0; 3];
        for e in 0..self.num_elements() {
            for c in 0..3 {
                acc[0] += self.w(e, c).iter().map(|v| v * v).sum::<f64>();
                acc[1] += self.u(e, c).iter().map(|v| v * v).sum::<f64>();
            }
            acc[2] += self.p(e).iter().map(|v| v * v).sum::<f64>();
        }
        acc.map(f64::sqrt)
    }

    /// Euclidean norms of the `u^t` and `p^` coefficients (the `L2(F)` norms
    /// summed over faces).
    pub fn trace_norms(&self) -> [f64; 2] {
        let pf = self.layout.per_face();
        let mut acc = [0.0; 2];
        for (i, v) in self.traces.iter().enumerate() {
            acc[usize::from(i % pf >= self.layout.nm)] += v * v;
        }
        acc.map(f64::sqrt)
    }

    /// Largest absolute coefficient difference to another solution.
    pub fn max_difference(&self, other: &SolutionFields) -> f64 {
        self.interior
            .iter()
            .zip(&other.interior)
            .chain(self.traces.iter().zip(&other.traces))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.interior.iter().chain(&self.traces).map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Recovers the element unknowns from solved interior-face traces.
pub fn recover_fields(
    mesh: &Mesh,
    params: &SchemeParams,
    system: &GlobalTraceSystem,
    trace_solution: &[f64],
    solution: &dyn ExactSolution,
) -> Result<SolutionFields, Error> {
    let ctx = Context::new(mesh, params, solution)?;
    if trace_solution.len() != system.dofmap.ndofs() {
        return Err(SolveError::DimensionMismatch {
            expected: system.dofmap.ndofs(),
            found: trace_solution.len(),
        }
        .into());
    }
    recover_with(&ctx, trace_solution, solution)
}

fn recover_with(
    ctx: &Context<'_>,
    trace_solution: &[f64],
    solution: &dyn ExactSolution,
) -> Result<SolutionFields, Error> {
    let traces = ctx.expand_traces(trace_solution);
    let m = ctx.reference.layout.m();
    let mut interior = vec![0.0; ctx.mesh.num_tets() * m];
    for e in 0..ctx.mesh.num_tets() {
        let cond = condense(&ctx.local(e, solution))?;
        let x = cond.recover(&ctx.local_traces(&traces, e));
        interior[e * m..(e + 1) * m].copy_from_slice(x.as_slice());
    }
    Ok(ctx.fields(interior, traces))
}

fn checked_solve(matrix: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>, Error> {
    let mut x = SparseLblt::new(matrix, DEFAULT_FACTOR_BUDGET_BYTES)?.solve(rhs);
    let good = |x: &Result<Vec<f64>, SolveError>| matches!(x, Ok(v) if relative_residual(matrix, v, rhs) <= RESIDUAL_TOLERANCE);
    if !good(&x) {
        // pivoting restricted to supernodes can fail on hard indefinite blocks
        x = SparseLu::new(matrix)?.solve(rhs);
    }
    let x = x?;
    let res = relative_residual(matrix, &x, rhs);
    if !(res <= RESIDUAL_TOLERANCE) {
        return Err(SolveError::Factorization(format!("relative residual {res:e} after refinement")).into());
    }
    Ok(x)
}

/// Statically condensed solve: assemble, factorize, recover.
pub fn solve_condensed(
    mesh: &Mesh,
    params: &SchemeParams,
    solution: &dyn ExactSolution,
) -> Result<SolutionFields, Error> {
    let ctx = Context::new(mesh, params, solution)?;
    let system = assemble_with(&ctx, solution)?;
    let x = checked_solve(&system.matrix, &system.rhs)?;
    recover_with(&ctx, &x, solution)
}

/// Sparse system over all unknowns: element blocks first (`m` per element,
/// element-major), then the interior-face traces.
#[derive(Debug, Clone)]
pub struct MonolithicSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub dofmap: DofMap,
    pub boundary: Vec<f64>,
    pub interior_len: usize,
}

pub fn assemble_monolithic(
    mesh: &Mesh,
    params: &SchemeParams,
    solution: &dyn ExactSolution,
) -> Result<MonolithicSystem, Error> {
    let ctx = Context::new(mesh, params, solution)?;
    Ok(monolithic_with(&ctx, solution))
}

fn monolithic_with(ctx: &Context<'_>, solution: &dyn ExactSolution) -> MonolithicSystem {
    let lay = ctx.reference.layout;
    let m = lay.m();
    let pf = lay.per_face();
    let nel = ctx.mesh.num_tets();
    let n = nel * m + ctx.dofmap.ndofs();
    let mut trip = TripletBuilder::new(n, n);
    let mut rhs = vec![0.0; n];
    for e in 0..nel {
        let local = ctx.local(e, solution);
        let k = local.full_matrix();
        let r = local.full_rhs();
        let faces = ctx.mesh.tet_faces(e);
        let tdofs = ctx.dofmap.element_dofs(&faces);
        let index = |i: usize| -> Option<usize> {
            if i < m {
                Some(e * m + i)
            } else {
                tdofs[i - m].map(|d| nel * m + d)
            }
        };
        let fixed = |i: usize| ctx.fixed[faces[(i - m) / pf] * pf + (i - m) % pf];
        for j in 0..k.ncols() {
            match index(j) {
                Some(cj) => {
                    for i in 0..k.nrows() {
                        if let Some(ri) = index(i) {
                            if k[(i, j)] != 0.0 {
                                trip.push(ri, cj, k[(i, j)]);
                            }
                        }
                    }
                }
                None => {
                    let value = fixed(j);
                    for i in 0..k.nrows() {
                        if let Some(ri) = index(i) {
                            rhs[ri] -= k[(i, j)] * value;
                        }
                    }
                }
            }
        }
        for i in 0..k.nrows() {
            if let Some(ri) = index(i) {
                rhs[ri] += r[i];
            }
        }
    }
    MonolithicSystem {
        matrix: trip.finalize(),
        rhs,
        dofmap: ctx.dofmap.clone(),
        boundary: ctx.fixed.clone(),
        interior_len: nel * m,
    }
}

/// Solves the monolithic system directly.
pub fn solve_monolithic(
    mesh: &Mesh,
    params: &SchemeParams,
    solution: &dyn ExactSolution,
) -> Result<SolutionFields, Error> {
    let ctx = Context::new(mesh, params, solution)?;
    let sys = monolithic_with(&ctx, solution);
    let x = checked_solve(&sys.matrix, &sys.rhs)?;
    let traces = ctx.expand_traces(&x[sys.interior_len..]);
    Ok(ctx.fields(x[..sys.interior_len].to_vec(), traces))
}

/// Which system is factorized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvePath {
    Condensed,
    Monolithic,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub fields: SolutionFields,
    /// Path actually used.
    pub path: SolvePath,
    /// Whether a condensed solve switched to the monolithic path because an
    /// element block was singular.
    pub fallback: bool,
    /// Number of global trace unknowns.
    pub trace_dofs: usize,
}

/// Solves with the requested path; a condensed solve falls back to the
/// monolithic system when an element's interior block is singular.
pub fn solve(
    mesh: &Mesh,
    params: &SchemeParams,
    solution: &dyn ExactSolution,
    path: SolvePath,
) -> Result<SolveOutcome, Error> {
    let trace_dofs = DofMap::new(mesh, &LocalLayout::new(params.k)).ndofs();
    let outcome = |fields, path, fallback| SolveOutcome {
        fields,
        path,
        fallback,
        trace_dofs,
    };
    match path {
        SolvePath::Monolithic => Ok(outcome(solve_monolithic(mesh, params, solution)?, path, false)),
        SolvePath::Condensed => match solve_condensed(mesh, params, solution) {
            Ok(fields) => Ok(outcome(fields, path, false)),
            Err(Error::Solve(SolveError::Singular { .. })) => Ok(outcome(
                solve_monolithic(mesh, params, solution)?,
                SolvePath::Monolithic,
                true,
            )),
            Err(e) => Err(e),
        },
    }
}
