//! Conforming tetrahedral meshes with canonical faces.
//!
//! A face is identified by the sorted triple of its global vertex indices.
//! Its [`FaceFrame`] is computed from that triple alone, so both elements
//! adjacent to an interior face see the same origin, tangents and normal.
//! Each element records whether its outward normal agrees (`+1`) or
//! disagrees (`-1`) with the face normal.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{Matrix3, Point3, Vector3};

use crate::error::MeshError;

/// Local face `i` of a tetrahedron is the face opposite local vertex `i`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// One (element, local face) incidence of a canonical face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub element: usize,
    pub local_face: usize,
    /// `+1` when the element's outward normal equals the face frame normal.
    pub sign: i8,
}

/// The one or two elements touching a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceAdjacency {
    pub first: Incidence,
    pub second: Option<Incidence>,
}

impl FaceAdjacency {
    pub fn incidences(&self) -> impl Iterator<Item = Incidence> + '_ {
        std::iter::once(self.first).chain(self.second)
    }

    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }
}

/// Orthonormal frame attached to a canonical face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub origin: Point3<f64>,
    pub normal: Vector3<f64>,
    pub tangent1: Vector3<f64>,
    pub tangent2: Vector3<f64>,
}

impl FaceFrame {
    /// Frame of the triangle `(a, b, c)` given in canonical (sorted index) order.
    ///
    /// `tangent1` points along `b - a`, the normal along `(b - a) x (c - a)`,
    /// and `tangent2 = normal x tangent1`.
    pub fn from_vertices(
        a: &Point3<f64>,
        b: &Point3<f64>,
        c: &Point3<f64>,
    ) -> Option<FaceFrame> {
        let e1 = b - a;
        let e2 = c - a;
        let cross = e1.cross(&e2);
        let area2 = cross.norm();
        let scale = e1.norm().max(e2.norm());
        if !(area2 > 1e-14 * scale * scale) {
            return None;
        }
        let normal = cross / area2;
        let tangent1 = e1.normalize();
        let tangent2 = normal.cross(&tangent1);
        Some(FaceFrame {
            origin: *a,
            normal,
            tangent1,
            tangent2,
        })
    }

    /// Face coordinates `(s, t)` of a point relative to the frame origin.
    pub fn coordinates(&self, x: &Point3<f64>) -> (f64, f64) {
        let d = x - self.origin;
        (d.dot(&self.tangent1), d.dot(&self.tangent2))
    }

    /// Vector with frame components `(a, b)` in the tangent plane.
    pub fn tangential(&self, a: f64, b: f64) -> Vector3<f64> {
        self.tangent1 * a + self.tangent2 * b
    }
}

/// Conforming tetrahedral mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point3<f64>>,
    tets: Vec<[usize; 4]>,
    faces: Vec<[usize; 3]>,
    face_adjacency: Vec<FaceAdjacency>,
    tet_faces: Vec<[usize; 4]>,
    frames: Vec<FaceFrame>,
}

impl Mesh {
    /// Builds the face structure of a tetrahedral mesh and validates it.
    ///
    /// Tetrahedra must have positive signed volume; use
    /// [`Mesh::from_parts_oriented`] to reorder inverted elements instead.
    pub fn from_parts(
        vertices: Vec<Point3<f64>>,
        tets: Vec<[usize; 4]>,
    ) -> Result<Mesh, MeshError> {
        Self::build(vertices, tets, false)
    }

    /// Like [`Mesh::from_parts`] but swaps two vertices of every inverted element.
    pub fn from_parts_oriented(
        vertices: Vec<Point3<f64>>,
        tets: Vec<[usize; 4]>,
    ) -> Result<Mesh, MeshError> {
        Self::build(vertices, tets, true)
    }

    fn build(
        vertices: Vec<Point3<f64>>,
        mut tets: Vec<[usize; 4]>,
        orient: bool,
    ) -> Result<Mesh, MeshError> {
        if tets.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = vertices.len();
        for (t, tet) in tets.iter_mut().enumerate() {
            for &v in tet.iter() {
                if v >= nv {
                    return Err(MeshError::VertexOutOfRange { tet: t, vertex: v, nv });
                }
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    if tet[i] == tet[j] {
                        return Err(MeshError::RepeatedVertex { tet: t });
                    }
                }
            }
            let vol = signed_volume(&vertices, tet);
            let scale = longest_edge(&vertices, tet);
            if vol <= 1e-14 * scale.powi(3) {
                if orient && vol < -1e-14 * scale.powi(3) {
                    tet.swap(2, 3);
                } else {
                    return Err(MeshError::Inverted { tet: t, volume: vol });
                }
            }
        }

        let mut index: HashMap<[usize; 3], usize> = HashMap::with_capacity(tets.len() * 2 + 8);
        let mut faces: Vec<[usize; 3]> = Vec::new();
        let mut incidences: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut tet_faces = vec![[0usize; 4]; tets.len()];
        for (t, tet) in tets.iter().enumerate() {
            for (lf, local) in LOCAL_FACES.iter().enumerate() {
                let mut key = [tet[local[0]], tet[local[1]], tet[local[2]]];
                key.sort_unstable();
                let id = *index.entry(key).or_insert_with(|| {
                    faces.push(key);
                    incidences.push(Vec::with_capacity(2));
                    faces.len() - 1
                });
                incidences[id].push((t, lf));
                if incidences[id].len() > 2 {
                    return Err(MeshError::OvershotFace { face: key });
                }
                tet_faces[t][lf] = id;
            }
        }

        let mut frames = Vec::with_capacity(faces.len());
        let mut face_adjacency = Vec::with_capacity(faces.len());
        for (id, key) in faces.iter().enumerate() {
            let frame = FaceFrame::from_vertices(
                &vertices[key[0]],
                &vertices[key[1]],
                &vertices[key[2]],
            )
            .ok_or(MeshError::DegenerateFace { face: *key })?;
            let make = |(t, lf): (usize, usize)| {
                let opposite = vertices[tets[t][lf]];
                let outward = frame.origin - opposite;
                let sign = if outward.dot(&frame.normal) > 0.0 { 1 } else { -1 };
                Incidence {
                    element: t,
                    local_face: lf,
                    sign,
                }
            };
            let inc = &incidences[id];
            face_adjacency.push(FaceAdjacency {
                first: make(inc[0]),
                second: inc.get(1).copied().map(make),
            });
            frames.push(frame);
        }

        let mesh = Mesh {
            vertices,
            tets,
            faces,
            face_adjacency,
            tet_faces,
            frames,
        };
        mesh.check_hanging_vertices()?;
        Ok(mesh)
    }

    /// Rejects vertices lying inside (or on the edges of) a boundary face they
    /// do not belong to, the signature of a non-conforming interface.
    fn check_hanging_vertices(&self) -> Result<(), MeshError> {
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by(|&a, &b| self.vertices[a].x.total_cmp(&self.vertices[b].x));
        let xs: Vec<f64> = order.iter().map(|&v| self.vertices[v].x).collect();
        for (f, key) in self.faces.iter().enumerate() {
            if !self.face_adjacency[f].is_boundary() {
                continue;
            }
            let [a, b, c] = key.map(|v| self.vertices[v]);
            let lo = a.coords.inf(&b.coords).inf(&c.coords);
            let hi = a.coords.sup(&b.coords).sup(&c.coords);
            let diam = (b - a).norm().max((c - a).norm()).max((c - b).norm());
            let eps = 1e-10 * diam;
            let start = xs.partition_point(|&x| x < lo.x - eps);
            let end = xs.partition_point(|&x| x <= hi.x + eps);
            let frame = &self.frames[f];
            for &v in &order[start..end] {
                if key.contains(&v) {
                    continue;
                }
                let p = self.vertices[v];
                if p.y < lo.y - eps || p.y > hi.y + eps || p.z < lo.z - eps || p.z > hi.z + eps {
                    continue;
                }
                if (p - a).dot(&frame.normal).abs() > eps {
                    continue;
                }
                if point_in_triangle(&p, &a, &b, &c, &frame.normal, eps) {
                    return Err(MeshError::HangingVertex { vertex: v, face: *key });
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_adjacency(&self) -> &[FaceAdjacency] {
        &self.face_adjacency
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn is_boundary(&self, face: usize) -> bool {
        self.face_adjacency[face].is_boundary()
    }

    pub fn boundary_flags(&self) -> Vec<bool> {
        self.face_adjacency.iter().map(|a| a.is_boundary()).collect()
    }

    pub fn num_interior_faces(&self) -> usize {
        self.face_adjacency.iter().filter(|a| !a.is_boundary()).count()
    }

    /// Global face ids of the four local faces of an element.
    pub fn tet_faces(&self, tet: usize) -> [usize; 4] {
        self.tet_faces[tet]
    }

    /// Outward normal sign of `tet` on its local face `local_face`.
    pub fn face_sign(&self, tet: usize, local_face: usize) -> f64 {
        let adj = &self.face_adjacency[self.tet_faces[tet][local_face]];
        adj.incidences()
            .find(|i| i.element == tet && i.local_face == local_face)
            .map(|i| f64::from(i.sign))
            .expect("face incidence recorded at construction")
    }

    pub fn face_frame(&self, face: usize) -> &FaceFrame {
        &self.frames[face]
    }

    pub fn tet_vertices(&self, tet: usize) -> [Point3<f64>; 4] {
        self.tets[tet].map(|v| self.vertices[v])
    }

    pub fn face_vertices(&self, face: usize) -> [Point3<f64>; 3] {
        self.faces[face].map(|v| self.vertices[v])
    }

    pub fn tet_volume(&self, tet: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[tet])
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.face_vertices(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Longest edge of a face.
    pub fn face_diameter(&self, face: usize) -> f64 {
        let [a, b, c] = self.face_vertices(face);
        (b - a).norm().max((c - a).norm()).max((c - b).norm())
    }

    pub fn face_centroid(&self, face: usize) -> Point3<f64> {
        let [a, b, c] = self.face_vertices(face);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }

    /// Longest edge of an element.
    pub fn tet_diameter(&self, tet: usize) -> f64 {
        longest_edge(&self.vertices, &self.tets[tet])
    }

    /// Area-weighted outward normal of local face `lf` of `tet`.
    pub fn outward_area_vector(&self, tet: usize, lf: usize) -> Vector3<f64> {
        let face = self.tet_faces[tet][lf];
        self.frames[face].normal * (self.face_sign(tet, lf) * self.face_area(face))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_tets()).map(|t| self.tet_volume(t)).sum()
    }
}

/// Mesh size: the longest edge over all elements.
pub fn mesh_size(mesh: &Mesh) -> f64 {
    (0..mesh.num_tets())
        .map(|t| mesh.tet_diameter(t))
        .fold(0.0, f64::max)
}

/// Frame of face `face_id`.
pub fn face_frame(mesh: &Mesh, face_id: usize) -> FaceFrame {
    *mesh.face_frame(face_id)
}

fn signed_volume(vertices: &[Point3<f64>], tet: &[usize; 4]) -> f64 {
    let [a, b, c, d] = tet.map(|v| vertices[v]);
    Matrix3::from_columns(&[b - a, c - a, d - a]).determinant() / 6.0
}

fn longest_edge(vertices: &[Point3<f64>], tet: &[usize; 4]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            h = h.max((vertices[tet[i]] - vertices[tet[j]]).norm());
        }
    }
    h
}

fn point_in_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
    n: &Vector3<f64>,
    eps: f64,
) -> bool {
    let edges = [(a, b), (b, c), (c, a)];
    edges.iter().all(|(u, v)| {
        let e = *v - *u;
        let inward = n.cross(&e).normalize();
        (p - *u).dot(&inward) >= -eps
    })
}

/// The six Kuhn tetrahedra of the unit cube, as corner indices `i + 2j + 4k`.
///
/// Every tetrahedron walks from corner 0 to corner 7 along one permutation of
/// the coordinate axes, so all six share the main diagonal.
pub fn kuhn_tets() -> [[usize; 4]; 6] {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    PERMS.map(|perm| {
        let mut corner = 0usize;
        let mut tet = [0usize; 4];
        for (step, axis) in perm.iter().enumerate() {
            corner |= 1 << axis;
            tet[step + 1] = corner;
        }
        tet
    })
}

/// Kuhn-split structured mesh over the cells accepted by `keep`.
///
/// The grid has `cells` cells per axis starting at `lower` with spacing `dx`.
fn structured_kuhn(
    lower: [f64; 3],
    dx: f64,
    cells: [usize; 3],
    keep: impl Fn(usize, usize, usize) -> bool,
) -> Mesh {
    let [nx, ny, nz] = cells;
    let grid_index = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut renumber: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut tets = Vec::new();
    let kuhn = kuhn_tets();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                if !keep(i, j, k) {
                    continue;
                }
                let corner = |c: usize| {
                    let (ci, cj, ck) = (i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                    (grid_index(ci, cj, ck), [ci, cj, ck])
                };
                for tet in &kuhn {
                    let ids = tet.map(|c| {
                        let (g, ijk) = corner(c);
                        *renumber.entry(g).or_insert_with(|| {
                            vertices.push(Point3::new(
                                lower[0] + dx * ijk[0] as f64,
                                lower[1] + dx * ijk[1] as f64,
                                lower[2] + dx * ijk[2] as f64,
                            ));
                            vertices.len() - 1
                        })
                    });
                    tets.push(ids);
                }
            }
        }
    }
    Mesh::from_parts_oriented(vertices, tets).expect("structured Kuhn mesh is valid")
}

/// Kuhn mesh of `[0,1]^3` with `n^3` cells (`6 n^3` tetrahedra).
pub fn build_unit_cube_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "refinement parameter must be positive");
    structured_kuhn([0.0; 3], 1.0 / n as f64, [n, n, n], |_, _, _| true)
}

/// Kuhn mesh of the L-shaped prism `[-1,1]^2 x [0,1]` minus `[0,1] x [-1,0] x [0,1]`
/// with cell size `1/n` (`18 n^3` tetrahedra).
pub fn build_lshape_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "refinement parameter must be positive");
    structured_kuhn([-1.0, -1.0, 0.0], 1.0 / n as f64, [2 * n, 2 * n, n], |i, j, _| {
        !(i >= n && j < n)
    })
}

/// Serializes a mesh in the plain text format read by [`read_mesh`].
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# hdg-maxwell tetrahedral mesh");
    let _ = writeln!(out, "{} {}", mesh.num_vertices(), mesh.num_tets());
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.tets() {
        let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    out
}

/// Parses the text mesh format: a header `nv nt`, `nv` coordinate lines and
/// `nt` lines of four 0-based vertex indices. `#` starts a comment.
pub fn read_mesh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let parse_err = |line: usize, message: String| MeshError::Parse { line, message };
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header `nv nt`".into()))?;
    let counts = parse_fields::<usize>(header, 2, hline)?;
    let (nv, nt) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {nv} vertices, found {i}")))?;
        let c = parse_fields::<f64>(l, 3, ln)?;
        if c.iter().any(|x| !x.is_finite()) {
            return Err(parse_err(ln, "non-finite coordinate".into()));
        }
        vertices.push(Point3::new(c[0], c[1], c[2]));
    }
    let mut tets = Vec::with_capacity(nt);
    let mut tet_lines = Vec::with_capacity(nt);
    for i in 0..nt {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("expected {nt} tetrahedra, found {i}")))?;
        let ids = parse_fields::<usize>(l, 4, ln)?;
        tets.push([ids[0], ids[1], ids[2], ids[3]]);
        tet_lines.push(ln);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing data after the declared element count".into()));
    }
    Mesh::from_parts(vertices, tets).map_err(|e| match e {
        MeshError::VertexOutOfRange { tet, .. }
        | MeshError::RepeatedVertex { tet }
        | MeshError::Inverted { tet, .. } => parse_err(tet_lines[tet], e.to_string()),
        other => other,
    })
}

fn parse_fields<T: std::str::FromStr>(
    line: &str,
    count: usize,
    ln: usize,
) -> Result<Vec<T>, MeshError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != count {
        return Err(MeshError::Parse {
            line: ln,
            message: format!("expected {count} fields, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>().map_err(|_| MeshError::Parse {
                line: ln,
                message: format!("cannot parse `{f}`"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cube_counts() {
        let m = build_unit_cube_mesh(1);
        assert_eq!(m.num_tets(), 6);
        assert_eq!(m.num_vertices(), 8);
        assert_eq!(m.num_faces(), 18);
        let boundary = m.boundary_flags().iter().filter(|&&b| b).count();
        assert_eq!(boundary, 12);
        assert_eq!(m.num_interior_faces(), 6);
    }

    #[test]
    fn single_cube_face_count_matches_brute_force() {
        // every triangle of three cube corners that is a face of some Kuhn tet
        let mut seen = std::collections::BTreeSet::new();
        for t in kuhn_tets() {
            for lf in LOCAL_FACES {
                let mut f = [t[lf[0]], t[lf[1]], t[lf[2]]];
                f.sort();
                seen.insert(f);
            }
        }
        assert_eq!(seen.len(), 18);
    }

    #[test]
    fn interior_faces_have_opposite_signs() {
        let m = build_unit_cube_mesh(2);
        assert_eq!(m.num_tets(), 48);
        for adj in m.face_adjacency() {
            if let Some(second) = adj.second {
                assert_eq!(adj.first.sign, -second.sign);
            }
        }
    }

    #[test]
    fn lshape_counts_and_volume() {
        assert_eq!(build_lshape_mesh(1).num_tets(), 18);
        let m = build_lshape_mesh(2);
        assert_eq!(m.num_tets(), 144);
        assert!((m.total_volume() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn lshape_boundary_faces_on_boundary_planes() {
        let m = build_lshape_mesh(2);
        let on_boundary = |c: Point3<f64>| {
            let tol = 1e-12;
            let near = |a: f64, b: f64| (a - b).abs() < tol;
            near(c.z, 0.0)
                || near(c.z, 1.0)
                || near(c.x, -1.0)
                || near(c.y, 1.0)
                || (near(c.x, 1.0) && c.y > 0.0)
                || (near(c.y, -1.0) && c.x < 0.0)
                || (near(c.x, 0.0) && c.y < 0.0)
                || (near(c.y, 0.0) && c.x > 0.0)
        };
        for f in 0..m.num_faces() {
            assert_eq!(m.is_boundary(f), on_boundary(m.face_centroid(f)), "face {f}");
        }
    }

    #[test]
    fn frame_of_unit_triangle() {
        let fr = FaceFrame::from_vertices(
            &Point3::new(0.0, 0.0, 0.0),
            &Point3::new(1.0, 0.0, 0.0),
            &Point3::new(0.0, 1.0, 0.0),
        )
        .unwrap();
        assert_eq!(fr.normal, Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(fr.tangent1, Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(fr.tangent2, Vector3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn frame_independent_of_local_order() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(0.0, 0.0, -1.0),
        ];
        let a = Mesh::from_parts_oriented(v.clone(), vec![[0, 1, 2, 3], [2, 1, 0, 4]]).unwrap();
        let b = Mesh::from_parts_oriented(v, vec![[1, 0, 2, 3], [0, 2, 1, 4]]).unwrap();
        let fa = a.faces().iter().position(|f| *f == [0, 1, 2]).unwrap();
        let fb = b.faces().iter().position(|f| *f == [0, 1, 2]).unwrap();
        assert_eq!(a.face_frame(fa), b.face_frame(fb));
        let adj = a.face_adjacency()[fa];
        assert_eq!(adj.first.sign + adj.second.unwrap().sign, 0);
    }

    #[test]
    fn degenerate_face_is_rejected() {
        let a = Point3::new(0.0, 0.0, 0.0);
        assert!(FaceFrame::from_vertices(&a, &Point3::new(1.0, 0.0, 0.0), &Point3::new(2.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn mesh_size_scales() {
        let h2 = mesh_size(&build_unit_cube_mesh(2));
        assert!((h2 - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(mesh_size(&build_unit_cube_mesh(4)), h2 / 2.0);
        let tet = Mesh::from_parts(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap();
        assert!((mesh_size(&tet) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn closed_surface_identity_and_volume() {
        for m in [build_unit_cube_mesh(3), build_lshape_mesh(2)] {
            for t in 0..m.num_tets() {
                let s: Vector3<f64> = (0..4).map(|lf| m.outward_area_vector(t, lf)).sum();
                assert!(s.norm() < 1e-13, "tet {t}: {s}");
            }
        }
        assert!((build_unit_cube_mesh(3).total_volume() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn round_trip_text_format() {
        let m = build_unit_cube_mesh(1);
        let back = read_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn repeated_vertex_reported_with_line() {
        let text = "4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 1 3\n";
        match read_mesh(text) {
            Err(MeshError::Parse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("repeats"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_counts_and_indices() {
        assert!(matches!(read_mesh("4 1\n0 0 0\n"), Err(MeshError::Parse { .. })));
        assert!(matches!(
            read_mesh("4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 7\n"),
            Err(MeshError::Parse { line: 6, .. })
        ));
        // inverted element
        assert!(matches!(
            read_mesh("4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n1 0 2 3\n"),
            Err(MeshError::Parse { line: 6, .. })
        ));
        assert!(matches!(read_mesh("x 1\n"), Err(MeshError::Parse { line: 1, .. })));
    }

    #[test]
    fn comments_are_ignored() {
        let text = "# a tet\n4 1 # counts\n0 0 0\n1 0 0\n0 1 0\n\n0 0 1\n0 1 2 3 # element\n";
        assert_eq!(read_mesh(text).unwrap().num_tets(), 1);
    }

    #[test]
    fn hanging_face_is_rejected() {
        // A big tet over the triangle (0,0,0),(2,0,0),(0,2,0), and a small tet
        // below it whose top face only covers part of that triangle through the
        // edge midpoint (1,0,0).
        let text = "6 2\n\
            0 0 0\n2 0 0\n0 2 0\n0 0 2\n1 0 0\n0 0 -1\n\
            0 1 2 3\n0 2 4 5\n";
        let err = read_mesh(text).unwrap_err();
        assert!(matches!(err, MeshError::HangingVertex { vertex: 4, .. }), "{err:?}");
    }
}
