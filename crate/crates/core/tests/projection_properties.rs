use std::f64::consts::PI;

use hdg_maxwell::assembly::{ElementGeometry, FaceGeometry, ReferenceData};
use hdg_maxwell::mesh::{build_unit_cube_mesh, Mesh};
use hdg_maxwell::projections::{ElementField, Projector, SpaceTag};
use nalgebra::{Point3, Vector3};
use proptest::prelude::*;

fn smooth_u(x: &Point3<f64>) -> Vector3<f64> {
    Vector3::new(
        (PI * x.y).sin() * (PI * x.z).sin(),
        (PI * x.x).sin() * (PI * x.z).sin(),
        (PI * x.x).sin() * (PI * x.y).sin(),
    )
}

/// Values of a tangential `M^t` field at a physical point of a face.
fn eval_face(fg: &FaceGeometry, coeffs: &[f64], x: &Point3<f64>) -> Vector3<f64> {
    let (s, t) = fg.frame.coordinates(x);
    let table = fg.trace.tabulate(&[[s, t]]);
    let a: f64 = coeffs.iter().enumerate().map(|(j, c)| c * table.mt[0][(0, j)]).sum();
    let b: f64 = coeffs.iter().enumerate().map(|(j, c)| c * table.mt[1][(0, j)]).sum();
    fg.frame.tangential(a, b)
}

fn eval_face_scalar(fg: &FaceGeometry, coeffs: &[f64], x: &Point3<f64>) -> f64 {
    let (s, t) = fg.frame.coordinates(x);
    let table = fg.trace.tabulate(&[[s, t]]);
    coeffs.iter().enumerate().map(|(j, c)| c * table.scalar[(0, j)]).sum()
}

/// `sum_K ||f - Pi f||_K^2` for a scalar component projected onto `P_n`.
fn projection_error(mesh: &Mesh, k: usize, space: SpaceTag, f: &dyn Fn(&Point3<f64>) -> Vector3<f64>) -> f64 {
    let pr = Projector::new(k).unwrap();
    let reference = ReferenceData::new(k).unwrap();
    let rule = &reference.fine_rule;
    let n = match space {
        SpaceTag::V => reference.layout.nk1,
        _ => reference.layout.nk,
    };
    let mut total = 0.0;
    for e in 0..mesh.num_tets() {
        let p = match space {
            SpaceTag::Q => pr.element(mesh, e, space, ElementField::Scalar(&|x: &Point3<f64>| f(x)[0])),
            _ => pr.element(mesh, e, space, ElementField::Vector(f)),
        }
        .unwrap();
        let geo = ElementGeometry::new(mesh, e);
        let vals = geo.tabulate_values(&reference.basis, &rule.points);
        for (q, (xi, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let exact = f(&geo.to_physical(xi));
            for c in 0..p.coeffs.len() / n {
                let ph: f64 = (0..n).map(|i| p.coeffs[c * n + i] * vals[(q, i)]).sum();
                total += w * geo.det * (exact[c] - ph).powi(2);
            }
        }
    }
    total.sqrt()
}

fn rates(errors: &[f64], hs: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

#[test]
fn element_projection_rates() {
    let levels = [1, 2, 4, 8];
    let hs: Vec<f64> = levels.iter().map(|&n| 1.0 / n as f64).collect();
    for k in 0..=1 {
        for (space, degree) in [(SpaceTag::W, k), (SpaceTag::V, k + 1)] {
            let errs: Vec<f64> = levels
                .iter()
                .map(|&n| projection_error(&build_unit_cube_mesh(n), k, space, &smooth_u))
                .collect();
            let r = rates(&errs, &hs);
            let last = *r.last().unwrap();
            assert!(last >= (degree + 1) as f64 - 0.2, "k={k} {space:?}: rates {r:?}");
        }
    }
}

#[test]
fn scalar_projection_rate_for_sine() {
    let k = 2;
    let levels = [1, 2, 4];
    let hs: Vec<f64> = levels.iter().map(|&n| 1.0 / n as f64).collect();
    let f = |x: &Point3<f64>| Vector3::new((PI * x.x).sin(), 0.0, 0.0);
    let errs: Vec<f64> = levels
        .iter()
        .map(|&n| projection_error(&build_unit_cube_mesh(n), k, SpaceTag::Q, &f))
        .collect();
    let r = rates(&errs, &hs);
    assert!(*r.last().unwrap() >= 3.0 - 0.2, "{r:?}");
}

#[test]
fn degree_k_plus_one_residual_is_orthogonal() {
    let mesh = build_unit_cube_mesh(1);
    let k = 1;
    let pr = Projector::new(k).unwrap();
    let reference = ReferenceData::new(k).unwrap();
    let f = |x: &Point3<f64>| Vector3::new(x.x * x.y, x.z * x.z, 1.0 + x.x);
    let p = pr.element(&mesh, 2, SpaceTag::W, ElementField::Vector(&f)).unwrap();
    let geo = ElementGeometry::new(&mesh, 2);
    let rule = &reference.fine_rule;
    let vals = geo.tabulate_values(&reference.basis, &rule.points);
    let nk = reference.layout.nk;
    let (mut norm_f, mut norm_r) = (0.0, 0.0);
    let mut moments = vec![0.0; 3 * nk];
    for (q, (xi, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let fx = f(&geo.to_physical(xi));
        for c in 0..3 {
            let ph: f64 = (0..nk).map(|i| p.coeffs[c * nk + i] * vals[(q, i)]).sum();
            let r = fx[c] - ph;
            norm_f += w * geo.det * fx[c] * fx[c];
            norm_r += w * geo.det * r * r;
            for i in 0..nk {
                moments[c * nk + i] += w * geo.det * r * vals[(q, i)];
            }
        }
    }
    assert!(moments.iter().all(|m| m.abs() < 1e-13), "{moments:?}");
    let pythagoras = norm_f - p.coeffs.iter().map(|c| c * c).sum::<f64>();
    assert!((pythagoras - norm_r).abs() < 1e-13);
    assert!(norm_r > 1e-6);
}

#[test]
fn tangential_projection_is_orthogonal() {
    let mesh = build_unit_cube_mesh(1);
    for k in 0..=2 {
        let pr = Projector::new(k).unwrap();
        let reference = ReferenceData::new(k).unwrap();
        for face in [0, 5, 11] {
            let fg = FaceGeometry::new(&mesh, face, k).unwrap();
            let p = pr.face_tangential(&mesh, face, smooth_u).unwrap();
            let quad = fg.quadrature(&reference.fine_face_rule);
            let mu = quad.mt_cartesian(&fg.frame);
            let n = fg.frame.normal;
            for j in 0..p.coeffs.len() {
                let mut inner = 0.0;
                for (q, x) in quad.points.iter().enumerate() {
                    let f = smooth_u(x);
                    let ft = f - n * f.dot(&n);
                    let r = ft - eval_face(&fg, &p.coeffs, x);
                    let m = Vector3::new(mu[0][(q, j)], mu[1][(q, j)], mu[2][(q, j)]);
                    inner += quad.rule.weights[q] * r.dot(&m);
                }
                assert!(inner.abs() < 1e-12, "k={k} face={face} j={j}: {inner:e}");
            }
        }
    }
}

#[test]
fn face_scalar_projection_rate() {
    // sin(s) on a triangle shrinking about the origin; RMS error ~ h^{k+2}
    let k = 1;
    let pr = Projector::new(k).unwrap();
    let mut errs = Vec::new();
    let hs = [0.5, 0.25, 0.125];
    for &h in &hs {
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(h, 0.0, 0.0),
            Point3::new(0.0, h, 0.0),
            Point3::new(0.0, 0.0, h),
        ];
        let mesh = Mesh::from_parts_oriented(verts, vec![[0, 1, 2, 3]]).unwrap();
        let face = (0..4).find(|&f| mesh.face_centroid(f).z.abs() < 1e-14).unwrap();
        let fg = FaceGeometry::new(&mesh, face, k).unwrap();
        let f = |x: &Point3<f64>| (3.0 * x.x + x.y).sin();
        let p = pr.face_scalar(&mesh, face, f).unwrap();
        let reference = ReferenceData::new(k).unwrap();
        let quad = fg.quadrature(&reference.fine_face_rule);
        let err2: f64 = quad
            .points
            .iter()
            .zip(&quad.rule.weights)
            .map(|(x, w)| w * (f(x) - eval_face_scalar(&fg, &p.coeffs, x)).powi(2))
            .sum();
        errs.push((err2 / mesh.face_area(face)).sqrt());
    }
    let r = rates(&errs, &hs);
    assert!(*r.last().unwrap() >= (k + 2) as f64 - 0.2, "{r:?}");
}

#[test]
fn bdm_face_moments_vanish() {
    let mesh = build_unit_cube_mesh(2);
    for k in 0..=2 {
        let pr = Projector::new(k).unwrap();
        let reference = ReferenceData::new(k).unwrap();
        let e = 9;
        let b = pr.bdm(&mesh, e, smooth_u).unwrap();
        let geo = ElementGeometry::new(&mesh, e);
        let nk1 = reference.layout.nk1;
        for (lf, f) in mesh.tet_faces(e).into_iter().enumerate() {
            let fg = FaceGeometry::new(&mesh, f, k).unwrap();
            let normal = fg.frame.normal * mesh.face_sign(e, lf);
            let quad = fg.quadrature(&reference.fine_face_rule);
            let refpts: Vec<[f64; 3]> = quad.points.iter().map(|x| geo.to_reference(x)).collect();
            let phi = geo.tabulate_values(&reference.basis, &refpts);
            for l in 0..reference.layout.ns {
                let mut m = 0.0;
                for (q, x) in quad.points.iter().enumerate() {
                    let pu = Vector3::from_fn(|c, _| (0..nk1).map(|i| b.coeffs[c * nk1 + i] * phi[(q, i)]).sum());
                    m += quad.rule.weights[q] * quad.table.scalar[(q, l)] * (smooth_u(x) - pu).dot(&normal);
                }
                assert!(m.abs() < 1e-11, "k={k} face={lf} l={l}: {m:e}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn element_projections_are_idempotent(k in 0usize..=2, e in 0usize..48, a in -2.0f64..2.0, b in 0.5f64..3.0) {
        let mesh = build_unit_cube_mesh(2);
        let pr = Projector::new(k).unwrap();
        let f = move |x: &Point3<f64>| Vector3::new((b * x.x).sin() + a, (a * x.y * x.z).cos(), x.x * (b * x.z).exp());
        for space in [SpaceTag::W, SpaceTag::V] {
            let p = pr.element(&mesh, e, space, ElementField::Vector(&f)).unwrap();
            let g = |x: &Point3<f64>| {
                let v = pr.eval_element(&mesh, e, &p, x);
                Vector3::new(v[0], v[1], v[2])
            };
            let again = pr.element(&mesh, e, space, ElementField::Vector(&g)).unwrap();
            let drift = p.coeffs.iter().zip(&again.coeffs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            prop_assert!(drift <= 1e-13, "{:?}: {:e}", space, drift);
        }
        let s = move |x: &Point3<f64>| (b * x.y).sin() * x.z + a;
        let p = pr.element(&mesh, e, SpaceTag::Q, ElementField::Scalar(&s)).unwrap();
        let g = |x: &Point3<f64>| pr.eval_element(&mesh, e, &p, x)[0];
        let again = pr.element(&mesh, e, SpaceTag::Q, ElementField::Scalar(&g)).unwrap();
        let drift = p.coeffs.iter().zip(&again.coeffs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(drift <= 1e-13, "Q: {:e}", drift);
    }

    #[test]
    fn face_projections_are_idempotent(k in 0usize..=2, face in 0usize..18, a in -2.0f64..2.0) {
        let mesh = build_unit_cube_mesh(1);
        let pr = Projector::new(k).unwrap();
        let fg = FaceGeometry::new(&mesh, face, k).unwrap();
        let f = move |x: &Point3<f64>| Vector3::new((a * x.y).sin(), x.x * x.z + a, (x.y - x.z).exp());
        let p = pr.face_tangential(&mesh, face, f).unwrap();
        let again = pr.face_tangential(&mesh, face, |x| eval_face(&fg, &p.coeffs, x)).unwrap();
        let drift = p.coeffs.iter().zip(&again.coeffs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(drift <= 1e-13, "M^t: {:e}", drift);
        let s = move |x: &Point3<f64>| (a * x.x + x.y).cos();
        let p = pr.face_scalar(&mesh, face, s).unwrap();
        let again = pr.face_scalar(&mesh, face, |x| eval_face_scalar(&fg, &p.coeffs, x)).unwrap();
        let drift = p.coeffs.iter().zip(&again.coeffs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(drift <= 1e-13, "P_k+1(F): {:e}", drift);
    }
}
