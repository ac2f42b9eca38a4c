use hdg_maxwell::analysis::{compute_eoc, compute_errors, compute_errors_with_degree, ConvergenceRecord};
use hdg_maxwell::assembly::{
    divergence_norm, solve, ElementGeometry, ReferenceData, SchemeParams, SolvePath, OVERKILL_DEGREE,
};
use hdg_maxwell::manufactured::{ExactSolution, LShapeSolution, SmoothSolution, ZeroSolution};
use hdg_maxwell::mesh::{build_lshape_mesh, build_unit_cube_mesh, Mesh};
use hdg_maxwell::projections::{project_solution, ElementField, Projector, SpaceTag};
use nalgebra::Point3;
use proptest::prelude::*;

/// `||u - Pi_V u||` assembled element by element, independently of the
/// error module.
fn projection_error_u(mesh: &Mesh, k: usize, exact: &dyn ExactSolution) -> f64 {
    let pr = Projector::new(k).unwrap();
    let reference = ReferenceData::new(k).unwrap();
    let rule = &reference.fine_rule;
    let nk1 = reference.layout.nk1;
    let mut total = 0.0;
    for e in 0..mesh.num_tets() {
        let u = |x: &Point3<f64>| exact.eval(x).u;
        let p = pr.element(mesh, e, SpaceTag::V, ElementField::Vector(&u)).unwrap();
        let geo = ElementGeometry::new(mesh, e);
        let vals = geo.tabulate_values(&reference.basis, &rule.points);
        for (q, (xi, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let ux = u(&geo.to_physical(xi));
            for c in 0..3 {
                let ph: f64 = (0..nk1).map(|i| p.coeffs[c * nk1 + i] * vals[(q, i)]).sum();
                total += w * geo.det * (ux[c] - ph).powi(2);
            }
        }
    }
    total.sqrt()
}

#[test]
fn projected_exact_fields_report_projection_errors() {
    let mesh = build_unit_cube_mesh(2);
    for k in 0..=1 {
        let fields = project_solution(&mesh, k, &SmoothSolution).unwrap();
        let rec = compute_errors(&mesh, &fields, &SmoothSolution).unwrap();
        let independent = projection_error_u(&mesh, k, &SmoothSolution);
        assert!((rec.err_u - independent).abs() <= 1e-12, "k={k}: {} vs {independent}", rec.err_u);
    }
}

#[test]
fn zero_data_gives_zero_errors() {
    let mesh = build_unit_cube_mesh(1);
    for params in [SchemeParams::hdgs(1), SchemeParams::hdgg(1)] {
        let out = solve(&mesh, &params, &ZeroSolution, SolvePath::Condensed).unwrap();
        let rec = compute_errors(&mesh, &out.fields, &ZeroSolution).unwrap();
        assert_eq!(rec.err_u, 0.0);
        assert_eq!(rec.err_w, 0.0);
        assert_eq!(rec.err_div_u, 0.0);
    }
}

#[test]
fn error_quadrature_is_converged_on_coarsest_meshes() {
    let cases: [(Mesh, &dyn ExactSolution, SchemeParams); 4] = [
        (build_unit_cube_mesh(2), &SmoothSolution, SchemeParams::hdgs(0)),
        (build_unit_cube_mesh(2), &SmoothSolution, SchemeParams::hdgs(1)),
        (build_unit_cube_mesh(2), &SmoothSolution, SchemeParams::hdgg(1)),
        (build_lshape_mesh(2), &LShapeSolution, SchemeParams::hdgs(0)),
    ];
    for (mesh, exact, params) in cases {
        let fields = solve(&mesh, &params, exact, SolvePath::Condensed).unwrap().fields;
        let a = compute_errors_with_degree(&mesh, &fields, exact, OVERKILL_DEGREE).unwrap();
        let b = compute_errors_with_degree(&mesh, &fields, exact, OVERKILL_DEGREE + 2).unwrap();
        for (x, y) in [(a.err_u, b.err_u), (a.err_w, b.err_w), (a.err_curl_u, b.err_curl_u)] {
            assert!((x - y).abs() < 1e-3 * y, "{params:?}: {x} vs {y}");
        }
    }
}

#[test]
fn hdgs_divergence_on_lshape() {
    let mesh = build_lshape_mesh(2);
    let fields = solve(&mesh, &SchemeParams::hdgs(1), &LShapeSolution, SolvePath::Condensed)
        .unwrap()
        .fields;
    let (div, u) = divergence_norm(&mesh, &fields).unwrap();
    assert!(div <= 1e-9 * u, "{div:e} vs {u:e}");
}

#[test]
fn hdgg_multiplier_is_not_identically_zero() {
    let mesh = build_unit_cube_mesh(2);
    let fields = solve(&mesh, &SchemeParams::hdgg(0), &SmoothSolution, SolvePath::Condensed)
        .unwrap()
        .fields;
    let [_, _, p] = fields.field_norms();
    assert!(p > 0.0);
    let (div, u) = divergence_norm(&mesh, &fields).unwrap();
    assert!(div > 1e-9 * u, "hdgg is not expected to be divergence free");
}

fn record(h: f64, e: f64) -> ConvergenceRecord {
    ConvergenceRecord {
        k: 0,
        h,
        err_u: e,
        err_w: 2.0 * e.sqrt(),
        err_curl_u: e,
        err_div_u: e,
        dofs_global: 0,
        wall_time: 0.0,
    }
}

proptest! {
    #[test]
    fn eoc_is_scale_invariant(
        errs in proptest::collection::vec(1e-8f64..1.0, 2..6),
        scale in 1e-6f64..1e6,
    ) {
        let records: Vec<_> = errs.iter().enumerate().map(|(i, &e)| record(1.0 / (1 << i) as f64, e)).collect();
        let scaled: Vec<_> = records
            .iter()
            .map(|r| ConvergenceRecord { err_u: r.err_u * scale, ..r.clone() })
            .collect();
        let a = compute_eoc(&records).unwrap();
        let b = compute_eoc(&scaled).unwrap();
        for (x, y) in a.u.iter().zip(&b.u) {
            match (x, y) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-13, "{} vs {}", x, y),
                (None, None) => {}
                _ => prop_assert!(false, "mismatched orders {:?} {:?}", x, y),
            }
        }
    }
}
