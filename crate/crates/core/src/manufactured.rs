//! Closed-form solutions of the mixed curl-curl problem used for verification.

use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};

use crate::mesh::FaceFrame;

/// Pointwise values of an exact solution `(u, w, p, f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValues {
    pub u: Vector3<f64>,
    pub w: Vector3<f64>,
    pub p: f64,
    pub f: Vector3<f64>,
}

/// An exact solution with `w = curl u`, `f = curl w + grad p`, `div u = 0`
/// and `p = 0` on the boundary.
pub trait ExactSolution: Sync {
    fn eval(&self, x: &Point3<f64>) -> FieldValues;

    fn u(&self, x: &Point3<f64>) -> Vector3<f64> {
        self.eval(x).u
    }

    fn source(&self, x: &Point3<f64>) -> Vector3<f64> {
        self.eval(x).f
    }

    /// Whether the source term vanishes identically (skips load integration).
    fn zero_source(&self) -> bool {
        false
    }
}

/// Smooth solution on the unit cube.
///
/// `u = (sin(pi y) sin(pi z), sin(pi x) sin(pi z), sin(pi x) sin(pi y))`,
/// `p = sin(2 pi x) sin(2 pi y) sin(2 pi z)`. `u` is divergence free with
/// `-Laplace u = 2 pi^2 u`, so `f = 2 pi^2 u + grad p`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SmoothSolution;

impl ExactSolution for SmoothSolution {
    fn eval(&self, x: &Point3<f64>) -> FieldValues {
        smooth_solution(x)
    }
}

pub fn smooth_solution(x: &Point3<f64>) -> FieldValues {
    let (sx, cx) = (PI * x.x).sin_cos();
    let (sy, cy) = (PI * x.y).sin_cos();
    let (sz, cz) = (PI * x.z).sin_cos();
    let u = Vector3::new(sy * sz, sx * sz, sx * sy);
    let w = Vector3::new(PI * sx * (cy - cz), PI * sy * (cz - cx), PI * sz * (cx - cy));
    let (s2x, c2x) = (2.0 * PI * x.x).sin_cos();
    let (s2y, c2y) = (2.0 * PI * x.y).sin_cos();
    let (s2z, c2z) = (2.0 * PI * x.z).sin_cos();
    let p = s2x * s2y * s2z;
    let grad_p = 2.0 * PI * Vector3::new(c2x * s2y * s2z, s2x * c2y * s2z, s2x * s2y * c2z);
    FieldValues {
        u,
        w,
        p,
        f: 2.0 * PI * PI * u + grad_p,
    }
}

/// Singular solution on the L-shaped prism.
///
/// `u = grad S` in the `(x, y)` plane with `S = r^{4/3} sin(4 theta / 3)` and
/// `theta` in `[0, 3 pi / 2]` measured from the positive `x` axis, so the
/// removed quadrant `x > 0, y < 0` holds the branch cut. `S` is harmonic and
/// `u` is a gradient, hence `w = 0`, `p = 0` and `f = 0`. In closed form
/// `u = (4/3) r^{1/3} (sin(theta/3), cos(theta/3), 0)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LShapeSolution;

impl LShapeSolution {
    /// The potential `S`.
    pub fn potential(x: f64, y: f64) -> f64 {
        let (r, theta) = polar(x, y);
        r.powf(4.0 / 3.0) * (4.0 * theta / 3.0).sin()
    }
}

fn polar(x: f64, y: f64) -> (f64, f64) {
    let r = x.hypot(y);
    let mut theta = y.atan2(x);
    if theta <= -0.5 * PI {
        theta += 2.0 * PI;
    }
    (r, theta)
}

impl ExactSolution for LShapeSolution {
    fn eval(&self, x: &Point3<f64>) -> FieldValues {
        lshape_solution(x).expect("L-shape solution evaluated on the singular edge")
    }

    fn zero_source(&self) -> bool {
        true
    }
}

/// Values of the L-shape solution; `None` on the re-entrant edge `r = 0`.
pub fn lshape_solution(x: &Point3<f64>) -> Option<FieldValues> {
    let (r, theta) = polar(x.x, x.y);
    if r == 0.0 {
        return None;
    }
    let a = 4.0 / 3.0 * r.cbrt();
    let (s, c) = (theta / 3.0).sin_cos();
    Some(FieldValues {
        u: Vector3::new(a * s, a * c, 0.0),
        w: Vector3::zeros(),
        p: 0.0,
        f: Vector3::zeros(),
    })
}

/// The zero solution (homogeneous data).
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroSolution;

impl ExactSolution for ZeroSolution {
    fn eval(&self, _x: &Point3<f64>) -> FieldValues {
        FieldValues {
            u: Vector3::zeros(),
            w: Vector3::zeros(),
            p: 0.0,
            f: Vector3::zeros(),
        }
    }

    fn zero_source(&self) -> bool {
        true
    }
}

/// Divergence-free linear field `u = (y - z, z - x, x - y)` with constant
/// curl `w = (-2, -2, -2)`, `p = 0`, `f = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearSolution;

impl ExactSolution for LinearSolution {
    fn eval(&self, x: &Point3<f64>) -> FieldValues {
        FieldValues {
            u: Vector3::new(x.y - x.z, x.z - x.x, x.x - x.y),
            w: Vector3::new(-2.0, -2.0, -2.0),
            p: 0.0,
            f: Vector3::zeros(),
        }
    }

    fn zero_source(&self) -> bool {
        true
    }
}

/// Tangential part of `u` on a boundary face, as frame components
/// `(u . t1, u . t2)`.
pub fn boundary_data(solution: &dyn ExactSolution, frame: &FaceFrame, x: &Point3<f64>) -> [f64; 2] {
    let u = solution.u(x);
    [u.dot(&frame.tangent1), u.dot(&frame.tangent2)]
}
