//! Face spaces: the enhanced tangential space `M^t(F)` and scalar `P_{k+1}(F)`.
//!
//! `M^t(F)` is spanned by the tangential fields with components in `P_k(F)`
//! together with the surface gradients of the `k + 3` homogeneous monomials
//! of degree `k + 2`. The two families are independent (the gradients have
//! exact degree `k + 1`), so the space has dimension `(k+1)(k+2) + (k+3)`.
//! It sits strictly between `[P_k(F)]^2` and `[P_{k+1}(F)]^2`. Because
//! gradients of lower-order terms fall into `P_k`, the space does not depend
//! on the point the homogeneous monomials are centred at.
//!
//! Polynomials are stored on centred, scaled face coordinates
//! `(sigma, tau) = (s - s_c, t - t_c) / L` where `(s, t)` are the frame
//! coordinates, `(s_c, t_c)` the centroid and `L` the longest edge.

use nalgebra::DMatrix;

use super::basis::orthonormalize;
use super::monomial::{dim_pk, eval_monomials, graded_exponents, homogeneous_exponents};
use super::quadrature::{simplex_quadrature, QuadratureRule};
use crate::error::SpaceError;

/// Dimension of `M^t(F)` for element degree `k`.
pub fn mt_dim(k: usize) -> usize {
    (k + 1) * (k + 2) + (k + 3)
}

/// Dimension of `P_{k+1}(F)`.
pub fn scalar_trace_dim(k: usize) -> usize {
    dim_pk(2, k + 1)
}

/// A quadrature rule mapped onto a triangle in face coordinates.
#[derive(Debug, Clone)]
pub struct FaceRule {
    /// Barycentric-like reference coordinates `(l1, l2)` of each point.
    pub reference: Vec<[f64; 3]>,
    /// Face coordinates `(s, t)`.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl FaceRule {
    pub fn new(vertices: &[[f64; 2]; 3], rule: &QuadratureRule) -> FaceRule {
        let [a, b, c] = *vertices;
        let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
        let points = rule
            .points
            .iter()
            .map(|p| {
                [
                    a[0] + p[0] * (b[0] - a[0]) + p[1] * (c[0] - a[0]),
                    a[1] + p[0] * (b[1] - a[1]) + p[1] * (c[1] - a[1]),
                ]
            })
            .collect();
        FaceRule {
            reference: rule.points.clone(),
            points,
            weights: rule.weights.iter().map(|w| w * 2.0 * area).collect(),
        }
    }
}

/// Values of the face bases at a list of face points.
#[derive(Debug, Clone)]
pub struct TraceTable {
    /// Frame components of each `M^t` basis member: `mt[c][(q, j)]`, `c = 0, 1`.
    pub mt: [DMatrix<f64>; 2],
    /// `scalar[(q, j)]`: basis of `P_{k+1}(F)`.
    pub scalar: DMatrix<f64>,
}

/// Orthonormal bases of `M^t(F)` and `P_{k+1}(F)` on one triangle.
#[derive(Debug, Clone)]
pub struct TraceBasis {
    k: usize,
    centre: [f64; 2],
    inv_scale: f64,
    exps: Vec<[usize; 3]>,
    /// `2 * n_mono` rows (first component, then second) by `mt_dim(k)` columns.
    mt_coeffs: DMatrix<f64>,
    /// `n_mono` rows by `scalar_trace_dim(k)` columns.
    scalar_coeffs: DMatrix<f64>,
}

impl TraceBasis {
    /// Builds the face spaces on the triangle with the given face coordinates.
    pub fn on_triangle(k: usize, vertices: &[[f64; 2]; 3]) -> Result<TraceBasis, SpaceError> {
        if k > super::basis::MAX_DEGREE {
            return Err(SpaceError::PolynomialDegree(k));
        }
        let [a, b, c] = *vertices;
        let centre = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        let dist = |p: [f64; 2], q: [f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let diam = dist(a, b).max(dist(b, c)).max(dist(a, c));
        let inv_scale = 2.0 / diam;
        let exps = graded_exponents(2, k + 1);
        let nmono = exps.len();
        let rule = FaceRule::new(vertices, &simplex_quadrature(2, 2 * k + 2)?);

        let mut basis = TraceBasis {
            k,
            centre,
            inv_scale,
            exps,
            mt_coeffs: DMatrix::zeros(0, 0),
            scalar_coeffs: DMatrix::zeros(0, 0),
        };
        let mono = basis.monomial_table(&rule.points);
        let sqrt_w: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();

        // scalar P_{k+1}: all graded monomials
        let mut samples = mono.clone();
        for (q, sw) in sqrt_w.iter().enumerate() {
            samples.row_mut(q).scale_mut(*sw);
        }
        basis.scalar_coeffs = orthonormalize(&samples, "scalar face space")?;

        // M^t: [P_k]^2 followed by gradients of homogeneous degree k+2 monomials
        let npk = dim_pk(2, k);
        let homog = homogeneous_exponents(2, k + 2);
        let nspan = 2 * npk + homog.len();
        let mut span = DMatrix::<f64>::zeros(2 * nmono, nspan);
        for j in 0..npk {
            span[(j, 2 * j)] = 1.0;
            span[(nmono + j, 2 * j + 1)] = 1.0;
        }
        let index_of = |e: [usize; 3]| basis.exps.iter().position(|x| *x == e).expect("monomial");
        for (h, e) in homog.iter().enumerate() {
            let col = 2 * npk + h;
            if e[0] > 0 {
                span[(index_of([e[0] - 1, e[1], 0]), col)] = e[0] as f64;
            }
            if e[1] > 0 {
                span[(nmono + index_of([e[0], e[1] - 1, 0]), col)] = e[1] as f64;
            }
        }
        let nq = rule.weights.len();
        let mut vsamples = DMatrix::<f64>::zeros(2 * nq, 2 * nmono);
        for q in 0..nq {
            for j in 0..nmono {
                vsamples[(2 * q, j)] = sqrt_w[q] * mono[(q, j)];
                vsamples[(2 * q + 1, nmono + j)] = sqrt_w[q] * mono[(q, j)];
            }
        }
        let weighted = &vsamples * &span;
        let c = orthonormalize(&weighted, "enhanced tangential space")?;
        basis.mt_coeffs = span * c;
        Ok(basis)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mt_len(&self) -> usize {
        self.mt_coeffs.ncols()
    }

    pub fn scalar_len(&self) -> usize {
        self.scalar_coeffs.ncols()
    }

    /// Monomial coefficients of the `M^t` members, `2 * n_mono` rows.
    pub fn mt_coefficients(&self) -> &DMatrix<f64> {
        &self.mt_coeffs
    }

    fn monomial_table(&self, points: &[[f64; 2]]) -> DMatrix<f64> {
        let nm = self.exps.len();
        let mut mono = DMatrix::<f64>::zeros(points.len(), nm);
        let mut v = vec![0.0; nm];
        for (q, p) in points.iter().enumerate() {
            let y = [
                (p[0] - self.centre[0]) * self.inv_scale,
                (p[1] - self.centre[1]) * self.inv_scale,
                0.0,
            ];
            eval_monomials(&self.exps, &y, &mut v);
            for j in 0..nm {
                mono[(q, j)] = v[j];
            }
        }
        mono
    }

    /// Values of both face bases at points given in face coordinates.
    pub fn tabulate(&self, points: &[[f64; 2]]) -> TraceTable {
        let nmono = self.exps.len();
        let mono = self.monomial_table(points);
        let first = &mono * self.mt_coeffs.rows(0, nmono);
        let second = &mono * self.mt_coeffs.rows(nmono, nmono);
        TraceTable {
            mt: [first, second],
            scalar: &mono * &self.scalar_coeffs,
        }
    }

    /// Expands a tangential field given by its two frame components at the
    /// points of `rule` into `M^t` coefficients (the L2 projection).
    pub fn project_tangential(&self, rule: &FaceRule, values: &[[f64; 2]]) -> Vec<f64> {
        let t = self.tabulate(&rule.points);
        (0..self.mt_len())
            .map(|j| {
                rule.weights
                    .iter()
                    .enumerate()
                    .map(|(q, w)| w * (values[q][0] * t.mt[0][(q, j)] + values[q][1] * t.mt[1][(q, j)]))
                    .sum()
            })
            .collect()
    }

    /// L2 projection of a scalar onto `P_{k+1}(F)`.
    pub fn project_scalar(&self, rule: &FaceRule, values: &[f64]) -> Vec<f64> {
        let t = self.tabulate(&rule.points);
        (0..self.scalar_len())
            .map(|j| {
                rule.weights
                    .iter()
                    .enumerate()
                    .map(|(q, w)| w * values[q] * t.scalar[(q, j)])
                    .sum()
            })
            .collect()
    }
}

pub const REFERENCE_TRIANGLE: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Face spaces on the reference triangle, with `(s, t) = (x, y)`.
pub fn trace_space_basis(k: usize) -> Result<TraceBasis, SpaceError> {
    TraceBasis::on_triangle(k, &REFERENCE_TRIANGLE)
}
