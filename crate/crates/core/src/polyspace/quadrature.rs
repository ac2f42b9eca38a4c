//! Conical-product (collapsed coordinate) Gauss rules on the reference simplices.
//!
//! Reference triangle: `(0,0), (1,0), (0,1)`. Reference tetrahedron:
//! `(0,0,0), (1,0,0), (0,1,0), (0,0,1)`. The collapsed map
//! `x = a, y = (1-a) b, z = (1-a)(1-b) c` turns the simplex into a cube; the
//! Jacobian factors `(1-a)^2 (1-b)` are absorbed into Gauss-Jacobi weights so
//! `ceil((degree+1)/2)` points per direction suffice.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::SpaceError;

pub const MAX_QUADRATURE_DEGREE: usize = 20;

/// Quadrature rule on a reference simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates; each entry has `dim` components.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub dim: usize,
    pub exact_degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; 3]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

/// Gauss-Jacobi nodes and weights on `[0,1]` for the weight `(1-x)^alpha`.
///
/// Golub-Welsch on the Jacobi matrix of the `(1-x)^alpha (1+x)^0` family on
/// `[-1,1]`, then mapped affinely.
pub fn gauss_jacobi(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let beta = 0.0;
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        let diag = if i == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
        };
        jac[(i, i)] = diag;
        if i + 1 < n {
            let k = k + 1.0;
            let num = 4.0 * k * (k + alpha) * (k + beta) * (k + ab);
            let den = (2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0);
            let off = (num / den).sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    // mass of (1-x)^alpha on [-1,1], mapped to [0,1] it becomes 1/(alpha+1)
    let mass01 = 1.0 / (alpha + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (0.5 * (eig.eigenvalues[i] + 1.0), mass01 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Quadrature rule on the reference triangle (`dim = 2`) or tetrahedron
/// (`dim = 3`) that integrates every polynomial of total degree `<= degree`.
pub fn simplex_quadrature(dim: usize, degree: usize) -> Result<QuadratureRule, SpaceError> {
    if degree > MAX_QUADRATURE_DEGREE {
        return Err(SpaceError::QuadratureDegree(degree));
    }
    assert!(dim == 2 || dim == 3, "simplex dimension must be 2 or 3");
    let n = degree / 2 + 1;
    let (ga, wa) = gauss_jacobi(n, (dim - 1) as f64);
    let (gb, wb) = gauss_jacobi(n, (dim - 2) as f64);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    if dim == 2 {
        for (a, wa) in ga.iter().zip(&wa) {
            for (b, wb) in gb.iter().zip(&wb) {
                points.push([*a, (1.0 - a) * b, 0.0]);
                weights.push(wa * wb);
            }
        }
    } else {
        let (gc, wc) = gauss_jacobi(n, 0.0);
        for (a, wa) in ga.iter().zip(&wa) {
            for (b, wb) in gb.iter().zip(&wb) {
                for (c, wc) in gc.iter().zip(&wc) {
                    points.push([*a, (1.0 - a) * b, (1.0 - a) * (1.0 - b) * c]);
                    weights.push(wa * wb * wc);
                }
            }
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        dim,
        exact_degree: degree,
    })
}
