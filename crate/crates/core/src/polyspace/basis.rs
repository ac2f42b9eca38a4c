//! Orthonormal modal bases obtained by orthonormalizing graded monomials.

use nalgebra::DMatrix;

use super::monomial::{dim_pk, eval_monomials, eval_monomials_with_grad, graded_exponents};
use super::quadrature::{simplex_quadrature, QuadratureRule};
use crate::error::SpaceError;

pub const MAX_DEGREE: usize = 4;

/// Reference simplex a modal basis lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Triangle,
    Tetrahedron,
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::Triangle => 2,
            Domain::Tetrahedron => 3,
        }
    }

    pub fn measure(self) -> f64 {
        match self {
            Domain::Triangle => 0.5,
            Domain::Tetrahedron => 1.0 / 6.0,
        }
    }

    fn centroid(self) -> [f64; 3] {
        match self {
            Domain::Triangle => [1.0 / 3.0, 1.0 / 3.0, 0.0],
            Domain::Tetrahedron => [0.25, 0.25, 0.25],
        }
    }
}

/// Values (and optionally gradients) of a basis at a list of points.
#[derive(Debug, Clone)]
pub struct BasisTable {
    /// `values[(q, i)]` is basis function `i` at point `q`.
    pub values: DMatrix<f64>,
    /// `grads[d][(q, i)]` is the `d`-th partial derivative.
    pub grads: Vec<DMatrix<f64>>,
}

/// Finds `C` such that the columns of `samples * C` are orthonormal.
///
/// `samples` holds `sqrt(weight)`-scaled values of the spanning functions
/// (one column per function). Two Householder passes keep the result
/// orthonormal to rounding level even for moderately conditioned spans.
/// `C` is upper triangular, so function `i` only mixes spanning functions
/// `0..=i`.
pub fn orthonormalize(samples: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>, SpaceError> {
    let n = samples.ncols();
    let mut coeffs = DMatrix::<f64>::identity(n, n);
    let mut current = samples.clone();
    for pass in 0..2 {
        let r = current.clone().qr().r();
        let dmax = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        for i in 0..n {
            if r[(i, i)].abs() <= 1e-10 * dmax || dmax == 0.0 {
                return Err(SpaceError::RankDeficient {
                    what,
                    value: r[(i, i)],
                });
            }
        }
        let mut rinv = DMatrix::<f64>::identity(n, n);
        r.solve_upper_triangular_mut(&mut rinv);
        if pass == 0 {
            // positive leading coefficients
            for i in 0..n {
                if r[(i, i)] < 0.0 {
                    rinv.column_mut(i).neg_mut();
                }
            }
        }
        coeffs = &coeffs * &rinv;
        current = samples * &coeffs;
    }
    Ok(coeffs)
}

/// Orthonormal basis of `P_k` on a reference simplex.
///
/// Basis function `i` is `sum_j coeffs[(j, i)] m_j(scale (x - centroid))`
/// for the graded monomials `m_j`. Because the orthonormalization is
/// triangular, the first `dim P_j` functions span `P_j` for every `j <= k`.
#[derive(Debug, Clone)]
pub struct ModalBasis {
    domain: Domain,
    degree: usize,
    exps: Vec<[usize; 3]>,
    coeffs: DMatrix<f64>,
    shift: [f64; 3],
    scale: f64,
    rule: QuadratureRule,
    table: BasisTable,
}

impl ModalBasis {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of basis functions spanning `P_j`, `j <= degree`.
    pub fn prefix_len(&self, j: usize) -> usize {
        assert!(j <= self.degree);
        dim_pk(self.domain.dim(), j)
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn exponents(&self) -> &[[usize; 3]] {
        &self.exps
    }

    /// Quadrature rule the basis was orthonormalized against.
    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Values and gradients at the points of [`ModalBasis::rule`].
    pub fn table(&self) -> &BasisTable {
        &self.table
    }

    fn local(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut y = [0.0; 3];
        for d in 0..self.domain.dim() {
            y[d] = self.scale * (x[d] - self.shift[d]);
        }
        y
    }

    /// Values of all basis functions at a reference point.
    pub fn eval(&self, x: &[f64; 3], out: &mut [f64]) {
        let mut m = vec![0.0; self.exps.len()];
        eval_monomials(&self.exps, &self.local(x), &mut m);
        for (i, o) in out.iter_mut().enumerate().take(self.len()) {
            *o = self.coeffs.column(i).iter().zip(&m).map(|(c, v)| c * v).sum();
        }
    }

    /// Values and reference gradients at a list of reference points.
    pub fn tabulate(&self, points: &[[f64; 3]]) -> BasisTable {
        let nm = self.exps.len();
        let dim = self.domain.dim();
        let mut mono = DMatrix::<f64>::zeros(points.len(), nm);
        let mut dmono = vec![DMatrix::<f64>::zeros(points.len(), nm); dim];
        let mut v = vec![0.0; nm];
        let mut g = vec![[0.0; 3]; nm];
        for (q, x) in points.iter().enumerate() {
            eval_monomials_with_grad(&self.exps, &self.local(x), &mut v, &mut g);
            for j in 0..nm {
                mono[(q, j)] = v[j];
                for d in 0..dim {
                    dmono[d][(q, j)] = self.scale * g[j][d];
                }
            }
        }
        BasisTable {
            values: &mono * &self.coeffs,
            grads: dmono.iter().map(|d| d * &self.coeffs).collect(),
        }
    }
}

/// Orthonormal modal basis of `P_k` on the reference triangle or tetrahedron.
pub fn reference_basis(domain: Domain, k: usize) -> Result<ModalBasis, SpaceError> {
    // One more than the element degree is needed by the velocity space.
    if k > MAX_DEGREE + 2 {
        return Err(SpaceError::PolynomialDegree(k));
    }
    let dim = domain.dim();
    let exps = graded_exponents(dim, k);
    let rule = simplex_quadrature(dim, 2 * k)?;
    let shift = domain.centroid();
    let scale = (dim + 1) as f64;
    let nm = exps.len();
    let mut samples = DMatrix::<f64>::zeros(rule.len(), nm);
    let mut v = vec![0.0; nm];
    for (q, (x, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let mut y = [0.0; 3];
        for d in 0..dim {
            y[d] = scale * (x[d] - shift[d]);
        }
        eval_monomials(&exps, &y, &mut v);
        let sw = w.sqrt();
        for j in 0..nm {
            samples[(q, j)] = sw * v[j];
        }
    }
    let coeffs = orthonormalize(&samples, "modal basis")?;
    let mut basis = ModalBasis {
        domain,
        degree: k,
        exps,
        coeffs,
        shift,
        scale,
        rule,
        table: BasisTable {
            values: DMatrix::zeros(0, 0),
            grads: Vec::new(),
        },
    };
    basis.table = basis.tabulate(&basis.rule.points);
    Ok(basis)
}

/// Gram matrix of a basis with respect to a quadrature rule.
pub fn gram_matrix(basis: &ModalBasis, rule: &QuadratureRule) -> DMatrix<f64> {
    let t = basis.tabulate(&rule.points);
    let mut weighted = t.values.clone();
    for (q, w) in rule.weights.iter().enumerate() {
        weighted.row_mut(q).scale_mut(*w);
    }
    t.values.transpose() * weighted
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        for k in 0..=MAX_DEGREE {
            assert_eq!(reference_basis(Domain::Tetrahedron, k).unwrap().len(), (k + 1) * (k + 2) * (k + 3) / 6);
            assert_eq!(reference_basis(Domain::Triangle, k).unwrap().len(), (k + 1) * (k + 2) / 2);
        }
        assert_eq!(reference_basis(Domain::Tetrahedron, 1).unwrap().len(), 4);
        assert_eq!(reference_basis(Domain::Tetrahedron, 3).unwrap().len(), 20);
    }

    #[test]
    fn orthonormal_on_reference_domain() {
        for domain in [Domain::Triangle, Domain::Tetrahedron] {
            for k in 0..=MAX_DEGREE + 1 {
                let b = reference_basis(domain, k).unwrap();
                let rule = simplex_quadrature(domain.dim(), 2 * k + 2).unwrap();
                let g = gram_matrix(&b, &rule);
                let err = (g - DMatrix::identity(b.len(), b.len())).abs().max();
                assert!(err < 1e-12, "{domain:?} k={k}: {err:e}");
            }
        }
    }

    #[test]
    fn constant_function_is_constant() {
        let b = reference_basis(Domain::Tetrahedron, 2).unwrap();
        let t = b.tabulate(&[[0.1, 0.2, 0.3], [0.5, 0.1, 0.1], [0.0, 0.0, 0.0]]);
        let c = 6f64.sqrt();
        for q in 0..3 {
            assert!((t.values[(q, 0)] - c).abs() < 1e-13);
            for d in 0..3 {
                assert!(t.grads[d][(q, 0)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_gradients_are_constant() {
        let b = reference_basis(Domain::Tetrahedron, 1).unwrap();
        let t = b.tabulate(&[[0.1, 0.2, 0.3], [0.6, 0.1, 0.2]]);
        for d in 0..3 {
            for i in 0..4 {
                assert!((t.grads[d][(0, i)] - t.grads[d][(1, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let b = reference_basis(Domain::Tetrahedron, 3).unwrap();
        let x = [0.21, 0.17, 0.33];
        let t = b.tabulate(&[x]);
        let h = 1e-6;
        for i in 0..b.len() {
            for d in 0..3 {
                let (mut xp, mut xm) = (x, x);
                xp[d] += h;
                xm[d] -= h;
                let tp = b.tabulate(&[xp]);
                let tm = b.tabulate(&[xm]);
                let fd = (tp.values[(0, i)] - tm.values[(0, i)]) / (2.0 * h);
                let an = t.grads[d][(0, i)];
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "i={i} d={d} {fd} {an}");
            }
        }
    }

    #[test]
    fn eval_matches_tabulate() {
        let b = reference_basis(Domain::Triangle, 3).unwrap();
        let x = [0.3, 0.4, 0.0];
        let mut out = vec![0.0; b.len()];
        b.eval(&x, &mut out);
        let t = b.tabulate(&[x]);
        for i in 0..b.len() {
            assert!((out[i] - t.values[(0, i)]).abs() < 1e-13);
        }
    }
}
