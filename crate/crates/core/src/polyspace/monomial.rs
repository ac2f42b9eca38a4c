//! Graded monomial sets in two or three variables.

/// Exponent tuples of all monomials of total degree `<= degree` in `dim`
/// variables, ordered by total degree (graded) and lexicographically within
/// a degree. The ordering makes every prefix of degree `<= d` a basis of `P_d`.
pub fn graded_exponents(dim: usize, degree: usize) -> Vec<[usize; 3]> {
    (0..=degree)
        .flat_map(|d| homogeneous_exponents(dim, d))
        .collect()
}

/// Exponents of the homogeneous monomials of exact total degree `degree`.
pub fn homogeneous_exponents(dim: usize, degree: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    match dim {
        1 => out.push([degree, 0, 0]),
        2 => {
            for a in (0..=degree).rev() {
                out.push([a, degree - a, 0]);
            }
        }
        3 => {
            for a in (0..=degree).rev() {
                for b in (0..=degree - a).rev() {
                    out.push([a, b, degree - a - b]);
                }
            }
        }
        _ => panic!("unsupported dimension {dim}"),
    }
    out
}

/// Dimension of `P_k` in `dim` variables.
pub fn dim_pk(dim: usize, k: usize) -> usize {
    match dim {
        1 => k + 1,
        2 => (k + 1) * (k + 2) / 2,
        3 => (k + 1) * (k + 2) * (k + 3) / 6,
        _ => panic!("unsupported dimension {dim}"),
    }
}

fn powers(x: f64, n: usize) -> [f64; 16] {
    let mut p = [0.0; 16];
    p[0] = 1.0;
    for i in 1..=n.min(15) {
        p[i] = p[i - 1] * x;
    }
    p
}

/// Values of the monomials at `x` into `values`.
pub fn eval_monomials(exps: &[[usize; 3]], x: &[f64; 3], values: &mut [f64]) {
    let deg = exps.iter().map(|e| e[0] + e[1] + e[2]).max().unwrap_or(0);
    let (px, py, pz) = (powers(x[0], deg), powers(x[1], deg), powers(x[2], deg));
    for (v, e) in values.iter_mut().zip(exps) {
        *v = px[e[0]] * py[e[1]] * pz[e[2]];
    }
}

/// Values and first partial derivatives of the monomials at `x`.
///
/// `grads[i]` holds `d/dx_j` of monomial `i` for `j = 0..3`.
pub fn eval_monomials_with_grad(
    exps: &[[usize; 3]],
    x: &[f64; 3],
    values: &mut [f64],
    grads: &mut [[f64; 3]],
) {
    let deg = exps.iter().map(|e| e[0] + e[1] + e[2]).max().unwrap_or(0);
    let p = [powers(x[0], deg), powers(x[1], deg), powers(x[2], deg)];
    for ((v, g), e) in values.iter_mut().zip(grads.iter_mut()).zip(exps) {
        *v = p[0][e[0]] * p[1][e[1]] * p[2][e[2]];
        for j in 0..3 {
            if e[j] == 0 {
                g[j] = 0.0;
                continue;
            }
            let mut d = e[j] as f64;
            for (i, pi) in p.iter().enumerate() {
                d *= if i == j { pi[e[i] - 1] } else { pi[e[i]] };
            }
            g[j] = d;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        for k in 0..=6 {
            assert_eq!(graded_exponents(2, k).len(), dim_pk(2, k));
            assert_eq!(graded_exponents(3, k).len(), dim_pk(3, k));
            assert_eq!(homogeneous_exponents(2, k).len(), k + 1);
        }
    }

    #[test]
    fn prefix_is_lower_degree_space() {
        let e = graded_exponents(3, 4);
        for k in 0..=4 {
            assert!(e[..dim_pk(3, k)].iter().all(|x| x.iter().sum::<usize>() <= k));
        }
    }

    #[test]
    fn derivative_of_monomial() {
        let exps = [[2, 1, 3]];
        let (mut v, mut g) = ([0.0], [[0.0; 3]]);
        eval_monomials_with_grad(&exps, &[0.5, 2.0, -1.0], &mut v, &mut g);
        assert_eq!(v[0], -(0.25 * 2.0));
        assert_eq!(g[0], [-(2.0 * 0.5 * 2.0), -0.25, 0.25 * 2.0 * 3.0]);
    }
}
