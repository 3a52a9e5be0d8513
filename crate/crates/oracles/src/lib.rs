//! Independent reference computations for test suites.
//!
//! Everything here is deliberately brute force and shares no code with the
//! crates under test: gradients come from central finite differences, and the
//! dense SVD goes through a cyclic Jacobi eigensolver on the Gram matrix.
//! Slow is fine; these only run on small fixtures.

/// Central finite-difference gradient of `f` at `theta`.
///
/// Evaluates `f` twice per coordinate with step `h`.
pub fn finite_difference_gradient<F>(f: F, theta: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut work = theta.to_vec();
    let mut grad = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let orig = work[i];
        work[i] = orig + h;
        let up = f(&work);
        work[i] = orig - h;
        let down = f(&work);
        work[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Dense matrix in row-major order, `rows x cols`.
#[derive(Debug, Clone)]
pub struct DenseMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// Full SVD of a dense matrix by Jacobi eigendecomposition of `A^T A`.
///
/// Returns singular values sorted in decreasing order together with the
/// matching right singular vectors (columns of V, each of length `cols`).
/// Left vectors are recovered as `A v / sigma` when needed by the caller.
pub fn dense_singular_values(a: &DenseMat) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.cols;
    // Gram matrix G = A^T A, symmetric n x n.
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for r in 0..a.rows {
                s += a.at(r, i) * a.at(r, j);
            }
            g[i * n + j] = s;
            g[j * n + i] = s;
        }
    }
    let (eigvals, eigvecs) = jacobi_eigen_symmetric(&mut g, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eigvals[y].partial_cmp(&eigvals[x]).unwrap());
    let mut sigmas = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    for &idx in &order {
        sigmas.push(eigvals[idx].max(0.0).sqrt());
        let mut v = vec![0.0; n];
        for r in 0..n {
            v[r] = eigvecs[r * n + idx];
        }
        vs.push(v);
    }
    (sigmas, vs)
}

/// Frobenius-norm error of the best rank-`k` approximation of `a`,
/// computed from the exact singular values: sqrt(sum of discarded sigma^2).
pub fn rank_k_truncation_error(a: &DenseMat, k: usize) -> f64 {
    let (sigmas, _) = dense_singular_values(a);
    sigmas.iter().skip(k).map(|s| s * s).sum::<f64>().sqrt()
}

/// Cyclic Jacobi eigensolver for a symmetric matrix stored row-major in `g`.
/// Returns (eigenvalues, eigenvectors as columns of a row-major n x n matrix).
fn jacobi_eigen_symmetric(g: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += g[p * n + q] * g[p * n + q];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = g[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = g[p * n + p];
                let aqq = g[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let gkp = g[k * n + p];
                    let gkq = g[k * n + q];
                    g[k * n + p] = c * gkp - s * gkq;
                    g[k * n + q] = s * gkp + c * gkq;
                }
                for k in 0..n {
                    let gpk = g[p * n + k];
                    let gqk = g[q * n + k];
                    g[p * n + k] = c * gpk - s * gqk;
                    g[q * n + k] = s * gpk + c * gqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut eig = vec![0.0; n];
    for i in 0..n {
        eig[i] = g[i * n + i];
    }
    (eig, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_gradient_of_quadratic() {
        // f(x) = x0^2 + 3 x1, grad = (2 x0, 3)
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[1];
        let g = finite_difference_gradient(f, &[2.0, -1.0], 1e-5);
        assert!((g[0] - 4.0).abs() < 1e-6);
        assert!((g[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn identity_singular_values_are_ones() {
        let a = DenseMat::new(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let (sigmas, _) = dense_singular_values(&a);
        for s in sigmas {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn diag_matrix_truncation_error() {
        // diag(3, 2, 1): best rank-1 error = sqrt(2^2 + 1^2)
        let a = DenseMat::new(3, 3, vec![3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let err = rank_k_truncation_error(&a, 1);
        assert!((err - 5.0f64.sqrt()).abs() < 1e-12);
    }
}
