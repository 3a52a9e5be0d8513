//! Truncated SVD by power iteration with deflation.
//!
//! Dependency-free and deterministic: each factor starts from a seeded
//! random vector, iterates `v <- normalize(A^T (A v))` until the singular
//! value estimate stabilizes (relative tolerance `1e-8`, at most 500
//! iterations per factor), then deflates `A <- A - sigma u v^T`.
//! Intended for the modest rating matrices used in feature extraction;
//! dense `O(rank * iters * rows * cols)` cost is fine there.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS_PER_FACTOR: usize = 500;

/// Dense row-major matrix.
#[derive(Debug, Clone)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// `out = A v` (length `rows`).
    fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            let mut s = 0.0;
            for (a, b) in row.iter().zip(v.iter()) {
                s += a * b;
            }
            *o = s;
        }
    }

    /// `out = A^T u` (length `cols`).
    fn mul_transpose_vec(&self, u: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (r, uv) in u.iter().enumerate() {
            if *uv == 0.0 {
                continue;
            }
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row.iter()) {
                *o += a * uv;
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// One factor of the decomposition.
#[derive(Debug, Clone)]
pub struct SvdFactor {
    pub sigma: f64,
    /// Left singular vector, length `rows`.
    pub u: Vec<f64>,
    /// Right singular vector, length `cols`.
    pub v: Vec<f64>,
}

/// Rank-`k` truncated SVD of `a`. Factors come out in decreasing sigma
/// order. `seed` fixes the power-iteration start vectors.
pub fn truncated_svd(a: &Matrix, rank: usize, seed: u64) -> Vec<SvdFactor> {
    let mut work = a.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors = Vec::with_capacity(rank);
    let mut av = vec![0.0; a.rows];
    let mut atu = vec![0.0; a.cols];
    for _ in 0..rank.min(a.rows.min(a.cols)) {
        let mut v: Vec<f64> = (0..a.cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        normalize(&mut v);
        let mut sigma_prev = 0.0;
        let mut sigma = 0.0;
        let mut u = vec![0.0; a.rows];
        for _ in 0..MAX_ITERATIONS_PER_FACTOR {
            work.mul_vec(&v, &mut av);
            let norm_av = l2(&av);
            if norm_av == 0.0 {
                // Residual is (numerically) zero in this direction; the
                // remaining spectrum is exhausted.
                sigma = 0.0;
                break;
            }
            for (o, val) in u.iter_mut().zip(av.iter()) {
                *o = val / norm_av;
            }
            work.mul_transpose_vec(&u, &mut atu);
            sigma = l2(&atu);
            if sigma == 0.0 {
                break;
            }
            for (o, val) in v.iter_mut().zip(atu.iter()) {
                *o = val / sigma;
            }
            if (sigma - sigma_prev).abs() <= DEFAULT_TOLERANCE * sigma.max(1.0) {
                break;
            }
            sigma_prev = sigma;
        }
        if sigma <= 0.0 {
            break;
        }
        // Deflate: A <- A - sigma u v^T.
        for r in 0..work.rows {
            let ur = sigma * u[r];
            if ur == 0.0 {
                continue;
            }
            let row = &mut work.data[r * work.cols..(r + 1) * work.cols];
            for (val, vv) in row.iter_mut().zip(v.iter()) {
                *val -= ur * vv;
            }
        }
        factors.push(SvdFactor {
            sigma,
            u: u.clone(),
            v: v.clone(),
        });
    }
    factors
}

/// Frobenius error `||A - sum_j sigma_j u_j v_j^T||_F` of a truncation.
pub fn reconstruction_error(a: &Matrix, factors: &[SvdFactor]) -> f64 {
    let mut sum = 0.0;
    for r in 0..a.rows {
        for c in 0..a.cols {
            let mut approx = 0.0;
            for f in factors {
                approx += f.sigma * f.u[r] * f.v[c];
            }
            let d = a.at(r, c) - approx;
            sum += d * d;
        }
    }
    sum.sqrt()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = l2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_matrix_top_factor() {
        let a = Matrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        let f = truncated_svd(&a, 1, 0);
        assert_eq!(f.len(), 1);
        assert!((f[0].sigma - 1.0).abs() < 1e-8);
        // Singular vector of the identity is any unit vector; check unit norm
        // and consistency u = A v / sigma = v.
        let vnorm = l2(&f[0].v);
        assert!((vnorm - 1.0).abs() < 1e-10);
        for (u, v) in f[0].u.iter().zip(f[0].v.iter()) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn diagonal_matrix_recovers_spectrum() {
        let a = Matrix::new(3, 3, vec![3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0]);
        let f = truncated_svd(&a, 3, 1);
        let sigmas: Vec<f64> = f.iter().map(|x| x.sigma).collect();
        assert!((sigmas[0] - 3.0).abs() < 1e-7);
        assert!((sigmas[1] - 2.0).abs() < 1e-7);
        assert!((sigmas[2] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn random_matrix_matches_dense_oracle() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (rows, cols, rank) = (20, 30, 5);
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let a = Matrix::new(rows, cols, data.clone());
        let factors = truncated_svd(&a, rank, 3);
        let err = reconstruction_error(&a, &factors);
        let oracle = oracles::rank_k_truncation_error(
            &oracles::DenseMat::new(rows, cols, data),
            rank,
        );
        assert!(
            (err - oracle).abs() < 1e-6,
            "power-iteration err {err} vs oracle {oracle}"
        );
    }

    #[test]
    fn rank_deficient_matrix_stops_early() {
        // Rank-1 matrix: outer product.
        let u = [1.0, 2.0, -1.0];
        let v = [0.5, -0.5];
        let mut data = Vec::new();
        for uu in u {
            for vv in v {
                data.push(uu * vv);
            }
        }
        let a = Matrix::new(3, 2, data);
        let f = truncated_svd(&a, 2, 0);
        assert_eq!(f.len(), 2);
        assert!(f[1].sigma < 1e-7, "second sigma {}", f[1].sigma);
        let err = reconstruction_error(&a, &f[..1]);
        assert!(err < 1e-8);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = Matrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let f1 = truncated_svd(&a, 2, 9);
        let f2 = truncated_svd(&a, 2, 9);
        for (a, b) in f1.iter().zip(f2.iter()) {
            assert_eq!(a.sigma, b.sigma);
            assert_eq!(a.u, b.u);
            assert_eq!(a.v, b.v);
        }
    }
}
