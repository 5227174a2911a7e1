#![allow(dead_code)]

use doa_cert::matrix::Matrix;

/// Orthonormal columns from Gram-Schmidt on `raw` (row-major, `n * n`), or
/// `None` when the input is nearly rank deficient.
pub fn orthogonal(n: usize, raw: &[f64]) -> Option<Matrix> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<f64> = (0..n).map(|i| raw[i * n + j]).collect();
        for c in &cols {
            let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-2 {
            return None;
        }
        cols.push(v.into_iter().map(|a| a / norm).collect());
    }
    Some(Matrix::from_fn(n, n, |i, j| cols[j][i]))
}

/// `Q D Q'`.
pub fn similar(d: &Matrix, q: &Matrix) -> Matrix {
    q.matmul(d).unwrap().matmul(&q.transpose()).unwrap()
}

/// Upper triangular matrix with the given negative diagonal and couplings.
pub fn stable_triangular(diag: &[f64], upper: &[f64]) -> Matrix {
    let n = diag.len();
    let mut k = 0;
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if j > i {
            k += 1;
            upper[(k - 1) % upper.len()]
        } else {
            0.0
        }
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy multiset distance between two spectra.
pub fn spectrum_distance(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    let mut pool = b.to_vec();
    let mut worst: f64 = 0.0;
    for z in a {
        let (k, d) = pool
            .iter()
            .enumerate()
            .map(|(k, w)| (k, (w - z).norm()))
            .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        worst = worst.max(d);
        pool.swap_remove(k);
    }
    worst
}
