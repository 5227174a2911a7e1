//! Dense linear algebra for the small matrices that show up in stability
//! certificates (n ≤ ~10).
//!
//! Everything here is self-contained: general eigenvalues come from a
//! Householder reduction to Hessenberg form followed by Francis double-shift
//! QR, symmetric eigenvalues from cyclic Jacobi rotations, and the Lyapunov
//! equation `F'P + PF = -I` is solved by Kronecker vectorization with a
//! partially pivoted LU factorization.
//!
//! Storage is row-major: `data[i * cols + j] = A[i, j]`.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use thiserror::Error;

/// Strictness margin for "negative real part" and "negative definite".
pub const HURWITZ_EPS: f64 = 1e-9;

/// Relative tolerance accepted by [`eig_symmetric_max`] before it refuses an
/// asymmetric input.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Residual bound `max |F'P + PF + I|` guaranteed by [`solve_lyapunov`].
pub const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {}x{}, got {}x{}", expected.0, expected.1, got.0, got.1)]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("data length mismatch: expected {expected}, got {got}")]
    InvalidData { expected: usize, got: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },
    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("matrix is not Hurwitz (max real part {max_real_part})")]
    NotHurwitz { max_real_part: f64 },
    #[error("Lyapunov residual {residual:e} exceeds tolerance")]
    Residual { residual: f64 },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// A dense real matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data. Rejects NaN and infinities.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::InvalidData {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of rows, e.g. `Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]])`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(LinalgError::DimensionMismatch {
                    expected: (nrows, ncols),
                    got: (nrows, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(nrows, ncols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Builds a matrix entry by entry. Panics if `f` produces a non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let v = f(i, j);
                assert!(v.is_finite(), "non-finite entry at ({i}, {j})");
                data.push(v);
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.cols, other.cols),
                got: (other.rows, other.cols),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.cols, 1),
                got: (x.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.rows, self.cols),
                got: (other.rows, other.cols),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `(A + A') / 2`.
    pub fn symmetric_part(&self) -> Result<Self> {
        self.require_square()?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| {
            0.5 * (self.get(i, j) + self.get(j, i))
        }))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entrywise difference between two equally shaped matrices.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for Matrix {
    /// `[[a, b], [c, d]]`, one row per bracket.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Entrywise absolute value `|M|`.
pub fn abs_entrywise(m: &Matrix) -> Matrix {
    Matrix {
        rows: m.rows,
        cols: m.cols,
        data: m.data.iter().map(|v| v.abs()).collect(),
    }
}

/// LU factorization with partial pivoting, `PA = LU` packed in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        a.require_square()?;
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if pmax <= scale * 1e-14 {
                return Err(LinalgError::Singular);
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let factor = lu[i * n + k] / d;
                lu[i * n + k] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= factor * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: (n, 1),
                got: (b.len(), 1),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// Solves `A x = b` with partial pivoting.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(a)?.solve(b)
}

/// Eigenvalues of a general real square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub eigenvalues: Vec<Complex64>,
    pub max_real_part: f64,
}

impl EigenResult {
    fn from_parts(re: Vec<f64>, im: Vec<f64>) -> Self {
        let max_real_part = re.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let eigenvalues = re
            .into_iter()
            .zip(im)
            .map(|(r, i)| Complex64::new(r, i))
            .collect();
        Self {
            eigenvalues,
            max_real_part,
        }
    }

    pub fn is_hurwitz(&self) -> bool {
        self.max_real_part < -HURWITZ_EPS
    }
}

/// All eigenvalues of a square matrix via Hessenberg reduction and
/// Francis double-shift QR. The iteration budget is `100 n²` QR sweeps.
pub fn eig_general(m: &Matrix) -> Result<EigenResult> {
    m.require_square()?;
    let n = m.rows;
    if n == 0 {
        return Ok(EigenResult {
            eigenvalues: Vec::new(),
            max_real_part: f64::NEG_INFINITY,
        });
    }
    let mut h: Vec<Vec<f64>> = m.to_rows();
    hessenberg_reduce(&mut h);
    let (re, im) = hessenberg_qr(&mut h, 100 * n * n)?;
    Ok(EigenResult::from_parts(re, im))
}

fn hessenberg_reduce(h: &mut [Vec<f64>]) {
    let n = h.len();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[i][m - 1].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i][m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let f: f64 = (m..=high).rev().map(|i| ort[i] * h[i][j]).sum::<f64>() / hh;
            for i in m..=high {
                h[i][j] -= f * ort[i];
            }
        }
        for row in h.iter_mut() {
            let f: f64 = (m..=high).rev().map(|j| ort[j] * row[j]).sum::<f64>() / hh;
            for j in m..=high {
                row[j] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[m][m - 1] = scale * g;
        for i in m + 1..=high {
            h[i][m - 1] = 0.0;
        }
    }
}

// Eigenvalue-only variant of the EISPACK hqr2 iteration.
fn hessenberg_qr(h: &mut [Vec<f64>], max_iter: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let nn = h.len() as isize;
    let at = |i: isize| i as usize;
    let mut d = vec![0.0; nn as usize];
    let mut e = vec![0.0; nn as usize];
    let mut n = nn - 1;
    let low: isize = 0;
    let eps = f64::EPSILON;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r) = (0.0f64, 0.0f64, 0.0f64);
    let (mut s, mut z, mut w, mut x, mut y);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            norm += h[at(i)][at(j)].abs();
        }
    }

    let mut iter = 0usize;
    let mut total = 0usize;
    while n >= low {
        let mut l = n;
        while l > low {
            s = h[at(l - 1)][at(l - 1)].abs() + h[at(l)][at(l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[at(l)][at(l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            h[at(n)][at(n)] += exshift;
            d[at(n)] = h[at(n)][at(n)];
            e[at(n)] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            w = h[at(n)][at(n - 1)] * h[at(n - 1)][at(n)];
            p = (h[at(n - 1)][at(n - 1)] - h[at(n)][at(n)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[at(n)][at(n)] += exshift;
            h[at(n - 1)][at(n - 1)] += exshift;
            x = h[at(n)][at(n)];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[at(n - 1)] = x + z;
                d[at(n)] = d[at(n - 1)];
                if z != 0.0 {
                    d[at(n)] = x - w / z;
                }
                e[at(n - 1)] = 0.0;
                e[at(n)] = 0.0;
            } else {
                d[at(n - 1)] = x + p;
                d[at(n)] = x + p;
                e[at(n - 1)] = z;
                e[at(n)] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[at(n)][at(n)];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[at(n - 1)][at(n - 1)];
                w = h[at(n)][at(n - 1)] * h[at(n - 1)][at(n)];
            }
            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    h[at(i)][at(i)] -= x;
                }
                s = h[at(n)][at(n - 1)].abs() + h[at(n - 1)][at(n - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        h[at(i)][at(i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total += 1;
            if total > max_iter {
                return Err(LinalgError::NoConvergence { iterations: total });
            }

            let mut m = n - 2;
            while m >= l {
                z = h[at(m)][at(m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[at(m + 1)][at(m)] + h[at(m)][at(m + 1)];
                q = h[at(m + 1)][at(m + 1)] - z - r - s;
                r = h[at(m + 2)][at(m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[at(m)][at(m - 1)].abs() * (q.abs() + r.abs())
                    < eps
                        * (p.abs()
                            * (h[at(m - 1)][at(m - 1)].abs()
                                + z.abs()
                                + h[at(m + 1)][at(m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=n {
                h[at(i)][at(i - 2)] = 0.0;
                if i > m + 2 {
                    h[at(i)][at(i - 3)] = 0.0;
                }
            }

            let mut k = m;
            while k < n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[at(k)][at(k - 1)];
                    q = h[at(k + 1)][at(k - 1)];
                    r = if notlast { h[at(k + 2)][at(k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[at(k)][at(k - 1)] = -s * x;
                    } else if l != m {
                        h[at(k)][at(k - 1)] = -h[at(k)][at(k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = h[at(k)][at(j)] + q * h[at(k + 1)][at(j)];
                        if notlast {
                            p += r * h[at(k + 2)][at(j)];
                            h[at(k + 2)][at(j)] -= p * z;
                        }
                        h[at(k)][at(j)] -= p * x;
                        h[at(k + 1)][at(j)] -= p * y;
                    }
                    for i in 0..=n.min(k + 3) {
                        p = x * h[at(i)][at(k)] + y * h[at(i)][at(k + 1)];
                        if notlast {
                            p += z * h[at(i)][at(k + 2)];
                            h[at(i)][at(k + 2)] -= p * r;
                        }
                        h[at(i)][at(k)] -= p;
                        h[at(i)][at(k + 1)] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((d, e))
}

fn symmetrized(m: &Matrix) -> Result<Matrix> {
    m.require_square()?;
    let scale = m.max_abs().max(1.0);
    let mut deviation: f64 = 0.0;
    for i in 0..m.rows {
        for j in i + 1..m.cols {
            deviation = deviation.max((m.get(i, j) - m.get(j, i)).abs());
        }
    }
    if deviation > SYMMETRY_TOL * scale {
        return Err(LinalgError::NotSymmetric { deviation });
    }
    m.symmetric_part()
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi
/// rotations. The input is symmetrized first; an asymmetry larger than
/// [`SYMMETRY_TOL`] (relative to `max(1, max|m|)`) is an error.
pub fn eig_symmetric(m: &Matrix) -> Result<Vec<f64>> {
    let sym = symmetrized(m)?;
    let n = sym.rows;
    let mut a = sym.to_rows();
    let total: f64 = a.iter().flatten().map(|v| v * v).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off <= total * 1e-32 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Largest eigenvalue of a symmetric matrix (the maximum Rayleigh quotient).
pub fn eig_symmetric_max(m: &Matrix) -> Result<f64> {
    Ok(eig_symmetric(m)?
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY))
}

/// True iff `x'Ax < 0` for every `x ≠ 0`, i.e. the symmetric part has all
/// eigenvalues below `-HURWITZ_EPS`.
pub fn is_negative_definite(a: &Matrix) -> Result<bool> {
    let sym = a.symmetric_part()?;
    Ok(eig_symmetric_max(&sym)? < -HURWITZ_EPS)
}

/// Largest absolute entry of `F'P + PF + I`.
pub fn lyapunov_residual(f: &Matrix, p: &Matrix) -> Result<f64> {
    let lhs = f.transpose().matmul(p)?.add(&p.matmul(f)?)?;
    Ok(lhs.add(&Matrix::identity(f.rows))?.max_abs())
}

/// Solves `F'P + PF = -I` for symmetric positive definite `P`.
///
/// `F` must be Hurwitz (max real part below `-HURWITZ_EPS`); otherwise no such
/// `P` exists and [`LinalgError::NotHurwitz`] is returned. The system
/// `(I ⊗ F' + F' ⊗ I) vec(P) = -vec(I)` is solved directly with up to three
/// rounds of iterative refinement.
pub fn solve_lyapunov(f: &Matrix) -> Result<Matrix> {
    f.require_square()?;
    let spectrum = eig_general(f)?;
    if !spectrum.is_hurwitz() {
        return Err(LinalgError::NotHurwitz {
            max_real_part: spectrum.max_real_part,
        });
    }
    let n = f.rows;
    let nn = n * n;
    // vec(P)[i + j n] = P[i][j]; row (i, j) encodes (F'P + PF)[i][j].
    let mut k = Matrix::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            for l in 0..n {
                k[(row, l + j * n)] += f.get(l, i);
                k[(row, i + l * n)] += f.get(l, j);
            }
        }
    }
    let rhs: Vec<f64> = (0..nn)
        .map(|idx| if idx % n == idx / n { -1.0 } else { 0.0 })
        .collect();
    let lu = Lu::factor(&k)?;
    let mut v = lu.solve(&rhs)?;
    let to_matrix = |v: &[f64]| -> Result<Matrix> {
        let raw = Matrix::from_fn(n, n, |i, j| v[i + j * n]);
        raw.symmetric_part()
    };
    let mut p = to_matrix(&v)?;
    let mut residual = lyapunov_residual(f, &p)?;
    for _ in 0..3 {
        if residual <= LYAPUNOV_RESIDUAL_TOL * 1e-3 {
            break;
        }
        let kv = k.mul_vec(&v)?;
        let r: Vec<f64> = rhs.iter().zip(&kv).map(|(b, a)| b - a).collect();
        let dv = lu.solve(&r)?;
        let candidate: Vec<f64> = v.iter().zip(&dv).map(|(a, b)| a + b).collect();
        let cp = to_matrix(&candidate)?;
        let cr = lyapunov_residual(f, &cp)?;
        if cr >= residual {
            break;
        }
        v = candidate;
        p = cp;
        residual = cr;
    }
    if residual > LYAPUNOV_RESIDUAL_TOL {
        return Err(LinalgError::Residual { residual });
    }
    Ok(p)
}
