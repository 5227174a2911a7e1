//! Co-simulation of a field, its CPWL approximation and the error-bound
//! dynamics
//!
//! ```text
//! Ė*1 = A⁽ⁱ⁾ E*1 − ξ − λ
//! Ė*2 = A⁽ⁱ⁾ E*2 − ξ + λ
//! ξ   = (A⁽ᵏ⁾ − A⁽ⁱ⁾) x_cpwl + (B⁽ᵏ⁾ − B⁽ⁱ⁾)
//! ```
//!
//! where `i` is the simplex of the true state and `k` the simplex of the CPWL
//! state. Subtracting the CPWL dynamics from `ẋ = A⁽ⁱ⁾x + B⁽ⁱ⁾ + e(x)` with
//! `|e| ≤ λ` gives `Ė = A⁽ⁱ⁾E − ξ + e` for `E = x − x_cpwl`, which fixes the
//! sign in front of `ξ`.

use num_complex::Complex64;

use super::partition::SimplicialPartition;
use super::pieces::{global_lambda, AffinePiece};
use crate::matrix::{eig_general, Matrix};
use crate::ode::rk4_step;
use crate::system::VectorField;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub x_cpwl: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    /// Simplex of the true state.
    pub i: usize,
    /// Simplex of the CPWL state.
    pub k: usize,
    /// `ξ` at this sample; zero whenever `i == k`.
    pub xi: Vec<f64>,
}

impl BoundSample {
    /// How far `x − x_cpwl` lies outside `[min(E*1, E*2), max(E*1, E*2)]`
    /// (zero when inside).
    pub fn violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.x.len() {
            let e = self.x[j] - self.x_cpwl[j];
            let lo = self.e1[j].min(self.e2[j]);
            let hi = self.e1[j].max(self.e2[j]);
            worst = worst.max(lo - e).max(e - hi);
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBoundRun {
    pub samples: Vec<BoundSample>,
    /// The true or CPWL trajectory left the partition box; bounds are only
    /// claimed for the recorded samples.
    pub truncated: bool,
    pub step: f64,
    pub lambda: Vec<f64>,
}

impl ErrorBoundRun {
    pub fn max_violation(&self) -> f64 {
        self.samples.iter().map(BoundSample::violation).fold(0.0, f64::max)
    }

    pub fn violations(&self, tol: f64) -> usize {
        self.samples.iter().filter(|s| s.violation() > tol).count()
    }

    /// Distinct `(i, k)` simplex pairs seen along the run.
    pub fn visited_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs: Vec<(usize, usize)> = self.samples.iter().map(|s| (s.i, s.k)).collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    pub horizon: f64,
    /// Upper limit on the step; the step is also kept below
    /// `δ_min / (4 max‖f‖)` so no simplex is skipped.
    pub max_step: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            max_step: 1e-3,
        }
    }
}

/// Largest `‖f‖` over the partition vertices.
fn max_field_norm(part: &SimplicialPartition, pieces: &[AffinePiece]) -> f64 {
    pieces
        .iter()
        .flat_map(|p| {
            part.vertices(p.simplex)
                .into_iter()
                .map(move |v| crate::ode::norm(&p.eval(&v)))
        })
        .fold(0.0, f64::max)
}

/// Co-integrates `x`, `x_cpwl` and the bounds `E*1`, `E*2` from `x0` with RK4.
///
/// `λ` is the componentwise maximum over all pieces. Both bounds and the
/// CPWL state start at the true initial condition.
pub fn integrate_error_bounds(
    vf: &VectorField,
    part: &SimplicialPartition,
    pieces: &[AffinePiece],
    x0: &[f64],
    opts: BoundOptions,
) -> ErrorBoundRun {
    let n = part.dim();
    let lambda = global_lambda(pieces);
    let fmax = max_field_norm(part, pieces);
    let step = if fmax > 0.0 {
        (part.delta_min() / (4.0 * fmax)).min(opts.max_step)
    } else {
        opts.max_step
    };

    let joint = |s: &[f64]| -> Option<Vec<f64>> {
        let (x, rest) = s.split_at(n);
        let (xc, rest) = rest.split_at(n);
        let (e1, e2) = rest.split_at(n);
        let i = part.locate(x)?;
        let k = part.locate(xc)?;
        let (pi, pk) = (&pieces[i], &pieces[k]);
        let mut out = vf.eval(x).ok()?;
        out.extend(pk.eval(xc));
        let xi = xi(pi, pk, xc);
        let ae1 = pi.a.mul_vec(e1).ok()?;
        let ae2 = pi.a.mul_vec(e2).ok()?;
        out.extend((0..n).map(|j| ae1[j] - xi[j] - lambda[j]));
        out.extend((0..n).map(|j| ae2[j] - xi[j] + lambda[j]));
        Some(out)
    };

    let sample = |t: f64, s: &[f64]| -> Option<BoundSample> {
        let x = s[..n].to_vec();
        let x_cpwl = s[n..2 * n].to_vec();
        let i = part.locate(&x)?;
        let k = part.locate(&x_cpwl)?;
        Some(BoundSample {
            t,
            xi: xi(&pieces[i], &pieces[k], &x_cpwl),
            x,
            x_cpwl,
            e1: s[2 * n..3 * n].to_vec(),
            e2: s[3 * n..].to_vec(),
            i,
            k,
        })
    };

    let mut state: Vec<f64> = x0.iter().chain(x0).copied().collect();
    state.extend(std::iter::repeat(0.0).take(2 * n));
    let mut samples = Vec::new();
    let Some(first) = sample(0.0, &state) else {
        return ErrorBoundRun {
            samples,
            truncated: true,
            step,
            lambda,
        };
    };
    samples.push(first);
    let steps = (opts.horizon / step).ceil() as usize;
    let h = opts.horizon / steps as f64;
    for m in 1..=steps {
        let t = m as f64 * h;
        let next = rk4_step(&joint, &state, h).and_then(|s| sample(t, &s).map(|smp| (s, smp)));
        match next {
            Some((s, smp)) => {
                state = s;
                samples.push(smp);
            }
            None => {
                return ErrorBoundRun {
                    samples,
                    truncated: true,
                    step: h,
                    lambda,
                }
            }
        }
    }
    ErrorBoundRun {
        samples,
        truncated: false,
        step: h,
        lambda,
    }
}

/// `ξ = (A⁽ᵏ⁾ − A⁽ⁱ⁾) x_cpwl + (B⁽ᵏ⁾ − B⁽ⁱ⁾)`.
pub fn xi(pi: &AffinePiece, pk: &AffinePiece, x_cpwl: &[f64]) -> Vec<f64> {
    if pi.simplex == pk.simplex {
        return vec![0.0; x_cpwl.len()];
    }
    let yk = pk.eval(x_cpwl);
    let yi = pi.eval(x_cpwl);
    yk.iter().zip(&yi).map(|(a, b)| a - b).collect()
}

/// `Ā = [[A⁽ⁱ⁾, A⁽ᵏ⁾ − A⁽ⁱ⁾], [0, A⁽ᵏ⁾]]`.
pub fn block_matrix(ai: &Matrix, ak: &Matrix) -> Matrix {
    let n = ai.rows();
    Matrix::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
        (true, true) => ai.get(r, c),
        (true, false) => ak.get(r, c - n) - ai.get(r, c - n),
        (false, true) => 0.0,
        (false, false) => ak.get(r - n, c - n),
    })
}

/// Largest distance between the spectrum of the block matrix and the union
/// of the spectra of its diagonal blocks, matched greedily as multisets.
pub fn block_spectrum_error(ai: &Matrix, ak: &Matrix) -> f64 {
    let Ok(block) = eig_general(&block_matrix(ai, ak)) else {
        return f64::INFINITY;
    };
    let (Ok(ei), Ok(ek)) = (eig_general(ai), eig_general(ak)) else {
        return f64::INFINITY;
    };
    let expected: Vec<Complex64> = ei.eigenvalues.into_iter().chain(ek.eigenvalues).collect();
    let mut unused = block.eigenvalues;
    let mut worst: f64 = 0.0;
    for z in expected {
        let (pos, d) = unused
            .iter()
            .enumerate()
            .map(|(p, w)| (p, (w - z).norm()))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        worst = worst.max(d);
        unused.swap_remove(pos);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpwl::{build_partition, fit_pieces};
    use crate::system::parse_system;

    #[test]
    fn linear_field_has_zero_error() {
        let vf = parse_system("dim = 2\nf1 = -x1\nf2 = -x2").unwrap();
        let part = build_partition(&[(-1.0, 1.0), (-1.0, 1.0)], &[4, 4]).unwrap();
        let pieces = fit_pieces(&vf, &part).unwrap();
        let run = integrate_error_bounds(
            &vf,
            &part,
            &pieces,
            &[0.6, -0.3],
            BoundOptions {
                horizon: 2.0,
                max_step: 1e-2,
            },
        );
        assert!(!run.truncated);
        for s in &run.samples {
            for j in 0..2 {
                assert!((s.x[j] - s.x_cpwl[j]).abs() < 1e-12);
            }
        }
        assert!(run.max_violation() <= 1e-12);
    }

    #[test]
    fn xi_vanishes_on_shared_simplex() {
        let vf = parse_system("dim = 2\nf1 = -x1 + x2^2\nf2 = -x2").unwrap();
        let part = build_partition(&[(-1.0, 1.0), (-1.0, 1.0)], &[2, 2]).unwrap();
        let pieces = fit_pieces(&vf, &part).unwrap();
        assert_eq!(xi(&pieces[3], &pieces[3], &[0.2, 0.1]), vec![0.0, 0.0]);
    }

    #[test]
    fn block_spectrum_is_union() {
        let ai = Matrix::from_rows(&[[-1.0, 2.0], [0.0, -3.0]]).unwrap();
        let ak = Matrix::from_rows(&[[-1.0, -1.0], [1.0, -1.0]]).unwrap();
        assert!(block_spectrum_error(&ai, &ak) < 1e-12);
    }

    #[test]
    fn truncates_on_exit() {
        let vf = parse_system("dim = 1\nf1 = x1").unwrap();
        let part = build_partition(&[(-1.0, 1.0)], &[4]).unwrap();
        let pieces = fit_pieces(&vf, &part).unwrap();
        let run = integrate_error_bounds(&vf, &part, &pieces, &[0.5], BoundOptions::default());
        assert!(run.truncated);
        assert!(run.samples.last().unwrap().t < 1.0);
    }
}
