//! Decision procedures built on a Hurwitz matrix `F`, its Lyapunov solution
//! `P` (`F'P + PF = -I`) and the bound matrices `λ̄*`, `λ̃*`.
//!
//! The central quantity is the Rayleigh matrix
//! `R = |P|(λ̄* + λ̃*) + (λ̄* + λ̃*)'|P|`; a certificate requires its largest
//! eigenvalue `λ_R` to be below one.

use std::fmt;

use thiserror::Error;

use crate::matrix::{
    abs_entrywise, eig_general, eig_symmetric_max, solve_lyapunov, LinalgError, Matrix,
    HURWITZ_EPS,
};
use crate::system::VectorField;

/// `λ_R < 1` is decided as `λ_R ≤ 1 - RAYLEIGH_MARGIN`.
pub const RAYLEIGH_MARGIN: f64 = 1e-9;

pub fn rayleigh_ok(lambda_r: f64) -> bool {
    lambda_r <= 1.0 - RAYLEIGH_MARGIN
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertError {
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parameters are not globally certified (lambda_R = {lambda_r})")]
    NotCertified { lambda_r: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One entry of a bound matrix. `Unbounded` stands for an entry sent to
/// `+∞`: it never constrains a comparison, is skipped by row minima and
/// contributes nothing to `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn allows(self, v: f64) -> bool {
        match self {
            Bound::Finite(b) => v <= b,
            Bound::Unbounded => true,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(b) => Some(b),
            Bound::Unbounded => None,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Finite(v) => write!(f, "{v}"),
            Bound::Unbounded => f.write_str("inf"),
        }
    }
}

/// Square matrix of nonnegative [`Bound`] entries.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundMatrix {
    n: usize,
    entries: Vec<Bound>,
}

impl BoundMatrix {
    /// Rows of reals; `f64::INFINITY` marks an unbounded entry. Negative or
    /// NaN entries are rejected.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, CertError> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n {
                return Err(CertError::InvalidParams("bound matrix must be square".into()));
            }
            for &v in r {
                if v.is_nan() || v < 0.0 {
                    return Err(CertError::InvalidParams(format!(
                        "bound entries must be nonnegative, got {v}"
                    )));
                }
                entries.push(if v == f64::INFINITY {
                    Bound::Unbounded
                } else {
                    Bound::Finite(v)
                });
            }
        }
        Ok(Self { n, entries })
    }

    pub fn from_matrix(m: &Matrix) -> Result<Self, CertError> {
        Self::from_rows(&m.to_rows())
    }

    /// Every entry equal to `v`.
    pub fn constant(n: usize, v: f64) -> Self {
        Self {
            n,
            entries: vec![Bound::Finite(v); n * n],
        }
    }

    /// `diag` on the diagonal, unbounded elsewhere.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let entries = (0..n * n)
            .map(|idx| {
                if idx / n == idx % n {
                    Bound::Finite(diag[idx / n])
                } else {
                    Bound::Unbounded
                }
            })
            .collect();
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Bound {
        self.entries[i * self.n + j]
    }

    /// Smallest finite entry of row `i` (`None` if the whole row is unbounded).
    pub fn row_min(&self, i: usize) -> Option<f64> {
        (0..self.n)
            .filter_map(|j| self.get(i, j).finite())
            .reduce(f64::min)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|b| match b {
                    Bound::Finite(v) => Bound::Finite(v * c),
                    Bound::Unbounded => Bound::Unbounded,
                })
                .collect(),
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(Bound, Bound) -> Bound) -> Self {
        Self {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Entrywise sum; unbounded if either side is.
    pub fn sum(&self, other: &Self) -> Self {
        self.zip(other, |a, b| match (a, b) {
            (Bound::Finite(x), Bound::Finite(y)) => Bound::Finite(x + y),
            _ => Bound::Unbounded,
        })
    }

    /// Entrywise `self - other`; unbounded whenever `self` is unbounded.
    pub fn difference(&self, other: &Self) -> Self {
        self.zip(other, |a, b| match (a, b) {
            (Bound::Finite(x), Bound::Finite(y)) => Bound::Finite(x - y),
            (Bound::Unbounded, _) => Bound::Unbounded,
            (Bound::Finite(_), Bound::Unbounded) => Bound::Finite(f64::NEG_INFINITY),
        })
    }

    /// Finite part as a matrix; unbounded entries become zero.
    pub fn finite_part(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j).finite().unwrap_or(0.0))
    }

    /// One row per line, comma separated, `inf` for unbounded.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `½(M + M')` with `M = |P|(λ̄* + λ̃*) + (λ̄* + λ̃*)'|P|`; unbounded entries
/// of the sum contribute zero.
pub fn rayleigh_matrix(p: &Matrix, lambda_bar: &BoundMatrix, lambda_tilde: &BoundMatrix) -> Matrix {
    let s = lambda_bar.sum(lambda_tilde).finite_part();
    let ap = abs_entrywise(p);
    let m = ap
        .matmul(&s)
        .and_then(|l| l.add(&s.transpose().matmul(&ap)?))
        .expect("shapes agree");
    m.symmetric_part().expect("square")
}

/// Largest eigenvalue of [`rayleigh_matrix`].
pub fn rayleigh_lambda(
    p: &Matrix,
    lambda_bar: &BoundMatrix,
    lambda_tilde: &BoundMatrix,
) -> Result<f64, CertError> {
    Ok(eig_symmetric_max(&rayleigh_matrix(p, lambda_bar, lambda_tilde))?)
}

fn check_shapes(f: &Matrix, lb: &BoundMatrix, lt: &BoundMatrix) -> Result<(), CertError> {
    if !f.is_square() || lb.dim() != f.rows() || lt.dim() != f.rows() {
        return Err(CertError::InvalidParams("F, λ̄* and λ̃* must share one square shape".into()));
    }
    Ok(())
}

fn hurwitz_lyapunov(f: &Matrix) -> Result<Matrix, CertError> {
    match solve_lyapunov(f) {
        Ok(p) => Ok(p),
        Err(LinalgError::NotHurwitz { max_real_part }) => Err(CertError::NotApplicable(format!(
            "F is not Hurwitz (max real part of its eigenvalues is {max_real_part})"
        ))),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaFailure {
    /// `|-F_jk + A_jk + B_j| ≤ λ̄*_jk` violated.
    SlopeBound,
    /// `|B_j| ≤ min_k λ̃*_jk` violated.
    OffsetBound,
    /// `λ_R ≥ 1`.
    Rayleigh,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LemmaVerdict {
    Certified { p: Matrix, lambda_r: f64 },
    NotCertified { reason: LemmaFailure, lambda_r: Option<f64> },
}

impl LemmaVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, LemmaVerdict::Certified { .. })
    }
}

/// Sufficient test for `x'Ax < 0` on the affine system `ẋ = Ax + B`.
///
/// Errors with [`CertError::NotApplicable`] when `F` is not Hurwitz.
pub fn lemma1_test(
    f: &Matrix,
    a: &Matrix,
    b: &[f64],
    lambda_bar: &BoundMatrix,
    lambda_tilde: &BoundMatrix,
) -> Result<LemmaVerdict, CertError> {
    check_shapes(f, lambda_bar, lambda_tilde)?;
    let n = f.rows();
    if a.rows() != n || a.cols() != n || b.len() != n {
        return Err(CertError::InvalidParams("A and B must match F".into()));
    }
    let p = hurwitz_lyapunov(f)?;
    for j in 0..n {
        for k in 0..n {
            if !lambda_bar.get(j, k).allows((-f.get(j, k) + a.get(j, k) + b[j]).abs()) {
                return Ok(LemmaVerdict::NotCertified {
                    reason: LemmaFailure::SlopeBound,
                    lambda_r: None,
                });
            }
        }
        if let Some(m) = lambda_tilde.row_min(j) {
            if b[j].abs() > m {
                return Ok(LemmaVerdict::NotCertified {
                    reason: LemmaFailure::OffsetBound,
                    lambda_r: None,
                });
            }
        }
    }
    let lambda_r = rayleigh_lambda(&p, lambda_bar, lambda_tilde)?;
    if rayleigh_ok(lambda_r) {
        Ok(LemmaVerdict::Certified { p, lambda_r })
    } else {
        Ok(LemmaVerdict::NotCertified {
            reason: LemmaFailure::Rayleigh,
            lambda_r: Some(lambda_r),
        })
    }
}

/// The quadratic form `V(x) = x'Px` of a certified lemma instance.
pub fn corollary1_lyapunov(
    f: &Matrix,
    a: &Matrix,
    b: &[f64],
    lambda_bar: &BoundMatrix,
    lambda_tilde: &BoundMatrix,
) -> Result<Matrix, CertError> {
    match lemma1_test(f, a, b, lambda_bar, lambda_tilde)? {
        LemmaVerdict::Certified { p, .. } => Ok(p),
        LemmaVerdict::NotCertified { reason, .. } => Err(CertError::NotApplicable(format!(
            "lemma conditions fail ({reason:?})"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CertMode {
    /// `F` supplied by the user.
    FixedF,
    /// `F = ∂f/∂x(0)`.
    JacobianOrigin,
    /// `F = ∂f/∂x(x)` at every point (the systematic test).
    JacobianPointwise,
}

impl fmt::Display for CertMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertMode::FixedF => "fixed",
            CertMode::JacobianOrigin => "origin",
            CertMode::JacobianPointwise => "pointwise",
        })
    }
}

/// `(F, λ̄*, λ̃*)` together with `P` and the global `λ_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateParams {
    pub f: Matrix,
    pub lambda_bar: BoundMatrix,
    pub lambda_tilde: BoundMatrix,
    pub p: Matrix,
    pub lambda_r: f64,
    pub mode: CertMode,
}

impl CertificateParams {
    /// Validates `λ̄* ≥ λ̃*`, solves `F'P + PF = -I` and computes `λ_R`.
    pub fn new(
        f: Matrix,
        lambda_bar: BoundMatrix,
        lambda_tilde: BoundMatrix,
        mode: CertMode,
    ) -> Result<Self, CertError> {
        check_shapes(&f, &lambda_bar, &lambda_tilde)?;
        if mode == CertMode::JacobianPointwise {
            return Err(CertError::InvalidParams(
                "pointwise mode has no fixed F; use systematic_test".into(),
            ));
        }
        let n = f.rows();
        for i in 0..n {
            for j in 0..n {
                let ok = match (lambda_bar.get(i, j), lambda_tilde.get(i, j)) {
                    (Bound::Unbounded, _) => true,
                    (Bound::Finite(_), Bound::Unbounded) => false,
                    (Bound::Finite(b), Bound::Finite(t)) => b >= t,
                };
                if !ok {
                    return Err(CertError::InvalidParams(format!(
                        "λ̄*[{}][{}] must be at least λ̃*[{}][{}]",
                        i + 1,
                        j + 1,
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let p = hurwitz_lyapunov(&f)?;
        let lambda_r = rayleigh_lambda(&p, &lambda_bar, &lambda_tilde)?;
        Ok(Self {
            f,
            lambda_bar,
            lambda_tilde,
            p,
            lambda_r,
            mode,
        })
    }

    /// Uses `F = ∂f/∂x(0)`.
    pub fn at_origin(
        vf: &VectorField,
        lambda_bar: BoundMatrix,
        lambda_tilde: BoundMatrix,
    ) -> Result<Self, CertError> {
        let f = vf
            .jacobian(&vec![0.0; vf.dim()])
            .map_err(|e| CertError::NotApplicable(format!("Jacobian at the origin: {e}")))?;
        Self::new(f, lambda_bar, lambda_tilde, CertMode::JacobianOrigin)
    }

    pub fn globally_certified(&self) -> bool {
        rayleigh_ok(self.lambda_r)
    }

    /// `λ̄* - λ̃*`.
    pub fn slack(&self) -> BoundMatrix {
        self.lambda_bar.difference(&self.lambda_tilde)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailedCondition {
    None,
    /// `|(J x)_j| ≤ min_k λ̃*_jk` violated.
    JacXBound,
    /// `|J - F| ≤ λ̄* - λ̃*` violated.
    JacFBound,
    /// `λ_R ≥ 1`.
    Rayleigh,
    /// The matrix the Lyapunov equation is solved for is not Hurwitz.
    Hurwitz,
    /// `f` or its Jacobian cannot be evaluated at the point.
    DomainError,
}

impl fmt::Display for FailedCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailedCondition::None => "none",
            FailedCondition::JacXBound => "jac_x_bound",
            FailedCondition::JacFBound => "jac_F_bound",
            FailedCondition::Rayleigh => "rayleigh",
            FailedCondition::Hurwitz => "hurwitz",
            FailedCondition::DomainError => "domain_error",
        })
    }
}

impl std::str::FromStr for FailedCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "none" => FailedCondition::None,
            "jac_x_bound" => FailedCondition::JacXBound,
            "jac_F_bound" => FailedCondition::JacFBound,
            "rayleigh" => FailedCondition::Rayleigh,
            "hurwitz" => FailedCondition::Hurwitz,
            "domain_error" => FailedCondition::DomainError,
            other => return Err(format!("unknown condition '{other}'")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointVerdict {
    pub x: Vec<f64>,
    pub in_omega: bool,
    /// `λ_R` used for the decision; NaN when it could not be computed.
    pub lambda_r: f64,
    pub hurwitz_ok: bool,
    pub failed_condition: FailedCondition,
}

impl PointVerdict {
    fn fail(x: &[f64], lambda_r: f64, hurwitz_ok: bool, failed: FailedCondition) -> Self {
        Self {
            x: x.to_vec(),
            in_omega: false,
            lambda_r,
            hurwitz_ok,
            failed_condition: failed,
        }
    }

    /// True when the two pointwise conditions hold, whatever the global
    /// Rayleigh test says.
    pub fn local_conditions_hold(&self) -> bool {
        matches!(
            self.failed_condition,
            FailedCondition::None | FailedCondition::Rayleigh
        )
    }
}

fn jac_times_x(j: &Matrix, x: &[f64]) -> Vec<f64> {
    j.mul_vec(x).expect("dimension checked")
}

/// Membership of `x` in the set `Ω` defined by `params`.
///
/// Checks, in order, `|(J x)_j| ≤ min_k λ̃*_jk`, `|J − F| ≤ λ̄* − λ̃*` and the
/// global `λ_R < 1`. `hurwitz_ok` reports on `F`, which is Hurwitz by
/// construction.
pub fn omega_membership(vf: &VectorField, params: &CertificateParams, x: &[f64]) -> PointVerdict {
    let lambda_r = params.lambda_r;
    let Ok(j) = vf.jacobian(x) else {
        return PointVerdict::fail(x, lambda_r, true, FailedCondition::DomainError);
    };
    let jx = jac_times_x(&j, x);
    for (row, v) in jx.iter().enumerate() {
        if let Some(m) = params.lambda_tilde.row_min(row) {
            if v.abs() > m {
                return PointVerdict::fail(x, lambda_r, true, FailedCondition::JacXBound);
            }
        }
    }
    let slack = params.slack();
    let n = vf.dim();
    for r in 0..n {
        for c in 0..n {
            if !slack.get(r, c).allows((j.get(r, c) - params.f.get(r, c)).abs()) {
                return PointVerdict::fail(x, lambda_r, true, FailedCondition::JacFBound);
            }
        }
    }
    if !rayleigh_ok(lambda_r) {
        return PointVerdict::fail(x, lambda_r, true, FailedCondition::Rayleigh);
    }
    PointVerdict {
        x: x.to_vec(),
        in_omega: true,
        lambda_r,
        hurwitz_ok: true,
        failed_condition: FailedCondition::None,
    }
}

/// `w = |P| |J x|` for the systematic test.
pub fn systematic_weights(p: &Matrix, j: &Matrix, x: &[f64]) -> Vec<f64> {
    let jx: Vec<f64> = jac_times_x(j, x).iter().map(|v| v.abs()).collect();
    abs_entrywise(p).mul_vec(&jx).expect("dimension checked")
}

/// `R = 2(H + H')` with `H = w 𝟙'`.
pub fn systematic_matrix(w: &[f64]) -> Matrix {
    let n = w.len();
    Matrix::from_fn(n, n, |i, j| 2.0 * (w[i] + w[j]))
}

/// Closed form of the largest eigenvalue of [`systematic_matrix`] for `w ≥ 0`:
/// `2(Σw + √n ‖w‖)`.
pub fn systematic_lambda_closed_form(w: &[f64]) -> f64 {
    let sum: f64 = w.iter().sum();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    2.0 * (sum + (w.len() as f64).sqrt() * norm)
}

/// Pointwise test with `F = ∂f/∂x(x)`.
pub fn systematic_test(vf: &VectorField, x: &[f64]) -> PointVerdict {
    let Ok(j) = vf.jacobian(x) else {
        return PointVerdict::fail(x, f64::NAN, false, FailedCondition::DomainError);
    };
    let hurwitz = eig_general(&j).map(|e| e.max_real_part < -HURWITZ_EPS).unwrap_or(false);
    if !hurwitz {
        return PointVerdict::fail(x, f64::NAN, false, FailedCondition::Hurwitz);
    }
    let Ok(p) = solve_lyapunov(&j) else {
        return PointVerdict::fail(x, f64::NAN, false, FailedCondition::Hurwitz);
    };
    let w = systematic_weights(&p, &j, x);
    let lambda_r = eig_symmetric_max(&systematic_matrix(&w)).unwrap_or(f64::NAN);
    if rayleigh_ok(lambda_r) {
        PointVerdict {
            x: x.to_vec(),
            in_omega: true,
            lambda_r,
            hurwitz_ok: true,
            failed_condition: FailedCondition::None,
        }
    } else {
        PointVerdict::fail(x, lambda_r, true, FailedCondition::Rayleigh)
    }
}

/// Points satisfying `|(J x)_j| ≤ min_k λ̃*_jk`, with `V(x) = x'Px`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySet {
    pub members: Vec<bool>,
    pub p: Matrix,
}

/// Restricts `points` to the asymptotic-stability set of certified params.
pub fn asymptotic_stability_set(
    vf: &VectorField,
    params: &CertificateParams,
    points: &[Vec<f64>],
) -> Result<StabilitySet, CertError> {
    if !params.globally_certified() {
        return Err(CertError::NotCertified {
            lambda_r: params.lambda_r,
        });
    }
    let members = points
        .iter()
        .map(|x| {
            let Ok(j) = vf.jacobian(x) else {
                return false;
            };
            jac_times_x(&j, x).iter().enumerate().all(|(row, v)| {
                params.lambda_tilde.row_min(row).map_or(true, |m| v.abs() <= m)
            })
        })
        .collect();
    Ok(StabilitySet {
        members,
        p: params.p.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::parse_system;

    fn neg_identity() -> Matrix {
        Matrix::identity(2).scale(-1.0)
    }

    #[test]
    fn lemma_identity_case() {
        let l = BoundMatrix::constant(2, 0.1);
        let v = lemma1_test(&neg_identity(), &neg_identity(), &[0.0, 0.0], &l, &l).unwrap();
        match v {
            LemmaVerdict::Certified { p, lambda_r } => {
                assert!((lambda_r - 0.4).abs() < 1e-12);
                assert!(p.max_abs_diff(&Matrix::identity(2).scale(0.5)).unwrap() < 1e-14);
            }
            other => panic!("{other:?}"),
        }
        let big = l.scale(10.0);
        let v = lemma1_test(&neg_identity(), &neg_identity(), &[0.0, 0.0], &big, &big).unwrap();
        match v {
            LemmaVerdict::NotCertified {
                reason: LemmaFailure::Rayleigh,
                lambda_r: Some(r),
            } => assert!((r - 4.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lemma_rejects_non_hurwitz_f() {
        let f = Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
        let l = BoundMatrix::constant(2, 0.1);
        assert!(matches!(
            lemma1_test(&f, &f, &[0.0, 0.0], &l, &l),
            Err(CertError::NotApplicable(_))
        ));
    }

    #[test]
    fn lemma_condition_order() {
        let l = BoundMatrix::constant(2, 0.1);
        let a = Matrix::from_rows(&[[-1.0, 0.5], [0.0, -1.0]]).unwrap();
        assert!(matches!(
            lemma1_test(&neg_identity(), &a, &[0.0, 0.0], &l, &l).unwrap(),
            LemmaVerdict::NotCertified {
                reason: LemmaFailure::SlopeBound,
                ..
            }
        ));
        let lb = BoundMatrix::constant(2, 0.3);
        let lt = BoundMatrix::constant(2, 0.05);
        assert!(matches!(
            lemma1_test(&neg_identity(), &neg_identity(), &[0.1, 0.0], &lb, &lt).unwrap(),
            LemmaVerdict::NotCertified {
                reason: LemmaFailure::OffsetBound,
                ..
            }
        ));
    }

    #[test]
    fn corollary_returns_p() {
        let l = BoundMatrix::constant(2, 0.1);
        let p = corollary1_lyapunov(&neg_identity(), &neg_identity(), &[0.0, 0.0], &l, &l).unwrap();
        let q = p.matmul(&neg_identity()).unwrap();
        let q = q.add(&q.transpose()).unwrap();
        for x in [[1.0, 0.0], [0.3, -2.0], [-1.0, 1.0]] {
            let qx = q.mul_vec(&x).unwrap();
            let v: f64 = x.iter().zip(&qx).map(|(a, b)| a * b).sum();
            let n2: f64 = x.iter().map(|a| a * a).sum();
            assert!((v + n2).abs() < 1e-12);
        }
        let big = l.scale(10.0);
        assert!(corollary1_lyapunov(&neg_identity(), &neg_identity(), &[0.0, 0.0], &big, &big).is_err());
    }

    #[test]
    fn params_validate_ordering() {
        let lb = BoundMatrix::constant(2, 0.1);
        let lt = BoundMatrix::constant(2, 0.2);
        assert!(matches!(
            CertificateParams::new(neg_identity(), lb, lt, CertMode::FixedF),
            Err(CertError::InvalidParams(_))
        ));
        let lb = BoundMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let lt = BoundMatrix::diagonal(&[0.5, 0.5]);
        assert!(CertificateParams::new(neg_identity(), lb, lt, CertMode::FixedF).is_err());
    }

    #[test]
    fn unbounded_entries_drop_out_of_r() {
        let lb = BoundMatrix::diagonal(&[1.0 / 3.0, 1.0 / 3.0]);
        let lt = BoundMatrix::diagonal(&[1.0 / 6.0, 1.0 / 6.0]);
        let f = Matrix::from_rows(&[[-1.0, -1.0], [1.0, -1.0]]).unwrap();
        let params = CertificateParams::new(f, lb, lt, CertMode::FixedF).unwrap();
        assert!((params.lambda_r - 0.5).abs() < 1e-12);
        assert_eq!(params.lambda_tilde.row_min(0), Some(1.0 / 6.0));
    }

    #[test]
    fn systematic_at_origin() {
        let vf = parse_system("dim = 2\nparam mu = -1\nf1 = x2\nf2 = -x1 + mu*x2*(1 - x1^2)").unwrap();
        let v = systematic_test(&vf, &[0.0, 0.0]);
        assert!(v.in_omega);
        assert_eq!(v.lambda_r, 0.0);
        let far = systematic_test(&vf, &[3.0, 0.0]);
        assert!(!far.in_omega);
    }

    #[test]
    fn systematic_closed_form() {
        let w = [0.3, 1.2];
        let r = systematic_matrix(&w);
        let lr = eig_symmetric_max(&r).unwrap();
        assert!((lr - systematic_lambda_closed_form(&w)).abs() < 1e-12);
    }

    #[test]
    fn systematic_reports_non_hurwitz() {
        let vf = parse_system("dim = 2\nf1 = x2\nf2 = -x1").unwrap();
        let v = systematic_test(&vf, &[0.1, 0.1]);
        assert!(!v.hurwitz_ok);
        assert_eq!(v.failed_condition, FailedCondition::Hurwitz);
    }

    #[test]
    fn membership_with_f_at_origin() {
        let vf = parse_system("dim = 2\nf1 = -x1 + 2*x1^2*x2\nf2 = -x2").unwrap();
        let lb = BoundMatrix::diagonal(&[0.4, 0.4]);
        let lt = BoundMatrix::diagonal(&[0.2, 0.2]);
        let params = CertificateParams::at_origin(&vf, lb, lt).unwrap();
        assert!(params.globally_certified());
        assert!(omega_membership(&vf, &params, &[0.0, 0.0]).in_omega);
        let v = omega_membership(&vf, &params, &[0.5, 0.0]);
        assert_eq!(v.failed_condition, FailedCondition::JacXBound);
        let set = asymptotic_stability_set(&vf, &params, &[vec![0.0, 0.0], vec![0.5, 0.0]]).unwrap();
        assert_eq!(set.members, vec![true, false]);
    }

    #[test]
    fn condition_names_round_trip() {
        for c in [
            FailedCondition::None,
            FailedCondition::JacXBound,
            FailedCondition::JacFBound,
            FailedCondition::Rayleigh,
            FailedCondition::Hurwitz,
            FailedCondition::DomainError,
        ] {
            assert_eq!(c.to_string().parse::<FailedCondition>().unwrap(), c);
        }
    }
}
