//! Autonomous vector fields `ẋ = f(x)` read from a small text format:
//!
//! ```text
//! dim = 2
//! param mu = -1.0
//! f1 = x2
//! f2 = -x1 + mu * x2 * (1 - x1^2)
//! ```
//!
//! The Jacobian is built symbolically when the document is loaded.

mod expr;
mod parser;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matrix::Matrix;
pub use expr::{BinaryOp, EvalError, Expr, UnaryOp};
pub use parser::parse_expr;

/// Largest `|f(0)|` accepted at load time.
pub const EQUILIBRIUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unknown identifier '{name}' at line {line}, column {col}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("missing 'dim = <n>' declaration")]
    MissingDimension,
    #[error("declared dim = {declared} but found {found} components")]
    DimensionMismatch { declared: usize, found: usize },
    #[error("origin is not an equilibrium: f{component}(0) = {value}")]
    Equilibrium { component: usize, value: f64 },
    #[error("f{component}(0) cannot be evaluated: {source}")]
    OriginDomain { component: usize, source: EvalError },
    #[error("point has dimension {got}, field has dimension {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("evaluation failed in component {component}: {source}")]
    Domain { component: usize, source: EvalError },
}

/// A parsed vector field with its symbolic Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    dim: usize,
    components: Vec<Expr>,
    params: BTreeMap<String, f64>,
    jacobian: Vec<Vec<Expr>>,
}

/// Parses a system document and builds its Jacobian.
pub fn parse_system(text: &str) -> Result<VectorField, SystemError> {
    parse_system_with(text, &[])
}

/// Like [`parse_system`] but overrides the declared value of some parameters.
pub fn parse_system_with(
    text: &str,
    overrides: &[(&str, f64)],
) -> Result<VectorField, SystemError> {
    let doc = parser::parse_document(text, overrides)?;
    debug_assert_eq!(doc.components.len(), doc.dim);
    VectorField::from_components(doc.components, doc.params)
}

impl VectorField {
    /// Builds a field from expressions; checks `f(0) = 0`.
    pub fn from_components(
        components: Vec<Expr>,
        params: BTreeMap<String, f64>,
    ) -> Result<Self, SystemError> {
        let dim = components.len();
        if let Some(max) = components.iter().filter_map(Expr::max_var).max() {
            if max >= dim {
                return Err(SystemError::DimensionMismatch {
                    declared: dim,
                    found: max + 1,
                });
            }
        }
        let zero = vec![0.0; dim];
        for (k, c) in components.iter().enumerate() {
            let value = c.eval(&zero).map_err(|source| SystemError::OriginDomain {
                component: k + 1,
                source,
            })?;
            if value.abs() > EQUILIBRIUM_TOL {
                return Err(SystemError::Equilibrium {
                    component: k + 1,
                    value,
                });
            }
        }
        let jacobian = components
            .iter()
            .map(|c| (0..dim).map(|k| c.derivative(k)).collect())
            .collect();
        Ok(Self {
            dim,
            components,
            params,
            jacobian,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Symbolic Jacobian entry `∂f_i/∂x_j` (zero-based).
    pub fn jacobian_expr(&self, i: usize, j: usize) -> &Expr {
        &self.jacobian[i][j]
    }

    fn check_point(&self, x: &[f64]) -> Result<(), SystemError> {
        if x.len() != self.dim {
            return Err(SystemError::PointDimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `f(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, SystemError> {
        self.check_point(x)?;
        self.components
            .iter()
            .enumerate()
            .map(|(k, c)| {
                c.eval(x).map_err(|source| SystemError::Domain {
                    component: k + 1,
                    source,
                })
            })
            .collect()
    }

    /// `∂f/∂x` at `x`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Matrix, SystemError> {
        self.check_point(x)?;
        let n = self.dim;
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in self.jacobian.iter().enumerate() {
            for e in row {
                data.push(e.eval(x).map_err(|source| SystemError::Domain {
                    component: i + 1,
                    source,
                })?);
            }
        }
        Ok(Matrix::new(n, n, data).expect("evaluation yields finite entries"))
    }

    /// Central finite-difference Jacobian with step `1e-6 * (1 + |x_j|)`.
    pub fn jacobian_fd(&self, x: &[f64]) -> Result<Matrix, SystemError> {
        self.check_point(x)?;
        let n = self.dim;
        let mut m = Matrix::zeros(n, n);
        let mut xp = x.to_vec();
        for j in 0..n {
            let h = 1e-6 * (1.0 + x[j].abs());
            xp[j] = x[j] + h;
            let fp = self.eval(&xp)?;
            xp[j] = x[j] - h;
            let fm = self.eval(&xp)?;
            xp[j] = x[j];
            for i in 0..n {
                m[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(m)
    }

    /// Largest relative discrepancy `|J - J_fd| / max(1, |J|)` over `samples`
    /// uniform points of the box. Points where either evaluation fails are
    /// skipped.
    pub fn jacobian_check(&self, bounds: &[(f64, f64)], samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
            let (Ok(j), Ok(fd)) = (self.jacobian(&x), self.jacobian_fd(&x)) else {
                continue;
            };
            for (a, b) in j.as_slice().iter().zip(fd.as_slice()) {
                worst = worst.max((a - b).abs() / a.abs().max(1.0));
            }
        }
        worst
    }
}

impl std::fmt::Display for VectorField {
    /// Prints the field back in the document format.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "dim = {}", self.dim)?;
        for (name, value) in &self.params {
            writeln!(f, "param {name} = {value}")?;
        }
        for (k, c) in self.components.iter().enumerate() {
            writeln!(f, "f{} = {c}", k + 1)?;
        }
        Ok(())
    }
}

/// `f(x)` for a parsed field.
pub fn eval_field(vf: &VectorField, x: &[f64]) -> Result<Vec<f64>, SystemError> {
    vf.eval(x)
}

/// `∂f/∂x` at `x` for a parsed field.
pub fn eval_jacobian(vf: &VectorField, x: &[f64]) -> Result<Matrix, SystemError> {
    vf.jacobian(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    const VDP: &str = "dim = 2\nparam mu = -1.0\nf1 = x2\nf2 = -x1 + mu * x2 * (1 - x1^2)\n";
    const EX1: &str = "dim = 2\nf1 = -x1 + 2*x1^2*x2\nf2 = -x2\n";

    #[test]
    fn van_der_pol() {
        let vf = parse_system(VDP).unwrap();
        assert_eq!(vf.eval(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let j = vf.jacobian(&[0.0, 0.0]).unwrap();
        assert_eq!(j, Matrix::from_rows(&[[0.0, 1.0], [-1.0, -1.0]]).unwrap());
    }

    #[test]
    fn example_one_jacobian() {
        let vf = parse_system(EX1).unwrap();
        assert_eq!(vf.eval(&[1.0, 1.0]).unwrap(), vec![1.0, -1.0]);
        assert_eq!(vf.jacobian(&[0.0, 0.0]).unwrap(), Matrix::identity(2).scale(-1.0));
        let (a, b) = (0.7, -0.3);
        let j = vf.jacobian(&[a, b]).unwrap();
        let want =
            Matrix::from_rows(&[[-1.0 + 4.0 * a * b, 2.0 * a * a], [0.0, -1.0]]).unwrap();
        assert!(j.max_abs_diff(&want).unwrap() < 1e-14);
    }

    #[test]
    fn scalar_linear() {
        let vf = parse_system("dim = 1\nf1 = -x1").unwrap();
        assert_eq!(vf.jacobian(&[3.0]).unwrap().get(0, 0), -1.0);
        assert_eq!(vf.jacobian_expr(0, 0), &Expr::Const(-1.0));
    }

    #[test]
    fn hopf() {
        let text = "dim = 2\nparam alpha = -1\n\
                    f1 = alpha*x1 - x2 + x1*(x1^2 + x2^2)\n\
                    f2 = x1 + alpha*x2 + x2*(x1^2 + x2^2)\n";
        let vf = parse_system(text).unwrap();
        assert_eq!(vf.eval(&[1.0, 0.0]).unwrap(), vec![0.0, 1.0]);
        let j = vf.jacobian(&[0.0, 0.0]).unwrap();
        assert_eq!(j, Matrix::from_rows(&[[-1.0, -1.0], [1.0, -1.0]]).unwrap());
    }

    #[test]
    fn rejects_shifted_equilibrium() {
        assert!(matches!(
            parse_system("dim = 1\nf1 = 1 - x1"),
            Err(SystemError::Equilibrium { component: 1, .. })
        ));
    }

    #[test]
    fn domain_errors_propagate() {
        let vf = parse_system("dim = 1\nf1 = x1 / (x1 - 1)").unwrap();
        assert!(matches!(
            vf.eval(&[1.0]),
            Err(SystemError::Domain {
                component: 1,
                source: EvalError::DivisionByZero
            })
        ));
        assert!(matches!(vf.eval(&[1.0, 2.0]), Err(SystemError::PointDimension { .. })));
    }

    #[test]
    fn display_round_trips() {
        let vf = parse_system(VDP).unwrap();
        assert_eq!(parse_system(&vf.to_string()).unwrap(), vf);
    }

    #[test]
    fn symbolic_matches_finite_differences() {
        let vf = parse_system(VDP).unwrap();
        assert!(vf.jacobian_check(&[(-2.0, 2.0), (-2.0, 2.0)], 20, 7) < 1e-5);
    }
}
