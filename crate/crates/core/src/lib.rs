//! Domain-of-attraction certificates for autonomous nonlinear ODEs
//! `ẋ = f(x)` with `f(0) = 0`.
//!
//! A certificate picks a Hurwitz matrix `F`, solves `F'P + PF = -I` and
//! checks a Rayleigh-quotient condition `λ_R < 1` together with pointwise
//! bounds on the Jacobian. The set of points passing the test is a subset of
//! the basin of attraction of the origin.
//!
//! ```
//! use doa_cert::certificates::systematic_test;
//! use doa_cert::system::parse_system;
//!
//! let vf = parse_system("dim = 2\nf1 = -x1 + 2*x1^2*x2\nf2 = -x2").unwrap();
//! assert!(systematic_test(&vf, &[0.1, 0.1]).in_omega);
//! assert!(!systematic_test(&vf, &[2.0, 2.0]).in_omega);
//! ```

pub mod certificates;
pub mod cpwl;
pub mod fixtures;
pub mod matrix;
pub mod ode;
pub mod region;
pub mod system;

pub use certificates::{
    omega_membership, systematic_test, BoundMatrix, CertMode, CertificateParams, FailedCondition,
    PointVerdict,
};
pub use matrix::{solve_lyapunov, Matrix};
pub use region::{scan_region, Certificate, RegionEstimate};
pub use system::{parse_system, VectorField};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/systems.md")]
    mod systems {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/systematic.md")]
    mod systematic {}
    #[doc = include_str!("../../../book/src/cpwl.md")]
    mod cpwl {}
    #[doc = include_str!("../../../book/src/regions.md")]
    mod regions {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
