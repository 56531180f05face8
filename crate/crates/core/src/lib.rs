//! Biharmonic Steklov eigenvalues on thin tubular neighborhoods of smooth
//! planar curves.
//!
//! The solver pulls the fourth-order Steklov problem on the inner tube of
//! width `eps` back to the fixed reference strip `(0, L) x (0, 1)` in Fermi
//! coordinates, discretizes it with a Fourier (tangential) x cubic-Hermite
//! (normal) Galerkin basis, and compresses the shifted stiffness inverse onto
//! the boundary trace space, where the rescaled eigenvalues
//! `theta_k(eps) = lambda_{eps,k} / eps` pop out of a small dense symmetric
//! eigenproblem. A periodic fourth-order ODE solver provides the limit
//! eigenvalues `lambda_k` that `theta_k(eps)` approaches as the tube
//! collapses onto the curve, and the sweep harness quantifies that
//! convergence.
//!
//! Modules:
//! - [`curve`]: closed planar curves in arclength form (perimeter, curvature)
//! - [`limit1d`]: the periodic limit eigenproblem and its resolvent
//! - [`fermiform`]: the 2D quadratic form on the reference strip
//! - [`spectra`]: dense Cholesky / symmetric eigensolver / boundary reduction
//! - [`convergence`]: eps-sweeps, rate fits, eigenfunction diagnostics
//! - [`selftest`]: the built-in verification suite used by `selftest`

pub mod convergence;
pub mod curve;
pub mod fermiform;
pub mod fourier;
pub mod limit1d;
pub mod selftest;
pub mod spectra;

pub use convergence::{run_sweep, thin_spectrum, SweepConfig, SweepReport};
pub use curve::{build_arclength_curve, ArclengthCurve, CurveSpec};
pub use fermiform::{assemble_thin_form, build_basis, TensorBasis, ThinProblemSpec};
pub use limit1d::{assemble_limit, limit_resolve, limit_spectrum, LimitOperator, Spectrum};

/// Any error produced by the toolkit, grouped by subsystem.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Curve(#[from] curve::CurveError),
    #[error(transparent)]
    Limit(#[from] limit1d::LimitError),
    #[error(transparent)]
    Form(#[from] fermiform::FormError),
    #[error(transparent)]
    Spectra(#[from] spectra::SpectraError),
    #[error(transparent)]
    Convergence(#[from] convergence::ConvergenceError),
}

pub type Result<T> = std::result::Result<T, Error>;
