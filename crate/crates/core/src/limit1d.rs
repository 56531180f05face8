//! The periodic fourth-order limit eigenproblem on the boundary curve and
//! its resolvent, discretized by Fourier-Galerkin in arclength.
//!
//! In weak form the operator pairs `u'' phi''` against `2 kappa^2 u' phi'`
//! with the mass pairing `mass_factor * u phi`; eigenvalues of the pencil
//! are the limit values `lambda_k` that the rescaled thin-problem
//! eigenvalues approach. The variable-thickness variant weights the
//! derivative pairings by a positive profile `g` and defaults to a unit
//! mass factor.

use nalgebra::{DMatrix, DVector};

use crate::curve::ArclengthCurve;
use crate::fourier::{RealFourierBasis, TrigSeries};
use crate::spectra::{cholesky, sym_eigen, SpectraError};

/// Quadrature oversampling relative to the basis dimension.
const QUAD_FACTOR: usize = 4;

/// Relative tolerance for grouping eigenvalues into multiplicity clusters.
pub fn cluster_tol(lambda: f64) -> f64 {
    1e-7 * (1.0 + lambda.abs())
}

#[derive(Debug, thiserror::Error)]
pub enum LimitError {
    #[error("thickness profile must be strictly positive (min {min:.3e})")]
    ProfileNotPositive { min: f64 },
    #[error("operator is singular for shift b = {b}; a positive shift is required")]
    SingularOperator { b: f64 },
    #[error("invalid limit-problem parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// Assembled Galerkin matrices of the limit operator.
#[derive(Debug, Clone)]
pub struct LimitOperator {
    basis: RealFourierBasis,
    /// Bending block, `integral of g u'' phi'' ds`.
    pub k4: DMatrix<f64>,
    /// Curvature block, `integral of 2 kappa^2 g u' phi' ds`.
    pub k2: DMatrix<f64>,
    /// Mass block, `mass_factor * integral of u phi ds`.
    pub mass: DMatrix<f64>,
    /// Weight applied to the mass pairing (2 for unit thickness).
    pub mass_factor: f64,
    quad_points: Vec<f64>,
    quad_weight: f64,
    output_grid: Vec<f64>,
}

impl LimitOperator {
    /// Basis dimension `2 M + 1`.
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Quadrature nodes on which [`limit_resolve`] expects data samples.
    pub fn quadrature_points(&self) -> &[f64] {
        &self.quad_points
    }

    /// Evaluates a coefficient vector at the curve grid points.
    pub fn eval_on_grid(&self, coeffs: &DVector<f64>) -> Vec<f64> {
        self.output_grid
            .iter()
            .map(|&s| self.basis.eval(coeffs.as_slice(), s))
            .collect()
    }

    /// Evaluates a coefficient vector at arbitrary points.
    pub fn eval_at(&self, coeffs: &DVector<f64>, points: &[f64]) -> Vec<f64> {
        points
            .iter()
            .map(|&s| self.basis.eval(coeffs.as_slice(), s))
            .collect()
    }
}

/// Ascending eigenvalues with Mass-orthonormal coefficient vectors and
/// multiplicity grouping.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Columns match eigenvalues.
    pub eigenvectors: DMatrix<f64>,
    /// Indices grouped by eigenvalue clusters within [`cluster_tol`].
    pub clusters: Vec<Vec<usize>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Assembles the limit operator with `modes` Fourier modes. A thickness
/// profile switches the operator to the variable-width variant with its
/// default unit mass factor.
pub fn assemble_limit(
    curve: &ArclengthCurve,
    modes: usize,
    thickness: Option<&TrigSeries>,
) -> Result<LimitOperator, LimitError> {
    assemble_limit_with_mass(curve, modes, thickness, None)
}

/// As [`assemble_limit`] but with an explicit mass factor override.
pub fn assemble_limit_with_mass(
    curve: &ArclengthCurve,
    modes: usize,
    thickness: Option<&TrigSeries>,
    mass_factor: Option<f64>,
) -> Result<LimitOperator, LimitError> {
    if modes < 4 {
        return Err(LimitError::InvalidParams(format!(
            "at least 4 Fourier modes required, got {modes}"
        )));
    }
    let length = curve.perimeter;
    if let Some(g) = thickness {
        if (g.period - length).abs() > 1e-9 * length {
            return Err(LimitError::InvalidParams(
                "thickness profile period does not match the curve perimeter".into(),
            ));
        }
    }
    let basis = RealFourierBasis::new(length, modes);
    let n = basis.dim();
    let (points, weight) = basis.uniform_grid(QUAD_FACTOR * n);

    let g_samples: Vec<f64> = match thickness {
        Some(g) => points.iter().map(|&s| g.eval(s)).collect(),
        None => vec![1.0; points.len()],
    };
    let g_min = g_samples.iter().fold(f64::MAX, |m, &v| m.min(v));
    if g_min <= 0.0 {
        return Err(LimitError::ProfileNotPositive { min: g_min });
    }
    let mass_factor = mass_factor.unwrap_or(if thickness.is_some() { 1.0 } else { 2.0 });

    let tables = basis.tables(&points, 2);
    let scale_cols = |table: &DMatrix<f64>, w: &[f64]| {
        let mut scaled = table.clone();
        for (j, &wj) in w.iter().enumerate() {
            scaled.column_mut(j).scale_mut(wj);
        }
        scaled
    };

    let w4: Vec<f64> = g_samples.iter().map(|&g| weight * g).collect();
    let w2: Vec<f64> = points
        .iter()
        .zip(&g_samples)
        .map(|(&s, &g)| {
            let k = curve.eval_kappa(s);
            weight * 2.0 * k * k * g
        })
        .collect();
    let wm: Vec<f64> = vec![weight * mass_factor; points.len()];

    let k4 = scale_cols(&tables[2], &w4) * tables[2].transpose();
    let k2 = scale_cols(&tables[1], &w2) * tables[1].transpose();
    let mass = scale_cols(&tables[0], &wm) * tables[0].transpose();

    Ok(LimitOperator {
        basis,
        k4: symmetrize(k4),
        k2: symmetrize(k2),
        mass: symmetrize(mass),
        mass_factor,
        quad_points: points,
        quad_weight: weight,
        output_grid: curve.grid.clone(),
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Smallest `k_max` eigenvalues of the shifted pencil
/// `(K4 + K2 + b Mass) u = lambda Mass u`, via Cholesky reduction of the
/// mass matrix to a standard symmetric eigenproblem.
pub fn limit_spectrum(op: &LimitOperator, k_max: usize, b: f64) -> Result<Spectrum, LimitError> {
    let n = op.dim();
    if k_max > n {
        return Err(LimitError::InvalidParams(format!(
            "k_max = {k_max} exceeds the basis dimension {n}"
        )));
    }
    if b < 0.0 {
        return Err(LimitError::InvalidParams(format!(
            "shift b must be nonnegative, got {b}"
        )));
    }
    let stiffness = &op.k4 + &op.k2;
    let mass_factor = cholesky(&op.mass)?;

    // C = L^-1 (K4 + K2) L^-T stays symmetric and shares the pencil
    // spectrum; the shift enters as b I exactly
    let lower = mass_factor.lower();
    let half = forward_substitute_columns(lower, &stiffness);
    let mut reduced = symmetrize(forward_substitute_columns(lower, &half.transpose()));
    for i in 0..n {
        reduced[(i, i)] += b;
    }
    let eig = sym_eigen(&reduced)?;

    // Rayleigh-quotient polish at each computed eigenvector: quadratically
    // insensitive to eigenvector error, and the shift cancels exactly
    let mut pairs: Vec<(f64, DVector<f64>)> = Vec::with_capacity(k_max);
    for j in 0..k_max {
        let y = DVector::from_column_slice(eig.eigenvectors.column(j).as_slice());
        let mut u = back_substitute_transpose(lower, &y);
        fix_sign(&mut u);
        let rq = u.dot(&(&stiffness * &u)) / u.dot(&(&op.mass * &u));
        pairs.push((rq + b, u));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut eigenvalues = Vec::with_capacity(k_max);
    let mut eigenvectors = DMatrix::zeros(n, k_max);
    for (j, (value, u)) in pairs.into_iter().enumerate() {
        eigenvalues.push(value);
        eigenvectors.set_column(j, &u);
    }
    let clusters = cluster_indices(&eigenvalues);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        clusters,
    })
}

/// Galerkin solution of the inhomogeneous shifted problem: the discrete
/// limit resolvent applied to boundary data `f` sampled on
/// [`LimitOperator::quadrature_points`]. Returns samples on the curve grid.
pub fn limit_resolve(
    op: &LimitOperator,
    f_samples: &[f64],
    b: f64,
) -> Result<Vec<f64>, LimitError> {
    if b <= 0.0 {
        return Err(LimitError::SingularOperator { b });
    }
    if f_samples.len() != op.quad_points.len() {
        return Err(LimitError::InvalidParams(format!(
            "expected {} data samples on the quadrature grid, got {}",
            op.quad_points.len(),
            f_samples.len()
        )));
    }
    let u = limit_resolve_coeffs(op, f_samples, b)?;
    Ok(op.eval_on_grid(&u))
}

/// As [`limit_resolve`] but returning basis coefficients.
pub fn limit_resolve_coeffs(
    op: &LimitOperator,
    f_samples: &[f64],
    b: f64,
) -> Result<DVector<f64>, LimitError> {
    if b <= 0.0 {
        return Err(LimitError::SingularOperator { b });
    }
    let tables = op.basis.tables(&op.quad_points, 0);
    let n = op.dim();
    let mut load = DVector::zeros(n);
    for (j, &f) in f_samples.iter().enumerate() {
        let w = op.quad_weight * op.mass_factor * f;
        for i in 0..n {
            load[i] += w * tables[0][(i, j)];
        }
    }
    let stiffness = &op.k4 + &op.k2 + &op.mass * b;
    let factor = cholesky(&stiffness)?;
    Ok(factor.solve(&load))
}

fn forward_substitute_columns(lower: &DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    let n = lower.nrows();
    let mut x = rhs.clone();
    for j in 0..x.ncols() {
        for i in 0..n {
            let mut v = x[(i, j)];
            for k in 0..i {
                v -= lower[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = v / lower[(i, i)];
        }
    }
    x
}

fn back_substitute_transpose(lower: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let n = lower.nrows();
    let mut x = rhs.clone();
    for i in (0..n).rev() {
        let mut v = x[i];
        for k in (i + 1)..n {
            v -= lower[(k, i)] * x[k];
        }
        x[i] = v / lower[(i, i)];
    }
    x
}

/// Deterministic sign: the largest-magnitude coefficient is positive.
pub(crate) fn fix_sign(v: &mut DVector<f64>) {
    let mut idx = 0;
    let mut best = 0.0;
    for (i, &c) in v.iter().enumerate() {
        if c.abs() > best {
            best = c.abs();
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.neg_mut();
    }
}

pub(crate) fn cluster_indices(eigenvalues: &[f64]) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &ev) in eigenvalues.iter().enumerate() {
        match clusters.last_mut() {
            Some(group) if (ev - eigenvalues[group[0]]).abs() < cluster_tol(ev) => {
                group.push(i);
            }
            _ => clusters.push(vec![i]),
        }
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_arclength_curve, CurveSpec};

    fn unit_circle() -> ArclengthCurve {
        build_arclength_curve(&CurveSpec::Circle { radius: 1.0 }, 256).unwrap()
    }

    fn ellipse() -> ArclengthCurve {
        build_arclength_curve(
            &CurveSpec::Ellipse {
                semi_axis_a: 2.0,
                semi_axis_b: 1.0,
            },
            512,
        )
        .unwrap()
    }

    /// Closed-form Fourier diagonalization on the unit circle:
    /// lambda_m = (m^4 + 2 m^2) / 2.
    fn circle_limit_eigenvalue(m: usize) -> f64 {
        let m = m as f64;
        (m.powi(4) + 2.0 * m * m) / 2.0
    }

    #[test]
    fn circle_blocks_are_diagonal_fourier_integrals() {
        let op = assemble_limit(&unit_circle(), 8, None).unwrap();
        let pi = std::f64::consts::PI;
        for m in 1..=8usize {
            let m4 = (m as f64).powi(4) * pi;
            let m2 = 2.0 * (m as f64).powi(2) * pi;
            for idx in [2 * m - 1, 2 * m] {
                assert!((op.k4[(idx, idx)] - m4).abs() < 1e-9 * m4);
                assert!((op.k2[(idx, idx)] - m2).abs() < 1e-9 * m2);
            }
        }
        assert!(op.k4[(0, 0)].abs() < 1e-10);
        assert!(op.k2[(0, 0)].abs() < 1e-10);
        // off-diagonal entries vanish for constant curvature
        let mut off = 0.0_f64;
        for i in 0..op.dim() {
            for j in 0..op.dim() {
                if i != j {
                    off = off.max(op.k4[(i, j)].abs()).max(op.k2[(i, j)].abs());
                }
            }
        }
        assert!(off < 1e-9);
    }

    #[test]
    fn constant_vector_is_in_the_kernel() {
        let op = assemble_limit(&ellipse(), 12, None).unwrap();
        let mut c = DVector::zeros(op.dim());
        c[0] = 1.0;
        let k4c = &op.k4 * &c;
        let k2c = &op.k2 * &c;
        assert!(c.dot(&k4c).abs() < 1e-10);
        assert!(c.dot(&k2c).abs() < 1e-10);
    }

    #[test]
    fn circle_spectrum_matches_fourier_oracle() {
        let op = assemble_limit(&unit_circle(), 16, None).unwrap();
        let spectrum = limit_spectrum(&op, 7, 0.0).unwrap();
        let expected = [0.0_f64, 1.5, 1.5, 12.0, 12.0, 49.5, 49.5];
        for (k, (&got, want)) in spectrum.eigenvalues.iter().zip(expected).enumerate() {
            let tol = 1e-10 * want.max(1.0);
            assert!((got - want).abs() < tol, "k={k}: {got} vs {want}");
        }
        assert_eq!(expected[5], circle_limit_eigenvalue(3));
    }

    #[test]
    fn lowest_mode_is_constant() {
        let op = assemble_limit(&ellipse(), 16, None).unwrap();
        let spectrum = limit_spectrum(&op, 3, 0.0).unwrap();
        assert!(spectrum.eigenvalues[0].abs() < 1e-10);
        let u0 = spectrum.eigenvectors.column(0);
        let scale = u0[0].abs();
        for &c in u0.iter().skip(1) {
            assert!(c.abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn spectral_shift_is_exact() {
        for curve in [unit_circle(), ellipse()] {
            let op = assemble_limit(&curve, 16, None).unwrap();
            let base = limit_spectrum(&op, 9, 0.0).unwrap();
            for b in [1.0, 10.0] {
                let shifted = limit_spectrum(&op, 9, b).unwrap();
                let tol = if b == 1.0 { 1e-12 } else { 1e-11 };
                for k in 0..9 {
                    let drift = (shifted.eigenvalues[k] - b - base.eigenvalues[k]).abs();
                    assert!(drift < tol, "drift {drift} at k={k}, b={b}");
                }
            }
        }
    }

    #[test]
    fn eigenvectors_are_mass_orthonormal() {
        let op = assemble_limit(&ellipse(), 12, None).unwrap();
        let spectrum = limit_spectrum(&op, 6, 0.0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let mi = &op.mass * spectrum.eigenvectors.column(j);
                let dot = spectrum.eigenvectors.column(i).dot(&mi);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10, "gram({i},{j}) = {dot}");
            }
        }
    }

    #[test]
    fn circle_multiplicity_pairs() {
        let op = assemble_limit(&unit_circle(), 16, None).unwrap();
        let spectrum = limit_spectrum(&op, 9, 0.0).unwrap();
        for k in [1, 3, 5, 7] {
            let gap = (spectrum.eigenvalues[k + 1] - spectrum.eigenvalues[k]).abs();
            assert!(gap < 1e-10, "pair gap {gap} at k={k}");
        }
        assert_eq!(spectrum.clusters[0], vec![0]);
        assert_eq!(spectrum.clusters[1], vec![1, 2]);
        assert_eq!(spectrum.clusters[2], vec![3, 4]);
    }

    #[test]
    fn self_adjointness_on_random_vectors() {
        let op = assemble_limit(&ellipse(), 12, None).unwrap();
        let n = op.dim();
        let a = &op.k4 + &op.k2;
        let mut state = 0x9e3779b97f4a7c15_u64;
        let mut next = move || {
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545F4914F6CDD1D) >> 11) as f64 / (1u64 << 52) as f64 - 0.5
        };
        for _ in 0..5 {
            let x = DVector::from_fn(n, |_, _| next());
            let y = DVector::from_fn(n, |_, _| next());
            let xay = x.dot(&(&a * &y));
            let yax = y.dot(&(&a * &x));
            assert!((xay - yax).abs() <= 1e-12 * xay.abs().max(yax.abs()).max(1.0));
        }
    }

    #[test]
    fn resolve_constant_data() {
        let op = assemble_limit(&ellipse(), 12, None).unwrap();
        let b = 2.5;
        let c = 1.3;
        let f = vec![c; op.quadrature_points().len()];
        let u = limit_resolve(&op, &f, b).unwrap();
        for v in u {
            assert!((v - c / b).abs() < 1e-12);
        }
    }

    #[test]
    fn resolve_matches_fourier_formula_on_circle() {
        let op = assemble_limit(&unit_circle(), 12, None).unwrap();
        // u_hat = 2 f_hat / (m^4 + 2 m^2 + 2 b)
        let f1: Vec<f64> = op.quadrature_points().iter().map(|&s| s.cos()).collect();
        let u1 = limit_resolve(&op, &f1, 1.0).unwrap();
        let grid = unit_circle().grid;
        for (i, &s) in grid.iter().enumerate() {
            assert!((u1[i] - 0.4 * s.cos()).abs() < 1e-10);
        }
        let f2: Vec<f64> = op
            .quadrature_points()
            .iter()
            .map(|&s| (2.0 * s).cos())
            .collect();
        let u2 = limit_resolve(&op, &f2, 1.0).unwrap();
        for (i, &s) in grid.iter().enumerate() {
            assert!((u2[i] - (2.0 / 26.0) * (2.0 * s).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn resolvent_reproduces_eigenpairs() {
        let op = assemble_limit(&ellipse(), 16, None).unwrap();
        let spectrum = limit_spectrum(&op, 5, 0.0).unwrap();
        let b = 1.0;
        for k in 0..5 {
            let u = DVector::from_column_slice(spectrum.eigenvectors.column(k).as_slice());
            let u_quad = op.eval_at(&u, op.quadrature_points());
            let f: Vec<f64> = u_quad
                .iter()
                .map(|&v| (spectrum.eigenvalues[k] + b) * v)
                .collect();
            let w = limit_resolve_coeffs(&op, &f, b).unwrap();
            let diff = &w - &u;
            let err = diff.dot(&(&op.mass * &diff)).sqrt();
            assert!(err < 1e-9, "mass-norm error {err} at k={k}");
        }
    }

    #[test]
    fn resolve_rejects_nonpositive_shift() {
        let op = assemble_limit(&unit_circle(), 8, None).unwrap();
        let f = vec![1.0; op.quadrature_points().len()];
        assert!(matches!(
            limit_resolve(&op, &f, 0.0),
            Err(LimitError::SingularOperator { .. })
        ));
    }

    #[test]
    fn resolution_convergence_on_the_ellipse() {
        let curve = ellipse();
        let coarse = limit_spectrum(&assemble_limit(&curve, 48, None).unwrap(), 9, 0.0).unwrap();
        let fine = limit_spectrum(&assemble_limit(&curve, 96, None).unwrap(), 9, 0.0).unwrap();
        for k in 0..9 {
            let rel =
                (coarse.eigenvalues[k] - fine.eigenvalues[k]).abs() / fine.eigenvalues[k].max(1.0);
            assert!(rel < 1e-9, "k={k} drift {rel}");
        }
    }

    #[test]
    fn constant_thickness_profile_matches_scaled_oracle() {
        // (g u'')'' - 2 (kappa^2 g u')' = lambda u with constant g = c on the
        // unit circle gives lambda_m = c (m^4 + 2 m^2) under unit mass factor
        let curve = unit_circle();
        let c = 0.7;
        let samples = vec![c; curve.resolution()];
        let g = TrigSeries::fit(curve.perimeter, &samples);
        let op = assemble_limit(&curve, 12, Some(&g)).unwrap();
        assert_eq!(op.mass_factor, 1.0);
        let spectrum = limit_spectrum(&op, 5, 0.0).unwrap();
        let expected = [0.0, 3.0 * c, 3.0 * c, 24.0 * c, 24.0 * c];
        for (got, want) in spectrum.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-9 * want.max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn nonpositive_profile_is_rejected() {
        let curve = unit_circle();
        let samples: Vec<f64> = curve.grid.iter().map(|&s| 0.5 + 0.6 * s.cos()).collect();
        let g = TrigSeries::fit(curve.perimeter, &samples);
        assert!(matches!(
            assemble_limit(&curve, 8, Some(&g)),
            Err(LimitError::ProfileNotPositive { .. })
        ));
    }
}
