//! Sweep orchestration: thin-problem spectra across a decreasing thickness
//! grid, comparison against the 1D limit eigenvalues, empirical rate fits,
//! and eigenfunction flattening diagnostics.
//!
//! The rescaled eigenvalues come out of the boundary-reduced resolvent: a
//! reduced eigenvalue `m` maps to `theta = 1/m - b`. The known zero mode
//! (constants) is deflated exactly, and every reported `theta` is evaluated
//! as a Rayleigh quotient of the lifted eigenvector through quadrature-level
//! form values, second-order accurate in the eigenvector and free of the
//! `1/eps^4` matrix scale.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curve::{build_arclength_curve, ArclengthCurve, CurveError, CurveSpec};
use crate::fermiform::{
    assemble_thin_form, build_basis, extract_traces, thin_form_values, FormError, TensorBasis,
    ThinProblemSpec,
};
use crate::fourier::TrigSeries;
use crate::limit1d::{
    assemble_limit_with_mass, fix_sign, limit_spectrum, LimitError, LimitOperator, Spectrum,
};
use crate::spectra::{boundary_reduce, cholesky, sym_eigen, SpectraError};

/// Errors below this are treated as converged when fitting rates.
const RATE_FLOOR: f64 = 1e-10;

/// Default sweep grid for a curve with `max_epsilon = 1/2`; scaled by
/// `max_epsilon / 0.5` so every entry is admissible on any curve.
const DEFAULT_EPS_GRID: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

#[derive(Debug, thiserror::Error)]
pub enum ConvergenceError {
    #[error("requested {requested} eigenvalues but the reduced operator has {available}")]
    InsufficientModes { requested: usize, available: usize },
    #[error("cluster sizes differ: {thin} thin vs {limit} limit eigenfunctions")]
    MultiplicityMismatch { thin: usize, limit: usize },
    #[error("invalid sweep parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Limit(#[from] LimitError),
}

/// Rescaled eigenvalues `theta_k = lambda_{eps,k}/eps` of one thin problem,
/// ascending, with boundary-mass-normalized coefficient vectors.
#[derive(Debug, Clone)]
pub struct ThinSpectrum {
    pub thetas: Vec<f64>,
    /// Columns match `thetas`; full tensor-basis coefficients.
    pub eigenvectors: DMatrix<f64>,
}

/// Computes `theta_0 ..= theta_k_max` for one thin problem.
///
/// Pipeline: assemble, factor the shifted stiffness, compress onto the
/// boundary traces, deflate the constant mode (an exact eigenpair of the
/// reduced operator at `1/b`), eigensolve, lift each reduced eigenvector by
/// one solve, and evaluate its Rayleigh quotient by quadrature.
pub fn thin_spectrum(
    spec: &ThinProblemSpec,
    basis: &TensorBasis,
    k_max: usize,
) -> Result<ThinSpectrum, ConvergenceError> {
    spec.validate()?;
    let forms = assemble_thin_form(spec, basis)?;
    let shifted = &forms.k0 + &forms.mb * spec.b;
    let factor = cholesky(&shifted)?;
    let reduced = boundary_reduce(&factor, basis, &forms.mb)?;
    let m = reduced.dim();
    if k_max + 1 > m {
        return Err(ConvergenceError::InsufficientModes {
            requested: k_max + 1,
            available: m,
        });
    }

    // constants have zero Hessian energy, so (z0, 1/b) is an exact eigenpair
    // of the reduced operator; replace its numerically contaminated image
    let constant = basis.constant_vector();
    let constant_traces =
        DVector::from_iterator(m, reduced.trace_indices.iter().map(|&g| constant[g]));
    let mut z0 = &reduced.w_sqrt * &constant_traces;
    let z0_norm = z0.norm();
    z0 /= z0_norm;
    let mut deflated = reduced.matrix.clone();
    let sz = &deflated * &z0;
    let zsz = z0.dot(&sz);
    for i in 0..m {
        for j in 0..m {
            deflated[(i, j)] +=
                z0[i] * z0[j] * (zsz + 1.0 / spec.b) - z0[i] * sz[j] - sz[i] * z0[j];
        }
    }

    let eig = sym_eigen(&deflated)?;
    let n = basis.dim();
    let mut pairs: Vec<(f64, DVector<f64>)> = Vec::with_capacity(k_max + 1);
    for j in 0..=k_max {
        let col = m - 1 - j;
        let z = DVector::from_column_slice(eig.eigenvectors.column(col).as_slice());
        let mut y = if z.dot(&z0).abs() > 0.9 {
            basis.constant_vector()
        } else {
            factor.solve(&reduced.lift_rhs(&z, n))
        };
        let values = thin_form_values(spec, basis, &y)?;
        let theta = values.energy / values.boundary_mass;
        y /= values.boundary_mass.sqrt();
        fix_sign(&mut y);
        pairs.push((theta, y));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut thetas = Vec::with_capacity(pairs.len());
    let mut eigenvectors = DMatrix::zeros(n, pairs.len());
    for (j, (theta, y)) in pairs.into_iter().enumerate() {
        thetas.push(theta);
        eigenvectors.set_column(j, &y);
    }
    Ok(ThinSpectrum {
        thetas,
        eigenvectors,
    })
}

/// Principal-angle distance between the outer-trace span of a thin
/// eigenvalue cluster and the matching limit eigenspace, both orthonormalized
/// in the boundary mass inner product on `(0, L)`.
pub fn eigenfunction_gap(
    basis: &TensorBasis,
    curve: &ArclengthCurve,
    epsilon: f64,
    thin_cluster: &[DVector<f64>],
    limit_op: &LimitOperator,
    limit_cluster: &[DVector<f64>],
) -> Result<f64, ConvergenceError> {
    if thin_cluster.len() != limit_cluster.len() {
        return Err(ConvergenceError::MultiplicityMismatch {
            thin: thin_cluster.len(),
            limit: limit_cluster.len(),
        });
    }
    let d = thin_cluster.len();
    if d == 0 {
        return Ok(0.0);
    }
    let n_grid = curve.resolution();
    let weight = curve.perimeter / n_grid as f64;

    let mut thin = DMatrix::zeros(n_grid, d);
    for (j, coeffs) in thin_cluster.iter().enumerate() {
        let traces = extract_traces(basis, curve, epsilon, coeffs);
        thin.set_column(j, &DVector::from_vec(traces.outer_value));
    }
    let mut limit = DMatrix::zeros(n_grid, d);
    for (j, coeffs) in limit_cluster.iter().enumerate() {
        limit.set_column(j, &DVector::from_vec(limit_op.eval_on_grid(coeffs)));
    }

    let orthonormalize = |x: &DMatrix<f64>| -> Result<DMatrix<f64>, ConvergenceError> {
        let gram = x.transpose() * x * weight;
        let eig = sym_eigen(&gram)?;
        let mut t = DMatrix::zeros(d, d);
        for j in 0..d {
            let root = eig.eigenvalues[j].max(1e-300).sqrt();
            let col = eig.eigenvectors.column(j) / root;
            t.set_column(j, &col);
        }
        Ok(x * t)
    };
    let thin_q = orthonormalize(&thin)?;
    let limit_q = orthonormalize(&limit)?;
    let cross = thin_q.transpose() * limit_q * weight;
    let gram = cross.transpose() * &cross;
    let eig = sym_eigen(&gram)?;
    let min_cos2 = eig.eigenvalues[0].clamp(0.0, 1.0);
    Ok((1.0 - min_cos2).sqrt())
}

/// Everything one sweep needs; `epsilons: None` selects the default grid
/// scaled into the admissible range of the curve.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepConfig {
    pub curve: CurveSpec,
    pub resolution: usize,
    pub epsilons: Option<Vec<f64>>,
    pub mu: f64,
    pub b: f64,
    /// Tangential Fourier modes of the 2D basis.
    pub fourier_modes: usize,
    /// Hermite elements of the 2D basis.
    pub elements: usize,
    /// Fourier modes of the 1D limit solver.
    pub limit_modes: usize,
    pub k_max: usize,
    /// Worker threads for independent thickness points (1 = sequential).
    pub threads: usize,
}

impl SweepConfig {
    pub fn new(curve: CurveSpec) -> Self {
        Self {
            curve,
            resolution: 512,
            epsilons: None,
            mu: 1.0,
            b: 1.0,
            fourier_modes: 24,
            elements: 8,
            limit_modes: 48,
            k_max: 8,
            threads: 1,
        }
    }
}

/// Sweep results, one row per thickness. Serialized as-is into the JSON
/// report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepReport {
    pub epsilons: Vec<f64>,
    /// `theta[i][k]` for thickness `epsilons[i]`.
    pub theta: Vec<Vec<f64>>,
    pub limit_lambdas: Vec<f64>,
    /// `|theta[i][k] - limit_lambdas[k]|`.
    pub errors: Vec<Vec<f64>>,
    /// Log-log slope over the three smallest thicknesses, per k; `None`
    /// where the error is already at the floor.
    pub rates: Vec<Option<f64>>,
    /// Principal-angle trace distances per `(eps, k)`.
    pub eigenfunction_gaps: Vec<Vec<f64>>,
    /// `L^2` size of the rescaled outer normal-derivative trace.
    pub trace_flatness: Vec<Vec<f64>>,
    pub config: SweepConfig,
}

struct EpsResult {
    theta: Vec<f64>,
    gaps: Vec<f64>,
    flatness: Vec<f64>,
}

fn solve_one_eps(
    curve: &ArclengthCurve,
    basis: &TensorBasis,
    config: &SweepConfig,
    limit_op: &LimitOperator,
    limit: &Spectrum,
    epsilon: f64,
) -> Result<EpsResult, ConvergenceError> {
    let spec = ThinProblemSpec {
        curve,
        epsilon,
        mu: config.mu,
        b: config.b,
        thickness: None,
    };
    let thin = thin_spectrum(&spec, basis, config.k_max)?;

    let k_count = config.k_max + 1;
    let mut gaps = vec![0.0; k_count];
    for cluster in &limit.clusters {
        let members: Vec<usize> = cluster.iter().copied().filter(|&k| k < k_count).collect();
        if members.is_empty() {
            continue;
        }
        let thin_vecs: Vec<DVector<f64>> = members
            .iter()
            .map(|&k| DVector::from_column_slice(thin.eigenvectors.column(k).as_slice()))
            .collect();
        let limit_vecs: Vec<DVector<f64>> = members
            .iter()
            .map(|&k| DVector::from_column_slice(limit.eigenvectors.column(k).as_slice()))
            .collect();
        let gap = eigenfunction_gap(basis, curve, epsilon, &thin_vecs, limit_op, &limit_vecs)?;
        for &k in &members {
            gaps[k] = gap;
        }
    }

    let grid_weight = curve.perimeter / curve.resolution() as f64;
    let mut flatness = vec![0.0; k_count];
    for (k, slot) in flatness.iter_mut().enumerate() {
        let coeffs = DVector::from_column_slice(thin.eigenvectors.column(k).as_slice());
        let traces = extract_traces(basis, curve, epsilon, &coeffs);
        let norm2: f64 = traces
            .outer_slope_over_eps
            .iter()
            .map(|&v| v * v * grid_weight)
            .sum();
        *slot = norm2.sqrt();
    }

    Ok(EpsResult {
        theta: thin.thetas,
        gaps,
        flatness,
    })
}

/// Runs a full sweep: the limit problem once, then one thin solve per
/// thickness (optionally across threads), then rates and diagnostics.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport, ConvergenceError> {
    let curve = build_arclength_curve(&config.curve, config.resolution)?;
    let max_eps = curve.max_epsilon();
    let epsilons = match &config.epsilons {
        Some(list) => list.clone(),
        None => DEFAULT_EPS_GRID
            .iter()
            .map(|&e| e * max_eps / 0.5)
            .collect(),
    };
    if epsilons.len() < 3 {
        return Err(ConvergenceError::InvalidParams(
            "sweep needs at least 3 thickness values".into(),
        ));
    }
    if !epsilons.windows(2).all(|w| w[0] > w[1]) {
        return Err(ConvergenceError::InvalidParams(
            "thickness values must be strictly decreasing".into(),
        ));
    }
    if epsilons.iter().any(|&e| e <= 0.0 || e > max_eps) {
        return Err(ConvergenceError::InvalidParams(format!(
            "all thickness values must lie in (0, {max_eps}]"
        )));
    }

    let basis = build_basis(config.fourier_modes, config.elements)?;
    let limit_op = assemble_limit_with_mass(&curve, config.limit_modes, None, None)?;
    let limit = limit_spectrum(&limit_op, config.k_max + 1, 0.0)?;

    let mut results: Vec<Option<Result<EpsResult, ConvergenceError>>> =
        (0..epsilons.len()).map(|_| None).collect();
    let threads = config.threads.max(1).min(epsilons.len());
    if threads == 1 {
        for (i, &eps) in epsilons.iter().enumerate() {
            results[i] = Some(solve_one_eps(
                &curve, &basis, config, &limit_op, &limit, eps,
            ));
        }
    } else {
        let mut slots: Vec<(usize, Option<Result<EpsResult, ConvergenceError>>)> =
            (0..epsilons.len()).map(|i| (i, None)).collect();
        std::thread::scope(|scope| {
            for chunk in slots.chunks_mut(epsilons.len().div_ceil(threads)) {
                scope.spawn(|| {
                    for (i, slot) in chunk.iter_mut() {
                        *slot = Some(solve_one_eps(
                            &curve,
                            &basis,
                            config,
                            &limit_op,
                            &limit,
                            epsilons[*i],
                        ));
                    }
                });
            }
        });
        for (i, slot) in slots {
            results[i] = slot;
        }
    }

    let mut theta = Vec::with_capacity(epsilons.len());
    let mut gaps = Vec::with_capacity(epsilons.len());
    let mut flatness = Vec::with_capacity(epsilons.len());
    for slot in results {
        let r = slot.expect("all thickness points were scheduled")?;
        theta.push(r.theta);
        gaps.push(r.gaps);
        flatness.push(r.flatness);
    }

    let k_count = config.k_max + 1;
    let errors: Vec<Vec<f64>> = theta
        .iter()
        .map(|row| {
            (0..k_count)
                .map(|k| (row[k] - limit.eigenvalues[k]).abs())
                .collect()
        })
        .collect();
    let rates = (0..k_count)
        .map(|k| {
            let tail = epsilons.len() - 3;
            let pts: Vec<(f64, f64)> = (tail..epsilons.len())
                .map(|i| (epsilons[i], errors[i][k]))
                .collect();
            fit_rate(&pts)
        })
        .collect();

    Ok(SweepReport {
        epsilons,
        theta,
        limit_lambdas: limit.eigenvalues[..k_count].to_vec(),
        errors,
        rates,
        eigenfunction_gaps: gaps,
        trace_flatness: flatness,
        config: config.clone(),
    })
}

/// Least-squares slope of `log error` against `log eps`; `None` when any
/// error sits at the convergence floor.
pub fn fit_rate(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(_, e)| e < RATE_FLOOR) {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(eps, err) in points {
        let x = eps.ln();
        let y = err.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    Some((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

impl SweepReport {
    /// Flat CSV table, one row per `(eps, k)`, schema
    /// `epsilon,k,theta,lambda_limit,abs_error,rate,gap,flatness`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,k,theta,lambda_limit,abs_error,rate,gap,flatness\n");
        for (i, &eps) in self.epsilons.iter().enumerate() {
            for k in 0..self.theta[i].len() {
                let rate = self.rates[k].map(|r| r.to_string()).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    eps,
                    k,
                    self.theta[i][k],
                    self.limit_lambdas[k],
                    self.errors[i][k],
                    rate,
                    self.eigenfunction_gaps[i][k],
                    self.trace_flatness[i][k],
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Builds a thickness profile from arclength harmonics
/// `g(s) = c0 + sum_j (cos_j cos(2 pi j s / L) + sin_j sin(2 pi j s / L))`.
pub fn thickness_profile(
    curve: &ArclengthCurve,
    constant: f64,
    cos: &[f64],
    sin: &[f64],
) -> TrigSeries {
    let harmonics = cos.len().max(sin.len());
    let resolution = curve.resolution().max(4 * (harmonics + 1));
    let samples: Vec<f64> = (0..resolution)
        .map(|i| {
            let s = i as f64 * curve.perimeter / resolution as f64;
            let w0 = 2.0 * std::f64::consts::PI / curve.perimeter;
            let mut acc = constant;
            for j in 0..harmonics {
                let (sj, cj) = (w0 * (j + 1) as f64 * s).sin_cos();
                acc += cos.get(j).copied().unwrap_or(0.0) * cj
                    + sin.get(j).copied().unwrap_or(0.0) * sj;
            }
            acc
        })
        .collect();
    TrigSeries::fit(curve.perimeter, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_circle_curve() -> ArclengthCurve {
        build_arclength_curve(&CurveSpec::Circle { radius: 1.0 }, 256).unwrap()
    }

    #[test]
    fn rate_fit_recovers_exact_slope() {
        let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05].iter().map(|&e| (e, 3.7 * e)).collect();
        let rate = fit_rate(&pts).unwrap();
        assert!((rate - 1.0).abs() < 1e-12, "rate {rate}");
        let pts2: Vec<(f64, f64)> = [0.2, 0.1, 0.05].iter().map(|&e| (e, 0.9 * e * e)).collect();
        assert!((fit_rate(&pts2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rate_fit_skips_converged_errors() {
        let pts = [(0.2, 1e-12), (0.1, 1e-13), (0.05, 1e-14)];
        assert!(fit_rate(&pts).is_none());
    }

    #[test]
    fn zero_mode_is_deflated_exactly() {
        let curve = unit_circle_curve();
        let basis = build_basis(8, 3).unwrap();
        let spec = ThinProblemSpec {
            curve: &curve,
            epsilon: 0.1,
            mu: 1.0,
            b: 1.0,
            thickness: None,
        };
        let thin = thin_spectrum(&spec, &basis, 4).unwrap();
        assert!(thin.thetas[0].abs() < 1e-12, "theta0 = {}", thin.thetas[0]);
        assert!(thin.thetas[1] > 0.1, "theta1 = {}", thin.thetas[1]);
        // trace of the zero mode is constant
        let coeffs = DVector::from_column_slice(thin.eigenvectors.column(0).as_slice());
        let traces = extract_traces(&basis, &curve, 0.1, &coeffs);
        let mean: f64 = traces.outer_value.iter().sum::<f64>() / traces.outer_value.len() as f64;
        for v in traces.outer_value {
            assert!((v - mean).abs() < 1e-6 * mean.abs());
        }
    }

    #[test]
    fn circle_theta_approaches_limit_pair() {
        // coarse but honest check at one thickness
        let curve = unit_circle_curve();
        let basis = build_basis(10, 4).unwrap();
        let spec = ThinProblemSpec {
            curve: &curve,
            epsilon: 0.05,
            mu: 1.0,
            b: 1.0,
            thickness: None,
        };
        let thin = thin_spectrum(&spec, &basis, 4).unwrap();
        assert!((thin.thetas[1] - 1.5).abs() / 1.5 < 0.05);
        assert!((thin.thetas[2] - 1.5).abs() / 1.5 < 0.05);
        let pair = (thin.thetas[1] - thin.thetas[2]).abs() / thin.thetas[2];
        assert!(pair < 1e-6, "pair split {pair}");
    }

    #[test]
    fn b_shift_does_not_move_thetas() {
        let curve = unit_circle_curve();
        let basis = build_basis(8, 3).unwrap();
        let solve = |b: f64| {
            let spec = ThinProblemSpec {
                curve: &curve,
                epsilon: 0.1,
                mu: 1.0,
                b,
                thickness: None,
            };
            thin_spectrum(&spec, &basis, 4).unwrap().thetas
        };
        let t1 = solve(1.0);
        let t2 = solve(2.0);
        for (a, b) in t1.iter().zip(&t2) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn gap_of_identical_spans_is_zero() {
        let curve = unit_circle_curve();
        let basis = build_basis(6, 3).unwrap();
        let limit_op = assemble_limit_with_mass(&curve, 8, None, None).unwrap();
        let limit = limit_spectrum(&limit_op, 3, 0.0).unwrap();
        let vecs: Vec<DVector<f64>> = (1..3)
            .map(|k| DVector::from_column_slice(limit.eigenvectors.column(k).as_slice()))
            .collect();
        // fabricate thin vectors whose outer trace equals the limit pair
        let mut thin_vecs = Vec::new();
        for v in &vecs {
            let mut w = DVector::zeros(basis.dim());
            for (mode, &c) in v.iter().enumerate().take(basis.n_s()) {
                for node in 0..=basis.elements {
                    w[basis.flat_index(mode, node, crate::fermiform::DofKind::Value)] = c;
                }
            }
            thin_vecs.push(w);
        }
        let gap = eigenfunction_gap(&basis, &curve, 0.1, &thin_vecs, &limit_op, &vecs).unwrap();
        assert!(gap < 1e-7, "gap {gap}");
    }

    #[test]
    fn gap_rejects_mismatched_clusters() {
        let curve = unit_circle_curve();
        let basis = build_basis(6, 3).unwrap();
        let limit_op = assemble_limit_with_mass(&curve, 8, None, None).unwrap();
        let limit = limit_spectrum(&limit_op, 3, 0.0).unwrap();
        let one = vec![DVector::from_column_slice(
            limit.eigenvectors.column(1).as_slice(),
        )];
        let two: Vec<DVector<f64>> = (1..3)
            .map(|k| DVector::from_column_slice(limit.eigenvectors.column(k).as_slice()))
            .collect();
        let thin_like = vec![DVector::zeros(basis.dim())];
        assert!(matches!(
            eigenfunction_gap(&basis, &curve, 0.1, &thin_like, &limit_op, &two),
            Err(ConvergenceError::MultiplicityMismatch { .. })
        ));
        assert!(eigenfunction_gap(&basis, &curve, 0.1, &thin_like, &limit_op, &one).is_ok());
    }

    #[test]
    fn sweep_report_is_deterministic_and_threadsafe() {
        let mut config = SweepConfig::new(CurveSpec::Circle { radius: 1.0 });
        config.resolution = 128;
        config.epsilons = Some(vec![0.2, 0.1, 0.05]);
        config.fourier_modes = 6;
        config.elements = 3;
        config.limit_modes = 8;
        config.k_max = 3;
        let sequential = run_sweep(&config).unwrap();
        let again = run_sweep(&config).unwrap();
        assert_eq!(sequential.to_csv(), again.to_csv());
        config.threads = 3;
        let parallel = run_sweep(&config).unwrap();
        assert_eq!(sequential.to_csv(), parallel.to_csv());
        assert!(sequential.theta[0][0].abs() <= 1e-8);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let mut config = SweepConfig::new(CurveSpec::Circle { radius: 1.0 });
        config.resolution = 128;
        config.fourier_modes = 6;
        config.elements = 3;
        config.limit_modes = 8;
        config.epsilons = Some(vec![0.1, 0.2, 0.05]);
        assert!(run_sweep(&config).is_err());
        config.epsilons = Some(vec![0.2, 0.1]);
        assert!(run_sweep(&config).is_err());
        config.epsilons = Some(vec![0.9, 0.2, 0.1]);
        assert!(run_sweep(&config).is_err());
    }

    #[test]
    fn report_round_trips_through_json() {
        let mut config = SweepConfig::new(CurveSpec::Circle { radius: 1.0 });
        config.resolution = 128;
        config.epsilons = Some(vec![0.2, 0.1, 0.05]);
        config.fourier_modes = 6;
        config.elements = 3;
        config.limit_modes = 8;
        config.k_max = 2;
        let report = run_sweep(&config).unwrap();
        let json = report.to_json();
        let back: SweepReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }
}
