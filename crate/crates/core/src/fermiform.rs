//! The 2D biharmonic Steklov quadratic form on the reference strip
//! `(0, L) x (0, 1)` in Fermi coordinates.
//!
//! The pulled-back Hessian product expands into eight coefficient groups in
//! the derivatives of `u(s, t)`; each group is rational in the Jacobian
//! weight `rho = 1 - eps t kappa(s)` and carries an explicit power of the
//! thickness `eps`. `K0` accumulates all of them against the measure
//! `rho dt ds`, plus the two normal-derivative penalty terms `mu / eps^3` on
//! the traces; `Mb` holds the boundary mass with weight 1 on the outer trace
//! and the induced line element on the inner trace. The tensor basis is
//! Fourier in `s` and C1 cubic Hermite in `t`, so value and slope trace
//! degrees of freedom sit exactly where the boundary terms need them.
//!
//! Besides matrix assembly this module evaluates the same quadratic form
//! directly from quadrature-point derivative values
//! ([`thin_form_values`]): on nearly flat functions the derivative fields
//! are small pointwise, while the matrix route sums entries of size
//! `1/eps^4` down to a value of order one.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::curve::ArclengthCurve;
use crate::fourier::{RealFourierBasis, TrigSeries};

/// Jacobian weights at or below this value degenerate the coordinate map.
const MIN_JACOBIAN: f64 = 1e-6;

/// Default s-quadrature oversampling relative to the Fourier dimension.
const S_QUAD_FACTOR: usize = 4;

/// 6-point Gauss-Legendre nodes/weights on [-1, 1].
const GAUSS6: [(f64, f64); 6] = [
    (-0.932469514203152, 0.17132449237917036),
    (-0.6612093864662645, 0.3607615730481386),
    (-0.2386191860831969, 0.46791393457269104),
    (0.2386191860831969, 0.46791393457269104),
    (0.6612093864662645, 0.3607615730481386),
    (0.932469514203152, 0.17132449237917036),
];

/// Derivative-pair table of the Hessian-product expansion: `(s, t)`
/// derivative orders of the two factors. Off-diagonal pairs enter
/// symmetrically.
const TERMS: [((usize, usize), (usize, usize)); 9] = [
    ((2, 0), (2, 0)),
    ((1, 1), (1, 1)),
    ((0, 2), (0, 2)),
    ((1, 0), (2, 0)),
    ((2, 0), (0, 1)),
    ((1, 0), (1, 1)),
    ((1, 0), (0, 1)),
    ((1, 0), (1, 0)),
    ((0, 1), (0, 1)),
];

/// Coefficient of expansion term `term` at one quadrature point, with the
/// thickness already substituted (`eff = eps * g(s)`).
fn term_coefficient(term: usize, eff: f64, t: f64, kappa: f64, kappa_prime: f64, rho: f64) -> f64 {
    match term {
        0 => rho.powi(-4),
        1 => 2.0 / (eff * eff * rho * rho),
        2 => 1.0 / eff.powi(4),
        3 => eff * t * kappa_prime / rho.powi(5),
        4 => -kappa / (eff * rho.powi(3)),
        5 => 2.0 * kappa / (eff * rho.powi(3)),
        6 => -t * kappa * kappa_prime / rho.powi(4),
        7 => {
            (2.0 * kappa * kappa * rho * rho + eff * eff * t * t * kappa_prime * kappa_prime)
                / rho.powi(6)
        }
        8 => kappa * kappa / (eff * eff * rho * rho),
        _ => unreachable!(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FormError {
    #[error("Fermi map degenerate: min Jacobian weight {min_rho:.3e} <= {MIN_JACOBIAN:.0e}")]
    JacobianDegenerate { min_rho: f64 },
    #[error("epsilon {epsilon} exceeds max_epsilon = {max_epsilon} for this curve")]
    EpsilonTooLarge { epsilon: f64, max_epsilon: f64 },
    #[error("invalid thin-problem parameters: {0}")]
    InvalidParams(String),
    #[error("form i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed forms file: {0}")]
    BadFormat(String),
}

/// One instance of the shifted thin Steklov problem.
#[derive(Debug, Clone)]
pub struct ThinProblemSpec<'a> {
    pub curve: &'a ArclengthCurve,
    /// Tube thickness `eps`.
    pub epsilon: f64,
    /// Normal-derivative penalty `mu >= 0`.
    pub mu: f64,
    /// Positive spectral shift.
    pub b: f64,
    /// Optional thickness profile `g` (variable-width tube).
    pub thickness: Option<&'a TrigSeries>,
}

impl ThinProblemSpec<'_> {
    /// Checks the solver preconditions, including `eps <= max_epsilon`.
    /// Assembly itself only requires a nondegenerate Jacobian, so callers
    /// probing beyond the admissible range can skip this.
    pub fn validate(&self) -> Result<(), FormError> {
        self.validate_basic()?;
        let max_epsilon = self.curve.max_epsilon();
        if self.epsilon > max_epsilon {
            return Err(FormError::EpsilonTooLarge {
                epsilon: self.epsilon,
                max_epsilon,
            });
        }
        Ok(())
    }

    fn validate_basic(&self) -> Result<(), FormError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(FormError::InvalidParams(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(FormError::InvalidParams(format!(
                "mu must be nonnegative, got {}",
                self.mu
            )));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(FormError::InvalidParams(format!(
                "shift b must be positive, got {}",
                self.b
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    Value,
    Slope,
}

/// Trace location on the strip: `Outer` is `t = 0` (the boundary curve),
/// `Inner` is `t = 1` (the offset curve).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Outer,
    Inner,
}

/// Fourier x cubic-Hermite tensor basis with explicit DOF bookkeeping.
///
/// Flat index layout: `mode * (2 (N_t + 1)) + 2 * node + kind`, with kind 0
/// for the nodal value and 1 for the nodal t-derivative.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    /// Fourier mode count `M_s`; `n_s = 2 M_s + 1` tangential functions.
    pub fourier_modes: usize,
    /// Number of Hermite elements `N_t` on `[0, 1]`.
    pub elements: usize,
}

/// Builds the tensor basis. Requires `m_s >= 4` and `n_t >= 2`.
pub fn build_basis(m_s: usize, n_t: usize) -> Result<TensorBasis, FormError> {
    if m_s < 4 || n_t < 2 {
        return Err(FormError::InvalidParams(format!(
            "basis requires m_s >= 4 and n_t >= 2, got {m_s}, {n_t}"
        )));
    }
    Ok(TensorBasis {
        fourier_modes: m_s,
        elements: n_t,
    })
}

impl TensorBasis {
    pub fn n_s(&self) -> usize {
        2 * self.fourier_modes + 1
    }

    /// Hermite DOFs per Fourier mode: `2 (N_t + 1)`.
    pub fn t_dofs(&self) -> usize {
        2 * (self.elements + 1)
    }

    pub fn dim(&self) -> usize {
        self.n_s() * self.t_dofs()
    }

    pub fn flat_index(&self, mode: usize, node: usize, kind: DofKind) -> usize {
        debug_assert!(mode < self.n_s() && node <= self.elements);
        mode * self.t_dofs() + 2 * node + (kind == DofKind::Slope) as usize
    }

    /// Inverse of [`TensorBasis::flat_index`].
    pub fn dof_of(&self, flat: usize) -> (usize, usize, DofKind) {
        let mode = flat / self.t_dofs();
        let rem = flat % self.t_dofs();
        let kind = if rem.is_multiple_of(2) {
            DofKind::Value
        } else {
            DofKind::Slope
        };
        (mode, rem / 2, kind)
    }

    fn boundary_node(&self, boundary: Boundary) -> usize {
        match boundary {
            Boundary::Outer => 0,
            Boundary::Inner => self.elements,
        }
    }

    /// Value DOFs carrying the trace `u(s, .)` on a boundary, one per mode.
    pub fn trace_value_indices(&self, boundary: Boundary) -> Vec<usize> {
        let node = self.boundary_node(boundary);
        (0..self.n_s())
            .map(|p| self.flat_index(p, node, DofKind::Value))
            .collect()
    }

    /// Slope DOFs carrying the normal-derivative trace on a boundary.
    pub fn trace_slope_indices(&self, boundary: Boundary) -> Vec<usize> {
        let node = self.boundary_node(boundary);
        (0..self.n_s())
            .map(|p| self.flat_index(p, node, DofKind::Slope))
            .collect()
    }

    /// Coefficient vector of the function identically one.
    pub fn constant_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        for node in 0..=self.elements {
            v[self.flat_index(0, node, DofKind::Value)] = 1.0;
        }
        v
    }

    fn fourier(&self, length: f64) -> RealFourierBasis {
        RealFourierBasis::new(length, self.fourier_modes)
    }
}

/// Cubic Hermite shape values/derivatives at local coordinate `xi` of an
/// element of width `h`; slope DOFs store the physical t-derivative.
fn hermite_jet(xi: f64, h: f64) -> [[f64; 4]; 3] {
    let (x2, x3) = (xi * xi, xi * xi * xi);
    [
        [
            1.0 - 3.0 * x2 + 2.0 * x3,
            h * (xi - 2.0 * x2 + x3),
            3.0 * x2 - 2.0 * x3,
            h * (x3 - x2),
        ],
        [
            (-6.0 * xi + 6.0 * x2) / h,
            1.0 - 4.0 * xi + 3.0 * x2,
            (6.0 * xi - 6.0 * x2) / h,
            3.0 * x2 - 2.0 * xi,
        ],
        [
            (-6.0 + 12.0 * xi) / (h * h),
            (-4.0 + 6.0 * xi) / h,
            (6.0 - 12.0 * xi) / (h * h),
            (6.0 * xi - 2.0) / h,
        ],
    ]
}

/// Quadrature refinement knobs (used by robustness checks).
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// s-points per basis function; the grid has `s_factor * n_s` points.
    pub s_factor: usize,
    /// Subdivisions of each Hermite element for the 6-point Gauss rule.
    pub t_refine: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            s_factor: S_QUAD_FACTOR,
            t_refine: 1,
        }
    }
}

/// Geometry and basis tables shared by assembly and form evaluation.
struct StripTables {
    s_points: Vec<f64>,
    s_weight: f64,
    kappa: Vec<f64>,
    kappa_prime: Vec<f64>,
    /// Effective thickness `eps * g(s)`.
    eff: Vec<f64>,
    /// Measure factor `g(s)` multiplying `rho dt ds`.
    g: Vec<f64>,
    /// Inner-boundary line element weight.
    inner_weight: Vec<f64>,
    /// Normal-derivative penalty scale per boundary, per s-point.
    pen_outer: Vec<f64>,
    pen_inner: Vec<f64>,
    /// Fourier tables, orders 0..=2, each `n_s x Q_s`.
    psi: Vec<DMatrix<f64>>,
    psi_t: Vec<DMatrix<f64>>,
    /// Per t-point: (element, t, weight, hermite jet).
    t_points: Vec<(usize, f64, f64, [[f64; 4]; 3])>,
    min_rho: f64,
}

fn build_tables(
    spec: &ThinProblemSpec,
    basis: &TensorBasis,
    quad: QuadratureOptions,
) -> Result<StripTables, FormError> {
    spec.validate_basic()?;
    if quad.s_factor < 2 || quad.t_refine < 1 {
        return Err(FormError::InvalidParams(
            "quadrature options out of range".into(),
        ));
    }
    let curve = spec.curve;
    let fourier = basis.fourier(curve.perimeter);
    let q_s = quad.s_factor * basis.n_s();
    let (s_points, s_weight) = fourier.uniform_grid(q_s);

    let kappa: Vec<f64> = s_points.iter().map(|&s| curve.eval_kappa(s)).collect();
    let kappa_prime: Vec<f64> = s_points
        .iter()
        .map(|&s| curve.eval_kappa_prime(s))
        .collect();
    let (g, g_prime): (Vec<f64>, Vec<f64>) = match spec.thickness {
        Some(profile) => {
            if (profile.period - curve.perimeter).abs() > 1e-9 * curve.perimeter {
                return Err(FormError::InvalidParams(
                    "thickness profile period does not match the curve perimeter".into(),
                ));
            }
            s_points
                .iter()
                .map(|&s| (profile.eval(s), profile.eval_deriv(s)))
                .unzip()
        }
        None => (vec![1.0; q_s], vec![0.0; q_s]),
    };
    if let Some(min) = g.iter().copied().reduce(f64::min) {
        if min <= 0.0 {
            return Err(FormError::InvalidParams(format!(
                "thickness profile must be strictly positive (min {min:.3e})"
            )));
        }
    }

    let eff: Vec<f64> = g.iter().map(|&gi| spec.epsilon * gi).collect();
    // induced line element of the inner offset curve; reduces to 1 - eps kappa
    // for unit thickness
    let inner_weight: Vec<f64> = (0..q_s)
        .map(|i| {
            if spec.thickness.is_some() {
                let tangential = 1.0 - eff[i] * kappa[i];
                tangential.hypot(spec.epsilon * g_prime[i])
            } else {
                1.0 - spec.epsilon * kappa[i]
            }
        })
        .collect();
    let pen_outer: Vec<f64> = (0..q_s)
        .map(|i| spec.mu / (spec.epsilon * eff[i] * eff[i]))
        .collect();
    let pen_inner: Vec<f64> = (0..q_s).map(|i| pen_outer[i] * inner_weight[i]).collect();

    let psi = fourier.tables(&s_points, 2);
    let psi_t = psi.iter().map(|m| m.transpose()).collect();

    let h = 1.0 / basis.elements as f64;
    let mut t_points = Vec::with_capacity(basis.elements * quad.t_refine * GAUSS6.len());
    for e in 0..basis.elements {
        for sub in 0..quad.t_refine {
            for &(x, w) in &GAUSS6 {
                let xi = (sub as f64 + 0.5 * (x + 1.0)) / quad.t_refine as f64;
                let t = (e as f64 + xi) * h;
                let weight = 0.5 * w * h / quad.t_refine as f64;
                t_points.push((e, t, weight, hermite_jet(xi, h)));
            }
        }
    }

    let mut min_rho = f64::MAX;
    for i in 0..q_s {
        for &(_, t, _, _) in &t_points {
            min_rho = min_rho.min(1.0 - eff[i] * t * kappa[i]);
        }
        // inner boundary weight participates in the boundary integrals
        min_rho = min_rho.min(1.0 - eff[i] * kappa[i]);
    }
    if min_rho <= MIN_JACOBIAN {
        return Err(FormError::JacobianDegenerate { min_rho });
    }

    Ok(StripTables {
        s_points,
        s_weight,
        kappa,
        kappa_prime,
        eff,
        g,
        inner_weight,
        pen_outer,
        pen_inner,
        psi,
        psi_t,
        t_points,
        min_rho,
    })
}

/// Assembled quadratic forms of the shifted thin problem.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    /// Volume Hessian form plus the normal-derivative penalties.
    pub k0: DMatrix<f64>,
    /// Boundary trace mass (outer weight 1, inner weight `1 - eps kappa`).
    pub mb: DMatrix<f64>,
    pub meta: FormMetadata,
}

#[derive(Debug, Clone)]
pub struct FormMetadata {
    pub dim: usize,
    pub fourier_modes: usize,
    pub elements: usize,
    pub epsilon: f64,
    pub mu: f64,
    pub b: f64,
    pub s_quad_points: usize,
    pub t_quad_points: usize,
    pub min_jacobian: f64,
}

/// Assembles `K0` and `Mb` with the default quadrature.
pub fn assemble_thin_form(
    spec: &ThinProblemSpec,
    basis: &TensorBasis,
) -> Result<AssembledForms, FormError> {
    assemble_thin_form_with(spec, basis, QuadratureOptions::default())
}

/// Assembles `K0` and `Mb` with explicit quadrature options.
pub fn assemble_thin_form_with(
    spec: &ThinProblemSpec,
    basis: &TensorBasis,
    quad: QuadratureOptions,
) -> Result<AssembledForms, FormError> {
    let tables = build_tables(spec, basis, quad)?;
    let n = basis.dim();
    let n_s = basis.n_s();
    let nt = basis.t_dofs();
    let q_s = tables.s_points.len();

    let mut k0 = DMatrix::zeros(n, n);
    let mut coeff = vec![0.0; q_s];

    for &(e, t, wt, ref jet) in &tables.t_points {
        for (term, &((sa, ta), (sb, tb))) in TERMS.iter().enumerate() {
            for (i, slot) in coeff.iter_mut().enumerate() {
                let rho = 1.0 - tables.eff[i] * t * tables.kappa[i];
                let c = term_coefficient(
                    term,
                    tables.eff[i],
                    t,
                    tables.kappa[i],
                    tables.kappa_prime[i],
                    rho,
                );
                // measure rho dt ds with the thickness-profile Jacobian factor
                *slot = c * rho * tables.g[i] * tables.s_weight * wt;
            }
            let mut scaled = tables.psi[sa].clone();
            for (j, &c) in coeff.iter().enumerate() {
                scaled.column_mut(j).scale_mut(c);
            }
            let block = &scaled * &tables.psi_t[sb];
            let symmetric_pair = !(sa == sb && ta == tb);
            for (a, &fa) in jet[ta].iter().enumerate() {
                if fa == 0.0 {
                    continue;
                }
                let dof_a = 2 * e + a;
                for (bb, &fb) in jet[tb].iter().enumerate() {
                    let f = fa * fb;
                    if f == 0.0 {
                        continue;
                    }
                    let dof_b = 2 * e + bb;
                    for p in 0..n_s {
                        let row = p * nt + dof_a;
                        for q in 0..n_s {
                            k0[(row, q * nt + dof_b)] += f * block[(p, q)];
                        }
                    }
                    if symmetric_pair {
                        for p in 0..n_s {
                            let row = p * nt + dof_b;
                            for q in 0..n_s {
                                k0[(row, q * nt + dof_a)] += f * block[(q, p)];
                            }
                        }
                    }
                }
            }
        }
    }

    // boundary penalties and boundary mass
    let weighted_s_mass = |weights: &[f64]| -> DMatrix<f64> {
        let mut scaled = tables.psi[0].clone();
        for (j, &w) in weights.iter().enumerate() {
            scaled.column_mut(j).scale_mut(w * tables.s_weight);
        }
        &scaled * &tables.psi_t[0]
    };
    let pen0 = weighted_s_mass(&tables.pen_outer);
    let pen1 = weighted_s_mass(&tables.pen_inner);
    let mass0 = weighted_s_mass(&vec![1.0; q_s]);
    let mass1 = weighted_s_mass(&tables.inner_weight);

    let scatter = |target: &mut DMatrix<f64>, block: &DMatrix<f64>, indices: &[usize]| {
        for (a, &ia) in indices.iter().enumerate() {
            for (b, &ib) in indices.iter().enumerate() {
                target[(ia, ib)] += block[(a, b)];
            }
        }
    };
    scatter(&mut k0, &pen0, &basis.trace_slope_indices(Boundary::Outer));
    scatter(&mut k0, &pen1, &basis.trace_slope_indices(Boundary::Inner));

    let mut mb = DMatrix::zeros(n, n);
    scatter(&mut mb, &mass0, &basis.trace_value_indices(Boundary::Outer));
    scatter(&mut mb, &mass1, &basis.trace_value_indices(Boundary::Inner));

    let k0 = (&k0 + k0.transpose()) * 0.5;
    let mb = (&mb + mb.transpose()) * 0.5;

    Ok(AssembledForms {
        k0,
        mb,
        meta: FormMetadata {
            dim: n,
            fourier_modes: basis.fourier_modes,
            elements: basis.elements,
            epsilon: spec.epsilon,
            mu: spec.mu,
            b: spec.b,
            s_quad_points: q_s,
            t_quad_points: tables.t_points.len(),
            min_jacobian: tables.min_rho,
        },
    })
}

/// Values of the thin-problem quadratic forms at one coefficient vector.
#[derive(Debug, Clone, Copy)]
pub struct FormValues {
    /// `K0(u, u)`: Hessian energy plus normal-derivative penalties.
    pub energy: f64,
    /// `Mb(u, u)`: weighted boundary trace mass.
    pub boundary_mass: f64,
    /// Plain volume mass `integral of u^2` against the strip measure.
    pub volume_mass: f64,
}

/// Evaluates `K0(u,u)`, `Mb(u,u)` and the volume mass by quadrature on the
/// derivative fields of `u` rather than through assembled matrix entries.
/// Agrees with the matrix quadratic forms exactly up to rounding, but keeps
/// full relative accuracy on nearly flat functions where the matrix route
/// cancels catastrophically.
pub fn thin_form_values(
    spec: &ThinProblemSpec,
    basis: &TensorBasis,
    coeffs: &DVector<f64>,
) -> Result<FormValues, FormError> {
    thin_form_values_with(spec, basis, coeffs, QuadratureOptions::default())
}

pub fn thin_form_values_with(
    spec: &ThinProblemSpec,
    basis: &TensorBasis,
    coeffs: &DVector<f64>,
    quad: QuadratureOptions,
) -> Result<FormValues, FormError> {
    if coeffs.len() != basis.dim() {
        return Err(FormError::InvalidParams(format!(
            "coefficient vector has length {}, basis dimension is {}",
            coeffs.len(),
            basis.dim()
        )));
    }
    let tables = build_tables(spec, basis, quad)?;
    let n_s = basis.n_s();
    let nt = basis.t_dofs();
    let q_s = tables.s_points.len();

    let mut energy = 0.0;
    let mut volume_mass = 0.0;
    let mut profile = [vec![0.0; n_s], vec![0.0; n_s], vec![0.0; n_s]];
    // derivative fields on the s-grid, indexed by (s-order, t-order)
    let mut fields = vec![vec![0.0; q_s]; 6];
    const FIELD_IDS: [(usize, usize); 6] = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (0, 2)];
    let field_slot =
        |sa: usize, ta: usize| -> usize { FIELD_IDS.iter().position(|&f| f == (sa, ta)).unwrap() };

    for &(e, t, wt, ref jet) in &tables.t_points {
        for (order, prof) in profile.iter_mut().enumerate() {
            for (p, slot) in prof.iter_mut().enumerate() {
                let mut acc = 0.0;
                for a in 0..4 {
                    acc += coeffs[p * nt + 2 * e + a] * jet[order][a];
                }
                *slot = acc;
            }
        }
        for (slot, &(sa, ta)) in FIELD_IDS.iter().enumerate() {
            let psi = &tables.psi[sa];
            let prof = &profile[ta];
            for (i, v) in fields[slot].iter_mut().enumerate() {
                let mut acc = 0.0;
                for p in 0..n_s {
                    acc += prof[p] * psi[(p, i)];
                }
                *v = acc;
            }
        }
        for i in 0..q_s {
            let rho = 1.0 - tables.eff[i] * t * tables.kappa[i];
            let measure = rho * tables.g[i] * tables.s_weight * wt;
            let mut point = 0.0;
            for (term, &((sa, ta), (sb, tb))) in TERMS.iter().enumerate() {
                let c = term_coefficient(
                    term,
                    tables.eff[i],
                    t,
                    tables.kappa[i],
                    tables.kappa_prime[i],
                    rho,
                );
                let sym = if sa == sb && ta == tb { 1.0 } else { 2.0 };
                point += sym * c * fields[field_slot(sa, ta)][i] * fields[field_slot(sb, tb)][i];
            }
            energy += measure * point;
            let u = fields[field_slot(0, 0)][i];
            volume_mass += measure * u * u;
        }
    }

    // boundary contributions from the trace DOFs
    let fourier = basis.fourier(spec.curve.perimeter);
    let mode_coeffs =
        |indices: &[usize]| -> Vec<f64> { indices.iter().map(|&i| coeffs[i]).collect() };
    let outer_v = mode_coeffs(&basis.trace_value_indices(Boundary::Outer));
    let inner_v = mode_coeffs(&basis.trace_value_indices(Boundary::Inner));
    let outer_s = mode_coeffs(&basis.trace_slope_indices(Boundary::Outer));
    let inner_s = mode_coeffs(&basis.trace_slope_indices(Boundary::Inner));
    let mut boundary_mass = 0.0;
    for (i, &s) in tables.s_points.iter().enumerate() {
        let u0 = fourier.eval(&outer_v, s);
        let u1 = fourier.eval(&inner_v, s);
        let d0 = fourier.eval(&outer_s, s);
        let d1 = fourier.eval(&inner_s, s);
        boundary_mass += tables.s_weight * (u0 * u0 + tables.inner_weight[i] * u1 * u1);
        energy += tables.s_weight * (tables.pen_outer[i] * d0 * d0 + tables.pen_inner[i] * d1 * d1);
    }

    Ok(FormValues {
        energy,
        boundary_mass,
        volume_mass,
    })
}

/// Boundary traces of a coefficient vector, sampled on the curve grid. The
/// t-derivative traces are rescaled by `1/eps` (the physical
/// normal-derivative magnitude).
#[derive(Debug, Clone)]
pub struct Traces {
    pub outer_value: Vec<f64>,
    pub inner_value: Vec<f64>,
    pub outer_slope_over_eps: Vec<f64>,
    pub inner_slope_over_eps: Vec<f64>,
}

pub fn extract_traces(
    basis: &TensorBasis,
    curve: &ArclengthCurve,
    epsilon: f64,
    coeffs: &DVector<f64>,
) -> Traces {
    let fourier = basis.fourier(curve.perimeter);
    let pick = |indices: Vec<usize>| -> Vec<f64> {
        let mode_coeffs: Vec<f64> = indices.iter().map(|&i| coeffs[i]).collect();
        curve
            .grid
            .iter()
            .map(|&s| fourier.eval(&mode_coeffs, s))
            .collect()
    };
    let scale = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| x / epsilon).collect() };
    Traces {
        outer_value: pick(basis.trace_value_indices(Boundary::Outer)),
        inner_value: pick(basis.trace_value_indices(Boundary::Inner)),
        outer_slope_over_eps: scale(pick(basis.trace_slope_indices(Boundary::Outer))),
        inner_slope_over_eps: scale(pick(basis.trace_slope_indices(Boundary::Inner))),
    }
}

const FORMS_MAGIC: &[u8; 8] = b"BSTKFRM1";

/// Writes `K0` and `Mb` row-major as little-endian f64 behind a fixed
/// header; see the repository README for the exact layout.
pub fn write_forms_binary(path: &Path, forms: &AssembledForms) -> Result<(), FormError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(FORMS_MAGIC)?;
    for v in [
        forms.meta.dim as u64,
        forms.meta.fourier_modes as u64,
        forms.meta.elements as u64,
    ] {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in [forms.meta.epsilon, forms.meta.mu, forms.meta.b] {
        out.write_all(&v.to_le_bytes())?;
    }
    let n = forms.meta.dim;
    for matrix in [&forms.k0, &forms.mb] {
        for i in 0..n {
            for j in 0..n {
                out.write_all(&matrix[(i, j)].to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a forms file written by [`write_forms_binary`].
pub fn read_forms_binary(path: &Path) -> Result<AssembledForms, FormError> {
    let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != FORMS_MAGIC {
        return Err(FormError::BadFormat("bad magic".into()));
    }
    let mut u64buf = [0u8; 8];
    let mut read_u64 = |input: &mut dyn Read| -> Result<u64, FormError> {
        input.read_exact(&mut u64buf)?;
        Ok(u64::from_le_bytes(u64buf))
    };
    let dim = read_u64(&mut input)? as usize;
    let fourier_modes = read_u64(&mut input)? as usize;
    let elements = read_u64(&mut input)? as usize;
    if dim != (2 * fourier_modes + 1) * 2 * (elements + 1) {
        return Err(FormError::BadFormat("inconsistent dimensions".into()));
    }
    let mut f64buf = [0u8; 8];
    let mut read_f64 = |input: &mut dyn Read| -> Result<f64, FormError> {
        input.read_exact(&mut f64buf)?;
        Ok(f64::from_le_bytes(f64buf))
    };
    let epsilon = read_f64(&mut input)?;
    let mu = read_f64(&mut input)?;
    let b = read_f64(&mut input)?;
    let mut matrices = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = read_f64(&mut input)?;
            }
        }
        matrices.push(m);
    }
    let mb = matrices.pop().expect("two matrices");
    let k0 = matrices.pop().expect("two matrices");
    Ok(AssembledForms {
        k0,
        mb,
        meta: FormMetadata {
            dim,
            fourier_modes,
            elements,
            epsilon,
            mu,
            b,
            s_quad_points: 0,
            t_quad_points: 0,
            min_jacobian: f64::NAN,
        },
    })
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
            256,
        )
        .unwrap()
    }

    fn spec<'a>(curve: &'a ArclengthCurve, epsilon: f64, mu: f64, b: f64) -> ThinProblemSpec<'a> {
        ThinProblemSpec {
            curve,
            epsilon,
            mu,
            b,
            thickness: None,
        }
    }

    fn pseudo_random_vector(n: usize, seed: u64) -> DVector<f64> {
        let mut state = seed.max(1);
        DVector::from_fn(n, |_, _| {
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545F4914F6CDD1D) >> 11) as f64 / (1u64 << 52) as f64 - 0.5
        })
    }

    #[test]
    fn basis_dimensions_and_trace_sets() {
        let basis = build_basis(4, 2).unwrap();
        assert_eq!(basis.dim(), 54);
        let outer = basis.trace_value_indices(Boundary::Outer);
        assert_eq!(outer.len(), 9);
        for &i in &outer {
            let (_, node, kind) = basis.dof_of(i);
            assert_eq!(node, 0);
            assert_eq!(kind, DofKind::Value);
        }
        let inner_slopes = basis.trace_slope_indices(Boundary::Inner);
        assert_eq!(inner_slopes.len(), 9);
        for &i in &inner_slopes {
            let (_, node, kind) = basis.dof_of(i);
            assert_eq!(node, 2);
            assert_eq!(kind, DofKind::Slope);
        }
        for flat in 0..basis.dim() {
            let (mode, node, kind) = basis.dof_of(flat);
            assert_eq!(basis.flat_index(mode, node, kind), flat);
        }
        assert!(build_basis(3, 2).is_err());
        assert!(build_basis(4, 1).is_err());
    }

    #[test]
    fn constant_function_has_zero_energy() {
        let curve = unit_circle();
        let basis = build_basis(6, 4).unwrap();
        let spec = spec(&curve, 0.1, 1.0, 1.0);
        let forms = assemble_thin_form(&spec, &basis).unwrap();
        let c = basis.constant_vector();
        let quad_form = c.dot(&(&forms.k0 * &c));
        assert!(quad_form.abs() < 1e-10 * c.norm_squared());
        let values = thin_form_values(&spec, &basis, &c).unwrap();
        assert!(values.energy.abs() < 1e-12);
    }

    #[test]
    fn constant_boundary_mass_matches_gauss_bonnet_value() {
        // Mb(1,1) = 2L - 2 pi eps on the unit circle
        let curve = unit_circle();
        let basis = build_basis(6, 4).unwrap();
        let spec = spec(&curve, 0.1, 1.0, 1.0);
        let forms = assemble_thin_form(&spec, &basis).unwrap();
        let c = basis.constant_vector();
        let mass = c.dot(&(&forms.mb * &c));
        let expected = 2.0 * std::f64::consts::PI * 1.9;
        assert!((mass - expected).abs() < 1e-9, "mass {mass}");
        let values = thin_form_values(&spec, &basis, &c).unwrap();
        assert!((values.boundary_mass - expected).abs() < 1e-9);
    }

    #[test]
    fn volume_mass_of_constant_is_scaled_tube_area() {
        // area(omega_eps)/eps = L - pi eps for the unit circle
        let curve = unit_circle();
        let basis = build_basis(6, 4).unwrap();
        let spec = spec(&curve, 0.1, 1.0, 1.0);
        let values = thin_form_values(&spec, &basis, &basis.constant_vector()).unwrap();
        let expected = curve.perimeter - std::f64::consts::PI * 0.1;
        assert!((values.volume_mass - expected).abs() < 1e-9);
    }

    #[test]
    fn boundary_mass_rank_is_twice_the_fourier_count() {
        let curve = unit_circle();
        let basis = build_basis(5, 3).unwrap();
        let forms = assemble_thin_form(&spec(&curve, 0.1, 1.0, 1.0), &basis).unwrap();
        let eig = crate::spectra::sym_eigen(&forms.mb).unwrap();
        let floor = 1e-12 * eig.eigenvalues[basis.dim() - 1];
        let rank = eig.eigenvalues.iter().filter(|&&v| v > floor).count();
        assert_eq!(rank, 2 * basis.n_s());
        assert!(eig.eigenvalues[0] > -1e-12);
    }

    #[test]
    fn shifted_form_is_positive_definite() {
        let curve = unit_circle();
        let basis = build_basis(6, 4).unwrap();
        let forms = assemble_thin_form(&spec(&curve, 0.1, 1.0, 1.0), &basis).unwrap();
        let a = &forms.k0 + &forms.mb;
        assert!(crate::spectra::cholesky(&a).is_ok());
    }

    #[test]
    fn forms_are_symmetric_on_random_vectors() {
        let curve = ellipse();
        let basis = build_basis(6, 3).unwrap();
        let forms = assemble_thin_form(&spec(&curve, 0.05, 1.0, 1.0), &basis).unwrap();
        for seed in 1..=4 {
            let x = pseudo_random_vector(basis.dim(), seed);
            let y = pseudo_random_vector(basis.dim(), seed + 100);
            let xky = x.dot(&(&forms.k0 * &y));
            let ykx = y.dot(&(&forms.k0 * &x));
            assert!((xky - ykx).abs() <= 1e-11 * xky.abs().max(1.0));
        }
    }

    #[test]
    fn energy_is_nonnegative_on_random_vectors() {
        let curve = ellipse();
        let basis = build_basis(5, 3).unwrap();
        let forms = assemble_thin_form(&spec(&curve, 0.05, 1.0, 1.0), &basis).unwrap();
        for seed in 1..=6 {
            let x = pseudo_random_vector(basis.dim(), seed * 17);
            let e = x.dot(&(&forms.k0 * &x));
            assert!(e >= -1e-10 * x.norm_squared(), "energy {e}");
        }
    }

    #[test]
    fn quadratic_form_scales_quadratically() {
        let curve = unit_circle();
        let basis = build_basis(5, 3).unwrap();
        let forms = assemble_thin_form(&spec(&curve, 0.1, 1.0, 1.0), &basis).unwrap();
        let x = pseudo_random_vector(basis.dim(), 3);
        // a power-of-two factor scales every intermediate product exactly
        let alpha = 4.0;
        let e1 = x.dot(&(&forms.k0 * &x));
        let m1 = x.dot(&(&forms.mb * &x));
        let xs = &x * alpha;
        let e2 = xs.dot(&(&forms.k0 * &xs));
        let m2 = xs.dot(&(&forms.mb * &xs));
        assert_eq!(e2, alpha * alpha * e1);
        assert_eq!(m2, alpha * alpha * m1);
    }

    #[test]
    fn form_values_match_matrix_quadratic_forms() {
        let curve = ellipse();
        let basis = build_basis(5, 3).unwrap();
        let spec = spec(&curve, 0.05, 2.0, 1.0);
        let forms = assemble_thin_form(&spec, &basis).unwrap();
        let x = pseudo_random_vector(basis.dim(), 11);
        let values = thin_form_values(&spec, &basis, &x).unwrap();
        let through_matrix = x.dot(&(&forms.k0 * &x));
        let mass_matrix = x.dot(&(&forms.mb * &x));
        assert!((values.energy - through_matrix).abs() < 1e-9 * through_matrix.abs());
        assert!((values.boundary_mass - mass_matrix).abs() < 1e-11 * mass_matrix.abs());
    }

    #[test]
    fn quadrature_refinement_is_converged() {
        // needs enough s-points that the curvature tail of the rational
        // coefficients has decayed; 4x oversampling at m_s = 16 suffices
        let curve = ellipse();
        let basis = build_basis(16, 4).unwrap();
        let spec = spec(&curve, 0.1, 1.0, 1.0);
        let base = assemble_thin_form(&spec, &basis).unwrap();
        let fine = assemble_thin_form_with(
            &spec,
            &basis,
            QuadratureOptions {
                s_factor: 8,
                t_refine: 2,
            },
        )
        .unwrap();
        let scale = base.k0.abs().max();
        let drift = (&base.k0 - &fine.k0).abs().max();
        assert!(drift < 1e-9 * scale, "relative drift {}", drift / scale);
        let mass_drift = (&base.mb - &fine.mb).abs().max();
        assert!(mass_drift < 1e-9 * base.mb.abs().max());
    }

    #[test]
    fn jacobian_degenerates_beyond_the_bound() {
        let curve = unit_circle();
        let basis = build_basis(4, 2).unwrap();
        let result = assemble_thin_form(&spec(&curve, 1.2, 1.0, 1.0), &basis);
        assert!(matches!(result, Err(FormError::JacobianDegenerate { .. })));
    }

    #[test]
    fn epsilon_precondition_names_the_bound() {
        let curve = unit_circle();
        let spec = spec(&curve, 0.6, 1.0, 1.0);
        match spec.validate() {
            Err(FormError::EpsilonTooLarge { max_epsilon, .. }) => {
                assert!((max_epsilon - 0.5).abs() < 1e-12);
            }
            other => panic!("expected epsilon bound error, got {other:?}"),
        }
    }

    #[test]
    fn traces_of_constant_and_slope_unit_vectors() {
        let curve = unit_circle();
        let basis = build_basis(4, 2).unwrap();
        let eps = 0.1;
        let c = basis.constant_vector();
        let traces = extract_traces(&basis, &curve, eps, &c);
        for i in 0..curve.resolution() {
            assert!((traces.outer_value[i] - 1.0).abs() < 1e-14);
            assert!((traces.inner_value[i] - 1.0).abs() < 1e-14);
            assert!(traces.outer_slope_over_eps[i].abs() < 1e-14);
            assert!(traces.inner_slope_over_eps[i].abs() < 1e-14);
        }
        let mut slope = DVector::zeros(basis.dim());
        slope[basis.flat_index(0, 0, DofKind::Slope)] = 1.0;
        let traces = extract_traces(&basis, &curve, eps, &slope);
        for i in 0..curve.resolution() {
            assert!(traces.outer_value[i].abs() < 1e-14);
            assert!((traces.outer_slope_over_eps[i] - 1.0 / eps).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_dump_round_trips() {
        let curve = unit_circle();
        let basis = build_basis(4, 2).unwrap();
        let spec = spec(&curve, 0.1, 1.0, 1.0);
        let forms = assemble_thin_form(&spec, &basis).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("forms.bin");
        write_forms_binary(&path, &forms).unwrap();
        let back = read_forms_binary(&path).unwrap();
        assert_eq!(forms.k0, back.k0);
        assert_eq!(forms.mb, back.mb);
        assert_eq!(forms.meta.dim, back.meta.dim);
        assert_eq!(forms.meta.epsilon, back.meta.epsilon);
    }

    #[test]
    fn variable_thickness_reduces_to_unit_profile() {
        let curve = unit_circle();
        let basis = build_basis(5, 3).unwrap();
        let plain = assemble_thin_form(&spec(&curve, 0.1, 1.0, 1.0), &basis).unwrap();
        let ones = vec![1.0; curve.resolution()];
        let g = TrigSeries::fit(curve.perimeter, &ones);
        let with_profile = ThinProblemSpec {
            curve: &curve,
            epsilon: 0.1,
            mu: 1.0,
            b: 1.0,
            thickness: Some(&g),
        };
        let forms = assemble_thin_form(&with_profile, &basis).unwrap();
        let drift = (&forms.k0 - &plain.k0).abs().max();
        assert!(drift < 1e-9 * plain.k0.abs().max());
        assert!((&forms.mb - &plain.mb).abs().max() < 1e-11 * plain.mb.abs().max());
    }
}
