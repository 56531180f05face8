//! Dense symmetric linear algebra: Cholesky factorization with a multi-RHS
//! solve interface, a symmetric eigensolver (Householder tridiagonalization
//! followed by implicit-shift QL iteration), and the boundary reduction that
//! compresses the inverse of the shifted stiffness matrix onto the boundary
//! trace degrees of freedom.

use nalgebra::{DMatrix, DVector};

use crate::fermiform::{Boundary, TensorBasis};

/// Relative floor applied to eigenvalues of the boundary trace mass before
/// taking its square root.
const W_SQRT_FLOOR: f64 = 1e-14;

/// Iteration cap per eigenvalue in the QL sweep.
const MAX_QL_ITER: usize = 30;

#[derive(Debug, thiserror::Error)]
pub enum SpectraError {
    /// The matrix is not positive definite; factorization broke down at the
    /// given pivot. For the thin-problem stiffness this signals loss of
    /// coercivity (eps too large or b too small).
    #[error("matrix not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("eigenvalue iteration failed to converge (index {index})")]
    ConvergenceFailure { index: usize },
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// Keeps a copy of the factored matrix so that solves can run one step of
/// residual refinement.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: DMatrix<f64>,
    matrix: DMatrix<f64>,
}

/// Factors a symmetric positive definite matrix as `L * L^T`.
pub fn cholesky(a: &DMatrix<f64>) -> Result<CholeskyFactor, SpectraError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky requires a square matrix");
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) {
            return Err(SpectraError::NotPositiveDefinite { pivot: j });
        }
        let dj = diag.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / dj;
        }
    }
    Ok(CholeskyFactor {
        lower: l,
        matrix: a.clone(),
    })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// The lower-triangular factor.
    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    fn substitute(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let l = &self.lower;
        let mut x = rhs.clone();
        for i in 0..n {
            let mut v = x[i];
            for k in 0..i {
                v -= l[(i, k)] * x[k];
            }
            x[i] = v / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in (i + 1)..n {
                v -= l[(k, i)] * x[k];
            }
            x[i] = v / l[(i, i)];
        }
        x
    }

    /// Solves `A x = rhs` with one step of residual refinement.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.substitute(rhs);
        let residual = rhs - &self.matrix * &x;
        x += self.substitute(&residual);
        x
    }

    /// Solves `A X = RHS` column by column.
    pub fn solve_many(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(rhs.nrows(), rhs.ncols());
        for j in 0..rhs.ncols() {
            let col = self.solve(&DVector::from_column_slice(rhs.column(j).as_slice()));
            out.set_column(j, &col);
        }
        out
    }
}

/// Eigenpairs of a symmetric matrix, ascending, with orthonormal vectors in
/// the columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition by Householder tridiagonalization and
/// implicit-shift QL iteration.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<SymEigen, SpectraError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eigen requires a square matrix");
    if n == 0 {
        return Ok(SymEigen {
            eigenvalues: DVector::zeros(0),
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    let mut z = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut z, &mut d, &mut e);
    ql_implicit(&mut d, &mut e, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| d[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &z.column(src));
    }
    Ok(SymEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Householder reduction to tridiagonal form with accumulation of the
/// orthogonal transformation in `z` (EISPACK tred2).
fn tridiagonalize(z: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..i {
                scale += z[(i, k)].abs();
            }
            if scale == 0.0 {
                e[i] = z[(i, l)];
            } else {
                for k in 0..i {
                    z[(i, k)] /= scale;
                    h += z[(i, k)] * z[(i, k)];
                }
                let f = z[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[(i, l)] = f - g;
                let mut f_acc = 0.0;
                for j in 0..i {
                    z[(j, i)] = z[(i, j)] / h;
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += z[(j, k)] * z[(i, k)];
                    }
                    for k in (j + 1)..i {
                        g_acc += z[(k, j)] * z[(i, k)];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * z[(i, j)];
                }
                let hh = f_acc / (h + h);
                for j in 0..i {
                    let f = z[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[(j, k)] -= f * e[k] + g * z[(i, k)];
                    }
                }
            }
        } else {
            e[i] = z[(i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[(i, k)] * z[(k, j)];
                }
                for k in 0..i {
                    z[(k, j)] -= g * z[(k, i)];
                }
            }
        }
        d[i] = z[(i, i)];
        z[(i, i)] = 1.0;
        for j in 0..i {
            z[(j, i)] = 0.0;
            z[(i, j)] = 0.0;
        }
    }
}

/// QL iteration with implicit Wilkinson shifts on a symmetric tridiagonal
/// matrix, rotating the accumulated transformation alongside (EISPACK tql2).
fn ql_implicit(d: &mut [f64], e: &mut [f64], z: &mut DMatrix<f64>) -> Result<(), SpectraError> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == MAX_QL_ITER {
                return Err(SpectraError::ConvergenceFailure { index: l });
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// The boundary-trace compression of the inverse shifted stiffness matrix:
/// `S = W^{1/2} T (K0 + b Mb)^{-1} T^T W^{1/2}` where `T` selects the trace
/// value DOFs and `W` is the weighted boundary mass restricted to them. The
/// nonzero eigenvalues of `S` are the nonzero eigenvalues of the discrete
/// resolvent of the shifted thin problem.
#[derive(Debug, Clone)]
pub struct ReducedBoundaryOperator {
    /// Symmetric `m x m` compression, `m = 2 * n_s`.
    pub matrix: DMatrix<f64>,
    /// Flat indices of the trace value DOFs, outer boundary then inner.
    pub trace_indices: Vec<usize>,
    /// Symmetric square root of the weighted boundary trace mass.
    pub w_sqrt: DMatrix<f64>,
}

impl ReducedBoundaryOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Scatters a reduced vector `W^{1/2} z` into a full-length right-hand
    /// side for the stiffness solve that lifts reduced eigenvectors.
    pub fn lift_rhs(&self, z: &DVector<f64>, full_dim: usize) -> DVector<f64> {
        let wz = &self.w_sqrt * z;
        let mut rhs = DVector::zeros(full_dim);
        for (local, &global) in self.trace_indices.iter().enumerate() {
            rhs[global] = wz[local];
        }
        rhs
    }
}

/// Builds the reduced boundary operator from the factored shifted stiffness
/// `K0 + b Mb` and the boundary mass `Mb`. One solve per trace DOF; the final
/// matrix is symmetrized.
pub fn boundary_reduce(
    factor: &CholeskyFactor,
    basis: &TensorBasis,
    mb: &DMatrix<f64>,
) -> Result<ReducedBoundaryOperator, SpectraError> {
    let mut trace_indices = basis.trace_value_indices(Boundary::Outer);
    trace_indices.extend(basis.trace_value_indices(Boundary::Inner));
    let m = trace_indices.len();
    let n = factor.dim();

    let mut w = DMatrix::zeros(m, m);
    for (a, &ia) in trace_indices.iter().enumerate() {
        for (b, &ib) in trace_indices.iter().enumerate() {
            w[(a, b)] = mb[(ia, ib)];
        }
    }
    let w_eig = sym_eigen(&w)?;
    let floor = W_SQRT_FLOOR * w_eig.eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v));
    let mut w_sqrt = DMatrix::zeros(m, m);
    for j in 0..m {
        let root = w_eig.eigenvalues[j].max(floor).sqrt();
        let col = w_eig.eigenvectors.column(j);
        for a in 0..m {
            for b in 0..m {
                w_sqrt[(a, b)] += root * col[a] * col[b];
            }
        }
    }

    let mut compressed = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut rhs = DVector::zeros(n);
        for (local, &global) in trace_indices.iter().enumerate() {
            rhs[global] = w_sqrt[(local, j)];
        }
        let x = factor.solve(&rhs);
        for i in 0..m {
            let mut acc = 0.0;
            for (local, &global) in trace_indices.iter().enumerate() {
                acc += w_sqrt[(i, local)] * x[global];
            }
            compressed[(i, j)] = acc;
        }
    }
    let symmetrized = (&compressed + compressed.transpose()) * 0.5;
    Ok(ReducedBoundaryOperator {
        matrix: symmetrized,
        trace_indices,
        w_sqrt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deterministic_rng(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed.max(1);
        move || {
            // xorshift64*, mapped to [-1, 1)
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            let bits = state.wrapping_mul(0x2545F4914F6CDD1D);
            (bits >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
        }
    }

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = deterministic_rng(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng());
        &b * b.transpose() + DMatrix::identity(n, n) * n as f64
    }

    #[test]
    fn identity_factors_to_identity() {
        let f = cholesky(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!(f.lower(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn hand_checked_two_by_two_factor() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let f = cholesky(&a).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2.0_f64.sqrt()]);
        assert!((f.lower() - expected).abs().max() < 1e-15);
    }

    #[test]
    fn indefinite_matrix_reports_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match cholesky(&a) {
            Err(SpectraError::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected pivot failure, got {other:?}"),
        }
    }

    #[test]
    fn reconstruction_matches_input() {
        let a = random_spd(60, 7);
        let f = cholesky(&a).unwrap();
        let diff = (f.lower() * f.lower().transpose() - &a).abs().max();
        assert!(diff < 1e-10 * a.abs().max());
    }

    #[test]
    fn solve_recovers_random_solution() {
        for n in [20, 100, 200] {
            let a = random_spd(n, 1234 + n as u64);
            let mut rng = deterministic_rng(99 + n as u64);
            let x = DVector::from_fn(n, |_, _| rng());
            let f = cholesky(&a).unwrap();
            let recovered = f.solve(&(&a * &x));
            assert!((&recovered - &x).norm() < 1e-9 * x.norm());
        }
    }

    #[test]
    fn multi_rhs_solve_matches_columnwise() {
        let n = 40;
        let a = random_spd(n, 5);
        let mut rng = deterministic_rng(17);
        let x = DMatrix::from_fn(n, 3, |_, _| rng());
        let f = cholesky(&a).unwrap();
        let recovered = f.solve_many(&(&a * &x));
        assert!((&recovered - &x).norm() < 1e-9 * x.norm());
    }

    #[test]
    fn eigen_diag_sorted_ascending() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[3.0, 1.0, 2.0]));
        let eig = sym_eigen(&a).unwrap();
        let expected = [1.0, 2.0, 3.0];
        for (got, want) in eig.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn eigen_offdiagonal_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let eig = sym_eigen(&a).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_contracts_on_random_symmetric() {
        let n = 50;
        let mut rng = deterministic_rng(42);
        let b = DMatrix::from_fn(n, n, |_, _| rng());
        let a = (&b + b.transpose()) * 0.5;
        let eig = sym_eigen(&a).unwrap();

        let trace: f64 = a.diagonal().iter().sum();
        let sum: f64 = eig.eigenvalues.iter().sum();
        assert!((trace - sum).abs() < 1e-9 * trace.abs().max(1.0));

        let norm = a.abs().max();
        for j in 0..n {
            let v = eig.eigenvectors.column(j);
            let residual = (&a * v - eig.eigenvalues[j] * v).norm();
            assert!(residual < 1e-9 * norm, "residual {residual} at {j}");
        }
        let gram = eig.eigenvectors.transpose() * &eig.eigenvectors;
        assert!((gram - DMatrix::identity(n, n)).abs().max() < 1e-10);
    }

    #[test]
    fn eigen_handles_clustered_values() {
        // double eigenvalue plus isolated one
        let q = {
            let mut rng = deterministic_rng(5);
            let b = DMatrix::from_fn(3, 3, |_, _| rng());
            let a = (&b + b.transpose()) * 0.5;
            sym_eigen(&a).unwrap().eigenvectors
        };
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, 2.0, 5.0]));
        let a = &q * d * q.transpose();
        let eig = sym_eigen(&a).unwrap();
        assert!((eig.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert!((eig.eigenvalues[1] - 2.0).abs() < 1e-12);
        assert!((eig.eigenvalues[2] - 5.0).abs() < 1e-12);
    }
}
