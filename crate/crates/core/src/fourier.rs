//! Real trigonometric basis {1, cos(2pi m s/L), sin(2pi m s/L)} on a period L.
//!
//! Shared by the 1D limit solver (its whole basis) and the 2D strip solver
//! (the tangential factor of the tensor basis). Basis functions are indexed
//! `0 -> 1`, `2m-1 -> cos(m..)`, `2m -> sin(m..)` for `m = 1..=modes`.

use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct RealFourierBasis {
    pub period: f64,
    pub modes: usize,
}

impl RealFourierBasis {
    pub fn new(period: f64, modes: usize) -> Self {
        assert!(period > 0.0);
        Self { period, modes }
    }

    /// Number of basis functions, `2 * modes + 1`.
    pub fn dim(&self) -> usize {
        2 * self.modes + 1
    }

    /// Angular frequency of basis function `i` (0 for the constant).
    fn omega(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * m as f64 / self.period
    }

    /// Tabulates the first `deriv + 1` derivative orders (0 = values) of all
    /// basis functions at `points`. Returns matrices of shape `len x points`.
    pub fn tables(&self, points: &[f64], deriv: usize) -> Vec<DMatrix<f64>> {
        let n = self.dim();
        let q = points.len();
        let mut out = vec![DMatrix::zeros(n, q); deriv + 1];
        for (j, &s) in points.iter().enumerate() {
            out[0][(0, j)] = 1.0;
            for m in 1..=self.modes {
                let w = self.omega(m);
                let (sin, cos) = (w * s).sin_cos();
                // derivative cycle of (cos, sin): each order multiplies by w
                // and rotates (c, s) -> (-s, c)
                let (mut c, mut s_) = (cos, sin);
                for table in out.iter_mut() {
                    table[(2 * m - 1, j)] = c;
                    table[(2 * m, j)] = s_;
                    let (nc, ns) = (-w * s_, w * c);
                    c = nc;
                    s_ = ns;
                }
            }
        }
        out
    }

    /// Evaluates the function with coefficient vector `coeffs` at `s`.
    pub fn eval(&self, coeffs: &[f64], s: f64) -> f64 {
        debug_assert_eq!(coeffs.len(), self.dim());
        let mut acc = coeffs[0];
        for m in 1..=self.modes {
            let (sin, cos) = (self.omega(m) * s).sin_cos();
            acc += coeffs[2 * m - 1] * cos + coeffs[2 * m] * sin;
        }
        acc
    }

    /// Evaluates the derivative of the function with coefficients `coeffs`.
    pub fn eval_deriv(&self, coeffs: &[f64], s: f64) -> f64 {
        debug_assert_eq!(coeffs.len(), self.dim());
        let mut acc = 0.0;
        for m in 1..=self.modes {
            let w = self.omega(m);
            let (sin, cos) = (w * s).sin_cos();
            acc += w * (coeffs[2 * m] * cos - coeffs[2 * m - 1] * sin);
        }
        acc
    }

    /// Uniform quadrature grid with `count` points and the common weight.
    pub fn uniform_grid(&self, count: usize) -> (Vec<f64>, f64) {
        let h = self.period / count as f64;
        ((0..count).map(|i| i as f64 * h).collect(), h)
    }
}

/// Interpolating trigonometric series through uniform periodic samples,
/// computed by a direct real DFT. Exact at the sample points; for even
/// sample counts the Nyquist cosine is kept with the halved weight that
/// interpolation requires.
#[derive(Debug, Clone)]
pub struct TrigSeries {
    pub period: f64,
    /// a[0] is the mean; a[m], b[m] pair with cos/sin of frequency m.
    pub cos_coeffs: Vec<f64>,
    pub sin_coeffs: Vec<f64>,
}

impl TrigSeries {
    pub fn fit(period: f64, samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n >= 2);
        let m_max = n / 2;
        let mut cos_coeffs = vec![0.0; m_max + 1];
        let mut sin_coeffs = vec![0.0; m_max + 1];
        let step = 2.0 * std::f64::consts::PI / n as f64;
        for m in 0..=m_max {
            let mut ca = 0.0;
            let mut sa = 0.0;
            for (i, &v) in samples.iter().enumerate() {
                let (sin, cos) = (step * (m * i % n) as f64).sin_cos();
                ca += v * cos;
                sa += v * sin;
            }
            let nyquist = n.is_multiple_of(2) && m == m_max;
            let scale = if m == 0 || nyquist { 1.0 } else { 2.0 };
            cos_coeffs[m] = scale * ca / n as f64;
            sin_coeffs[m] = scale * sa / n as f64;
        }
        Self {
            period,
            cos_coeffs,
            sin_coeffs,
        }
    }

    fn reduce(&self, s: f64) -> f64 {
        let r = s.rem_euclid(self.period);
        if r == self.period {
            0.0
        } else {
            r
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = self.reduce(s);
        let w0 = 2.0 * std::f64::consts::PI / self.period;
        let mut acc = self.cos_coeffs[0];
        for m in 1..self.cos_coeffs.len() {
            let (sin, cos) = (w0 * m as f64 * s).sin_cos();
            acc += self.cos_coeffs[m] * cos + self.sin_coeffs[m] * sin;
        }
        acc
    }

    pub fn eval_deriv(&self, s: f64) -> f64 {
        let s = self.reduce(s);
        let w0 = 2.0 * std::f64::consts::PI / self.period;
        let mut acc = 0.0;
        for m in 1..self.cos_coeffs.len() {
            let w = w0 * m as f64;
            let (sin, cos) = (w * s).sin_cos();
            acc += w * (self.sin_coeffs[m] * cos - self.cos_coeffs[m] * sin);
        }
        acc
    }
}
