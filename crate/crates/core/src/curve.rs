//! Smooth closed planar curves in arclength parameterization.
//!
//! A [`CurveSpec`] describes the boundary in its natural parameter
//! `tau in [0, 2pi)`; [`build_arclength_curve`] reparameterizes it by
//! arclength, samples curvature and its derivative on a uniform grid, and
//! fits interpolating trigonometric series for off-grid evaluation. Input
//! curves are normalized to positive (counterclockwise) orientation, under
//! which the curvature of a circle with outward normal is positive and the
//! tube of width `eps` lies inside the enclosed region.

use serde::{Deserialize, Serialize};

use crate::fourier::TrigSeries;

/// Oversampling factor of the parameter grid used for arclength integration.
const ARCLENGTH_OVERSAMPLE: usize = 8;
/// Minimum admissible parametric speed `|gamma'|`.
const MIN_SPEED: f64 = 1e-10;
/// Maximum admissible endpoint mismatch of a parameterization.
const CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum CurveError {
    #[error("invalid curve spec: {0}")]
    InvalidSpec(String),
    #[error("degenerate curve: parametric speed {min_speed:.3e} below {MIN_SPEED:.0e}")]
    DegenerateCurve { min_speed: f64 },
    #[error("curve is not closed: endpoint gap {gap:.3e}")]
    NotClosed { gap: f64 },
}

/// Boundary curve described in its natural parameter on `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Circle {
        radius: f64,
    },
    Ellipse {
        semi_axis_a: f64,
        semi_axis_b: f64,
    },
    /// Truncated Fourier parameterization: coefficient `j` of each array
    /// multiplies `cos(j tau)` / `sin(j tau)`.
    Fourier {
        #[serde(default)]
        x_cos: Vec<f64>,
        #[serde(default)]
        x_sin: Vec<f64>,
        #[serde(default)]
        y_cos: Vec<f64>,
        #[serde(default)]
        y_sin: Vec<f64>,
    },
}

impl CurveSpec {
    pub fn validate(&self) -> Result<(), CurveError> {
        let ok_coeff = |v: &[f64]| v.iter().all(|c| c.is_finite());
        match self {
            CurveSpec::Circle { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(CurveError::InvalidSpec(format!(
                        "circle radius must be positive, got {radius}"
                    )));
                }
            }
            CurveSpec::Ellipse {
                semi_axis_a,
                semi_axis_b,
            } => {
                if !(semi_axis_a.is_finite() && *semi_axis_a > 0.0)
                    || !(semi_axis_b.is_finite() && *semi_axis_b > 0.0)
                {
                    return Err(CurveError::InvalidSpec(format!(
                        "ellipse semi-axes must be positive, got {semi_axis_a}, {semi_axis_b}"
                    )));
                }
            }
            CurveSpec::Fourier {
                x_cos,
                x_sin,
                y_cos,
                y_sin,
            } => {
                if !(ok_coeff(x_cos) && ok_coeff(x_sin) && ok_coeff(y_cos) && ok_coeff(y_sin)) {
                    return Err(CurveError::InvalidSpec(
                        "fourier coefficients must be finite".into(),
                    ));
                }
                let nontrivial = x_cos.iter().skip(1).any(|&c| c != 0.0)
                    || x_sin.iter().skip(1).any(|&c| c != 0.0)
                    || y_cos.iter().skip(1).any(|&c| c != 0.0)
                    || y_sin.iter().skip(1).any(|&c| c != 0.0);
                if !nontrivial {
                    return Err(CurveError::InvalidSpec(
                        "fourier curve has no oscillatory coefficients".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Derivatives of the parameterization at one parameter value, orders 0..=3.
#[derive(Debug, Clone, Copy)]
struct Jet {
    p: [f64; 2],
    d1: [f64; 2],
    d2: [f64; 2],
    d3: [f64; 2],
}

impl Jet {
    fn speed(&self) -> f64 {
        self.d1[0].hypot(self.d1[1])
    }

    /// Signed curvature (x'y'' - y'x'') / |gamma'|^3.
    fn kappa(&self) -> f64 {
        let num = self.d1[0] * self.d2[1] - self.d1[1] * self.d2[0];
        num / self.speed().powi(3)
    }

    /// d(kappa)/d(tau).
    fn kappa_dtau(&self) -> f64 {
        let speed = self.speed();
        let num = self.d1[0] * self.d2[1] - self.d1[1] * self.d2[0];
        let num_d = self.d1[0] * self.d3[1] - self.d1[1] * self.d3[0];
        let speed_d = (self.d1[0] * self.d2[0] + self.d1[1] * self.d2[1]) / speed;
        num_d / speed.powi(3) - 3.0 * num * speed_d / speed.powi(4)
    }

    /// d(speed)/d(tau), the leading trapezoid-error term of the arclength
    /// integrand.
    fn speed_dtau(&self) -> f64 {
        (self.d1[0] * self.d2[0] + self.d1[1] * self.d2[1]) / self.speed()
    }
}

/// Parametric evaluator with optional orientation reversal
/// `tau -> 2pi - tau`.
struct Evaluator<'a> {
    spec: &'a CurveSpec,
    reversed: bool,
}

impl Evaluator<'_> {
    fn jet(&self, tau: f64) -> Jet {
        let (t, sign) = if self.reversed {
            (2.0 * std::f64::consts::PI - tau, -1.0)
        } else {
            (tau, 1.0)
        };
        let mut jet = self.raw_jet(t);
        // chain rule through tau -> 2pi - tau flips odd derivatives
        for c in 0..2 {
            jet.d1[c] *= sign;
            jet.d3[c] *= sign;
        }
        jet
    }

    fn raw_jet(&self, t: f64) -> Jet {
        let (sin, cos) = t.sin_cos();
        match self.spec {
            CurveSpec::Circle { radius } => {
                let r = *radius;
                Jet {
                    p: [r * cos, r * sin],
                    d1: [-r * sin, r * cos],
                    d2: [-r * cos, -r * sin],
                    d3: [r * sin, -r * cos],
                }
            }
            CurveSpec::Ellipse {
                semi_axis_a: a,
                semi_axis_b: b,
            } => Jet {
                p: [a * cos, b * sin],
                d1: [-a * sin, b * cos],
                d2: [-a * cos, -b * sin],
                d3: [a * sin, -b * cos],
            },
            CurveSpec::Fourier {
                x_cos,
                x_sin,
                y_cos,
                y_sin,
            } => {
                let mut jet = Jet {
                    p: [0.0; 2],
                    d1: [0.0; 2],
                    d2: [0.0; 2],
                    d3: [0.0; 2],
                };
                let harmonics = x_cos
                    .len()
                    .max(x_sin.len())
                    .max(y_cos.len())
                    .max(y_sin.len());
                for j in 0..harmonics {
                    let w = j as f64;
                    let (sj, cj) = (w * t).sin_cos();
                    let xc = x_cos.get(j).copied().unwrap_or(0.0);
                    let xs = x_sin.get(j).copied().unwrap_or(0.0);
                    let yc = y_cos.get(j).copied().unwrap_or(0.0);
                    let ys = y_sin.get(j).copied().unwrap_or(0.0);
                    jet.p[0] += xc * cj + xs * sj;
                    jet.p[1] += yc * cj + ys * sj;
                    jet.d1[0] += w * (xs * cj - xc * sj);
                    jet.d1[1] += w * (ys * cj - yc * sj);
                    jet.d2[0] += w * w * (-xc * cj - xs * sj);
                    jet.d2[1] += w * w * (-yc * cj - ys * sj);
                    jet.d3[0] += w * w * w * (xc * sj - xs * cj);
                    jet.d3[1] += w * w * w * (yc * sj - ys * cj);
                }
                jet
            }
        }
    }
}

/// Closed planar curve resampled to uniform arclength.
#[derive(Debug, Clone)]
pub struct ArclengthCurve {
    /// Total length `L`.
    pub perimeter: f64,
    /// Uniform arclength samples `s_i in [0, L)`.
    pub grid: Vec<f64>,
    /// Curvature at the grid points.
    pub kappa: Vec<f64>,
    /// Arclength derivative of the curvature at the grid points.
    pub kappa_prime: Vec<f64>,
    /// Interpolating trigonometric series of the curvature samples.
    pub spectral_kappa: TrigSeries,
    /// Interpolating trigonometric series of the curvature-derivative samples.
    pub spectral_kappa_prime: TrigSeries,
}

impl ArclengthCurve {
    pub fn resolution(&self) -> usize {
        self.grid.len()
    }

    /// Periodic curvature evaluation; exact at the grid points.
    pub fn eval_kappa(&self, s: f64) -> f64 {
        self.spectral_kappa.eval(s)
    }

    /// Periodic curvature-rate evaluation; exact at the grid points.
    pub fn eval_kappa_prime(&self, s: f64) -> f64 {
        self.spectral_kappa_prime.eval(s)
    }

    /// Conservative admissible thickness: `0.5 / max(max_s kappa, 1/L)`,
    /// which keeps the Fermi weight `1 - eps t kappa >= 1/2` on the strip.
    pub fn max_epsilon(&self) -> f64 {
        let kappa_max = self.kappa.iter().fold(f64::MIN, |m, &k| m.max(k));
        0.5 / kappa_max.max(1.0 / self.perimeter)
    }

    /// `| integral of kappa ds - 2pi |` by the trapezoid rule on the grid.
    pub fn gauss_bonnet_residual(&self) -> f64 {
        let h = self.perimeter / self.resolution() as f64;
        let total: f64 = self.kappa.iter().sum::<f64>() * h;
        (total - 2.0 * std::f64::consts::PI).abs()
    }

    pub fn kappa_range(&self) -> (f64, f64) {
        let lo = self.kappa.iter().fold(f64::MAX, |m, &k| m.min(k));
        let hi = self.kappa.iter().fold(f64::MIN, |m, &k| m.max(k));
        (lo, hi)
    }
}

/// Builds the arclength form of a curve.
///
/// The cumulative arclength is integrated by the trapezoid rule on an
/// oversampled parameter grid with the Euler-Maclaurin endpoint-derivative
/// correction, inverted through a monotone cubic interpolant, and each grid
/// parameter is polished by bracketed Newton steps against locally
/// Gauss-integrated arclength.
pub fn build_arclength_curve(
    spec: &CurveSpec,
    resolution: usize,
) -> Result<ArclengthCurve, CurveError> {
    spec.validate()?;
    if resolution < 64 {
        return Err(CurveError::InvalidSpec(format!(
            "resolution must be at least 64, got {resolution}"
        )));
    }

    let two_pi = 2.0 * std::f64::consts::PI;
    let mut eval = Evaluator {
        spec,
        reversed: false,
    };

    let gap = {
        let a = eval.jet(0.0).p;
        let b = eval.jet(two_pi).p;
        (a[0] - b[0]).hypot(a[1] - b[1])
    };
    if gap > CLOSURE_TOL {
        return Err(CurveError::NotClosed { gap });
    }

    let count = ARCLENGTH_OVERSAMPLE * resolution;
    let h = two_pi / count as f64;
    let taus: Vec<f64> = (0..=count).map(|j| j as f64 * h).collect();

    let mut jets: Vec<Jet> = taus.iter().map(|&t| eval.jet(t)).collect();
    let min_speed = jets.iter().map(Jet::speed).fold(f64::MAX, f64::min);
    if min_speed < MIN_SPEED {
        return Err(CurveError::DegenerateCurve { min_speed });
    }

    // normalize to counterclockwise orientation (positive signed area)
    let signed_area: f64 = jets
        .iter()
        .take(count)
        .map(|j| 0.5 * (j.p[0] * j.d1[1] - j.p[1] * j.d1[0]) * h)
        .sum();
    if signed_area < 0.0 {
        eval.reversed = true;
        jets = taus.iter().map(|&t| eval.jet(t)).collect();
    }

    // corrected cumulative trapezoid: the h^2/12 (f'(0) - f'(tau)) term
    // removes the leading non-periodic error of the partial integrals
    let speeds: Vec<f64> = jets.iter().map(Jet::speed).collect();
    let fprime0 = jets[0].speed_dtau();
    let mut arclen = vec![0.0; count + 1];
    for j in 1..=count {
        arclen[j] = arclen[j - 1] + 0.5 * h * (speeds[j - 1] + speeds[j]);
    }
    let correction = h * h / 12.0;
    for j in 1..=count {
        arclen[j] += correction * (fprime0 - jets[j].speed_dtau());
    }
    let perimeter = arclen[count];

    let slopes = monotone_cubic_slopes(&arclen, &taus);

    let grid: Vec<f64> = (0..resolution)
        .map(|i| i as f64 * perimeter / resolution as f64)
        .collect();
    let mut kappa = Vec::with_capacity(resolution);
    let mut kappa_prime = Vec::with_capacity(resolution);
    for &s in &grid {
        let tau = invert_arclength(&eval, &arclen, &taus, &slopes, s);
        let jet = eval.jet(tau);
        kappa.push(jet.kappa());
        kappa_prime.push(jet.kappa_dtau() / jet.speed());
    }

    let spectral_kappa = TrigSeries::fit(perimeter, &kappa);
    let spectral_kappa_prime = TrigSeries::fit(perimeter, &kappa_prime);

    Ok(ArclengthCurve {
        perimeter,
        grid,
        kappa,
        kappa_prime,
        spectral_kappa,
        spectral_kappa_prime,
    })
}

/// Fritsch-Carlson monotone slopes for the interpolant `s -> tau`.
fn monotone_cubic_slopes(s: &[f64], tau: &[f64]) -> Vec<f64> {
    let n = s.len();
    let mut d = vec![0.0; n - 1];
    for j in 0..n - 1 {
        d[j] = (tau[j + 1] - tau[j]) / (s[j + 1] - s[j]);
    }
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for j in 1..n - 1 {
        if d[j - 1] * d[j] <= 0.0 {
            m[j] = 0.0;
        } else {
            let h0 = s[j] - s[j - 1];
            let h1 = s[j + 1] - s[j];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            m[j] = (w1 + w2) / (w1 / d[j - 1] + w2 / d[j]);
        }
    }
    m
}

fn hermite_guess(s: &[f64], tau: &[f64], m: &[f64], j: usize, x: f64) -> f64 {
    let h = s[j + 1] - s[j];
    let t = (x - s[j]) / h;
    let (t2, t3) = (t * t, t * t * t);
    tau[j] * (1.0 - 3.0 * t2 + 2.0 * t3)
        + m[j] * h * (t - 2.0 * t2 + t3)
        + tau[j + 1] * (3.0 * t2 - 2.0 * t3)
        + m[j + 1] * h * (t3 - t2)
}

/// 5-point Gauss-Legendre nodes/weights on [-1, 1].
const GAUSS5: [(f64, f64); 5] = [
    (-0.906179845938664, 0.23692688505618908),
    (-0.5384693101056831, 0.47862867049936647),
    (0.0, 0.5688888888888889),
    (0.5384693101056831, 0.47862867049936647),
    (0.906179845938664, 0.23692688505618908),
];

fn local_arclength(eval: &Evaluator, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GAUSS5
        .iter()
        .map(|&(x, w)| w * eval.jet(mid + half * x).speed())
        .sum::<f64>()
        * half
}

/// Inverts `s(tau) = target`: bracket by binary search on the cumulative
/// table, start from the monotone cubic interpolant, then take safeguarded
/// Newton steps on the locally Gauss-integrated arclength.
fn invert_arclength(
    eval: &Evaluator,
    arclen: &[f64],
    taus: &[f64],
    slopes: &[f64],
    target: f64,
) -> f64 {
    let j = match arclen.binary_search_by(|v| v.partial_cmp(&target).unwrap()) {
        Ok(j) => return taus[j],
        Err(j) => (j - 1).min(taus.len() - 2),
    };
    let mut tau = hermite_guess(arclen, taus, slopes, j, target);
    let (lo, hi) = (taus[j], taus[j + 1]);
    tau = tau.clamp(lo, hi);
    for _ in 0..3 {
        let f = arclen[j] + local_arclength(eval, taus[j], tau) - target;
        let step = f / eval.jet(tau).speed();
        tau = (tau - step).clamp(lo - (hi - lo), hi + (hi - lo));
    }
    tau
}
