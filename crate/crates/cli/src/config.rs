//! JSON run configuration. Unknown keys are rejected; defaults are
//! documented in the repository README and echoed into reports.

use serde::{Deserialize, Serialize};
use steklov_thin::curve::CurveSpec;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Seed for the randomized spot checks of `selftest`.
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub curve: CurveSpec,
    /// Arclength grid resolution of the curve.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub limit: Option<LimitSection>,
    #[serde(default)]
    pub thin: Option<ThinSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSection {
    #[serde(default = "default_limit_modes")]
    pub modes: usize,
    /// Largest eigenvalue index reported (rows 0..=k_max).
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Spectral shift; 0 solves the plain limit problem.
    #[serde(default)]
    pub b: f64,
    /// Override of the mass-pairing weight (default 2, or 1 with a
    /// thickness profile).
    #[serde(default)]
    pub mass_factor: Option<f64>,
    #[serde(default)]
    pub thickness: Option<ThicknessSection>,
}

impl Default for LimitSection {
    fn default() -> Self {
        Self {
            modes: default_limit_modes(),
            k_max: default_k_max(),
            b: 0.0,
            mass_factor: None,
            thickness: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinSection {
    pub epsilon: f64,
    #[serde(default = "default_one")]
    pub mu: f64,
    #[serde(default = "default_one")]
    pub b: f64,
    #[serde(default = "default_m_s")]
    pub m_s: usize,
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Optional binary dump of the assembled forms.
    #[serde(default)]
    pub dump_forms: Option<String>,
    #[serde(default)]
    pub thickness: Option<ThicknessSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Strictly decreasing thicknesses; omitted selects the default grid
    /// scaled by `max_epsilon / 0.5`.
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default = "default_one")]
    pub mu: f64,
    #[serde(default = "default_one")]
    pub b: f64,
    #[serde(default = "default_m_s")]
    pub m_s: usize,
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    #[serde(default = "default_limit_modes")]
    pub limit_modes: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            epsilons: None,
            mu: 1.0,
            b: 1.0,
            m_s: default_m_s(),
            n_t: default_n_t(),
            limit_modes: default_limit_modes(),
            k_max: default_k_max(),
        }
    }
}

/// Thickness profile in arclength harmonics:
/// `g(s) = constant + sum_j (cos[j] cos(2 pi (j+1) s / L) + sin[j] ...)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThicknessSection {
    #[serde(default = "default_one")]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

fn default_seed() -> u64 {
    42
}

fn default_resolution() -> usize {
    512
}

fn default_limit_modes() -> usize {
    48
}

fn default_k_max() -> usize {
    8
}

fn default_one() -> f64 {
    1.0
}

fn default_m_s() -> usize {
    24
}

fn default_n_t() -> usize {
    8
}

/// Loads and validates a configuration file.
pub fn load(path: &std::path::Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| format!("config parse error: {e}"))?;
    if config.version != CONFIG_VERSION {
        return Err(format!(
            "unsupported config version {} (expected {CONFIG_VERSION})",
            config.version
        ));
    }
    Ok(config)
}
