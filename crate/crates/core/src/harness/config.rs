//! Experiment configuration: a flat TOML file plus `key=value` overrides.
//!
//! ```toml
//! name = "fixed-c"
//! analysis = "estimators"      # estimators | lan
//! kernel = "laplace"           # laplace | gaussian
//! beta = 2.0                   # or theta0 = 0.5
//! model = "gpp"                # gpp | neighborhood
//! regime = "fixed"             # fixed | bias | lan
//! c = -0.1                     # fixed regime
//! sample_sizes = [20000]
//! replications = 500
//! seed = 4
//! ```
//!
//! Every key has a default; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::generator::{build_generator, GeneratorSpec, DEFAULT_MIXING_RATE};
use crate::kernel::{ScaleParam, SmoothingKernel, ThetaParam};
use crate::lan::{plan_thresholds, RatePlan, Regime, ThresholdLaw};
use crate::processes::{threshold_limit, YDistribution, DEFAULT_CUTOFF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    /// Ψ̂, β̂, ϑ̂, ϑ* against their limit laws.
    Estimators,
    /// Central sequence, log-likelihood expansion and efficiency.
    Lan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gpp,
    Neighborhood,
}

fn default_name() -> String {
    "experiment".into()
}
fn default_kernel() -> String {
    "laplace".into()
}
fn default_mixing_rate() -> f64 {
    DEFAULT_MIXING_RATE
}
fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}
fn default_y() -> String {
    "exponential".into()
}
fn default_sizes() -> Vec<usize> {
    vec![10_000]
}
fn default_replications() -> usize {
    100
}
fn default_seed() -> u64 {
    1
}
fn default_estimators() -> Vec<String> {
    vec!["psi-hat".into(), "beta-hat".into(), "theta-hat".into()]
}
fn default_xi() -> Vec<f64> {
    vec![-1.0, 1.0, 2.0]
}
fn default_k_draws() -> usize {
    1_000_000
}
fn default_calibration_draws() -> usize {
    20_000
}
fn default_calibration_range() -> [f64; 2] {
    [0.05, 0.95]
}
fn default_grid() -> usize {
    crate::grid::DEFAULT_INTERVALS
}
fn default_mean_se() -> f64 {
    3.0
}
fn default_variance_tolerance() -> f64 {
    0.15
}
fn default_residual_tolerance() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_analysis")]
    pub analysis: Analysis,
    #[serde(default = "default_kernel")]
    pub kernel: String,
    /// Exactly one of `beta` and `theta0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(default = "default_mixing_rate")]
    pub mixing_rate: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default = "default_model")]
    pub model: ModelKind,
    /// Y for the neighborhood model: uniform | exponential | expansion.
    #[serde(default = "default_y")]
    pub y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_knot: Option<f64>,
    #[serde(default = "default_regime")]
    pub regime: Regime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    /// Remainder order of the density-ratio expansion; defaults to δ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default = "default_sizes")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Grid intervals for path output; exceedances of a constant threshold
    /// do not depend on it.
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    #[serde(default = "default_xi")]
    pub xi: Vec<f64>,
    /// Draws for the K(−1) Monte Carlo oracle.
    #[serde(default = "default_k_draws")]
    pub k_draws: usize,
    #[serde(default = "default_calibration_draws")]
    pub calibration_draws: usize,
    #[serde(default = "default_calibration_range")]
    pub calibration_range: [f64; 2],
    #[serde(default = "default_mean_se")]
    pub mean_se_multiple: f64,
    #[serde(default = "default_variance_tolerance")]
    pub variance_tolerance: f64,
    #[serde(default = "default_residual_tolerance")]
    pub residual_tolerance: f64,
    /// 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
}

fn default_analysis() -> Analysis {
    Analysis::Estimators
}
fn default_model() -> ModelKind {
    ModelKind::Gpp
}
fn default_regime() -> Regime {
    Regime::Fixed
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("").expect("all keys have defaults")
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_override(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| config_err(format!("override '{item}' is not key=value")))?;
            table.insert(key.trim().to_string(), parse_override(value.trim()));
        }
        let config: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn smoothing_kernel(&self) -> Result<SmoothingKernel> {
        SmoothingKernel::from_name(&self.kernel).map_err(|e| config_err(e.to_string()))
    }

    /// (β, ϑ₀) of the null model.
    pub fn parameters(&self) -> Result<(ScaleParam, ThetaParam)> {
        let kernel = self.smoothing_kernel()?;
        match (self.beta, self.theta0) {
            (Some(b), None) => {
                let beta = ScaleParam::new(b).map_err(|e| config_err(e.to_string()))?;
                Ok((beta, kernel.theta_from_beta(beta)))
            }
            (None, Some(t)) => {
                let theta = ThetaParam::new(t).map_err(|e| config_err(e.to_string()))?;
                Ok((kernel.beta_from_theta(theta), theta))
            }
            _ => Err(config_err("set exactly one of beta and theta0")),
        }
    }

    pub fn generator(&self) -> Result<GeneratorSpec> {
        let (beta, _) = self.parameters()?;
        build_generator(&self.smoothing_kernel()?, beta.value(), self.mixing_rate)
    }

    pub fn y_distribution(&self) -> Result<YDistribution> {
        if self.model == ModelKind::Gpp {
            return Ok(YDistribution::uniform());
        }
        let y = match self.y.as_str() {
            "uniform" => YDistribution::uniform(),
            "exponential" => YDistribution::standard_exponential(),
            "expansion" => {
                let (Some(a), Some(delta)) = (self.y_a, self.y_delta) else {
                    return Err(config_err("y = \"expansion\" needs y_a and y_delta"));
                };
                match self.y_knot {
                    Some(k) => YDistribution::expansion_with_knot(a, delta, k),
                    None => YDistribution::expansion(a, delta),
                }
                .map_err(|e| config_err(e.to_string()))?
            }
            other => {
                return Err(config_err(format!(
                    "unknown y '{other}' (uniform, exponential, expansion)"
                )))
            }
        };
        Ok(y)
    }

    pub fn threshold_law(&self) -> Result<ThresholdLaw> {
        match (self.c, self.kappa, self.exponent) {
            (Some(c), None, None) => Ok(ThresholdLaw::Fixed { c }),
            (None, Some(kappa), Some(exponent)) => Ok(ThresholdLaw::PowerLaw { kappa, exponent }),
            _ => Err(config_err("set either c, or both kappa and exponent")),
        }
    }

    /// (δ, γ) of the model; `None` for the GPP.
    pub fn orders(&self) -> Result<(Option<f64>, Option<f64>)> {
        if self.model == ModelKind::Gpp {
            return Ok((None, None));
        }
        let (a, delta) = self.y_distribution()?.coefficients();
        if a == 0.0 {
            return Ok((None, self.gamma));
        }
        Ok((Some(delta), Some(self.gamma.unwrap_or(delta))))
    }

    pub fn rate_plan(&self) -> Result<RatePlan> {
        let (delta, gamma) = self.orders()?;
        plan_thresholds(self.threshold_law()?, self.regime, delta, gamma)
    }

    pub fn estimator_list(&self) -> Result<Vec<Estimator>> {
        self.estimators
            .iter()
            .map(|name| {
                let e = Estimator::from_name(name).map_err(|e| config_err(e.to_string()))?;
                if e == Estimator::PsiHatThreshold {
                    return Err(config_err(
                        "psi-hat-threshold has no closed-form limit; use the estimate command",
                    ));
                }
                Ok(e)
            })
            .collect()
    }

    /// Rejects configurations whose checks could not be meaningful.
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(config_err("replications must be at least 1"));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(config_err(
                "sample_sizes must be a non-empty list of positive sizes",
            ));
        }
        if !(self.cutoff < 0.0) {
            return Err(config_err(format!(
                "cutoff M must be negative, got {}",
                self.cutoff
            )));
        }
        if self.grid < 2 {
            return Err(config_err("grid needs at least two intervals"));
        }
        let spec = self.generator()?;
        self.y_distribution()?;
        let plan = self.rate_plan()?;
        if self.regime == Regime::Fixed
            && self.model == ModelKind::Neighborhood
            && self.analysis == Analysis::Estimators
        {
            return Err(config_err(
                "fixed-threshold limits hold for the GPP only; use regime = \"bias\" or \"lan\" for neighborhoods",
            ));
        }
        if self.regime == Regime::Bias && self.analysis == Analysis::Lan {
            return Err(config_err(
                "the LAN analysis needs n|c_n|^{1+2min(δ,γ)} → 0 (regime = \"lan\")",
            ));
        }
        if self.analysis == Analysis::Lan && self.regime != Regime::Lan {
            return Err(config_err("the LAN analysis needs regime = \"lan\""));
        }
        let limit = threshold_limit(self.cutoff, spec.bound_m());
        for &n in &self.sample_sizes {
            let c = plan.law.c_at(n);
            if c.abs() > limit {
                return Err(config_err(format!(
                    "|c| = {} at n = {n} exceeds the validity bound min(|M|, 1/m) = {limit}",
                    c.abs()
                )));
            }
        }
        match self.analysis {
            Analysis::Estimators => {
                if self.estimator_list()?.is_empty() {
                    return Err(config_err("no estimators selected"));
                }
            }
            Analysis::Lan => {
                let (_, theta0) = self.parameters()?;
                let kernel = self.smoothing_kernel()?;
                for &n in &self.sample_sizes {
                    let c = plan.law.c_at(n);
                    for &xi in &self.xi {
                        let t = crate::lan::local_alternative(theta0.value(), xi, n, c);
                        if !(t > 0.0 && t < 1.0) {
                            return Err(config_err(format!(
                                "ϑ_n(ξ = {xi}) = {t} at n = {n} leaves (0, 1)"
                            )));
                        }
                        let beta = kernel.beta_from_theta(
                            ThetaParam::new(t).map_err(|e| config_err(e.to_string()))?,
                        );
                        let alt = build_generator(&kernel, beta.value(), self.mixing_rate)?;
                        if c.abs() > threshold_limit(self.cutoff, alt.bound_m()) {
                            return Err(config_err(format!(
                                "|c| = {} exceeds min(|M|, 1/m) under the alternative ξ = {xi} at n = {n}",
                                c.abs()
                            )));
                        }
                    }
                }
            }
        }
        let [lo, hi] = self.calibration_range;
        if self.model == ModelKind::Neighborhood && !(lo > 0.0 && lo < hi && hi < 1.0) {
            return Err(config_err("calibration_range must satisfy 0 < lo < hi < 1"));
        }
        if !(self.variance_tolerance > 0.0
            && self.mean_se_multiple > 0.0
            && self.residual_tolerance > 0.0)
        {
            return Err(config_err("tolerances must be positive"));
        }
        Ok(())
    }
}
