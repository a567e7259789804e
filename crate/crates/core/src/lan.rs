//! Exceedance point process, log-likelihood ratios and the LAN expansion.
//!
//! Path i exceeds c when its position Y = sup_t X_t/c is below 1. The
//! positions of the τ exceedances and τ itself are sufficient for ϑ, and
//! as n|c_n| → ∞ the count τ carries all the information:
//!
//! ```text
//! L_{n,c_n}(ϑ_n | ϑ₀) = ξ L Z_n − ξ² L² ϑ₀ / 2 + o_P(1),  ϑ_n = ϑ₀ + ξ/√(n|c_n|)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimators::SurvivalMap;
use crate::grid::GridFunction;
use crate::processes::{check_threshold, ProcessBatch};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceSample {
    pub tau: usize,
    /// Positions sup_t X_t/c of the exceeding paths, in path order.
    pub positions: Vec<f64>,
    pub n: usize,
    pub c: f64,
}

impl ExceedanceSample {
    /// Builds the sample from per-path scores sup_t X_t/(−1) as returned by
    /// [`crate::processes::simulate_scores`] with the constant threshold.
    pub fn from_scores(scores: &[f64], c: f64) -> Result<Self> {
        if !(c < 0.0) {
            return Err(domain(format!("threshold c must be negative, got {c}")));
        }
        let a = c.abs();
        let positions: Vec<f64> = scores.iter().filter(|s| **s < a).map(|s| s / a).collect();
        Ok(Self {
            tau: positions.len(),
            positions,
            n: scores.len(),
            c,
        })
    }
}

/// Exceedances of the constant threshold c in a batch.
pub fn exceedance_sample(batch: &ProcessBatch, c: f64) -> Result<ExceedanceSample> {
    check_threshold(c, 1.0, batch.cutoff(), batch.bound_m())?;
    let Some(grid) = batch.intervals() else {
        return Ok(ExceedanceSample {
            tau: 0,
            positions: Vec::new(),
            n: 0,
            c,
        });
    };
    let unit = GridFunction::constant(grid, -1.0)?;
    ExceedanceSample::from_scores(&batch.scores(&unit)?, c)
}

/// The slope L of condition (D).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Slope {
    /// L = 1/ϑ₀, the GPP and its neighborhoods.
    Reciprocal,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanModel<M> {
    theta0: f64,
    slope: Slope,
    /// Remainder order γ of condition (D).
    gamma: f64,
    map: M,
}

impl<M: SurvivalMap> LanModel<M> {
    pub fn new(theta0: f64, slope: Slope, gamma: f64, map: M) -> Result<Self> {
        if !(theta0 > 0.0 && theta0 < 1.0) {
            return Err(domain(format!("ϑ₀ must lie in (0, 1), got {theta0}")));
        }
        if !(gamma > 0.0) {
            return Err(domain(format!("γ must be positive, got {gamma}")));
        }
        if let Slope::Value(l) = slope {
            if !l.is_finite() {
                return Err(domain("slope L must be finite"));
            }
        }
        Ok(Self {
            theta0,
            slope,
            gamma,
            map,
        })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn slope(&self) -> Slope {
        self.slope
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn map(&self) -> &M {
        &self.map
    }

    pub fn l(&self) -> f64 {
        match self.slope {
            Slope::Reciprocal => 1.0 / self.theta0,
            Slope::Value(l) => l,
        }
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("{what} = {p} is not in (0, 1)")));
    }
    Ok(())
}

fn check_sample(sample: &ExceedanceSample, c: f64) -> Result<()> {
    if sample.c != c {
        return Err(domain(format!(
            "sample threshold {} differs from the model's {c}",
            sample.c
        )));
    }
    if sample.tau > sample.n || sample.positions.len() != sample.tau {
        return Err(domain("inconsistent exceedance sample"));
    }
    Ok(())
}

/// L_{n,c}(ϑ | ϑ₀) from the density ratios of the positions and the
/// binomial law of τ.
pub fn loglik_ratio<M: SurvivalMap>(
    sample: &ExceedanceSample,
    model: &LanModel<M>,
    theta: f64,
) -> Result<f64> {
    let map = &model.map;
    check_sample(sample, map.threshold())?;
    let theta0 = model.theta0;
    let p = map.survival(theta);
    let p0 = map.survival(theta0);
    check_probability(p, "P_ϑ(X > c)")?;
    check_probability(p0, "P_ϑ₀(X > c)")?;
    let mut points = 0.0;
    for &y in &sample.positions {
        let ratio = map.position_density(theta, y) / map.position_density(theta0, y);
        points += (ratio * (p0 / p)).ln();
    }
    let tau = sample.tau as f64;
    let rest = (sample.n - sample.tau) as f64;
    Ok(points + tau * (p / p0).ln() + rest * ((-p).ln_1p() - (-p0).ln_1p()))
}

/// Closed form for the GPP, where the position terms cancel:
/// τ log(ϑ/ϑ₀) + (n − τ) log((1 − |c|ϑ)/(1 − |c|ϑ₀)).
pub fn loglik_ratio_gpp(sample: &ExceedanceSample, theta0: f64, theta: f64) -> Result<f64> {
    let a = sample.c.abs();
    check_probability(a * theta, "|c|ϑ")?;
    check_probability(a * theta0, "|c|ϑ₀")?;
    let tau = sample.tau as f64;
    let rest = (sample.n - sample.tau) as f64;
    Ok(tau * (theta / theta0).ln() + rest * ((-a * theta).ln_1p() - (-a * theta0).ln_1p()))
}

/// Z_n = (τ − n|c|ϑ₀)/√(n|c|).
pub fn central_sequence(sample: &ExceedanceSample, theta0: f64) -> f64 {
    let nc = sample.n as f64 * sample.c.abs();
    (sample.tau as f64 - nc * theta0) / nc.sqrt()
}

/// ξ L z − ξ² L² ϑ₀ / 2.
pub fn lan_quadratic(xi: f64, l: f64, theta0: f64, z_n: f64) -> f64 {
    xi * l * z_n - 0.5 * xi * xi * l * l * theta0
}

/// ϑ_n(ξ) = ϑ₀ + ξ/√(n|c|).
pub fn local_alternative(theta0: f64, xi: f64, n: usize, c: f64) -> f64 {
    theta0 + xi / (n as f64 * c.abs()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiency {
    /// 1/(L²ϑ₀), the smallest limiting variance of a regular estimator.
    pub sigma2_minimum: f64,
    /// L²ϑ₀², the efficiency of ϑ̂ relative to that bound.
    pub are: f64,
}

pub fn efficiency_quantities(theta0: f64, slope: Slope) -> Result<Efficiency> {
    match slope {
        Slope::Reciprocal => Ok(Efficiency {
            sigma2_minimum: theta0,
            are: 1.0,
        }),
        Slope::Value(l) => {
            if l == 0.0 {
                return Err(domain("slope L = 0 carries no information"));
            }
            Ok(Efficiency {
                sigma2_minimum: 1.0 / (l * l * theta0),
                are: l * l * theta0 * theta0,
            })
        }
    }
}

/// How c is chosen for sample size n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum ThresholdLaw {
    Fixed {
        c: f64,
    },
    /// c_n = −κ n^{−a}.
    PowerLaw {
        kappa: f64,
        exponent: f64,
    },
}

impl ThresholdLaw {
    pub fn c_at(&self, n: usize) -> f64 {
        match *self {
            Self::Fixed { c } => c,
            Self::PowerLaw { kappa, exponent } => -kappa * (n as f64).powf(-exponent),
        }
    }
}

/// The asymptotic regime an experiment targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// c fixed, √n scaling.
    Fixed,
    /// n|c_n|^{1+2δ} → const > 0: asymptotic bias.
    Bias,
    /// n|c_n| → ∞ and n|c_n|^{1+2min(δ,γ)} → 0.
    Lan,
}

/// Checked threshold plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePlan {
    pub law: ThresholdLaw,
    pub regime: Regime,
    /// lim n|c_n|^{1+2δ} for the bias regime, 0 otherwise.
    pub bias_const: f64,
}

/// Validates a threshold law for a regime. `delta` and `gamma` are the
/// neighborhood orders; `None` means the GPP itself, where the survival
/// expansion has no remainder.
pub fn plan_thresholds(
    law: ThresholdLaw,
    regime: Regime,
    delta: Option<f64>,
    gamma: Option<f64>,
) -> Result<RatePlan> {
    let config = |msg: String| Err(Error::Config(msg));
    match (regime, law) {
        (Regime::Fixed, ThresholdLaw::Fixed { c }) => {
            if !(c < 0.0) {
                return config(format!("fixed threshold c must be negative, got {c}"));
            }
            Ok(RatePlan {
                law,
                regime,
                bias_const: 0.0,
            })
        }
        (Regime::Fixed, _) => config("the fixed regime needs a fixed threshold".into()),
        (_, ThresholdLaw::Fixed { .. }) => {
            config("shrinking regimes need a power-law threshold c_n = −κ n^{−a}".into())
        }
        (_, ThresholdLaw::PowerLaw { kappa, exponent }) if !(kappa > 0.0) || !(exponent > 0.0) => {
            config(format!(
                "power law needs κ > 0 and a > 0, got κ = {kappa}, a = {exponent}"
            ))
        }
        (Regime::Bias, ThresholdLaw::PowerLaw { kappa, exponent }) => {
            let Some(delta) = delta else {
                return config("the bias regime needs a neighborhood with order δ".into());
            };
            let a = 1.0 / (1.0 + 2.0 * delta);
            if (exponent - a).abs() > 1e-12 {
                return config(format!(
                    "n|c_n|^{{1+2δ}} → const > 0 needs a = 1/(1+2δ) = {a}, got a = {exponent}"
                ));
            }
            Ok(RatePlan {
                law,
                regime,
                bias_const: kappa.powf(1.0 + 2.0 * delta),
            })
        }
        (Regime::Lan, ThresholdLaw::PowerLaw { exponent, .. }) => {
            let (lo, hi) = lan_rate_window(delta, gamma);
            if !(exponent > lo && exponent < hi) {
                return config(format!(
                    "n|c_n| → ∞ and n|c_n|^{{1+2min(δ,γ)}} → 0 need a ∈ ({lo}, {hi}), got a = {exponent}"
                ));
            }
            Ok(RatePlan {
                law,
                regime,
                bias_const: 0.0,
            })
        }
    }
}

/// Admissible exponents a for c_n = −κ n^{−a} in the LAN regime.
pub fn lan_rate_window(delta: Option<f64>, gamma: Option<f64>) -> (f64, f64) {
    let order = match (delta, gamma) {
        (Some(d), Some(g)) => Some(d.min(g)),
        (Some(d), None) => Some(d),
        (None, Some(g)) => Some(g),
        (None, None) => None,
    };
    (order.map_or(0.0, |o| 1.0 / (1.0 + 2.0 * o)), 1.0)
}
