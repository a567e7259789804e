//! Exceedance-count estimators of Ψ(−β/2), β and ϑ, and their limits.
//!
//! All estimators are functions of τ, the number of paths lying entirely
//! above the threshold:
//!
//! ```text
//! Ψ̂ = τ / (2|c|n)      β̂ = −2Ψ⁻¹(Ψ̂)      ϑ̂ = τ / (n|c|)
//! ```
//!
//! and ϑ* solves P_ϑ(X > c) = τ/n for a given survival map.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::generator::build_generator;
use crate::grid::GridFunction;
use crate::kernel::{ScaleParam, SmoothingKernel, ThetaParam};
use crate::processes::{check_threshold, ProcessBatch, YDistribution};
use crate::rng::StreamKey;

/// Ψ̂ is clamped to this distance below 1/2 before inversion.
pub const OUT_OF_MODEL_EPS: f64 = 1e-6;

pub const CALIBRATION_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    PsiHat,
    BetaHat,
    PsiHatThreshold,
    ThetaHat,
    ThetaStar,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Self::PsiHat => "psi-hat",
            Self::BetaHat => "beta-hat",
            Self::PsiHatThreshold => "psi-hat-threshold",
            Self::ThetaHat => "theta-hat",
            Self::ThetaStar => "theta-star",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "psi-hat" => Ok(Self::PsiHat),
            "beta-hat" => Ok(Self::BetaHat),
            "psi-hat-threshold" => Ok(Self::PsiHatThreshold),
            "theta-hat" => Ok(Self::ThetaHat),
            "theta-star" => Ok(Self::ThetaStar),
            other => Err(domain(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateFlag {
    Ok,
    /// Ψ̂ ≥ 1/2; β̂ was computed from 1/2 − ε.
    OutOfModel,
    /// No exceedances; the estimate sits on the boundary of the parameter
    /// space.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimator: Estimator,
    pub value: f64,
    pub n: usize,
    pub c: f64,
    pub exceedances: usize,
    pub flag: EstimateFlag,
    pub kernel: Option<String>,
    pub truth: Option<f64>,
    pub asymptotic_variance: Option<f64>,
    /// (value − truth) scaled by √n (fixed c) or √(n|c|) (shrinking c).
    pub normalized_error: Option<f64>,
}

impl EstimateReport {
    fn bare(estimator: Estimator, value: f64, n: usize, c: f64, exceedances: usize) -> Self {
        Self {
            estimator,
            value,
            n,
            c,
            exceedances,
            flag: EstimateFlag::Ok,
            kernel: None,
            truth: None,
            asymptotic_variance: None,
            normalized_error: None,
        }
    }

    /// Attaches the true value for parameter β, the limiting variance and
    /// the normalized error under `scaling`.
    pub fn with_target(
        mut self,
        beta: ScaleParam,
        kernel: &SmoothingKernel,
        scaling: Scaling,
    ) -> Result<Self> {
        let truth = true_value(self.estimator, beta, kernel)?;
        let moments = asymptotic_moments(self.estimator, beta, kernel, scaling)?;
        let rate = match scaling {
            Scaling::Fixed { .. } => (self.n as f64).sqrt(),
            Scaling::Shrinking { .. } => (self.n as f64 * self.c.abs()).sqrt(),
        };
        self.kernel = Some(kernel.name().to_string());
        self.truth = Some(truth);
        self.asymptotic_variance = Some(moments.variance);
        self.normalized_error = Some(rate * (self.value - truth));
        Ok(self)
    }
}

/// The quantity each estimator targets when the scale parameter is β.
pub fn true_value(estimator: Estimator, beta: ScaleParam, kernel: &SmoothingKernel) -> Result<f64> {
    let theta = kernel.theta_from_beta(beta).value();
    match estimator {
        Estimator::PsiHat => Ok(0.5 * theta),
        Estimator::BetaHat => Ok(beta.value()),
        Estimator::ThetaHat | Estimator::ThetaStar => Ok(theta),
        Estimator::PsiHatThreshold => Err(domain(
            "the threshold-function estimator has no closed-form target",
        )),
    }
}

fn check_c(c: f64) -> Result<()> {
    if !(c < 0.0) || !c.is_finite() {
        return Err(domain(format!("threshold c must be negative, got {c}")));
    }
    Ok(())
}

fn check_count(tau: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(domain("sample size must be at least 1"));
    }
    if tau > n {
        return Err(domain(format!("τ = {tau} exceeds n = {n}")));
    }
    Ok(())
}

/// Ψ̂ = τ/(2|c|n) from a count.
pub fn psi_hat_from_count(tau: usize, n: usize, c: f64) -> Result<EstimateReport> {
    check_c(c)?;
    check_count(tau, n)?;
    let value = tau as f64 / (2.0 * c.abs() * n as f64);
    Ok(EstimateReport::bare(Estimator::PsiHat, value, n, c, tau))
}

/// Number of paths lying strictly above |c|f at every grid point.
pub fn count_exceedances(batch: &ProcessBatch, f: &GridFunction, c: f64) -> Result<usize> {
    check_c(c)?;
    check_threshold(c, f.sup_norm(), batch.cutoff(), batch.bound_m())?;
    let level: Vec<f64> = f.values().iter().map(|v| c.abs() * v).collect();
    let mut tau = 0;
    for p in batch.paths() {
        f.ensure_same_grid(p)?;
        if p.values().iter().zip(&level).all(|(x, l)| x > l) {
            tau += 1;
        }
    }
    Ok(tau)
}

/// Ψ̂_{c,n}: the share of paths above c, divided by 2|c|.
pub fn psi_hat(batch: &ProcessBatch, c: f64) -> Result<EstimateReport> {
    check_c(c)?;
    check_threshold(c, 1.0, batch.cutoff(), batch.bound_m())?;
    let tau = batch.paths().iter().filter(|p| p.min() > c).count();
    psi_hat_from_count(tau, batch.len(), c)
}

/// Ψ̂_{f,c,n}: the share of paths above |c|f, divided by 2|c|. Converges
/// to T(f, β, ψ)/2.
pub fn psi_hat_threshold_fn(
    batch: &ProcessBatch,
    f: &GridFunction,
    c: f64,
) -> Result<EstimateReport> {
    let tau = count_exceedances(batch, f, c)?;
    let mut report = psi_hat_from_count(tau, batch.len(), c)?;
    report.estimator = Estimator::PsiHatThreshold;
    Ok(report)
}

/// −2Ψ⁻¹(Ψ̂) with the out-of-model and boundary clamps.
pub fn beta_from_psi(psi: f64, kernel: &SmoothingKernel) -> Result<(f64, EstimateFlag)> {
    if psi.is_nan() || psi < 0.0 {
        return Err(domain(format!("Ψ̂ = {psi} is not a probability")));
    }
    if psi >= 1.0 {
        return Err(domain(format!("Ψ̂ = {psi} ≥ 1 cannot be inverted")));
    }
    let (q, flag) = if psi >= 0.5 {
        (0.5 - OUT_OF_MODEL_EPS, EstimateFlag::OutOfModel)
    } else if psi == 0.0 {
        (OUT_OF_MODEL_EPS, EstimateFlag::Boundary)
    } else {
        (psi, EstimateFlag::Ok)
    };
    Ok((-2.0 * kernel.quantile(q)?, flag))
}

/// β̂ = −2Ψ⁻¹(Ψ̂) from a Ψ̂ report.
pub fn beta_hat(psi: &EstimateReport, kernel: &SmoothingKernel) -> Result<EstimateReport> {
    let (value, flag) = beta_from_psi(psi.value, kernel)?;
    let mut report = EstimateReport::bare(Estimator::BetaHat, value, psi.n, psi.c, psi.exceedances);
    report.flag = flag;
    report.kernel = Some(kernel.name().to_string());
    Ok(report)
}

/// ϑ̂ = τ/(n|c|).
pub fn theta_hat(tau: usize, n: usize, c: f64) -> Result<EstimateReport> {
    check_c(c)?;
    check_count(tau, n)?;
    let value = tau as f64 / (n as f64 * c.abs());
    Ok(EstimateReport::bare(Estimator::ThetaHat, value, n, c, tau))
}

/// ϑ ↦ P_ϑ(X > s·c) at a fixed threshold c.
pub trait SurvivalMap {
    fn threshold(&self) -> f64;

    /// Parameter interval on which the map is defined.
    fn theta_range(&self) -> (f64, f64);

    /// P_ϑ(X > s·c) for s ∈ [0, 1].
    fn survival_at(&self, theta: f64, s: f64) -> f64;

    /// P_ϑ(X > c).
    fn survival(&self, theta: f64) -> f64 {
        self.survival_at(theta, 1.0)
    }

    /// d/ds P_ϑ(X > s·c), the intensity of the exceedance positions, by
    /// central differences with step 1e−3.
    fn position_density(&self, theta: f64, s: f64) -> f64 {
        let h = 1e-3;
        let lo = (s - h).max(0.0);
        let hi = s + h;
        (self.survival_at(theta, hi) - self.survival_at(theta, lo)) / (hi - lo)
    }

    /// Root of P_ϑ(X > c) = τ/n by bisection to 1e−10.
    fn solve(&self, tau: usize, n: usize) -> Result<f64> {
        let target = tau as f64 / n as f64;
        let (mut lo, mut hi) = self.theta_range();
        let (p_lo, p_hi) = (self.survival(lo), self.survival(hi));
        if target < p_lo || target > p_hi {
            return Err(Error::NoRoot(format!(
                "τ/n = {target} outside the attainable range [{p_lo}, {p_hi}] on ϑ ∈ [{lo}, {hi}]"
            )));
        }
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if self.survival(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl<M: SurvivalMap + ?Sized> SurvivalMap for Box<M> {
    fn threshold(&self) -> f64 {
        (**self).threshold()
    }

    fn theta_range(&self) -> (f64, f64) {
        (**self).theta_range()
    }

    fn survival_at(&self, theta: f64, s: f64) -> f64 {
        (**self).survival_at(theta, s)
    }

    fn survival(&self, theta: f64) -> f64 {
        (**self).survival(theta)
    }

    fn position_density(&self, theta: f64, s: f64) -> f64 {
        (**self).position_density(theta, s)
    }

    fn solve(&self, tau: usize, n: usize) -> Result<f64> {
        (**self).solve(tau, n)
    }
}

/// The GPP: P_ϑ(V > s·c) = s|c|ϑ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GppSurvival {
    c: f64,
}

impl GppSurvival {
    pub fn new(c: f64) -> Result<Self> {
        check_c(c)?;
        Ok(Self { c })
    }
}

impl SurvivalMap for GppSurvival {
    fn threshold(&self) -> f64 {
        self.c
    }

    fn theta_range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn survival_at(&self, theta: f64, s: f64) -> f64 {
        s.clamp(0.0, 1.0) * self.c.abs() * theta
    }

    fn position_density(&self, theta: f64, _s: f64) -> f64 {
        self.c.abs() * theta
    }

    /// Inverts exactly, so the root coincides with ϑ̂ bit for bit.
    fn solve(&self, tau: usize, n: usize) -> Result<f64> {
        let theta = theta_hat(tau, n, self.c)?.value;
        if theta >= 1.0 {
            return Err(Error::NoRoot(format!(
                "τ/(n|c|) = {theta} ≥ 1 is outside (0, 1)"
            )));
        }
        Ok(theta)
    }
}

/// Monte Carlo table of P_ϑ(X > s·c) for a neighborhood process.
///
/// For each ϑ on an even grid the generator with β = −2Ψ⁻¹(ϑ/2) is
/// sampled from the same stream (common random numbers), and
/// P_ϑ(X > s·c) = E H(s|c|·inf Z) is averaged over the draws of inf Z.
/// Between grid points the table is interpolated linearly; the s = 1
/// column is made monotone by a running maximum.
#[derive(Debug, Clone)]
pub struct CalibratedSurvival {
    c: f64,
    y: YDistribution,
    thetas: Vec<f64>,
    infs: Vec<Vec<f64>>,
    table: Vec<f64>,
    max_std_error: f64,
    monotone_repairs: usize,
}

impl CalibratedSurvival {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        kernel: &SmoothingKernel,
        mixing_rate: f64,
        y: &YDistribution,
        c: f64,
        theta_range: (f64, f64),
        points: usize,
        n_cal: usize,
        key: StreamKey,
    ) -> Result<Self> {
        check_c(c)?;
        let (lo, hi) = theta_range;
        if !(lo > 0.0 && lo < hi && hi < 1.0) {
            return Err(domain(format!(
                "calibration range [{lo}, {hi}] must lie inside (0, 1)"
            )));
        }
        if points < 2 || n_cal < 1000 {
            return Err(domain("calibration needs ≥ 2 grid points and ≥ 1000 draws"));
        }
        let thetas: Vec<f64> = (0..points)
            .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
            .collect();
        let mut infs = Vec::with_capacity(points);
        let mut table = Vec::with_capacity(points);
        let mut max_std_error: f64 = 0.0;
        for &theta in &thetas {
            let beta = kernel.beta_from_theta(ThetaParam::new(theta)?);
            let spec = build_generator(kernel, beta.value(), mixing_rate)?;
            let mut rng = key.rng();
            let draws: Vec<f64> = (0..n_cal)
                .map(|_| spec.inf_z(spec.draw_mixing(&mut rng)))
                .collect();
            let h: Vec<f64> = draws.iter().map(|i| y.cdf(c.abs() * i)).collect();
            let mean = h.iter().sum::<f64>() / n_cal as f64;
            let var = h.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_cal - 1) as f64;
            max_std_error = max_std_error.max((var / n_cal as f64).sqrt());
            infs.push(draws);
            table.push(mean);
        }
        let mut monotone_repairs = 0;
        for k in 1..table.len() {
            if table[k] <= table[k - 1] {
                table[k] = table[k - 1] * (1.0 + 1e-12);
                monotone_repairs += 1;
            }
        }
        Ok(Self {
            c,
            y: *y,
            thetas,
            infs,
            table,
            max_std_error,
            monotone_repairs,
        })
    }

    /// Largest Monte Carlo standard error over the grid at s = 1.
    pub fn max_std_error(&self) -> f64 {
        self.max_std_error
    }

    /// Grid points whose table value had to be raised to keep the map
    /// increasing.
    pub fn monotone_repairs(&self) -> usize {
        self.monotone_repairs
    }

    pub fn grid(&self) -> (&[f64], &[f64]) {
        (&self.thetas, &self.table)
    }

    fn bracket(&self, theta: f64) -> (usize, f64) {
        let (lo, hi) = (self.thetas[0], self.thetas[self.thetas.len() - 1]);
        let theta = theta.clamp(lo, hi);
        let step = (hi - lo) / (self.thetas.len() - 1) as f64;
        let k = (((theta - lo) / step) as usize).min(self.thetas.len() - 2);
        (k, (theta - self.thetas[k]) / step)
    }

    fn column_mean(&self, k: usize, s: f64) -> f64 {
        let u = s * self.c.abs();
        self.infs[k].iter().map(|i| self.y.cdf(u * i)).sum::<f64>() / self.infs[k].len() as f64
    }
}

impl SurvivalMap for CalibratedSurvival {
    fn threshold(&self) -> f64 {
        self.c
    }

    fn theta_range(&self) -> (f64, f64) {
        (self.thetas[0], self.thetas[self.thetas.len() - 1])
    }

    fn survival_at(&self, theta: f64, s: f64) -> f64 {
        let (k, w) = self.bracket(theta);
        if s == 1.0 {
            return (1.0 - w) * self.table[k] + w * self.table[k + 1];
        }
        (1.0 - w) * self.column_mean(k, s) + w * self.column_mean(k + 1, s)
    }
}

/// ϑ* solving P_ϑ*(X > c) = τ/n.
pub fn theta_star(tau: usize, n: usize, model: &dyn SurvivalMap) -> Result<EstimateReport> {
    let c = model.threshold();
    check_count(tau, n)?;
    if tau == 0 {
        let mut report = EstimateReport::bare(Estimator::ThetaStar, 0.0, n, c, 0);
        report.flag = EstimateFlag::Boundary;
        return Ok(report);
    }
    let value = model.solve(tau, n)?;
    Ok(EstimateReport::bare(Estimator::ThetaStar, value, n, c, tau))
}

/// How the threshold behaves as n grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum Scaling {
    /// Fixed c, errors scaled by √n.
    Fixed { c: f64 },
    /// c_n → 0 with n|c_n|^{1+2δ} → `bias_const`, errors scaled by
    /// √(n|c_n|). `k_minus_one` is K(−1) of the neighborhood (0 for the
    /// GPP).
    Shrinking { bias_const: f64, k_minus_one: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub bias: f64,
    pub variance: f64,
}

/// Limiting bias and variance of the normalized error.
pub fn asymptotic_moments(
    estimator: Estimator,
    beta: ScaleParam,
    kernel: &SmoothingKernel,
    scaling: Scaling,
) -> Result<Moments> {
    let half = -0.5 * beta.value();
    let psi = kernel.cdf(half);
    let dens = kernel.density(half);
    let theta = 2.0 * psi;
    match scaling {
        Scaling::Fixed { c } => {
            check_c(c)?;
            let a = c.abs();
            let variance = match estimator {
                Estimator::PsiHat => psi * (1.0 - 2.0 * a * psi) / (2.0 * a),
                Estimator::BetaHat => 2.0 * psi * (1.0 - 2.0 * a * psi) / (a * dens * dens),
                Estimator::ThetaHat | Estimator::ThetaStar => theta * (1.0 - a * theta) / a,
                Estimator::PsiHatThreshold => {
                    return Err(domain(
                        "no closed-form moments for the threshold-function estimator",
                    ))
                }
            };
            Ok(Moments {
                bias: 0.0,
                variance,
            })
        }
        Scaling::Shrinking {
            bias_const,
            k_minus_one,
        } => {
            if !(bias_const >= 0.0) {
                return Err(domain(format!(
                    "bias constant must be ≥ 0, got {bias_const}"
                )));
            }
            let mu = k_minus_one * psi;
            let root = bias_const.sqrt();
            match estimator {
                Estimator::PsiHat => Ok(Moments {
                    bias: root * mu,
                    variance: 0.5 * psi,
                }),
                Estimator::BetaHat => Ok(Moments {
                    bias: -2.0 * root * mu / dens,
                    variance: 2.0 * psi / (dens * dens),
                }),
                Estimator::ThetaHat => Ok(Moments {
                    bias: 2.0 * root * mu,
                    variance: theta,
                }),
                // Solves the exact survival equation, so K drops out; the
                // variance is 1/(L²ϑ₀) with L = 1/ϑ₀.
                Estimator::ThetaStar => Ok(Moments {
                    bias: 0.0,
                    variance: theta,
                }),
                Estimator::PsiHatThreshold => Err(domain(
                    "no closed-form moments for the threshold-function estimator",
                )),
            }
        }
    }
}
