//! Smoothing densities ψ.
//!
//! Every formula in the crate is parametrized by a symmetric, strictly
//! positive density ψ that is nonincreasing on `[0, ∞)`, its distribution
//! function Ψ and quantile Ψ⁻¹. The scale family is ψ_β(s) = βψ(βs) and the
//! dependence parameter β maps one-to-one onto ϑ = 2Ψ(−β/2) ∈ (0, 1).

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::adaptive_simpson;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const QUANTILE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Laplace,
    Gaussian,
    Custom,
}

type DensityFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
enum Repr {
    Laplace,
    Gaussian,
    Custom {
        name: String,
        density: Arc<DensityFn>,
    },
}

/// The density ψ together with Ψ and Ψ⁻¹.
///
/// Laplace has closed-form Ψ and Ψ⁻¹. Gaussian has a closed-form Ψ (via
/// `erfc`) and a numeric quantile. User-supplied densities get both by
/// quadrature and root finding.
#[derive(Clone)]
pub struct SmoothingKernel {
    repr: Repr,
}

impl fmt::Debug for SmoothingKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothingKernel")
            .field("name", &self.name())
            .finish()
    }
}

impl SmoothingKernel {
    /// ψ(s) = e^{−|s|}/2.
    pub fn laplace() -> Self {
        Self {
            repr: Repr::Laplace,
        }
    }

    /// The standard normal density.
    pub fn gaussian() -> Self {
        Self {
            repr: Repr::Gaussian,
        }
    }

    /// Wraps a user-supplied density after checking symmetry, positivity,
    /// monotonicity on `[0, ∞)` and unit mass. Densities violating any of
    /// these are rejected.
    pub fn custom<F>(name: impl Into<String>, density: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let kernel = Self {
            repr: Repr::Custom {
                name: name.into(),
                density: Arc::new(density),
            },
        };
        kernel.check_shape()?;
        let mass = kernel.total_mass();
        if (mass - 1.0).abs() > 1e-8 {
            return Err(domain(format!("density integrates to {mass}, not 1")));
        }
        Ok(kernel)
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "laplace" => Ok(Self::laplace()),
            "gaussian" | "normal" => Ok(Self::gaussian()),
            other => Err(domain(format!(
                "unknown kernel '{other}' (expected laplace or gaussian)"
            ))),
        }
    }

    pub fn family(&self) -> KernelFamily {
        match self.repr {
            Repr::Laplace => KernelFamily::Laplace,
            Repr::Gaussian => KernelFamily::Gaussian,
            Repr::Custom { .. } => KernelFamily::Custom,
        }
    }

    pub fn name(&self) -> &str {
        match &self.repr {
            Repr::Laplace => "laplace",
            Repr::Gaussian => "gaussian",
            Repr::Custom { name, .. } => name,
        }
    }

    /// Whether Ψ⁻¹ is available in closed form.
    pub fn is_closed_form(&self) -> bool {
        matches!(self.repr, Repr::Laplace)
    }

    /// ψ(s).
    pub fn density(&self, s: f64) -> f64 {
        match &self.repr {
            Repr::Laplace => 0.5 * (-s.abs()).exp(),
            Repr::Gaussian => FRAC_1_SQRT_2PI * (-0.5 * s * s).exp(),
            Repr::Custom { density, .. } => density(s),
        }
    }

    /// ψ_β(s) = βψ(βs).
    pub fn scaled_density(&self, beta: f64, s: f64) -> f64 {
        beta * self.density(beta * s)
    }

    /// Ψ(x) = ∫_{−∞}^x ψ.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Laplace => {
                if x <= 0.0 {
                    0.5 * x.exp()
                } else {
                    1.0 - 0.5 * (-x).exp()
                }
            }
            Repr::Gaussian => 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2),
            Repr::Custom { .. } => {
                if x == 0.0 {
                    return 0.5;
                }
                let half = adaptive_simpson(|s| self.density(s), 0.0, x.abs(), 1e-14, 48);
                if x > 0.0 {
                    0.5 + half
                } else {
                    0.5 - half
                }
            }
        }
    }

    /// Ψ⁻¹(q) for q ∈ (0, 1).
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(domain(format!("quantile level {q} outside (0, 1)")));
        }
        match self.repr {
            Repr::Laplace => Ok(if q <= 0.5 {
                (2.0 * q).ln()
            } else {
                -(2.0 * (1.0 - q)).ln()
            }),
            _ => Ok(numeric_quantile(self, q)),
        }
    }

    /// Smallest W ≥ 0 with tail mass 1 − Ψ(W) ≤ `mass`.
    pub fn tail_cutoff(&self, mass: f64) -> f64 {
        let mass = mass.clamp(1e-300, 0.5);
        match self.quantile(mass) {
            Ok(x) => (-x).max(0.0),
            Err(_) => 0.0,
        }
    }

    /// ϑ = 2Ψ(−β/2).
    pub fn theta_from_beta(&self, beta: ScaleParam) -> ThetaParam {
        ThetaParam(2.0 * self.cdf(-0.5 * beta.value()))
    }

    /// β = −2Ψ⁻¹(ϑ/2).
    pub fn beta_from_theta(&self, theta: ThetaParam) -> ScaleParam {
        let q = 0.5 * theta.value();
        // q ∈ (0, 1/2) so the quantile is defined and negative.
        let x = self.quantile(q).expect("ϑ/2 lies in (0, 1/2)");
        ScaleParam(-2.0 * x)
    }

    /// Draws one variate with density ψ.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.repr {
            Repr::Laplace => {
                let u: f64 = Open01.sample(rng);
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
            Repr::Gaussian => StandardNormal.sample(rng),
            Repr::Custom { .. } => {
                let u: f64 = Open01.sample(rng);
                numeric_quantile(self, u)
            }
        }
    }

    fn check_shape(&self) -> Result<()> {
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let s = 20.0 * i as f64 / 1000.0;
            let (plus, minus) = (self.density(s), self.density(-s));
            if !(plus > 0.0) || !plus.is_finite() {
                return Err(domain(format!("density not strictly positive at s = {s}")));
            }
            if (plus - minus).abs() > 1e-12 * plus.max(1e-300) {
                return Err(domain(format!("density not symmetric at s = {s}")));
            }
            if plus > prev * (1.0 + 1e-12) {
                return Err(domain(format!("density increasing on [0, ∞) at s = {s}")));
            }
            prev = plus;
        }
        Ok(())
    }

    fn total_mass(&self) -> f64 {
        let mut upper = 8.0;
        let mut mass = 2.0 * adaptive_simpson(|s| self.density(s), 0.0, upper, 1e-13, 48);
        while upper < 1e6 {
            let extra = 2.0 * adaptive_simpson(|s| self.density(s), upper, 2.0 * upper, 1e-13, 48);
            mass += extra;
            upper *= 2.0;
            if extra < 1e-12 {
                break;
            }
        }
        mass
    }
}

/// Bracketing bisection followed by guarded Newton steps.
fn numeric_quantile(kernel: &SmoothingKernel, q: f64) -> f64 {
    if q == 0.5 {
        return 0.0;
    }
    // Work on the lower half and reflect; Ψ(−x) = 1 − Ψ(x).
    let (target, sign) = if q < 0.5 { (q, 1.0) } else { (1.0 - q, -1.0) };
    let mut lo = -1.0;
    while kernel.cdf(lo) > target {
        lo *= 2.0;
        if lo < -1e300 {
            break;
        }
    }
    let mut hi = 0.0;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if kernel.cdf(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let fx = kernel.cdf(x) - target;
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let dens = kernel.density(x);
        let mut next = x - fx / dens;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= QUANTILE_TOL * x.abs().max(1.0) || hi - lo <= QUANTILE_TOL {
            break;
        }
    }
    sign * x
}

/// Dependence scale β > 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ScaleParam(f64);

impl ScaleParam {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta.is_finite() {
            Ok(Self(beta))
        } else {
            Err(domain(format!("β must be positive and finite, got {beta}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// ϑ = 2Ψ(−β/2) ∈ (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ThetaParam(f64);

impl ThetaParam {
    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 && theta < 1.0 {
            Ok(Self(theta))
        } else {
            Err(Error::Domain(format!("ϑ must lie in (0, 1), got {theta}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn kernels() -> Vec<SmoothingKernel> {
        vec![SmoothingKernel::laplace(), SmoothingKernel::gaussian()]
    }

    #[test]
    fn density_values() {
        let lap = SmoothingKernel::laplace();
        assert_eq!(lap.density(0.0), 0.5);
        assert_abs_diff_eq!(lap.density(1.0), 0.183_939_720_585_721_2, epsilon = 1e-15);
        assert_abs_diff_eq!(
            SmoothingKernel::gaussian().density(0.0),
            0.398_942_280_401_432_7,
            epsilon = 1e-15
        );
    }

    #[test]
    fn cdf_values() {
        let lap = SmoothingKernel::laplace();
        assert_eq!(lap.cdf(0.0), 0.5);
        assert_abs_diff_eq!(lap.cdf(-1.0), 0.183_939_720_585_721_2, epsilon = 1e-15);
        // Φ(−1) from an arbitrary-precision evaluation.
        assert_abs_diff_eq!(
            SmoothingKernel::gaussian().cdf(-1.0),
            0.158_655_253_931_457_05,
            epsilon = 1e-14
        );
    }

    #[test]
    fn quantile_values() {
        let lap = SmoothingKernel::laplace();
        assert_eq!(lap.quantile(0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(
            lap.quantile(0.25).unwrap(),
            -std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        let g = SmoothingKernel::gaussian();
        assert_abs_diff_eq!(g.quantile(0.15866).unwrap(), -1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(
            g.quantile(0.158_655_253_931_457_05).unwrap(),
            -1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for k in kernels() {
            for q in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
                assert!(matches!(k.quantile(q), Err(Error::Domain(_))));
            }
        }
    }

    #[test]
    fn shape_on_grid() {
        for k in kernels() {
            let mut prev = f64::INFINITY;
            for i in 0..1000 {
                let s = -20.0 + 40.0 * i as f64 / 999.0;
                assert!(k.density(s) > 0.0);
                assert_abs_diff_eq!(k.density(s), k.density(-s), epsilon = 1e-300);
                if s >= 0.0 {
                    assert!(k.density(s) <= prev);
                    prev = k.density(s);
                }
            }
        }
    }

    #[test]
    fn cdf_quantile_roundtrip() {
        for k in kernels() {
            for i in 1..100 {
                let q = i as f64 / 100.0;
                let x = k.quantile(q).unwrap();
                assert_abs_diff_eq!(k.cdf(x), q, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn unit_mass_of_scale_family() {
        for k in kernels() {
            for beta in [0.5, 1.0, 2.0, 5.0] {
                let w = k.tail_cutoff(1e-14) / beta;
                let mass = adaptive_simpson(|s| k.scaled_density(beta, s), -w, w, 1e-11, 50);
                assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn theta_beta_bijection() {
        let lap = SmoothingKernel::laplace();
        let theta = lap.theta_from_beta(ScaleParam::new(1.0).unwrap());
        assert_abs_diff_eq!(theta.value(), (-0.5f64).exp(), epsilon = 1e-15);
        let beta = lap.beta_from_theta(ThetaParam::new((-1.0f64).exp()).unwrap());
        assert_abs_diff_eq!(beta.value(), 2.0, epsilon = 1e-14);
        for k in kernels() {
            let tiny = k.theta_from_beta(ScaleParam::new(1e-12).unwrap());
            assert_abs_diff_eq!(tiny.value(), 1.0, epsilon = 1e-11);
            for b in [0.1, 0.5, 1.0, 2.0, 4.0, 8.0] {
                let t = k.theta_from_beta(ScaleParam::new(b).unwrap());
                assert_abs_diff_eq!(k.beta_from_theta(t).value(), b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn parameter_newtypes_validate() {
        assert!(ScaleParam::new(0.0).is_err());
        assert!(ScaleParam::new(-1.0).is_err());
        assert!(ScaleParam::new(f64::INFINITY).is_err());
        assert!(ThetaParam::new(0.0).is_err());
        assert!(ThetaParam::new(1.0).is_err());
        assert!(ThetaParam::new(0.3).is_ok());
    }

    #[test]
    fn custom_kernel_matches_builtin() {
        // The Laplace density rebuilt by hand.
        let k =
            SmoothingKernel::custom("laplace-by-hand", |s: f64| 0.5 * (-s.abs()).exp()).unwrap();
        assert_eq!(k.family(), KernelFamily::Custom);
        assert_abs_diff_eq!(k.cdf(-1.0), 0.5 * (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            k.quantile(0.25).unwrap(),
            -std::f64::consts::LN_2,
            epsilon = 1e-10
        );
    }

    #[test]
    fn custom_kernel_rejects_bad_shapes() {
        let asym = SmoothingKernel::custom("shifted", |s: f64| 0.5 * (-(s - 0.3).abs()).exp());
        assert!(asym.is_err());
        let compact = SmoothingKernel::custom("triangle", |s: f64| (1.0 - s.abs()).max(0.0));
        assert!(compact.is_err());
        let unnormalized = SmoothingKernel::custom("double", |s: f64| (-s.abs()).exp());
        assert!(unnormalized.is_err());
    }
}
