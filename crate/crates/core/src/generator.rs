//! Bounded generator processes of the D-norm.
//!
//! The generator used here is the importance-ratio process
//!
//! ```text
//! Z_t = ψ(S − βt) / g(S),   S ~ g,   g(s) = λ ψ(λ (s − β/2))
//! ```
//!
//! so E(Z_t) = ∫ ψ(s − βt) ds = 1 for every t and
//! E(sup_t |f(t)| Z_t) = ‖f‖_D. For 0 < λ < 1 the mixing density has
//! heavier tails than ψ and the ratio is bounded by a constant m.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dnorm::{d_norm, two_psi_half_beta, QuadratureSettings};
use crate::error::{domain, Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{KernelFamily, SmoothingKernel};
use crate::rng::StreamKey;

pub const DEFAULT_MIXING_RATE: f64 = 0.5;

/// One draw of the mixing variable: S and g(S).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingDraw {
    pub s: f64,
    pub g: f64,
}

#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    kernel: SmoothingKernel,
    beta: f64,
    mixing_rate: f64,
    bound_m: f64,
}

/// Builds the importance-ratio generator for ψ_β with mixing rate λ.
pub fn build_generator(
    kernel: &SmoothingKernel,
    beta: f64,
    mixing_rate: f64,
) -> Result<GeneratorSpec> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(domain(format!("β must be positive, got {beta}")));
    }
    if !(mixing_rate > 0.0) {
        return Err(domain(format!(
            "mixing rate must be positive, got {mixing_rate}"
        )));
    }
    if mixing_rate >= 1.0 {
        return Err(Error::UnboundedRatio(format!(
            "mixing rate λ = {mixing_rate} ≥ 1: ψ(s − βt)/g(s) is unbounded in s"
        )));
    }
    let lambda = mixing_rate;
    let bound = match kernel.family() {
        // −|s − βt| + λ|s − β/2| ≤ β/2 − (1 − λ)|s − β/2| ≤ β/2.
        KernelFamily::Laplace => (0.5 * beta).exp() / lambda,
        // Exact supremum over s of the Gaussian ratio at |βt − β/2| = β/2,
        // with a few ulps of room for rounding.
        KernelFamily::Gaussian => {
            let l2 = lambda * lambda;
            (beta * beta * l2 / (8.0 * (1.0 - l2))).exp() / lambda * (1.0 + 1e-12)
        }
        KernelFamily::Custom => {
            let probe = GeneratorSpec {
                kernel: kernel.clone(),
                beta,
                mixing_rate,
                bound_m: f64::INFINITY,
            };
            probe.dense_ratio_sup(4000, 256) * 1.001
        }
    };
    Ok(GeneratorSpec {
        kernel: kernel.clone(),
        beta,
        mixing_rate,
        bound_m: bound.max(1.0),
    })
}

impl GeneratorSpec {
    pub fn kernel(&self) -> &SmoothingKernel {
        &self.kernel
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mixing_rate(&self) -> f64 {
        self.mixing_rate
    }

    /// The constant m with 0 ≤ Z_t ≤ m.
    pub fn bound_m(&self) -> f64 {
        self.bound_m
    }

    /// Replaces m without any check. Only useful to build negative controls
    /// for [`validate_generator`].
    pub fn with_bound_unchecked(mut self, bound_m: f64) -> Self {
        self.bound_m = bound_m;
        self
    }

    /// The same generator for another β (same kernel and mixing rate).
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        build_generator(&self.kernel, beta, self.mixing_rate)
    }

    /// g(s) = λψ(λ(s − β/2)).
    pub fn mixing_density(&self, s: f64) -> f64 {
        self.mixing_rate
            * self
                .kernel
                .density(self.mixing_rate * (s - 0.5 * self.beta))
    }

    pub fn draw_mixing<R: Rng + ?Sized>(&self, rng: &mut R) -> MixingDraw {
        let x = self.kernel.sample(rng);
        MixingDraw {
            s: 0.5 * self.beta + x / self.mixing_rate,
            g: self.mixing_rate * self.kernel.density(x),
        }
    }

    /// Z_t for the given mixing draw.
    pub fn z_at(&self, draw: MixingDraw, t: f64) -> f64 {
        self.kernel.density(draw.s - self.beta * t) / draw.g
    }

    pub fn fill_path(&self, draw: MixingDraw, intervals: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..=intervals).map(|i| self.z_at(draw, i as f64 / intervals as f64)));
    }

    pub fn path(&self, draw: MixingDraw, intervals: usize) -> GridFunction {
        let mut v = Vec::with_capacity(intervals + 1);
        self.fill_path(draw, intervals, &mut v);
        GridFunction::new(v).expect("grid has at least two intervals")
    }

    /// inf_t Z_t over the grid. ψ(s − βt) is unimodal in t, so the minimum
    /// over any grid containing both endpoints is attained at t = 0 or 1.
    pub fn inf_z(&self, draw: MixingDraw) -> f64 {
        let k = &self.kernel;
        k.density(draw.s).min(k.density(draw.s - self.beta)) / draw.g
    }

    /// sup_t Z_t over the grid with `intervals` intervals: the grid point
    /// βt_i closest to S.
    pub fn sup_z(&self, draw: MixingDraw, intervals: usize) -> f64 {
        let n = intervals as f64;
        let i = (draw.s / self.beta * n).round().clamp(0.0, n);
        self.z_at(draw, i / n)
    }

    /// inf_t |f(t)| Z_t over the grid of `f`.
    pub fn inf_weighted(&self, draw: MixingDraw, f: &GridFunction) -> f64 {
        if f.is_constant() {
            return f.values()[0].abs() * self.inf_z(draw);
        }
        f.values()
            .iter()
            .enumerate()
            .map(|(i, v)| v.abs() * self.z_at(draw, f.t(i)))
            .fold(f64::INFINITY, f64::min)
    }

    /// sup over a dense (s, t) grid of ψ(s − βt)/g(s).
    pub fn dense_ratio_sup(&self, s_steps: usize, t_steps: usize) -> f64 {
        let width = self.kernel.tail_cutoff(1e-12) / self.mixing_rate;
        let (lo, hi) = (0.5 * self.beta - width, 0.5 * self.beta + width);
        let mut best: f64 = 0.0;
        for a in 0..=s_steps {
            let s = lo + (hi - lo) * a as f64 / s_steps as f64;
            let g = self.mixing_density(s);
            for b in 0..=t_steps {
                let t = b as f64 / t_steps as f64;
                best = best.max(self.kernel.density(s - self.beta * t) / g);
            }
        }
        best
    }
}

/// Draws one generator path on a grid with `intervals` intervals.
pub fn sample_generator_path<R: Rng + ?Sized>(
    spec: &GeneratorSpec,
    intervals: usize,
    rng: &mut R,
) -> GridFunction {
    let draw = spec.draw_mixing(rng);
    spec.path(draw, intervals)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ValidationTolerances {
    /// Pointwise means must lie within this many standard errors of 1.
    pub se_multiple: f64,
    /// Relative tolerance for E(sup Z) and E(inf Z).
    pub relative: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        Self {
            se_multiple: 3.0,
            relative: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentCheck {
    pub estimate: f64,
    pub std_error: f64,
    pub target: f64,
    pub relative_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorValidation {
    pub kernel: String,
    pub beta: f64,
    pub mixing_rate: f64,
    pub bound_m: f64,
    pub n_mc: usize,
    pub grid_intervals: usize,
    pub mean_z: Vec<f64>,
    pub mean_z_std_error: Vec<f64>,
    /// Largest |mean − 1| / SE over the grid.
    pub max_abs_z_score: f64,
    pub means_pass: bool,
    pub sup_z: MomentCheck,
    pub inf_z: MomentCheck,
    pub max_sampled_z: f64,
    pub dense_ratio_sup: f64,
    pub bound_violation: bool,
    pub pass: bool,
}

/// Monte Carlo check of a generator: unit means on the grid, the generator
/// constant E(sup Z) = ‖1‖_D, E(inf Z) = 2Ψ(−β/2) and the bound Z ≤ m.
/// Failures are reported in the returned record.
pub fn validate_generator(
    spec: &GeneratorSpec,
    intervals: usize,
    n_mc: usize,
    key: StreamKey,
    tol: ValidationTolerances,
) -> Result<GeneratorValidation> {
    if n_mc < 10_000 {
        return Err(domain(format!("validation needs n_mc ≥ 10⁴, got {n_mc}")));
    }
    let points = intervals + 1;
    let mut sum = vec![0.0; points];
    let mut sum_sq = vec![0.0; points];
    let (mut sup_sum, mut sup_sq, mut inf_sum, mut inf_sq) = (0.0, 0.0, 0.0, 0.0);
    let mut max_z: f64 = 0.0;
    let mut path = Vec::with_capacity(points);
    let mut rng = key.rng();
    for _ in 0..n_mc {
        let draw = spec.draw_mixing(&mut rng);
        spec.fill_path(draw, intervals, &mut path);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (i, z) in path.iter().enumerate() {
            sum[i] += z;
            sum_sq[i] += z * z;
            lo = lo.min(*z);
            hi = hi.max(*z);
        }
        max_z = max_z.max(hi);
        sup_sum += hi;
        sup_sq += hi * hi;
        inf_sum += lo;
        inf_sq += lo * lo;
    }
    let n = n_mc as f64;
    let moments = |s: f64, sq: f64| {
        let mean = s / n;
        let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let mut mean_z = Vec::with_capacity(points);
    let mut mean_se = Vec::with_capacity(points);
    let mut max_score: f64 = 0.0;
    for i in 0..points {
        let (m, se) = moments(sum[i], sum_sq[i]);
        mean_z.push(m);
        mean_se.push(se);
        let score = if se > 0.0 {
            (m - 1.0).abs() / se
        } else if (m - 1.0).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        max_score = max_score.max(score);
    }
    let check = |(estimate, std_error): (f64, f64), target: f64| {
        let relative_error = (estimate - target) / target;
        MomentCheck {
            estimate,
            std_error,
            target,
            relative_error,
            pass: relative_error.abs() <= tol.relative,
        }
    };
    let unit = GridFunction::constant(intervals, -1.0)?;
    let generator_constant = d_norm(
        &unit,
        spec.beta,
        &spec.kernel,
        &QuadratureSettings::default(),
    )?;
    let sup_z = check(moments(sup_sum, sup_sq), generator_constant);
    let inf_z = check(
        moments(inf_sum, inf_sq),
        two_psi_half_beta(spec.beta, &spec.kernel),
    );
    let dense = spec.dense_ratio_sup(2000, 128);
    let bound_violation = max_z > spec.bound_m || dense > spec.bound_m;
    let means_pass = max_score <= tol.se_multiple;
    Ok(GeneratorValidation {
        kernel: spec.kernel.name().to_string(),
        beta: spec.beta,
        mixing_rate: spec.mixing_rate,
        bound_m: spec.bound_m,
        n_mc,
        grid_intervals: intervals,
        mean_z,
        mean_z_std_error: mean_se,
        max_abs_z_score: max_score,
        means_pass,
        pass: means_pass && sup_z.pass && inf_z.pass && !bound_violation,
        sup_z,
        inf_z,
        max_sampled_z: max_z,
        dense_ratio_sup: dense,
        bound_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn laplace_bound_matches_closed_form() {
        let spec = build_generator(&SmoothingKernel::laplace(), 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(spec.bound_m(), 2.0 * 0.5f64.exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(spec.bound_m(), 3.2974, epsilon = 1e-4);
        // Brute-force maximization over a dense (s, t) grid stays under m.
        // The exact supremum is e^{λβ/2}/λ, attained at s = 0 or s = β.
        let dense = spec.dense_ratio_sup(20_000, 200);
        assert!(dense <= spec.bound_m());
        assert_abs_diff_eq!(dense, 2.0 * 0.25f64.exp(), epsilon = 1e-2);
    }

    #[test]
    fn gaussian_bound_is_tight() {
        for (beta, lambda) in [(1.0, 0.5), (3.0, 0.7), (0.5, 0.3)] {
            let spec = build_generator(&SmoothingKernel::gaussian(), beta, lambda).unwrap();
            let dense = spec.dense_ratio_sup(6000, 200);
            assert!(dense <= spec.bound_m());
            assert!(dense > 0.999 * spec.bound_m());
        }
    }

    #[test]
    fn rejects_heavy_rates() {
        let k = SmoothingKernel::laplace();
        assert!(matches!(
            build_generator(&k, 1.0, 1.0),
            Err(Error::UnboundedRatio(_))
        ));
        assert!(matches!(
            build_generator(&k, 1.0, 1.5),
            Err(Error::UnboundedRatio(_))
        ));
        assert!(build_generator(&k, 1.0, 0.0).is_err());
        assert!(build_generator(&k, 0.0, 0.5).is_err());
    }

    #[test]
    fn mixing_density_has_unit_mass() {
        let spec = build_generator(&SmoothingKernel::gaussian(), 1.5, 0.5).unwrap();
        let mass =
            crate::quadrature::adaptive_simpson(|s| spec.mixing_density(s), -60.0, 60.0, 1e-12, 50);
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn paths_reproducible_and_bounded() {
        let spec = build_generator(&SmoothingKernel::laplace(), 1.0, 0.5).unwrap();
        let key = StreamKey::root(11);
        let a = sample_generator_path(&spec, 64, &mut key.rng());
        let b = sample_generator_path(&spec, 64, &mut key.rng());
        assert_eq!(a, b);
        let mut rng = key.child(1).rng();
        for _ in 0..10_000 {
            let p = sample_generator_path(&spec, 32, &mut rng);
            assert!(p.values().iter().all(|z| *z >= 0.0 && *z <= spec.bound_m()));
        }
    }

    #[test]
    fn degenerate_dependence_is_flat() {
        let spec = build_generator(&SmoothingKernel::gaussian(), 1e-12, 0.5).unwrap();
        let p = sample_generator_path(&spec, 16, &mut StreamKey::root(1).rng());
        let v = p.values();
        assert!(v.iter().all(|z| (z - v[0]).abs() <= 1e-9 * v[0]));
    }

    #[test]
    fn endpoint_reduction_matches_grid_minimum() {
        for k in [SmoothingKernel::laplace(), SmoothingKernel::gaussian()] {
            let spec = build_generator(&k, 1.7, 0.5).unwrap();
            let mut rng = StreamKey::root(5).rng();
            for _ in 0..2000 {
                let d = spec.draw_mixing(&mut rng);
                let p = spec.path(d, 128);
                assert_eq!(spec.inf_z(d), p.min());
                let grid_max = p.values().iter().copied().fold(0.0, f64::max);
                assert_eq!(spec.sup_z(d, 128), grid_max);
            }
        }
    }

    #[test]
    fn mean_and_constant_from_many_paths() {
        let spec = build_generator(&SmoothingKernel::laplace(), 1.0, 0.5).unwrap();
        let report = validate_generator(
            &spec,
            64,
            100_000,
            StreamKey::root(2024),
            Default::default(),
        )
        .unwrap();
        assert!(report.means_pass, "max z-score {}", report.max_abs_z_score);
        assert!(report.mean_z.iter().all(|m| (m - 1.0).abs() < 0.01));
        assert!((report.sup_z.estimate - 1.5).abs() < 0.015);
        assert!((report.inf_z.estimate - (-0.5f64).exp()).abs() < 0.01 * (-0.5f64).exp());
        assert!(!report.bound_violation);
        assert!(report.pass);
    }

    #[test]
    fn generator_constant_does_not_depend_on_mixing_rate() {
        for lambda in [0.3, 0.5, 0.7] {
            let spec = build_generator(&SmoothingKernel::laplace(), 1.0, lambda).unwrap();
            let r = validate_generator(&spec, 64, 100_000, StreamKey::root(77), Default::default())
                .unwrap();
            assert!(r.sup_z.pass, "λ = {lambda}: {:?}", r.sup_z);
        }
    }

    #[test]
    fn degenerate_spec_validates() {
        let spec = build_generator(&SmoothingKernel::laplace(), 1e-9, 0.5).unwrap();
        let r =
            validate_generator(&spec, 16, 20_000, StreamKey::root(3), Default::default()).unwrap();
        assert!((r.sup_z.estimate - 1.0).abs() < 0.01);
        assert!((r.inf_z.estimate - 1.0).abs() < 0.01);
    }

    #[test]
    fn understated_bound_is_flagged() {
        let spec = build_generator(&SmoothingKernel::laplace(), 1.0, 0.99)
            .unwrap()
            .with_bound_unchecked(1.2);
        let r =
            validate_generator(&spec, 16, 10_000, StreamKey::root(4), Default::default()).unwrap();
        assert!(r.bound_violation);
        assert!(!r.pass);
    }

    #[test]
    fn too_few_draws_rejected() {
        let spec = build_generator(&SmoothingKernel::laplace(), 1.0, 0.5).unwrap();
        assert!(
            validate_generator(&spec, 16, 100, StreamKey::root(1), Default::default()).is_err()
        );
    }
}
