//! Standard GPPs and their δ-neighborhoods.
//!
//! With a generator Z, an independent Y > 0 with df H and a cutoff M < 0,
//!
//! ```text
//! X_t = max(−Y / Z_t, M)
//! ```
//!
//! is a standard GPP when Y is uniform on (0, 1), and lies in a
//! δ-neighborhood of it when H(u) = u + A u^{1+δ} + o(u^{1+δ}) as u ↓ 0.
//! Paths are generated in chunks of [`CHUNK_PATHS`] with one random stream
//! per chunk, so results do not depend on how the work is scheduled.

use rand::Rng;
use rand_distr::{Distribution, Open01};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dnorm::{t_functional, QuadratureSettings};
use crate::error::{domain, Error, Result};
use crate::generator::GeneratorSpec;
use crate::grid::GridFunction;
use crate::rng::{StreamKey, CHUNK_PATHS};

pub const DEFAULT_CUTOFF: f64 = -10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum YFamily {
    Uniform,
    StandardExponential,
    Expansion,
}

/// Distribution of the radial variable Y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YDistribution {
    family: YFamily,
    a: f64,
    delta: f64,
    /// Expansion family only (unused otherwise): H(u) = u + A u^{1+δ} on
    /// [0, knot], linear with slope H'(knot) above it until it reaches 1.
    knot: f64,
}

impl YDistribution {
    pub fn uniform() -> Self {
        Self {
            family: YFamily::Uniform,
            a: 0.0,
            delta: 1.0,
            knot: 1.0,
        }
    }

    /// H(u) = 1 − e^{−u} = u − u²/2 + …, so A = −1/2 and δ = 1.
    pub fn standard_exponential() -> Self {
        Self {
            family: YFamily::StandardExponential,
            a: -0.5,
            delta: 1.0,
            knot: 0.0,
        }
    }

    /// H(u) = u + A u^{1+δ} near zero with a default knot: for A < 0 the
    /// largest u₀ ≤ 1/2 with H'(u₀) ≥ 1/2, for A ≥ 0 the largest u₀ ≤ 1/2
    /// with H(u₀) ≤ 1/2.
    pub fn expansion(a: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !a.is_finite() {
            return Err(domain(format!(
                "expansion needs δ > 0 and finite A, got A = {a}, δ = {delta}"
            )));
        }
        let knot = if a < 0.0 {
            (1.0 / (2.0 * a.abs() * (1.0 + delta)))
                .powf(1.0 / delta)
                .min(0.5)
        } else {
            let h = |u: f64| u + a * u.powf(1.0 + delta);
            if h(0.5) <= 0.5 {
                0.5
            } else {
                let (mut lo, mut hi) = (0.0, 0.5);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if h(mid) > 0.5 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                lo
            }
        };
        Self::expansion_with_knot(a, delta, knot)
    }

    /// Requires H strictly increasing on [0, u₀], i.e.
    /// 1 + A(1+δ)u₀^δ > 0, and H(u₀) < 1.
    pub fn expansion_with_knot(a: f64, delta: f64, knot: f64) -> Result<Self> {
        if !(delta > 0.0) || !a.is_finite() {
            return Err(domain(format!(
                "expansion needs δ > 0 and finite A, got A = {a}, δ = {delta}"
            )));
        }
        if !(knot > 0.0 && knot.is_finite()) {
            return Err(domain(format!("knot u₀ must be positive, got {knot}")));
        }
        let y = Self {
            family: YFamily::Expansion,
            a,
            delta,
            knot,
        };
        if !(y.expansion_slope(knot) > 0.0) {
            return Err(domain(format!(
                "H is not increasing on [0, {knot}]: 1 + A(1+δ)u₀^δ = {}",
                y.expansion_slope(knot)
            )));
        }
        if !(y.expansion_poly(knot) < 1.0) {
            return Err(domain(format!(
                "H(u₀) = {} must stay below 1",
                y.expansion_poly(knot)
            )));
        }
        Ok(y)
    }

    pub fn family(&self) -> YFamily {
        self.family
    }

    /// (A, δ).
    pub fn coefficients(&self) -> (f64, f64) {
        (self.a, self.delta)
    }

    pub fn knot(&self) -> Option<f64> {
        (self.family == YFamily::Expansion).then_some(self.knot)
    }

    pub fn label(&self) -> String {
        match self.family {
            YFamily::Uniform => "uniform".into(),
            YFamily::StandardExponential => "exponential".into(),
            YFamily::Expansion => format!(
                "expansion(A={},delta={},u0={})",
                self.a, self.delta, self.knot
            ),
        }
    }

    fn expansion_poly(&self, u: f64) -> f64 {
        u + self.a * u.powf(1.0 + self.delta)
    }

    fn expansion_slope(&self, u: f64) -> f64 {
        1.0 + self.a * (1.0 + self.delta) * u.powf(self.delta)
    }

    /// H(u).
    pub fn cdf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match self.family {
            YFamily::Uniform => u.min(1.0),
            YFamily::StandardExponential => -(-u).exp_m1(),
            YFamily::Expansion => {
                if u <= self.knot {
                    self.expansion_poly(u)
                } else {
                    let h0 = self.expansion_poly(self.knot);
                    (h0 + self.expansion_slope(self.knot) * (u - self.knot)).min(1.0)
                }
            }
        }
    }

    /// H⁻¹(q) for q ∈ (0, 1).
    pub fn quantile(&self, q: f64) -> f64 {
        match self.family {
            YFamily::Uniform => q,
            YFamily::StandardExponential => -(-q).ln_1p(),
            YFamily::Expansion => {
                let h0 = self.expansion_poly(self.knot);
                if q > h0 {
                    return self.knot + (q - h0) / self.expansion_slope(self.knot);
                }
                let (mut lo, mut hi) = (0.0, self.knot);
                let mut u = q.min(self.knot);
                for _ in 0..200 {
                    let fu = self.expansion_poly(u) - q;
                    if fu > 0.0 {
                        hi = u;
                    } else {
                        lo = u;
                    }
                    let mut next = u - fu / self.expansion_slope(u);
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - u).abs() <= 1e-15 * u.max(1e-300) || hi - lo <= 1e-300 {
                        u = next;
                        break;
                    }
                    u = next;
                }
                u
            }
        }
    }

    /// Draws Y from one uniform variate, so that `uniform()` consumes the
    /// stream exactly like the U of a GPP.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let q: f64 = Open01.sample(rng);
        self.quantile(q)
    }
}

/// What produced a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Gpp,
    Neighborhood { y: YDistribution },
}

/// n sample paths on a common grid, all with values in [M, 0].
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessBatch {
    paths: Vec<GridFunction>,
    cutoff: f64,
    bound_m: f64,
    provenance: Provenance,
}

impl ProcessBatch {
    pub fn new(
        paths: Vec<GridFunction>,
        cutoff: f64,
        bound_m: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        check_cutoff(cutoff)?;
        if let Some(first) = paths.first() {
            for p in &paths {
                first.ensure_same_grid(p)?;
                if p.values().iter().any(|v| !(*v <= 0.0 && *v >= cutoff)) {
                    return Err(domain("path values must lie in [M, 0]"));
                }
            }
        }
        Ok(Self {
            paths,
            cutoff,
            bound_m,
            provenance,
        })
    }

    pub fn paths(&self) -> &[GridFunction] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn bound_m(&self) -> f64 {
        self.bound_m
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn intervals(&self) -> Option<usize> {
        self.paths.first().map(GridFunction::intervals)
    }

    /// min(|M|, 1/m): the largest |c|·‖f‖∞ for which exceedance
    /// probabilities of the GPP are exact.
    pub fn threshold_limit(&self) -> f64 {
        threshold_limit(self.cutoff, self.bound_m)
    }

    /// sup_t X_t / f(t) for every path. A path exceeds |c|f iff its score
    /// is below |c|.
    pub fn scores(&self, f: &GridFunction) -> Result<Vec<f64>> {
        if let Some(first) = self.paths.first() {
            first.ensure_same_grid(f)?;
        }
        f.ensure_threshold()?;
        Ok(self
            .paths
            .iter()
            .map(|p| {
                p.values()
                    .iter()
                    .zip(f.values())
                    .map(|(x, fv)| if *fv == 0.0 { f64::INFINITY } else { x / fv })
                    .fold(0.0, f64::max)
            })
            .collect())
    }
}

fn check_cutoff(cutoff: f64) -> Result<()> {
    if !(cutoff < 0.0) || !cutoff.is_finite() {
        return Err(domain(format!(
            "cutoff M must be negative and finite, got {cutoff}"
        )));
    }
    Ok(())
}

/// min(|M|, 1/m).
pub fn threshold_limit(cutoff: f64, bound_m: f64) -> f64 {
    cutoff.abs().min(1.0 / bound_m)
}

/// Checks |c|·‖f‖∞ ≤ min(|M|, 1/m).
pub fn check_threshold(c: f64, f_sup: f64, cutoff: f64, bound_m: f64) -> Result<()> {
    if !(c < 0.0) {
        return Err(domain(format!("threshold c must be negative, got {c}")));
    }
    let scaled = c.abs() * f_sup;
    let bound = threshold_limit(cutoff, bound_m);
    if scaled > bound {
        return Err(Error::ThresholdTooLarge {
            scaled,
            bound,
            cutoff,
            bound_m,
        });
    }
    Ok(())
}

fn chunk_ranges(n: usize) -> impl IndexedParallelIterator<Item = (usize, usize)> {
    let chunks = n.div_ceil(CHUNK_PATHS);
    (0..chunks)
        .into_par_iter()
        .map(move |j| (j, CHUNK_PATHS.min(n - j * CHUNK_PATHS)))
}

fn simulate_paths(
    spec: &GeneratorSpec,
    cutoff: f64,
    y: &YDistribution,
    n: usize,
    intervals: usize,
    key: StreamKey,
    provenance: Provenance,
) -> Result<ProcessBatch> {
    check_cutoff(cutoff)?;
    if intervals < 2 {
        return Err(domain("paths need at least two grid intervals"));
    }
    let paths: Vec<GridFunction> = chunk_ranges(n)
        .flat_map_iter(|(j, len)| {
            let mut rng = key.child(j as u64).rng();
            let mut z = Vec::with_capacity(intervals + 1);
            (0..len)
                .map(|_| {
                    let draw = spec.draw_mixing(&mut rng);
                    let radial = y.sample(&mut rng);
                    spec.fill_path(draw, intervals, &mut z);
                    let values = z.iter().map(|zt| (-radial / zt).max(cutoff)).collect();
                    GridFunction::new(values).expect("grid has at least two intervals")
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(ProcessBatch {
        paths,
        cutoff,
        bound_m: spec.bound_m(),
        provenance,
    })
}

/// n independent GPP paths V_t = max(−U/Z_t, M).
pub fn sample_gpp(
    spec: &GeneratorSpec,
    cutoff: f64,
    n: usize,
    intervals: usize,
    key: StreamKey,
) -> Result<ProcessBatch> {
    simulate_paths(
        spec,
        cutoff,
        &YDistribution::uniform(),
        n,
        intervals,
        key,
        Provenance::Gpp,
    )
}

/// n independent paths X_t = max(−Y/Z_t, M) with Y ~ `y`.
pub fn sample_neighborhood(
    spec: &GeneratorSpec,
    cutoff: f64,
    y: &YDistribution,
    n: usize,
    intervals: usize,
    key: StreamKey,
) -> Result<ProcessBatch> {
    simulate_paths(
        spec,
        cutoff,
        y,
        n,
        intervals,
        key,
        Provenance::Neighborhood { y: *y },
    )
}

/// Per-path scores sup_t X_t/f(t) without materializing the paths.
///
/// Consumes the random streams exactly like [`sample_neighborhood`] and
/// computes inf_t |f(t)| Z_t on the same grid, so exceedance decisions
/// agree path by path. Scores are min(Y / inf_t(|f|Z), |M|/‖f‖∞); this is
/// the exact score whenever it lies below the validity bound. `None` means
/// the constant threshold f ≡ −1, where the score is exactly −min_t X_t.
pub fn simulate_scores(
    spec: &GeneratorSpec,
    cutoff: f64,
    y: &YDistribution,
    n: usize,
    threshold: Option<&GridFunction>,
    key: StreamKey,
) -> Result<Vec<f64>> {
    check_cutoff(cutoff)?;
    if let Some(f) = threshold {
        f.ensure_threshold()?;
    }
    let cap = match threshold {
        Some(f) => cutoff.abs() / f.sup_norm(),
        None => cutoff.abs(),
    };
    Ok(chunk_ranges(n)
        .flat_map_iter(|(j, len)| {
            let mut rng = key.child(j as u64).rng();
            (0..len)
                .map(|_| {
                    let draw = spec.draw_mixing(&mut rng);
                    let radial = y.sample(&mut rng);
                    let inf = match threshold {
                        Some(f) => spec.inf_weighted(draw, f),
                        None => spec.inf_z(draw),
                    };
                    (radial / inf).min(cap)
                })
                .collect::<Vec<_>>()
        })
        .collect())
}

/// P(V > c f) = |c|·T(f, β, ψ) for the GPP with generator `spec`.
pub fn survival_oracle(
    f: &GridFunction,
    c: f64,
    spec: &GeneratorSpec,
    cutoff: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    f.ensure_threshold()?;
    if c == 0.0 {
        return Ok(0.0);
    }
    check_threshold(c, f.sup_norm(), cutoff, spec.bound_m())?;
    Ok(c.abs() * t_functional(f, spec.beta(), spec.kernel(), settings)?)
}

/// Monte Carlo estimate of K(f) = A·E(I^{1+δ})/E(I), I = inf_t |f(t)| Z_t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KEstimate {
    pub value: f64,
    pub std_error: f64,
    pub numerator_mean: f64,
    pub denominator_mean: f64,
    pub n_mc: usize,
}

pub fn k_functional(
    f: &GridFunction,
    y: &YDistribution,
    spec: &GeneratorSpec,
    n_mc: usize,
    key: StreamKey,
) -> Result<KEstimate> {
    if n_mc < 10_000 {
        return Err(domain(format!("K(f) needs n_mc ≥ 10⁴, got {n_mc}")));
    }
    f.ensure_threshold()?;
    let (a, delta) = y.coefficients();
    let zero = KEstimate {
        value: 0.0,
        std_error: 0.0,
        numerator_mean: 0.0,
        denominator_mean: 0.0,
        n_mc,
    };
    if a == 0.0 || f.min_abs() == 0.0 {
        return Ok(zero);
    }
    let draws: Vec<f64> = chunk_ranges(n_mc)
        .flat_map_iter(|(j, len)| {
            let mut rng = key.child(j as u64).rng();
            (0..len)
                .map(|_| spec.inf_weighted(spec.draw_mixing(&mut rng), f))
                .collect::<Vec<_>>()
        })
        .collect();
    let n = n_mc as f64;
    let num = draws.iter().map(|i| i.powf(1.0 + delta)).sum::<f64>() / n;
    let den = draws.iter().sum::<f64>() / n;
    if den == 0.0 {
        return Ok(zero);
    }
    let ratio = num / den;
    // Delta method on the ratio of means.
    let var = draws
        .iter()
        .map(|i| {
            let d = i.powf(1.0 + delta) - ratio * i;
            d * d
        })
        .sum::<f64>()
        / (n - 1.0);
    Ok(KEstimate {
        value: a * ratio,
        std_error: a.abs() * (var / n).sqrt() / den,
        numerator_mean: num,
        denominator_mean: den,
        n_mc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::build_generator;
    use crate::grid::ThresholdPreset;
    use crate::kernel::SmoothingKernel;
    use approx::assert_abs_diff_eq;

    fn laplace_spec(beta: f64) -> GeneratorSpec {
        build_generator(&SmoothingKernel::laplace(), beta, 0.5).unwrap()
    }

    #[test]
    fn expansion_coefficients_recovered() {
        let cases = [
            YDistribution::standard_exponential(),
            YDistribution::expansion(-0.5, 1.0).unwrap(),
            YDistribution::expansion(0.8, 0.5).unwrap(),
            YDistribution::expansion(-2.0, 2.0).unwrap(),
        ];
        for y in cases {
            let (a, delta) = y.coefficients();
            for u in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
                let ratio = (y.cdf(u) - u) / u.powf(1.0 + delta);
                assert!(
                    (ratio - a).abs() <= 1e-2 * a.abs().max(1.0),
                    "{} at u={u}: {ratio}",
                    y.label()
                );
            }
            if delta <= 1.0 {
                let r6 = (y.cdf(1e-6) - 1e-6) / 1e-6f64.powf(1.0 + delta);
                assert_abs_diff_eq!(r6, a, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn cdf_quantile_inverse() {
        let cases = [
            YDistribution::uniform(),
            YDistribution::standard_exponential(),
            YDistribution::expansion(-0.5, 1.0).unwrap(),
            YDistribution::expansion(1.5, 1.0).unwrap(),
        ];
        for y in cases {
            let mut prev = 0.0;
            for i in 1..200 {
                let q = i as f64 / 200.0;
                let u = y.quantile(q);
                assert!(u > prev);
                prev = u;
                assert_abs_diff_eq!(y.cdf(u), q, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn expansion_rejects_non_monotone_knot() {
        assert!(YDistribution::expansion_with_knot(-1.0, 1.0, 0.6).is_err());
        assert!(YDistribution::expansion_with_knot(-1.0, 1.0, 0.4).is_ok());
        assert!(YDistribution::expansion_with_knot(2.0, 1.0, 0.9).is_err());
        assert!(YDistribution::expansion(0.0, 0.0).is_err());
    }

    #[test]
    fn batches_are_deterministic_and_capped() {
        let spec = laplace_spec(1.0);
        let key = StreamKey::root(9);
        let a = sample_gpp(&spec, -10.0, 300, 32, key).unwrap();
        let b = sample_gpp(&spec, -10.0, 300, 32, key).unwrap();
        assert_eq!(a, b);
        let tight = sample_gpp(&spec, -0.5, 5000, 16, key).unwrap();
        for p in tight.paths() {
            assert!(p.values().iter().all(|v| *v <= 0.0 && *v >= -0.5));
        }
        assert!(tight.paths().iter().any(|p| p.min() == -0.5));
    }

    #[test]
    fn rejects_nonnegative_cutoff() {
        let spec = laplace_spec(1.0);
        assert!(sample_gpp(&spec, 0.0, 10, 8, StreamKey::root(1)).is_err());
        assert!(sample_gpp(&spec, 1.0, 10, 8, StreamKey::root(1)).is_err());
    }

    #[test]
    fn uniform_neighborhood_is_the_gpp() {
        let spec = laplace_spec(1.0);
        let key = StreamKey::root(21);
        let gpp = sample_gpp(&spec, -10.0, 200, 16, key).unwrap();
        let nb =
            sample_neighborhood(&spec, -10.0, &YDistribution::uniform(), 200, 16, key).unwrap();
        assert_eq!(gpp.paths(), nb.paths());
    }

    #[test]
    fn streamed_scores_match_paths() {
        let spec = laplace_spec(1.3);
        let key = StreamKey::root(4);
        let y = YDistribution::standard_exponential();
        let batch = sample_neighborhood(&spec, -10.0, &y, 9000, 64, key).unwrap();
        let unit = GridFunction::constant(64, -1.0).unwrap();
        let from_paths = batch.scores(&unit).unwrap();
        let streamed = simulate_scores(&spec, -10.0, &y, 9000, None, key).unwrap();
        assert_eq!(from_paths, streamed);

        let f = ThresholdPreset::ExpDecay.grid(64);
        let from_paths = batch.scores(&f).unwrap();
        let streamed = simulate_scores(&spec, -10.0, &y, 9000, Some(&f), key).unwrap();
        for c in [0.05, 0.1, 0.2] {
            let a: Vec<bool> = from_paths.iter().map(|s| *s < c).collect();
            let b: Vec<bool> = streamed.iter().map(|s| *s < c).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn survival_oracle_values() {
        let spec = laplace_spec(1.0);
        let s = QuadratureSettings::default();
        let unit = GridFunction::constant(256, -1.0).unwrap();
        assert_abs_diff_eq!(
            survival_oracle(&unit, -0.05, &spec, -10.0, &s).unwrap(),
            0.05 * (-0.5f64).exp(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            survival_oracle(&unit, -0.05, &spec, -10.0, &s).unwrap(),
            0.030327,
            epsilon = 1e-6
        );
        assert_eq!(survival_oracle(&unit, 0.0, &spec, -10.0, &s).unwrap(), 0.0);
        let spec_half = laplace_spec(0.5);
        let f = ThresholdPreset::ExpDecay.grid(256);
        assert_abs_diff_eq!(
            survival_oracle(&f, -0.1, &spec_half, -10.0, &s).unwrap(),
            0.036788,
            epsilon = 1e-6
        );
    }

    #[test]
    fn survival_oracle_enforces_validity_bound() {
        let spec = laplace_spec(1.0);
        let unit = GridFunction::constant(16, -1.0).unwrap();
        let err =
            survival_oracle(&unit, -0.5, &spec, -10.0, &QuadratureSettings::default()).unwrap_err();
        match err {
            Error::ThresholdTooLarge { bound, .. } => {
                assert_abs_diff_eq!(bound, 1.0 / spec.bound_m())
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("min(|M|, 1/m)"));
        let err =
            survival_oracle(&unit, -0.2, &spec, -0.1, &QuadratureSettings::default()).unwrap_err();
        assert!(matches!(err, Error::ThresholdTooLarge { bound, .. } if bound == 0.1));
    }

    #[test]
    fn k_functional_trivial_cases() {
        let spec = laplace_spec(1.0);
        let unit = GridFunction::constant(16, -1.0).unwrap();
        let k = k_functional(
            &unit,
            &YDistribution::uniform(),
            &spec,
            10_000,
            StreamKey::root(1),
        )
        .unwrap();
        assert_eq!(k.value, 0.0);
        let mut v = vec![-1.0; 17];
        v[3] = 0.0;
        let zero_somewhere = GridFunction::new(v).unwrap();
        let k = k_functional(
            &zero_somewhere,
            &YDistribution::standard_exponential(),
            &spec,
            10_000,
            StreamKey::root(1),
        )
        .unwrap();
        assert_eq!(k.value, 0.0);
        assert!(k_functional(
            &unit,
            &YDistribution::standard_exponential(),
            &spec,
            100,
            StreamKey::root(1)
        )
        .is_err());
    }

    #[test]
    fn k_functional_exponential_is_negative() {
        let spec = laplace_spec(1.0);
        let unit = GridFunction::constant(16, -1.0).unwrap();
        let k = k_functional(
            &unit,
            &YDistribution::standard_exponential(),
            &spec,
            200_000,
            StreamKey::root(8),
        )
        .unwrap();
        // E(inf Z) = e^{−1/2}.
        assert!((k.denominator_mean - (-0.5f64).exp()).abs() < 4.0 * 0.01);
        assert!(k.value < 0.0);
        assert_abs_diff_eq!(
            k.value,
            -0.5 * k.numerator_mean / k.denominator_mean,
            epsilon = 1e-15
        );
        assert!(k.std_error > 0.0 && k.std_error < 0.01);
    }

    #[test]
    fn gpp_exceedance_frequency() {
        // P(V > c) = |c|·2Ψ(−β/2) for the Laplace kernel, β = 1, |c| = 0.05.
        let spec = laplace_spec(1.0);
        let n = 1_000_000;
        let scores = simulate_scores(
            &spec,
            -10.0,
            &YDistribution::uniform(),
            n,
            None,
            StreamKey::root(31),
        )
        .unwrap();
        let p_hat = scores.iter().filter(|s| **s < 0.05).count() as f64 / n as f64;
        let p = 0.05 * (-0.5f64).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p_hat - p).abs() <= 3.0 * se, "p̂ = {p_hat}, p = {p}");
    }

    #[test]
    fn gpp_functional_df() {
        // P(V ≤ c f) = 1 − |c|·‖f‖_D for small |c|.
        let spec = laplace_spec(1.0);
        let s = QuadratureSettings::default();
        let n = 100_000;
        let batch = sample_gpp(&spec, -10.0, n, 128, StreamKey::root(13)).unwrap();
        for f in [
            GridFunction::constant(128, -1.0).unwrap(),
            ThresholdPreset::ExpDecay.grid(128),
        ] {
            let c = 0.1;
            let below = batch
                .paths()
                .iter()
                .filter(|p| {
                    p.values()
                        .iter()
                        .zip(f.values())
                        .all(|(v, fv)| *v <= c * fv)
                })
                .count() as f64
                / n as f64;
            let p = 1.0 - c * crate::dnorm::d_norm(&f, 1.0, spec.kernel(), &s).unwrap();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((below - p).abs() <= 3.0 * se, "{below} vs {p}");
        }
    }

    #[test]
    fn neighborhood_condition_trend() {
        // (P(X > c)/(|c|ϑ) − 1)/|c| approaches K(−1) as |c| ↓ 0. The
        // conditional survival E(H(|c| I)) is averaged over the same draws
        // of I, which removes the Bernoulli noise from the trend check.
        let spec = laplace_spec(1.0);
        let y = YDistribution::standard_exponential();
        let unit = GridFunction::constant(16, -1.0).unwrap();
        let key = StreamKey::root(55);
        let k = k_functional(&unit, &y, &spec, 400_000, key).unwrap();
        let mut rng = key.child(0).rng();
        let infs: Vec<f64> = (0..400_000)
            .map(|_| spec.inf_z(spec.draw_mixing(&mut rng)))
            .collect();
        let theta = (-0.5f64).exp();
        let gaps: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|c| {
                let p = infs.iter().map(|i| y.cdf(c * i)).sum::<f64>() / infs.len() as f64;
                let scaled = (p / (c * theta) - 1.0) / c;
                (scaled - k.value).abs()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps[3] < 0.05);

        // Indicator frequencies agree with the conditional survival.
        let n = 1_000_000;
        let scores = simulate_scores(&spec, -10.0, &y, n, None, StreamKey::root(56)).unwrap();
        let c = 0.2;
        let p_hat = scores.iter().filter(|s| **s < c).count() as f64 / n as f64;
        let p = c * theta * (1.0 + c * k.value);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        // Second-order term of the expansion is O(c²) relative.
        assert!(
            (p_hat / (c * theta) - (1.0 + c * k.value)).abs() <= (3.0 * se) / (c * theta) + 0.02
        );
    }
}
