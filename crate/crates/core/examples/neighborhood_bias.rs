//! A neighborhood of the GPP: exceedance probabilities pick up the factor
//! 1 + |c|^δ K(-1), which biases Ψ̂ at shrinking thresholds.

use gpplab::dnorm::{t_functional, QuadratureSettings};
use gpplab::generator::build_generator;
use gpplab::grid::GridFunction;
use gpplab::kernel::SmoothingKernel;
use gpplab::processes::{k_functional, simulate_scores, YDistribution};
use gpplab::rng::StreamKey;

fn main() -> gpplab::Result<()> {
    let kernel = SmoothingKernel::laplace();
    let spec = build_generator(&kernel, 1.0, 0.5)?;
    let y = YDistribution::standard_exponential();
    let (a, delta) = y.coefficients();
    println!("Y = {}: A = {a}, delta = {delta}", y.label());

    let unit = GridFunction::constant(2, -1.0)?;
    let k = k_functional(&unit, &y, &spec, 400_000, StreamKey::root(1))?;
    println!("K(-1) = {:.4} ± {:.4}", k.value, k.std_error);

    let t = t_functional(&unit, 1.0, &kernel, &QuadratureSettings::default())?;
    let n = 1_000_000;
    let scores = simulate_scores(&spec, -10.0, &y, n, None, StreamKey::root(2))?;
    println!("{:>6} {:>12} {:>12}", "|c|", "P(X>c)/|c|T", "1+|c|^d K");
    for c in [0.25, 0.1, 0.05, 0.02] {
        let freq = scores.iter().filter(|&&s| s < c).count() as f64 / n as f64;
        let expansion = 1.0 + c.powf(delta) * k.value;
        println!("{c:>6} {:>12.4} {expansion:>12.4}", freq / (c * t));
    }
    Ok(())
}
