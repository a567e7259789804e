//! Efficiency bound 1/(L²ϑ₀) and the ARE of ϑ̂, with a small simulation of
//! √(n|c|)(ϑ̂ − ϑ₀).

use gpplab::estimators::theta_hat;
use gpplab::generator::build_generator;
use gpplab::kernel::{SmoothingKernel, ThetaParam};
use gpplab::lan::{efficiency_quantities, Slope};
use gpplab::processes::{simulate_scores, YDistribution};
use gpplab::rng::StreamKey;

fn main() -> gpplab::Result<()> {
    let theta0 = 0.5;
    for slope in [Slope::Reciprocal, Slope::Value(1.5), Slope::Value(2.5)] {
        let e = efficiency_quantities(theta0, slope)?;
        println!(
            "{slope:?}: sigma2_min = {:.4}, ARE = {:.4}",
            e.sigma2_minimum, e.are
        );
    }

    let kernel = SmoothingKernel::laplace();
    let beta = kernel.beta_from_theta(ThetaParam::new(theta0)?);
    let spec = build_generator(&kernel, beta.value(), 0.5)?;
    let (n, reps) = (100_000, 200);
    let c = -1.0 / (n as f64).sqrt();
    let rate = (n as f64 * c.abs()).sqrt();
    let root = StreamKey::root(3);
    let errs = (0..reps)
        .map(|r| {
            let scores = simulate_scores(
                &spec,
                -10.0,
                &YDistribution::uniform(),
                n,
                None,
                root.child(r),
            )?;
            let tau = scores.iter().filter(|&&s| s < c.abs()).count();
            Ok(rate * (theta_hat(tau, n, c)?.value - theta0))
        })
        .collect::<gpplab::Result<Vec<f64>>>()?;
    let mean = errs.iter().sum::<f64>() / reps as f64;
    let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    println!("n = {n}, R = {reps}: mean {mean:+.4}, variance {var:.4} (bound {theta0})");
    Ok(())
}
