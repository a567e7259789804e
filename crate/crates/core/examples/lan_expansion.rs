//! Log-likelihood ratio against its quadratic LAN approximation on one
//! GPP sample per sample size.

use gpplab::estimators::GppSurvival;
use gpplab::generator::build_generator;
use gpplab::kernel::{SmoothingKernel, ThetaParam};
use gpplab::lan::{
    central_sequence, lan_quadratic, local_alternative, loglik_ratio, ExceedanceSample, LanModel,
    Slope,
};
use gpplab::processes::{simulate_scores, YDistribution};
use gpplab::rng::StreamKey;

fn main() -> gpplab::Result<()> {
    let kernel = SmoothingKernel::laplace();
    let theta0 = 0.5;
    let beta = kernel.beta_from_theta(ThetaParam::new(theta0)?);
    let spec = build_generator(&kernel, beta.value(), 0.5)?;
    for (i, n) in [10_000usize, 100_000, 1_000_000].into_iter().enumerate() {
        let c = -1.0 / (n as f64).sqrt();
        let scores = simulate_scores(
            &spec,
            -10.0,
            &YDistribution::uniform(),
            n,
            None,
            StreamKey::root(i as u64),
        )?;
        let sample = ExceedanceSample::from_scores(&scores, c)?;
        let model = LanModel::new(theta0, Slope::Reciprocal, 1.0, GppSurvival::new(c)?)?;
        let z = central_sequence(&sample, theta0);
        print!("n = {n:>7}, tau = {:>5}, Z_n = {z:+.3}:", sample.tau);
        for xi in [-1.0, 1.0, 2.0] {
            let ll = loglik_ratio(&sample, &model, local_alternative(theta0, xi, n, c))?;
            let q = lan_quadratic(xi, model.l(), theta0, z);
            print!("  xi={xi:+}: L={ll:+.3} quad={q:+.3}");
        }
        println!();
    }
    Ok(())
}
