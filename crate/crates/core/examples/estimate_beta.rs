//! Ψ̂, β̂, ϑ̂ and ϑ* at a fixed threshold, with their limiting variances.

use gpplab::estimators::{
    asymptotic_moments, beta_hat, psi_hat, theta_hat, theta_star, GppSurvival, Scaling,
};
use gpplab::generator::build_generator;
use gpplab::kernel::{ScaleParam, SmoothingKernel};
use gpplab::processes::sample_gpp;
use gpplab::rng::StreamKey;

fn main() -> gpplab::Result<()> {
    let kernel = SmoothingKernel::laplace();
    let beta = ScaleParam::new(2.0)?;
    let c = -0.1;
    let spec = build_generator(&kernel, beta.value(), 0.5)?;
    let batch = sample_gpp(&spec, -10.0, 50_000, 16, StreamKey::root(2))?;

    let psi = psi_hat(&batch, c)?;
    let reports = [
        psi.clone(),
        beta_hat(&psi, &kernel)?,
        theta_hat(psi.exceedances, batch.len(), c)?,
        theta_star(psi.exceedances, batch.len(), &GppSurvival::new(c)?)?,
    ];
    for r in reports {
        let r = r.with_target(beta, &kernel, Scaling::Fixed { c })?;
        let m = asymptotic_moments(r.estimator, beta, &kernel, Scaling::Fixed { c })?;
        println!(
            "{:<11} {:>10.6}  truth {:>9.6}  sqrt(n)*err {:>8.3}  limit var {:>9.4}  {:?}",
            r.estimator.name(),
            r.value,
            r.truth.unwrap_or(f64::NAN),
            r.normalized_error.unwrap_or(f64::NAN),
            m.variance,
            r.flag
        );
    }
    Ok(())
}
