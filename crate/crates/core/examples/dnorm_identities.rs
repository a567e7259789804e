//! D-norm, T-functional and the identity T(-1, β) = 2Ψ(-β/2).

use gpplab::dnorm::{d_norm, t_functional, two_psi_half_beta, QuadratureSettings};
use gpplab::grid::ThresholdPreset;
use gpplab::kernel::SmoothingKernel;

fn main() -> gpplab::Result<()> {
    let settings = QuadratureSettings::default();
    let unit = ThresholdPreset::Constant.grid(2);
    println!(
        "{:<10} {:>6} {:>12} {:>12} {:>12}",
        "kernel", "beta", "||1||_D", "T(-1)", "2Psi(-b/2)"
    );
    for kernel in [SmoothingKernel::laplace(), SmoothingKernel::gaussian()] {
        for beta in [0.25, 0.5, 1.0, 2.0, 4.0] {
            println!(
                "{:<10} {:>6} {:>12.8} {:>12.8} {:>12.8}",
                kernel.name(),
                beta,
                d_norm(&unit, beta, &kernel, &settings)?,
                t_functional(&unit, beta, &kernel, &settings)?,
                two_psi_half_beta(beta, &kernel),
            );
        }
    }
    Ok(())
}
