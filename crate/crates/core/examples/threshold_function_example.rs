//! T(f, β) for f(t) = -e^{-t}: flat at e^{-1} up to β = 1, then e^{-(1+β)/2}.

use gpplab::dnorm::{t_functional, QuadratureSettings};
use gpplab::grid::{ThresholdPreset, DEFAULT_INTERVALS};
use gpplab::kernel::SmoothingKernel;

fn main() -> gpplab::Result<()> {
    let f = ThresholdPreset::ExpDecay.grid(DEFAULT_INTERVALS);
    let kernel = SmoothingKernel::laplace();
    for beta in [0.1, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let t = t_functional(&f, beta, &kernel, &QuadratureSettings::default())?;
        let closed = if beta <= 1.0 {
            (-1.0f64).exp()
        } else {
            (-(1.0 + beta) / 2.0).exp()
        };
        println!("beta {beta:>4}: T = {t:.8}  closed form {closed:.8}");
    }
    Ok(())
}
