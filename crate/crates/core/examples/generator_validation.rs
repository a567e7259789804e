//! Monte Carlo check of the Laplace generator: unit means, E sup Z and E inf Z.

use gpplab::generator::{build_generator, validate_generator, ValidationTolerances};
use gpplab::kernel::SmoothingKernel;
use gpplab::rng::StreamKey;

fn main() -> gpplab::Result<()> {
    let spec = build_generator(&SmoothingKernel::laplace(), 1.0, 0.5)?;
    println!("bound m = {:.4}", spec.bound_m());
    let v = validate_generator(
        &spec,
        128,
        100_000,
        StreamKey::root(1),
        ValidationTolerances::default(),
    )?;
    println!("max |mean - 1|/SE over grid: {:.2}", v.max_abs_z_score);
    println!(
        "E sup Z = {:.4} ± {:.4} (target {:.4})",
        v.sup_z.estimate, v.sup_z.std_error, v.sup_z.target
    );
    println!(
        "E inf Z = {:.4} ± {:.4} (target {:.4})",
        v.inf_z.estimate, v.inf_z.std_error, v.inf_z.target
    );
    println!(
        "largest sampled Z = {:.4}, pass = {}",
        v.max_sampled_z, v.pass
    );
    Ok(())
}
