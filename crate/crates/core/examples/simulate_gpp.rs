//! Simulate GPP paths, write them as CSV and compare exceedance frequency
//! with P(V > c) = |c|ϑ.

use gpplab::estimators::count_exceedances;
use gpplab::generator::build_generator;
use gpplab::grid::ThresholdPreset;
use gpplab::harness::io::{write_batch_csv, BatchMetadata};
use gpplab::kernel::SmoothingKernel;
use gpplab::processes::{sample_gpp, ProcessBatch};
use gpplab::rng::StreamKey;

fn main() -> gpplab::Result<()> {
    let kernel = SmoothingKernel::laplace();
    let spec = build_generator(&kernel, 1.0, 0.5)?;
    let batch = sample_gpp(&spec, -10.0, 200_000, 32, StreamKey::root(7))?;

    let c = -0.2;
    let unit = ThresholdPreset::Constant.grid(32);
    let tau = count_exceedances(&batch, &unit, c)?;
    let theta = 2.0 * kernel.cdf(-0.5);
    println!("exceedances above c = {c}: {tau} of {}", batch.len());
    println!(
        "frequency {:.5}, |c| theta = {:.5}",
        tau as f64 / batch.len() as f64,
        c.abs() * theta
    );

    let meta = BatchMetadata {
        provenance: batch.provenance().clone(),
        cutoff: batch.cutoff(),
        bound_m: batch.bound_m(),
        kernel: kernel.name().into(),
        beta: 1.0,
        mixing_rate: 0.5,
        seed: Some(7),
    };
    let head = ProcessBatch::new(
        batch.paths()[..3].to_vec(),
        batch.cutoff(),
        batch.bound_m(),
        batch.provenance().clone(),
    )?;
    write_batch_csv(&head, &meta, std::io::stdout().lock())?;
    Ok(())
}
