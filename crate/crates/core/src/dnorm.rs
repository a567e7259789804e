//! D-norm and inf-functional of threshold functions.
//!
//! For f ∈ Ē on the grid,
//!
//! ```text
//! ‖f‖_D      = ∫ max_i |f(t_i)| ψ(s − β t_i) ds
//! T(f, β, ψ) = ∫ min_i |f(t_i)| ψ(s − β t_i) ds
//! ```
//!
//! The pointwise max/min is taken over the grid of `f`, the outer integral
//! by adaptive Simpson on `[−W, β + W]` where W cuts off a kernel tail mass
//! of `tail_mass`. The grid resolution dominates the error of `d_norm`;
//! for `t_functional` with a monotone or constant `f` the minimum sits at
//! the endpoints and the grid is exact.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::grid::GridFunction;
use crate::kernel::SmoothingKernel;
use crate::quadrature::adaptive_simpson_panels;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    /// Kernel tail mass left outside the integration window, per side and
    /// per unit of ‖f‖∞.
    pub tail_mass: f64,
    pub max_depth: u32,
    pub panels: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            tail_mass: 1e-10,
            max_depth: 50,
            panels: 64,
        }
    }
}

impl QuadratureSettings {
    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.tail_mass > 0.0) {
            return Err(domain("quadrature tolerances must be positive"));
        }
        Ok(())
    }
}

fn check_inputs(f: &GridFunction, beta: f64, settings: &QuadratureSettings) -> Result<()> {
    f.ensure_threshold()?;
    settings.validate()?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(domain(format!("β must be positive, got {beta}")));
    }
    Ok(())
}

fn integrate_envelope(
    f: &GridFunction,
    beta: f64,
    kernel: &SmoothingKernel,
    settings: &QuadratureSettings,
    take_max: bool,
) -> f64 {
    // Integrate f/‖f‖∞ so that the adaptive refinement, and hence the
    // result, is exactly homogeneous in f.
    let scale = f.sup_norm();
    let weights: Vec<(f64, f64)> = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.abs() / scale, beta * f.t(i)))
        .collect();
    let envelope = |s: f64| {
        let mut acc = if take_max { 0.0 } else { f64::INFINITY };
        for &(w, shift) in &weights {
            let v = w * kernel.density(s - shift);
            acc = if take_max { acc.max(v) } else { acc.min(v) };
        }
        acc
    };
    let width = kernel.tail_cutoff(settings.tail_mass);
    scale
        * adaptive_simpson_panels(
            envelope,
            -width,
            beta + width,
            settings.abs_tol,
            settings.max_depth,
            settings.panels,
        )
}

/// ‖f‖_D = ∫ sup_t |f(t)| ψ(s − βt) ds.
pub fn d_norm(
    f: &GridFunction,
    beta: f64,
    kernel: &SmoothingKernel,
    settings: &QuadratureSettings,
) -> Result<f64> {
    check_inputs(f, beta, settings)?;
    if f.sup_norm() == 0.0 {
        return Ok(0.0);
    }
    Ok(integrate_envelope(f, beta, kernel, settings, true))
}

/// T(f, β, ψ) = ∫ inf_t |f(t)| ψ(s − βt) ds. Equals P(V > f) for the GPP.
pub fn t_functional(
    f: &GridFunction,
    beta: f64,
    kernel: &SmoothingKernel,
    settings: &QuadratureSettings,
) -> Result<f64> {
    check_inputs(f, beta, settings)?;
    if f.min_abs() == 0.0 {
        return Ok(0.0);
    }
    Ok(integrate_envelope(f, beta, kernel, settings, false))
}

/// 2Ψ(−β/2), the closed form of T(−1, β, ψ).
pub fn two_psi_half_beta(beta: f64, kernel: &SmoothingKernel) -> f64 {
    2.0 * kernel.cdf(-0.5 * beta)
}

/// Both functionals of one threshold function, as printed by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub kernel: String,
    pub beta: f64,
    pub grid_intervals: usize,
    pub sup_norm: f64,
    pub d_norm: f64,
    pub t_functional: f64,
    pub two_psi_half_beta: f64,
}

pub fn functional_report(
    f: &GridFunction,
    beta: f64,
    kernel: &SmoothingKernel,
    settings: &QuadratureSettings,
) -> Result<FunctionalReport> {
    Ok(FunctionalReport {
        kernel: kernel.name().to_string(),
        beta,
        grid_intervals: f.intervals(),
        sup_norm: f.sup_norm(),
        d_norm: d_norm(f, beta, kernel, settings)?,
        t_functional: t_functional(f, beta, kernel, settings)?,
        two_psi_half_beta: two_psi_half_beta(beta, kernel),
    })
}
