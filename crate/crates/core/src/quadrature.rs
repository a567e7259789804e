//! Adaptive Simpson quadrature.

const MIN_DEPTH: u32 = 4;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Intervals are bisected until the Richardson error estimate falls under
/// the local share of `tol` or `max_depth` is reached. A few forced levels
/// keep narrow features from slipping between the first five nodes.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64, max_depth: u32) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, max_depth, 0)
}

/// Splits `[a, b]` into `panels` equal pieces before adapting on each.
pub fn adaptive_simpson_panels<F>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
    panels: usize,
) -> f64
where
    F: Fn(f64) -> f64,
{
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let local_tol = tol / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == panels { b } else { lo + width };
            adaptive_simpson(&f, lo, hi, local_tol, max_depth)
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    max_depth: u32,
    depth: u32,
) -> f64
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth >= max_depth || (depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, max_depth, depth + 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, max_depth, depth + 1)
}
