//! Small numeric kernels shared across modules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{BoundError, Result};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `log(sum_i exp(x_i))` without overflow. Returns `-inf` for an empty input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Outcome of [`bisect_increasing`].
#[derive(Debug, Clone, Copy)]
pub struct RootResult {
    pub root: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Finds `x` in `[lo, hi]` with `f(x) = target` for nondecreasing `f`,
/// assuming `f(lo) <= target <= f(hi)`. Bisects until the bracket can no
/// longer be split in floating point, then returns the endpoint with the
/// smaller residual.
pub fn bisect_increasing<F>(mut f: F, mut lo: f64, mut hi: f64, target: f64) -> Result<RootResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)? - target;
    let mut f_hi = f(hi)? - target;
    let mut iterations = 0;
    while iterations < 400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let f_mid = f(mid)? - target;
        if f_mid == 0.0 {
            return Ok(RootResult {
                root: mid,
                residual: 0.0,
                iterations,
            });
        }
        if f_mid < 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let (root, residual) = if f_lo.abs() <= f_hi.abs() {
        (lo, f_lo.abs())
    } else {
        (hi, f_hi.abs())
    };
    Ok(RootResult {
        root,
        residual,
        iterations,
    })
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_section_min<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo < hi) {
        return Err(BoundError::Domain(format!(
            "golden section needs lo < hi, got [{lo}, {hi}]"
        )));
    }
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while (hi - lo) > tol * (1.0 + x1.abs() + x2.abs()) {
        iterations += 1;
        if iterations > 500 {
            return Err(BoundError::Nonconvergence {
                what: "golden-section search",
                iterations,
                residual: hi - lo,
            });
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Generator for stream `stream` of a master seed.
///
/// Splitting rule: every independent unit of work (trial, chain) gets the
/// ChaCha8 generator seeded with the master seed and its own stream index,
/// so results do not depend on how work is scheduled across threads.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}
