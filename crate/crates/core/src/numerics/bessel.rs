use crate::error::{domain, Result};

const SERIES_LIMIT: f64 = 12.0;

/// Bessel function of the first kind, order zero.
///
/// Power series below |x| = 12, Miller's backward recurrence (normalised by
/// `J0 + 2 Σ J2k = 1`) above. Absolute error stays below 1e-12 up to
/// |x| = 1e3.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("bessel_j0 needs a finite argument, got {x}"));
    }
    Ok(j0(x))
}

/// Unchecked J0 used in hot loops where the argument is known finite.
pub(crate) fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        series(x)
    } else {
        miller(x)
    }
}

fn series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k > 4 {
            break;
        }
    }
    sum
}

fn miller(x: f64) -> f64 {
    // Start well above x so the minimal solution dominates; even start keeps
    // the normalisation sum aligned.
    let mut n = (x + 30.0 + 6.0 * x.sqrt()) as usize;
    n += n % 2;
    let mut j_next = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    let mut j0 = 0.0;
    for k in (1..=n).rev() {
        let j_prev = 2.0 * k as f64 / x * j - j_next;
        j_next = j;
        j = j_prev;
        let order = k - 1;
        if order == 0 {
            j0 = j;
        } else if order % 2 == 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
        }
    }
    j0 / (norm + j0)
}
