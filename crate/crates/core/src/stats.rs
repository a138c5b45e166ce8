//! Binomial confidence intervals and FER-curve interpolation.

use statrs::distribution::{Beta, Continuous, ContinuousCDF};

use crate::error::{invalid, Error, Result};

/// Exact (Clopper-Pearson) two-sided interval for `errors` out of `frames`
/// at the given confidence level.
pub fn clopper_pearson(errors: u64, frames: u64, confidence: f64) -> Result<(f64, f64)> {
    if frames == 0 || errors > frames {
        return Err(invalid(
            "frames",
            format!("{errors} errors in {frames} frames"),
        ));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid("confidence", confidence.to_string()));
    }
    let alpha = 1.0 - confidence;
    let (k, n) = (errors as f64, frames as f64);
    let quantile = |a: f64, b: f64, p: f64| -> Result<f64> {
        let d = Beta::new(a, b).map_err(|e| invalid("beta", e.to_string()))?;
        Ok(polish_quantile(&d, p))
    };
    let lo = if errors == 0 {
        0.0
    } else {
        quantile(k, n - k + 1.0, alpha / 2.0)?
    };
    let hi = if errors == frames {
        1.0
    } else {
        quantile(k + 1.0, n - k, 1.0 - alpha / 2.0)?
    };
    Ok((lo, hi))
}

/// Newton steps on top of the library quantile.
fn polish_quantile(d: &Beta, p: f64) -> f64 {
    let mut x = d.inverse_cdf(p);
    for _ in 0..4 {
        let dens = d.pdf(x);
        if !(dens > 0.0) {
            break;
        }
        let next = x - (d.cdf(x) - p) / dens;
        if !(next > 0.0 && next < 1.0) {
            break;
        }
        x = next;
    }
    x
}

/// 95% interval.
pub fn ci95(errors: u64, frames: u64) -> Result<(f64, f64)> {
    clopper_pearson(errors, frames, 0.95)
}

/// `Eb/N0` at which a FER curve crosses `target`, interpolating `log(FER)`
/// linearly between the first bracketing pair of points. Points with zero
/// FER carry no log-scale information and are skipped.
pub fn interpolate_ebn0_at_fer(points: &[(f64, f64)], target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(invalid("target", target.to_string()));
    }
    let mut pts: Vec<(f64, f64)> = points.iter().copied().filter(|&(_, f)| f > 0.0).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lt = target.ln();
    for w in pts.windows(2) {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if f0 == target {
            return Ok(x0);
        }
        let (l0, l1) = (f0.ln(), f1.ln());
        if (l0 - lt) * (l1 - lt) < 0.0 {
            return Ok(x0 + (lt - l0) / (l1 - l0) * (x1 - x0));
        }
    }
    match pts.last() {
        Some(&(x, f)) if f == target => Ok(x),
        _ => Err(Error::NotBracketed(target)),
    }
}

/// `Eb/N0(a) − Eb/N0(b)` at `target`; positive when `a` needs more energy.
pub fn gap_db(a: &[(f64, f64)], b: &[(f64, f64)], target: f64) -> Result<f64> {
    Ok(interpolate_ebn0_at_fer(a, target)? - interpolate_ebn0_at_fer(b, target)?)
}
