//! Principal branch of the Lambert W function.

use std::f64::consts::E;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LambertError {
    #[error("W0 is undefined below -1/e, got {0}")]
    Domain(f64),
    #[error("Halley iteration did not converge for z = {0}")]
    NoConvergence(f64),
}

const BRANCH_POINT: f64 = -1.0 / E;
const MAX_ITERATIONS: usize = 50;

/// Principal branch `W0(z)`: the unique `w >= -1` with `w * e^w = z`.
///
/// Starts from `ln(1 + z)` (or a branch-point series for `z` near `-1/e`)
/// and refines with Halley's method.
pub fn lambert_w0(z: f64) -> Result<f64, LambertError> {
    if z.is_nan() || z < BRANCH_POINT - 4.0 * f64::EPSILON {
        return Err(LambertError::Domain(z));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = if z < -0.25 {
        // series in p = sqrt(2(ez + 1)) about the branch point
        let p = (2.0 * (E * z + 1.0)).max(0.0).sqrt();
        let guess = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
        if p < 1e-4 {
            return Ok(guess);
        }
        guess
    } else {
        z.ln_1p()
    };

    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            return Err(LambertError::NoConvergence(z));
        }
        w -= step;
        if step.abs() <= 1e-14 * w.abs().max(1e-300) {
            return Ok(w);
        }
    }
    // Halley can stall a few ulps away from the root; accept it if the
    // defining equation holds.
    if (w * w.exp() - z).abs() <= 1e-12 * z.abs().max(1.0) {
        Ok(w)
    } else {
        Err(LambertError::NoConvergence(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect_w0(z: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0, z.max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() > z {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn defining_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambert_w0(1.0).unwrap() - 0.567_143_290_409_784).abs() < 1e-12);
        assert!((lambert_w0(BRANCH_POINT).unwrap() + 1.0).abs() < 1e-7);
    }

    #[test]
    fn rejects_below_branch_point() {
        assert_eq!(lambert_w0(-0.5), Err(LambertError::Domain(-0.5)));
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn agrees_with_bisection() {
        for z in [-0.36, -0.3, -0.2, -0.01, 1e-8, 0.5, 3.0, 100.0, 1e5] {
            let w = lambert_w0(z).unwrap();
            assert!((w - bisect_w0(z)).abs() < 1e-9 * w.abs().max(1.0), "z={z}");
        }
    }

    #[test]
    fn exp_identity() {
        for z in [-0.3, 0.2, 1.0, 50.0] {
            let w = lambert_w0(z).unwrap();
            assert!((w.exp() - z / w).abs() < 1e-12 * (z / w).abs().max(1.0));
        }
    }
}
