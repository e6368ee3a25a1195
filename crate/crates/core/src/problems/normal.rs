//! Standard normal helpers with stable tails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::erf::erfc;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Beyond this point the Mills ratio comes from its continued fraction.
const TAIL: f64 = 8.0;

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `1 − Φ(x)`.
pub fn upper_tail(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Mills ratio `(1 − Φ(x))/φ(x)` for `x ≥ TAIL`, by the continued fraction
/// `1/(x + 1/(x + 2/(x + 3/(x + …))))` evaluated from the tail.
fn mills_ratio_tail(x: f64) -> f64 {
    let mut acc = x;
    for n in (1..=60).rev() {
        acc = x + n as f64 / acc;
    }
    1.0 / acc
}

/// Inverse Mills ratio `B(x) = φ(x)/(1 − Φ(x))`.
pub fn inverse_mills(x: f64) -> f64 {
    if x > TAIL {
        1.0 / mills_ratio_tail(x)
    } else if x < -TAIL {
        pdf(x)
    } else {
        pdf(x) / upper_tail(x)
    }
}

/// `log Φ(z)`, accurate in both tails.
pub fn log_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if z < -TAIL {
        // Φ(z) = φ(z)·R(−z)
        -0.5 * z * z - LN_SQRT_2PI + mills_ratio_tail(-z).ln()
    } else if z < 0.0 {
        upper_tail(-z).ln()
    } else {
        (-upper_tail(z)).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_mills_at_zero() {
        assert_relative_eq!(inverse_mills(0.0), (2.0 / PI).sqrt(), epsilon = 1e-14);
        assert_relative_eq!(inverse_mills(0.0), 0.797_884_6, epsilon = 1e-7);
    }

    #[test]
    fn tail_branches_agree_at_switch() {
        let direct = pdf(TAIL) / upper_tail(TAIL);
        assert_relative_eq!(inverse_mills(TAIL + 1e-12), direct, max_relative = 1e-10);
        assert_relative_eq!(
            log_cdf(-TAIL - 1e-12),
            upper_tail(TAIL).ln(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn far_tails_are_finite() {
        assert!(inverse_mills(60.0).is_finite());
        assert_relative_eq!(inverse_mills(60.0), 60.0, max_relative = 1e-3);
        assert_relative_eq!(inverse_mills(-60.0), 0.0, epsilon = 1e-300);
        assert!(log_cdf(-60.0).is_finite());
        assert_eq!(log_cdf(60.0), 0.0);
        assert_relative_eq!(log_cdf(0.0), 0.5f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn mills_ratio_bounds() {
        // x/(1+x²) < R(x) < 1/x
        for x in [8.5, 10.0, 20.0, 100.0] {
            let r = mills_ratio_tail(x);
            assert!(r < 1.0 / x && r > x / (1.0 + x * x));
        }
    }
}
