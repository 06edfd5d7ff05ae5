//! Small numeric helpers shared across modules.

use statrs::function::erf::erfc;

/// Binary entropy in bits; `h2(0) = h2(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Standard Gaussian upper tail `Q(x) = P(Z > x)`.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Standard Gaussian CDF.
pub fn gaussian_cdf(x: f64) -> f64 {
    gaussian_tail(-x)
}

/// Inverse of [`binary_entropy`] on `[0, 0.5]`, by bisection.
pub fn inverse_binary_entropy(h: f64) -> f64 {
    let h = h.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Formats `x` with `digits` significant digits, without trailing zeros.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((1.0 - binary_entropy(0.07) - 0.634_076_349).abs() < 1e-6);
        assert!((inverse_binary_entropy(binary_entropy(0.11)) - 0.11).abs() < 1e-12);
    }

    #[test]
    fn tail_values() {
        assert!((gaussian_tail(0.0) - 0.5).abs() < 1e-15);
        // Q(1.959963985) = 0.025
        assert!((gaussian_tail(1.959_963_985) - 0.025).abs() < 1e-9);
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(
            format_significant(std::f64::consts::FRAC_PI_4, 12),
            "0.785398163397"
        );
        assert_eq!(
            format_significant(std::f64::consts::FRAC_PI_2, 12),
            "1.57079632679"
        );
        assert_eq!(format_significant(-0.5, 12), "-0.5");
    }
}
