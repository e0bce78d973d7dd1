//! Special functions.

/// Bessel function of the first kind, order zero.
///
/// Rational/polynomial approximation with absolute error below 5e-8 on the
/// whole real line.
pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 3.0 {
        let y = (x / 3.0).powi(2);
        1.0 + y
            * (-2.2499997
                + y * (1.2656208
                    + y * (-0.3163866 + y * (0.0444479 + y * (-0.0039444 + y * 0.0002100)))))
    } else {
        let y = 3.0 / ax;
        let f0 = 0.79788456
            + y * (-0.00000077
                + y * (-0.00552740
                    + y * (-0.00009512 + y * (0.00137237 + y * (-0.00072805 + y * 0.00014476)))));
        let theta0 = ax - std::f64::consts::FRAC_PI_4
            + y * (-0.04166397
                + y * (-0.00003954
                    + y * (0.00262573 + y * (-0.00054125 + y * (-0.00029333 + y * 0.00013558)))));
        f0 * theta0.cos() / ax.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series `Σ (-1)^k (x/2)^{2k} / (k!)^2`, accurate for moderate x.
    fn j0_series(x: f64) -> f64 {
        let q = -(x * x) / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            term *= q / (k as f64 * k as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn matches_series() {
        for i in 0..=240 {
            let x = i as f64 * 0.05;
            assert!((j0(x) - j0_series(x)).abs() < 2e-7, "x = {x}");
            assert_eq!(j0(-x), j0(x));
        }
    }

    #[test]
    fn table_values() {
        assert_eq!(j0(0.0), 1.0);
        assert!((j0(1.5) - 0.5118276717).abs() < 1e-7);
        assert!((j0(3.0) + 0.2600519549).abs() < 1e-7);
        assert!((j0(2.404825557695773)).abs() < 1e-7);
        assert!((j0(10.0) + 0.2459357645).abs() < 1e-7);
    }
}
