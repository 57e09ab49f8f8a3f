//! Dawson's integral and related helpers.

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const RYBICKI_H: f64 = 0.2;
const RYBICKI_TERMS: i64 = 36;
const SERIES_CUTOFF: f64 = 1.0;

/// Dawson's integral `D(y) = exp(−y²) ∫_0^y exp(s²) ds`.
pub fn dawson(y: f64) -> f64 {
    if y < 0.0 {
        return -dawson(-y);
    }
    if y <= SERIES_CUTOFF {
        y - y_minus_dawson_series(y)
    } else {
        rybicki(y)
    }
}

/// `y − D(y)` for `y ≥ 0`, accurate near zero where the difference is `~(2/3)y³`.
pub fn y_minus_dawson(y: f64) -> f64 {
    debug_assert!(y >= 0.0);
    if y <= SERIES_CUTOFF {
        y_minus_dawson_series(y)
    } else {
        y - rybicki(y)
    }
}

// y − D(y) = Σ_{n≥1} (−1)^{n+1} 2^n y^{2n+1} / (2n+1)!!
fn y_minus_dawson_series(y: f64) -> f64 {
    let y2 = y * y;
    let mut term = y;
    let mut sum = 0.0;
    for n in 1..60 {
        term *= -2.0 * y2 / (2 * n + 1) as f64;
        sum -= term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

// Rybicki's sampling formula, centred on the nearest even multiple of h.
fn rybicki(y: f64) -> f64 {
    let n0 = 2 * (0.5 * y / RYBICKI_H).round() as i64;
    let xp = y - n0 as f64 * RYBICKI_H;
    let mut sum = 0.0;
    let mut n = -RYBICKI_TERMS - 1;
    while n <= RYBICKI_TERMS + 1 {
        let d = xp - n as f64 * RYBICKI_H;
        sum += (-d * d).exp() / (n + n0) as f64;
        n += 2;
    }
    FRAC_1_SQRT_PI * sum
}

/// `(1+y)·ln(1+y) − y`, stable for small `y ≥ 0`.
pub fn xlog1p_minus(y: f64) -> f64 {
    if y < 1e-3 {
        // Σ_{n≥2} (−1)^n y^n / (n(n−1))
        let mut p = y;
        let mut sum = 0.0;
        for n in 2..12 {
            p *= y;
            let c = p / (n * (n - 1)) as f64;
            sum += if n % 2 == 0 { c } else { -c };
        }
        sum
    } else {
        (1.0 + y) * y.ln_1p() - y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dawson_reference_values() {
        for (y, d) in [
            (0.5, 0.424_436_383_502_022_3),
            (1.0, 0.538_079_506_912_768_4),
            (2.0, 0.301_340_388_923_792),
            (10.0, 0.050_253_847_187_598_5),
        ] {
            assert_relative_eq!(dawson(y), d, max_relative = 1e-13);
        }
        assert_eq!(dawson(0.0), 0.0);
    }

    #[test]
    fn y_minus_dawson_small_argument() {
        // y − D(y) = 2y³/3 − 4y⁵/15 + …
        let y: f64 = 1e-3;
        assert_relative_eq!(
            y_minus_dawson(y),
            2.0 * y.powi(3) / 3.0 - 4.0 * y.powi(5) / 15.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn xlog1p_minus_matches_direct_form() {
        for y in [1e-2, 0.5, 3.0, 1e6] {
            assert_relative_eq!(
                xlog1p_minus(y),
                (1.0 + y) * y.ln_1p() - y,
                max_relative = 1e-12
            );
        }
        let y: f64 = 1e-5;
        assert_relative_eq!(
            xlog1p_minus(y),
            y * y / 2.0 - y.powi(3) / 6.0,
            max_relative = 1e-9
        );
    }
}
