//! Exponential integral `E1(x) = ∫_x^∞ e^{-y}/y dy` and its inverse.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Relative tolerance on the root returned by [`exp_integral_inv`].
pub const INVERSION_RTOL: f64 = 1e-10;

pub fn exp_integral_e1(x: f64) -> f64 {
    if x.is_nan() || x < 0.0 {
        return f64::NAN;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    if x > 740.0 {
        return 0.0;
    }
    if x <= 1.0 {
        // Power series.
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x / kf;
            let add = -term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // Modified Lentz continued fraction.
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Returns `y >= lower` with `E1(y) = target`, for `0 < target <= E1(lower)`.
///
/// Safeguarded Newton iteration on `ln y`, where the derivative of
/// `E1(e^u)` is `-exp(-e^u)`, falling back to bisection of the bracket.
pub fn exp_integral_inv(target: f64, lower: f64) -> f64 {
    debug_assert!(target > 0.0 && lower > 0.0);
    if target >= exp_integral_e1(lower) {
        return lower;
    }
    let mut lo = lower.ln();
    let mut hi = (2.0 * lower).max(1.0);
    while exp_integral_e1(hi) > target {
        hi *= 2.0;
    }
    let mut hi = hi.ln();
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let y = u.exp();
        let g = exp_integral_e1(y) - target;
        if g > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let newton = u + g * y.exp();
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - u).abs();
        u = next;
        // |d ln y| approximates the relative change in y.
        if step < INVERSION_RTOL * 1e-2 || (hi - lo) < INVERSION_RTOL * 1e-2 {
            break;
        }
    }
    u.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson quadrature of e^{-y}/y after y = e^s, which turns the
    /// integrand into exp(-e^s) on [ln x, ln 60].
    fn e1_quadrature(x: f64) -> f64 {
        let a = x.ln();
        let b = 60f64.ln();
        let n = 200_000;
        let h = (b - a) / n as f64;
        let f = |s: f64| (-s.exp()).exp();
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn e1_matches_quadrature() {
        for &x in &[1e-8, 1e-6, 1e-3, 0.1, 0.5, 1.0, 1.5, 3.0, 10.0, 25.0] {
            let q = e1_quadrature(x);
            let e = exp_integral_e1(x);
            assert!(((e - q) / q).abs() < 1e-9, "x={x}: {e} vs {q}");
        }
    }

    #[test]
    fn e1_reference_points() {
        // Independent high-precision quadrature values.
        assert!((exp_integral_e1(1e-6) - 13.238_295_893_062_49).abs() < 1e-8);
        assert!((exp_integral_e1(1.0) - 0.219_383_934_395_520_3).abs() < 1e-14);
        assert_eq!(exp_integral_e1(800.0), 0.0);
        assert!(exp_integral_e1(0.0).is_infinite());
    }

    #[test]
    fn inverse_round_trips() {
        for &y in &[1e-8, 1e-6, 1e-3, 0.2, 1.0, 2.5, 7.0, 20.0, 40.0] {
            let v = exp_integral_e1(y);
            let back = exp_integral_inv(v, 1e-9);
            assert!(((back - y) / y).abs() < 1e-9, "y={y}: got {back}");
        }
    }

    #[test]
    fn inverse_clamps_at_lower_bound() {
        let v = exp_integral_e1(1e-3);
        assert_eq!(exp_integral_inv(v * 2.0, 1e-3), 1e-3);
    }
}
