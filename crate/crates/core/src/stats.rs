//! Goodness-of-fit statistics used by the verification harness.

use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{invalid, Result};

/// Minimum sample size accepted by the Kolmogorov-Smirnov tests.
pub const KS_MIN_LEN: usize = 10;
/// Minimum sample size accepted by [`moment_check`].
pub const MOMENT_MIN_LEN: usize = 100;
/// Expected count below which chi-square bins are pooled.
pub const CHI_SQUARE_MIN_EXPECTED: f64 = 5.0;
/// Largest accepted |z| in a moment check.
pub const Z_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution,
/// `P(K > lambda)` with `K = sup |B_t|` for a Brownian bridge `B`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi theta form of the CDF, fast for small lambda.
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut cdf = 0.0;
        for j in 1..=20 {
            let m = (2 * j - 1) as f64;
            cdf += (-m * m * c).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sf = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            sf += if j % 2 == 1 { 2.0 * term } else { -2.0 * term };
            if term < 1e-18 {
                break;
            }
        }
        sf.clamp(0.0, 1.0)
    }
}

fn sorted_finite(xs: &[f64], what: &str) -> Result<Vec<f64>> {
    if xs.len() < KS_MIN_LEN {
        return Err(invalid(format!("{what} has {} values, need at least {KS_MIN_LEN}", xs.len())));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(invalid(format!("{what} contains NaN")));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
/// Ties (within or across samples) are handled exactly.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<TestResult> {
    let a = sorted_finite(xs, "first sample")?;
    let b = sorted_finite(ys, "second sample")?;
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] == v {
            i += 1;
        }
        while j < m && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf(ne.sqrt() * d),
    })
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestResult> {
    let a = sorted_finite(xs, "sample")?;
    let n = a.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < a.len() {
        // Tied values (e.g. an atom at +inf) form one step of the ECDF.
        let mut j = i + 1;
        while j < a.len() && a[j] == a[i] {
            j += 1;
        }
        let f = cdf(a[i]);
        d = d.max(f - i as f64 / n).max(j as f64 / n - f);
        i = j;
    }
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_sf(n.sqrt() * d),
    })
}

/// Exponential CDF with the given rate.
pub fn exp_cdf(rate: f64) -> impl Fn(f64) -> f64 {
    move |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() }
}

/// Chi-square goodness of fit of `observed` counts to cell probabilities.
///
/// Cells are scanned from the end and merged into their left neighbour
/// until every pooled cell has expected count at least
/// [`CHI_SQUARE_MIN_EXPECTED`]. Degrees of freedom are (pooled cells - 1).
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquare> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(invalid("observed counts and probabilities must have equal, nonzero length"));
    }
    if probs.iter().any(|&p| !(p >= 0.0)) {
        return Err(invalid("cell probabilities must be nonnegative"));
    }
    let psum: f64 = probs.iter().sum();
    if (psum - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("cell probabilities sum to {psum}, not 1")));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(invalid("no observations"));
    }
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&obs, &p) in observed.iter().zip(probs).rev() {
        o += obs as f64;
        e += p * nf;
        if e >= CHI_SQUARE_MIN_EXPECTED {
            cells.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => cells.push((o, e)),
        }
    }
    let statistic: f64 = cells.iter().map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else { 0.0 }).sum();
    let df = cells.len().saturating_sub(1);
    let p_value = if df == 0 || statistic <= 0.0 { 1.0 } else { gamma_ur(df as f64 / 2.0, statistic / 2.0) };
    Ok(ChiSquare {
        statistic,
        df,
        p_value,
        cells: cells.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentCheck {
    pub mean: f64,
    pub variance: f64,
    pub z_mean: f64,
    pub z_var: Option<f64>,
    pub passed: bool,
}

fn z_score(diff: f64, se: f64) -> f64 {
    if diff == 0.0 {
        0.0
    } else if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// Two-sided normal p-value of a z-score.
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2)
}

/// z-scores of the sample mean (and optionally the sample variance, with a
/// standard error from the fourth central moment) against targets.
pub fn moment_check(samples: &[f64], target_mean: f64, target_var: Option<f64>) -> Result<MomentCheck> {
    if samples.len() < MOMENT_MIN_LEN {
        return Err(invalid(format!(
            "moment check needs at least {MOMENT_MIN_LEN} samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in samples {
        let d2 = (x - mean).powi(2);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    let variance = m2 * n / (n - 1.0);
    let z_mean = z_score(mean - target_mean, (variance / n).sqrt());
    let z_var = target_var.map(|v| z_score(variance - v, ((m4 - m2 * m2).max(0.0) / n).sqrt()));
    let passed = z_mean.abs() <= Z_THRESHOLD && z_var.is_none_or(|z| z.abs() <= Z_THRESHOLD);
    Ok(MomentCheck {
        mean,
        variance,
        z_mean,
        z_var,
        passed,
    })
}

/// Pearson sample correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("correlation needs two equal-length samples of size >= 2"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Poisson pmf for `0..cells-1` with the upper tail lumped into the last cell.
pub fn poisson_cells(mean: f64, cells: usize) -> Vec<f64> {
    let mut probs = Vec::with_capacity(cells);
    let mut p = (-mean).exp();
    let mut acc = 0.0;
    for i in 0..cells.saturating_sub(1) {
        probs.push(p);
        acc += p;
        p *= mean / (i + 1) as f64;
    }
    probs.push((1.0 - acc).max(0.0));
    probs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn uniforms(seed: u64, n: usize, shift: f64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, 0);
        (0..n).map(|_| rng.uniform() + shift).collect()
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Critical values of the Kolmogorov distribution.
        assert!((kolmogorov_sf(1.358_098_8) - 0.05).abs() < 1e-5);
        assert!((kolmogorov_sf(1.627_624) - 0.01).abs() < 1e-5);
        assert!((kolmogorov_sf(1.223_848) - 0.10).abs() < 1e-5);
        // Both branches agree at the switch point.
        let lo = {
            let l: f64 = 1.18;
            let c = std::f64::consts::PI.powi(2) / (8.0 * l * l);
            1.0 - (1..=20).map(|j| (-((2 * j - 1) as f64).powi(2) * c).exp()).sum::<f64>() * (2.0 * std::f64::consts::PI).sqrt() / l
        };
        assert!((lo - kolmogorov_sf(1.18)).abs() < 1e-12);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!(kolmogorov_sf(0.2) > 0.999_999);
    }

    #[test]
    fn identical_samples() {
        let xs = uniforms(1, 100, 0.0);
        let r = ks_two_sample(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn shifted_uniforms() {
        let r = ks_two_sample(&uniforms(2, 10_000, 0.0), &uniforms(3, 10_000, 0.5)).unwrap();
        assert!((r.statistic - 0.5).abs() < 0.03);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn null_calibration_two_of_three() {
        let passes = (0..3)
            .filter(|&s| {
                let r = ks_two_sample(&uniforms(10 + 2 * s, 10_000, 0.0), &uniforms(11 + 2 * s, 10_000, 0.0)).unwrap();
                r.p_value > 0.01
            })
            .count();
        assert!(passes >= 2);
    }

    #[test]
    fn short_input_rejected() {
        assert!(ks_two_sample(&[0.0; 9], &[0.0; 20]).is_err());
        assert!(ks_one_sample(&[0.0; 3], |x| x).is_err());
    }

    #[test]
    fn ties_across_samples() {
        let xs: Vec<f64> = (0..100).map(|i| (i % 4) as f64).collect();
        let ys: Vec<f64> = (0..100).map(|i| (i % 4) as f64).rev().collect();
        assert_eq!(ks_two_sample(&xs, &ys).unwrap().statistic, 0.0);
        let zs: Vec<f64> = (0..100).map(|i| (i % 2) as f64).collect();
        // F_x(0) = 1/4, F_z(0) = 1/2.
        assert!((ks_two_sample(&xs, &zs).unwrap().statistic - 0.5).abs() < 1e-12);
    }

    #[test]
    fn one_sample_uniform() {
        let r = ks_one_sample(&uniforms(4, 10_000, 0.0), |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.p_value > 0.001);
        let r = ks_one_sample(&uniforms(4, 10_000, 0.2), |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn chi_square_pooling_and_p() {
        let r = chi_square_gof(&[25, 25, 25, 25], &[0.25; 4]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.df, 3);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        // Tiny last cells are pooled into the neighbour.
        let r = chi_square_gof(&[50, 47, 2, 1], &[0.5, 0.47, 0.02, 0.01]).unwrap();
        assert_eq!(r.cells, 2);
        assert!(r.statistic.abs() < 1e-12);
        // Chi-square(2) survival at 5.991 is 0.05.
        let p = gamma_ur(1.0, 5.991_464_547 / 2.0);
        assert!((p - 0.05).abs() < 1e-9);
    }

    #[test]
    fn moment_examples() {
        let c = moment_check(&[2.0; 200], 2.0, None).unwrap();
        assert_eq!(c.z_mean, 0.0);
        assert!(c.passed);

        let mut rng = RngStream::new(5, 0);
        let e: Vec<f64> = (0..100_000).map(|_| rng.exp1()).collect();
        assert!(moment_check(&e, 1.0, Some(1.0)).unwrap().passed);

        let g: Vec<f64> = (0..100_000)
            .map(|_| crate::distributions::sample_gamma(0.5, 0.5, &mut rng).unwrap())
            .collect();
        let c = moment_check(&g, 1.0, Some(2.0)).unwrap();
        assert!(c.passed, "{c:?}");
        assert!(!moment_check(&g, 1.2, Some(2.0)).unwrap().passed);
        assert!(moment_check(&g[..50], 1.0, None).is_err());
    }

    #[test]
    fn correlation_basics() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        assert!((correlation(&xs, &ys).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_cells_sum_to_one() {
        let p = poisson_cells(1.0, 6);
        assert_eq!(p.len(), 6);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - (-1.0f64).exp()).abs() < 1e-16);
        assert!((normal_two_sided_p(1.959_963_985) - 0.05).abs() < 1e-8);
    }
}
