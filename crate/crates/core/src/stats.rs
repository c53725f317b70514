//! Summary statistics used by the experiments: batch-means errors,
//! least-squares fits, Kolmogorov–Smirnov tests and Holm's correction.

use serde::{Deserialize, Serialize};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the mean for independent samples.
pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of the mean of a correlated series by non-overlapping
/// batch means with `⌊√n⌋` batches.
pub fn batch_means_se(xs: &[f64]) -> f64 {
    let batches = (xs.len() as f64).sqrt().floor() as usize;
    batch_means_se_with(xs, batches.max(2))
}

pub fn batch_means_se_with(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    if size == 0 || batches < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..batches).map(|b| mean(&xs[b * size..(b + 1) * size])).collect();
    standard_error(&means)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
pub fn ols(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (n as f64 - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LinearFit {
        slope,
        intercept,
        slope_se,
        points: n,
    })
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    // the alternating series is useless this close to 0, where P ≈ 1
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = 2.0 * (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn ks_p_value(d: f64, effective_n: f64) -> f64 {
    let s = effective_n.sqrt();
    kolmogorov_survival((s + 0.12 + 0.11 / s) * d)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, ne),
    }
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let v = sorted(xs);
    let n = v.len() as f64;
    let d = v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    });
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

/// Holm step-down adjusted p-values, in input order.
pub fn holm_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        running = running.max(((m - rank) as f64 * p[i]).min(1.0));
        adjusted[i] = running;
    }
    adjusted
}

/// Rejections at family-wise level `alpha` after Holm's correction.
pub fn holm_reject(p: &[f64], alpha: f64) -> Vec<bool> {
    holm_adjust(p).into_iter().map(|q| q <= alpha).collect()
}

/// Median of a non-empty sample.
pub fn median(xs: &[f64]) -> f64 {
    let v = sorted(xs);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    #[test]
    fn ols_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14 && (fit.intercept - 2.0).abs() < 1e-13);
        assert!(fit.slope_se < 1e-12);
        assert!(ols(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn kolmogorov_values() {
        // tabulated critical values of the Kolmogorov distribution
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn ks_examples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        let b: Vec<f64> = a.iter().map(|x| x + 1000.0).collect();
        let r = ks_two_sample(&a, &b);
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 1e-10);

        let mut rng = RngStream::new(81, 0);
        let u: Vec<f64> = (0..5000).map(|_| rng.uniform()).collect();
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0)).p_value > 1e-3);
        assert!(ks_one_sample(&u, |x| x.clamp(0.0, 1.0).powi(2)).p_value < 1e-6);
    }

    #[test]
    fn ks_null_rejection_rate() {
        let mut rng = RngStream::new(82, 0);
        let mut rejections = 0;
        for _ in 0..400 {
            let a: Vec<f64> = (0..200).map(|_| rng.standard_normal()).collect();
            let b: Vec<f64> = (0..300).map(|_| rng.standard_normal()).collect();
            if ks_two_sample(&a, &b).p_value < 0.05 {
                rejections += 1;
            }
        }
        assert!(rejections <= 35, "{rejections}");
    }

    #[test]
    fn holm_examples() {
        let adj = holm_adjust(&[0.01, 0.04, 0.03, 0.5]);
        for (a, e) in adj.iter().zip([0.04, 0.09, 0.09, 0.5]) {
            assert!((a - e).abs() < 1e-15);
        }
        assert_eq!(holm_reject(&[0.01, 0.04, 0.03, 0.5], 0.05), vec![true, false, false, false]);
    }

    #[test]
    fn batch_means_on_ar1() {
        // AR(1) with φ = 0.9: the iid formula underestimates by √19
        let mut rng = RngStream::new(83, 0);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                x = 0.9 * x + rng.standard_normal();
                x
            })
            .collect();
        let ratio = batch_means_se(&xs) / standard_error(&xs);
        assert!((ratio - 19f64.sqrt()).abs() < 1.0, "{ratio}");
    }

    proptest! {
        #[test]
        fn holm_adjusted_dominate_raw(p in proptest::collection::vec(0.0f64..1.0, 1..12)) {
            let adj = holm_adjust(&p);
            for (a, r) in adj.iter().zip(&p) {
                prop_assert!(a >= r && *a <= 1.0);
            }
        }

        #[test]
        fn ks_statistic_is_symmetric(a in proptest::collection::vec(-5.0f64..5.0, 1..40),
                                     b in proptest::collection::vec(-5.0f64..5.0, 1..40)) {
            let d1 = ks_two_sample(&a, &b).statistic;
            let d2 = ks_two_sample(&b, &a).statistic;
            prop_assert!((d1 - d2).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&d1));
        }
    }
}
