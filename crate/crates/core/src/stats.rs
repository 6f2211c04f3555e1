//! Empirical CDFs, one- and two-sample Kolmogorov–Smirnov tests, the
//! quantile-slice independence diagnostic and log-log rate fits.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Significance levels reported by every KS decision.
pub const ALPHAS: [f64; 3] = [0.05, 0.01, 0.001];

/// Minimum sample size for the KS tests.
pub const MIN_KS_SAMPLES: usize = 10;

/// Minimum slice size for [`mixing_diagnostic`].
pub const MIN_SLICE: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sorted: Vec<f64>,
}

impl EmpiricalDistribution {
    /// Sorts the samples; fails on an empty sample or NaN.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewSamples("empirical distribution needs at least one sample".into()));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("NaN in sample".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }

    /// Linear-interpolated quantile, `q` in `[0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.sorted.len();
        let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let w = pos - lo as f64;
        self.sorted[lo] * (1.0 - w) + self.sorted[hi] * w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSResult {
    pub statistic: f64,
    pub n_effective: f64,
    /// Asymptotic Kolmogorov tail probability of the observed statistic.
    pub p_value: f64,
    /// Keyed by the significance level as text (`"0.001"`).
    pub reject_at: BTreeMap<String, bool>,
}

impl KSResult {
    fn new(statistic: f64, n_effective: f64) -> Self {
        let p_value = ks_p_value(statistic, n_effective);
        Self {
            statistic,
            n_effective,
            p_value,
            reject_at: decisions(p_value),
        }
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

fn decisions(p_value: f64) -> BTreeMap<String, bool> {
    ALPHAS.iter().map(|a| (a.to_string(), p_value < *a)).collect()
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form, fast for small lambda.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=20).map(|k| ((2 * k - 1) as f64).powi(2) * c).map(f64::exp).sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Tail probability with Stephens' finite-sample correction.
pub fn ks_p_value(statistic: f64, n_effective: f64) -> f64 {
    let sn = n_effective.sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * statistic)
}

fn check_size(n: usize) -> Result<()> {
    if n < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples(format!(
            "KS test needs at least {MIN_KS_SAMPLES} samples, got {n}"
        )));
    }
    Ok(())
}

/// `sup_x |F_emp(x) - F(x)|`, evaluated on both sides of every jump.
pub fn ks_one_sample<F: Fn(f64) -> f64>(emp: &EmpiricalDistribution, cdf: F) -> Result<KSResult> {
    check_size(emp.len())?;
    let n = emp.len() as f64;
    let d = emp
        .sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(KSResult::new(d, n))
}

/// Two-sample statistic with effective size `n_a n_b / (n_a + n_b)`.
pub fn ks_two_sample(a: &EmpiricalDistribution, b: &EmpiricalDistribution) -> Result<KSResult> {
    check_size(a.len())?;
    check_size(b.len())?;
    Ok(KSResult::new(two_sample_statistic(&a.sorted, &b.sorted), {
        let (na, nb) = (a.len() as f64, b.len() as f64);
        na * nb / (na + nb)
    }))
}

fn two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    pub n_slices: usize,
    pub slice_sizes: Vec<usize>,
    pub max_statistic: f64,
    pub max_pair: (usize, usize),
    /// Smallest pairwise p-value (no multiplicity correction).
    pub min_p_value: f64,
    pub reject_at: BTreeMap<String, bool>,
}

impl MixingReport {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.min_p_value < alpha
    }
}

/// Splits `(value, conditioner)` pairs into quantile slices of the
/// conditioner and compares the value distributions of every pair of
/// slices with the two-sample KS test.
pub fn mixing_diagnostic(pairs: &[(f64, f64)], n_slices: usize) -> Result<MixingReport> {
    if n_slices < 2 {
        return Err(Error::InvalidArgument("mixing diagnostic needs at least 2 slices".into()));
    }
    let n = pairs.len();
    if n < n_slices * MIN_SLICE {
        return Err(Error::TooFewSamples(format!(
            "{n} pairs cannot fill {n_slices} slices of at least {MIN_SLICE}"
        )));
    }
    if pairs.iter().any(|(v, c)| v.is_nan() || c.is_nan()) {
        return Err(Error::InvalidArgument("NaN in mixing pairs".into()));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let slices: Vec<EmpiricalDistribution> = (0..n_slices)
        .map(|k| {
            let (lo, hi) = (k * n / n_slices, (k + 1) * n / n_slices);
            EmpiricalDistribution::new(sorted[lo..hi].iter().map(|p| p.0).collect())
        })
        .collect::<Result<_>>()?;

    let mut max_statistic = 0.0;
    let mut max_pair = (0, 1);
    let mut min_p = 1.0_f64;
    for i in 0..n_slices {
        for j in i + 1..n_slices {
            let r = ks_two_sample(&slices[i], &slices[j])?;
            if r.statistic > max_statistic {
                max_statistic = r.statistic;
                max_pair = (i, j);
            }
            min_p = min_p.min(r.p_value);
        }
    }
    Ok(MixingReport {
        n_slices,
        slice_sizes: slices.iter().map(|s| s.len()).collect(),
        max_statistic,
        max_pair,
        min_p_value: min_p,
        reject_at: decisions(min_p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% Student-t half-width of the slope.
    pub slope_half_width: f64,
    pub residual_std: f64,
    pub n_points: usize,
}

/// Least squares of `log rms` on `log eps`.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(Error::TooFewSamples(format!("rate fit needs 4 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(e, r)| !(*e > 0.0 && *r > 0.0)) {
        return Err(Error::InvalidArgument(format!("rate fit needs positive inputs, got {p:?}")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("rate fit needs distinct epsilons".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let residual_std = (sse / (n - 2.0)).sqrt();
    let t = StudentsT::new(0.0, 1.0, n - 2.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(RateFit {
        slope,
        intercept,
        slope_half_width: t * residual_std / sxx.sqrt(),
        residual_std,
        n_points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{normal_cdf, ReferenceLaw};
    use crate::rng::SeedPlan;
    use proptest::prelude::*;

    fn emp(v: Vec<f64>) -> EmpiricalDistribution {
        EmpiricalDistribution::new(v).unwrap()
    }

    #[test]
    fn point_mass_against_normal() {
        let r = ks_one_sample(&emp(vec![0.0; 20]), normal_cdf).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-15);
        assert!(r.rejects(0.001));
    }

    #[test]
    fn midpoint_quantiles_give_half_step() {
        let n = 200;
        let samples = (1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect();
        let r = ks_one_sample(&emp(samples), |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((r.statistic - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn own_law_not_rejected() {
        let n = 100_000;
        let draws = ReferenceLaw::StandardNormal.sample_n(n, SeedPlan::new(0xD1FF, 0));
        let r = ks_one_sample(&emp(draws), normal_cdf).unwrap();
        assert!(r.statistic < 1.95 / (n as f64).sqrt());
        assert!(!r.rejects(0.001));
    }

    #[test]
    fn two_sample_examples() {
        let a = emp((0..50).map(|i| i as f64).collect());
        assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);
        let b = emp((0..30).map(|i| 100.0 + i as f64).collect());
        assert_eq!(ks_two_sample(&a, &b).unwrap().statistic, 1.0);
        let r = ks_two_sample(&a, &b).unwrap();
        assert!((r.n_effective - 50.0 * 30.0 / 80.0).abs() < 1e-12);

        let x = ReferenceLaw::StandardNormal.sample_n(10_000, SeedPlan::new(0xD1FF, 0).lane(1));
        let y = ReferenceLaw::StandardNormal.sample_n(10_000, SeedPlan::new(0xD1FF, 0).lane(2));
        assert!(!ks_two_sample(&emp(x), &emp(y)).unwrap().rejects(0.001));
    }

    #[test]
    fn two_sample_handles_ties() {
        let a = emp(vec![1.0; 10]);
        let b = emp([vec![1.0; 5], vec![2.0; 5]].concat());
        assert!((ks_two_sample(&a, &b).unwrap().statistic - 0.5).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        assert!(ks_one_sample(&emp(vec![0.0; 9]), normal_cdf).is_err());
        assert!(EmpiricalDistribution::new(vec![]).is_err());
        assert!(EmpiricalDistribution::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn kolmogorov_tail_known_values() {
        // Critical values of the limiting distribution.
        assert!((kolmogorov_survival(1.358_098_8) - 0.05).abs() < 1e-5);
        assert!((kolmogorov_survival(1.627_624) - 0.01).abs() < 1e-5);
        assert!((kolmogorov_survival(1.949_586) - 0.001).abs() < 1e-5);
        // The two expansions agree where they meet.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * 1.18 * 1.18);
        let theta: f64 = (1..=20).map(|k| (((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        let small = 1.0 - (2.0 * std::f64::consts::PI).sqrt() / 1.18 * theta;
        assert!((small - kolmogorov_survival(1.18)).abs() < 1e-12);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn mixing_independent_and_dependent() {
        let n = 10_000;
        let v = ReferenceLaw::StandardNormal.sample_n(n, SeedPlan::new(0xD1FF, 0).lane(3));
        let c = ReferenceLaw::Uniform.sample_n(n, SeedPlan::new(0xD1FF, 0).lane(4));
        let pairs: Vec<_> = v.iter().copied().zip(c.iter().copied()).collect();
        assert!(!mixing_diagnostic(&pairs, 4).unwrap().rejects(0.001));

        let same: Vec<_> = c.iter().map(|&x| (x, x)).collect();
        let r = mixing_diagnostic(&same, 4).unwrap();
        assert!(r.rejects(0.001));
        assert!(r.max_statistic > 0.99);

        // value = sigma(conditioner) * Z: dependent until normalized.
        let sigma = |x: f64| 0.5 + 2.0 * x;
        let raw: Vec<_> = v.iter().zip(&c).map(|(z, x)| (sigma(*x) * z, *x)).collect();
        assert!(mixing_diagnostic(&raw, 4).unwrap().rejects(0.001));
        let normalized: Vec<_> = raw.iter().map(|(y, x)| (y / sigma(*x), *x)).collect();
        assert!(!mixing_diagnostic(&normalized, 4).unwrap().rejects(0.001));

        assert!(mixing_diagnostic(&pairs[..150], 4).is_err());
    }

    #[test]
    fn rate_fit_examples() {
        let eps: Vec<f64> = (6..=12).map(|k| 2f64.powi(-k)).collect();
        let sqrt: Vec<_> = eps.iter().map(|&e| (e, e.sqrt())).collect();
        let r = rate_fit(&sqrt).unwrap();
        assert!((r.slope - 0.5).abs() < 1e-12);
        assert!(r.residual_std < 1e-12);
        let lin: Vec<_> = eps.iter().map(|&e| (e, 3.0 * e)).collect();
        let r = rate_fit(&lin).unwrap();
        assert!((r.slope - 1.0).abs() < 1e-12);
        assert!((r.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(rate_fit(&lin[..3]).is_err());
        assert!(rate_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)]).is_err());
    }

    proptest! {
        #[test]
        fn two_sample_invariant_under_monotone_maps(
            a in prop::collection::vec(-50.0f64..50.0, 10..60),
            b in prop::collection::vec(-50.0f64..50.0, 10..60),
            scale in 0.1f64..5.0, shift in -3.0f64..3.0,
        ) {
            let map = |x: f64| (scale * x + shift).tanh() * 7.0 + (x * 0.01).exp();
            let before = ks_two_sample(&emp(a.clone()), &emp(b.clone())).unwrap().statistic;
            let after = ks_two_sample(
                &emp(a.iter().map(|&x| map(x)).collect()),
                &emp(b.iter().map(|&x| map(x)).collect()),
            ).unwrap().statistic;
            prop_assert_eq!(before, after);
        }

        #[test]
        fn rate_fit_slope_invariant_under_rescaling(c in 0.01f64..100.0, noise in prop::collection::vec(-0.2f64..0.2, 6)) {
            let pts: Vec<_> = noise.iter().enumerate()
                .map(|(k, n)| { let e = 2f64.powi(-(k as i32) - 4); (e, e.sqrt() * n.exp()) })
                .collect();
            let scaled: Vec<_> = pts.iter().map(|&(e, r)| (c * e, r)).collect();
            let (a, b) = (rate_fit(&pts).unwrap(), rate_fit(&scaled).unwrap());
            prop_assert!((a.slope - b.slope).abs() < 1e-12);
            prop_assert!((b.intercept - (a.intercept - a.slope * c.ln())).abs() < 1e-9);
        }
    }
}
