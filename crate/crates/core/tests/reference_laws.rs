use diffzoom::reference::{bessel3_cdf, bessel3_path_sampler, limit_sup_with_lower_term, xi_hat_sampler, ReferenceLaw};
use diffzoom::rng::SeedPlan;
use diffzoom::simulate::par_map_streams;
use diffzoom::stats::{ks_one_sample, ks_two_sample, EmpiricalDistribution};

const SEED: u64 = 0x5EED;

fn bessel_endpoints(horizon: f64, n_steps: usize, n: usize, stream_offset: u64) -> Vec<f64> {
    par_map_streams(n, |i| {
        let p = bessel3_path_sampler(horizon, n_steps, SeedPlan::new(SEED, i + stream_offset)).unwrap();
        *p.values.last().unwrap()
    })
}

#[test]
fn bessel_path_marginal_matches_cdf() {
    let v = bessel_endpoints(1.0, 4, 100_000, 0);
    let emp = EmpiricalDistribution::new(v).unwrap();
    let ks = ks_one_sample(&emp, |x| bessel3_cdf(1.0, x).unwrap()).unwrap();
    assert!(ks.statistic < 0.01, "{ks:?}");
}

#[test]
fn bessel_scaling_in_time() {
    let at4 = bessel_endpoints(4.0, 8, 20_000, 0);
    let at1: Vec<f64> = bessel_endpoints(1.0, 8, 20_000, 1 << 32).iter().map(|x| 2.0 * x).collect();
    let ks = ks_two_sample(&EmpiricalDistribution::new(at4).unwrap(), &EmpiricalDistribution::new(at1).unwrap()).unwrap();
    assert!(!ks.rejects(0.001), "{ks:?}");
}

#[test]
fn xi_hat_sides_are_independent() {
    let n = 20_000;
    let pairs = par_map_streams(n, |i| {
        let (b, f) = xi_hat_sampler(1.0, 1.0, 4, SeedPlan::new(SEED, i)).unwrap();
        (*b.values.last().unwrap(), *f.values.last().unwrap())
    });
    let mean = |s: &dyn Fn(&(f64, f64)) -> f64| pairs.iter().map(s).sum::<f64>() / n as f64;
    let (mb, mf) = (mean(&|p| p.0), mean(&|p| p.1));
    let cov = mean(&|p| (p.0 - mb) * (p.1 - mf));
    let var_b = mean(&|p| (p.0 - mb).powi(2));
    let var_f = mean(&|p| (p.1 - mf).powi(2));
    let corr = cov / (var_b * var_f).sqrt();
    assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "corr {corr}");
    assert!(pairs.iter().all(|p| p.0 <= 0.0 && p.1 <= 0.0));
}

#[test]
fn lower_term_follows_bessel_u() {
    let n = 50_000;
    let draws = par_map_streams(n, |i| limit_sup_with_lower_term(1.0, 3, SeedPlan::new(SEED, i)));
    assert!(draws.iter().all(|(sup, lower)| lower <= sup));
    let law = ReferenceLaw::BesselU;
    let lower = EmpiricalDistribution::new(draws.iter().map(|d| -d.1).collect()).unwrap();
    let ks = ks_one_sample(&lower, |x| law.cdf(x)).unwrap();
    assert!(!ks.rejects(0.001), "{ks:?}");
}
