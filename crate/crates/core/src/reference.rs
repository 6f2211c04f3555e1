//! Reference laws for the zoomed limits: standard normal, Bessel-3
//! marginals, the mixture `B_U` with `U` uniform, the arcsine law of the
//! Brownian argmax, the uniform law, and samplers for the two-sided limit
//! process `xi` (negated Bessel-3 on each side of the supremum).

use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use libm::{erf, erfc};

use crate::error::{Error, Result};
use crate::model::Interval;
use crate::pathops::KilledPath;
use crate::quad::CompositeRule;
use crate::rng::{lanes, SeedPlan, StreamRng};
use crate::simulate::{par_map_streams, Path};

/// Default number of quadrature nodes for [`bessel_u_cdf`].
pub const BESSEL_U_NODES: usize = 512;
const PANEL_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ReferenceLaw {
    StandardNormal,
    Uniform,
    /// Marginal of a Bessel-3 process started at 0, at time `t`.
    Bessel3 { t: f64 },
    /// `B_U` for a Bessel-3 process `B` and an independent uniform `U`.
    BesselU,
    Arcsine,
}

impl ReferenceLaw {
    pub fn from_name(name: &str, t: f64) -> Result<Self> {
        match name {
            "normal" => Ok(Self::StandardNormal),
            "uniform" => Ok(Self::Uniform),
            "bessel3" => {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::InvalidArgument(format!("bessel3 needs t > 0, got {t}")));
                }
                Ok(Self::Bessel3 { t })
            }
            "besselU" | "bessel_u" => Ok(Self::BesselU),
            "arcsine" => Ok(Self::Arcsine),
            other => Err(Error::InvalidArgument(format!(
                "unknown law '{other}' (expected normal, uniform, bessel3, besselU, arcsine)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::StandardNormal => "normal",
            Self::Uniform => "uniform",
            Self::Bessel3 { .. } => "bessel3",
            Self::BesselU => "besselU",
            Self::Arcsine => "arcsine",
        }
    }

    pub fn support(&self) -> Interval {
        match self {
            Self::StandardNormal => Interval::real_line(),
            Self::Uniform | Self::Arcsine => Interval::new(0.0, 1.0),
            Self::Bessel3 { .. } | Self::BesselU => Interval::new(0.0, f64::INFINITY),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::StandardNormal => normal_cdf(x),
            Self::Uniform => x.clamp(0.0, 1.0),
            Self::Bessel3 { t } => bessel3_unit_cdf(x / t.sqrt()),
            Self::BesselU => bessel_u_cdf_default(x),
            Self::Arcsine => FRAC_2_PI * x.clamp(0.0, 1.0).sqrt().asin(),
        }
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            Self::StandardNormal => rng.sample(StandardNormal),
            Self::Uniform => rng.random::<f64>(),
            Self::Bessel3 { t } => t.sqrt() * norm3(rng),
            Self::BesselU => {
                let u: f64 = rng.random();
                u.sqrt() * norm3(rng)
            }
            Self::Arcsine => {
                let v: f64 = rng.random();
                (0.5 * PI * v).sin().powi(2)
            }
        }
    }

    /// `n` independent draws; draw `i` uses stream `i` of `seeds`.
    pub fn sample_n(&self, n: usize, seeds: SeedPlan) -> Vec<f64> {
        par_map_streams(n, |i| self.sample(&mut seeds.with_stream(i).rng()))
    }
}

fn norm3(rng: &mut StreamRng) -> f64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    let c: f64 = rng.sample(StandardNormal);
    (a * a + b * b + c * c).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn bessel3_unit_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    (erf(x / SQRT_2) - (FRAC_2_PI).sqrt() * x * (-0.5 * x * x).exp()).clamp(0.0, 1.0)
}

/// `P(B_t <= x)` for a Bessel-3 process: `F_1(x / sqrt(t))` with
/// `F_1(x) = erf(x / sqrt 2) - sqrt(2/pi) x exp(-x^2/2)` for `x >= 0`.
pub fn bessel3_cdf(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("bessel3_cdf needs t > 0, got {t}")));
    }
    Ok(bessel3_unit_cdf(x / t.sqrt()))
}

/// `P(B_U <= x) = int_0^1 F_u(x) du`, computed as `int_0^1 2v F_1(x/v) dv`
/// with a composite 8-point Gauss–Legendre rule.
pub fn bessel_u_cdf(x: f64, quadrature_nodes: usize) -> f64 {
    let panels = quadrature_nodes.div_ceil(PANEL_ORDER).max(1);
    bessel_u_with_rule(x, &CompositeRule::new(0.0, 1.0, panels, PANEL_ORDER))
}

fn bessel_u_with_rule(x: f64, rule: &CompositeRule) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    rule.integrate(|v| 2.0 * v * bessel3_unit_cdf(x / v)).clamp(0.0, 1.0)
}

fn bessel_u_cdf_default(x: f64) -> f64 {
    static RULE: OnceLock<CompositeRule> = OnceLock::new();
    let rule = RULE.get_or_init(|| CompositeRule::new(0.0, 1.0, BESSEL_U_NODES / PANEL_ORDER, PANEL_ORDER));
    bessel_u_with_rule(x, rule)
}

/// `(2/pi) arcsin(sqrt x)` on `[0, 1]`.
pub fn arcsine_cdf(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("arcsine_cdf domain is [0, 1], got {x}")));
    }
    Ok(FRAC_2_PI * x.sqrt().asin())
}

/// Euclidean norm of a 3-dimensional discrete Brownian path started at 0.
///
/// The three coordinates use independent lanes of `seeds`.
pub fn bessel3_path_sampler(horizon: f64, n_steps: usize, seeds: SeedPlan) -> Result<Path> {
    if n_steps == 0 || !(horizon > 0.0) {
        return Err(Error::InvalidArgument("bessel3 path needs n_steps >= 1 and horizon > 0".into()));
    }
    let dt = horizon / n_steps as f64;
    let sd = dt.sqrt();
    let mut rngs = lanes::BESSEL_AXIS.map(|lane| seeds.lane(lane).rng());
    let mut coords = [0.0f64; 3];
    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(0.0);
    for _ in 0..n_steps {
        for (c, rng) in coords.iter_mut().zip(rngs.iter_mut()) {
            let z: f64 = rng.sample(StandardNormal);
            *c += sd * z;
        }
        values.push((coords[0] * coords[0] + coords[1] * coords[1] + coords[2] * coords[2]).sqrt());
    }
    Ok(Path {
        step: dt,
        start_time: 0.0,
        values,
        model_name: "bessel3".into(),
        seed: seeds,
    })
}

/// Two independent paths `-sigma B^(1)` (backward side) and `-sigma B^(2)`
/// (forward side) on `[0, window]`, neither killed.
pub fn xi_hat_sampler(
    sigma_at_sup: f64,
    window: f64,
    n_steps: usize,
    seeds: SeedPlan,
) -> Result<(KilledPath, KilledPath)> {
    if !(sigma_at_sup > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma_at_sup}")));
    }
    let side = |lane| -> Result<KilledPath> {
        let b = bessel3_path_sampler(window, n_steps, seeds.lane(lane))?;
        Ok(KilledPath {
            step: b.step,
            values: b.values.iter().map(|v| -sigma_at_sup * v).collect(),
            kill_time: window,
        })
    };
    Ok((side(lanes::XI_BACKWARD)?, side(lanes::XI_FORWARD)?))
}

/// One draw of `max_{|i| <= K} xi_{i + U}` together with the `i = 0` term `xi_U`.
///
/// The Bessel-3 values are sampled exactly at the times `U, 1 + U, ..., K + U`
/// (forward side) and `1 - U, ..., K - U` (backward side) from Gaussian
/// increments of 3-dimensional Brownian motion. Each side and `U` use their
/// own lanes, so draws with a larger `K` extend those with a smaller `K`.
pub fn limit_sup_with_lower_term(sigma_at_sup: f64, truncation: usize, seeds: SeedPlan) -> (f64, f64) {
    let u: f64 = seeds.lane(lanes::XI_SHIFT).rng().random();
    let min_norm = |first: f64, count: usize, lane: u64| -> (f64, f64) {
        let mut rng = seeds.lane(lane).rng();
        let mut c = [0.0f64; 3];
        let mut first_norm = f64::NAN;
        let mut min = f64::INFINITY;
        for i in 0..count {
            let dt = if i == 0 { first } else { 1.0 };
            let sd = dt.sqrt();
            for ci in c.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *ci += sd * z;
            }
            let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            if i == 0 {
                first_norm = r;
            }
            min = min.min(r);
        }
        (min, first_norm)
    };
    let (fwd_min, at_u) = min_norm(u, truncation + 1, lanes::XI_FORWARD);
    let (bwd_min, _) = min_norm(1.0 - u, truncation, lanes::XI_BACKWARD);
    (-sigma_at_sup * fwd_min.min(bwd_min), -sigma_at_sup * at_u)
}

/// One draw of `max_{|i| <= K} xi_{i + U}`.
pub fn limit_sup_over_shifted_grid(sigma_at_sup: f64, truncation: usize, seeds: SeedPlan) -> Result<f64> {
    if truncation == 0 {
        return Err(Error::InvalidArgument("truncation K must be at least 1".into()));
    }
    if !(sigma_at_sup > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma_at_sup}")));
    }
    Ok(limit_sup_with_lower_term(sigma_at_sup, truncation, seeds).0)
}
