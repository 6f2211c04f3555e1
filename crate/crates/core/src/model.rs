//! Diffusion models `dX = mu(X) dt + sigma(X) dW, X_0 = x0` and the builtin catalog.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Real-valued coefficient of the state.
pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closed interval of state space; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn real_line() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Drift and diffusion coefficients with an initial value and the declared range.
///
/// Coefficients are total functions; `known_range` is where the model author
/// guarantees `diffusion > 0` and locally bounded drift.
#[derive(Clone)]
pub struct DiffusionModel {
    drift: Coefficient,
    diffusion: Coefficient,
    pub initial_value: f64,
    pub name: String,
    pub known_range: Interval,
}

impl fmt::Debug for DiffusionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionModel")
            .field("name", &self.name)
            .field("initial_value", &self.initial_value)
            .field("known_range", &self.known_range)
            .finish_non_exhaustive()
    }
}

impl DiffusionModel {
    pub fn new(
        name: impl Into<String>,
        drift: impl Fn(f64) -> f64 + Send + Sync + 'static,
        diffusion: impl Fn(f64) -> f64 + Send + Sync + 'static,
        initial_value: f64,
        known_range: Interval,
    ) -> Self {
        Self {
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            initial_value,
            name: name.into(),
            known_range,
        }
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    #[inline]
    pub fn diffusion(&self, x: f64) -> f64 {
        (self.diffusion)(x)
    }
}

fn param(model: &str, params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    params.get(key).copied().ok_or_else(|| Error::MissingParameter {
        model: model.to_string(),
        param: key.to_string(),
    })
}

fn positive(key: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            param: key.to_string(),
            reason: format!("must be positive and finite, got {value}"),
        })
    }
}

fn finite(key: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            param: key.to_string(),
            reason: format!("must be finite, got {value}"),
        })
    }
}

/// Names of the builtin models.
pub const BUILTIN_MODELS: [&str; 4] = ["bm", "bm_drift", "ou", "gbm"];

/// Builds a catalog model.
///
/// Parameters are keyed `sigma0`, `mu0`, `theta` and `x0`. `x0` defaults to
/// 0 for the additive models and is required for `gbm`.
///
/// | name       | drift     | diffusion   | range  |
/// |------------|-----------|-------------|--------|
/// | `bm`       | 0         | sigma0      | R      |
/// | `bm_drift` | mu0       | sigma0      | R      |
/// | `ou`       | -theta x  | sigma0      | R      |
/// | `gbm`      | 0         | sigma0 x    | (0, ∞) |
pub fn builtin_model(name: &str, params: &BTreeMap<String, f64>) -> Result<DiffusionModel> {
    let x0 = |default: Option<f64>| -> Result<f64> {
        match (params.get("x0"), default) {
            (Some(&v), _) => finite("x0", v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::MissingParameter {
                model: name.to_string(),
                param: "x0".to_string(),
            }),
        }
    };
    match name {
        "bm" => {
            let s = positive("sigma0", param(name, params, "sigma0")?)?;
            Ok(DiffusionModel::new(name, |_| 0.0, move |_| s, x0(Some(0.0))?, Interval::real_line()))
        }
        "bm_drift" => {
            let m = finite("mu0", param(name, params, "mu0")?)?;
            let s = positive("sigma0", param(name, params, "sigma0")?)?;
            Ok(DiffusionModel::new(name, move |_| m, move |_| s, x0(Some(0.0))?, Interval::real_line()))
        }
        "ou" => {
            let theta = finite("theta", param(name, params, "theta")?)?;
            let s = positive("sigma0", param(name, params, "sigma0")?)?;
            Ok(DiffusionModel::new(
                name,
                move |x| -theta * x,
                move |_| s,
                x0(Some(0.0))?,
                Interval::real_line(),
            ))
        }
        "gbm" => {
            let s = positive("sigma0", param(name, params, "sigma0")?)?;
            let start = x0(None)?;
            if start <= 0.0 {
                return Err(Error::InvalidParameter {
                    param: "x0".into(),
                    reason: format!("gbm needs x0 > 0 so that sigma is positive on the range, got {start}"),
                });
            }
            Ok(DiffusionModel::new(
                name,
                |_| 0.0,
                move |x| s * x,
                start,
                Interval::new(f64::MIN_POSITIVE, f64::INFINITY),
            ))
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// Result of checking positivity and local boundedness on a grid.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub interval: Interval,
    pub grid_points: usize,
    pub min_diffusion: f64,
    pub argmin_diffusion: f64,
    pub max_abs_drift: f64,
    pub diffusion_positive: bool,
    pub drift_finite: bool,
    pub within_known_range: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.diffusion_positive && self.drift_finite
    }
}

/// Evaluates the coefficients on `grid_points` equispaced points of a bounded
/// interval and flags non-positive diffusion or non-finite drift.
pub fn validate(model: &DiffusionModel, interval: Interval, grid_points: usize) -> Result<ValidationReport> {
    if !interval.is_bounded() || interval.hi < interval.lo {
        return Err(Error::InvalidArgument(format!(
            "validation interval must be bounded and ordered, got [{}, {}]",
            interval.lo, interval.hi
        )));
    }
    if grid_points < 2 {
        return Err(Error::InvalidArgument("grid_points must be at least 2".into()));
    }
    let mut min_diffusion = f64::INFINITY;
    let mut argmin = interval.lo;
    let mut max_abs_drift = 0.0_f64;
    let mut drift_finite = true;
    let h = interval.width() / (grid_points - 1) as f64;
    for i in 0..grid_points {
        let x = if i + 1 == grid_points { interval.hi } else { interval.lo + i as f64 * h };
        let s = model.diffusion(x);
        // NaN compares false; treat it as a failure explicitly.
        if s < min_diffusion || s.is_nan() {
            min_diffusion = s;
            argmin = x;
        }
        let m = model.drift(x);
        if m.is_finite() {
            max_abs_drift = max_abs_drift.max(m.abs());
        } else {
            drift_finite = false;
        }
    }
    Ok(ValidationReport {
        interval,
        grid_points,
        min_diffusion,
        argmin_diffusion: argmin,
        max_abs_drift,
        diffusion_positive: min_diffusion > 0.0,
        drift_finite,
        within_known_range: model.known_range.contains_interval(&interval),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn catalog_coefficients() {
        let bm = builtin_model("bm", &params(&[("sigma0", 1.0)])).unwrap();
        assert_eq!(bm.drift(5.0), 0.0);
        assert_eq!(bm.diffusion(5.0), 1.0);

        let ou = builtin_model("ou", &params(&[("theta", 1.0), ("sigma0", 1.0)])).unwrap();
        assert_eq!(ou.drift(2.0), -2.0);
        assert_eq!(ou.diffusion(2.0), 1.0);

        let gbm = builtin_model("gbm", &params(&[("sigma0", 0.5), ("x0", 1.0)])).unwrap();
        assert_eq!(gbm.diffusion(2.0), 1.0);
        assert_eq!(gbm.initial_value, 1.0);

        let bmd = builtin_model("bm_drift", &params(&[("mu0", 2.0), ("sigma0", 3.0)])).unwrap();
        assert_eq!(bmd.drift(-7.0), 2.0);
        assert_eq!(bmd.diffusion(-7.0), 3.0);
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(builtin_model("cir", &params(&[])), Err(Error::UnknownModel(_))));
        assert!(matches!(
            builtin_model("ou", &params(&[("sigma0", 1.0)])),
            Err(Error::MissingParameter { .. })
        ));
        assert!(matches!(
            builtin_model("bm", &params(&[("sigma0", 0.0)])),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            builtin_model("gbm", &params(&[("sigma0", 1.0), ("x0", -1.0)])),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            builtin_model("gbm", &params(&[("sigma0", 1.0)])),
            Err(Error::MissingParameter { .. })
        ));
    }

    #[test]
    fn validation_reports() {
        let bm = builtin_model("bm", &params(&[("sigma0", 1.0)])).unwrap();
        let r = validate(&bm, Interval::new(-10.0, 10.0), 100).unwrap();
        assert!(r.passed());
        assert_eq!(r.min_diffusion, 1.0);

        let gbm = builtin_model("gbm", &params(&[("sigma0", 1.0), ("x0", 1.0)])).unwrap();
        let r = validate(&gbm, Interval::new(-1.0, 1.0), 100).unwrap();
        assert!(!r.passed());
        assert!(r.min_diffusion < 0.0);
        assert!(!r.within_known_range);

        let ou = builtin_model("ou", &params(&[("theta", 2.0), ("sigma0", 1.0)])).unwrap();
        let r = validate(&ou, Interval::new(-5.0, 5.0), 100).unwrap();
        assert!(r.passed());
        assert_eq!(r.max_abs_drift, 10.0);

        assert!(validate(&ou, Interval::real_line(), 10).is_err());
        assert!(validate(&ou, Interval::new(0.0, 1.0), 1).is_err());
    }

    #[test]
    fn builtin_diffusion_positive_on_declared_range() {
        let cases = [
            ("bm", params(&[("sigma0", 0.3)])),
            ("bm_drift", params(&[("mu0", -4.0), ("sigma0", 2.0)])),
            ("ou", params(&[("theta", 3.0), ("sigma0", 0.7)])),
            ("gbm", params(&[("sigma0", 0.5), ("x0", 2.0)])),
        ];
        for (name, p) in cases {
            let m = builtin_model(name, &p).unwrap();
            let lo = m.known_range.lo.max(-50.0).max(1e-6);
            let lo = if m.known_range.lo.is_finite() { lo } else { -50.0 };
            let r = validate(&m, Interval::new(lo, 50.0), 1001).unwrap();
            assert!(r.passed(), "{name}");
        }
    }

    #[test]
    fn builtin_is_deterministic() {
        let p = params(&[("theta", 1.3), ("sigma0", 0.4)]);
        let a = builtin_model("ou", &p).unwrap();
        let b = builtin_model("ou", &p).unwrap();
        for i in -20..20 {
            let x = i as f64 * 0.37;
            assert_eq!(a.drift(x).to_bits(), b.drift(x).to_bits());
            assert_eq!(a.diffusion(x).to_bits(), b.diffusion(x).to_bits());
        }
    }
}
