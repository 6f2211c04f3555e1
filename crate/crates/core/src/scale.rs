//! Scale function `p` with `p'(x) = exp(-2 int_{x0}^x mu/sigma^2)`, `p(x0) = 0`.
//!
//! `Y = p(X)` is a driftless diffusion started at 0 with diffusion
//! coefficient `(sigma p') o p^{-1}`, and `p` is strictly increasing, so `Y`
//! attains its supremum at the same time as `X`.
//!
//! `p` and `log p'` are tabulated eagerly on a uniform knot grid and
//! evaluated by cubic Hermite interpolation with exact knot derivatives.
//! The grid is refined until the interpolant agrees with direct quadrature
//! at every interval midpoint to within `tol` (relative to `max(1, |p|)`).

use std::cell::RefCell;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DiffusionModel, Interval};
use crate::quad::adaptive_simpson;
use crate::simulate::Path;

const INITIAL_INTERVALS: usize = 64;
const MAX_INTERVALS: usize = 1 << 22;

#[derive(Debug, Clone)]
pub struct ScaleFunction {
    source: DiffusionModel,
    valid: Interval,
    tol: f64,
    lo: f64,
    h: f64,
    /// `log p'` at the knots.
    log_deriv: Vec<f64>,
    /// `(log p')' = -2 mu / sigma^2` at the knots.
    log_deriv_slope: Vec<f64>,
    p: Vec<f64>,
    /// Hermite slopes for `p` after the Fritsch–Carlson monotonicity limiter.
    p_slope: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScaleSummary {
    pub valid_interval: Interval,
    pub knots: usize,
    pub tolerance: f64,
    pub image: Interval,
}

struct Integrand<'a> {
    model: &'a DiffusionModel,
    inner_tol: f64,
}

impl Integrand<'_> {
    fn ratio(&self, u: f64) -> f64 {
        let s = self.model.diffusion(u);
        self.model.drift(u) / (s * s)
    }

    /// `(log p'(b), p(b) - p(a))` given `log p'(a)`, by nested quadrature.
    fn segment(&self, a: f64, b: f64, log_a: f64, tol: f64) -> Result<(f64, f64)> {
        let log_at = |u: f64| -> Result<f64> {
            Ok(log_a - 2.0 * adaptive_simpson(|v| self.ratio(v), a, u, self.inner_tol)?)
        };
        let log_b = log_at(b)?;
        let failure = RefCell::new(None);
        let inc = adaptive_simpson(
            |u| match log_at(u) {
                Ok(l) => l.exp(),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            },
            a,
            b,
            tol,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok((log_b, inc?))
    }
}

#[inline]
fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * m1
}

#[inline]
fn hermite_slope(y0: f64, y1: f64, m0: f64, m1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    ((6.0 * t2 - 6.0 * t) * y0 + (-6.0 * t2 + 6.0 * t) * y1) / h
        + (3.0 * t2 - 4.0 * t + 1.0) * m0
        + (3.0 * t2 - 2.0 * t) * m1
}

/// Builds the scale function of `model` on `interval` (which must contain
/// the initial value and lie inside the model's declared range).
pub fn build_scale(model: &DiffusionModel, interval: Interval, tol: f64) -> Result<ScaleFunction> {
    if !interval.is_bounded() || interval.hi <= interval.lo {
        return Err(Error::InvalidArgument(format!(
            "scale interval must be bounded with lo < hi, got [{}, {}]",
            interval.lo, interval.hi
        )));
    }
    if !model.known_range.contains_interval(&interval) {
        return Err(Error::OutsideInterval {
            value: if interval.lo < model.known_range.lo { interval.lo } else { interval.hi },
            lo: model.known_range.lo,
            hi: model.known_range.hi,
        });
    }
    if !interval.contains(model.initial_value) {
        return Err(Error::OutsideInterval {
            value: model.initial_value,
            lo: interval.lo,
            hi: interval.hi,
        });
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }

    let mut intervals = INITIAL_INTERVALS;
    loop {
        let scale = tabulate(model, interval, tol, intervals)?;
        if scale.midpoints_within_tolerance()? {
            return Ok(scale);
        }
        intervals *= 2;
        if intervals > MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "interpolation of p did not reach tolerance {tol:e} with {MAX_INTERVALS} knots"
            )));
        }
    }
}

fn tabulate(model: &DiffusionModel, interval: Interval, tol: f64, intervals: usize) -> Result<ScaleFunction> {
    let n = intervals + 1;
    let h = interval.width() / intervals as f64;
    let knot = |k: usize| if k == intervals { interval.hi } else { interval.lo + k as f64 * h };
    let integrand = Integrand {
        model,
        inner_tol: 0.1 * tol,
    };
    let seg_tol = |log_a: f64| 0.1 * tol * (h * log_a.exp()).max(h);

    let x0 = model.initial_value;
    let j0 = (((x0 - interval.lo) / h).floor() as usize).min(intervals);
    let mut log_deriv = vec![0.0; n];
    let mut p = vec![0.0; n];

    // Anchor at x0, then walk outward knot by knot.
    let (l, inc) = integrand.segment(x0, knot(j0), 0.0, seg_tol(0.0))?;
    log_deriv[j0] = l;
    p[j0] = inc;
    for k in j0 + 1..n {
        let (l, inc) = integrand.segment(knot(k - 1), knot(k), log_deriv[k - 1], seg_tol(log_deriv[k - 1]))?;
        log_deriv[k] = l;
        p[k] = p[k - 1] + inc;
    }
    for k in (0..j0).rev() {
        let (l, inc) = integrand.segment(knot(k + 1), knot(k), log_deriv[k + 1], seg_tol(log_deriv[k + 1]))?;
        log_deriv[k] = l;
        p[k] = p[k + 1] + inc;
    }

    let log_deriv_slope: Vec<f64> = (0..n).map(|k| -2.0 * integrand.ratio(knot(k))).collect();
    if let Some(k) = log_deriv_slope.iter().position(|v| !v.is_finite()) {
        return Err(Error::Quadrature(format!("mu/sigma^2 not finite at x = {}", knot(k))));
    }
    let mut p_slope: Vec<f64> = log_deriv.iter().map(|l| l.exp()).collect();
    if let Some(k) = p.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Quadrature(format!(
            "p is not strictly increasing near x = {} (underflow of p')",
            knot(k)
        )));
    }
    // Fritsch–Carlson: keep the interpolant monotone on every interval.
    for k in 0..intervals {
        let secant = (p[k + 1] - p[k]) / h;
        let a = p_slope[k] / secant;
        let b = p_slope[k + 1] / secant;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            p_slope[k] = tau * a * secant;
            p_slope[k + 1] = tau * b * secant;
        }
    }

    Ok(ScaleFunction {
        source: model.clone(),
        valid: interval,
        tol,
        lo: interval.lo,
        h,
        log_deriv,
        log_deriv_slope,
        p,
        p_slope,
    })
}

impl ScaleFunction {
    fn intervals(&self) -> usize {
        self.p.len() - 1
    }

    fn knot(&self, k: usize) -> f64 {
        if k == self.intervals() {
            self.valid.hi
        } else {
            self.lo + k as f64 * self.h
        }
    }

    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !self.valid.contains(x) {
            return Err(Error::OutsideInterval {
                value: x,
                lo: self.valid.lo,
                hi: self.valid.hi,
            });
        }
        let k = (((x - self.lo) / self.h).floor() as usize).min(self.intervals() - 1);
        Ok((k, (x - self.knot(k)) / self.h))
    }

    fn midpoints_within_tolerance(&self) -> Result<bool> {
        let integrand = Integrand {
            model: &self.source,
            inner_tol: 0.1 * self.tol,
        };
        for k in 0..self.intervals() {
            let a = self.knot(k);
            let mid = a + 0.5 * self.h;
            let (l_mid, inc) =
                integrand.segment(a, mid, self.log_deriv[k], 0.1 * self.tol * (self.h * self.log_deriv[k].exp()).max(self.h))?;
            let exact = self.p[k] + inc;
            let approx = self.eval(mid)?;
            if (approx - exact).abs() > self.tol * exact.abs().max(1.0) {
                return Ok(false);
            }
            let l_approx = self.log_derivative(mid)?;
            if (l_approx - l_mid).abs() > self.tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn valid_interval(&self) -> Interval {
        self.valid
    }

    /// `[p(lo), p(hi)]`.
    pub fn image(&self) -> Interval {
        Interval::new(self.p[0], self.p[self.intervals()])
    }

    pub fn source_model(&self) -> &DiffusionModel {
        &self.source
    }

    pub fn summary(&self) -> ScaleSummary {
        ScaleSummary {
            valid_interval: self.valid,
            knots: self.p.len(),
            tolerance: self.tol,
            image: self.image(),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let (k, t) = self.locate(x)?;
        Ok(hermite(self.p[k], self.p[k + 1], self.p_slope[k], self.p_slope[k + 1], self.h, t))
    }

    fn log_derivative(&self, x: f64) -> Result<f64> {
        let (k, t) = self.locate(x)?;
        Ok(hermite(
            self.log_deriv[k],
            self.log_deriv[k + 1],
            self.log_deriv_slope[k],
            self.log_deriv_slope[k + 1],
            self.h,
            t,
        ))
    }

    /// `p'(x)`.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        Ok(self.log_derivative(x)?.exp())
    }

    /// `p^{-1}(y)`: bracket by bisection over the knots, then safeguarded
    /// Newton on the interpolating cubic.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let image = self.image();
        if !image.contains(y) {
            return Err(Error::OutsideInterval {
                value: y,
                lo: image.lo,
                hi: image.hi,
            });
        }
        let k = self.p.partition_point(|&v| v <= y).saturating_sub(1).min(self.intervals() - 1);
        let (y0, y1) = (self.p[k], self.p[k + 1]);
        let (m0, m1) = (self.p_slope[k], self.p_slope[k + 1]);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut t = ((y - y0) / (y1 - y0)).clamp(0.0, 1.0);
        for _ in 0..100 {
            let f = hermite(y0, y1, m0, m1, self.h, t) - y;
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = hermite_slope(y0, y1, m0, m1, self.h, t) * self.h;
            let mut next = t - f / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        Ok(self.knot(k) + t * self.h)
    }

    /// Writes `(x, p(x), p'(x))` rows on `points` equispaced nodes of the valid interval.
    pub fn write_table<W: Write>(&self, mut out: W, points: usize) -> Result<()> {
        writeln!(out, "x,p,dp")?;
        let points = points.max(2);
        for i in 0..points {
            let x = if i + 1 == points {
                self.valid.hi
            } else {
                self.valid.lo + self.valid.width() * i as f64 / (points - 1) as f64
            };
            writeln!(out, "{},{},{}", x, self.eval(x)?, self.derivative(x)?)?;
        }
        Ok(())
    }
}

/// Driftless model of `Y = p(X)`: `Y_0 = 0`, diffusion `sigma(p^{-1}(y)) p'(p^{-1}(y))`.
///
/// The diffusion evaluates to NaN outside the image of the valid interval,
/// which the simulator reports as a non-finite state.
pub fn transform_model(scale: &ScaleFunction) -> DiffusionModel {
    let s = Arc::new(scale.clone());
    let image = scale.image();
    let name = format!("{}_scaled", scale.source.name);
    DiffusionModel::new(
        name,
        |_| 0.0,
        move |y| match s.inverse(y) {
            Ok(x) => s.source.diffusion(x) * s.derivative(x).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        },
        0.0,
        image,
    )
}

/// `Y_t = p(X_t)` on the same grid.
pub fn transform_path(scale: &ScaleFunction, path: &Path) -> Result<Path> {
    let values = path.values.iter().map(|&x| scale.eval(x)).collect::<Result<Vec<_>>>()?;
    Ok(Path {
        values,
        model_name: format!("{}_scaled", path.model_name),
        ..path.clone()
    })
}
