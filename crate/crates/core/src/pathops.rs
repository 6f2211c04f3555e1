//! Path functionals: supremum and its last argmax, pre/post-supremum
//! processes, the two zoom operators, quadratic variation and its inverse.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::simulate::Path;

/// Supremum of a path on its grid and the last time it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupremumRecord {
    pub sup_value: f64,
    pub argmax_time: f64,
    pub argmax_index: usize,
}

/// A path observed on `k * step` for `k * step <= kill_time`.
///
/// Beyond `kill_time` the process is in the cemetery state. The value at the
/// kill time itself is kept when it falls on the grid; see the note on
/// [`pre_post_supremum`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KilledPath {
    pub step: f64,
    pub values: Vec<f64>,
    pub kill_time: f64,
}

impl KilledPath {
    /// Index of rescaled time `t`, which must sit on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let r = t / self.step;
        let k = r.round();
        if k < 0.0 || (r - k).abs() > 1e-6 * k.max(1.0) {
            return Err(Error::GridMisalignment(format!(
                "time {t} is not on the grid of step {}",
                self.step
            )));
        }
        Ok(k as usize)
    }

    /// Value at rescaled time `t`, or `None` if the path has been killed by then.
    pub fn value_at(&self, t: f64) -> Result<Option<f64>> {
        let k = self.index_of(t)?;
        Ok(self.values.get(k).copied())
    }

    /// True when the path carries no information beyond its starting point.
    pub fn is_degenerate(&self) -> bool {
        self.values.len() <= 1
    }
}

/// Backward (`pre`) and forward (`post`) rescaled views around a time point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoomedPair {
    pub pre: KilledPath,
    pub post: KilledPath,
    pub epsilon: f64,
    pub scale_factor: f64,
}

impl ZoomedPair {
    pub fn pre_degenerate(&self) -> bool {
        self.pre.is_degenerate()
    }

    pub fn post_degenerate(&self) -> bool {
        self.post.is_degenerate()
    }

    /// Zooms further by `epsilon2`: time is divided and values multiplied by
    /// `epsilon2^{-1/2}`. Composition gives the zoom with `epsilon * epsilon2`.
    pub fn rezoom(&self, epsilon2: f64) -> Result<ZoomedPair> {
        check_epsilon(epsilon2)?;
        let factor = epsilon2.powf(-0.5);
        let scale = |p: &KilledPath| KilledPath {
            step: p.step / epsilon2,
            values: p.values.iter().map(|v| v * factor).collect(),
            kill_time: p.kill_time / epsilon2,
        };
        Ok(ZoomedPair {
            pre: scale(&self.pre),
            post: scale(&self.post),
            epsilon: self.epsilon * epsilon2,
            scale_factor: self.scale_factor * factor,
        })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")))
    }
}

/// Supremum over the grid; ties resolve to the last attaining index.
pub fn supremum(path: &Path) -> Result<SupremumRecord> {
    let (idx, best) =
        last_argmax(&path.values).ok_or_else(|| Error::InvalidArgument("supremum of an empty path".into()))?;
    Ok(SupremumRecord {
        sup_value: best,
        argmax_time: path.time(idx),
        argmax_index: idx,
    })
}

/// `(index, value)` of the maximum, last index on ties.
pub fn last_argmax(values: &[f64]) -> Option<(usize, f64)> {
    let (first, rest) = values.split_first()?;
    let mut best = *first;
    let mut idx = 0;
    for (k, &v) in rest.iter().enumerate() {
        if v >= best {
            best = v;
            idx = k + 1;
        }
    }
    Some((idx, best))
}

/// Pre- and post-supremum processes `X_{m -/+ t} - sup X`, unscaled.
///
/// Both sides include the grid point at the kill time (the path's own end
/// points), so a supremum attained at time 0 yields a single-point `pre`
/// and the pair reports `pre_degenerate()`.
pub fn pre_post_supremum(path: &Path) -> Result<ZoomedPair> {
    zoom_supremum(path, 1.0)
}

/// `(eps^{-1/2} X_pre(eps t), eps^{-1/2} X_post(eps t))` with kill times
/// `m / eps` and `(horizon - m) / eps`.
pub fn zoom_supremum(path: &Path, epsilon: f64) -> Result<ZoomedPair> {
    check_epsilon(epsilon)?;
    let sup = supremum(path)?;
    let m = sup.argmax_index;
    let top = sup.sup_value;
    let factor = epsilon.powf(-0.5);
    let step = path.step / epsilon;
    let pre = KilledPath {
        step,
        values: path.values[..=m].iter().rev().map(|x| (x - top) * factor).collect(),
        kill_time: (m as f64 * path.step) / epsilon,
    };
    let post = KilledPath {
        step,
        values: path.values[m..].iter().map(|x| (x - top) * factor).collect(),
        kill_time: ((path.n_steps() - m) as f64 * path.step) / epsilon,
    };
    Ok(ZoomedPair {
        pre,
        post,
        epsilon,
        scale_factor: factor,
    })
}

/// `eps^{-1/2} (X_{T -/+ eps t} - X_T)` for `t` in `[0, window]`.
///
/// `at_time` (relative to the path start) and `eps * window` must both land
/// on the fine grid.
pub fn zoom_fixed(path: &Path, at_time: f64, epsilon: f64, window: f64) -> Result<ZoomedPair> {
    check_epsilon(epsilon)?;
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::InvalidArgument(format!("window must be positive, got {window}")));
    }
    let on_grid = |t: f64, what: &str| -> Result<usize> {
        let r = t / path.step;
        let k = r.round();
        if k < 0.0 || (r - k).abs() > 1e-6 * k.max(1.0) {
            return Err(Error::GridMisalignment(format!(
                "{what} {t} is not a multiple of the fine step {}",
                path.step
            )));
        }
        Ok(k as usize)
    };
    let centre = on_grid(at_time, "zoom time")?;
    let width = on_grid(epsilon * window, "zoom extent")?;
    if width > centre || centre + width > path.n_steps() {
        return Err(Error::WindowOutOfRange(format!(
            "eps * window = {} around t = {at_time} leaves [0, {}]",
            epsilon * window,
            path.horizon()
        )));
    }
    let factor = epsilon.powf(-0.5);
    let anchor = path.values[centre];
    let step = path.step / epsilon;
    let post = KilledPath {
        step,
        values: path.values[centre..=centre + width].iter().map(|x| (x - anchor) * factor).collect(),
        kill_time: window,
    };
    let pre = KilledPath {
        step,
        values: path.values[centre - width..=centre].iter().rev().map(|x| (x - anchor) * factor).collect(),
        kill_time: window,
    };
    Ok(ZoomedPair {
        pre,
        post,
        epsilon,
        scale_factor: factor,
    })
}

/// Tabulated function on increasing arguments, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionTable {
    pub args: Vec<f64>,
    pub values: Vec<f64>,
}

impl FunctionTable {
    /// Linear interpolation; `None` outside `[args[0], args[last]]`.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let n = self.args.len();
        if n == 0 || x < self.args[0] || x > self.args[n - 1] {
            return None;
        }
        let j = self.args.partition_point(|&a| a <= x).saturating_sub(1);
        if j + 1 >= n || self.args[j] == x {
            return Some(self.values[j]);
        }
        let (x0, x1) = (self.args[j], self.args[j + 1]);
        let (y0, y1) = (self.values[j], self.values[j + 1]);
        Some(y0 + (x - x0) / (x1 - x0) * (y1 - y0))
    }
}

/// `t -> [X]_t = int_0^t sigma^2(X_s) ds` by the trapezoidal rule on the path grid.
pub fn quadratic_variation(path: &Path, model: &DiffusionModel) -> FunctionTable {
    let mut args = Vec::with_capacity(path.len());
    let mut values = Vec::with_capacity(path.len());
    let mut acc = 0.0;
    let mut prev = path.values.first().map(|&x| model.diffusion(x).powi(2));
    for (k, &x) in path.values.iter().enumerate() {
        let s2 = model.diffusion(x).powi(2);
        if k > 0 {
            acc += 0.5 * path.step * (prev.unwrap_or(s2) + s2);
        }
        prev = Some(s2);
        args.push(path.time(k));
        values.push(acc);
    }
    FunctionTable { args, values }
}

/// Inverse `s -> tau_s` of a strictly increasing table.
pub fn time_change_inverse(qv: &FunctionTable) -> Result<FunctionTable> {
    if let Some(k) = qv.values.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotone(k + 1));
    }
    Ok(FunctionTable {
        args: qv.values.clone(),
        values: qv.args.clone(),
    })
}
