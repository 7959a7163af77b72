use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::{Error, Result};

/// Inclusive range of times used for a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FitWindow {
    pub lo: u64,
    pub hi: u64,
}

impl FitWindow {
    pub fn new(lo: u64, hi: u64) -> Self {
        FitWindow { lo, hi }
    }

    /// The last `decades` decades before `t_max`: `[t_max / 10^decades, t_max]`.
    pub fn last_decades(t_max: u64, decades: u32) -> Self {
        let lo = t_max / 10u64.saturating_pow(decades);
        FitWindow { lo: lo.max(1), hi: t_max }
    }

    pub fn contains(&self, t: u64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

/// Least-squares line through `(log t, log sup_norm)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    #[serde(rename = "r2")]
    pub r_squared: f64,
    #[serde(serialize_with = "window_pair")]
    pub window: FitWindow,
}

fn window_pair<S: serde::Serializer>(w: &FitWindow, s: S) -> std::result::Result<S::Ok, S::Error> {
    [w.lo, w.hi].serialize(s)
}

/// Fits `log v = intercept + slope * log t` over the samples in `window`
/// with `t > 0` and `v > 0`.
pub fn fit_power_law(times: &[u64], values: &[f64], window: FitWindow) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(Error::Shape(format!(
            "{} times and {} values",
            times.len(),
            values.len()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(&t, &v)| t > 0 && window.contains(t) && v > 0.0 && v.is_finite())
        .map(|(&t, &v)| ((t as f64).ln(), v.ln()))
        .unzip();
    if xs.len() < 2 {
        return Err(Error::Unfittable(format!(
            "{} positive samples in [{}, {}]",
            xs.len(),
            window.lo,
            window.hi
        )));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    // a flat series is fitted exactly
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        window,
    })
}

pub fn fit_polynomial_rate(trajectory: &Trajectory, window: FitWindow) -> Result<RateFit> {
    fit_power_law(&trajectory.times, &trajectory.sup_norm, window)
}
