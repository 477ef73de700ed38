//! Finite-horizon surrogates for `liminf`, `limsup` and uniform local integrability.

use super::quad::{integrate, QuadConfig};
use super::NumericsError;
use num_complex::Complex64;
use serde::Serialize;

/// `n >= 2` points from `a` to `b`, geometrically spaced.
///
/// For `a > 0` the points themselves are geometric; otherwise the offsets
/// from `a` are geometric between `1e-6 (b - a)` and `b - a`, with `a`
/// itself prepended.
pub fn geometric_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(b > a && n >= 2, "geometric grid needs b > a and n >= 2");
    if a > 0.0 {
        let ratio = (b / a).ln();
        let mut v: Vec<f64> = (0..n)
            .map(|k| a * (ratio * k as f64 / (n - 1) as f64).exp())
            .collect();
        v[0] = a;
        v[n - 1] = b;
        v
    } else {
        let span = b - a;
        let lo = span * 1e-6;
        let ratio = (span / lo).ln();
        let mut v = Vec::with_capacity(n);
        v.push(a);
        for k in 0..n - 1 {
            v.push(a + lo * (ratio * k as f64 / (n - 2).max(1) as f64).exp());
        }
        v[n - 1] = b;
        v
    }
}

/// Window minimum and maximum of a sampled function, plus the same pair on
/// the preceding window for trend checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub liminf_est: f64,
    pub limsup_est: f64,
    pub prev_liminf: f64,
    pub prev_limsup: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

impl TailEstimate {
    /// Window minimum did not drop by more than the relative `slack`.
    pub fn liminf_non_decreasing(&self, slack: f64) -> bool {
        self.liminf_est >= self.prev_liminf - slack * self.prev_liminf.abs()
    }

    /// Window maximum did not grow by more than the relative `slack`.
    pub fn limsup_non_increasing(&self, slack: f64) -> bool {
        self.limsup_est <= self.prev_limsup + slack * self.prev_limsup.abs()
    }
}

pub const MIN_TAIL_SAMPLES: usize = 200;

fn window_extrema<G: FnMut(f64) -> f64>(g: &mut G, lo: f64, hi: f64, n: usize) -> Result<(f64, f64), NumericsError> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for x in geometric_grid(lo, hi, n) {
        let v = g(x);
        if !v.is_finite() {
            return Err(NumericsError::NonFiniteSample { x });
        }
        min = min.min(v);
        max = max.max(v);
    }
    Ok((min, max))
}

/// Sample `g` on `[horizon * window_fraction, horizon]` and on the window
/// before it; report min and max of each.
pub fn tail_estimate<G>(mut g: G, horizon: f64, window_fraction: f64, samples: usize) -> Result<TailEstimate, NumericsError>
where
    G: FnMut(f64) -> f64,
{
    assert!(
        window_fraction > 0.0 && window_fraction < 1.0,
        "window fraction must lie in (0, 1)"
    );
    assert!(horizon > 0.0, "horizon must be positive");
    let n = samples.max(MIN_TAIL_SAMPLES);
    let lo = horizon * window_fraction;
    let (min, max) = window_extrema(&mut g, lo, horizon, n)?;
    let (pmin, pmax) = window_extrema(&mut g, lo * window_fraction, lo, n)?;
    Ok(TailEstimate {
        liminf_est: min,
        limsup_est: max,
        prev_liminf: pmin,
        prev_limsup: pmax,
        window: (lo, horizon),
        samples: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum L1uVerdict {
    Holds,
    Fails,
    Undetermined,
}

/// Unit-interval integrals `u_n` of `q_abs` and the resulting verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L1uReport {
    pub verdict: L1uVerdict,
    pub sup: f64,
    pub intervals: usize,
}

/// Uniform local integrability on `[a, horizon]`.
///
/// Holds when the last quarter of the `u_n` raises the running maximum by
/// less than 1%; Fails when `u_n` increases monotonically over the last
/// quarter by at least 10%.
pub fn is_l1u<G>(mut q_abs: G, a: f64, horizon: f64, quad: &QuadConfig) -> Result<L1uReport, NumericsError>
where
    G: FnMut(f64) -> f64,
{
    assert!(horizon >= a + 10.0, "horizon must exceed a by at least 10");
    let first = a.floor() as i64;
    let last = horizon.ceil() as i64;
    let mut u = Vec::with_capacity((last - first) as usize);
    for n in first..last {
        let lo = (n as f64).max(a);
        let hi = ((n + 1) as f64).min(horizon);
        if hi <= lo {
            continue;
        }
        let q = integrate(|t| Complex64::new(q_abs(t).abs(), 0.0), lo, hi, quad)?;
        u.push(q.value.re);
    }
    let quarter = (u.len() / 4).max(1);
    let split = u.len() - quarter;
    let head_max = u[..split].iter().cloned().fold(0.0, f64::max);
    let all_max = u.iter().cloned().fold(0.0, f64::max);
    let tail = &u[split..];
    let verdict = if all_max <= 1.01 * head_max {
        L1uVerdict::Holds
    } else if tail.windows(2).all(|w| w[1] >= w[0]) && tail[tail.len() - 1] >= 1.1 * tail[0] {
        L1uVerdict::Fails
    } else {
        L1uVerdict::Undetermined
    };
    Ok(L1uReport {
        verdict,
        sup: all_max,
        intervals: u.len(),
    })
}
