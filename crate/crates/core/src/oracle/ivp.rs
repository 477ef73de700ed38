//! Adaptive Magnus integration of `v'' = s v` with log renormalization.

use super::magnus::{expm_traceless, magnus_exponents, modified_propagator, traceless_mu, M2, NODES};
use super::OracleError;
use crate::asymptotics::SField;
use crate::numerics::{geometric_grid, principal_root};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IvpConfig {
    /// Local relative error per step, in `[1e-12, 1e-4]`.
    pub tol: f64,
    /// Number of geometric output points, at least 512.
    pub checkpoints: usize,
    pub max_steps: u64,
}

impl Default for IvpConfig {
    fn default() -> Self {
        IvpConfig {
            tol: 1e-10,
            checkpoints: 512,
            max_steps: 400_000_000,
        }
    }
}

impl IvpConfig {
    pub fn with_tol(tol: f64) -> Self {
        IvpConfig { tol, ..Self::default() }
    }
}

pub const MIN_CHECKPOINTS: usize = 512;

/// Signed running sum stored as `value * e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogAcc {
    log_scale: f64,
    value: f64,
}

impl LogAcc {
    pub(crate) fn zero() -> Self {
        LogAcc { log_scale: f64::NEG_INFINITY, value: 0.0 }
    }

    pub(crate) fn add(&mut self, log_w: f64, term: f64) {
        if term == 0.0 {
            return;
        }
        if self.value == 0.0 {
            self.log_scale = log_w;
            self.value = term;
        } else if log_w > self.log_scale {
            self.value = self.value * (self.log_scale - log_w).exp() + term;
            self.log_scale = log_w;
        } else {
            self.value += term * (log_w - self.log_scale).exp();
        }
    }

    /// `ln |sum|`, `-inf` when empty.
    pub(crate) fn ln_abs(&self) -> f64 {
        if self.value == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.value.abs().ln() + self.log_scale
        }
    }

    pub(crate) fn signum(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.value.signum()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
    pub max_local_error: f64,
}

/// Solution sampled at checkpoints.
///
/// The true state is `(v, dv) * e^{log_offset}`. Running integrals are kept
/// as logarithms and measured from `grid[0]` in the direction of travel, so
/// for a backward run `log_l2[k] = ln int_{grid[k]}^{grid[0]} |v|^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub v: Vec<Complex64>,
    pub dv: Vec<Complex64>,
    pub log_offset: Vec<f64>,
    pub log_l2: Vec<f64>,
    pub log_dl2: Vec<f64>,
    /// `ln |int g |v|^2|` with its sign when a weight was supplied.
    pub weighted: Option<Weighted>,
    pub ic: [Complex64; 2],
    pub stats: StepStats,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weighted {
    pub log_abs: Vec<f64>,
    pub sign: Vec<f64>,
    /// Largest `|panel|` seen, as a logarithm.
    pub log_max_panel: f64,
    /// Most negative panel relative to the `|v|^2` mass of the same step.
    pub min_rel_panel: f64,
}

impl Trajectory {
    pub fn forward(&self) -> bool {
        self.grid.len() < 2 || self.grid[1] > self.grid[0]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `ln |v(grid[k])|`.
    pub fn log_abs_v(&self, k: usize) -> f64 {
        self.v[k].norm().ln() + self.log_offset[k]
    }

    /// Unscaled `(v, v')` at checkpoint `k`; may overflow.
    pub fn state(&self, k: usize) -> [Complex64; 2] {
        let f = self.log_offset[k].exp();
        [self.v[k] * f, self.dv[k] * f]
    }

    /// Index of a checkpoint equal to `x`, if any.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.grid.iter().position(|&g| g == x)
    }
}

/// `ln(e^a - e^b)` for `a >= b`.
pub(crate) fn ln_diff(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        a
    } else {
        a + (-(b - a).exp()).ln_1p()
    }
}

fn checkpoint_grid(x0: f64, x1: f64, n: usize) -> Vec<f64> {
    if x1 > x0 {
        geometric_grid(x0, x1, n)
    } else {
        let mut g = geometric_grid(x1, x0, n);
        g.reverse();
        g
    }
}

const GL5_X: [f64; 5] = [
    0.046_910_077_030_668_0,
    0.230_765_344_947_158_5,
    0.5,
    0.769_234_655_052_841_5,
    0.953_089_922_969_332_0,
];
const GL5_W: [f64; 5] = [
    0.118_463_442_528_094_5,
    0.239_314_335_249_683_2,
    0.284_444_444_444_444_4,
    0.239_314_335_249_683_2,
    0.118_463_442_528_094_5,
];

/// `int_0^H e^{k u} du` for complex `k`.
fn exp_integral(k: Complex64, h: f64) -> Complex64 {
    let z = k * h;
    if z.norm() < 1e-8 {
        Complex64::new(h, 0.0) * (1.0 + z / 2.0)
    } else {
        ((z).exp() - 1.0) / k
    }
}

/// `(int |y_1|^2, int |y_2|^2)` over `u in [0, H]` for `y(u) = exp(u G) y0`.
fn step_moments(g: M2, y0: [Complex64; 2], h: f64) -> (f64, f64) {
    let mu = traceless_mu(g);
    if mu.norm() * h < 0.5 {
        let mut m = (0.0, 0.0);
        for (t, w) in GL5_X.iter().zip(GL5_W) {
            let y = expm_traceless(g.scale(t * h)).apply(y0);
            m.0 += w * y[0].norm_sqr();
            m.1 += w * y[1].norm_sqr();
        }
        return (m.0 * h, m.1 * h);
    }
    let gy = g.apply(y0);
    let alpha = [(y0[0] + gy[0] / mu) * 0.5, (y0[1] + gy[1] / mu) * 0.5];
    let beta = [(y0[0] - gy[0] / mu) * 0.5, (y0[1] - gy[1] / mu) * 0.5];
    let up = exp_integral(Complex64::new(2.0 * mu.re, 0.0), h).re;
    let down = exp_integral(Complex64::new(-2.0 * mu.re, 0.0), h).re;
    let cross = exp_integral(Complex64::new(0.0, 2.0 * mu.im), h);
    let moment = |j: usize| {
        let m = alpha[j].norm_sqr() * up + beta[j].norm_sqr() * down + 2.0 * (alpha[j] * beta[j].conj() * cross).re;
        m.max(0.0)
    };
    (moment(0), moment(1))
}

struct SubStep {
    p: M2,
    /// Frozen generator in the travel parameter, for the within-step moments.
    gen: M2,
    len: f64,
}

struct Attempt {
    subs: Vec<SubStep>,
    err: f64,
    exponent: f64,
    /// `|sqrt s|` at the step midpoint.
    mu: f64,
    modified: bool,
}

/// Largest real growth exponent allowed in one step.
const MAX_GROWTH: f64 = 40.0;
/// Steps with `|sqrt s| h` at least this use the modified scheme.
const MODIFIED_FROM: f64 = 0.5;
/// Accepted steps to wait after a failed switch to the modified scheme.
const LIFT_BACKOFF: u32 = 16;

fn attempt_step<S>(s_at: &S, x: f64, hs: f64) -> Result<Attempt, OracleError>
where
    S: Fn(f64) -> Result<Complex64, OracleError>,
{
    let step = hs.abs();
    let dir = hs.signum();
    let s_mid = s_at(x + 0.5 * hs)?;
    let mu = principal_root(s_mid, 2);
    let reject = Attempt {
        subs: Vec::new(),
        err: f64::INFINITY,
        exponent: 0.2,
        mu: mu.norm(),
        modified: mu.norm() * step >= MODIFIED_FROM,
    };
    if mu.re.abs() * step > MAX_GROWTH {
        return Ok(reject);
    }
    let w = mu.norm().max(1.0);
    if mu.norm() * step < MODIFIED_FROM {
        let s = [s_at(x + NODES[0] * hs)?, s_mid, s_at(x + NODES[2] * hs)?];
        let (o6, o4) = magnus_exponents(s, hs);
        let p6 = expm_traceless(o6);
        let p4 = expm_traceless(o4);
        if !(p6.is_finite() && p4.is_finite()) {
            return Ok(reject);
        }
        return Ok(Attempt {
            err: (p6 - p4).weighted_norm(w) / p6.weighted_norm(w),
            subs: vec![SubStep { p: p6, gen: o6.scale(1.0 / step), len: step }],
            exponent: 0.2,
            mu: mu.norm(),
            modified: false,
        });
    }
    let nodes = |x0: f64, h: f64| -> Result<[Complex64; 3], OracleError> {
        Ok([s_at(x0 + NODES[0] * h)?, s_at(x0 + NODES[1] * h)?, s_at(x0 + NODES[2] * h)?])
    };
    let full_s = [s_at(x + NODES[0] * hs)?, s_mid, s_at(x + NODES[2] * hs)?];
    // keep s nearly constant over a step so the frozen moments stay accurate
    if (full_s[2] - full_s[0]).norm() > 0.05 * s_mid.norm() {
        return Ok(reject);
    }
    let full = modified_propagator(full_s, hs);
    let half = 0.5 * hs;
    let sa = nodes(x, half)?;
    let sb = nodes(x + half, half)?;
    let pa = modified_propagator(sa, half);
    let pb = modified_propagator(sb, half);
    let both = pb * pa;
    if !(full.is_finite() && both.is_finite()) {
        return Ok(reject);
    }
    let frozen = |s: Complex64| M2::companion(s).scale(dir);
    Ok(Attempt {
        err: (full - both).weighted_norm(w) / both.weighted_norm(w),
        subs: vec![
            SubStep { p: pa, gen: frozen(sa[1]), len: 0.5 * step },
            SubStep { p: pb, gen: frozen(sb[1]), len: 0.5 * step },
        ],
        exponent: 0.2,
        mu: mu.norm(),
        modified: true,
    })
}

struct Column {
    y: [Complex64; 2],
    log_offset: f64,
    l2: LogAcc,
    dl2: LogAcc,
    weighted: LogAcc,
    log_max_panel: f64,
    min_rel_panel: f64,
    out: Trajectory,
}

fn normalize(y: [Complex64; 2]) -> ([Complex64; 2], f64) {
    let n = (y[0].norm_sqr() + y[1].norm_sqr()).sqrt();
    ([y[0] / n, y[1] / n], n.ln())
}

/// Integrate several initial conditions at `x0` to `x1` (either direction)
/// on one shared step sequence. Error control acts on the propagator, so the
/// steps do not depend on the initial conditions.
pub fn integrate_columns(
    field: &SField,
    x0: f64,
    x1: f64,
    ics: &[[Complex64; 2]],
    weight: Option<&dyn Fn(f64) -> f64>,
    cfg: &IvpConfig,
) -> Result<Vec<Trajectory>, OracleError> {
    if !(cfg.tol >= 1e-12 && cfg.tol <= 1e-4) {
        return Err(OracleError::Tolerance(cfg.tol));
    }
    if !(x0.is_finite() && x1.is_finite()) || x0 == x1 || x0.min(x1) < 0.0 {
        return Err(OracleError::Interval { x0, x1 });
    }
    let n_cp = cfg.checkpoints.max(MIN_CHECKPOINTS);
    let grid = checkpoint_grid(x0, x1, n_cp);
    let dir = (x1 - x0).signum();
    let mut cols: Vec<Column> = ics
        .iter()
        .map(|ic| {
            let (y, lo) = normalize(*ic);
            let mut out = Trajectory {
                grid: Vec::with_capacity(n_cp),
                v: Vec::with_capacity(n_cp),
                dv: Vec::with_capacity(n_cp),
                log_offset: Vec::with_capacity(n_cp),
                log_l2: Vec::with_capacity(n_cp),
                log_dl2: Vec::with_capacity(n_cp),
                weighted: weight.map(|_| Weighted {
                    log_abs: Vec::with_capacity(n_cp),
                    sign: Vec::with_capacity(n_cp),
                    log_max_panel: f64::NEG_INFINITY,
                    min_rel_panel: 0.0,
                }),
                ic: *ic,
                stats: StepStats::default(),
                tol: cfg.tol,
            };
            out.grid.push(x0);
            out.v.push(y[0]);
            out.dv.push(y[1]);
            out.log_offset.push(lo);
            out.log_l2.push(f64::NEG_INFINITY);
            out.log_dl2.push(f64::NEG_INFINITY);
            if let Some(w) = out.weighted.as_mut() {
                w.log_abs.push(f64::NEG_INFINITY);
                w.sign.push(0.0);
            }
            Column {
                y,
                log_offset: lo,
                l2: LogAcc::zero(),
                dl2: LogAcc::zero(),
                weighted: LogAcc::zero(),
                log_max_panel: f64::NEG_INFINITY,
                min_rel_panel: 0.0,
                out,
            }
        })
        .collect();

    let s_at = |x: f64| field.s_raw(x).map_err(OracleError::from);
    let s0 = s_at(x0)?;
    let span = (x1 - x0).abs();
    let mut h = (0.01 * span).min(0.1 / s0.norm().sqrt().max(1.0));
    let mut x = x0;
    let mut stats = StepStats::default();
    let mut backoff = 0u32;
    let mut lifted = false;
    for &target in &grid[1..] {
        while (target - x) * dir > 0.0 {
            let remaining = (target - x).abs();
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step < 1e-14 * x.abs().max(1.0) {
                return Err(OracleError::StepSizeUnderflow { x });
            }
            if stats.accepted + stats.rejected >= cfg.max_steps {
                return Err(OracleError::StepBudget { x });
            }
            let attempt = attempt_step(&s_at, x, dir * step)?;
            let err = attempt.err;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * (cfg.tol / err).powf(attempt.exponent)).clamp(0.2, 5.0)
            };
            if !(err <= cfg.tol) {
                stats.rejected += 1;
                if lifted {
                    backoff = LIFT_BACKOFF;
                }
                lifted = false;
                h = step * factor.min(0.9);
                continue;
            }
            lifted = false;
            stats.accepted += 1;
            stats.max_local_error = stats.max_local_error.max(err);
            let mut xs = x;
            for sub in &attempt.subs {
                let mid_weight = weight.map(|f| f(xs + 0.5 * dir * sub.len));
                for col in &mut cols {
                    let y1 = sub.p.apply(col.y);
                    // frozen-generator moments from both ends of the sub-step
                    let fwd = step_moments(sub.gen, col.y, sub.len);
                    let bwd = step_moments(sub.gen.scale(-1.0), y1, sub.len);
                    let (m_v, m_dv) = (0.5 * (fwd.0 + bwd.0), 0.5 * (fwd.1 + bwd.1));
                    let lw = 2.0 * col.log_offset;
                    col.l2.add(lw, m_v);
                    col.dl2.add(lw, m_dv);
                    if let Some(gw) = mid_weight {
                        let panel = gw * m_v;
                        col.weighted.add(lw, panel);
                        if panel != 0.0 {
                            col.log_max_panel = col.log_max_panel.max(panel.abs().ln() + lw);
                            if m_v > 0.0 {
                                col.min_rel_panel = col.min_rel_panel.min(panel / m_v);
                            }
                        }
                    }
                    let (y, dl) = normalize(y1);
                    if !dl.is_finite() || !(y[0].re.is_finite() && y[0].im.is_finite()) {
                        return Err(OracleError::NonFiniteState { x: xs });
                    }
                    col.y = y;
                    col.log_offset += dl;
                }
                xs += dir * sub.len;
            }
            x = if last { target } else { x + dir * step };
            if !last {
                h = step * factor;
                // classic steps stall below one radian; probe the modified scheme
                if !attempt.modified && attempt.mu * h < MODIFIED_FROM && attempt.mu > 0.0 {
                    if backoff == 0 {
                        h = h.max(MODIFIED_FROM / attempt.mu);
                        lifted = true;
                    } else {
                        backoff -= 1;
                    }
                }
            }
        }
        for col in &mut cols {
            let out = &mut col.out;
            out.grid.push(target);
            out.v.push(col.y[0]);
            out.dv.push(col.y[1]);
            out.log_offset.push(col.log_offset);
            out.log_l2.push(col.l2.ln_abs());
            out.log_dl2.push(col.dl2.ln_abs());
            if let Some(w) = out.weighted.as_mut() {
                w.log_abs.push(col.weighted.ln_abs());
                w.sign.push(col.weighted.signum());
            }
        }
    }
    Ok(cols
        .into_iter()
        .map(|mut col| {
            col.out.stats = stats;
            if let Some(w) = col.out.weighted.as_mut() {
                w.log_max_panel = col.log_max_panel;
                w.min_rel_panel = col.min_rel_panel;
            }
            col.out
        })
        .collect())
}

/// Integrate one initial condition `(v(a), v'(a))` from `a` to `x_max`.
pub fn integrate_ivp(field: &SField, a: f64, x_max: f64, ic: [Complex64; 2], cfg: &IvpConfig) -> Result<Trajectory, OracleError> {
    if x_max <= a {
        return Err(OracleError::Interval { x0: a, x1: x_max });
    }
    Ok(integrate_columns(field, a, x_max, &[ic], None, cfg)?.remove(0))
}
