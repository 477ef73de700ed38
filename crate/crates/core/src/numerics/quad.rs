//! Adaptive Gauss-Kronrod quadrature and the improper-integral decision rule.

use super::NumericsError;
use num_complex::Complex64;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// Kronrod 15-point abscissae (descending, centre last) and weights; the
// 7-point Gauss rule reuses the odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Relative tolerance; the target is `tol * max(1, |value|)`.
    pub tol: f64,
    /// Panels narrower than this (relative to the interval magnitude) are not split.
    pub abs_floor: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            abs_floor: 1e-14,
            max_panels: 20_000,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Result of a finite-interval quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: Complex64,
    pub err_est: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by position so the heap order is deterministic
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn sample<F: FnMut(f64) -> Complex64>(f: &mut F, x: f64) -> Result<Complex64, NumericsError> {
    let v = f(x);
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(NumericsError::NonFiniteSample { x })
    }
}

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> Result<Panel, NumericsError> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = sample(f, centre)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut fv = [(Complex64::default(), Complex64::default()); 7];
    for (j, slot) in fv.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let lo = sample(f, centre - dx)?;
        let hi = sample(f, centre + dx)?;
        kronrod += (lo + hi) * WGK[j];
        if j % 2 == 1 {
            gauss += (lo + hi) * WG[j / 2];
        }
        *slot = (lo, hi);
    }
    let mean = kronrod * 0.5;
    let mut resasc = WGK[7] * (fc - mean).norm();
    for (j, (lo, hi)) in fv.iter().enumerate() {
        resasc += WGK[j] * ((lo - mean).norm() + (hi - mean).norm());
    }
    let value = kronrod * half;
    resasc *= half.abs();
    let mut err = ((kronrod - gauss) * half).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    Ok(Panel { a, b, value, err })
}

/// Adaptive bisection with a nested Gauss-Kronrod (7, 15) rule per panel.
///
/// The panel with the largest error estimate is split until the summed
/// estimate drops below `tol * max(1, |value|)`. Deterministic for fixed input.
pub fn integrate<F>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<Quadrature, NumericsError>
where
    F: FnMut(f64) -> Complex64,
{
    if a == b {
        return Ok(Quadrature {
            value: Complex64::default(),
            err_est: 0.0,
            panels: 0,
        });
    }
    let first = gk15(&mut f, a, b)?;
    let mut value = first.value;
    let mut err = first.err;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let scale = a.abs().max(b.abs()).max(1.0);
    loop {
        let target = cfg.tol * value.norm().max(1.0);
        if err <= target {
            break;
        }
        if heap.len() >= cfg.max_panels {
            return Err(NumericsError::ToleranceNotMet {
                a,
                b,
                err_est: err,
                target,
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        if (worst.b - worst.a).abs() <= cfg.abs_floor * scale {
            // cannot refine further; keep it and stop if it dominates
            let e = worst.err;
            heap.push(worst);
            if e >= 0.5 * err {
                return Err(NumericsError::ToleranceNotMet {
                    a,
                    b,
                    err_est: err,
                    target,
                });
            }
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&mut f, worst.a, mid)?;
        let right = gk15(&mut f, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
    }
    // re-sum in position order so the result does not depend on heap history
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().fold(Complex64::default(), |acc, p| acc + p.value);
    let err_est = panels.iter().map(|p| p.err).sum();
    Ok(Quadrature {
        value,
        err_est,
        panels: panels.len(),
    })
}

/// Geometric horizon schedule for [`improper_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub x0: f64,
    pub factor: f64,
    pub max_steps: usize,
}

impl Schedule {
    /// `X0 = 4 max(1, a)`, doubling, 12 steps.
    pub fn default_for(a: f64) -> Self {
        Self {
            x0: 4.0 * a.max(1.0),
            factor: 2.0,
            max_steps: 12,
        }
    }

    pub fn horizons(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.max_steps).map(move |k| self.x0 * self.factor.powi(k as i32))
    }

    pub fn last(&self) -> f64 {
        self.x0 * self.factor.powi(self.max_steps as i32)
    }
}

/// Decision thresholds for [`improper_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRule {
    /// Converges requires the final increment below `decision_tol * max(1, |I|)`.
    pub decision_tol: f64,
    /// Diverges requires the last three increments each at least this large.
    pub divergence_floor: f64,
}

impl Default for TailRule {
    fn default() -> Self {
        Self {
            decision_tol: 1e-2,
            divergence_floor: 1e-3,
        }
    }
}

/// Whether an integrand is known to be nonnegative. Only nonnegative
/// integrands can be declared divergent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    NonNegative,
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailKind {
    Converges { value: [f64; 2], err: f64 },
    Diverges { rate_hint: f64 },
    Undetermined,
}

/// Outcome of an improper-integral decision plus the partial integrals it used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailVerdict {
    #[serde(flatten)]
    pub kind: TailKind,
    /// `(X_k, I(X_k))` with `I(X) = int_a^X f`.
    pub evidence: Vec<(f64, [f64; 2])>,
}

impl TailVerdict {
    pub fn converges(&self) -> bool {
        matches!(self.kind, TailKind::Converges { .. })
    }

    pub fn diverges(&self) -> bool {
        matches!(self.kind, TailKind::Diverges { .. })
    }

    pub fn value(&self) -> Option<Complex64> {
        match self.kind {
            TailKind::Converges { value, .. } => Some(Complex64::new(value[0], value[1])),
            _ => None,
        }
    }
}

const TREND_SLACK: f64 = 1e-6;

/// Decide convergence of `int_a^inf f` from partial integrals on a geometric
/// schedule.
///
/// Converges when the last three increments strictly decrease and the last
/// one is below `decision_tol * max(1, |I|)`; the reported value adds the
/// geometric tail implied by the last increment ratio. Diverges (nonnegative
/// integrands only) when the last three increments are each at least
/// `divergence_floor` and non-decreasing.
pub fn improper_integral<F>(
    mut f: F,
    a: f64,
    sign: Sign,
    quad: &QuadConfig,
    schedule: &Schedule,
    rule: &TailRule,
) -> Result<TailVerdict, NumericsError>
where
    F: FnMut(f64) -> Complex64,
{
    let mut evidence = Vec::with_capacity(schedule.max_steps + 1);
    let mut total = Complex64::default();
    let mut quad_err = 0.0;
    let mut left = a;
    for x in schedule.horizons() {
        let q = integrate(&mut f, left, x, quad)?;
        total += q.value;
        quad_err += q.err_est;
        evidence.push((x, total));
        left = x;
    }
    let increments: Vec<Complex64> = evidence.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let kind = decide(&increments, total, quad_err, sign, rule);
    Ok(TailVerdict {
        kind,
        evidence: evidence.into_iter().map(|(x, v)| (x, [v.re, v.im])).collect(),
    })
}

fn decide(increments: &[Complex64], total: Complex64, quad_err: f64, sign: Sign, rule: &TailRule) -> TailKind {
    if increments.len() < 3 {
        return TailKind::Undetermined;
    }
    let last3: Vec<f64> = increments[increments.len() - 3..].iter().map(|d| d.norm()).collect();
    if last3.iter().all(|&d| d == 0.0) {
        return TailKind::Converges {
            value: [total.re, total.im],
            err: quad_err,
        };
    }
    let decreasing = last3[1] < last3[0] && last3[2] < last3[1];
    if decreasing && last3[2] < rule.decision_tol * total.norm().max(1.0) {
        let ratio = if last3[1] > 0.0 { last3[2] / last3[1] } else { 0.0 };
        let last = increments[increments.len() - 1];
        let tail = last * (ratio / (1.0 - ratio));
        let value = total + tail;
        return TailKind::Converges {
            value: [value.re, value.im],
            err: tail.norm() * ratio.max(1e-3) + quad_err,
        };
    }
    if sign == Sign::NonNegative {
        let big = last3.iter().all(|&d| d >= rule.divergence_floor);
        let non_decreasing =
            last3[1] >= last3[0] * (1.0 - TREND_SLACK) && last3[2] >= last3[1] * (1.0 - TREND_SLACK);
        if big && non_decreasing {
            return TailKind::Diverges {
                rate_hint: last3[2] / last3[1].max(f64::MIN_POSITIVE),
            };
        }
    }
    TailKind::Undetermined
}
