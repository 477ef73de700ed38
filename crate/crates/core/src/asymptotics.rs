//! The coefficient field `s = e^{2i phi}(q - lambda)`, its hypothesis checks,
//! the error budget `M` and the leading-order WKB pair.

use crate::expr::{differentiate, EvalError, ExprNode};
use crate::numerics::{
    distance_to_branch_cut, geometric_grid, improper_integral, integrate, principal_root, NumericsError, QuadConfig,
    Schedule, Sign, TailRule, TailVerdict,
};
use crate::problem::RayProblem;
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    SZero,
    ArgPi,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Violation::SZero => "s = 0",
            Violation::ArgPi => "arg s = pi",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AsymptoticsError {
    #[error("assumption violated at x = {x}: {reason}")]
    AssumptionViolated { x: f64, reason: Violation },
    #[error("error budget integral does not converge")]
    BudgetDiverges { verdict: TailVerdict },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `s`, `s'`, `s''` for a ray problem. Immutable once built.
#[derive(Debug, Clone)]
pub struct SField {
    rot: Complex64,
    lambda: Complex64,
    a: f64,
    q: ExprNode,
    dq: ExprNode,
    d2q: ExprNode,
}

pub fn build_s(problem: &RayProblem) -> SField {
    let q = problem.q().clone();
    let dq = differentiate(&q);
    let d2q = differentiate(&dq);
    SField {
        rot: problem.rotation(),
        lambda: problem.lambda(),
        a: problem.a(),
        q,
        dq,
        d2q,
    }
}

fn check(x: f64, s: Complex64) -> Result<Complex64, AsymptoticsError> {
    if s.re == 0.0 && s.im == 0.0 {
        return Err(AsymptoticsError::AssumptionViolated { x, reason: Violation::SZero });
    }
    if s.im == 0.0 && s.re < 0.0 {
        return Err(AsymptoticsError::AssumptionViolated { x, reason: Violation::ArgPi });
    }
    Ok(s)
}

impl SField {
    pub fn a(&self) -> f64 {
        self.a
    }

    /// `s(x)`, failing on `s = 0` or `s` on the negative real axis.
    pub fn s(&self, x: f64) -> Result<Complex64, AsymptoticsError> {
        check(x, self.s_raw(x)?)
    }

    /// `s(x)` without the branch checks.
    pub fn s_raw(&self, x: f64) -> Result<Complex64, EvalError> {
        Ok(self.rot * (self.q.eval_real(x)? - self.lambda))
    }

    pub fn ds(&self, x: f64) -> Result<Complex64, EvalError> {
        Ok(self.rot * self.dq.eval_real(x)?)
    }

    pub fn d2s(&self, x: f64) -> Result<Complex64, EvalError> {
        Ok(self.rot * self.d2q.eval_real(x)?)
    }

    pub fn sqrt_s(&self, x: f64) -> Result<Complex64, AsymptoticsError> {
        Ok(principal_root(self.s(x)?, 2))
    }

    /// `u = s^{-1/4}`.
    pub fn u(&self, x: f64) -> Result<Complex64, AsymptoticsError> {
        Ok(principal_root(self.s(x)?, 4).inv())
    }

    /// `|5 s'^2 / (16 s^{5/2}) - s'' / (4 s^{3/2})|`.
    pub fn budget_integrand(&self, x: f64) -> Result<f64, AsymptoticsError> {
        let s = self.s(x)?;
        let rs = principal_root(s, 2);
        let ds = self.ds(x)?;
        let d2s = self.d2s(x)?;
        let v = 5.0 * ds * ds / (16.0 * s * s * rs) - d2s / (4.0 * s * rs);
        Ok(v.norm())
    }
}

pub const SCAN_POINTS: usize = 1024;
pub const NEAR_CUT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViolationAt {
    pub x: f64,
    pub reason: Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub grid_points: usize,
    pub min_abs_s: f64,
    /// Smallest `pi - |arg s|` seen on the grid.
    pub min_cut_distance: f64,
    pub violations: Vec<ViolationAt>,
    /// Grid points with `arg s` within `1e-6` of `pi` but not on the axis.
    pub near_cut: usize,
    pub first_near_cut: Option<f64>,
    pub budget_finite: Option<bool>,
}

impl AssumptionReport {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Scan a geometric grid on `[a, horizon]` for `s = 0` and `arg s = pi`, then
/// decide whether `M` is finite.
pub fn validate_assumptions(field: &SField, a: f64, horizon: f64) -> Result<AssumptionReport, AsymptoticsError> {
    let mut report = AssumptionReport {
        grid_points: SCAN_POINTS,
        min_abs_s: f64::INFINITY,
        min_cut_distance: f64::INFINITY,
        violations: Vec::new(),
        near_cut: 0,
        first_near_cut: None,
        budget_finite: None,
    };
    for x in geometric_grid(a, horizon, SCAN_POINTS) {
        let s = field.s_raw(x)?;
        report.min_abs_s = report.min_abs_s.min(s.norm());
        let gap = distance_to_branch_cut(s);
        report.min_cut_distance = report.min_cut_distance.min(gap);
        match check(x, s) {
            Err(AsymptoticsError::AssumptionViolated { reason, .. }) => {
                report.violations.push(ViolationAt { x, reason });
                continue;
            }
            Err(e) => return Err(e),
            Ok(_) => {}
        }
        if gap < NEAR_CUT {
            report.near_cut += 1;
            report.first_near_cut.get_or_insert(x);
        }
    }
    if report.clean() {
        report.budget_finite = Some(match error_budget(field, a, &Schedule::default_for(a)) {
            Ok(_) => true,
            Err(AsymptoticsError::BudgetDiverges { .. }) => false,
            Err(e) => return Err(e),
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBudget {
    #[serde(rename = "M")]
    pub m: f64,
    pub envelope: f64,
    /// `(X, M(X))`, the remaining tail beyond each schedule horizon.
    pub tail_profile: Vec<(f64, f64)>,
    pub verdict: TailVerdict,
}

/// `2 e^{2M} - 2`.
pub fn envelope(m: f64) -> f64 {
    2.0 * (2.0 * m).exp_m1()
}

impl ErrorBudget {
    pub fn zero() -> Self {
        ErrorBudget {
            m: 0.0,
            envelope: 0.0,
            tail_profile: Vec::new(),
            verdict: TailVerdict {
                kind: crate::numerics::TailKind::Converges { value: [0.0, 0.0], err: 0.0 },
                evidence: Vec::new(),
            },
        }
    }

    /// Remaining tail `M(X)`; before the first horizon this is `M`.
    pub fn tail_at(&self, x: f64) -> f64 {
        self.tail_profile
            .iter()
            .take_while(|(h, _)| *h <= x)
            .last()
            .map_or(self.m, |(_, t)| *t)
    }
}

/// `M = int_a^inf |5 s'^2/(16 s^{5/2}) - s''/(4 s^{3/2})|`, which must converge.
pub fn error_budget(field: &SField, a: f64, schedule: &Schedule) -> Result<ErrorBudget, AsymptoticsError> {
    let mut failure = None;
    let verdict = improper_integral(
        |x| match field.budget_integrand(x) {
            Ok(v) => Complex64::new(v, 0.0),
            Err(e) => {
                failure.get_or_insert(e);
                Complex64::new(f64::NAN, 0.0)
            }
        },
        a,
        Sign::NonNegative,
        &QuadConfig::default(),
        schedule,
        &TailRule::default(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let verdict = verdict?;
    let Some(value) = verdict.value() else {
        return Err(AsymptoticsError::BudgetDiverges { verdict });
    };
    let m = value.re.max(0.0);
    let mut running = m;
    let tail_profile = verdict
        .evidence
        .iter()
        .map(|(x, partial)| {
            running = running.min((m - partial[0]).max(0.0));
            (*x, running)
        })
        .collect();
    Ok(ErrorBudget {
        m,
        envelope: envelope(m),
        tail_profile,
        verdict,
    })
}

/// Cumulative `int_a^{x_k} sqrt(s)` on a geometric grid.
#[derive(Debug, Clone)]
pub struct PhaseTable {
    nodes: Vec<f64>,
    prefix: Vec<Complex64>,
    quad: QuadConfig,
}

impl PhaseTable {
    pub fn new(field: &SField, horizon: f64, nodes: usize) -> Result<Self, AsymptoticsError> {
        let a = field.a();
        let quad = QuadConfig::default();
        if horizon <= a {
            return Ok(PhaseTable { nodes: vec![a], prefix: vec![Complex64::default()], quad });
        }
        let grid = geometric_grid(a, horizon, nodes.max(2));
        let mut prefix = Vec::with_capacity(grid.len());
        prefix.push(Complex64::default());
        for w in grid.windows(2) {
            let step = integrate_sqrt_s(field, w[0], w[1], &quad)?;
            prefix.push(prefix[prefix.len() - 1] + step);
        }
        Ok(PhaseTable { nodes: grid, prefix, quad })
    }

    /// `int_a^x sqrt(s)`.
    pub fn phase(&self, field: &SField, x: f64) -> Result<Complex64, AsymptoticsError> {
        let k = self.nodes.partition_point(|&n| n <= x).saturating_sub(1);
        let base = self.prefix[k];
        let from = self.nodes[k];
        if x == from {
            return Ok(base);
        }
        Ok(base + integrate_sqrt_s(field, from, x, &self.quad)?)
    }
}

fn integrate_sqrt_s(field: &SField, lo: f64, hi: f64, quad: &QuadConfig) -> Result<Complex64, AsymptoticsError> {
    let mut failure = None;
    let q = integrate(
        |t| match field.sqrt_s(t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                Complex64::new(f64::NAN, 0.0)
            }
        },
        lo,
        hi,
        quad,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(q?.value)
}

/// Leading-order values of the recessive `y` and dominant `yhat` at one `x`.
///
/// `y_lead` and `yhat_lead` may under- or overflow far out; the log-moduli
/// stay finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WkbSnapshot {
    pub x: f64,
    pub s: Complex64,
    pub phase: Complex64,
    pub y_lead: Complex64,
    pub yhat_lead: Complex64,
    pub log_abs_y: f64,
    pub log_abs_yhat: f64,
    pub envelope: f64,
}

/// `y = s^{-1/4} e^{-phase}`, `yhat = s^{-1/4} e^{phase}`.
pub fn wkb_eval(field: &SField, table: &PhaseTable, budget: &ErrorBudget, x: f64) -> Result<WkbSnapshot, AsymptoticsError> {
    assert!(x >= field.a(), "WKB query left of the endpoint");
    let s = field.s(x)?;
    let u = principal_root(s, 4).inv();
    let phase = table.phase(field, x)?;
    let log_u = u.norm().ln();
    Ok(WkbSnapshot {
        x,
        s,
        phase,
        y_lead: u * (-phase).exp(),
        yhat_lead: u * phase.exp(),
        log_abs_y: log_u - phase.re,
        log_abs_yhat: log_u + phase.re,
        envelope: budget.envelope,
    })
}
