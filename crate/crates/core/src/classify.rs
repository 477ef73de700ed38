//! Limit point / limit circle classification from finite-horizon evidence.
//!
//! The pipeline checks admissibility of `lambda`, the hypotheses on `s`,
//! then the five limit-point criteria, the limit-circle test with its
//! oracle fallback, and finally the rule for potentials `-f + i`.

use crate::asymptotics::{build_s, error_budget, validate_assumptions, AssumptionReport, AsymptoticsError, ErrorBudget, SField, Violation, SCAN_POINTS};
use crate::expr::{EvalError, ExprNode};
use crate::geometry::{admissible_pair, default_r_max, sample_q, AdmissiblePair, GeometryError, NotAdmissible, DEFAULT_GRID_POINTS};
use crate::numerics::{
    geometric_grid, improper_integral, integrate, is_l1u, principal_arg, principal_root, tail_estimate, L1uReport,
    L1uVerdict, NumericsError, QuadConfig, Schedule, Sign, TailEstimate, TailRule, TailVerdict,
};
use crate::oracle::{empirical_class, EmpiricalClass, IvpConfig, OracleError};
use crate::problem::RayProblem;
use num_complex::Complex64;
use serde::Serialize;
use std::cell::RefCell;
use std::f64::consts::PI;

/// Knobs for the criteria. `horizon` defaults to the last point of the
/// improper-integral schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionConfig {
    pub rho: f64,
    pub n_max: u32,
    pub eps0: f64,
    pub psi: Option<ExprNode>,
    pub horizon: Option<f64>,
    pub liminf_pos_tol: f64,
    /// Relative change allowed between the last two windows of a trend check.
    pub trend_slack: f64,
    pub tail_samples: usize,
    pub window_fraction: f64,
    pub use_oracle: bool,
    pub oracle_x_max: f64,
    pub oracle_tol: f64,
    pub quad_tol: f64,
    /// `x` samples of the hull of `q + r p`.
    pub hull_points: usize,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        CriterionConfig {
            rho: 1.5,
            n_max: 4,
            eps0: 0.05,
            psi: None,
            horizon: None,
            liminf_pos_tol: 1e-6,
            trend_slack: 0.05,
            tail_samples: 2000,
            window_fraction: 0.5,
            use_oracle: true,
            oracle_x_max: 4096.0,
            oracle_tol: 1e-10,
            quad_tol: 1e-10,
            hull_points: DEFAULT_GRID_POINTS,
        }
    }
}

impl CriterionConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: &str| Err(ClassifyError::Config(m.to_string()));
        if !(self.rho > 1.0) {
            return bad("rho must exceed 1");
        }
        if !(self.eps0 > 0.0 && self.eps0 < PI) {
            return bad("eps0 must lie in (0, pi)");
        }
        if self.n_max == 0 {
            return bad("n_max must be positive");
        }
        if !(self.liminf_pos_tol > 0.0) || !(self.trend_slack >= 0.0) {
            return bad("liminf_pos_tol must be positive and trend_slack nonnegative");
        }
        if !(self.window_fraction > 0.0 && self.window_fraction < 1.0) {
            return bad("window_fraction must lie in (0, 1)");
        }
        if !(self.oracle_tol >= 1e-12 && self.oracle_tol <= 1e-4) {
            return bad("oracle_tol must lie in [1e-12, 1e-4]");
        }
        if !(self.quad_tol > 0.0 && self.quad_tol < 1e-2) {
            return bad("quad_tol must lie in (0, 1e-2)");
        }
        if self.hull_points < crate::geometry::MIN_GRID_POINTS {
            return bad("hull_points below the minimum grid size");
        }
        if let Some(h) = self.horizon {
            if !h.is_finite() {
                return bad("horizon must be finite");
            }
        }
        Ok(())
    }

    fn horizon_for(&self, a: f64) -> Result<f64, ClassifyError> {
        let h = self.horizon.unwrap_or_else(|| Schedule::default_for(a).last());
        if h < a + 10.0 {
            return Err(ClassifyError::Config(format!("horizon {h} must exceed a + 10")));
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("lambda is not admissible: {0}")]
    NotAdmissible(NotAdmissible),
    #[error("assumption violated at x = {x}: {reason}")]
    AssumptionViolated { x: f64, reason: Violation },
    #[error("psi is negative at x = {x}")]
    NegativePsiSample { x: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Asymptotics(AsymptoticsError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl From<AsymptoticsError> for ClassifyError {
    fn from(e: AsymptoticsError) -> Self {
        match e {
            AsymptoticsError::AssumptionViolated { x, reason } => ClassifyError::AssumptionViolated { x, reason },
            AsymptoticsError::Numerics(n) => ClassifyError::Numerics(n),
            AsymptoticsError::Eval(v) => ClassifyError::Eval(v),
            other => ClassifyError::Asymptotics(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Fired,
    NotFired,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionId {
    Alpha,
    Beta,
    Gamma,
    Delta,
    Epsilon,
}

impl CriterionId {
    pub const ALL: [CriterionId; 5] = [Self::Alpha, Self::Beta, Self::Gamma, Self::Delta, Self::Epsilon];

    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::Beta => "beta",
            Self::Gamma => "gamma",
            Self::Delta => "delta",
            Self::Epsilon => "epsilon",
        }
    }
}

/// One criterion's outcome and the evidence behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: CriterionId,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integral: Option<TailVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailEstimate>,
    /// Exponent found by the delta search.
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    /// Grid maximum, used by beta and epsilon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_max: Option<f64>,
}

impl CriterionResult {
    fn new(id: CriterionId, outcome: Outcome) -> Self {
        CriterionResult {
            id,
            outcome,
            integral: None,
            tail: None,
            n: None,
            grid_max: None,
        }
    }
}

/// Shared state for one classification: the problem, its `s` and the
/// numerical settings.
pub struct Context<'a> {
    problem: &'a RayProblem,
    field: SField,
    horizon: f64,
    quad: QuadConfig,
    schedule: Schedule,
    rule: TailRule,
    config: &'a CriterionConfig,
    re_sqrt: RefCell<Option<RunningIntegral>>,
}

/// First evaluation failure inside a sampling closure.
struct Failure(RefCell<Option<ClassifyError>>);

impl Failure {
    fn new() -> Self {
        Failure(RefCell::new(None))
    }

    fn catch<T: Into<ClassifyError>>(&self, r: Result<f64, T>) -> f64 {
        r.unwrap_or_else(|e| {
            self.0.borrow_mut().get_or_insert(e.into());
            f64::NAN
        })
    }

    fn finish<T, E: Into<ClassifyError>>(self, r: Result<T, E>) -> Result<T, ClassifyError> {
        if let Some(e) = self.0.into_inner() {
            return Err(e);
        }
        r.map_err(Into::into)
    }
}

/// `int_a^x f` for a real integrand, prefix sums on a geometric grid.
struct RunningIntegral {
    nodes: Vec<f64>,
    prefix: Vec<f64>,
}

impl<'a> Context<'a> {
    pub fn new(problem: &'a RayProblem, config: &'a CriterionConfig) -> Result<Self, ClassifyError> {
        config.validate()?;
        let a = problem.a();
        Ok(Context {
            problem,
            field: build_s(problem),
            horizon: config.horizon_for(a)?,
            quad: QuadConfig::with_tol(config.quad_tol),
            schedule: Schedule::default_for(a),
            rule: TailRule::default(),
            config,
            re_sqrt: RefCell::new(None),
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn q_minus_lambda(&self, x: f64) -> Result<Complex64, EvalError> {
        Ok(self.problem.q_at(x)? - self.problem.lambda())
    }

    /// `e^{i phi} sqrt(q - lambda)` with the principal root, as written in
    /// the limit-point criteria.
    fn literal_sqrt(&self, x: f64) -> Result<Complex64, EvalError> {
        Ok(Complex64::from_polar(1.0, self.problem.phi()) * principal_root(self.q_minus_lambda(x)?, 2))
    }

    fn tail<G: FnMut(f64) -> f64>(&self, g: G) -> Result<TailEstimate, NumericsError> {
        tail_estimate(g, self.horizon, self.config.window_fraction, self.config.tail_samples)
    }

    fn improper<F: FnMut(f64) -> f64>(&self, mut f: F, sign: Sign) -> Result<TailVerdict, NumericsError> {
        improper_integral(
            |x| Complex64::new(f(x), 0.0),
            self.problem.a(),
            sign,
            &self.quad,
            &self.schedule,
            &self.rule,
        )
    }

    fn scan_grid(&self) -> Vec<f64> {
        geometric_grid(self.problem.a(), self.horizon, SCAN_POINTS)
    }

    /// `NonNegative` when `Re e^{i phi} sqrt(q - lambda)` has no negative sample.
    fn literal_re_sign(&self) -> Result<Sign, ClassifyError> {
        for x in self.scan_grid() {
            if self.literal_sqrt(x)?.re < 0.0 {
                return Ok(Sign::Signed);
            }
        }
        Ok(Sign::NonNegative)
    }

    fn re_sqrt_s_integral(&self, x: f64) -> Result<f64, ClassifyError> {
        if self.re_sqrt.borrow().is_none() {
            let a = self.problem.a();
            let nodes = geometric_grid(a, self.horizon, 256);
            let mut prefix = vec![0.0];
            for w in nodes.windows(2) {
                let v = self.integrate_re_sqrt(w[0], w[1])?;
                prefix.push(prefix[prefix.len() - 1] + v);
            }
            *self.re_sqrt.borrow_mut() = Some(RunningIntegral { nodes, prefix });
        }
        let (base, from) = {
            let table = self.re_sqrt.borrow();
            let t = table.as_ref().expect("table built above");
            let k = t.nodes.partition_point(|&n| n <= x).saturating_sub(1);
            (t.prefix[k], t.nodes[k])
        };
        if x == from {
            return Ok(base);
        }
        Ok(base + self.integrate_re_sqrt(from, x)?)
    }

    // Re sqrt(s) is integrated as a real function on its own; taking the real
    // part of a complex quadrature loses it when Im sqrt(s) dominates.
    fn integrate_re_sqrt(&self, lo: f64, hi: f64) -> Result<f64, ClassifyError> {
        let fail = Failure::new();
        let r = integrate(
            |t| Complex64::new(fail.catch(self.field.sqrt_s(t).map(|v| v.re)), 0.0),
            lo,
            hi,
            &self.quad,
        );
        Ok(fail.finish(r)?.value.re)
    }

    /// `ln( w(x) e^{2 int_a^x Re sqrt(s)} / |s|^{1/2} )` for a log-weight `ln w`.
    fn log_growth_ratio(&self, x: f64, log_w: f64) -> Result<f64, ClassifyError> {
        let s = self.field.s(x)?;
        Ok(log_w + 2.0 * self.re_sqrt_s_integral(x)? - 0.5 * s.norm().ln())
    }

    fn bounded_trend(&self, t: &TailEstimate) -> bool {
        t.limsup_est.is_finite() && t.limsup_est <= t.prev_limsup + (1.0 + self.config.trend_slack).ln()
    }
}

/// `|q - lambda|^{-1/2}` not integrable.
pub fn criterion_alpha(ctx: &Context) -> Result<CriterionResult, ClassifyError> {
    let fail = Failure::new();
    let iv = ctx.improper(|x| fail.catch(ctx.q_minus_lambda(x).map(|v| v.norm().powf(-0.5))), Sign::NonNegative);
    let iv = fail.finish(iv)?;
    let outcome = if iv.diverges() {
        Outcome::Fired
    } else if iv.converges() {
        Outcome::NotFired
    } else {
        Outcome::Undetermined
    };
    Ok(CriterionResult {
        integral: Some(iv),
        ..CriterionResult::new(CriterionId::Alpha, outcome)
    })
}

/// `q` bounded: the window maximum of `|q|` stops growing.
pub fn criterion_beta(ctx: &Context) -> Result<CriterionResult, ClassifyError> {
    let fail = Failure::new();
    let t = ctx.tail(|x| fail.catch(ctx.problem.q_at(x).map(|v| v.norm())));
    let t = fail.finish(t)?;
    let mut grid_max: f64 = 0.0;
    for x in ctx.scan_grid() {
        grid_max = grid_max.max(ctx.problem.q_at(x)?.norm());
    }
    let outcome = if t.limsup_non_increasing(ctx.config.trend_slack) && grid_max.is_finite() {
        Outcome::Fired
    } else {
        Outcome::NotFired
    };
    Ok(CriterionResult {
        tail: Some(t),
        grid_max: Some(grid_max),
        ..CriterionResult::new(CriterionId::Beta, outcome)
    })
}

fn re_literal_integral(ctx: &Context) -> Result<TailVerdict, ClassifyError> {
    let sign = ctx.literal_re_sign()?;
    let fail = Failure::new();
    let iv = ctx.improper(|x| fail.catch(ctx.literal_sqrt(x).map(|v| v.re)), sign);
    fail.finish(iv)
}

fn positive_liminf(ctx: &Context, t: &TailEstimate) -> bool {
    t.liminf_est > ctx.config.liminf_pos_tol && t.liminf_non_decreasing(ctx.config.trend_slack)
}

/// `int Re e^{i phi} sqrt(q - lambda)` finite with the normalized real part
/// bounded away from zero.
pub fn criterion_gamma(ctx: &Context) -> Result<CriterionResult, ClassifyError> {
    let iv = re_literal_integral(ctx)?;
    let fail = Failure::new();
    let t = ctx.tail(|x| fail.catch(ctx.literal_sqrt(x).map(|v| v.re / v.norm())));
    let t = fail.finish(t)?;
    let outcome = if iv.converges() && positive_liminf(ctx, &t) {
        Outcome::Fired
    } else if iv.converges() || iv.diverges() {
        Outcome::NotFired
    } else {
        Outcome::Undetermined
    };
    Ok(CriterionResult {
        integral: Some(iv),
        tail: Some(t),
        ..CriterionResult::new(CriterionId::Gamma, outcome)
    })
}

/// `int Re e^{i phi} sqrt(q - lambda)` infinite and
/// `(Re e^{i phi} sqrt(q - lambda))^N / |sqrt(q - lambda)|` bounded below for
/// some `N <= n_max`.
pub fn criterion_delta(ctx: &Context) -> Result<CriterionResult, ClassifyError> {
    let iv = re_literal_integral(ctx)?;
    let mut result = CriterionResult::new(CriterionId::Delta, Outcome::NotFired);
    if iv.converges() {
        result.integral = Some(iv);
        return Ok(result);
    }
    if !iv.diverges() {
        result.outcome = Outcome::Undetermined;
    }
    for n in 1..=ctx.config.n_max {
        let fail = Failure::new();
        let t = ctx.tail(|x| fail.catch(ctx.literal_sqrt(x).map(|v| v.re.powi(n as i32) / v.norm())));
        let t = fail.finish(t)?;
        let ok = positive_liminf(ctx, &t);
        if ok || n == ctx.config.n_max {
            result.tail = Some(t);
        }
        if ok {
            result.n = Some(n);
            if iv.diverges() {
                result.outcome = Outcome::Fired;
            }
            break;
        }
    }
    result.integral = Some(iv);
    Ok(result)
}

/// `|arg s| <= pi - eps0` on the sampled range, with no upward trend.
pub fn criterion_epsilon(ctx: &Context) -> Result<CriterionResult, ClassifyError> {
    let arg = |x: f64| -> Result<f64, ClassifyError> { Ok(principal_arg(ctx.field.s_raw(x)?).abs()) };
    let mut grid_max: f64 = 0.0;
    for x in ctx.scan_grid() {
        grid_max = grid_max.max(arg(x)?);
    }
    let fail = Failure::new();
    let t = ctx.tail(|x| fail.catch(arg(x)));
    let t = fail.finish(t)?;
    let fired = grid_max.max(t.limsup_est) <= PI - ctx.config.eps0 && t.limsup_non_increasing(ctx.config.trend_slack);
    Ok(CriterionResult {
        tail: Some(t),
        grid_max: Some(grid_max),
        ..CriterionResult::new(CriterionId::Epsilon, if fired { Outcome::Fired } else { Outcome::NotFired })
    })
}

pub fn evaluate_criterion(ctx: &Context, id: CriterionId) -> Result<CriterionResult, ClassifyError> {
    match id {
        CriterionId::Alpha => criterion_alpha(ctx),
        CriterionId::Beta => criterion_beta(ctx),
        CriterionId::Gamma => criterion_gamma(ctx),
        CriterionId::Delta => criterion_delta(ctx),
        CriterionId::Epsilon => criterion_epsilon(ctx),
    }
}

/// What the oracle saw when asked to settle the energy form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEnergy {
    pub class: EmpiricalClass,
    pub x_max: f64,
    pub tol: f64,
    pub l2_rel_increments: [f64; 2],
    /// Per basis column, `[E1, E2, E3]` last-doubling increments.
    pub energy_rel_increments: [[f64; 3]; 2],
    /// Largest `|panel|` of `E1` and `E2` over both columns.
    pub max_panel_e1: f64,
    pub max_panel_e2: f64,
    pub wronskian_drift: f64,
    pub energy_finite: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitCircleRoute {
    Theorem,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCircleOutcome {
    pub outcome: Outcome,
    /// All solutions square integrable.
    pub sub_a: Outcome,
    /// Sub-verdict A plus `q` uniformly locally integrable.
    pub sub_b: Outcome,
    pub rho: f64,
    /// Tail of `ln( x^rho e^{2 int Re sqrt(s)} / |s|^{1/2} )`.
    pub log_ratio_tail: TailEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1u: Option<L1uReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleEnergy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<LimitCircleRoute>,
}

fn oracle_energy(ctx: &Context, pair: &AdmissiblePair) -> Result<OracleEnergy, ClassifyError> {
    let cfg = IvpConfig::with_tol(ctx.config.oracle_tol);
    let x_max = ctx.config.oracle_x_max.max(ctx.problem.a() + 10.0);
    let r = empirical_class(ctx.problem, pair, x_max, &cfg)?;
    let e = &r.basis_energy;
    let max_panel = |f: fn(&crate::oracle::EnergyBreakdown) -> f64| f(&e[0]).max(f(&e[1])).exp();
    Ok(OracleEnergy {
        class: r.class,
        x_max,
        tol: cfg.tol,
        l2_rel_increments: [r.basis_l2[0].rel_increment, r.basis_l2[1].rel_increment],
        energy_rel_increments: [e[0].rel_increments, e[1].rel_increments],
        max_panel_e1: max_panel(|b| b.log_max_panel_e1),
        max_panel_e2: max_panel(|b| b.log_max_panel_e2),
        wronskian_drift: r.wronskian_drift,
        energy_finite: r.class == EmpiricalClass::AllSolutionsL2EnergyFinite,
    })
}

/// The `x^rho` growth test for all solutions in `L^2`, then the energy form
/// either through uniform local integrability of `q` or through the oracle.
pub fn limit_circle_test(ctx: &Context, pair: &AdmissiblePair) -> Result<LimitCircleOutcome, ClassifyError> {
    let rho = ctx.config.rho;
    let fail = Failure::new();
    let t = ctx.tail(|x| fail.catch(ctx.log_growth_ratio(x, rho * x.ln())));
    let t = fail.finish(t)?;
    let sub_a = if ctx.bounded_trend(&t) { Outcome::Fired } else { Outcome::NotFired };
    let mut out = LimitCircleOutcome {
        outcome: Outcome::NotFired,
        sub_a,
        sub_b: Outcome::NotFired,
        rho,
        log_ratio_tail: t,
        l1u: None,
        oracle: None,
        route: None,
    };
    if sub_a != Outcome::Fired {
        return Ok(out);
    }
    let fail = Failure::new();
    let l1u = is_l1u(|x| fail.catch(ctx.problem.q_at(x).map(|v| v.norm())), ctx.problem.a(), ctx.horizon, &ctx.quad);
    let l1u = fail.finish(l1u)?;
    out.sub_b = match l1u.verdict {
        L1uVerdict::Holds => Outcome::Fired,
        L1uVerdict::Fails => Outcome::NotFired,
        L1uVerdict::Undetermined => Outcome::Undetermined,
    };
    out.l1u = Some(l1u);
    if out.sub_b == Outcome::Fired {
        out.outcome = Outcome::Fired;
        out.route = Some(LimitCircleRoute::Theorem);
    } else if ctx.config.use_oracle {
        let o = oracle_energy(ctx, pair)?;
        if o.energy_finite {
            out.outcome = Outcome::Fired;
            out.route = Some(LimitCircleRoute::Numerical);
        }
        out.oracle = Some(o);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    YhatInL2,
    YhatNotInL2,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub result: Comparison,
    pub psi_text: String,
    pub psi_integral: TailVerdict,
    /// Tail of `ln( e^{2 int Re sqrt(s)} / (psi |s|^{1/2}) )`.
    pub log_ratio_tail: TailEstimate,
}

/// Decide whether the dominant WKB solution is square integrable using a
/// weight `psi >= 0`.
pub fn comparison_test(ctx: &Context, psi: &ExprNode) -> Result<ComparisonReport, ClassifyError> {
    let psi_at = |x: f64| -> Result<f64, ClassifyError> { Ok(psi.eval_real(x)?.re) };
    for x in ctx.scan_grid() {
        if psi_at(x)? < 0.0 {
            return Err(ClassifyError::NegativePsiSample { x });
        }
    }
    let fail = Failure::new();
    let iv = ctx.improper(|x| fail.catch(psi_at(x)), Sign::NonNegative);
    let iv = fail.finish(iv)?;
    let fail = Failure::new();
    let t = ctx.tail(|x| {
        let r = psi_at(x).and_then(|p| ctx.log_growth_ratio(x, -p.ln()));
        fail.catch(r)
    });
    let t = fail.finish(t)?;
    let result = if iv.converges() && ctx.bounded_trend(&t) {
        Comparison::YhatInL2
    } else if iv.diverges() && t.liminf_est > ctx.config.liminf_pos_tol.ln() && t.liminf_est >= t.prev_liminf - (1.0 + ctx.config.trend_slack).ln() {
        Comparison::YhatNotInL2
    } else {
        Comparison::Undetermined
    };
    Ok(ComparisonReport {
        result,
        psi_text: psi.to_string(),
        psi_integral: iv,
        log_ratio_tail: t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    LimitPointI,
    /// Limit point II or limit circle, not told apart.
    AllSolutionsL2,
    LimitCircle,
    Inconclusive,
}

/// Result of the rule for `q = -f + i` with `f > 0`, `f -> inf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRule {
    pub f_text: String,
    /// `int f^{-1/2}`.
    pub integral: TailVerdict,
    pub verdict: Verdict,
}

fn is_i(e: &ExprNode) -> bool {
    matches!(e, ExprNode::Const(c) if *c == Complex64::new(0.0, 1.0))
}

/// `f` when `q` is literally `-f + i`, `i - f`, `i + -f` or `-(f - i)`.
pub fn match_minus_f_plus_i(q: &ExprNode) -> Option<&ExprNode> {
    use ExprNode::*;
    match q {
        Add(l, r) => match (l.as_ref(), r.as_ref()) {
            (Neg(f), c) | (c, Neg(f)) if is_i(c) => Some(f),
            _ => None,
        },
        Sub(c, f) if is_i(c) => Some(f),
        Neg(inner) => match inner.as_ref() {
            Sub(f, c) if is_i(c) => Some(f),
            _ => None,
        },
        _ => None,
    }
}

fn family_rule(ctx: &Context) -> Result<Option<FamilyRule>, ClassifyError> {
    let p = ctx.problem;
    if p.phi() != 0.0 || p.lambda() != Complex64::default() {
        return Ok(None);
    }
    let Some(f) = match_minus_f_plus_i(p.q()) else {
        return Ok(None);
    };
    if !f.depends_on_x() {
        return Ok(None);
    }
    for x in ctx.scan_grid() {
        let v = f.eval_real(x)?;
        if !(v.re > 0.0) || v.im.abs() > 1e-12 * v.re {
            return Ok(None);
        }
    }
    let fail = Failure::new();
    let t = ctx.tail(|x| fail.catch(f.eval_real(x).map(|v| v.re)));
    let t = fail.finish(t)?;
    // f -> inf: the window minimum keeps climbing
    if !(t.liminf_est > t.prev_liminf * (1.0 + ctx.config.trend_slack)) {
        return Ok(None);
    }
    let fail = Failure::new();
    let iv = ctx.improper(|x| fail.catch(f.eval_real(x).map(|v| v.re.powf(-0.5))), Sign::NonNegative);
    let iv = fail.finish(iv)?;
    let verdict = if iv.converges() {
        Verdict::LimitPointI
    } else if iv.diverges() {
        Verdict::AllSolutionsL2
    } else {
        Verdict::Inconclusive
    };
    Ok(Some(FamilyRule {
        f_text: f.to_string(),
        integral: iv,
        verdict,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub fired_criteria: Vec<CriterionResult>,
    pub criteria: Vec<CriterionResult>,
    pub admissible_pair: AdmissiblePair,
    pub assumptions: AssumptionReport,
    pub error_budget: Option<ErrorBudget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit_circle: Option<LimitCircleOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family_rule: Option<FamilyRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonReport>,
    pub horizon: f64,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    pub fn fired(&self, id: CriterionId) -> Option<&CriterionResult> {
        self.fired_criteria.iter().find(|c| c.id == id)
    }
}

/// Admissible pair for `problem` from a hull sampled out to `horizon`.
pub fn admissible_pair_for(problem: &RayProblem, horizon: f64, points: usize) -> Result<AdmissiblePair, ClassifyError> {
    let lambda = problem.lambda();
    let hull = sample_q(problem, horizon, points, default_r_max(lambda), 64)?;
    admissible_pair(&hull, lambda).map_err(ClassifyError::NotAdmissible)
}

fn sign_convention_note(ctx: &Context) -> Result<Option<String>, ClassifyError> {
    let mut first = None;
    for x in ctx.scan_grid() {
        let lit = ctx.literal_sqrt(x)?;
        let principal = ctx.field.sqrt_s(x)?;
        if (lit - principal).norm() > 1e-9 * principal.norm() {
            first = Some(x);
            break;
        }
    }
    Ok(first.map(|x| {
        format!("e^(i phi) sqrt(q - lambda) and the principal sqrt(s) differ from x = {x:.6e}; criteria use the former, WKB quantities the latter")
    }))
}

pub fn classify(problem: &RayProblem, config: &CriterionConfig) -> Result<ClassificationReport, ClassifyError> {
    let ctx = Context::new(problem, config)?;
    let a = problem.a();
    let horizon = ctx.horizon;
    let pair = admissible_pair_for(problem, horizon, config.hull_points)?;
    let mut notes = vec![format!("numerical evidence at horizon X = {horizon:.6e}, not a proof")];

    let assumptions = validate_assumptions(&ctx.field, a, horizon)?;
    if let Some(v) = assumptions.violations.first() {
        return Err(ClassifyError::AssumptionViolated { x: v.x, reason: v.reason });
    }
    if let Some(x) = assumptions.first_near_cut {
        notes.push(format!(
            "arg s within 1e-6 of pi at {} grid points from x = {x:.6e}",
            assumptions.near_cut
        ));
    }
    let error_budget = match error_budget(&ctx.field, a, &ctx.schedule) {
        Ok(b) => Some(b),
        Err(AsymptoticsError::BudgetDiverges { .. }) => {
            notes.push("error budget M not finite; the WKB pair carries no error bound".into());
            None
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(n) = sign_convention_note(&ctx)? {
        notes.push(n);
    }

    let criteria = CriterionId::ALL
        .iter()
        .map(|&id| evaluate_criterion(&ctx, id))
        .collect::<Result<Vec<_>, _>>()?;
    let fired_criteria: Vec<CriterionResult> = criteria.iter().filter(|c| c.outcome == Outcome::Fired).cloned().collect();

    let mut limit_circle = None;
    let mut verdict = if fired_criteria.is_empty() {
        let lc = limit_circle_test(&ctx, &pair)?;
        let v = match (lc.sub_a, lc.outcome) {
            (_, Outcome::Fired) => Verdict::LimitCircle,
            (Outcome::Fired, _) => Verdict::AllSolutionsL2,
            _ => Verdict::Inconclusive,
        };
        if v == Verdict::LimitCircle {
            notes.push("the limit-circle theorem needs q uniformly locally integrable together with the growth bound, which rarely hold at once; the energy form was checked directly".into());
        }
        limit_circle = Some(lc);
        v
    } else {
        Verdict::LimitPointI
    };

    let family_rule = family_rule(&ctx)?;
    if let Some(rule) = &family_rule {
        if rule.verdict != Verdict::Inconclusive && rule.verdict != verdict {
            notes.push(format!(
                "q = -f + i with f = {}: the f^(-1/2) rule gives {:?} and overrides {:?} from the general tests",
                rule.f_text, rule.verdict, verdict
            ));
            verdict = rule.verdict;
        }
    }

    let comparison = match &config.psi {
        Some(psi) => Some(comparison_test(&ctx, psi)?),
        None => None,
    };

    Ok(ClassificationReport {
        verdict,
        fired_criteria,
        criteria,
        admissible_pair: pair,
        assumptions,
        error_budget,
        limit_circle,
        family_rule,
        comparison,
        horizon,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn problem(a: f64, phi: f64, lambda: Complex64, q: &str) -> RayProblem {
        RayProblem::parse(a, phi, lambda, q).unwrap()
    }

    fn outcome(p: &RayProblem, id: CriterionId) -> CriterionResult {
        let cfg = CriterionConfig::default();
        let ctx = Context::new(p, &cfg).unwrap();
        evaluate_criterion(&ctx, id).unwrap()
    }

    const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);

    #[test]
    fn alpha_examples() {
        assert_eq!(outcome(&problem(1.0, 0.0, MINUS_I, "i"), CriterionId::Alpha).outcome, Outcome::Fired);
        assert_eq!(outcome(&problem(1.0, 0.0, MINUS_I, "-x^4"), CriterionId::Alpha).outcome, Outcome::NotFired);
        assert_eq!(outcome(&problem(1.0, 0.0, ZERO, "-x + i"), CriterionId::Alpha).outcome, Outcome::Fired);
    }

    #[test]
    fn beta_examples() {
        assert_eq!(outcome(&problem(1.0, 0.0, ZERO, "-(2 + sin(x)) + i"), CriterionId::Beta).outcome, Outcome::Fired);
        assert_eq!(outcome(&problem(1.0, 0.0, MINUS_I, "-x^4"), CriterionId::Beta).outcome, Outcome::NotFired);
        assert_eq!(outcome(&problem(1.0, 0.0, ZERO, "-(i*x)^3"), CriterionId::Beta).outcome, Outcome::NotFired);
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(outcome(&problem(1.0, 0.0, MINUS_I, "-x^4"), CriterionId::Gamma).outcome, Outcome::NotFired);
        assert_eq!(outcome(&problem(1.0, 0.0, MINUS_I, "i"), CriterionId::Gamma).outcome, Outcome::NotFired);
        assert_eq!(outcome(&problem(1.0, 0.0, ZERO, "-x^4 + i"), CriterionId::Gamma).outcome, Outcome::NotFired);
    }

    #[test]
    fn delta_examples() {
        let pt = outcome(&problem(1.0, 0.0, ZERO, "-(i*x)^3"), CriterionId::Delta);
        assert_eq!(pt.outcome, Outcome::Fired);
        assert!(pt.n.unwrap() <= 2);
        let c = outcome(&problem(1.0, 0.0, MINUS_I, "i"), CriterionId::Delta);
        assert_eq!((c.outcome, c.n), (Outcome::Fired, Some(1)));
        assert_eq!(outcome(&problem(1.0, 0.0, MINUS_I, "-x^4"), CriterionId::Delta).outcome, Outcome::NotFired);
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(outcome(&problem(1.0, 0.0, ZERO, "i*x^3"), CriterionId::Epsilon).outcome, Outcome::Fired);
        assert_eq!(outcome(&problem(1.0, 0.0, MINUS_I, "-x^4"), CriterionId::Epsilon).outcome, Outcome::NotFired);
        assert_eq!(outcome(&problem(1.0, 0.0, MINUS_I, "i"), CriterionId::Epsilon).outcome, Outcome::Fired);
    }

    #[test]
    fn epsilon_ignores_positive_scaling() {
        for (q, l) in [("i*x^3", ZERO), ("-x^4", MINUS_I), ("-x^2 + 3*i", ZERO)] {
            let base = outcome(&problem(1.0, 0.0, l, q), CriterionId::Epsilon).outcome;
            let scaled = outcome(&problem(1.0, 0.0, l * 7.5, &format!("7.5*({q})")), CriterionId::Epsilon).outcome;
            assert_eq!(base, scaled, "{q}");
        }
    }

    #[test]
    fn limit_circle_growth_test() {
        let cfg = CriterionConfig {
            use_oracle: false,
            ..CriterionConfig::default()
        };
        let run = |p: &RayProblem| {
            let ctx = Context::new(p, &cfg).unwrap();
            let pair = admissible_pair_for(p, ctx.horizon(), DEFAULT_GRID_POINTS).unwrap();
            limit_circle_test(&ctx, &pair).unwrap()
        };
        let lc = run(&problem(1.0, 0.0, MINUS_I, "-x^4"));
        assert_eq!(lc.sub_a, Outcome::Fired);
        assert_eq!(lc.l1u.unwrap().verdict, L1uVerdict::Fails);
        assert_eq!(lc.sub_b, Outcome::NotFired);
        assert_eq!(run(&problem(1.0, 0.0, MINUS_I, "i")).sub_a, Outcome::NotFired);
        assert_eq!(run(&problem(1.0, 0.0, ZERO, "-(i*x)^3")).sub_a, Outcome::NotFired);
    }

    #[test]
    fn comparison_examples() {
        let cfg = CriterionConfig::default();
        let run = |p: &RayProblem, psi: &str| {
            let ctx = Context::new(p, &cfg).unwrap();
            comparison_test(&ctx, &parse(psi).unwrap()).unwrap().result
        };
        assert_eq!(run(&problem(1.0, 0.0, MINUS_I, "-x^4"), "x^-1.5"), Comparison::YhatInL2);
        assert_eq!(run(&problem(1.0, 0.0, MINUS_I, "i"), "1"), Comparison::YhatNotInL2);
        assert_eq!(run(&problem(1.0, 0.0, MINUS_I, "i"), "x^-2"), Comparison::Undetermined);
        let ctx_p = problem(1.0, 0.0, MINUS_I, "i");
        let ctx = Context::new(&ctx_p, &cfg).unwrap();
        assert!(matches!(
            comparison_test(&ctx, &parse("sin(x)").unwrap()),
            Err(ClassifyError::NegativePsiSample { .. })
        ));
    }

    #[test]
    fn family_shapes_are_recognised() {
        for q in ["-x^4 + i", "i - x^4", "i + -x^4", "-(x^4 - i)"] {
            let e = parse(q).unwrap();
            assert_eq!(match_minus_f_plus_i(&e).map(|f| f.to_string()), Some(parse("x^4").unwrap().to_string()), "{q}");
        }
        assert!(match_minus_f_plus_i(&parse("-x^4 + 2*i").unwrap()).is_none());
        assert!(match_minus_f_plus_i(&parse("x^4 + i").unwrap()).is_none());
    }

    #[test]
    fn pt_cubic_is_limit_point_i() {
        let r = classify(&problem(1.0, 0.0, ZERO, "-(i*x)^3"), &CriterionConfig::default()).unwrap();
        assert_eq!(r.verdict, Verdict::LimitPointI);
        assert!(r.fired(CriterionId::Delta).is_some());
    }

    #[test]
    fn excluded_angle_is_rejected() {
        let phi = PI / 10.0;
        let q = format!("-(i*x)^3*exp(3*i*{phi})");
        let err = classify(&problem(1.0, phi, ZERO, &q), &CriterionConfig::default()).unwrap_err();
        assert!(matches!(err, ClassifyError::NotAdmissible(_)), "{err:?}");
    }

    #[test]
    fn bad_config_is_rejected() {
        let cfg = CriterionConfig {
            rho: 1.0,
            ..CriterionConfig::default()
        };
        assert!(matches!(
            classify(&problem(1.0, 0.0, ZERO, "-(i*x)^3"), &cfg),
            Err(ClassifyError::Config(_))
        ));
    }
}
