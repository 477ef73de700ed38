//! Direct numerical integration used to check the asymptotic verdicts.

pub mod analysis;
pub mod filon;
pub mod ivp;
pub mod magnus;

pub use analysis::{
    empirical_class, energy_form, l2_saturation, truncated_l2, truncated_l2_log, wronskian, EmpiricalClass,
    EmpiricalReport, EnergyBreakdown, Saturation, WronskianReport, SATURATION,
};
pub use ivp::{integrate_columns, integrate_ivp, IvpConfig, StepStats, Trajectory};

use crate::expr::EvalError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("step size underflow at x = {x}")]
    StepSizeUnderflow { x: f64 },
    #[error("state is not finite at x = {x}")]
    NonFiniteState { x: f64 },
    #[error("step budget exhausted at x = {x}")]
    StepBudget { x: f64 },
    #[error("ODE tolerance must lie in [1e-12, 1e-4], got {0}")]
    Tolerance(f64),
    #[error("bad integration interval [{x0}, {x1}]")]
    Interval { x0: f64, x1: f64 },
    #[error("trajectories are not sampled on the same checkpoints")]
    GridMismatch,
    #[error(transparent)]
    Eval(#[from] EvalError),
}
