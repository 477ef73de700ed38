//! Branch conventions, quadrature and finite-horizon tail estimates.

pub mod quad;
pub mod roots;
pub mod tail;

pub use quad::{improper_integral, integrate, QuadConfig, Quadrature, Schedule, Sign, TailKind, TailRule, TailVerdict};
pub use roots::{distance_to_branch_cut, principal_arg, principal_log, principal_pow, principal_root};
pub use tail::{geometric_grid, is_l1u, tail_estimate, L1uReport, L1uVerdict, TailEstimate};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("integrand is not finite at x = {x}")]
    NonFiniteSample { x: f64 },
    #[error("quadrature on [{a}, {b}] stopped at error {err_est:e}, wanted {target:e}")]
    ToleranceNotMet { a: f64, b: f64, err_est: f64, target: f64 },
}
