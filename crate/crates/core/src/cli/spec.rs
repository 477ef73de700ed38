//! Problem spec files.

use crate::classify::CriterionConfig;
use crate::expr::parse;
use crate::problem::{ProblemError, RayProblem};
use num_complex::Complex64;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub a: f64,
    pub phi: f64,
    pub lambda: [f64; 2],
    pub potential: String,
    #[serde(default)]
    pub config: Option<ConfigSpec>,
}

/// Overrides for [`CriterionConfig`]; absent keys keep the defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    pub rho: Option<f64>,
    #[serde(rename = "N_max")]
    pub n_max: Option<u32>,
    pub eps0: Option<f64>,
    pub psi: Option<String>,
    pub horizon: Option<f64>,
    pub liminf_pos_tol: Option<f64>,
    pub trend_slack: Option<f64>,
    pub tail_samples: Option<usize>,
    pub window_fraction: Option<f64>,
    pub oracle: Option<bool>,
    pub oracle_xmax: Option<f64>,
    pub tol_ode: Option<f64>,
    pub tol_quad: Option<f64>,
    pub hull_points: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed spec {path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{0}")]
    Problem(String),
}

/// Render a problem error, pointing at the offending character of a bad potential.
pub fn describe_problem_error(err: &ProblemError, text: &str) -> String {
    match err {
        ProblemError::Parse(p) => {
            let pad = " ".repeat(text[..p.offset.min(text.len())].chars().count());
            format!("bad potential at offset {}: {p}\n  {text}\n  {pad}^", p.offset)
        }
        other => other.to_string(),
    }
}

impl ProblemSpec {
    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io { path: shown.clone(), source })?;
        serde_json::from_str(&text).map_err(|source| SpecError::Json { path: shown, source })
    }

    pub fn problem(&self) -> Result<RayProblem, SpecError> {
        let lambda = Complex64::new(self.lambda[0], self.lambda[1]);
        RayProblem::parse(self.a, self.phi, lambda, &self.potential)
            .map_err(|e| SpecError::Problem(describe_problem_error(&e, &self.potential)))
    }

    pub fn criterion_config(&self) -> Result<CriterionConfig, SpecError> {
        self.config.clone().unwrap_or_default().apply(CriterionConfig::default())
    }
}

impl ConfigSpec {
    pub fn apply(&self, mut c: CriterionConfig) -> Result<CriterionConfig, SpecError> {
        macro_rules! set {
            ($($src:ident => $dst:ident),*) => {
                $(if let Some(v) = self.$src { c.$dst = v; })*
            };
        }
        set!(rho => rho, n_max => n_max, eps0 => eps0, liminf_pos_tol => liminf_pos_tol,
             trend_slack => trend_slack, tail_samples => tail_samples, window_fraction => window_fraction,
             oracle => use_oracle, oracle_xmax => oracle_x_max, tol_ode => oracle_tol, tol_quad => quad_tol,
             hull_points => hull_points);
        if self.horizon.is_some() {
            c.horizon = self.horizon;
        }
        if let Some(text) = &self.psi {
            let node = parse(text).map_err(|e| {
                SpecError::Problem(describe_problem_error(&ProblemError::Parse(e), text).replacen("potential", "psi", 1))
            })?;
            c.psi = Some(node);
        }
        Ok(c)
    }
}
