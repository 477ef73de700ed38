//! JSON shapes written by the command-line tool.

use crate::asymptotics::AssumptionReport;
use crate::classify::{ClassificationReport, ComparisonReport, CriterionId, CriterionResult, FamilyRule, LimitCircleOutcome, LimitCircleRoute, Verdict};
use crate::geometry::{AdmissiblePair, HullSample};
use crate::oracle::{EmpiricalClass, EmpiricalReport, Saturation};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Admissible {
    pub theta: f64,
    #[serde(rename = "K")]
    pub k: Complex64,
    pub margin: f64,
    pub lambda_gap: f64,
    pub eps_geom: f64,
}

impl From<&AdmissiblePair> for Admissible {
    fn from(p: &AdmissiblePair) -> Self {
        Admissible {
            theta: p.theta,
            k: p.k,
            margin: p.margin,
            lambda_gap: p.lambda_gap,
            eps_geom: p.eps_geom,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ClassifyOutput<'a> {
    pub potential: &'a str,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<&'static str>,
    pub fired: Vec<CriterionId>,
    pub criteria: &'a [CriterionResult],
    pub admissible: Admissible,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub envelope: Option<f64>,
    pub assumptions: &'a AssumptionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit_circle: Option<&'a LimitCircleOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family_rule: Option<&'a FamilyRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<&'a ComparisonReport>,
    pub horizon: f64,
    pub notes: &'a [String],
}

impl<'a> ClassifyOutput<'a> {
    pub fn new(potential: &'a str, r: &'a ClassificationReport) -> Self {
        let route = match r.limit_circle.as_ref().and_then(|l| l.route) {
            Some(LimitCircleRoute::Numerical) if r.verdict == Verdict::LimitCircle => Some("numerical-energy-form"),
            Some(LimitCircleRoute::Theorem) if r.verdict == Verdict::LimitCircle => Some("theorem"),
            _ => None,
        };
        ClassifyOutput {
            potential,
            verdict: r.verdict,
            route,
            fired: r.fired_criteria.iter().map(|c| c.id).collect(),
            criteria: &r.criteria,
            admissible: (&r.admissible_pair).into(),
            m: r.error_budget.as_ref().map(|b| b.m),
            envelope: r.error_budget.as_ref().map(|b| b.envelope),
            assumptions: &r.assumptions,
            limit_circle: r.limit_circle.as_ref(),
            family_rule: r.family_rule.as_ref(),
            comparison: r.comparison.as_ref(),
            horizon: r.horizon,
            notes: &r.notes,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OracleOutput<'a> {
    pub potential: &'a str,
    pub class: EmpiricalClass,
    pub x_max: f64,
    pub tol: f64,
    pub basis_l2: [Saturation; 2],
    pub recessive_l2: Saturation,
    pub dominant_l2: Saturation,
    pub basis_energy_stabilized: [[bool; 3]; 2],
    pub basis_energy_rel_increments: [[f64; 3]; 2],
    pub wronskian_drift: f64,
    pub dominance_holds: bool,
    pub admissible: Admissible,
    pub steps: [u64; 2],
}

impl<'a> OracleOutput<'a> {
    pub fn new(potential: &'a str, r: &EmpiricalReport, pair: &AdmissiblePair) -> Self {
        let e = &r.basis_energy;
        OracleOutput {
            potential,
            class: r.class,
            x_max: r.x_max,
            tol: r.tol,
            basis_l2: r.basis_l2,
            recessive_l2: r.recessive_l2,
            dominant_l2: r.dominant_l2,
            basis_energy_stabilized: [e[0].stabilized, e[1].stabilized],
            basis_energy_rel_increments: [e[0].rel_increments, e[1].rel_increments],
            wronskian_drift: r.wronskian_drift,
            dominance_holds: r.dominance_holds,
            admissible: pair.into(),
            steps: [r.basis[0].stats.accepted, r.recessive.stats.accepted],
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GeometryOutput<'a> {
    pub potential: &'a str,
    pub theta: f64,
    #[serde(rename = "K")]
    pub k: Complex64,
    pub margin: f64,
    pub lambda_gap: f64,
    pub eps_geom: f64,
    pub diameter: f64,
    pub vertices: usize,
    pub x_max: f64,
}

impl<'a> GeometryOutput<'a> {
    pub fn new(potential: &'a str, pair: &AdmissiblePair, hull: &HullSample) -> Self {
        GeometryOutput {
            potential,
            theta: pair.theta,
            k: pair.k,
            margin: pair.margin,
            lambda_gap: pair.lambda_gap,
            eps_geom: pair.eps_geom,
            diameter: hull.diameter,
            vertices: hull.vertices.len(),
            x_max: hull.grid.x_max,
        }
    }
}
