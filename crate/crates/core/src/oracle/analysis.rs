//! Post-processing of trajectories: truncated L2 norms, the energy form,
//! Wronskians and the empirical class.

use super::ivp::{integrate_columns, ln_diff, IvpConfig, Trajectory};
use super::OracleError;
use crate::asymptotics::build_s;
use crate::geometry::AdmissiblePair;
use crate::problem::RayProblem;
use num_complex::Complex64;
use serde::Serialize;

/// Relative increment over the last doubling below which an integral counts
/// as saturated.
pub const SATURATION: f64 = 1e-3;

/// Largest `(|v1||v2'| + |v1'||v2|) / |W|` at which the basis Wronskian is
/// still read directly.
pub const BASIS_CONDITION_LIMIT: f64 = 1e6;

/// `(X, int_a^X |v|^2)` at each checkpoint, measured from the left end.
pub fn truncated_l2(traj: &Trajectory) -> Vec<(f64, f64)> {
    truncated_l2_log(traj).into_iter().map(|(x, l)| (x, l.exp())).collect()
}

/// Same as [`truncated_l2`] with logarithmic values, which never overflow.
pub fn truncated_l2_log(traj: &Trajectory) -> Vec<(f64, f64)> {
    left_anchored(traj, &traj.log_l2)
}

fn left_anchored(traj: &Trajectory, acc: &[f64]) -> Vec<(f64, f64)> {
    if traj.forward() {
        traj.grid.iter().copied().zip(acc.iter().copied()).collect()
    } else {
        // backward runs accumulate from the right end
        let total = acc[acc.len() - 1];
        traj.grid
            .iter()
            .zip(acc)
            .rev()
            .map(|(&x, &l)| (x, ln_diff(total, l)))
            .collect()
    }
}

/// Increment of a running integral over the last doubling of the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Saturation {
    pub horizon: f64,
    /// Start of the final window, the last checkpoint at or below `horizon / 2`.
    pub window_start: f64,
    pub log_total: f64,
    pub rel_increment: f64,
    pub saturated: bool,
}

fn saturation_of(traj: &Trajectory, acc: &[f64]) -> Saturation {
    let n = traj.grid.len();
    let (right, left) = if traj.forward() { (traj.grid[n - 1], traj.grid[0]) } else { (traj.grid[0], traj.grid[n - 1]) };
    let half = left + 0.5 * (right - left);
    let (log_total, log_window, start) = if traj.forward() {
        let k = traj.grid.iter().rposition(|&g| g <= half).unwrap_or(0);
        (acc[n - 1], ln_diff(acc[n - 1], acc[k]), traj.grid[k])
    } else {
        let k = traj.grid.iter().position(|&g| g <= half).unwrap_or(n - 1);
        (acc[n - 1], acc[k], traj.grid[k])
    };
    let rel = if log_total == f64::NEG_INFINITY { 0.0 } else { (log_window - log_total).exp() };
    Saturation {
        horizon: right,
        window_start: start,
        log_total,
        rel_increment: rel,
        saturated: rel < SATURATION,
    }
}

/// Last-doubling test for `int |v|^2`.
pub fn l2_saturation(traj: &Trajectory) -> Saturation {
    saturation_of(traj, &traj.log_l2)
}

/// The three running integrals of the energy form, as logarithms of their
/// magnitudes, on the trajectory grid ordered left to right.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    #[serde(skip)]
    pub grid: Vec<f64>,
    /// `Re(e^{i theta} p)`, the constant weight of `|v'|^2`.
    pub e1_coefficient: f64,
    #[serde(skip)]
    pub log_e1: Vec<f64>,
    #[serde(skip)]
    pub log_e2: Vec<f64>,
    #[serde(skip)]
    pub log_e3: Vec<f64>,
    /// Largest `|panel|` of `E1` and `E2`, as logarithms (`-inf` if all zero).
    pub log_max_panel_e1: f64,
    pub log_max_panel_e2: f64,
    /// Most negative `E2` panel relative to the `|v|^2` mass of its step.
    pub e2_min_rel_panel: f64,
    /// Last-doubling increments of each part relative to the total energy.
    pub rel_increments: [f64; 3],
    pub stabilized: [bool; 3],
}

impl EnergyBreakdown {
    pub fn finite(&self) -> bool {
        self.stabilized.iter().all(|&s| s)
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

/// Re-integrate `traj`'s initial condition with the energy weights of the
/// pair `(theta, K)` and report `E1`, `E2`, `E3`.
pub fn energy_form(traj: &Trajectory, pair: &AdmissiblePair, problem: &RayProblem) -> Result<EnergyBreakdown, OracleError> {
    let field = build_s(problem);
    let n = traj.grid.len();
    let (x0, x1) = (traj.grid[0], traj.grid[n - 1]);
    let omega = pair.omega();
    let k = pair.k;
    let weight = |x: f64| match problem.q_at(x) {
        Ok(q) => (omega * (q - k)).re,
        Err(_) => f64::NAN,
    };
    let cfg = IvpConfig {
        tol: traj.tol,
        checkpoints: n,
        ..IvpConfig::default()
    };
    let run = integrate_columns(&field, x0, x1, &[traj.ic], Some(&weight), &cfg)?.remove(0);
    Ok(energy_from_run(&run, (omega * problem.p()).re))
}

pub(crate) fn energy_from_run(run: &Trajectory, e1_coefficient: f64) -> EnergyBreakdown {
    let w = run.weighted.as_ref().expect("run carries energy weights");
    let log_c1 = e1_coefficient.abs().ln();
    let log_e1: Vec<f64> = run.log_dl2.iter().map(|l| l + log_c1).collect();
    let e1 = left_anchored(run, &log_e1);
    let e2 = left_anchored(run, &w.log_abs);
    let e3 = left_anchored(run, &run.log_l2);
    let n = e3.len();
    let grid: Vec<f64> = e3.iter().map(|p| p.0).collect();
    let half = grid[0] + 0.5 * (grid[n - 1] - grid[0]);
    let k = grid.iter().rposition(|&g| g <= half).unwrap_or(0);
    let total = log_add(log_add(e1[n - 1].1, e2[n - 1].1), e3[n - 1].1);
    let rel = |series: &[(f64, f64)]| -> f64 {
        if total == f64::NEG_INFINITY || series[n - 1].1 == f64::NEG_INFINITY {
            return 0.0;
        }
        let inc = if series[k].1 == f64::NEG_INFINITY {
            series[n - 1].1
        } else if series[n - 1].1 >= series[k].1 {
            ln_diff(series[n - 1].1, series[k].1)
        } else {
            ln_diff(series[k].1, series[n - 1].1)
        };
        (inc - total).exp()
    };
    let rel_increments = [rel(&e1), rel(&e2), rel(&e3)];
    let log_max_panel_e1 = if e1_coefficient == 0.0 {
        f64::NEG_INFINITY
    } else {
        // the largest E1 panel is bounded by the whole E1 integral
        log_e1.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    };
    EnergyBreakdown {
        grid,
        e1_coefficient,
        log_e1: e1.iter().map(|p| p.1).collect(),
        log_e2: e2.iter().map(|p| p.1).collect(),
        log_e3: e3.iter().map(|p| p.1).collect(),
        log_max_panel_e1,
        log_max_panel_e2: w.log_max_panel,
        e2_min_rel_panel: w.min_rel_panel,
        rel_increments,
        stabilized: rel_increments.map(|r| r < SATURATION),
    }
}

/// Sampled Wronskian `v1 v2' - v1' v2` of two trajectories on the same checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WronskianReport {
    /// `(x, ln |W|, arg W)` ordered left to right.
    #[serde(skip)]
    pub samples: Vec<(f64, f64, f64)>,
    /// `max |W(x)/W(left end) - 1|`.
    pub drift: f64,
    /// `max |W| / (|v1||v2'| + |v1'||v2|)`, near zero for dependent solutions.
    pub max_normalized: f64,
    /// `max (|v1||v2'| + |v1'||v2|) / |W|`.
    pub condition: f64,
}

fn left_to_right(t: &Trajectory) -> Vec<usize> {
    let n = t.grid.len();
    if t.forward() {
        (0..n).collect()
    } else {
        (0..n).rev().collect()
    }
}

pub fn wronskian(t1: &Trajectory, t2: &Trajectory) -> Result<WronskianReport, OracleError> {
    let i1 = left_to_right(t1);
    let i2 = left_to_right(t2);
    if i1.len() != i2.len() || i1.iter().zip(&i2).any(|(&a, &b)| t1.grid[a] != t2.grid[b]) {
        return Err(OracleError::GridMismatch);
    }
    let mut samples = Vec::with_capacity(i1.len());
    let mut first: Option<(f64, Complex64)> = None;
    let mut drift: f64 = 0.0;
    let mut max_normalized: f64 = 0.0;
    let mut condition: f64 = 0.0;
    for (&a, &b) in i1.iter().zip(&i2) {
        let w = t1.v[a] * t2.dv[b] - t1.dv[a] * t2.v[b];
        let scale = t1.v[a].norm() * t2.dv[b].norm() + t1.dv[a].norm() * t2.v[b].norm();
        let log_off = t1.log_offset[a] + t2.log_offset[b];
        max_normalized = max_normalized.max(w.norm() / scale);
        condition = condition.max(scale / w.norm());
        let log_abs = w.norm().ln() + log_off;
        samples.push((t1.grid[a], log_abs, w.arg()));
        match first {
            None => first = Some((log_off, w)),
            Some((off0, w0)) => {
                let ratio = w / w0 * (log_off - off0).exp();
                drift = drift.max((ratio - 1.0).norm());
            }
        }
    }
    Ok(WronskianReport {
        samples,
        drift,
        max_normalized,
        condition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EmpiricalClass {
    OneSolutionL2,
    AllSolutionsL2EnergyFinite,
    AllSolutionsL2EnergyInfinite,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalReport {
    pub class: EmpiricalClass,
    pub x_max: f64,
    pub tol: f64,
    pub basis_l2: [Saturation; 2],
    pub recessive_l2: Saturation,
    pub dominant_l2: Saturation,
    pub basis_energy: [EnergyBreakdown; 2],
    pub recessive_energy: EnergyBreakdown,
    /// Basis drift, or the recessive/dominant pair's when the basis is too
    /// ill-conditioned to read.
    pub wronskian_drift: f64,
    pub basis_wronskian: WronskianReport,
    pub pair_wronskian: WronskianReport,
    /// `|v_rec| <= |v_dom|` over the last decade, after scaling both to
    /// modulus one at its left end.
    pub dominance_holds: bool,
    #[serde(skip)]
    pub basis: [Trajectory; 2],
    #[serde(skip)]
    pub recessive: Trajectory,
}

impl EmpiricalReport {
    pub fn dominant(&self) -> &Trajectory {
        let n = self.basis[0].len() - 1;
        if self.basis[0].log_abs_v(n) >= self.basis[1].log_abs_v(n) {
            &self.basis[0]
        } else {
            &self.basis[1]
        }
    }
}

/// Integrate a basis from `a` and the recessive solution backward from
/// `x_max`, then read off the class from L2 saturation and the energy form.
pub fn empirical_class(problem: &RayProblem, pair: &AdmissiblePair, x_max: f64, cfg: &IvpConfig) -> Result<EmpiricalReport, OracleError> {
    let field = build_s(problem);
    let a = problem.a();
    let omega = pair.omega();
    let k = pair.k;
    let weight = |x: f64| match problem.q_at(x) {
        Ok(q) => (omega * (q - k)).re,
        Err(_) => f64::NAN,
    };
    let e1c = (omega * problem.p()).re;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::default();
    let mut basis = integrate_columns(&field, a, x_max, &[[one, zero], [zero, one]], Some(&weight), cfg)?;
    // recessive: terminal data (0, 1) minimizes |v(x_max)| over unit data
    let recessive = integrate_columns(&field, x_max, a, &[[zero, one]], Some(&weight), cfg)?.remove(0);
    let b1 = basis.pop().expect("two columns");
    let b0 = basis.pop().expect("two columns");
    let basis = [b0, b1];
    let basis_l2 = [l2_saturation(&basis[0]), l2_saturation(&basis[1])];
    let recessive_l2 = l2_saturation(&recessive);
    let basis_energy = [energy_from_run(&basis[0], e1c), energy_from_run(&basis[1], e1c)];
    let recessive_energy = energy_from_run(&recessive, e1c);
    let n = basis[0].len() - 1;
    let dom_idx = if basis[0].log_abs_v(n) >= basis[1].log_abs_v(n) { 0 } else { 1 };
    let dominant_l2 = basis_l2[dom_idx];
    let basis_wronskian = wronskian(&basis[0], &basis[1])?;
    let pair_wronskian = wronskian(&recessive, &basis[dom_idx])?;
    // The basis Wronskian is preserved by every step, but once one mode
    // dominates both columns it drowns in cancellation; then the
    // recessive/dominant pair is the only readable one.
    let wronskian_drift = if basis_wronskian.condition <= BASIS_CONDITION_LIMIT {
        basis_wronskian.drift
    } else {
        pair_wronskian.drift
    };
    let dom = &basis[dom_idx];
    let m = recessive.len() - 1;
    // both normalized to modulus one where the last decade starts
    let start = (0..=n).find(|&i| dom.grid[i] >= a + 0.1 * (x_max - a)).unwrap_or(0);
    let rec0 = recessive.log_abs_v(m - start);
    let dom0 = dom.log_abs_v(start);
    let dominance_holds = (start..=n).all(|i| recessive.log_abs_v(m - i) - rec0 <= dom.log_abs_v(i) - dom0 + 1e-9);
    let class = if basis_l2.iter().all(|s| s.saturated) {
        if basis_energy.iter().all(|e| e.finite()) {
            EmpiricalClass::AllSolutionsL2EnergyFinite
        } else {
            EmpiricalClass::AllSolutionsL2EnergyInfinite
        }
    } else if recessive_l2.saturated && !dominant_l2.saturated {
        EmpiricalClass::OneSolutionL2
    } else {
        EmpiricalClass::Undetermined
    };
    Ok(EmpiricalReport {
        class,
        x_max,
        tol: cfg.tol,
        basis_l2,
        recessive_l2,
        dominant_l2,
        basis_energy,
        recessive_energy,
        wronskian_drift,
        basis_wronskian,
        pair_wronskian,
        dominance_holds,
        basis,
        recessive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{admissible_pair, sample_q, DEFAULT_GRID_POINTS};
    use crate::oracle::integrate_ivp;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair_for(p: &RayProblem, x_max: f64) -> AdmissiblePair {
        let hull = sample_q(p, x_max, DEFAULT_GRID_POINTS, crate::geometry::default_r_max(p.lambda()), 64).unwrap();
        admissible_pair(&hull, p.lambda()).unwrap()
    }

    #[test]
    fn unit_solution_l2_is_length() {
        let p = RayProblem::parse(0.0, 0.0, c(0.0, 0.0), "0").unwrap();
        let t = integrate_ivp(&build_s(&p), 0.0, 7.0, [c(1.0, 0.0), c(0.0, 0.0)], &IvpConfig::default()).unwrap();
        let l2 = truncated_l2(&t);
        let (x, v) = l2[l2.len() - 1];
        assert_eq!(x, 7.0);
        assert!((v - 7.0).abs() < 1e-9);
        assert!(l2.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn decaying_exponential_saturates_at_half() {
        let p = RayProblem::parse(0.0, 0.0, c(0.0, -1.0), "i").unwrap();
        // forward integration of a decaying mode is unstable, so run it backward
        let end = (c(-1.0, -1.0) * 40.0).exp();
        let ic = [end, c(-1.0, -1.0) * end];
        let t = integrate_columns(&build_s(&p), 40.0, 0.0, &[ic], None, &IvpConfig::default()).unwrap().remove(0);
        let (x, v) = *truncated_l2(&t).last().unwrap();
        assert_eq!(x, 40.0);
        assert!((v - 0.5).abs() < 1e-8, "{v}");
        assert!(l2_saturation(&t).saturated);
    }

    #[test]
    fn backward_run_reads_left_anchored() {
        let p = RayProblem::parse(0.0, 0.0, c(0.0, 0.0), "0").unwrap();
        let cfg = IvpConfig::default();
        let t = integrate_columns(&build_s(&p), 3.0, 1.0, &[[c(1.0, 0.0), c(0.0, 0.0)]], None, &cfg).unwrap().remove(0);
        let l2 = truncated_l2(&t);
        assert_eq!(l2[0].0, 1.0);
        assert!(l2[0].1.abs() < 1e-12);
        assert!((l2.last().unwrap().1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn wronskian_of_unit_basis_is_constant() {
        // oscillatory, so neither column swamps the other
        let p = RayProblem::parse(1.0, 0.0, c(0.0, 0.0), "-x + 0.1*i").unwrap();
        let f = build_s(&p);
        let cols = integrate_columns(&f, 1.0, 200.0, &[[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]], None, &IvpConfig::default()).unwrap();
        let w = wronskian(&cols[0], &cols[1]).unwrap();
        assert!((w.samples[0].1).abs() < 1e-14);
        assert!(w.drift < 1e-6, "{}", w.drift);
    }

    #[test]
    fn scaled_copy_has_zero_wronskian() {
        let p = RayProblem::parse(1.0, 0.0, c(0.0, 0.0), "i*x^3").unwrap();
        let f = build_s(&p);
        let cols = integrate_columns(&f, 1.0, 6.0, &[[c(1.0, 0.5), c(0.2, 0.0)], [c(2.0, 1.0), c(0.4, 0.0)]], None, &IvpConfig::default()).unwrap();
        let w = wronskian(&cols[0], &cols[1]).unwrap();
        assert!(w.max_normalized < 1e-10, "{}", w.max_normalized);
    }

    #[test]
    fn halved_tolerance_matches() {
        let p = RayProblem::parse(1.0, 0.0, c(0.0, 0.0), "i*x^3").unwrap();
        let f = build_s(&p);
        let ic = [c(1.0, 0.0), c(0.0, 0.0)];
        let coarse = integrate_ivp(&f, 1.0, 10.0, ic, &IvpConfig::default()).unwrap();
        let fine = integrate_ivp(&f, 1.0, 10.0, ic, &IvpConfig::with_tol(1e-12)).unwrap();
        for k in 0..coarse.len() {
            let a = coarse.v[k] * (coarse.log_offset[k] - fine.log_offset[k]).exp();
            let rel = (a - fine.v[k]).norm() / fine.v[k].norm();
            assert!(rel < 1e-6, "x = {} rel {rel}", coarse.grid[k]);
        }
    }

    #[test]
    fn quartic_energy_parts_vanish() {
        let p = RayProblem::parse(1.0, 0.0, c(0.0, -1.0), "-x^4").unwrap();
        let pair = pair_for(&p, 2048.0);
        assert!(pair.k.norm() < 1e-12);
        let t = integrate_ivp(&build_s(&p), 1.0, 2048.0, [c(1.0, 0.0), c(0.0, 0.0)], &IvpConfig::default()).unwrap();
        let e = energy_form(&t, &pair, &p).unwrap();
        assert_eq!(e.e1_coefficient.abs(), 0.0);
        assert!(e.log_max_panel_e1 < (1e-12f64).ln());
        assert!(e.log_max_panel_e2 < (1e-12f64).ln());
        assert!(e.stabilized[2], "{:?}", e.rel_increments);
    }

    #[test]
    fn growing_solution_energy_diverges() {
        let p = RayProblem::parse(0.0, 0.0, c(0.0, -1.0), "i").unwrap();
        let pair = pair_for(&p, 30.0);
        let t = integrate_ivp(&build_s(&p), 0.0, 30.0, [c(1.0, 0.0), c(0.0, 0.0)], &IvpConfig::default()).unwrap();
        let e = energy_form(&t, &pair, &p).unwrap();
        assert!(!e.stabilized[2]);
        assert!(e.e2_min_rel_panel >= -1e-12);
    }

    #[test]
    fn constant_potential_has_one_l2_solution() {
        let p = RayProblem::parse(0.0, 0.0, c(0.0, -1.0), "i").unwrap();
        let pair = pair_for(&p, 30.0);
        let r = empirical_class(&p, &pair, 30.0, &IvpConfig::default()).unwrap();
        assert_eq!(r.class, EmpiricalClass::OneSolutionL2);
        assert!(r.dominance_holds);
        assert!(r.wronskian_drift < 1e-6);
    }

    #[test]
    fn pt_cubic_is_limit_point() {
        let p = RayProblem::parse(1.0, 0.0, c(0.0, 0.0), "-(i*x)^3").unwrap();
        let pair = pair_for(&p, 20.0);
        let r = empirical_class(&p, &pair, 20.0, &IvpConfig::default()).unwrap();
        assert_eq!(r.class, EmpiricalClass::OneSolutionL2);
        assert!(r.wronskian_drift < 1e-6, "{}", r.wronskian_drift);
        assert!(r.dominance_holds);
    }
}
