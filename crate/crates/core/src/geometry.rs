//! The numerical range `Q = cco{q(x) + r p}` and the admissible half-plane for `lambda`.

use crate::expr::EvalError;
use crate::numerics::{geometric_grid, principal_arg};
use crate::problem::RayProblem;
use num_complex::Complex64;
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("q is not finite at x = {x}")]
    NonFiniteSample { x: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("grid parameters invalid: {0}")]
    Grid(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub r_max: f64,
    pub n_r: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HullSample {
    #[serde(skip)]
    pub points: Vec<Complex64>,
    pub grid: GridSpec,
    /// Counterclockwise, no collinear vertices.
    pub vertices: Vec<Complex64>,
    pub diameter: f64,
    /// Direction `p` along which the true `Q` is unbounded.
    pub recession: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissiblePair {
    pub theta: f64,
    #[serde(rename = "K")]
    pub k: Complex64,
    /// `min Re[e^{i theta}(z - K)]` over the samples.
    pub margin: f64,
    /// `-Re[e^{i theta}(lambda - K)]`, the distance from `lambda` to the hull.
    pub lambda_gap: f64,
    pub eps_geom: f64,
    /// `e^{i theta}` as computed from `lambda - K`, exact on the axes.
    #[serde(skip)]
    pub omega: Complex64,
}

impl AdmissiblePair {
    pub fn omega(&self) -> Complex64 {
        self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, thiserror::Error)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum NotAdmissible {
    #[error("lambda lies inside the sampled hull")]
    Inside,
    #[error("lambda is {distance:e} from the hull, below the margin {eps:e}")]
    TooClose { distance: f64, eps: f64 },
    #[error("the recession direction p leaves the half-plane (Re[e^(i theta) p] = {value:e})")]
    Recession { value: f64 },
}

pub const DEFAULT_GRID_POINTS: usize = 256;
pub const MIN_GRID_POINTS: usize = 64;

/// Default truncation of `r`: `1e3 (1 + |lambda|)`.
pub fn default_r_max(lambda: Complex64) -> f64 {
    1e3 * (1.0 + lambda.norm())
}

/// Sample `q(x_j) + r_k p` on geometric grids and take the convex hull.
pub fn sample_q(problem: &RayProblem, x_max: f64, n_x: usize, r_max: f64, n_r: usize) -> Result<HullSample, GeometryError> {
    if !(x_max > problem.a()) {
        return Err(GeometryError::Grid("x_max must exceed a"));
    }
    if n_x < MIN_GRID_POINTS || n_r < MIN_GRID_POINTS {
        return Err(GeometryError::Grid("grids need at least 64 points"));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(GeometryError::Grid("r_max must be positive"));
    }
    let p = problem.p();
    let mut rs = vec![0.0];
    rs.extend(geometric_grid(r_max * 1e-9, r_max, n_r - 1));
    let mut points = Vec::with_capacity(n_x * n_r);
    for x in geometric_grid(problem.a(), x_max, n_x) {
        let q = problem.q_at(x)?;
        if !(q.re.is_finite() && q.im.is_finite()) {
            return Err(GeometryError::NonFiniteSample { x });
        }
        points.extend(rs.iter().map(|&r| q + p * r));
    }
    let vertices = convex_hull(&points);
    let diameter = diameter(&vertices);
    Ok(HullSample {
        points,
        grid: GridSpec {
            x_min: problem.a(),
            x_max,
            n_x,
            r_max,
            n_r,
        },
        vertices,
        diameter,
        recession: p,
    })
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Andrew's monotone chain; counterclockwise with collinear points dropped.
pub fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut pts: Vec<Complex64> = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Complex64> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Complex64>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &pt in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= 0.0 {
                hull.pop();
            }
            hull.push(pt);
        }
        hull.pop();
    }
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.truncate(1);
    }
    hull
}

fn diameter(vertices: &[Complex64]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in vertices.iter().enumerate() {
        for b in &vertices[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// Nearest point of the segment `[a, b]` to `z`.
///
/// Interior feet are computed along the unit normal, so a horizontal edge
/// returns exactly `(z.re, a.im)`.
fn project_segment(z: Complex64, a: Complex64, b: Complex64) -> Complex64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return a;
    }
    let t = ((z - a).re * d.re + (z - a).im * d.im) / len2;
    if t <= 0.0 {
        a
    } else if t >= 1.0 {
        b
    } else {
        let n = Complex64::new(-d.im, d.re) / len2.sqrt();
        let h = (z - a).re * n.re + (z - a).im * n.im;
        let foot = z - n * h;
        // pin the coordinate a horizontal or vertical edge fixes
        if d.im == 0.0 {
            Complex64::new(foot.re, a.im)
        } else if d.re == 0.0 {
            Complex64::new(a.re, foot.im)
        } else {
            foot
        }
    }
}

impl HullSample {
    pub fn contains(&self, z: Complex64) -> bool {
        let v = &self.vertices;
        if v.len() < 3 {
            return false;
        }
        (0..v.len()).all(|i| cross(v[i], v[(i + 1) % v.len()], z) >= 0.0)
    }

    /// Euclidean projection of `z` onto the hull.
    pub fn project(&self, z: Complex64) -> Complex64 {
        let v = &self.vertices;
        if self.contains(z) {
            return z;
        }
        match v.len() {
            0 => panic!("empty hull"),
            1 => v[0],
            2 => project_segment(z, v[0], v[1]),
            n => (0..n)
                .map(|i| project_segment(z, v[i], v[(i + 1) % n]))
                .min_by(|a, b| (z - a).norm().total_cmp(&(z - b).norm()))
                .unwrap(),
        }
    }

    /// Vertices as `re,im` lines with a header, closing the polygon.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im\n");
        for z in self.vertices.iter().chain(self.vertices.first()) {
            let _ = writeln!(out, "{:.16e},{:.16e}", z.re, z.im);
        }
        out
    }
}

/// `eps_geom = 1e-6 (1 + |lambda|)`.
pub fn eps_geom(lambda: Complex64) -> f64 {
    1e-6 * (1.0 + lambda.norm())
}

/// Nearest point `K` and the supporting direction `theta = pi - arg(lambda - K)`.
pub fn admissible_pair(hull: &HullSample, lambda: Complex64) -> Result<AdmissiblePair, NotAdmissible> {
    if hull.contains(lambda) {
        return Err(NotAdmissible::Inside);
    }
    let k = hull.project(lambda);
    let diff = lambda - k;
    let distance = diff.norm();
    let eps = eps_geom(lambda);
    if distance < eps {
        return Err(NotAdmissible::TooClose { distance, eps });
    }
    // e^{i theta} = -conj(lambda - K)/|lambda - K|, so Re[e^{i theta}(lambda - K)] = -|lambda - K| exactly
    let omega = -diff.conj() / distance;
    let recession = (omega * hull.recession).re;
    if recession < -1e-12 {
        return Err(NotAdmissible::Recession { value: recession });
    }
    let margin = hull
        .points
        .iter()
        .map(|z| (omega * (z - k)).re)
        .fold(f64::INFINITY, f64::min);
    Ok(AdmissiblePair {
        theta: principal_arg(omega),
        k,
        margin,
        lambda_gap: distance,
        eps_geom: eps,
        omega,
    })
}
