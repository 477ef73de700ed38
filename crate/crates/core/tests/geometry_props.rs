use lplc::geometry::{admissible_pair, convex_hull, sample_q, NotAdmissible};
use lplc::problem::RayProblem;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn potentials() -> impl Strategy<Value = &'static str> {
    prop_oneof![
        Just("-(i*x)^3"),
        Just("-x^4 + i"),
        Just("x^2"),
        Just("i*x + 2"),
        Just("-(2 + sin(x)) + i"),
        Just("(1+i)*x^(1/2)"),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn returned_pairs_satisfy_support_condition(
        q in potentials(),
        phi in -0.6f64..0.6,
        lre in -50.0f64..50.0,
        lim in -50.0f64..50.0,
    ) {
        let lambda = c(lre, lim);
        let pb = RayProblem::parse(1.0, phi, lambda, q).unwrap();
        let hull = sample_q(&pb, 30.0, 64, 1e3, 64).unwrap();
        if let Ok(pair) = admissible_pair(&hull, lambda) {
            prop_assert!(pair.margin >= -1e-12 * hull.diameter, "margin {}", pair.margin);
            prop_assert!(pair.lambda_gap > 0.0);
            let omega = pair.omega();
            prop_assert!((omega * (lambda - pair.k)).re < 0.0);
            for z in hull.points.iter().step_by(hull.points.len() / 50) {
                prop_assert!((lambda - pair.k).norm() <= (lambda - z).norm() + 1e-12);
            }
        }
    }

    #[test]
    fn hull_vertices_are_convex_and_cover_points(pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..200)) {
        let pts: Vec<_> = pts.into_iter().map(|(a, b)| c(a, b)).collect();
        let v = convex_hull(&pts);
        prop_assume!(v.len() >= 3);
        let n = v.len();
        let diam = 4e3;
        for i in 0..n {
            let (a, b, d) = (v[i], v[(i + 1) % n], v[(i + 2) % n]);
            let turn = (b - a).re * (d - b).im - (b - a).im * (d - b).re;
            prop_assert!(turn > 0.0);
            for z in &pts {
                let side = ((b - a).re * (z - a).im - (b - a).im * (z - a).re) / (b - a).norm();
                prop_assert!(side >= -1e-9 * diam);
            }
        }
    }

    #[test]
    fn refinement_keeps_interior_points_inadmissible(t in 0.05f64..0.95, r in 0.05f64..0.95) {
        // lambda = q(x) + r p at an interior parameter of the limit hull
        let pb = RayProblem::parse(1.0, 0.0, c(0.0, 0.0), "(1+i)*x^2").unwrap();
        let x = 1.0 + t * 9.0;
        let lambda = c(x * x, x * x) + c(200.0 * r, 0.0);
        let coarse = sample_q(&pb, 10.0, 64, 400.0, 64).unwrap();
        let fine = sample_q(&pb, 10.0, 128, 400.0, 128).unwrap();
        if admissible_pair(&coarse, lambda).is_err() {
            prop_assert!(admissible_pair(&fine, lambda).is_err());
        }
        let rejected = matches!(
            admissible_pair(&fine, lambda),
            Err(NotAdmissible::Inside | NotAdmissible::TooClose { .. })
        );
        prop_assert!(rejected);
    }
}
