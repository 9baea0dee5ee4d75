use orbitphase::curves::{param_diff, wrap, Curve, Orientation};
use proptest::prelude::*;

fn sample_curves() -> Vec<Curve> {
    vec![
        Curve::circle([0.3, -0.2], 0.7, Orientation::Positive, 0.1).unwrap(),
        Curve::circle([0.0, 2.0], 0.5, Orientation::Negative, 0.0).unwrap(),
        Curve::ellipse([1.0, 0.5], [0.8, 0.3], 0.7).unwrap(),
        Curve::radial_fourier([0.0, 0.0], 0.6, vec![0.0, 0.1, 0.06], vec![0.05, 0.0, 0.03]).unwrap(),
    ]
}

/// Central differences of the point map, scaled to Taylor coefficients.
fn fd_coefficient(c: &Curve, tau: f64, p: usize) -> [f64; 2] {
    let h = 1e-3;
    let f = |s: f64| c.point(tau + s * h);
    // five-point stencils for derivatives 1..=3
    let (d, fact) = match p {
        1 => {
            let v = |i: usize| (f(-2.0)[i] - 8.0 * f(-1.0)[i] + 8.0 * f(1.0)[i] - f(2.0)[i]) / (12.0 * h);
            ([v(0), v(1)], 1.0)
        }
        2 => {
            let v = |i: usize| (-f(-2.0)[i] + 16.0 * f(-1.0)[i] - 30.0 * f(0.0)[i] + 16.0 * f(1.0)[i] - f(2.0)[i]) / (12.0 * h * h);
            ([v(0), v(1)], 2.0)
        }
        3 => {
            let v = |i: usize| (-f(-2.0)[i] + 2.0 * f(-1.0)[i] - 2.0 * f(1.0)[i] + f(2.0)[i]) / (2.0 * h * h * h);
            ([v(0), v(1)], 6.0)
        }
        _ => unreachable!(),
    };
    [d[0] / fact, d[1] / fact]
}

#[test]
fn jets_match_finite_differences() {
    for c in sample_curves() {
        for &tau in &[0.0, 0.137, 0.5, 0.93] {
            let jet = c.eval_jet(tau, 6).unwrap();
            assert_eq!(jet.point(), c.point(tau));
            for p in 1..=3 {
                let fd = fd_coefficient(&c, tau, p);
                let scale = 1.0 + jet.x[p].abs().max(jet.y[p].abs());
                let tol = [1e-8, 1e-6, 1e-4][p - 1] * scale * 40.0;
                assert!((jet.x[p] - fd[0]).abs() < tol, "x{p} at {tau}: {} vs {}", jet.x[p], fd[0]);
                assert!((jet.y[p] - fd[1]).abs() < tol, "y{p} at {tau}: {} vs {}", jet.y[p], fd[1]);
            }
        }
    }
}

#[test]
fn jet_sum_reproduces_nearby_points() {
    for c in sample_curves() {
        let jet = c.eval_jet(0.3, 20).unwrap();
        let h: f64 = 0.01;
        let x: f64 = jet.x.iter().rev().fold(0.0, |acc, v| acc * h + v);
        let y: f64 = jet.y.iter().rev().fold(0.0, |acc, v| acc * h + v);
        let p = c.point(0.3 + h);
        assert!((x - p[0]).abs() < 1e-13 && (y - p[1]).abs() < 1e-13);
    }
}

#[test]
fn truncation_keeps_leading_coefficients() {
    let c = &sample_curves()[3];
    let high = c.eval_jet(0.42, 12).unwrap();
    let low = c.eval_jet(0.42, 5).unwrap();
    assert_eq!(high.truncate(5), low);
    assert_eq!(low.order(), 5);
}

#[test]
fn orientation_reverses_traversal() {
    let pos = Curve::circle([0.0, 0.0], 1.0, Orientation::Positive, 0.0).unwrap();
    let neg = Curve::circle([0.0, 0.0], 1.0, Orientation::Negative, 0.0).unwrap();
    let tp = pos.eval_jet(0.1, 1).unwrap().tangent();
    let tn = neg.eval_jet(0.1, 1).unwrap().tangent();
    let cross = |p: [f64; 2], t: [f64; 2]| p[0] * t[1] - p[1] * t[0];
    assert!(cross(pos.point(0.1), tp) * cross(neg.point(0.1), tn) < 0.0);
}

#[test]
fn ellipse_length_matches_reference() {
    // complete elliptic integral of the second kind, a = 2, b = 1
    let c = Curve::ellipse([0.0, 0.0], [2.0, 1.0], 0.3).unwrap();
    assert!((c.length() - 9.688_448_220_547_675).abs() < 1e-12);
}

proptest! {
    #[test]
    fn wrap_lands_in_unit_interval(t in -1e3f64..1e3) {
        let w = wrap(t);
        prop_assert!((0.0..1.0).contains(&w));
        prop_assert!(param_diff(w, t).abs() < 1e-9);
    }

    #[test]
    fn param_diff_is_antisymmetric(a in -5f64..5.0, b in -5f64..5.0) {
        let d = param_diff(a, b);
        prop_assert!(d.abs() <= 0.5 + 1e-12);
        prop_assert!((d + param_diff(b, a)).abs() < 1e-12 || (d.abs() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn radial_fourier_points_stay_at_positive_radius(tau in 0f64..1.0) {
        let c = Curve::radial_fourier([1.0, -1.0], 0.6, vec![0.0, 0.1, 0.06], vec![0.05, 0.0, 0.03]).unwrap();
        let p = c.point(tau);
        let r = (p[0] - 1.0).hypot(p[1] + 1.0);
        prop_assert!(r > 0.6 - 0.3 && r < 0.6 + 0.3);
    }
}
