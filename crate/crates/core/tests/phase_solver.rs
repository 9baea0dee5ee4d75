use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use orbitphase::config::SceneConfig;
use orbitphase::curves::{distance, Curve};
use orbitphase::dist_series::all_f_tables;
use orbitphase::orbit::{find_orbit, Scene};
use orbitphase::phase_solver::{
    check_order2_guards, compute_phase_series, solve_order2, solve_order2_from, solve_phase_series,
};
use orbitphase::twodisk::{closed_form_coeffs, TwoDiskConfig};
use orbitphase::Error;

fn config_scene(name: &str) -> Scene {
    let path = format!("{}/../../configs/{name}.json", env!("CARGO_MANIFEST_DIR"));
    SceneConfig::load(path.as_ref()).unwrap().scene().unwrap()
}

fn two_disk_tables(order: usize) -> (Scene, Vec<orbitphase::dist_series::DistanceSeries>, Vec<f64>) {
    let scene = TwoDiskConfig::default().scene(64.0, true).unwrap();
    let orbit = find_orbit(&scene, None).unwrap();
    let tables = all_f_tables(&scene, &orbit, order).unwrap();
    (scene, tables, orbit.taus)
}

#[test]
fn second_order_picks_contracting_branch() {
    let (_, tables, _) = two_disk_tables(4);
    let o2 = solve_order2(&tables).unwrap();
    for j in 0..2 {
        assert!((o2.c2[j] - SQRT_2 * PI * PI).abs() < 1e-12 * o2.c2[j]);
        assert!((o2.a11[j] - (3.0 - 2.0 * SQRT_2)).abs() < 1e-13);
    }
    check_order2_guards(&tables, &o2.c2, &o2.a11).unwrap();
}

#[test]
fn expanding_branch_is_rejected() {
    let (_, tables, _) = two_disk_tables(4);
    let c2 = vec![-SQRT_2 * PI * PI; 2];
    let a = vec![3.0 + 2.0 * SQRT_2; 2];
    match solve_order2_from(&tables, &c2, &a) {
        Err(Error::BranchRejected { a11, c2, .. }) => {
            assert!((a11 - (3.0 + 2.0 * SQRT_2)).abs() < 1e-10);
            assert!(c2 < 0.0);
        }
        other => panic!("expected a rejected branch, got {other:?}"),
    }
}

#[test]
fn two_disk_series_matches_closed_forms() {
    let (_, tables, taus) = two_disk_tables(8);
    let sol = solve_phase_series(&tables, &taus, 8).unwrap();
    let cf = closed_form_coeffs();
    for j in 0..2 {
        for i in 0..=8 {
            let (got, want) = (sol.phase.c[j][i], cf.c[i]);
            if want == 0.0 {
                assert!(got.abs() <= 1e-10 * cf.c[2], "c{i} = {got}");
            } else {
                assert!(((got - want) / want).abs() <= 1e-9, "c{i}: {got} vs {want}");
            }
        }
        for i in 1..8 {
            let (got, want) = (sol.chi.a[j][i], cf.a[i]);
            if want == 0.0 {
                assert!(got.abs() <= 1e-10 * cf.c[2], "a{i} = {got}");
            } else {
                assert!(((got - want) / want).abs() <= 1e-9, "a{i}: {got} vs {want}");
            }
        }
    }
    assert!(sol.residuals.max_abs() < 1e-10);
}

#[test]
fn lower_order_solve_is_a_prefix() {
    let scene = config_scene("ellipse_pair");
    let orbit = find_orbit(&scene, None).unwrap();
    let high = compute_phase_series(&scene, &orbit, 8).unwrap();
    let low = compute_phase_series(&scene, &orbit, 6).unwrap();
    for j in 0..2 {
        for i in 0..=6 {
            let (a, b) = (high.phase.c[j][i], low.phase.c[j][i]);
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "c[{j}][{i}]");
        }
    }
}

#[test]
fn disk_scaling_scales_phase_and_keeps_chi() {
    let base = TwoDiskConfig::new(0.5, 1.0).unwrap();
    let big = TwoDiskConfig::new(1.25, 2.5).unwrap();
    let solve = |cfg: TwoDiskConfig| {
        let scene = cfg.scene(16.0, true).unwrap();
        let orbit = find_orbit(&scene, None).unwrap();
        compute_phase_series(&scene, &orbit, 7).unwrap()
    };
    let (s1, s2) = (solve(base), solve(big));
    for i in 0..=7 {
        let (a, b) = (s1.phase.c[0][i] * 2.5, s2.phase.c[0][i]);
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "c{i}: {a} vs {b}");
    }
    for i in 1..7 {
        let (a, b) = (s1.chi.a[0][i], s2.chi.a[0][i]);
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "a{i}");
    }
}

#[test]
fn relabeling_the_pair_swaps_coefficients() {
    let scene = config_scene("ellipse_pair");
    let swapped = Scene::new(vec![scene.obstacle(1).clone(), scene.obstacle(0).clone()], 32.0, true).unwrap();
    let s1 = compute_phase_series(&scene, &find_orbit(&scene, None).unwrap(), 6).unwrap();
    let s2 = compute_phase_series(&swapped, &find_orbit(&swapped, None).unwrap(), 6).unwrap();
    for j in 0..2 {
        for i in 0..=6 {
            let (a, b) = (s1.phase.c[j][i], s2.phase.c[1 - j][i]);
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "c[{j}][{i}]: {a} vs {b}");
        }
    }
}

/// Minimal length of an open broken ray that ends at `Γ_j(τ)` after
/// reflecting backwards off `steps` obstacles in cyclic order, with a free
/// starting point. Minimized by Newton from the periodic orbit.
fn traced_length(scene: &Scene, taus: &[f64], j: usize, tau: f64, steps: usize) -> f64 {
    let n = scene.len();
    let obstacle = |i: usize| (j + n * steps - (steps - i)) % n;
    let curve = |i: usize| -> &Curve { scene.obstacle(obstacle(i)) };
    let mut sigma: Vec<f64> = (0..steps).map(|i| taus[obstacle(i)]).collect();
    let point_jet = |i: usize, s: &[f64]| {
        let t = if i == steps { tau } else { s[i] };
        curve(i).eval_jet(t, 2).unwrap()
    };
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let total = |s: &[f64]| {
        (0..steps)
            .map(|i| distance(point_jet(i, s).point(), point_jet(i + 1, s).point()))
            .sum::<f64>()
    };
    for _ in 0..50 {
        let mut g = DVector::zeros(steps);
        let mut h = DMatrix::zeros(steps, steps);
        for i in 0..steps {
            let (ja, jb) = (point_jet(i, &sigma), point_jet(i + 1, &sigma));
            let u = [ja.x[0] - jb.x[0], ja.y[0] - jb.y[0]];
            let d = u[0].hypot(u[1]);
            let ua = ja.tangent();
            let ub = {
                let t = jb.tangent();
                [-t[0], -t[1]]
            };
            let uaa = ja.second_derivative();
            let ubb = {
                let s = jb.second_derivative();
                [-s[0], -s[1]]
            };
            let (ga, gb) = (dot(u, ua), dot(u, ub));
            let d3 = d * d * d;
            g[i] += ga / d;
            h[(i, i)] += (dot(ua, ua) + dot(u, uaa)) / d - ga * ga / d3;
            if i + 1 < steps {
                g[i + 1] += gb / d;
                h[(i + 1, i + 1)] += (dot(ub, ub) + dot(u, ubb)) / d - gb * gb / d3;
                let c = dot(ua, ub) / d - ga * gb / d3;
                h[(i, i + 1)] += c;
                h[(i + 1, i)] += c;
            }
        }
        let step = h.lu().solve(&(-&g)).unwrap();
        for (s, d) in sigma.iter_mut().zip(step.iter()) {
            *s += d;
        }
        if step.amax() < 1e-15 {
            break;
        }
    }
    total(&sigma)
}

#[test]
fn three_obstacle_phase_matches_traced_rays() {
    let scene = config_scene("three_obstacles");
    let orbit = find_orbit(&scene, None).unwrap();
    let sol = compute_phase_series(&scene, &orbit, 8).unwrap();
    let steps = 60;
    for j in 0..3 {
        let base = traced_length(&scene, &orbit.taus, j, orbit.taus[j], steps);
        for &h in &[-0.01, 0.004, 0.01] {
            let traced = traced_length(&scene, &orbit.taus, j, orbit.taus[j] + h, steps) - base;
            let series = sol.phase.excess(j, orbit.taus[j] + h);
            assert!((traced - series).abs() < 1e-9, "obstacle {j}, h {h}: {traced} vs {series}");
        }
    }
}

#[test]
fn general_scene_residuals_through_order_six() {
    for name in ["ellipse_pair", "three_obstacles"] {
        let scene = config_scene(name);
        let orbit = find_orbit(&scene, None).unwrap();
        let sol = compute_phase_series(&scene, &orbit, 6).unwrap();
        assert!(sol.residuals.max_abs() <= 1e-11, "{name}: {}", sol.residuals.max_abs());
        assert!(sol.chi.a.iter().all(|a| a[1].abs() < 1.0));
    }
}
