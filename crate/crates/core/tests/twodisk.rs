use orbitphase::orbit::find_orbit;
use orbitphase::phase_solver::compute_phase_series;
use orbitphase::twodisk::{
    closed_form_coeffs, phi_excess_geometric_sum, phi_geometric_sum, phi_via_chi_integral, solve_chi, ChiGrid,
    ChiOptions, TwoDiskConfig,
};
use orbitphase::Error;
use std::sync::OnceLock;

fn grid() -> &'static ChiGrid {
    static GRID: OnceLock<ChiGrid> = OnceLock::new();
    GRID.get_or_init(|| solve_chi(TwoDiskConfig::default(), &ChiOptions::default()).unwrap())
}

#[test]
fn chi_equation_residuals_are_small() {
    let g = grid();
    assert!(g.max_residual <= 1e-12);
    for i in 0..g.values.len() {
        assert!(g.residual(i).unwrap().abs() <= 1e-12);
    }
    assert!((g.node(0) + 0.2).abs() < 1e-15 && (g.node(g.values.len() - 1) - 0.2).abs() < 1e-15);
}

#[test]
fn chi_is_odd_and_contracting() {
    let g = grid();
    let n = g.values.len();
    for i in 0..n {
        assert!((g.values[i] + g.values[n - 1 - i]).abs() < 1e-14);
        if g.node(i) != 0.0 {
            assert!(g.values[i].abs() < 0.2 * g.node(i).abs());
        }
    }
}

#[test]
fn slope_at_orbit() {
    assert!((grid().slope_at_zero() - (3.0 - 8f64.sqrt())).abs() <= 1e-8);
}

#[test]
fn grid_agrees_with_taylor_map() {
    let scene = TwoDiskConfig::default().scene(64.0, true).unwrap();
    let orbit = find_orbit(&scene, None).unwrap();
    let sol = compute_phase_series(&scene, &orbit, 8).unwrap();
    let a = &sol.chi.a[0];
    for &t in &[-0.02, 0.005, 0.015] {
        let series: f64 = a[1..].iter().rev().fold(0.0, |acc, c| acc * t + c) * t;
        assert!((grid().eval(t).unwrap() - series).abs() < 1e-10, "t = {t}");
    }
    let cf = closed_form_coeffs();
    assert!((a[3] - cf.a[3]).abs() < 1e-9 * cf.a[3].abs());
}

#[test]
fn integral_and_reflection_sum_agree() {
    let g = grid();
    let edge = g.values.last().unwrap().min(-g.values[0]);
    for i in 0..=40 {
        let x = edge * (-1.0 + i as f64 / 20.0) * 0.999;
        let a = phi_via_chi_integral(g, x).unwrap();
        let b = phi_geometric_sum(g, x, 200).unwrap();
        assert!((a - b).abs() <= 1e-8, "x = {x}: {a} vs {b}");
    }
}

#[test]
fn integral_outside_image_is_an_error() {
    assert!(matches!(phi_via_chi_integral(grid(), 0.05), Err(Error::OutsideChiImage { .. })));
    assert!(phi_geometric_sum(grid(), 0.25, 50).is_err());
}

#[test]
fn reflection_sum_is_even_and_minimal_at_orbit() {
    let g = grid();
    assert_eq!(phi_excess_geometric_sum(g, 0.0, 50).unwrap(), 0.0);
    for &t in &[0.001, 0.01, 0.1] {
        let p = phi_excess_geometric_sum(g, t, 200).unwrap();
        let m = phi_excess_geometric_sum(g, -t, 200).unwrap();
        assert!(p > 0.0 && (p - m).abs() <= 1e-15 * p.max(1e-300) + 1e-18);
    }
}

#[test]
fn zeta_and_xi() {
    let cfg = TwoDiskConfig::default();
    let (z0, x0) = cfg.zeta_xi(0.0);
    assert!((z0 - 1.0).abs() < 1e-15 && (x0 - 1.0).abs() < 1e-15);
    for &t in &[0.05, 0.2, 0.25, 0.4] {
        let (z, x) = cfg.zeta_xi(t);
        assert!(x <= z + 1e-15);
    }
}

#[test]
fn invalid_geometry_is_rejected() {
    assert!(TwoDiskConfig::new(0.0, 1.0).is_err());
    assert!(TwoDiskConfig::new(0.5, -1.0).is_err());
}
