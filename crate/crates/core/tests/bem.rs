use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use orbitphase::bem::{
    assemble_block, dominant_eigenpair, iterate_scattering, reconstruct_mode, BemGrid, BemOptions, BlockSystem,
    Incident,
};
use orbitphase::curves::{Curve, Orientation};
use orbitphase::orbit::Scene;
use orbitphase::quadrature::gauss_legendre;
use orbitphase::twodisk::TwoDiskConfig;

fn two_disks(k: f64) -> Scene {
    TwoDiskConfig::default().scene(k, true).unwrap()
}

fn fixed(points: usize) -> BemOptions {
    BemOptions {
        points: Some(points),
        ..BemOptions::default()
    }
}

#[test]
fn mirror_symmetric_couplings_agree() {
    let scene = two_disks(16.0);
    let grids: Vec<BemGrid> = scene.obstacles().iter().map(|c| BemGrid::new(c, 96)).collect();
    let a12 = assemble_block(&scene, &grids, 0, 1).unwrap();
    let a21 = assemble_block(&scene, &grids, 1, 0).unwrap();
    let scale = a12.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    assert!((&a12 - &a21).iter().all(|z| z.norm() <= 1e-12 * scale));
    let a11 = assemble_block(&scene, &grids, 0, 0).unwrap();
    let a22 = assemble_block(&scene, &grids, 1, 1).unwrap();
    assert!((&a11 - &a22).iter().all(|z| z.norm() <= 1e-12 * scale.max(1.0)));
}

/// Far-field pattern of `∫ (i/4) H₀(k|x − y|) v(y) ds(y)` in direction `θ`.
fn far_field(curve: &Curve, grid: &BemGrid, v: &DVector<Complex64>, k: f64, theta: f64) -> Complex64 {
    let rule = gauss_legendre(8);
    let dir = [theta.cos(), theta.sin()];
    let mut sum = Complex64::new(0.0, 0.0);
    for m in 0..grid.n {
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let tau = (m as f64 + t) * grid.step;
            let y = curve.point(tau);
            let phase = Complex64::from_polar(1.0, -k * (dir[0] * y[0] + dir[1] * y[1]));
            sum += phase * grid.interpolate(v, tau) * (w * grid.step * curve.speed(tau));
        }
    }
    let pre = Complex64::new(0.0, 0.25) * (2.0 / (PI * k)).sqrt() * Complex64::from_polar(1.0, -PI / 4.0);
    pre * sum
}

#[test]
fn sound_soft_circle_far_field() {
    // series solution for radius 1/2, k = 1, incidence along +x
    let reference = [
        (0.0, Complex64::new(-0.89617968304535277205, 0.085061896022838003017)),
        (PI / 3.0, Complex64::new(-0.78114002389453066913, 0.17021418706093248569)),
        (PI / 2.0, Complex64::new(-0.6726896679455514292, 0.24884858583459073314)),
        (PI, Complex64::new(-0.47472709397173582589, 0.38739337764753372234)),
    ];
    let k = 1.0;
    let circle = Curve::circle([0.0, 0.0], 0.5, Orientation::Positive, 0.0).unwrap();
    let far = Curve::circle([0.0, 40.0], 0.5, Orientation::Negative, 0.0).unwrap();
    let scene = Scene::new(vec![circle.clone(), far], k, false).unwrap();
    let mut errors = Vec::new();
    for n in [64, 128] {
        let grids: Vec<BemGrid> = scene.obstacles().iter().map(|c| BemGrid::new(c, n)).collect();
        let a = assemble_block(&scene, &grids, 0, 0).unwrap();
        let inc = Incident::PlaneWave { direction: [1.0, 0.0] };
        let rhs = DVector::from_iterator(n, grids[0].collocation.iter().map(|&x| -inc.eval(k, x).unwrap()));
        let v = a.lu().solve(&rhs).unwrap();
        let err = reference
            .iter()
            .map(|&(theta, f)| (far_field(&circle, &grids[0], &v, k, theta) - f).norm())
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(errors[1] < 1e-4, "errors {errors:?}");
    assert!(errors[1] < errors[0] / 3.0, "errors {errors:?}");
}

#[test]
fn cycle_operator_is_linear_and_composed_in_order() {
    let scene = two_disks(16.0);
    let system = BlockSystem::build(&scene, &fixed(80)).unwrap();
    let op = system.cycle_operator();
    let zero = DVector::from_element(op.dim(), Complex64::new(0.0, 0.0));
    assert_eq!(op.apply(&zero).unwrap().norm(), 0.0);
    let x = DVector::from_fn(op.dim(), |i, _| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
    let y = DVector::from_fn(op.dim(), |i, _| Complex64::new(1.0 / (1.0 + i as f64), 0.5));
    let s = Complex64::new(0.3, -1.7);
    let lhs = op.apply(&(&x * s + &y)).unwrap();
    let rhs = op.apply(&x).unwrap() * s + op.apply(&y).unwrap();
    assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm());
    let manual = system.propagate(0, &system.propagate(1, &x).unwrap()).unwrap();
    assert!((op.apply(&x).unwrap() - &manual).norm() <= 1e-14 * manual.norm());
}

#[test]
fn eigenvalue_is_stable_under_refinement() {
    let scene = two_disks(16.0);
    let lambda = |n: usize| {
        let system = BlockSystem::build(&scene, &fixed(n)).unwrap();
        dominant_eigenpair(&system.cycle_operator(), 1e-12, 500).unwrap().value
    };
    let (coarse, fine) = (lambda(96), lambda(192));
    assert!((coarse - fine).norm() <= 1e-3, "{coarse} vs {fine}");
}

#[test]
fn eigenvalue_modulus_is_nearly_wavenumber_independent() {
    let modulus = |k: f64| {
        let system = BlockSystem::build(&two_disks(k), &BemOptions::default()).unwrap();
        dominant_eigenpair(&system.cycle_operator(), 1e-10, 500).unwrap().value.norm()
    };
    let (a, b) = (modulus(24.0), modulus(48.0));
    assert!(a < 1.0 && b < 1.0);
    assert!(((a - b) / b).abs() < 0.05, "{a} vs {b}");
}

#[test]
fn mode_is_mirror_symmetric_and_closes() {
    let scene = two_disks(32.0);
    let system = BlockSystem::build(&scene, &BemOptions::default()).unwrap();
    let pair = dominant_eigenpair(&system.cycle_operator(), 1e-12, 500).unwrap();
    let mode = reconstruct_mode(&system, &pair).unwrap();
    assert!(mode.closure_residual < 1e-10);
    // the mirror image of V₁ is V₂ up to one half-cycle factor
    let (v1, v2) = (&mode.densities[0], &mode.densities[1]);
    let ratio = v1.dotc(v2) / v1.dotc(v1);
    assert!((ratio * ratio - pair.value).norm() < 1e-8 * pair.value.norm());
    assert!((v2 - v1 * ratio).norm() < 1e-8 * v2.norm());
}

#[test]
fn plane_wave_first_peak_faces_the_source() {
    let scene = two_disks(32.0);
    let system = BlockSystem::build(&scene, &BemOptions::default()).unwrap();
    let refl = iterate_scattering(&system, &Incident::PlaneWave { direction: [1.0, 0.0] }, 1, 8).unwrap();
    assert_eq!(refl[0].obstacle, 1);
    assert!(orbitphase::curves::param_diff(refl[0].peak_tau, 0.75).abs() <= system.grids[1].step);
    assert!(refl.iter().skip(1).all(|r| r.obstacle != refl[r.index - 1].obstacle));
}

#[test]
fn point_source_is_the_free_space_kernel() {
    let inc = Incident::PointSource { location: [1.0, 2.0] };
    let u = inc.eval(3.0, [1.0, 2.5]).unwrap();
    let h = orbitphase::specfun::hankel_h0(1.5).unwrap();
    assert!((u - Complex64::new(0.0, 0.25) * h).norm() < 1e-15);
}
