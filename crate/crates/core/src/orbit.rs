//! Periodic orbits: ordered obstacle scenes and minimization of the closed
//! path length `L(τ₁,…,τ_J) = Σ_j ‖Γ_j(τ_j) − Γ_{j+1}(τ_{j+1})‖`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::curves::{self, Curve, Point};
use crate::error::{Error, Result};

const SEPARATION_GRID: usize = 256;
const INIT_SAMPLES: usize = 100;
const MAX_ITERATIONS: usize = 500;
const MIN_CURVATURE: f64 = 1e-8;

/// The ordered obstacles of one periodic orbit, with the wavenumber used by
/// the boundary-element stage.
#[derive(Debug, Clone)]
pub struct Scene {
    obstacles: Vec<Curve>,
    wavenumber: f64,
    check_separation: bool,
}

impl Scene {
    pub fn new(obstacles: Vec<Curve>, wavenumber: f64, check_separation: bool) -> Result<Scene> {
        if obstacles.len() < 2 {
            return Err(Error::InvalidScene(format!(
                "an orbit needs at least two obstacles, got {}",
                obstacles.len()
            )));
        }
        if !(wavenumber.is_finite() && wavenumber > 0.0) {
            return Err(Error::InvalidScene(format!("wavenumber {wavenumber} must be positive")));
        }
        let scene = Scene {
            obstacles,
            wavenumber,
            check_separation,
        };
        let min_gap = scene.min_separation();
        if min_gap <= 0.0 {
            return Err(Error::InvalidScene("obstacles intersect".into()));
        }
        if check_separation && min_gap < 1.0 / wavenumber {
            return Err(Error::InvalidScene(format!(
                "obstacles are {min_gap:.3e} apart, closer than 1/k = {:.3e}",
                1.0 / wavenumber
            )));
        }
        Ok(scene)
    }

    pub fn obstacles(&self) -> &[Curve] {
        &self.obstacles
    }

    pub fn obstacle(&self, j: usize) -> &Curve {
        &self.obstacles[j % self.obstacles.len()]
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn check_separation(&self) -> bool {
        self.check_separation
    }

    /// Same obstacles at a different wavenumber.
    pub fn with_wavenumber(&self, wavenumber: f64) -> Result<Scene> {
        Scene::new(self.obstacles.clone(), wavenumber, self.check_separation)
    }

    /// Minimum pairwise distance over a uniform `256 × 256` parameter grid.
    pub fn min_separation(&self) -> f64 {
        let samples: Vec<Vec<Point>> = self
            .obstacles
            .iter()
            .map(|c| {
                (0..SEPARATION_GRID)
                    .map(|i| c.point(i as f64 / SEPARATION_GRID as f64))
                    .collect()
            })
            .collect();
        let mut best = f64::INFINITY;
        for a in 0..samples.len() {
            for b in a + 1..samples.len() {
                for p in &samples[a] {
                    for q in &samples[b] {
                        best = best.min(curves::distance(*p, *q));
                    }
                }
            }
        }
        best
    }
}

/// Path length with its exact gradient and Hessian in the parameters.
#[derive(Debug, Clone)]
pub struct PathLength {
    pub value: f64,
    pub legs: Vec<f64>,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `L(𝒯)` and its first and second derivatives with respect to each `τ_j`.
pub fn path_length(scene: &Scene, taus: &[f64]) -> Result<PathLength> {
    let n = scene.len();
    if taus.len() != n {
        return Err(Error::InvalidScene(format!(
            "expected {n} parameters, got {}",
            taus.len()
        )));
    }
    let jets: Vec<_> = scene
        .obstacles
        .iter()
        .zip(taus)
        .map(|(c, &t)| c.eval_jet(t, 2))
        .collect::<Result<_>>()?;
    let mut value = 0.0;
    let mut legs = Vec::with_capacity(n);
    let mut gradient = DVector::zeros(n);
    let mut hessian = DMatrix::zeros(n, n);
    for j in 0..n {
        let k = (j + 1) % n;
        let (pa, pb) = (jets[j].point(), jets[k].point());
        let u = [pa[0] - pb[0], pa[1] - pb[1]];
        let d = u[0].hypot(u[1]);
        if d < 1e-14 {
            return Err(Error::DegenerateLeg { leg: j, distance: d });
        }
        value += d;
        legs.push(d);
        // u_a = Γ_j', u_b = −Γ_k'
        let ua = jets[j].tangent();
        let tb = jets[k].tangent();
        let ub = [-tb[0], -tb[1]];
        let uaa = jets[j].second_derivative();
        let sb = jets[k].second_derivative();
        let ubb = [-sb[0], -sb[1]];
        let (gu_a, gu_b) = (dot(u, ua), dot(u, ub));
        gradient[j] += gu_a / d;
        gradient[k] += gu_b / d;
        let d3 = d * d * d;
        hessian[(j, j)] += (dot(ua, ua) + dot(u, uaa)) / d - gu_a * gu_a / d3;
        hessian[(k, k)] += (dot(ub, ub) + dot(u, ubb)) / d - gu_b * gu_b / d3;
        let cross = dot(ua, ub) / d - gu_a * gu_b / d3;
        hessian[(j, k)] += cross;
        hessian[(k, j)] += cross;
    }
    Ok(PathLength {
        value,
        legs,
        gradient,
        hessian,
    })
}

/// Reflection points of a periodic orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub taus: Vec<f64>,
    /// `d_j = Δ_{j,j+1}(τ_j*, τ_{j+1}*)`, cyclic.
    pub leg_distances: Vec<f64>,
    pub total_length: f64,
    /// Spectrum of the path-length Hessian at the orbit, ascending.
    pub hessian_eigenvalues: Vec<f64>,
    pub iterations: usize,
}

/// Default starting point: on each obstacle, the sample (out of 100
/// equispaced) closest to the centroid of all obstacles' samples. Ties go to
/// the smaller parameter.
pub fn default_initial_guess(scene: &Scene) -> Vec<f64> {
    let samples: Vec<Vec<(f64, Point)>> = scene
        .obstacles
        .iter()
        .map(|c| {
            (0..INIT_SAMPLES)
                .map(|i| {
                    let t = i as f64 / INIT_SAMPLES as f64;
                    (t, c.point(t))
                })
                .collect()
        })
        .collect();
    let count = (scene.len() * INIT_SAMPLES) as f64;
    let centroid = samples.iter().flatten().fold([0.0, 0.0], |acc, (_, p)| {
        [acc[0] + p[0] / count, acc[1] + p[1] / count]
    });
    samples
        .iter()
        .map(|obst| {
            let mut best = (f64::INFINITY, 0.0);
            for &(t, p) in obst {
                let d = curves::distance(p, centroid);
                if d < best.0 {
                    best = (d, t);
                }
            }
            best.1
        })
        .collect()
}

/// Local minimizer of the closed path length by Newton's method with an
/// eigenvalue-shifted Hessian and backtracking.
pub fn find_orbit(scene: &Scene, init: Option<&[f64]>) -> Result<PeriodicOrbit> {
    let n = scene.len();
    let mut taus: Vec<f64> = match init {
        Some(t) if t.len() == n => t.to_vec(),
        Some(t) => {
            return Err(Error::InvalidScene(format!(
                "initial guess has {} parameters, scene has {n} obstacles",
                t.len()
            )))
        }
        None => default_initial_guess(scene),
    };
    let mut current = path_length(scene, &taus)?;
    for iteration in 0..=MAX_ITERATIONS {
        let gnorm = current.gradient.norm();
        if gnorm <= 1e-13 * current.value.max(1.0) {
            let eig = SymmetricEigen::new(current.hessian.clone()).eigenvalues;
            let mut spectrum: Vec<f64> = eig.iter().copied().collect();
            spectrum.sort_by(|a, b| a.total_cmp(b));
            let scale = spectrum.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            if spectrum[0] <= 1e-10 * scale {
                return Err(Error::DegenerateHessian {
                    min_eigenvalue: spectrum[0],
                });
            }
            let taus: Vec<f64> = taus.iter().map(|&t| curves::wrap(t)).collect();
            let final_eval = path_length(scene, &taus)?;
            return Ok(PeriodicOrbit {
                taus,
                leg_distances: final_eval.legs.clone(),
                total_length: final_eval.legs.iter().sum(),
                hessian_eigenvalues: spectrum,
                iterations: iteration,
            });
        }
        if iteration == MAX_ITERATIONS {
            return Err(Error::OrbitNotConverged {
                iterations: MAX_ITERATIONS,
                gradient_norm: gnorm,
            });
        }
        let eig = SymmetricEigen::new(current.hessian.clone());
        let min_eig = eig.eigenvalues.min();
        let shift = if min_eig < MIN_CURVATURE {
            MIN_CURVATURE - min_eig
        } else {
            0.0
        };
        let shifted = &current.hessian + DMatrix::identity(n, n) * shift;
        let step = shifted
            .lu()
            .solve(&(-&current.gradient))
            .ok_or(Error::DegenerateHessian {
                min_eigenvalue: min_eig,
            })?;
        let slope = current.gradient.dot(&step);
        let slack = 8.0 * f64::EPSILON * current.value;
        let mut t = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = taus.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if let Ok(eval) = path_length(scene, &trial) {
                if eval.value <= current.value + 1e-4 * t * slope + slack {
                    break Some((trial, eval));
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                break None;
            }
        };
        match accepted {
            Some((trial, eval)) => {
                taus = trial;
                current = eval;
            }
            None => {
                return Err(Error::OrbitNotConverged {
                    iterations: iteration,
                    gradient_norm: gnorm,
                })
            }
        }
    }
    unreachable!()
}
