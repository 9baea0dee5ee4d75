//! Collocation BEM for the single-layer operators between obstacles, the
//! reflection-cycle operator built from its blocks, and the scattering
//! iteration along the orbit.
//!
//! Densities are piecewise linear in `τ` on `N_j` uniform nodes, collocated
//! at the nodes. Block `A_{j,i}` maps nodal values on obstacle `i` to the
//! single-layer potential `∫ (i/4) H₀⁽¹⁾(k‖x − Γ_i(σ)‖) m(σ) |Γ_i'(σ)| dσ`
//! at the nodes of obstacle `j`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::curves::{self, Curve, Point};
use crate::error::{Error, Result};
use crate::orbit::Scene;
use crate::quadrature::{self, Rule};
use crate::specfun;

const I: Complex64 = Complex64::new(0.0, 1.0);
const QUADRATURE_CHECK_TOL: f64 = 1e-8;
const MAX_BLOCK_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BemOptions {
    pub points_per_wavelength: f64,
    pub min_points: usize,
    /// Fixed node count on every obstacle, overriding the wavelength rule.
    pub points: Option<usize>,
    /// Scales every node count (grid refinement studies).
    pub refinement: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BemOptions {
    fn default() -> Self {
        BemOptions {
            points_per_wavelength: 10.0,
            min_points: 64,
            points: None,
            refinement: 1,
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

/// `max(ceil(ppw · k |Γ| / 2π), min_points)`.
pub fn node_count(curve: &Curve, k: f64, opts: &BemOptions) -> usize {
    let base = match opts.points {
        Some(n) => n,
        None => ((opts.points_per_wavelength * k * curve.length() / (2.0 * PI)).ceil() as usize).max(opts.min_points),
    };
    base * opts.refinement.max(1)
}

/// Quadrature node on a panel: position, `weight · |Γ'|`, and local
/// coordinate `u ∈ (0,1)` within the panel.
#[derive(Debug, Clone, Copy)]
struct PanelNode {
    point: Point,
    weight: f64,
    u: f64,
}

#[derive(Debug, Clone)]
pub struct BemGrid {
    pub n: usize,
    pub step: f64,
    pub collocation: Vec<Point>,
    /// Gauss nodes of panel `m` are `panel_nodes[m * P .. (m + 1) * P]`.
    panel_nodes: Vec<PanelNode>,
    nodes_per_panel: usize,
}

impl BemGrid {
    pub fn new(curve: &Curve, n: usize) -> BemGrid {
        assert!(n >= 4, "need at least four nodes");
        let step = 1.0 / n as f64;
        let rule = quadrature::gauss_legendre(8);
        let mut panel_nodes = Vec::with_capacity(n * rule.nodes.len());
        for m in 0..n {
            for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
                let sigma = (m as f64 + u) * step;
                panel_nodes.push(PanelNode {
                    point: curve.point(sigma),
                    weight: w * step * curve.speed(sigma),
                    u,
                });
            }
        }
        BemGrid {
            n,
            step,
            collocation: (0..n).map(|p| curve.point(p as f64 * step)).collect(),
            panel_nodes,
            nodes_per_panel: rule.nodes.len(),
        }
    }

    pub fn node(&self, p: usize) -> f64 {
        p as f64 * self.step
    }

    /// Hat-basis weights `(q, ψ_q(τ))` of the two nodes around `τ`.
    pub fn hat_weights(&self, tau: f64) -> [(usize, f64); 2] {
        let u = curves::wrap(tau) * self.n as f64;
        let m = (u.floor() as usize).min(self.n - 1);
        let frac = u - m as f64;
        [(m, 1.0 - frac), ((m + 1) % self.n, frac)]
    }

    /// Nearest node index to `τ`.
    pub fn nearest_node(&self, tau: f64) -> usize {
        ((curves::wrap(tau) * self.n as f64).round() as usize) % self.n
    }

    /// Piecewise-linear interpolation of nodal values.
    pub fn interpolate(&self, values: &DVector<Complex64>, tau: f64) -> Complex64 {
        self.hat_weights(tau).iter().map(|&(q, w)| values[q] * w).sum()
    }
}

fn kernel(k: f64, rho: f64) -> Result<Complex64> {
    Ok(0.25 * I * specfun::hankel_h0(k * rho)?)
}

struct SingularRules {
    regular: Rule,
    log: Vec<f64>,
}

impl SingularRules {
    fn new() -> SingularRules {
        let regular = quadrature::gauss_legendre(16);
        let log = quadrature::log_weights(&regular);
        SingularRules { regular, log }
    }
}

/// Adds `∫_{[a,b]} g(σ) ψ(σ) |Γ'(σ)| dσ` for the two hats of panel `m`
/// (spanning `[m h, (m+1) h]`), where `[a, b]` is a sub-interval of the panel
/// and `g` is the kernel seen from `target`. When `log_at` is the endpoint
/// `a` or `b` coinciding with the target parameter, the log singularity is
/// split off and integrated with product weights.
#[allow(clippy::too_many_arguments)]
fn add_subpanel(
    out: &mut [Complex64],
    curve: &Curve,
    k: f64,
    target: Point,
    m: usize,
    h: f64,
    (a, b): (f64, f64),
    log_at: Option<f64>,
    rules: &SingularRules,
) -> Result<()> {
    let n = out.len();
    let width = b - a;
    let panel_start = m as f64 * h;
    let mut add = |sigma: f64, value: Complex64| {
        let u = (sigma - panel_start) / h;
        out[m] += value * (1.0 - u);
        out[(m + 1) % n] += value * u;
    };
    match log_at {
        None => {
            for (&t, &w) in rules.regular.nodes.iter().zip(&rules.regular.weights) {
                let sigma = a + width * t;
                let rho = curves::distance(target, curve.point(sigma));
                add(sigma, kernel(k, rho)? * (w * width * curve.speed(sigma)));
            }
        }
        Some(s0) => {
            // σ = s0 ± width·t, ln|σ − s0| = ln width + ln t
            let dir = if (s0 - a).abs() < (s0 - b).abs() { 1.0 } else { -1.0 };
            let ln_w = width.ln();
            for ((&t, &w), &wl) in rules.regular.nodes.iter().zip(&rules.regular.weights).zip(&rules.log) {
                let sigma = s0 + dir * width * t;
                let dist = width * t;
                let rho = curves::distance(target, curve.point(sigma));
                let x = k * rho;
                let (j0, _) = specfun::bessel_jy0(x)?;
                let yreg = specfun::y0_regular(x)?;
                let jac = curve.speed(sigma) * width;
                let log_coeff = Complex64::new(-j0 / (2.0 * PI), 0.0);
                let smooth = 0.25 * I * j0 - j0 / (2.0 * PI) * (x / (2.0 * dist)).ln() - 0.25 * yreg;
                add(sigma, (smooth + log_coeff * ln_w) * (w * jac) + log_coeff * (wl * jac));
            }
        }
    }
    Ok(())
}

/// Row `p` of `A_{j,i}`; `refine` splits every panel into that many pieces.
fn block_row(
    scene: &Scene,
    grids: &[BemGrid],
    j: usize,
    i: usize,
    p: usize,
    refine: usize,
    rules: &SingularRules,
) -> Result<Vec<Complex64>> {
    let k = scene.wavenumber();
    let gi = &grids[i];
    let curve = scene.obstacle(i);
    let target = grids[j].collocation[p];
    let n = gi.n;
    let h = gi.step;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for m in 0..n {
        let touches = j == i && (m == p || (m + 1) % n == p);
        if !touches && refine == 1 {
            let nodes = &gi.panel_nodes[m * gi.nodes_per_panel..(m + 1) * gi.nodes_per_panel];
            for node in nodes {
                let rho = curves::distance(target, node.point);
                if !(rho > 0.0) {
                    return Err(Error::NonPositiveArgument(rho));
                }
                let v = kernel(k, rho)? * node.weight;
                out[m] += v * (1.0 - node.u);
                out[(m + 1) % n] += v * node.u;
            }
            continue;
        }
        let start = m as f64 * h;
        // parameter of the singular point in panel coordinates
        let singular = if touches {
            Some(if m == p { start } else { start + h })
        } else {
            None
        };
        let sub = h / refine as f64;
        for s in 0..refine {
            let (a, b) = (start + s as f64 * sub, start + (s + 1) as f64 * sub);
            let log_at = singular.filter(|&s0| (s0 - a).abs() < 0.5 * sub || (s0 - b).abs() < 0.5 * sub);
            add_subpanel(&mut out, curve, k, target, m, h, (a, b), log_at, rules)?;
        }
    }
    Ok(out)
}

/// Dense block `A_{j,i}`, with a refinement check on three sampled rows.
pub fn assemble_block(scene: &Scene, grids: &[BemGrid], j: usize, i: usize) -> Result<DMatrix<Complex64>> {
    let rules = SingularRules::new();
    let nj = grids[j].n;
    let rows: Vec<Vec<Complex64>> = (0..nj)
        .into_par_iter()
        .map_init(SingularRules::new, |r, p| block_row(scene, grids, j, i, p, 1, r))
        .collect::<Result<_>>()?;
    let scale = rows
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.norm()));
    for &p in &[0, nj / 3, (2 * nj) / 3] {
        let fine = block_row(scene, grids, j, i, p, 2, &rules)?;
        let diff = fine
            .iter()
            .zip(&rows[p])
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        if diff > QUADRATURE_CHECK_TOL * scale {
            return Err(Error::QuadratureNotConverged(format!(
                "block ({j}, {i}) row {p}: panel refinement changes entries by {diff:e} (scale {scale:e})"
            )));
        }
    }
    Ok(DMatrix::from_fn(nj, grids[i].n, |r, c| rows[r][c]))
}

/// Lower bound on the 1-norm condition number from a few fixed probes.
fn condition_estimate(a: &DMatrix<Complex64>, lu: &LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|c| a.column(c).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let probes = [
        DVector::from_element(n, Complex64::new(1.0, 0.0)),
        DVector::from_fn(n, |r, _| Complex64::new(if r % 2 == 0 { 1.0 } else { -1.0 }, 0.0)),
        DVector::from_fn(n, |r, _| Complex64::from_polar(1.0, 2.0 * PI * 0.381_966 * (r * r) as f64)),
    ];
    let mut inv = 0.0f64;
    for v in &probes {
        match lu.solve(v) {
            Some(x) => {
                let ratio = x.iter().map(|z| z.norm()).sum::<f64>() / v.iter().map(|z| z.norm()).sum::<f64>();
                inv = inv.max(ratio);
            }
            None => return f64::INFINITY,
        }
    }
    norm1 * inv
}

/// Blocks needed for the cycle `1 → 2 → … → J → 1`: the factored diagonal
/// blocks and the couplings `A_{j, j−1}` (cyclic).
pub struct BlockSystem {
    pub grids: Vec<BemGrid>,
    pub wavenumber: f64,
    diag: Vec<LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>>,
    pub diag_conditions: Vec<f64>,
    /// `coupling[j] = A_{j, j−1}`.
    pub coupling: Vec<DMatrix<Complex64>>,
}

impl std::fmt::Debug for BlockSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockSystem")
            .field("nodes", &self.grids.iter().map(|g| g.n).collect::<Vec<_>>())
            .field("wavenumber", &self.wavenumber)
            .field("diag_conditions", &self.diag_conditions)
            .finish()
    }
}

impl BlockSystem {
    pub fn build(scene: &Scene, opts: &BemOptions) -> Result<BlockSystem> {
        let k = scene.wavenumber();
        let grids: Vec<BemGrid> = scene
            .obstacles()
            .iter()
            .map(|c| BemGrid::new(c, node_count(c, k, opts)))
            .collect();
        let n = scene.len();
        let mut diag = Vec::with_capacity(n);
        let mut diag_conditions = Vec::with_capacity(n);
        let mut coupling = Vec::with_capacity(n);
        for j in 0..n {
            let a = assemble_block(scene, &grids, j, j)?;
            let lu = a.clone().lu();
            let cond = condition_estimate(&a, &lu);
            if !(cond <= MAX_BLOCK_CONDITION) {
                return Err(Error::SingularBlock { block: j, condition: cond });
            }
            diag.push(lu);
            diag_conditions.push(cond);
            coupling.push(assemble_block(scene, &grids, j, (j + n - 1) % n)?);
        }
        Ok(BlockSystem {
            grids,
            wavenumber: k,
            diag,
            diag_conditions,
            coupling,
        })
    }

    pub fn len(&self) -> usize {
        self.grids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grids.is_empty()
    }

    /// `A_{j,j}⁻¹ b`.
    pub fn solve_diag(&self, j: usize, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.diag[j].solve(b).ok_or(Error::SingularBlock {
            block: j,
            condition: f64::INFINITY,
        })
    }

    /// `A_{j,j}⁻¹ A_{j,j−1} v`: density induced on `j` by `v` on `j − 1`.
    pub fn propagate(&self, j: usize, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.solve_diag(j, &(&self.coupling[j] * v))
    }

    pub fn cycle_operator(&self) -> CycleOperator<'_> {
        CycleOperator { system: self }
    }
}

/// `M = (A_{1,1}⁻¹A_{1,J}) ⋯ (A_{2,2}⁻¹A_{2,1})`, applied in factored form.
pub struct CycleOperator<'a> {
    system: &'a BlockSystem,
}

impl CycleOperator<'_> {
    pub fn dim(&self) -> usize {
        self.system.grids[0].n
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let n = self.system.len();
        let mut w = v.clone();
        for j in (1..n).chain(std::iter::once(0)) {
            w = self.system.propagate(j, &w)?;
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: Complex64,
    /// Unit 2-norm eigenvector on obstacle 1.
    pub vector: DVector<Complex64>,
    pub iterations: usize,
    pub change: f64,
}

/// Power iteration from the all-ones vector with a Rayleigh-quotient
/// eigenvalue; iterates are phase-aligned before comparing.
pub fn dominant_eigenpair(op: &CycleOperator<'_>, tol: f64, max_iter: usize) -> Result<Eigenpair> {
    let n = op.dim();
    let mut v = DVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let w = op.apply(&v)?;
        let lambda = v.dotc(&w);
        let norm = w.norm();
        if !(norm > 0.0) {
            return Err(Error::EigenNotConverged { iterations: it, change });
        }
        let mut next = w / Complex64::new(norm, 0.0);
        let overlap = v.dotc(&next);
        if overlap.norm() > 0.0 {
            next *= overlap.conj() / overlap.norm();
        }
        change = (&next - &v).norm();
        v = next;
        if change <= tol {
            return Ok(Eigenpair {
                value: lambda,
                vector: v,
                iterations: it,
                change,
            });
        }
    }
    Err(Error::EigenNotConverged {
        iterations: max_iter,
        change,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleMode {
    pub eigenvalue: Complex64,
    /// Nodal densities `Ṽ_j`, one per obstacle.
    pub densities: Vec<DVector<Complex64>>,
    /// `‖A_{1,1}⁻¹A_{1,J} Ṽ_J − λ Ṽ_1‖ / ‖Ṽ_1‖`.
    pub closure_residual: f64,
}

/// `Ṽ_{j+1} = A_{j+1,j+1}⁻¹ A_{j+1,j} Ṽ_j`, closing the loop back on obstacle 1.
pub fn reconstruct_mode(system: &BlockSystem, pair: &Eigenpair) -> Result<CycleMode> {
    let n = system.len();
    let mut densities = vec![pair.vector.clone()];
    for j in 1..n {
        let next = system.propagate(j, &densities[j - 1])?;
        densities.push(next);
    }
    let closed = system.propagate(0, &densities[n - 1])?;
    let closure_residual = (closed - &pair.vector * pair.value).norm() / pair.vector.norm();
    Ok(CycleMode {
        eigenvalue: pair.value,
        densities,
        closure_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSamples {
    /// Offsets `τ − τ_j*` of the samples, ascending.
    pub offsets: Vec<f64>,
    pub values: Vec<f64>,
    /// Half-width actually covered on each side (`[left, right]`).
    pub extent: [f64; 2],
    /// True when low amplitude stopped the extraction inside the window.
    pub shrunk: bool,
}

impl PhaseSamples {
    /// Linear interpolation at offset `h`, if covered.
    pub fn at(&self, h: f64) -> Option<f64> {
        let i = self.offsets.partition_point(|&o| o < h);
        if i == 0 {
            return (self.offsets[0] == h).then(|| self.values[0]);
        }
        if i == self.offsets.len() {
            return None;
        }
        let (o0, o1) = (self.offsets[i - 1], self.offsets[i]);
        let t = (h - o0) / (o1 - o0);
        Some(self.values[i - 1] * (1.0 - t) + self.values[i] * t)
    }
}

/// Phase of `Ṽ_j` from successive argument differences divided by `k`,
/// accumulated outward from `τ_j*` with `2π` jumps removed, and shifted so
/// that the interpolated value at `τ_j*` equals `anchor`.
pub fn extract_phase(
    mode: &CycleMode,
    grid: &BemGrid,
    j: usize,
    k: f64,
    center: f64,
    anchor: f64,
    window: f64,
) -> PhaseSamples {
    let v = &mode.densities[j];
    let n = grid.n;
    let peak = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let floor = 1e-8 * peak;
    let [(left, _), (right, _)] = grid.hat_weights(center);
    let raw = |q: usize| v[q % n];
    let offset = |steps: isize, base: usize| {
        curves::param_diff(grid.node(base), center) + steps as f64 * grid.step
    };
    let unwrap = |d: f64| d - 2.0 * PI * (d / (2.0 * PI)).round();

    // the two nodes bracketing the center, joined by one unwrapped step
    let base_arg = raw(left).arg();
    let mut right_phase = vec![(offset(0, right), unwrap(raw(right).arg() - base_arg) / k)];
    let mut left_phase = vec![(offset(0, left), 0.0)];
    let mut shrunk = raw(left).norm() < floor || raw(right).norm() < floor;
    let max_steps = (window / grid.step).floor() as isize + 1;
    for (side, list, start) in [(1isize, &mut right_phase, right), (-1isize, &mut left_phase, left)] {
        let mut prev = raw(start);
        for s in 1..max_steps {
            let q = (start as isize + side * s).rem_euclid(n as isize) as usize;
            let off = offset(side * s, start);
            if off.abs() > window {
                break;
            }
            let cur = raw(q);
            if cur.norm() < floor {
                shrunk = true;
                break;
            }
            let last = list.last().unwrap().1;
            list.push((off, last + unwrap(cur.arg() - prev.arg()) / k));
            prev = cur;
        }
    }
    let mut samples: Vec<(f64, f64)> = left_phase.into_iter().rev().chain(right_phase).collect();
    samples.dedup_by(|a, b| a.0 == b.0);
    // interpolate at the center between the bracketing pair
    let (l_off, l_val) = samples.iter().rev().find(|s| s.0 <= 0.0).copied().unwrap_or(samples[0]);
    let (r_off, r_val) = samples.iter().find(|s| s.0 > 0.0).copied().unwrap_or(*samples.last().unwrap());
    let at_center = if r_off > l_off {
        l_val + (r_val - l_val) * (0.0 - l_off) / (r_off - l_off)
    } else {
        l_val
    };
    let shift = anchor - at_center;
    let extent = [-samples[0].0, samples.last().unwrap().0];
    PhaseSamples {
        offsets: samples.iter().map(|s| s.0).collect(),
        values: samples.iter().map(|s| s.1 + shift).collect(),
        extent,
        shrunk,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Incident {
    /// `exp(i k d·x)` for a unit direction `d`.
    PlaneWave { direction: Point },
    /// `(i/4) H₀⁽¹⁾(k ‖x − x₀‖)`.
    PointSource { location: Point },
}

impl Incident {
    pub fn eval(&self, k: f64, x: Point) -> Result<Complex64> {
        match *self {
            Incident::PlaneWave { direction } => {
                let norm = direction[0].hypot(direction[1]);
                Ok(Complex64::from_polar(1.0, k * (direction[0] * x[0] + direction[1] * x[1]) / norm))
            }
            Incident::PointSource { location } => kernel(k, curves::distance(x, location)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reflection {
    pub index: usize,
    pub obstacle: usize,
    pub density: DVector<Complex64>,
    pub peak_tau: f64,
    pub peak_amplitude: f64,
}

/// Single-scattering iteration: reflection 0 on `start` solves
/// `A_{s,s} m = −u_inc`; reflection `n` on the next obstacle of the cycle
/// solves `A_{j,j} m = −A_{j,j−1} m^{(n−1)}`.
pub fn iterate_scattering(
    system: &BlockSystem,
    incident: &Incident,
    start: usize,
    n_reflections: usize,
) -> Result<Vec<Reflection>> {
    assert!(n_reflections >= 1);
    let k = system.wavenumber;
    let n = system.len();
    let g = &system.grids[start];
    let rhs = DVector::from_iterator(
        g.n,
        g.collocation
            .iter()
            .map(|&x| incident.eval(k, x).map(|u| -u))
            .collect::<Result<Vec<_>>>()?,
    );
    let mut out = vec![summarize(0, start, g, system.solve_diag(start, &rhs)?)];
    let mut obstacle = start;
    for r in 1..=n_reflections {
        obstacle = (obstacle + 1) % n;
        let prev = &out.last().unwrap().density;
        let m = -system.propagate(obstacle, prev)?;
        out.push(summarize(r, obstacle, &system.grids[obstacle], m));
    }
    Ok(out)
}

fn summarize(index: usize, obstacle: usize, grid: &BemGrid, density: DVector<Complex64>) -> Reflection {
    let (q, amp) = density
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (q, z)| if z.norm() > best.1 { (q, z.norm()) } else { best });
    Reflection {
        index,
        obstacle,
        peak_tau: grid.node(q),
        peak_amplitude: amp,
        density,
    }
}
