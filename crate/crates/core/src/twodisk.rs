//! Independent oracles for two mirror-symmetric disks.
//!
//! `Γ₁(τ) = r (sin 2πτ, cos 2πτ)` and `Γ₂(τ) = (r sin 2πτ, D − r cos 2πτ)`
//! with `D = d + 2r`, so the orbit is `τ₁* = τ₂* = 0` with leg length `d`.
//! By symmetry `Δ(σ, τ) = ‖Γ₁(σ) − Γ₂(τ)‖` is symmetric and both obstacles
//! share one stationary-point map `χ`.

use std::f64::consts::PI;

use crate::curves::{Curve, Orientation};
use crate::error::{Error, Result};
use crate::orbit::Scene;
use crate::quadrature;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoDiskConfig {
    pub r: f64,
    pub d: f64,
}

impl Default for TwoDiskConfig {
    fn default() -> Self {
        TwoDiskConfig { r: 0.5, d: 1.0 }
    }
}

impl TwoDiskConfig {
    pub fn new(r: f64, d: f64) -> Result<TwoDiskConfig> {
        if !(r > 0.0 && r.is_finite() && d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidScene(format!("two-disk radius {r} and gap {d} must be positive")));
        }
        Ok(TwoDiskConfig { r, d })
    }

    fn center_distance(&self) -> f64 {
        self.d + 2.0 * self.r
    }

    pub fn curves(&self) -> Result<[Curve; 2]> {
        Ok([
            Curve::circle([0.0, 0.0], self.r, Orientation::Positive, 0.0)?,
            Curve::circle([0.0, self.center_distance()], self.r, Orientation::Negative, 0.0)?,
        ])
    }

    pub fn scene(&self, k: f64, check_separation: bool) -> Result<Scene> {
        let [a, b] = self.curves()?;
        Scene::new(vec![a, b], k, check_separation)
    }

    pub fn gamma1(&self, tau: f64) -> [f64; 2] {
        let t = TWO_PI * tau;
        [self.r * t.sin(), self.r * t.cos()]
    }

    pub fn gamma2(&self, tau: f64) -> [f64; 2] {
        let t = TWO_PI * tau;
        [self.r * t.sin(), self.center_distance() - self.r * t.cos()]
    }

    pub fn distance(&self, sigma: f64, tau: f64) -> f64 {
        self.d + self.distance_excess(sigma, tau)
    }

    /// `Δ(σ, τ) − d`, evaluated without cancellation near the orbit.
    pub fn distance_excess(&self, sigma: f64, tau: f64) -> f64 {
        let (a, b) = (TWO_PI * sigma, TWO_PI * tau);
        let dx = self.r * (a.sin() - b.sin());
        let e = 2.0 * self.r * ((0.5 * a).sin().powi(2) + (0.5 * b).sin().powi(2));
        let sq = dx * dx + 2.0 * self.d * e + e * e;
        sq / ((self.d * self.d + sq).sqrt() + self.d)
    }

    /// `(∂_σ Δ, ∂_σσ Δ, ∂_στ Δ)`.
    fn distance_derivatives(&self, sigma: f64, tau: f64) -> (f64, f64, f64) {
        let (a, b) = (TWO_PI * sigma, TWO_PI * tau);
        let p = self.gamma1(sigma);
        let q = self.gamma2(tau);
        let w = TWO_PI * self.r;
        let dp = [w * a.cos(), -w * a.sin()];
        let ddp = [-TWO_PI * w * a.sin(), -TWO_PI * w * a.cos()];
        let dq = [w * b.cos(), w * b.sin()];
        let v = [p[0] - q[0], p[1] - q[1]];
        let dist = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let vp = v[0] * dp[0] + v[1] * dp[1];
        let vq = v[0] * dq[0] + v[1] * dq[1];
        let d1 = vp / dist;
        let d11 = (dp[0] * dp[0] + dp[1] * dp[1] + v[0] * ddp[0] + v[1] * ddp[1]) / dist - vp * vp / dist.powi(3);
        let d12 = -(dp[0] * dq[0] + dp[1] * dq[1]) / dist + vp * vq / dist.powi(3);
        (d1, d11, d12)
    }

    /// `(ζ, ξ)`: distance from `Γ₁(τ)` to `Γ₂(0)` and to the nearest point of `Γ₂`.
    pub fn zeta_xi(&self, tau: f64) -> (f64, f64) {
        let p = self.gamma1(tau);
        let q = self.gamma2(0.0);
        let zeta = (p[0] - q[0]).hypot(p[1] - q[1]);
        let xi = p[0].hypot(p[1] - self.center_distance()) - self.r;
        (zeta, xi)
    }
}

/// Exact phase and `χ` coefficients for `r = 1/2`, `d = 1`: `c[i]` for
/// `i = 0..=8` and `a[i]` for `i = 0..=7` (odd `c` and even `a` vanish).
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub c: [f64; 9],
    pub a: [f64; 8],
}

/// Values of `√2π²`, `−(11/12)√2π⁴`, `2783√2π⁶/2520`, `−358021√2π⁸/205632`,
/// `3−2√2`, `−7π²(17√2−24)`, `−(π⁴/84)(1205811√2−1705312)` and
/// `−(π⁶/128520)(289615597399√2−409578202752)`, rounded from 50-digit
/// evaluations (the last two cancel badly in double precision).
pub fn closed_form_coeffs() -> ClosedForm {
    ClosedForm {
        c: [
            1.0,
            0.0,
            13.957728399277759068,
            0.0,
            -126.2774861688282245,
            0.0,
            1501.5054038683000799,
            0.0,
            -23363.170646919331406,
        ],
        a: [
            0.0,
            0.1715728752538099024,
            0.0,
            -2.8761401310410811653,
            0.0,
            43.753080620394147114,
            0.0,
            -770.2218436887603012,
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiOptions {
    /// Grid covers `[−half_width, half_width]`.
    pub half_width: f64,
    /// Number of grid points (odd, so that `τ = 0` is a node).
    pub points: usize,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for ChiOptions {
    fn default() -> Self {
        ChiOptions {
            half_width: 0.2,
            points: 801,
            tol: 1e-12,
            max_sweeps: 100,
        }
    }
}

/// `χ` sampled on a uniform grid, interpolated by local cubics.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiGrid {
    pub config: TwoDiskConfig,
    pub half_width: f64,
    pub step: f64,
    pub values: Vec<f64>,
    pub sweeps: usize,
    pub max_residual: f64,
}

impl ChiGrid {
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.node(i))
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.step
    }

    fn stencil(&self, x: f64) -> Option<(usize, f64)> {
        let n = self.values.len();
        let u = (x + self.half_width) / self.step;
        if !(u >= -1e-9 && u <= (n - 1) as f64 + 1e-9) {
            return None;
        }
        let i = (u.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        Some((i, u - i as f64))
    }

    /// Interpolated `χ(x)`, or `None` outside the grid.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let (i, u) = self.stencil(x)?;
        let v = &self.values[i..i + 4];
        // Lagrange weights on nodes 0,1,2,3
        let w = [
            -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
            u * (u - 2.0) * (u - 3.0) / 2.0,
            -u * (u - 1.0) * (u - 3.0) / 2.0,
            u * (u - 1.0) * (u - 2.0) / 6.0,
        ];
        Some(w.iter().zip(v).map(|(a, b)| a * b).sum())
    }

    /// Derivative of the interpolant.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        let (i, u) = self.stencil(x)?;
        let v = &self.values[i..i + 4];
        let w = [
            -(3.0 * u * u - 12.0 * u + 11.0) / 6.0,
            (3.0 * u * u - 10.0 * u + 6.0) / 2.0,
            -(3.0 * u * u - 8.0 * u + 3.0) / 2.0,
            (3.0 * u * u - 6.0 * u + 2.0) / 6.0,
        ];
        Some(w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / self.step)
    }

    /// Residual of the equal-angle equation at node `i`.
    pub fn residual(&self, i: usize) -> Result<f64> {
        let x = self.values[i];
        let inner = self.eval(x).ok_or(Error::OutsideChiImage { tau: x })?;
        let (g1, _, _) = self.config.distance_derivatives(x, inner);
        let (g2, _, _) = self.config.distance_derivatives(x, self.node(i));
        Ok(g1 + g2)
    }

    /// Fourth-order central difference of the grid values at `τ = 0`.
    pub fn slope_at_zero(&self) -> f64 {
        let m = self.values.len() / 2;
        let v = &self.values;
        (8.0 * (v[m + 1] - v[m - 1]) - (v[m + 2] - v[m - 2])) / (12.0 * self.step)
    }

    /// `χ⁻¹(x)` by bisection on the monotone grid range.
    pub fn invert(&self, x: f64) -> Result<f64> {
        let (lo_v, hi_v) = (self.values[0], *self.values.last().unwrap());
        if !(x >= lo_v && x <= hi_v) {
            return Err(Error::OutsideChiImage { tau: x });
        }
        let (mut lo, mut hi) = (-self.half_width, self.half_width);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid).unwrap() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Solves `∂_σΔ(χ(τ), χ(χ(τ))) + ∂_σΔ(χ(τ), τ) = 0` on a uniform grid by
/// sweeps of pointwise damped Newton, with `χ∘χ` taken from the previous
/// sweep's interpolant. Starts from `χ(τ) = (3 − 2√2) τ`.
pub fn solve_chi(config: TwoDiskConfig, opts: &ChiOptions) -> Result<ChiGrid> {
    assert!(opts.points >= 5 && opts.points % 2 == 1, "grid needs an odd number of points >= 5");
    let step = 2.0 * opts.half_width / (opts.points - 1) as f64;
    let slope = 3.0 - 8f64.sqrt();
    let mut grid = ChiGrid {
        config,
        half_width: opts.half_width,
        step,
        values: (0..opts.points).map(|i| slope * (-opts.half_width + i as f64 * step)).collect(),
        sweeps: 0,
        max_residual: f64::INFINITY,
    };
    let max_residual = |g: &ChiGrid| -> Result<f64> {
        (0..g.values.len()).try_fold(0.0f64, |m, i| Ok(m.max(g.residual(i)?.abs())))
    };
    grid.max_residual = max_residual(&grid)?;
    while grid.max_residual > opts.tol {
        if grid.sweeps == opts.max_sweeps {
            return Err(Error::ChiNotConverged {
                iterations: grid.sweeps,
                residual: grid.max_residual,
            });
        }
        grid.sweeps += 1;
        let frozen = grid.clone();
        for i in 0..grid.values.len() {
            grid.values[i] = newton_point(&frozen, frozen.node(i), frozen.values[i], opts.tol)?;
        }
        grid.max_residual = max_residual(&grid)?;
    }
    Ok(grid)
}

fn newton_point(frozen: &ChiGrid, tau: f64, start: f64, tol: f64) -> Result<f64> {
    let cfg = frozen.config;
    let eval = |x: f64| -> Result<(f64, f64)> {
        let inner = frozen.eval(x).ok_or(Error::OutsideChiImage { tau: x })?;
        let dinner = frozen.derivative(x).unwrap();
        let (a1, a11, a12) = cfg.distance_derivatives(x, inner);
        let (b1, b11, _) = cfg.distance_derivatives(x, tau);
        Ok((a1 + b1, a11 + a12 * dinner + b11))
    };
    let mut x = start;
    let (mut g, mut dg) = eval(x)?;
    for _ in 0..50 {
        if g.abs() <= 0.1 * tol {
            break;
        }
        let step = -g / dg;
        let mut t = 1.0;
        loop {
            let trial = x + t * step;
            match eval(trial) {
                Ok((tg, tdg)) if tg.abs() < g.abs() => {
                    x = trial;
                    g = tg;
                    dg = tdg;
                    break;
                }
                _ if t < 1e-8 => return Ok(x),
                _ => t *= 0.5,
            }
        }
    }
    Ok(x)
}

/// Iterates `χ` from `τ`, stopping once the point is within `1e-16` of
/// the orbit or after `max_points` entries.
fn chi_chain(grid: &ChiGrid, tau: f64, max_points: usize) -> Result<Vec<f64>> {
    let mut chain = vec![tau];
    let mut x = tau;
    while chain.len() < max_points {
        let next = grid.eval(x).ok_or(Error::OutsideChiImage { tau: x })?;
        if !(next.abs() < x.abs() || x == 0.0) {
            return Err(Error::NotContracting { tau });
        }
        chain.push(next);
        x = next;
    }
    Ok(chain)
}

/// `φ(τ) − d` from the reflected-ray sum over at most `max_reflections`
/// pairs of legs, dropping the remainder once a pair contributes less
/// than `1e-16`.
pub fn phi_excess_geometric_sum(grid: &ChiGrid, tau: f64, max_reflections: usize) -> Result<f64> {
    assert!(max_reflections >= 1);
    let cfg = grid.config;
    let chain = chi_chain(grid, tau, 2 * max_reflections + 1)?;
    let mut sum = 0.0;
    for r in 0..max_reflections {
        let term = cfg.distance_excess(chain[2 * r + 1], chain[2 * r])
            + cfg.distance_excess(chain[2 * r + 1], chain[2 * r + 2]);
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    Ok(sum)
}

/// `φ(τ)` with `φ(0) = d`.
pub fn phi_geometric_sum(grid: &ChiGrid, tau: f64, max_reflections: usize) -> Result<f64> {
    Ok(grid.config.d + phi_excess_geometric_sum(grid, tau, max_reflections)?)
}

/// `φ(x) = d − ∫₀^{χ⁻¹(x)} ∂_σΔ(χ(t), t) χ'(t) dt`, integrated cell by cell
/// over the interpolated `χ`.
pub fn phi_via_chi_integral(grid: &ChiGrid, x: f64) -> Result<f64> {
    let upper = grid.invert(x)?;
    let cfg = grid.config;
    let integrand = |t: f64| {
        let c = grid.eval(t).unwrap();
        let (d1, _, _) = cfg.distance_derivatives(c, t);
        d1 * grid.derivative(t).unwrap()
    };
    let (sign, a, b) = if upper >= 0.0 { (1.0, 0.0, upper) } else { (-1.0, upper, 0.0) };
    // interpolant pieces switch at grid nodes, so integrate node to node
    let mut cuts = vec![a];
    let first = ((a + grid.half_width) / grid.step).floor() as usize + 1;
    for i in first..grid.values.len() {
        let t = grid.node(i);
        if t >= b {
            break;
        }
        if t > a {
            cuts.push(t);
        }
    }
    cuts.push(b);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += quadrature::adaptive(&integrand, w[0], w[1], 1e-15, 20)
            .ok_or_else(|| Error::QuadratureNotConverged(format!("χ integral on [{}, {}]", w[0], w[1])))?;
    }
    Ok(cfg.d - sign * total)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn excess_matches_direct_distance() {
        let c = TwoDiskConfig::default();
        for &(s, t) in &[(0.01, -0.02), (0.1, 0.05), (0.3, -0.2)] {
            let p = c.gamma1(s);
            let q = c.gamma2(t);
            let direct = (p[0] - q[0]).hypot(p[1] - q[1]);
            assert!((c.distance(s, t) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let c = TwoDiskConfig::default();
        let (s, t, h) = (0.03, -0.05, 1e-5);
        let (d1, d11, d12) = c.distance_derivatives(s, t);
        let fd1 = (c.distance(s + h, t) - c.distance(s - h, t)) / (2.0 * h);
        assert!((d1 - fd1).abs() < 1e-8);
        let fd11 = (c.distance_derivatives(s + h, t).0 - c.distance_derivatives(s - h, t).0) / (2.0 * h);
        assert!((d11 - fd11).abs() < 1e-6 * d11.abs());
        let fd12 = (c.distance_derivatives(s, t + h).0 - c.distance_derivatives(s, t - h).0) / (2.0 * h);
        assert!((d12 - fd12).abs() < 1e-6 * d12.abs());
    }

    #[test]
    fn zeta_xi_hand_values() {
        let c = TwoDiskConfig::default();
        let (z, x) = c.zeta_xi(0.0);
        assert!((z - 1.0).abs() < 1e-15 && (x - 1.0).abs() < 1e-15);
        let (z, x) = c.zeta_xi(0.25);
        assert!((z - 10f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((x - (17f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn interpolant_is_exact_for_cubics() {
        let mut g = solve_chi(TwoDiskConfig::default(), &ChiOptions { points: 21, tol: 1e-6, ..Default::default() }).unwrap();
        let f = |x: f64| 1.0 + x - 3.0 * x * x + 7.0 * x * x * x;
        g.values = g.nodes().map(f).collect();
        for &x in &[-0.2, -0.123, 0.0, 0.017, 0.2] {
            assert!((g.eval(x).unwrap() - f(x)).abs() < 1e-14);
            let df = 1.0 - 6.0 * x + 21.0 * x * x;
            assert!((g.derivative(x).unwrap() - df).abs() < 1e-12);
        }
        assert!(g.eval(0.3).is_none());
    }
}
