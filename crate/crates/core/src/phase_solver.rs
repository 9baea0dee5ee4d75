//! Taylor coefficients of the limiting phases `φ_j` and of the
//! stationary-point maps `χ_j` around a periodic orbit.
//!
//! Writing `s_j(t) = χ_j(τ_{j+1}* + t) − τ_j* = Σ_{n≥1} a_{j,1,n} tⁿ` and
//! `φ_j(τ_j* + s) = Σ_i c_{j,i} sⁱ`, the two residual series of leg `j` are
//!
//! ```text
//! ω_j(t) = φ_j(χ_j) + Δ_{j,j+1}(χ_j, τ_{j+1}) − φ_{j+1}(τ_{j+1})
//! ψ_j(t) = ∂Δ_{j,j+1}/∂τ_j (χ_j, τ_{j+1}) + φ_j'(χ_j)
//! ```
//!
//! Order by order, `ω_{j,i} = 0` and `ψ_{j,i−1} = 0` determine `c_{j,i}` and
//! `a_{j,1,i−1}` for all `j` at once: explicitly at `i = 1`, by Newton on a
//! quadratic system at `i = 2`, and by a `2J × 2J` linear solve for `i ≥ 3`.
//! `ω_{j,0}` is left free; the constants are fixed by `c_{j,0} = d_j`.

use crate::curves;
use crate::dist_series::{all_f_tables, DistanceSeries};
use crate::error::{Error, Result};
use crate::linalg::Lu;
use crate::orbit::{PeriodicOrbit, Scene};

pub const DEFAULT_TRUST_RADIUS: f64 = 0.15;
const ORDER2_MAX_STEPS: usize = 100;
const ORDER2_TOL: f64 = 1e-12;
const LINEAR_TOL: f64 = 1e-11;
const MAX_CONDITION: f64 = 1e14;
const FIRST_ORDER_TOL: f64 = 1e-9;

/// Phase coefficients `c_{j,i}`, `i = 0..=order`, per obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    /// Orbit parameters `τ_j*` (expansion centers).
    pub centers: Vec<f64>,
    pub c: Vec<Vec<f64>>,
    pub trust_radius: f64,
}

/// Result of a phase evaluation; `within_trust` is false when the point is
/// farther from the center than the trust radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseValue {
    pub value: f64,
    pub within_trust: bool,
}

impl PhaseSeries {
    pub fn order(&self) -> usize {
        self.c[0].len() - 1
    }

    /// `φ_j(τ) − c_{j,0}` without the cancellation of subtracting the constant.
    pub fn excess(&self, j: usize, tau: f64) -> f64 {
        let h = curves::param_diff(tau, self.centers[j]);
        self.c[j][1..].iter().rev().fold(0.0, |acc, &c| acc * h + c) * h
    }

    /// Same series cut after degree `order`.
    pub fn truncated(&self, order: usize) -> PhaseSeries {
        PhaseSeries {
            centers: self.centers.clone(),
            c: self.c.iter().map(|c| c[..=order.min(c.len() - 1)].to_vec()).collect(),
            trust_radius: self.trust_radius,
        }
    }
}

/// Horner evaluation of `Σ_i c_{j,i} (τ − τ_j*)ⁱ`.
pub fn eval_phase(series: &PhaseSeries, j: usize, tau: f64) -> PhaseValue {
    let h = curves::param_diff(tau, series.centers[j]);
    let value = series.c[j].iter().rev().fold(0.0, |acc, &c| acc * h + c);
    PhaseValue {
        value,
        within_trust: h.abs() <= series.trust_radius,
    }
}

/// Coefficients `a_{j,1,i}` of `χ_j` about `τ_{j+1}*`, `i = 0..order`, with
/// `a_{j,1,0} = τ_j*`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSeries {
    pub a: Vec<Vec<f64>>,
}

impl ChiSeries {
    /// Power table `a_{j,m,l}`: coefficient of `t^l` in `(χ_j − τ_j*)^m`,
    /// for `m ≤ max_power`, `l ≤ max_index`.
    pub fn power_table(&self, j: usize, max_power: usize, max_index: usize) -> Vec<Vec<f64>> {
        let mut s = self.a[j].clone();
        s[0] = 0.0;
        power_table(&s, max_power, max_index)
    }
}

/// `table[m][l]` = coefficient of `t^l` in `s(t)^m`, where `s[0]` must be 0.
fn power_table(s: &[f64], max_power: usize, max_index: usize) -> Vec<Vec<f64>> {
    let coef = |n: usize| if n < s.len() { s[n] } else { 0.0 };
    let mut table = vec![vec![0.0; max_index + 1]; max_power + 1];
    table[0][0] = 1.0;
    for m in 1..=max_power {
        for l in m..=max_index {
            // a_{m,l} = Σ_k a_{m−1,k} a_{1,l−k}
            let mut acc = 0.0;
            for k in (m - 1)..l {
                acc += table[m - 1][k] * coef(l - k);
            }
            table[m][l] = acc;
        }
    }
    table
}

/// Residual coefficients `ω_{j,i}` and `ψ_{j,i}` of the solved series.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub omega: Vec<Vec<f64>>,
    pub psi: Vec<Vec<f64>>,
}

impl Residuals {
    /// Largest `|ω_{j,i}|` (`i ≥ 1`) and `|ψ_{j,i}|` over all obstacles.
    pub fn max_abs(&self) -> f64 {
        let om = self
            .omega
            .iter()
            .flat_map(|w| w.iter().skip(1))
            .fold(0.0f64, |m, v| m.max(v.abs()));
        self.psi.iter().flatten().fold(om, |m, v| m.max(v.abs()))
    }
}

/// Series solved up to `solved_order` before a stage failed.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSeries {
    pub solved_order: usize,
    pub phase: PhaseSeries,
    pub chi: ChiSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution {
    pub phase: PhaseSeries,
    pub chi: ChiSeries,
    pub residuals: Residuals,
    pub order2_iterations: usize,
    /// Condition estimates of the linear systems for `i = 3..=order`.
    pub conditions: Vec<f64>,
}

/// Working coefficient state: `c[j][i]` and `s[j][n] = a_{j,1,n}` (`s[j][0] = 0`).
#[derive(Debug, Clone)]
struct State {
    c: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
}

/// `ω_{j,i}` from the general convolution formula.
fn omega(f: &DistanceSeries, c: &[f64], c_next: &[f64], s: &[f64], i: usize) -> f64 {
    let pow = power_table(s, i, i);
    let cget = |v: &[f64], m: usize| if m < v.len() { v[m] } else { 0.0 };
    let mut acc = -cget(c_next, i);
    for (m, row) in pow.iter().enumerate() {
        acc += cget(c, m) * row[i];
    }
    for q in 0..=i {
        for p in 0..=(i - q) {
            acc += f.get(p, q) * pow[p][i - q];
        }
    }
    acc
}

/// `ψ_{j,i}` from the general convolution formula.
fn psi(f: &DistanceSeries, c: &[f64], s: &[f64], i: usize) -> f64 {
    let pow = power_table(s, i, i);
    let cget = |m: usize| if m < c.len() { c[m] } else { 0.0 };
    let mut acc = 0.0;
    for q in 0..=i {
        for p in 1..=(i - q + 1) {
            acc += p as f64 * f.get(p, q) * pow[p - 1][i - q];
        }
    }
    for m in 1..=(i + 1) {
        acc += m as f64 * cget(m) * pow[m - 1][i];
    }
    acc
}

fn check_tables(tables: &[DistanceSeries], order: usize) {
    assert!(tables.len() >= 2, "need at least two legs");
    for t in tables {
        assert!(t.order >= order, "distance series of order {} < {order}", t.order);
    }
}

/// `c_{j,1} = −f_{j,2,1}`, cross-checked against `c_{j+1,1} = f_{j,1,2}`.
pub fn solve_order1(tables: &[DistanceSeries]) -> Result<Vec<f64>> {
    let n = tables.len();
    let c1: Vec<f64> = tables.iter().map(|t| -t.get(1, 0)).collect();
    for j in 0..n {
        let k = (j + 1) % n;
        let incoming = tables[j].get(0, 1);
        let scale = c1[k].abs().max(incoming.abs()).max(tables[j].get(0, 0));
        if (c1[k] - incoming).abs() > FIRST_ORDER_TOL * scale {
            return Err(Error::InconsistentFirstOrder {
                obstacle: k,
                from_outgoing: c1[k],
                from_incoming: incoming,
            });
        }
    }
    Ok(c1)
}

/// Converged second-order coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Order2 {
    /// `c_{j,2}`
    pub c2: Vec<f64>,
    /// `a_{j,1,1}`
    pub a11: Vec<f64>,
    pub iterations: usize,
}

fn order2_scale(tables: &[DistanceSeries]) -> f64 {
    tables
        .iter()
        .flat_map(|t| {
            (0..=2).flat_map(move |p| (0..=(2 - p)).map(move |q| t.get(p, q).abs()))
        })
        .fold(0.0, f64::max)
}

/// Residuals `(ψ_{j,1}, ω_{j,2})` of the quadratic system, stacked as
/// `[ψ_1..ψ_J, ω_1..ω_J]`.
fn order2_residual(tables: &[DistanceSeries], c2: &[f64], a: &[f64]) -> Vec<f64> {
    let n = tables.len();
    let mut r = vec![0.0; 2 * n];
    for j in 0..n {
        let f = &tables[j];
        let (f22, f31, f13) = (f.get(1, 1), f.get(2, 0), f.get(0, 2));
        r[j] = f22 + 2.0 * f31 * a[j] + 2.0 * c2[j] * a[j];
        r[n + j] = (c2[j] + f31) * a[j] * a[j] + f22 * a[j] - c2[(j + 1) % n] + f13;
    }
    r
}

/// Branch guards for a second-order root: `χ_j` must contract
/// (`|a_{j,1,1}| < |f_{j,1,2} / f_{j,2,1}|`, or `< 1` when `f_{j,2,1} = 0`)
/// and `c_{j,2} > 0`.
pub fn check_order2_guards(tables: &[DistanceSeries], c2: &[f64], a11: &[f64]) -> Result<()> {
    let scale = order2_scale(tables);
    for j in 0..tables.len() {
        let f21 = tables[j].get(1, 0);
        let f12 = tables[j].get(0, 1);
        let bound = if f21.abs() > 1e-12 * scale {
            (f12 / f21).abs()
        } else {
            1.0
        };
        if !(a11[j].abs() < bound) {
            return Err(Error::BranchRejected {
                obstacle: j,
                a11: a11[j],
                c2: c2[j],
                reason: format!("|a11| = {} does not satisfy the contraction bound {bound}", a11[j].abs()),
            });
        }
        if !(c2[j] > 0.0) {
            return Err(Error::BranchRejected {
                obstacle: j,
                a11: a11[j],
                c2: c2[j],
                reason: "second-order phase coefficient is not positive".into(),
            });
        }
    }
    Ok(())
}

/// Newton on the quadratic system from the standard starting point
/// `c_{j+1,2} = f_{j,1,3}`, `a_{j,1,1} = 0`.
pub fn solve_order2(tables: &[DistanceSeries]) -> Result<Order2> {
    let n = tables.len();
    let c2: Vec<f64> = (0..n).map(|j| tables[(j + n - 1) % n].get(0, 2)).collect();
    solve_order2_from(tables, &c2, &vec![0.0; n])
}

/// Newton on the quadratic system from an arbitrary starting point, followed
/// by the branch guards.
pub fn solve_order2_from(tables: &[DistanceSeries], c2_init: &[f64], a_init: &[f64]) -> Result<Order2> {
    let n = tables.len();
    let scale = order2_scale(tables).max(f64::MIN_POSITIVE);
    let tol = ORDER2_TOL * scale;
    let mut c2 = c2_init.to_vec();
    let mut a = a_init.to_vec();
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut r = order2_residual(tables, &c2, &a);
    let mut iterations = 0;
    while norm(&r) > tol {
        if iterations == ORDER2_MAX_STEPS {
            return Err(Error::SecondOrderNotConverged {
                iterations,
                residual: norm(&r),
            });
        }
        iterations += 1;
        // unknowns ordered [c_1..c_J, a_1..a_J]
        let mut jac = vec![0.0; 4 * n * n];
        let m = 2 * n;
        for j in 0..n {
            let f = &tables[j];
            let (f22, f31) = (f.get(1, 1), f.get(2, 0));
            jac[j * m + j] = 2.0 * a[j];
            jac[j * m + n + j] = 2.0 * f31 + 2.0 * c2[j];
            let row = (n + j) * m;
            jac[row + j] += a[j] * a[j];
            jac[row + (j + 1) % n] += -1.0;
            jac[row + n + j] = 2.0 * (c2[j] + f31) * a[j] + f22;
        }
        let lu = Lu::new(m, jac).ok_or(Error::SecondOrderNotConverged {
            iterations,
            residual: norm(&r),
        })?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = lu.solve(&neg);
        let mut t = 1.0;
        let base = norm(&r);
        loop {
            let tc: Vec<f64> = (0..n).map(|j| c2[j] + t * step[j]).collect();
            let ta: Vec<f64> = (0..n).map(|j| a[j] + t * step[n + j]).collect();
            let tr = order2_residual(tables, &tc, &ta);
            if norm(&tr) < base || t < 1e-6 {
                c2 = tc;
                a = ta;
                r = tr;
                break;
            }
            t *= 0.5;
        }
    }
    check_order2_guards(tables, &c2, &a)?;
    Ok(Order2 {
        c2,
        a11: a,
        iterations,
    })
}

/// Solves the `2J × 2J` linear system for `c_{j,i}` and `a_{j,1,i−1}`,
/// `i ≥ 3`, writing them into `state`. Returns the condition estimate.
fn solve_order_n_state(tables: &[DistanceSeries], state: &mut State, i: usize) -> Result<f64> {
    assert!(i >= 3);
    let n = tables.len();
    let m = 2 * n;
    for j in 0..n {
        state.c[j][i] = 0.0;
        state.s[j][i - 1] = 0.0;
    }
    let mut rhs = vec![0.0; m];
    for j in 0..n {
        let k = (j + 1) % n;
        rhs[j] = -omega(&tables[j], &state.c[j], &state.c[k], &state.s[j], i);
        rhs[n + j] = -psi(&tables[j], &state.c[j], &state.s[j], i - 1);
    }
    let mut mat = vec![0.0; m * m];
    for j in 0..n {
        let f = &tables[j];
        let a11 = state.s[j][1];
        let c2 = state.c[j][2];
        let (f22, f31) = (f.get(1, 1), f.get(2, 0));
        // ω_{j,i}: c_{j,i} a11^i − c_{j+1,i} + [2 a11 (c_{j,2} + f_{j,3,1}) + f_{j,2,2}] a_{j,1,i−1}
        mat[j * m + j] += a11.powi(i as i32);
        mat[j * m + (j + 1) % n] += -1.0;
        mat[j * m + n + j] = 2.0 * a11 * (c2 + f31) + f22;
        // ψ_{j,i−1}: i c_{j,i} a11^{i−1} + 2 (f_{j,3,1} + c_{j,2}) a_{j,1,i−1}
        mat[(n + j) * m + j] = i as f64 * a11.powi(i as i32 - 1);
        mat[(n + j) * m + n + j] = 2.0 * (f31 + c2);
    }
    let mat_norm = mat.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let lu = Lu::new(m, mat).ok_or(Error::SingularSystem {
        order: i,
        condition: f64::INFINITY,
    })?;
    let condition = lu.condition();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularSystem { order: i, condition });
    }
    let x = lu.solve(&rhs);
    for j in 0..n {
        state.c[j][i] = x[j];
        state.s[j][i - 1] = x[n + j];
    }
    let x_norm = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let rhs_norm = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = rhs_norm.max(mat_norm * x_norm).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for j in 0..n {
        let k = (j + 1) % n;
        worst = worst.max(omega(&tables[j], &state.c[j], &state.c[k], &state.s[j], i).abs());
        worst = worst.max(psi(&tables[j], &state.c[j], &state.s[j], i - 1).abs());
    }
    if worst > LINEAR_TOL * scale {
        return Err(Error::ResidualTooLarge {
            order: i,
            residual: worst / scale,
        });
    }
    Ok(condition)
}

/// Solution of stage `i ≥ 3`: `c_{j,i}` and `a_{j,1,i−1}` for all `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderN {
    pub c: Vec<f64>,
    pub a: Vec<f64>,
    pub condition: f64,
}

/// Stage `i ≥ 3` given the lower-order coefficients: `c[j][m]` for
/// `m < i` and `chi_offsets[j][n] = a_{j,1,n}` for `1 ≤ n < i − 1`.
pub fn solve_order_n(
    tables: &[DistanceSeries],
    c: &[Vec<f64>],
    chi_offsets: &[Vec<f64>],
    i: usize,
) -> Result<OrderN> {
    check_tables(tables, i);
    let n = tables.len();
    let mut state = State {
        c: (0..n)
            .map(|j| {
                let mut v = vec![0.0; i + 1];
                v[..i].copy_from_slice(&c[j][..i]);
                v
            })
            .collect(),
        s: (0..n)
            .map(|j| {
                let mut v = vec![0.0; i + 1];
                for p in 1..(i - 1) {
                    v[p] = chi_offsets[j][p];
                }
                v
            })
            .collect(),
    };
    let condition = solve_order_n_state(tables, &mut state, i)?;
    Ok(OrderN {
        c: state.c.iter().map(|v| v[i]).collect(),
        a: state.s.iter().map(|v| v[i - 1]).collect(),
        condition,
    })
}

fn partial(state: &State, centers: &[f64], solved: usize) -> PartialSeries {
    let (phase, chi) = package(state, centers, solved);
    PartialSeries {
        solved_order: solved,
        phase,
        chi,
    }
}

fn package(state: &State, centers: &[f64], order: usize) -> (PhaseSeries, ChiSeries) {
    let n = centers.len();
    let phase = PhaseSeries {
        centers: centers.to_vec(),
        c: state.c.iter().map(|c| c[..=order].to_vec()).collect(),
        trust_radius: DEFAULT_TRUST_RADIUS,
    };
    let chi = ChiSeries {
        a: (0..n)
            .map(|j| {
                let mut a = state.s[j][..order.max(1)].to_vec();
                a[0] = centers[j];
                a
            })
            .collect(),
    };
    (phase, chi)
}

/// Runs all stages on precomputed leg tables. `centers[j] = τ_j*` and
/// `tables[j]` is the distance series of leg `j → j+1`.
pub fn solve_phase_series(tables: &[DistanceSeries], centers: &[f64], order: usize) -> Result<PhaseSolution> {
    assert!(order >= 2, "phase series need order >= 2");
    check_tables(tables, order);
    let n = tables.len();
    let mut state = State {
        c: (0..n)
            .map(|j| {
                let mut v = vec![0.0; order + 1];
                v[0] = tables[j].get(0, 0);
                v
            })
            .collect(),
        s: vec![vec![0.0; order + 1]; n],
    };
    let fail = |state: &State, solved: usize, err: Error| Error::PhaseSeriesFailed {
        order: solved + 1,
        partial: Box::new(partial(state, centers, solved)),
        source: Box::new(err),
    };

    let c1 = solve_order1(tables).map_err(|e| fail(&state, 0, e))?;
    for j in 0..n {
        state.c[j][1] = c1[j];
    }
    let o2 = solve_order2(tables).map_err(|e| fail(&state, 1, e))?;
    for j in 0..n {
        state.c[j][2] = o2.c2[j];
        state.s[j][1] = o2.a11[j];
    }
    let mut conditions = Vec::new();
    for i in 3..=order {
        let cond = solve_order_n_state(tables, &mut state, i).map_err(|e| fail(&state, i - 1, e))?;
        conditions.push(cond);
    }
    let residuals = Residuals {
        omega: (0..n)
            .map(|j| {
                (0..=order)
                    .map(|i| omega(&tables[j], &state.c[j], &state.c[(j + 1) % n], &state.s[j], i))
                    .collect()
            })
            .collect(),
        psi: (0..n)
            .map(|j| (0..order).map(|i| psi(&tables[j], &state.c[j], &state.s[j], i)).collect())
            .collect(),
    };
    let (phase, chi) = package(&state, centers, order);
    Ok(PhaseSolution {
        phase,
        chi,
        residuals,
        order2_iterations: o2.iterations,
        conditions,
    })
}

/// Full staged solve for a scene and its orbit.
pub fn compute_phase_series(scene: &Scene, orbit: &PeriodicOrbit, order: usize) -> Result<PhaseSolution> {
    let tables = all_f_tables(scene, orbit, order)?;
    solve_phase_series(&tables, &orbit.taus, order)
}
