//! Bivariate Taylor expansion of the leg distance
//! `Δ_{j,j+1}(τ_j, τ_{j+1}) = ‖Γ_j(τ_j) − Γ_{j+1}(τ_{j+1})‖` about the orbit.
//!
//! The expansion goes through three layers, each kept for inspection:
//!
//! 1. `Λ`: coefficients of the squared component differences, obtained from
//!    the two curve jets by convolution;
//! 2. `z_m`: powers of the normalized non-constant part
//!    `w = (Λ − Λ₀₀)/Λ₀₀` of the squared distance;
//! 3. `f`: the distance itself, `√Λ₀₀ (1 + Σ_m C(1/2, m) z_m)`.
//!
//! Tables are stored by power: entry `(p, q)` multiplies
//! `(τ_j − τ_j*)^p (τ_{j+1} − τ_{j+1}*)^q`. The 1-based accessor
//! [`Table2::coeff`] maps `(l, n)` to `(l − 1, n − 1)`, so `coeff(2, 1)` is the
//! coefficient usually written `f_{j,2,1}`.

use crate::curves::Jet;
use crate::error::{Error, Result};
use crate::orbit::{PeriodicOrbit, Scene};

/// Dense square table of bivariate coefficients indexed by power.
#[derive(Debug, Clone, PartialEq)]
pub struct Table2 {
    size: usize,
    data: Vec<f64>,
}

impl Table2 {
    pub fn zeros(size: usize) -> Table2 {
        Table2 {
            size,
            data: vec![0.0; size * size],
        }
    }

    /// Number of powers per variable (`order + 1`).
    pub fn size(&self) -> usize {
        self.size
    }

    /// Coefficient of `s^p t^q`; zero outside the table.
    pub fn get(&self, p: usize, q: usize) -> f64 {
        if p < self.size && q < self.size {
            self.data[p * self.size + q]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, p: usize, q: usize, v: f64) {
        self.data[p * self.size + q] = v;
    }

    /// 1-based access: `coeff(l, n)` multiplies `s^{l−1} t^{n−1}`.
    pub fn coeff(&self, l: usize, n: usize) -> f64 {
        assert!(l >= 1 && n >= 1, "1-based indices start at 1");
        self.get(l - 1, n - 1)
    }

    /// Truncated product, keeping powers below `size` in each variable.
    pub fn mul(&self, other: &Table2) -> Table2 {
        let n = self.size.min(other.size);
        let mut out = Table2::zeros(n);
        for p1 in 0..n {
            for q1 in 0..n {
                let a = self.get(p1, q1);
                if a == 0.0 {
                    continue;
                }
                for p2 in 0..n - p1 {
                    for q2 in 0..n - q1 {
                        out.data[(p1 + p2) * n + q1 + q2] += a * other.get(p2, q2);
                    }
                }
            }
        }
        out
    }

    /// Evaluates the truncated polynomial at `(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        let mut acc = 0.0;
        for p in (0..self.size).rev() {
            let mut row = 0.0;
            for q in (0..self.size).rev() {
                row = row * t + self.get(p, q);
            }
            acc = acc * s + row;
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `Λ` tables for the `x` and `y` components.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTable {
    pub x: Table2,
    pub y: Table2,
}

impl LambdaTable {
    /// `Λ_x + Λ_y`: the expansion of the squared distance.
    pub fn sum(&self) -> Table2 {
        let mut out = self.x.clone();
        out.data.iter_mut().zip(&self.y.data).for_each(|(a, b)| *a += b);
        out
    }
}

fn self_convolution(c: &[f64], p: usize) -> f64 {
    (0..=p).map(|i| c[i] * c[p - i]).sum()
}

/// Coefficients of `(Γ_{a,x}(τ_a) − Γ_{b,x}(τ_b))²` (and likewise for `y`)
/// in powers of `(τ_a − τ_a*)` (first index) and `(τ_b − τ_b*)` (second).
pub fn lambda_table(jet_a: &Jet, jet_b: &Jet, order: usize) -> LambdaTable {
    assert!(
        jet_a.order() >= order && jet_b.order() >= order,
        "jets must be at least of the table order"
    );
    let component = |a: &[f64], b: &[f64]| {
        let mut t = Table2::zeros(order + 1);
        for p in 0..=order {
            for q in 0..=order {
                let mut v = -2.0 * a[p] * b[q];
                if q == 0 {
                    v += self_convolution(a, p);
                }
                if p == 0 {
                    v += self_convolution(b, q);
                }
                t.set(p, q, v);
            }
        }
        t
    };
    LambdaTable {
        x: component(&jet_a.x, &jet_b.x),
        y: component(&jet_a.y, &jet_b.y),
    }
}

/// Powers `z_m = w^m`, `m = 1..=2·order`, of the normalized squared-distance
/// increment `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZTable {
    /// `powers[m - 1]` holds `z_m`.
    pub powers: Vec<Table2>,
    /// `Λ_{x,1,1} + Λ_{y,1,1}`: the squared leg distance.
    pub leading: f64,
}

impl ZTable {
    /// `z_{m,l,n}` in 1-based indices.
    pub fn coeff(&self, m: usize, l: usize, n: usize) -> f64 {
        self.powers[m - 1].coeff(l, n)
    }
}

pub fn z_table(lambda: &LambdaTable, order: usize) -> Result<ZTable> {
    let sum = lambda.sum();
    let leading = sum.get(0, 0);
    if !(leading > 0.0) {
        return Err(Error::DegenerateLeg {
            leg: 0,
            distance: leading.max(0.0).sqrt(),
        });
    }
    let mut w = Table2::zeros(order + 1);
    for p in 0..=order {
        for q in 0..=order {
            if p + q > 0 {
                w.set(p, q, sum.get(p, q) / leading);
            }
        }
    }
    let mut powers = Vec::with_capacity(2 * order);
    if order > 0 {
        powers.push(w.clone());
        for _ in 1..2 * order {
            let next = powers.last().unwrap().mul(&w);
            powers.push(next);
        }
    }
    Ok(ZTable { powers, leading })
}

/// Generalized binomial coefficient `C(1/2, m)` via
/// `C(1/2, m) = C(1/2, m−1) · (3/2 − m) / m`.
pub fn binomial_half(m: usize) -> f64 {
    let mut c = 1.0;
    for i in 1..=m {
        c *= (1.5 - i as f64) / i as f64;
    }
    c
}

/// Bivariate Taylor coefficients of one leg distance.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceSeries {
    pub leg: usize,
    pub order: usize,
    pub f: Table2,
    pub lambda: LambdaTable,
    pub z: ZTable,
}

impl DistanceSeries {
    /// `f_{l,n}` in 1-based indices.
    pub fn coeff(&self, l: usize, n: usize) -> f64 {
        self.f.coeff(l, n)
    }

    /// Coefficient of `s^p t^q`.
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.f.get(p, q)
    }
}

/// Distance series from the two jets at the orbit points.
pub fn distance_series(jet_a: &Jet, jet_b: &Jet, order: usize, leg: usize) -> Result<DistanceSeries> {
    let lambda = lambda_table(jet_a, jet_b, order);
    let z = z_table(&lambda, order).map_err(|e| match e {
        Error::DegenerateLeg { distance, .. } => Error::DegenerateLeg { leg, distance },
        other => other,
    })?;
    let root = z.leading.sqrt();
    let binom: Vec<f64> = (0..=2 * order).map(binomial_half).collect();
    let mut f = Table2::zeros(order + 1);
    for p in 0..=order {
        for q in 0..=order {
            let mut acc = if p + q == 0 { 1.0 } else { 0.0 };
            for m in 1..=(p + q) {
                acc += binom[m] * z.powers[m - 1].get(p, q);
            }
            f.set(p, q, root * acc);
        }
    }
    Ok(DistanceSeries {
        leg,
        order,
        f,
        lambda,
        z,
    })
}

/// `f` table of leg `j` (from obstacle `j` to `j+1`, cyclic) about the orbit.
pub fn f_table(scene: &Scene, orbit: &PeriodicOrbit, j: usize, order: usize) -> Result<DistanceSeries> {
    let n = scene.len();
    let k = (j + 1) % n;
    let jet_a = scene.obstacle(j).eval_jet(orbit.taus[j], order)?;
    let jet_b = scene.obstacle(k).eval_jet(orbit.taus[k], order)?;
    distance_series(&jet_a, &jet_b, order, j)
}

/// All `J` leg tables.
pub fn all_f_tables(scene: &Scene, orbit: &PeriodicOrbit, order: usize) -> Result<Vec<DistanceSeries>> {
    (0..scene.len()).map(|j| f_table(scene, orbit, j, order)).collect()
}
