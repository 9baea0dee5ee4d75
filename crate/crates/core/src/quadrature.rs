//! Gauss–Legendre rules on `[0, 1]`, plus a product rule for `∫₀¹ ln(t) g(t) dt`.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // ascending order on [0, 1]
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[n - 1 - i] = 0.5 * w;
    }
    Rule { nodes, weights }
}

/// Weights `W_i` such that `Σ W_i g(t_i) = ∫₀¹ ln(t) g(t) dt` exactly for
/// polynomials `g` of degree `< n`, on the `n` Gauss–Legendre nodes.
///
/// Built from the shifted-Legendre moments `∫₀¹ ln(t) P̃_k(t) dt`, which are
/// `-1` for `k = 0` and `(-1)^{k+1} / (k(k+1))` otherwise.
pub fn log_weights(rule: &Rule) -> Vec<f64> {
    let n = rule.nodes.len();
    let moment = |k: usize| -> f64 {
        if k == 0 {
            -1.0
        } else {
            let kf = k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign / (kf * (kf + 1.0))
        }
    };
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| {
            let x = 2.0 * t - 1.0;
            let mut p0 = 1.0;
            let mut p1 = x;
            let mut acc = moment(0) * p0;
            if n > 1 {
                acc += 3.0 * moment(1) * p1;
            }
            for k in 2..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
                acc += (2.0 * kf + 1.0) * moment(k) * p1;
            }
            w * acc
        })
        .collect()
}

/// Adaptive Gauss–Legendre on `[a, b]`: compares 8- and 16-point estimates
/// and bisects until they agree to `tol` (absolute, scaled by interval share).
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> Option<f64> {
    thread_local! {
        static RULES: (Rule, Rule) = (gauss_legendre(8), gauss_legendre(16));
    }
    let (coarse, fine) = RULES.with(|r| {
        let apply = |rule: &Rule| {
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&t, &w)| w * f(a + (b - a) * t))
                .sum::<f64>()
                * (b - a)
        };
        (apply(&r.0), apply(&r.1))
    });
    if (coarse - fine).abs() <= tol {
        return Some(fine);
    }
    if depth == 0 {
        return None;
    }
    let m = 0.5 * (a + b);
    let left = adaptive(f, a, m, 0.5 * tol, depth - 1)?;
    let right = adaptive(f, m, b, 0.5 * tol, depth - 1)?;
    Some(left + right)
}
