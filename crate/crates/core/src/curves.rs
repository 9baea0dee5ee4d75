//! Parametric boundary curves over `τ ∈ [0, 1)` and their Taylor jets.
//!
//! All curves are 1-periodic in `τ`. A [`Jet`] holds the exact Taylor
//! coefficients of both components about a base parameter.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature;

const TWO_PI: f64 = 2.0 * PI;

/// Default cap on jet orders.
pub const MAX_JET_ORDER: usize = 32;

/// Number of samples used to verify that a radial-fourier radius stays positive.
const POSITIVITY_GRID: usize = 1024;

pub type Point = [f64; 2];

/// Reduces a parameter to `[0, 1)`.
pub fn wrap(tau: f64) -> f64 {
    let t = tau.rem_euclid(1.0);
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

/// Representative of `a - b` in `(-1/2, 1/2]`.
pub fn param_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    if d > 0.5 {
        d - 1.0
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `center + r (sin 2πτ', cos 2πτ')`
    Positive,
    /// `center + r (sin 2πτ', -cos 2πτ')`
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    /// `center + r (sin 2π(τ+φ₀), ±cos 2π(τ+φ₀))`; `τ = 0` is the top
    /// (positive) or bottom (negative) pole when the offset is zero.
    Circle {
        center: Point,
        radius: f64,
        orientation: Orientation,
        phase_offset: f64,
    },
    /// `center + R(θ) (a cos 2πτ, b sin 2πτ)`
    Ellipse {
        center: Point,
        semi_axes: [f64; 2],
        rotation: f64,
    },
    /// `center + ρ(τ) (cos 2πτ, sin 2πτ)` with
    /// `ρ(τ) = r₀ + Σₙ (Aₙ cos 2πnτ + Bₙ sin 2πnτ)`, `n = 1, 2, …`.
    RadialFourier {
        center: Point,
        base_radius: f64,
        cos_amplitudes: Vec<f64>,
        sin_amplitudes: Vec<f64>,
    },
}

/// Taylor coefficients of a curve about `τ*`: `x[p]` and `y[p]` multiply
/// `(τ − τ*)^p`.
///
/// In 1-based notation, `x[p]` is the coefficient `Γ_{x,p+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub center: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Jet {
    pub fn order(&self) -> usize {
        self.x.len() - 1
    }

    /// Truncates to a lower order.
    pub fn truncate(&self, order: usize) -> Jet {
        Jet {
            center: self.center,
            x: self.x[..=order].to_vec(),
            y: self.y[..=order].to_vec(),
        }
    }

    pub fn point(&self) -> Point {
        [self.x[0], self.y[0]]
    }

    /// First derivative `Γ'(τ*)`.
    pub fn tangent(&self) -> Point {
        [self.x[1], self.y[1]]
    }

    /// Second derivative `Γ''(τ*)`.
    pub fn second_derivative(&self) -> Point {
        [2.0 * self.x[2], 2.0 * self.y[2]]
    }
}

/// Taylor coefficients of `amplitude · cos(ω(τ* + h) + phase)` in powers of `h`.
fn harmonic_cos(amplitude: f64, omega: f64, tau: f64, phase: f64, order: usize) -> Vec<f64> {
    let theta = omega * tau + phase;
    let mut out = Vec::with_capacity(order + 1);
    let mut scale = amplitude;
    for p in 0..=order {
        if p > 0 {
            scale *= omega / p as f64;
        }
        out.push(scale * (theta + p as f64 * PI / 2.0).cos());
    }
    out
}

fn harmonic_sin(amplitude: f64, omega: f64, tau: f64, phase: f64, order: usize) -> Vec<f64> {
    harmonic_cos(amplitude, omega, tau, phase - PI / 2.0, order)
}

fn mul_truncated(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|p| (0..=p).map(|q| a[q] * b[p - q]).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    kind: CurveKind,
}

impl Curve {
    pub fn new(kind: CurveKind) -> Result<Curve> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match &kind {
            CurveKind::Circle {
                center,
                radius,
                phase_offset,
                ..
            } => {
                if !finite(center) || !radius.is_finite() || !phase_offset.is_finite() {
                    return Err(Error::InvalidCurve("non-finite circle parameter".into()));
                }
                if *radius <= 0.0 {
                    return Err(Error::InvalidCurve(format!("circle radius {radius} must be positive")));
                }
            }
            CurveKind::Ellipse {
                center,
                semi_axes,
                rotation,
            } => {
                if !finite(center) || !finite(semi_axes) || !rotation.is_finite() {
                    return Err(Error::InvalidCurve("non-finite ellipse parameter".into()));
                }
                if semi_axes[0] <= 0.0 || semi_axes[1] <= 0.0 {
                    return Err(Error::InvalidCurve("ellipse semi-axes must be positive".into()));
                }
            }
            CurveKind::RadialFourier {
                center,
                base_radius,
                cos_amplitudes,
                sin_amplitudes,
            } => {
                if !finite(center)
                    || !base_radius.is_finite()
                    || !finite(cos_amplitudes)
                    || !finite(sin_amplitudes)
                {
                    return Err(Error::InvalidCurve("non-finite radial-fourier parameter".into()));
                }
            }
        }
        let curve = Curve { kind };
        if let CurveKind::RadialFourier { .. } = curve.kind {
            for i in 0..POSITIVITY_GRID {
                let tau = i as f64 / POSITIVITY_GRID as f64;
                let rho = curve.radial_jet(tau, 0)[0];
                if rho <= 0.0 {
                    return Err(Error::InvalidCurve(format!(
                        "radial-fourier radius {rho} is not positive at tau = {tau}"
                    )));
                }
            }
        }
        Ok(curve)
    }

    pub fn circle(center: Point, radius: f64, orientation: Orientation, phase_offset: f64) -> Result<Curve> {
        Curve::new(CurveKind::Circle {
            center,
            radius,
            orientation,
            phase_offset,
        })
    }

    pub fn ellipse(center: Point, semi_axes: [f64; 2], rotation: f64) -> Result<Curve> {
        Curve::new(CurveKind::Ellipse {
            center,
            semi_axes,
            rotation,
        })
    }

    pub fn radial_fourier(
        center: Point,
        base_radius: f64,
        cos_amplitudes: Vec<f64>,
        sin_amplitudes: Vec<f64>,
    ) -> Result<Curve> {
        Curve::new(CurveKind::RadialFourier {
            center,
            base_radius,
            cos_amplitudes,
            sin_amplitudes,
        })
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    /// `Γ(τ mod 1)`.
    pub fn point(&self, tau: f64) -> Point {
        self.jet_unchecked(wrap(tau), 0).point()
    }

    /// Exact Taylor coefficients of both components about `τ*`, up to the
    /// default order cap.
    pub fn eval_jet(&self, tau: f64, order: usize) -> Result<Jet> {
        self.eval_jet_capped(tau, order, MAX_JET_ORDER)
    }

    pub fn eval_jet_capped(&self, tau: f64, order: usize, cap: usize) -> Result<Jet> {
        if order > cap {
            return Err(Error::JetOrderTooLarge { order, cap });
        }
        Ok(self.jet_unchecked(wrap(tau), order))
    }

    fn radial_jet(&self, tau: f64, order: usize) -> Vec<f64> {
        let CurveKind::RadialFourier {
            base_radius,
            cos_amplitudes,
            sin_amplitudes,
            ..
        } = &self.kind
        else {
            unreachable!("radial jet on a non-radial curve");
        };
        let mut rho = vec![0.0; order + 1];
        rho[0] = *base_radius;
        for (n, &amp) in cos_amplitudes.iter().enumerate() {
            let h = harmonic_cos(amp, TWO_PI * (n + 1) as f64, tau, 0.0, order);
            rho.iter_mut().zip(h).for_each(|(r, v)| *r += v);
        }
        for (n, &amp) in sin_amplitudes.iter().enumerate() {
            let h = harmonic_sin(amp, TWO_PI * (n + 1) as f64, tau, 0.0, order);
            rho.iter_mut().zip(h).for_each(|(r, v)| *r += v);
        }
        rho
    }

    fn jet_unchecked(&self, tau: f64, order: usize) -> Jet {
        let (x, y) = match &self.kind {
            CurveKind::Circle {
                center,
                radius,
                orientation,
                phase_offset,
            } => {
                let phase = TWO_PI * phase_offset;
                let mut x = harmonic_sin(*radius, TWO_PI, tau, phase, order);
                let mut y = harmonic_cos(orientation.sign() * radius, TWO_PI, tau, phase, order);
                x[0] += center[0];
                y[0] += center[1];
                (x, y)
            }
            CurveKind::Ellipse {
                center,
                semi_axes,
                rotation,
            } => {
                let u = harmonic_cos(semi_axes[0], TWO_PI, tau, 0.0, order);
                let v = harmonic_sin(semi_axes[1], TWO_PI, tau, 0.0, order);
                let (s, c) = rotation.sin_cos();
                let mut x: Vec<f64> = u.iter().zip(&v).map(|(a, b)| c * a - s * b).collect();
                let mut y: Vec<f64> = u.iter().zip(&v).map(|(a, b)| s * a + c * b).collect();
                x[0] += center[0];
                y[0] += center[1];
                (x, y)
            }
            CurveKind::RadialFourier { center, .. } => {
                let rho = self.radial_jet(tau, order);
                let cx = harmonic_cos(1.0, TWO_PI, tau, 0.0, order);
                let sy = harmonic_sin(1.0, TWO_PI, tau, 0.0, order);
                let mut x = mul_truncated(&rho, &cx);
                let mut y = mul_truncated(&rho, &sy);
                x[0] += center[0];
                y[0] += center[1];
                (x, y)
            }
        };
        Jet { center: tau, x, y }
    }

    /// `‖Γ'(τ)‖`.
    pub fn speed(&self, tau: f64) -> f64 {
        let j = self.jet_unchecked(wrap(tau), 1);
        j.x[1].hypot(j.y[1])
    }

    /// Arc length `|Γ|`, by 16-point Gauss–Legendre on 128 panels.
    pub fn length(&self) -> f64 {
        let rule = quadrature::gauss_legendre(16);
        let panels = 128;
        let h = 1.0 / panels as f64;
        (0..panels)
            .map(|p| {
                rule.nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&t, &w)| w * self.speed((p as f64 + t) * h))
                    .sum::<f64>()
                    * h
            })
            .sum()
    }
}

pub fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
