//! JSON scene configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bem::{BemOptions, Incident};
use crate::curves::{Curve, Orientation};
use crate::error::{Error, Result};
use crate::orbit::Scene;
use crate::twodisk::TwoDiskConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleConfig {
    Circle {
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        orientation: OrientationConfig,
        #[serde(default)]
        phase_offset: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        #[serde(default)]
        rotation: f64,
    },
    RadialFourier {
        center: [f64; 2],
        base_radius: f64,
        #[serde(default)]
        cos_amplitudes: Vec<f64>,
        #[serde(default)]
        sin_amplitudes: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationConfig {
    #[default]
    Positive,
    Negative,
}

impl ObstacleConfig {
    pub fn to_curve(&self) -> Result<Curve> {
        match self {
            ObstacleConfig::Circle {
                center,
                radius,
                orientation,
                phase_offset,
            } => {
                let o = match orientation {
                    OrientationConfig::Positive => Orientation::Positive,
                    OrientationConfig::Negative => Orientation::Negative,
                };
                Curve::circle(*center, *radius, o, *phase_offset)
            }
            ObstacleConfig::Ellipse {
                center,
                semi_axes,
                rotation,
            } => Curve::ellipse(*center, *semi_axes, *rotation),
            ObstacleConfig::RadialFourier {
                center,
                base_radius,
                cos_amplitudes,
                sin_amplitudes,
            } => Curve::radial_fourier(*center, *base_radius, cos_amplitudes.clone(), sin_amplitudes.clone()),
        }
    }

    fn numbers(&self) -> Vec<f64> {
        match self {
            ObstacleConfig::Circle {
                center,
                radius,
                phase_offset,
                ..
            } => vec![center[0], center[1], *radius, *phase_offset],
            ObstacleConfig::Ellipse {
                center,
                semi_axes,
                rotation,
            } => vec![center[0], center[1], semi_axes[0], semi_axes[1], *rotation],
            ObstacleConfig::RadialFourier {
                center,
                base_radius,
                cos_amplitudes,
                sin_amplitudes,
            } => {
                let mut v = vec![center[0], center[1], *base_radius];
                v.extend(cos_amplitudes);
                v.extend(sin_amplitudes);
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BemConfig {
    pub enabled: bool,
    pub points_per_wavelength: f64,
    pub min_points: usize,
    pub points: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
    /// Half-width of the phase-extraction window around each `τ_j*`.
    pub phase_window: f64,
}

impl Default for BemConfig {
    fn default() -> Self {
        let o = BemOptions::default();
        BemConfig {
            enabled: true,
            points_per_wavelength: o.points_per_wavelength,
            min_points: o.min_points,
            points: o.points,
            tol: o.tol,
            max_iter: o.max_iter,
            phase_window: 0.15,
        }
    }
}

impl BemConfig {
    pub fn options(&self) -> BemOptions {
        BemOptions {
            points_per_wavelength: self.points_per_wavelength,
            min_points: self.min_points,
            points: self.points,
            refinement: 1,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum IncidentConfig {
    PlaneWave { direction: [f64; 2] },
    PointSource { location: [f64; 2] },
}

impl IncidentConfig {
    pub fn to_incident(self) -> Incident {
        match self {
            IncidentConfig::PlaneWave { direction } => Incident::PlaneWave { direction },
            IncidentConfig::PointSource { location } => Incident::PointSource { location },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateConfig {
    pub incident: IncidentConfig,
    /// Obstacle (index into `orbit_order`) receiving the incident wave.
    #[serde(default)]
    pub start: usize,
    pub reflections: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoDiskSection {
    pub r: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub obstacles: Vec<ObstacleConfig>,
    /// Order in which the orbit visits the obstacles; defaults to listing order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit_order: Option<Vec<usize>>,
    pub wavenumber: f64,
    #[serde(default = "default_taylor_order")]
    pub taylor_order: usize,
    #[serde(default = "default_true")]
    pub check_separation: bool,
    #[serde(default)]
    pub bem: BemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterate: Option<IterateConfig>,
    /// Marks the scene as the symmetric two-disk configuration, enabling
    /// the closed-form and reflected-ray oracles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twodisk: Option<TwoDiskSection>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

fn default_taylor_order() -> usize {
    8
}

fn default_true() -> bool {
    true
}

fn default_output_dir() -> String {
    "out".into()
}

impl SceneConfig {
    pub fn from_json(text: &str) -> Result<SceneConfig> {
        let cfg: SceneConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<SceneConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        SceneConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.obstacles.len() < 2 {
            return bad("at least two obstacles are required".into());
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.numbers().iter().any(|v| !v.is_finite()) {
                return bad(format!("obstacle {i} has a non-finite parameter"));
            }
        }
        if !(self.wavenumber.is_finite() && self.wavenumber > 0.0) {
            return bad(format!("wavenumber {} must be positive", self.wavenumber));
        }
        if !(2..=crate::curves::MAX_JET_ORDER).contains(&self.taylor_order) {
            return bad(format!("taylor_order {} outside 2..={}", self.taylor_order, crate::curves::MAX_JET_ORDER));
        }
        if let Some(order) = &self.orbit_order {
            let mut seen = vec![false; self.obstacles.len()];
            if order.len() < 2 {
                return bad("orbit_order needs at least two entries".into());
            }
            for &i in order {
                if i >= seen.len() || seen[i] {
                    return bad(format!("orbit_order entry {i} is out of range or repeated"));
                }
                seen[i] = true;
            }
        }
        let b = &self.bem;
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(b.points_per_wavelength) || !finite_pos(b.tol) || !finite_pos(b.phase_window) {
            return bad("bem numeric fields must be finite and positive".into());
        }
        if b.points.is_some_and(|n| n < 4) || b.min_points < 4 || b.max_iter == 0 {
            return bad("bem node counts must be at least 4 and max_iter positive".into());
        }
        if let Some(it) = &self.iterate {
            let v = match it.incident {
                IncidentConfig::PlaneWave { direction } => direction,
                IncidentConfig::PointSource { location } => location,
            };
            if v.iter().any(|x| !x.is_finite()) {
                return bad("incident parameters must be finite".into());
            }
            if let IncidentConfig::PlaneWave { direction } = it.incident {
                if direction[0].hypot(direction[1]) == 0.0 {
                    return bad("plane-wave direction must be nonzero".into());
                }
            }
            if it.start >= self.orbit_len() || it.reflections == 0 {
                return bad("iterate.start out of range or zero reflections".into());
            }
        }
        if let Some(t) = &self.twodisk {
            TwoDiskConfig::new(t.r, t.d).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    fn orbit_len(&self) -> usize {
        self.orbit_order.as_ref().map_or(self.obstacles.len(), |o| o.len())
    }

    /// Obstacles in orbit order.
    pub fn scene(&self) -> Result<Scene> {
        let order: Vec<usize> = self
            .orbit_order
            .clone()
            .unwrap_or_else(|| (0..self.obstacles.len()).collect());
        let curves = order
            .iter()
            .map(|&i| self.obstacles[i].to_curve())
            .collect::<Result<Vec<_>>>()?;
        Scene::new(curves, self.wavenumber, self.check_separation)
    }

    pub fn twodisk_config(&self) -> Option<TwoDiskConfig> {
        self.twodisk.as_ref().map(|t| TwoDiskConfig { r: t.r, d: t.d })
    }
}
