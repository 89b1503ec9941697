//! Run configuration: a TOML file with one table per component.

use std::sync::Arc;

use photonloc_core::detectors::{DetectorArraySpec, ObserverFrame};
use photonloc_core::kspace::{Epsilon, GridSpec, HyperplaneGrid, Lambda};
use photonloc_core::spacetime::{FourVector, Hyperplane};
use photonloc_core::states::{PacketCoords, PacketPolarization, PacketSpec};
use serde::Deserialize;

/// A problem with the configuration, reported with the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub msg: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, msg: impl ToString) -> Self {
        ConfigError {
            field: field.into(),
            msg: msg.to_string(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.field.is_empty() {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "{}: {}", self.field, self.msg)
        }
    }
}

type Res<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub grid: Option<GridConfig>,
    pub packet: Option<PacketConfig>,
    pub array: Option<ArrayConfig>,
    pub boost: Option<BoostConfig>,
    pub events: Option<EventsConfig>,
    pub costheta: Option<CosThetaConfig>,
    pub tail: Option<TailConfig>,
    pub validate: Option<ValidateConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneChoice {
    Spacelike,
    Timelike,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub plane: PlaneChoice,
    /// `a` of `t = a` or `b` of `x3 = b`.
    #[serde(default)]
    pub offset: f64,
    pub sizes: [usize; 3],
    /// k-lattice spacing per on-plane axis.
    pub dk: [f64; 3],
    #[serde(default)]
    pub k_center: [f64; 3],
    pub x_center: Option<[f64; 3]>,
    #[serde(default)]
    pub half_shifted: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub center: [f64; 3],
    pub widths: [f64; 3],
    #[serde(default = "one_u8")]
    pub lambda: u8,
    #[serde(default = "one_i8")]
    pub epsilon: i8,
    /// Circular polarization with this sign instead of linear `lambda`.
    pub helicity: Option<i8>,
    /// `[t, x1, x2, x3]` of the launch event.
    pub launch: Option<[f64; 4]>,
    /// `"on-plane"` (default) or `"spatial"`.
    #[serde(default)]
    pub coords: PacketCoords,
}

fn one_u8() -> u8 {
    1
}

fn one_i8() -> i8 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    /// Hyperpixel size in grid cells; the array covers the whole grid.
    pub block: Option<[usize; 3]>,
    /// Explicit hyperpixel extents, used together with `bounds`.
    pub pixel: Option<[f64; 3]>,
    pub bounds: Option<[[f64; 2]; 3]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostConfig {
    pub beta: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventsConfig {
    pub count: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosThetaConfig {
    #[serde(default = "default_thetas")]
    pub thetas_deg: Vec<f64>,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    #[serde(default = "default_size")]
    pub size: usize,
}

impl Default for CosThetaConfig {
    fn default() -> Self {
        CosThetaConfig {
            thetas_deg: default_thetas(),
            omega: default_omega(),
            bandwidth: default_bandwidth(),
            size: default_size(),
        }
    }
}

fn default_thetas() -> Vec<f64> {
    vec![0.0, 45.0, 60.0]
}

fn default_omega() -> f64 {
    10.0
}

fn default_bandwidth() -> f64 {
    0.01
}

fn default_size() -> usize {
    32
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    #[serde(default = "default_tail_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

impl Default for TailConfig {
    fn default() -> Self {
        TailConfig {
            sizes: default_tail_sizes(),
            spacing: default_spacing(),
        }
    }
}

fn default_tail_sizes() -> Vec<usize> {
    vec![32, 64]
}

fn default_spacing() -> f64 {
    0.5
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    /// Subset of criterion ids; all when absent.
    pub criteria: Option<Vec<u8>>,
}

/// File names inside the output directory.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_report")]
    pub report: String,
    /// Also write the k-space amplitude.
    #[serde(default)]
    pub amplitude: bool,
    /// Also write per-channel projections onto the localized basis.
    #[serde(default)]
    pub projection: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            report: default_report(),
            amplitude: false,
            projection: false,
        }
    }
}

fn default_report() -> String {
    "report.json".into()
}

pub fn parse(text: &str) -> Res<RunConfig> {
    toml::from_str(text).map_err(|e| ConfigError::new("", e.to_string().trim_end()))
}

fn finite<const N: usize>(field: &str, v: [f64; N]) -> Res<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ConfigError::new(field, "values must be finite"))
    }
}

impl RunConfig {
    pub fn grid_config(&self) -> Res<&GridConfig> {
        self.grid
            .as_ref()
            .ok_or_else(|| ConfigError::new("grid", "missing table"))
    }

    pub fn grid(&self) -> Res<Arc<HyperplaneGrid>> {
        let g = self.grid_config()?;
        finite("grid.offset", [g.offset])?;
        finite("grid.dk", g.dk)?;
        finite("grid.k_center", g.k_center)?;
        if g.sizes.iter().any(|&n| n < 2) {
            return Err(ConfigError::new("grid.sizes", "each size must be at least 2"));
        }
        if g.dk.iter().any(|&d| d <= 0.0) {
            return Err(ConfigError::new("grid.dk", "spacings must be positive"));
        }
        let plane = match g.plane {
            PlaneChoice::Spacelike => Hyperplane::spacelike(g.offset),
            PlaneChoice::Timelike => Hyperplane::timelike(g.offset),
        };
        let mut spec = GridSpec::from_k_spacing(plane, g.sizes, g.dk).with_k_center(g.k_center);
        if let Some(x) = g.x_center {
            finite("grid.x_center", x)?;
            spec = spec.with_x_center(x);
        }
        if g.half_shifted {
            spec = spec.half_shifted();
        }
        spec.build()
            .map(Arc::new)
            .map_err(|e| ConfigError::new("grid", e))
    }

    pub fn require_plane(&self, want: PlaneChoice) -> Res<()> {
        let g = self.grid_config()?;
        if g.plane == want {
            Ok(())
        } else {
            Err(ConfigError::new(
                "grid.plane",
                format!("this scenario needs a {want:?} grid").to_lowercase(),
            ))
        }
    }

    pub fn packet(&self) -> Res<PacketSpec> {
        let p = self
            .packet
            .as_ref()
            .ok_or_else(|| ConfigError::new("packet", "missing table"))?;
        finite("packet.center", p.center)?;
        finite("packet.widths", p.widths)?;
        if p.widths.iter().any(|&w| w <= 0.0) {
            return Err(ConfigError::new("packet.widths", "widths must be positive"));
        }
        let lambda = Lambda::try_from(p.lambda)
            .map_err(|_| ConfigError::new("packet.lambda", format!("must be 1 or 2, found {}", p.lambda)))?;
        let sign = |field: &str, s: i8| match s {
            1 => Ok(Epsilon::Plus),
            -1 => Ok(Epsilon::Minus),
            _ => Err(ConfigError::new(field, format!("must be 1 or -1, found {s}"))),
        };
        let epsilon = sign("packet.epsilon", p.epsilon)?;
        let mut spec = PacketSpec::new(p.center, p.widths, lambda, epsilon).with_coords(p.coords);
        if let Some(h) = p.helicity {
            spec = spec.with_polarization(PacketPolarization::Helicity(sign("packet.helicity", h)?));
        }
        if let Some(l) = p.launch {
            finite("packet.launch", l)?;
            spec = spec.with_launch(FourVector(l));
        }
        Ok(spec)
    }

    /// The configured array, or one hyperpixel per grid cell.
    pub fn array(&self, grid: &HyperplaneGrid) -> Res<DetectorArraySpec> {
        let Some(a) = &self.array else {
            return DetectorArraySpec::covering(grid, [1, 1, 1]).map_err(|e| ConfigError::new("array", e));
        };
        match (a.block, a.pixel, a.bounds) {
            (Some(block), None, None) => {
                DetectorArraySpec::covering(grid, block).map_err(|e| ConfigError::new("array.block", e))
            }
            (None, Some(pixel), Some(bounds)) => {
                finite("array.pixel", pixel)?;
                DetectorArraySpec::new(*grid.plane(), pixel, bounds).map_err(|e| ConfigError::new("array", e))
            }
            _ => Err(ConfigError::new(
                "array",
                "give either `block` or both `pixel` and `bounds`",
            )),
        }
    }

    pub fn frame(&self) -> Res<ObserverFrame> {
        let b = self
            .boost
            .as_ref()
            .ok_or_else(|| ConfigError::new("boost", "missing table"))?;
        ObserverFrame::new(b.beta).map_err(|e| ConfigError::new("boost.beta", e))
    }
}
