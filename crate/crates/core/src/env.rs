//! Spatially varying current, wind and bathymetry.

use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods shadow these when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, Heading, LocalPoint, Vector2};

/// Node-based raster of environment layers.
///
/// Node `(row, col)` sits `col * cell_size` meters east and `row * cell_size`
/// meters north of `origin`; row 0 is the southern edge. Layers are stored
/// row-major. Non-finite depth nodes mark "no data".
#[derive(Debug, Clone, PartialEq)]
pub struct EnvGrid {
    pub origin: GeoPoint,
    pub cell_size: f64,
    pub rows: usize,
    pub cols: usize,
    pub depth: Vec<f64>,
    pub current_east: Vec<f64>,
    pub current_north: Vec<f64>,
    pub wind_east: Vec<f64>,
    pub wind_north: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridLayer {
    Depth,
    CurrentEast,
    CurrentNorth,
    WindEast,
    WindNorth,
}

impl EnvGrid {
    pub fn validate(&self) -> Result<()> {
        let n = self.rows * self.cols;
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::GridShape);
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(Error::InvalidParameter("cell_size"));
        }
        for layer in [
            &self.depth,
            &self.current_east,
            &self.current_north,
            &self.wind_east,
            &self.wind_north,
        ] {
            if layer.len() != n {
                return Err(Error::GridShape);
            }
        }
        self.origin.validate()
    }

    pub fn layer(&self, which: GridLayer) -> &[f64] {
        match which {
            GridLayer::Depth => &self.depth,
            GridLayer::CurrentEast => &self.current_east,
            GridLayer::CurrentNorth => &self.current_north,
            GridLayer::WindEast => &self.wind_east,
            GridLayer::WindNorth => &self.wind_north,
        }
    }

    /// Bilinear interpolation at grid-relative coordinates (meters from the
    /// grid origin). Positions outside the raster clamp to the edge. Nodes
    /// holding non-finite values are skipped and the remaining weights are
    /// renormalized; with no usable node the result is `None`.
    pub fn bilinear(&self, which: GridLayer, dx: f64, dy: f64) -> Option<f64> {
        let data = self.layer(which);
        let fx = (dx / self.cell_size).clamp(0.0, (self.cols - 1) as f64);
        let fy = (dy / self.cell_size).clamp(0.0, (self.rows - 1) as f64);
        let c0 = (fx.floor() as usize).min(self.cols - 1);
        let r0 = (fy.floor() as usize).min(self.rows - 1);
        let c1 = (c0 + 1).min(self.cols - 1);
        let r1 = (r0 + 1).min(self.rows - 1);
        let tx = fx - c0 as f64;
        let ty = fy - r0 as f64;
        let taps = [
            (r0, c0, (1.0 - tx) * (1.0 - ty)),
            (r0, c1, tx * (1.0 - ty)),
            (r1, c0, (1.0 - tx) * ty),
            (r1, c1, tx * ty),
        ];
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for (r, c, w) in taps {
            let v = data[r * self.cols + c];
            if v.is_finite() && w > 0.0 {
                acc += v * w;
                wsum += w;
            }
        }
        if wsum > 0.0 {
            Some(acc / wsum)
        } else {
            // exactly on a node whose weight is the only non-zero one
            let v = data[r0 * self.cols + c0];
            v.is_finite().then_some(v)
        }
    }

    fn max_norm(&self, east: GridLayer, north: GridLayer) -> f64 {
        self.layer(east)
            .iter()
            .zip(self.layer(north))
            .map(|(e, n)| Vector2::new(*e, *n).norm())
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }
}

/// An [`EnvGrid`] placed in a scenario's local frame.
#[derive(Debug, Clone)]
pub struct GridSampler {
    grid: Arc<EnvGrid>,
    offset: LocalPoint,
}

impl GridSampler {
    /// `offset` is the local-frame position of the grid origin.
    pub fn new(grid: Arc<EnvGrid>, offset: LocalPoint) -> Result<Self> {
        grid.validate()?;
        Ok(Self { grid, offset })
    }

    pub fn grid(&self) -> &EnvGrid {
        &self.grid
    }

    fn sample(&self, which: GridLayer, p: LocalPoint) -> Option<f64> {
        let d = p - self.offset;
        self.grid.bilinear(which, d.x, d.y)
    }

    fn vector(&self, east: GridLayer, north: GridLayer, p: LocalPoint) -> Vector2 {
        Vector2::new(
            self.sample(east, p).unwrap_or(0.0),
            self.sample(north, p).unwrap_or(0.0),
        )
    }
}

/// A horizontal velocity field in the world frame.
#[derive(Debug, Clone)]
pub enum FlowField {
    Uniform(Vector2),
    /// Channel flow along `direction` through `axis`, parabolic across the
    /// channel with `peak` on the axis and zero at `half_width`.
    Shear {
        axis: LocalPoint,
        direction: Heading,
        peak: f64,
        half_width: f64,
    },
    /// Rankine vortex, counterclockwise for positive `peak`.
    Vortex {
        center: LocalPoint,
        peak: f64,
        core_radius: f64,
    },
    Grid(GridSampler),
}

impl FlowField {
    pub const CALM: FlowField = FlowField::Uniform(Vector2::ZERO);

    fn at(&self, p: LocalPoint, layers: (GridLayer, GridLayer)) -> Vector2 {
        match self {
            FlowField::Uniform(v) => *v,
            FlowField::Shear {
                axis,
                direction,
                peak,
                half_width,
            } => {
                let along = direction.unit();
                let across = Vector2::new(along.y, -along.x);
                let offset = (p - *axis).dot(across);
                let s = offset / half_width;
                if s.abs() >= 1.0 {
                    Vector2::ZERO
                } else {
                    along * (peak * (1.0 - s * s))
                }
            }
            FlowField::Vortex {
                center,
                peak,
                core_radius,
            } => {
                let d = p - *center;
                let r = d.norm();
                if r == 0.0 {
                    return Vector2::ZERO;
                }
                let speed = if r < *core_radius {
                    peak * r / core_radius
                } else {
                    peak * core_radius / r
                };
                // counterclockwise tangent of (x, y) is (-y, x)
                Vector2::new(-d.y, d.x) * (speed / r)
            }
            FlowField::Grid(g) => g.vector(layers.0, layers.1, p),
        }
    }

    /// Upper bound on the field's magnitude.
    pub fn max_speed(&self, layers: (GridLayer, GridLayer)) -> f64 {
        match self {
            FlowField::Uniform(v) => v.norm(),
            FlowField::Shear { peak, .. } | FlowField::Vortex { peak, .. } => peak.abs(),
            FlowField::Grid(g) => g.grid.max_norm(layers.0, layers.1),
        }
    }
}

/// Bathymetry model. Depth is positive down and never negative.
#[derive(Debug, Clone)]
pub enum DepthModel {
    Flat(f64),
    /// `base + gradient · p`, clamped at zero.
    Ramp {
        base: f64,
        gradient: Vector2,
    },
    Grid(GridSampler),
}

impl DepthModel {
    fn at(&self, p: LocalPoint) -> f64 {
        let d = match self {
            DepthModel::Flat(d) => *d,
            DepthModel::Ramp { base, gradient } => {
                base + gradient.x * p.east + gradient.y * p.north
            }
            DepthModel::Grid(g) => g.sample(GridLayer::Depth, p).unwrap_or(0.0),
        };
        if d.is_finite() {
            d.max(0.0)
        } else {
            0.0
        }
    }
}

const CURRENT_LAYERS: (GridLayer, GridLayer) = (GridLayer::CurrentEast, GridLayer::CurrentNorth);
const WIND_LAYERS: (GridLayer, GridLayer) = (GridLayer::WindEast, GridLayer::WindNorth);

/// Current, wind and depth sampled at local-frame positions. Sampling is pure.
#[derive(Debug, Clone)]
pub struct EnvironmentField {
    current: FlowField,
    wind: FlowField,
    depth: DepthModel,
    current_limit: f64,
}

impl EnvironmentField {
    /// Builds a field whose current magnitude is bounded by the field's own
    /// maximum.
    pub fn new(current: FlowField, wind: FlowField, depth: DepthModel) -> Self {
        let current_limit = current.max_speed(CURRENT_LAYERS);
        Self {
            current,
            wind,
            depth,
            current_limit,
        }
    }

    /// Still water, no wind, constant depth.
    pub fn calm(depth: f64) -> Self {
        Self::new(FlowField::CALM, FlowField::CALM, DepthModel::Flat(depth))
    }

    /// Uniform current and wind over flat bathymetry.
    pub fn uniform(current: Vector2, wind: Vector2, depth: f64) -> Self {
        Self::new(
            FlowField::Uniform(current),
            FlowField::Uniform(wind),
            DepthModel::Flat(depth),
        )
    }

    /// Caps the current magnitude at `limit` m/s.
    pub fn with_current_limit(mut self, limit: f64) -> Self {
        self.current_limit = limit.max(0.0);
        self
    }

    pub fn current_limit(&self) -> f64 {
        self.current_limit
    }

    pub fn max_wind(&self) -> f64 {
        self.wind.max_speed(WIND_LAYERS)
    }

    pub fn current_at(&self, p: LocalPoint) -> Vector2 {
        self.current
            .at(p, CURRENT_LAYERS)
            .clamp_norm(self.current_limit)
    }

    pub fn wind_at(&self, p: LocalPoint) -> Vector2 {
        self.wind.at(p, WIND_LAYERS)
    }

    pub fn depth_at(&self, p: LocalPoint) -> f64 {
        self.depth.at(p)
    }
}
