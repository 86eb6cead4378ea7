//! Cell-averaged depth maps with inverse-distance gap filling.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::EnvGrid;
use crate::error::{Error, Result};
use crate::geo::{geo_to_local, local_to_geo, GeoPoint, LocalPoint};

use super::sample::{Quality, SensorKind, SensorSample};

/// Gap filling draws on at most this many populated cells...
pub const IDW_NEIGHBORS: usize = 8;
/// ...no farther than this many cells away.
pub const IDW_RADIUS_CELLS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DepthGrid {
    /// South-west corner of cell (0, 0).
    pub origin: GeoPoint,
    pub cell_size: f64,
    pub rows: usize,
    pub cols: usize,
    /// Row-major depth per cell (row 0 is southmost); NaN when empty.
    pub depth: Vec<f64>,
    /// Samples averaged into each cell (0 for interpolated or empty cells).
    pub counts: Vec<u32>,
}

impl DepthGrid {
    pub fn empty(origin: GeoPoint, cell_size: f64) -> Self {
        DepthGrid {
            origin,
            cell_size,
            rows: 0,
            cols: 0,
            depth: Vec::new(),
            counts: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.depth.iter().all(|d| d.is_nan())
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        (row < self.rows && col < self.cols)
            .then(|| self.depth[row * self.cols + col])
            .filter(|d| !d.is_nan())
    }

    pub fn count(&self, row: usize, col: usize) -> u32 {
        if row < self.rows && col < self.cols {
            self.counts[row * self.cols + col]
        } else {
            0
        }
    }

    pub fn populated(&self) -> usize {
        self.counts.iter().filter(|c| **c > 0).count()
    }

    pub fn interpolated(&self) -> usize {
        self.depth
            .iter()
            .zip(&self.counts)
            .filter(|(d, c)| !d.is_nan() && **c == 0)
            .count()
    }

    /// Center of a cell relative to `frame_origin`.
    pub fn cell_center(
        &self,
        frame_origin: GeoPoint,
        row: usize,
        col: usize,
    ) -> Result<LocalPoint> {
        let sw = geo_to_local(frame_origin, self.origin)?;
        Ok(LocalPoint::new(
            sw.east + (col as f64 + 0.5) * self.cell_size,
            sw.north + (row as f64 + 0.5) * self.cell_size,
        ))
    }

    /// Sample-count-weighted mean over populated cells; equals the mean of
    /// all contributing samples.
    pub fn weighted_mean(&self) -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0u64);
        for (d, c) in self.depth.iter().zip(&self.counts) {
            if *c > 0 {
                sum += d * *c as f64;
                n += *c as u64;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Node-based environment grid with one node per cell center; only the
    /// depth layer carries data.
    pub fn to_env_grid(&self) -> Result<EnvGrid> {
        let center = local_to_geo(
            self.origin,
            LocalPoint::new(0.5 * self.cell_size, 0.5 * self.cell_size),
        )?;
        let n = self.rows * self.cols;
        let grid = EnvGrid {
            origin: center,
            cell_size: self.cell_size,
            rows: self.rows,
            cols: self.cols,
            depth: self.depth.clone(),
            current_east: vec![f64::NAN; n],
            current_north: vec![f64::NAN; n],
            wind_east: vec![f64::NAN; n],
            wind_north: vec![f64::NAN; n],
        };
        grid.validate()?;
        Ok(grid)
    }
}

/// Averages `Ok` depth samples into square cells and fills empty cells by
/// inverse-distance weighting from up to eight populated cells within five
/// cells. Positions are projected around the first sample.
pub fn grid_depth(samples: &[SensorSample], cell_size: f64) -> Result<DepthGrid> {
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(Error::InvalidParameter("cell size must be positive"));
    }
    let good: Vec<&SensorSample> = samples
        .iter()
        .filter(|s| s.kind == SensorKind::Depth && s.quality == Quality::Ok)
        .filter(|s| s.value().is_some_and(|v| v.is_finite() && v >= 0.0))
        .collect();
    let Some(first) = good.first() else {
        let origin = samples
            .first()
            .map_or(GeoPoint { lat: 0.0, lon: 0.0 }, |s| s.pos);
        return Ok(DepthGrid::empty(origin, cell_size));
    };
    let frame = first.pos;
    let pts = good
        .iter()
        .map(|s| geo_to_local(frame, s.pos))
        .collect::<Result<Vec<_>>>()?;
    let min_e = pts.iter().map(|p| p.east).fold(f64::INFINITY, f64::min);
    let min_n = pts.iter().map(|p| p.north).fold(f64::INFINITY, f64::min);
    let max_e = pts.iter().map(|p| p.east).fold(f64::NEG_INFINITY, f64::max);
    let max_n = pts
        .iter()
        .map(|p| p.north)
        .fold(f64::NEG_INFINITY, f64::max);
    // the extreme samples sit mid-cell, away from rounding at cell edges
    let e0 = min_e - 0.5 * cell_size;
    let n0 = min_n - 0.5 * cell_size;
    let cols = libm::floor((max_e - e0) / cell_size) as usize + 1;
    let rows = libm::floor((max_n - n0) / cell_size) as usize + 1;
    if rows.saturating_mul(cols) > 16_000_000 {
        return Err(Error::GridShape);
    }

    let mut sum = vec![0.0; rows * cols];
    let mut counts = vec![0u32; rows * cols];
    for (s, p) in good.iter().zip(&pts) {
        let c = (libm::floor((p.east - e0) / cell_size) as usize).min(cols - 1);
        let r = (libm::floor((p.north - n0) / cell_size) as usize).min(rows - 1);
        sum[r * cols + c] += s.raw[0];
        counts[r * cols + c] += 1;
    }
    let mut depth: Vec<f64> = sum
        .iter()
        .zip(&counts)
        .map(|(s, c)| if *c > 0 { s / *c as f64 } else { f64::NAN })
        .collect();

    let reach = IDW_RADIUS_CELLS as isize;
    let mut near: Vec<(f64, f64)> = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if counts[r * cols + c] > 0 {
                continue;
            }
            near.clear();
            for dr in -reach..=reach {
                for dc in -reach..=reach {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize {
                        continue;
                    }
                    let k = rr as usize * cols + cc as usize;
                    let d = libm::hypot(dr as f64, dc as f64);
                    if counts[k] > 0 && d <= IDW_RADIUS_CELLS {
                        near.push((d, sum[k] / counts[k] as f64));
                    }
                }
            }
            if near.is_empty() {
                continue;
            }
            near.sort_by(|a, b| a.0.total_cmp(&b.0));
            near.truncate(IDW_NEIGHBORS);
            let (mut wsum, mut vsum) = (0.0, 0.0);
            for (d, v) in &near {
                let w = 1.0 / (d * d);
                wsum += w;
                vsum += w * v;
            }
            depth[r * cols + c] = vsum / wsum;
        }
    }

    Ok(DepthGrid {
        origin: local_to_geo(frame, LocalPoint::new(e0, n0))?,
        cell_size,
        rows,
        cols,
        depth,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Heading;

    fn sample(origin: GeoPoint, e: f64, n: f64, d: f64) -> SensorSample {
        SensorSample {
            t: 0.0,
            pos: local_to_geo(origin, LocalPoint::new(e, n)).unwrap(),
            psi: Heading::NORTH,
            kind: SensorKind::Depth,
            raw: vec![d],
            quality: Quality::Ok,
            v_ground: None,
        }
    }

    #[test]
    fn no_samples_gives_empty_grid() {
        let g = grid_depth(&[], 5.0).unwrap();
        assert!(g.is_empty());
        assert_eq!(g.rows * g.cols, 0);
    }

    #[test]
    fn single_sample_one_cell() {
        let o = GeoPoint::new(34.0, -81.0).unwrap();
        let g = grid_depth(&[sample(o, 0.0, 0.0, 4.0)], 5.0).unwrap();
        assert_eq!((g.rows, g.cols), (1, 1));
        assert_eq!(g.get(0, 0), Some(4.0));
        assert_eq!(g.populated(), 1);
    }

    #[test]
    fn gap_filled_from_neighbors() {
        let o = GeoPoint::new(34.0, -81.0).unwrap();
        let s = [
            sample(o, 0.5, 0.5, 2.0),
            sample(o, 6.5, 0.5, 4.0),
            sample(o, 60.5, 0.5, 9.0),
        ];
        let g = grid_depth(&s, 1.0).unwrap();
        assert_eq!(g.cols, 61);
        // midway between the first two samples
        let mid = g.get(0, 3).unwrap();
        assert!((mid - 3.0).abs() < 1e-9);
        // more than five cells from anything populated
        assert_eq!(g.get(0, 40), None);
        assert!(g.get(0, 11).is_some() && g.get(0, 12).is_none());
        assert_eq!(g.count(0, 3), 0);
        assert_eq!(g.interpolated(), 5 + 5 + 5);
    }

    #[test]
    fn suspect_and_undefined_excluded() {
        let o = GeoPoint::new(34.0, -81.0).unwrap();
        let mut bad = sample(o, 0.0, 0.0, 40.0);
        bad.quality = Quality::Suspect;
        let mut undef = sample(o, 0.0, 0.0, f64::NAN);
        undef.quality = Quality::Undefined;
        let g = grid_depth(&[sample(o, 0.0, 0.0, 4.0), bad, undef], 5.0).unwrap();
        assert_eq!(g.get(0, 0), Some(4.0));
        assert_eq!(g.count(0, 0), 1);
    }
}
