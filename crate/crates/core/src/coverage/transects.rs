use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geo::{Heading, LocalPoint, Vector2};

use super::polygon::Polygon;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SurveyArea {
    pub boundary: Polygon,
    /// Sensor swath width, m.
    pub swath: f64,
    /// Direction of the survey lines; north-south by default.
    pub transect_heading: Heading,
}

impl SurveyArea {
    pub fn new(boundary: Polygon, swath: f64, transect_heading: Heading) -> Result<Self> {
        if !(swath.is_finite() && swath > 0.0) {
            return Err(Error::InvalidParameter("swath must be positive"));
        }
        Ok(SurveyArea {
            boundary,
            swath,
            transect_heading,
        })
    }

    /// Unit vector along the transects.
    pub fn along(&self) -> Vector2 {
        self.transect_heading.unit()
    }

    /// Unit vector across the transects (to starboard of `along`).
    pub fn across(&self) -> Vector2 {
        let u = self.along();
        Vector2::new(u.y, -u.x)
    }

    pub fn with_boundary(&self, boundary: Polygon) -> SurveyArea {
        SurveyArea {
            boundary,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transect {
    pub start: LocalPoint,
    pub end: LocalPoint,
}

impl Transect {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn reversed(&self) -> Transect {
        Transect {
            start: self.end,
            end: self.start,
        }
    }

    pub fn heading(&self) -> Heading {
        self.start.bearing_to(self.end)
    }
}

/// Number of transects needed to sweep a width `w` with swath `swath`.
pub fn transect_count(w: f64, swath: f64) -> usize {
    if w <= swath {
        1
    } else {
        // tolerance keeps exact multiples from gaining a line to rounding
        libm::ceil(w / swath - 1e-9) as usize
    }
}

/// Parallel survey lines exactly `swath` apart, centered across the area,
/// alternating direction for back-and-forth traversal.
///
/// Each line spans the polygon's extent inside its own swath strip, so
/// sloping edges are still covered to the corner.
pub fn transects(area: &SurveyArea) -> Vec<Transect> {
    let u = area.along();
    let w = area.across();
    let (lo, hi) = area.boundary.extent(w);
    let n = transect_count(hi - lo, area.swath);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * area.swath;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let s = mid + (i as f64 - (n as f64 - 1.0) / 2.0) * area.swath;
        let strip = area
            .boundary
            .clip_band(w, (s - half).max(lo), (s + half).min(hi))
            .or_else(|| area.boundary.clip_band(w, s - half, s + half));
        let Some(strip) = strip else {
            continue;
        };
        let (a0, a1) = strip.extent(u);
        let at = |a: f64| LocalPoint::ORIGIN + w * s + u * a;
        let t = Transect {
            start: at(a0),
            end: at(a1),
        };
        out.push(if out.len() % 2 == 0 { t } else { t.reversed() });
    }
    out
}
