use alloc::vec::Vec;

use crate::error::{Error, Result};

use super::polygon::Polygon;
use super::transects::{transect_count, SurveyArea};

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub parts: Vec<SurveyArea>,
    /// Vehicle count requested by the caller.
    pub requested: usize,
    /// Set when `requested` had to be reduced.
    pub warning: Option<&'static str>,
}

/// Splits the area into `k` slabs of equal area using cuts parallel to the
/// transects, so every survey line belongs to exactly one vehicle.
///
/// Cut positions are found by bisection on the cross-track coordinate.
pub fn partition(area: &SurveyArea, k: usize) -> Result<Partition> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "vehicle count must be at least one",
        ));
    }
    let w = area.across();
    let (lo, hi) = area.boundary.extent(w);
    let lines = transect_count(hi - lo, area.swath);
    let (k_used, warning) = if k > lines {
        (
            lines,
            Some("more vehicles than transects; vehicle count reduced"),
        )
    } else {
        (k, None)
    };
    if k_used == 1 {
        return Ok(Partition {
            parts: alloc::vec![area.clone()],
            requested: k,
            warning,
        });
    }

    let total = area.boundary.area();
    let below = |c: f64| {
        area.boundary
            .clip_half_plane(w, c)
            .map_or(0.0, |p| p.area())
    };
    let mut cuts = Vec::with_capacity(k_used + 1);
    cuts.push(lo);
    for i in 1..k_used {
        let target = total * i as f64 / k_used as f64;
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if below(m) < target {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-12 * (hi - lo) {
                break;
            }
        }
        cuts.push(0.5 * (a + b));
    }
    cuts.push(hi);

    let parts = cuts
        .windows(2)
        .map(|c| {
            let piece: Option<Polygon> = area.boundary.clip_band(w, c[0], c[1]);
            piece
                .map(|p| area.with_boundary(p))
                .ok_or(Error::InvalidPolygon("partition produced an empty piece"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Partition {
        parts,
        requested: k,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Heading, LocalPoint};
    use alloc::vec;

    fn p(e: f64, n: f64) -> LocalPoint {
        LocalPoint::new(e, n)
    }

    #[test]
    fn unit_square_thirds() {
        let sq = Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap();
        let area = SurveyArea::new(sq, 0.1, Heading::NORTH).unwrap();
        let part = partition(&area, 3).unwrap();
        assert_eq!(part.parts.len(), 3);
        for piece in &part.parts {
            assert!((piece.boundary.area() - 1.0 / 3.0).abs() < 1e-9);
        }
        assert!(part.warning.is_none());
    }

    #[test]
    fn identity_for_one() {
        let sq = Polygon::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap();
        let area = SurveyArea::new(sq, 0.1, Heading::NORTH).unwrap();
        assert_eq!(partition(&area, 1).unwrap().parts, vec![area]);
    }

    #[test]
    fn too_many_vehicles_reduced() {
        let sq =
            Polygon::new(vec![p(0.0, 0.0), p(20.0, 0.0), p(20.0, 20.0), p(0.0, 20.0)]).unwrap();
        let area = SurveyArea::new(sq, 10.0, Heading::NORTH).unwrap();
        let part = partition(&area, 5).unwrap();
        assert_eq!(part.parts.len(), 2);
        assert!(part.warning.is_some());
    }
}
