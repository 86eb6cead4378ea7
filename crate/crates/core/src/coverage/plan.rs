use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geo::{Heading, LocalPoint};

use super::dubins::{dubins_connect, DubinsPath, Pose};
use super::partition::partition;
use super::transects::{transects, SurveyArea, Transect};

/// Interior waypoints used to approximate every turn, at minimum.
pub const MIN_TURN_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlanPoint {
    pub pos: LocalPoint,
    /// True for points sampled from a turn (curvature-checked).
    pub turn: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VehiclePlan {
    pub area: SurveyArea,
    pub entry: LocalPoint,
    pub transects: Vec<Transect>,
    pub waypoints: Vec<PlanPoint>,
}

impl VehiclePlan {
    pub fn points(&self) -> impl Iterator<Item = LocalPoint> + '_ {
        self.waypoints.iter().map(|p| p.pos)
    }

    /// Polyline length through all waypoints, m.
    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| w[0].pos.distance(w[1].pos))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoveragePlan {
    pub vehicles: Vec<VehiclePlan>,
    pub r_min: f64,
    pub swath: f64,
    /// Fraction of the survey area's raster cells within half a swath of
    /// some planned track.
    pub coverage_ratio: f64,
    pub warning: Option<&'static str>,
}

/// Waypoints along a Dubins path, excluding both ends, at spacing no larger
/// than `max_step` and never fewer than [`MIN_TURN_SAMPLES`].
pub fn densify(path: &DubinsPath, max_step: f64) -> Vec<LocalPoint> {
    let len = path.length();
    if len <= 1e-9 {
        return Vec::new();
    }
    let segments = libm::ceil(len / max_step).max((MIN_TURN_SAMPLES + 1) as f64) as usize;
    (1..segments)
        .map(|i| path.sample(len * i as f64 / segments as f64).pos)
        .collect()
}

/// Orders one vehicle's transects so the survey starts at the end nearest
/// the entry point.
fn order_from(entry: LocalPoint, lines: &[Transect]) -> Vec<Transect> {
    let n = lines.len();
    let candidates = [
        lines.to_vec(),
        lines.iter().map(Transect::reversed).collect(),
        lines.iter().rev().copied().collect(),
        lines
            .iter()
            .rev()
            .map(Transect::reversed)
            .collect::<Vec<_>>(),
    ];
    let mut best = candidates[0].clone();
    let mut best_d = f64::INFINITY;
    for c in candidates {
        // only orders that keep alternating directions are valid
        let alternating =
            (1..n).all(|i| (c[i].end - c[i].start).dot(c[i - 1].end - c[i - 1].start) <= 0.0);
        let d = c.first().map_or(f64::INFINITY, |t| entry.distance(t.start));
        if alternating && d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn push_path(out: &mut Vec<PlanPoint>, path: &DubinsPath, max_step: f64) {
    out.extend(
        densify(path, max_step)
            .into_iter()
            .map(|pos| PlanPoint { pos, turn: true }),
    );
}

/// Single-vehicle plan: approach, alternating transects joined by Dubins
/// turns, and a return to the entry point.
pub fn plan_vehicle(
    area: &SurveyArea,
    entry: LocalPoint,
    r_min: f64,
    max_step: f64,
) -> Result<VehiclePlan> {
    let lines = order_from(entry, &transects(area));
    let Some(first) = lines.first() else {
        return Err(Error::InvalidPolygon("area has no transects"));
    };
    let mut wps = Vec::new();
    wps.push(PlanPoint {
        pos: entry,
        turn: false,
    });

    let approach_heading = if entry.distance(first.start) > 1e-9 {
        entry.bearing_to(first.start)
    } else {
        first.heading()
    };
    let approach = dubins_connect(
        Pose::new(entry, approach_heading),
        Pose::new(first.start, first.heading()),
        r_min,
    )?;
    push_path(&mut wps, &approach, max_step);

    for (i, t) in lines.iter().enumerate() {
        if i > 0 {
            let prev = lines[i - 1];
            let turn = dubins_connect(
                Pose::new(prev.end, prev.heading()),
                Pose::new(t.start, t.heading()),
                r_min,
            )?;
            push_path(&mut wps, &turn, max_step);
        }
        wps.push(PlanPoint {
            pos: t.start,
            turn: false,
        });
        wps.push(PlanPoint {
            pos: t.end,
            turn: false,
        });
    }

    let last = *lines.last().expect("non-empty");
    let home_heading = if last.end.distance(entry) > 1e-9 {
        last.end.bearing_to(entry)
    } else {
        last.heading()
    };
    let back = dubins_connect(
        Pose::new(last.end, last.heading()),
        Pose::new(entry, home_heading),
        r_min,
    )?;
    push_path(&mut wps, &back, max_step);
    wps.push(PlanPoint {
        pos: entry,
        turn: false,
    });
    wps.dedup_by(|a, b| a.pos.distance(b.pos) < 1e-9);

    Ok(VehiclePlan {
        area: area.clone(),
        entry,
        transects: lines,
        waypoints: wps,
    })
}

/// Multi-vehicle coverage plan. `entries` holds one entry point per
/// vehicle (extra entries are ignored when the vehicle count is reduced).
pub fn plan(
    area: &SurveyArea,
    k: usize,
    r_min: f64,
    entries: &[LocalPoint],
) -> Result<CoveragePlan> {
    if !(r_min.is_finite() && r_min > 0.0) {
        return Err(Error::InvalidParameter("turning radius must be positive"));
    }
    let part = partition(area, k)?;
    if entries.len() < part.parts.len() {
        return Err(Error::InvalidParameter(
            "one entry point is needed per vehicle",
        ));
    }
    // turns are sampled at least every half radius so chords stay close to the arc
    let max_step = 0.5 * r_min;
    let vehicles = part
        .parts
        .iter()
        .zip(entries)
        .map(|(a, e)| plan_vehicle(a, *e, r_min, max_step))
        .collect::<Result<Vec<_>>>()?;
    let coverage_ratio = coverage_ratio(
        area,
        vehicles.iter().map(|v| v.waypoints.as_slice()),
        area.swath / 5.0,
    );
    Ok(CoveragePlan {
        vehicles,
        r_min,
        swath: area.swath,
        coverage_ratio,
        warning: part.warning,
    })
}

fn segment_distance(p: LocalPoint, a: LocalPoint, b: LocalPoint) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 <= 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Fraction of raster cells (centers inside the polygon, spacing `cell`)
/// lying within half a swath of any track polyline.
pub fn coverage_ratio<'a>(
    area: &SurveyArea,
    tracks: impl Iterator<Item = &'a [PlanPoint]>,
    cell: f64,
) -> f64 {
    let segs: Vec<(LocalPoint, LocalPoint)> = tracks
        .flat_map(|t| t.windows(2).map(|w| (w[0].pos, w[1].pos)))
        .collect();
    coverage_of_segments(area, &segs, cell)
}

pub fn coverage_of_segments(
    area: &SurveyArea,
    segs: &[(LocalPoint, LocalPoint)],
    cell: f64,
) -> f64 {
    let (min, max) = area.boundary.bbox();
    let half = 0.5 * area.swath;
    let nx = libm::ceil((max.east - min.east) / cell) as usize;
    let ny = libm::ceil((max.north - min.north) / cell) as usize;
    let (mut inside, mut covered) = (0usize, 0usize);
    for j in 0..ny {
        for i in 0..nx {
            let c = LocalPoint::new(
                min.east + (i as f64 + 0.5) * cell,
                min.north + (j as f64 + 0.5) * cell,
            );
            if !area.boundary.contains(c) {
                continue;
            }
            inside += 1;
            if segs
                .iter()
                .any(|(a, b)| segment_distance(c, *a, *b) <= half + 1e-9)
            {
                covered += 1;
            }
        }
    }
    if inside == 0 {
        0.0
    } else {
        covered as f64 / inside as f64
    }
}

/// Radius of the circle through three points (infinite when collinear).
pub fn circumradius(a: LocalPoint, b: LocalPoint, c: LocalPoint) -> f64 {
    let ab = a.distance(b);
    let bc = b.distance(c);
    let ca = c.distance(a);
    let cross = (b - a).cross(c - a).abs();
    if cross <= 1e-12 * (ab * bc).max(1e-300) {
        f64::INFINITY
    } else {
        ab * bc * ca / (2.0 * cross)
    }
}

/// Smallest circumradius over consecutive triples centered on turn points.
pub fn min_turn_radius(points: &[PlanPoint]) -> f64 {
    points
        .windows(3)
        .filter(|w| w[1].turn)
        .map(|w| circumradius(w[0].pos, w[1].pos, w[2].pos))
        .fold(f64::INFINITY, f64::min)
}

/// Heading of the first survey line, for vehicles positioned at the entry.
pub fn initial_heading(plan: &VehiclePlan) -> Heading {
    match plan.waypoints.as_slice() {
        [a, b, ..] => a.pos.bearing_to(b.pos),
        _ => Heading::NORTH,
    }
}
