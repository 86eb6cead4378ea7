//! Plain-text run artifacts.
//!
//! Sample log (`samples.jsonl`): one JSON object per line,
//! `{"t":12.5,"sys_id":1,"lat":34.0001,"lon":-81.0,"psi":1.5708,"kind":"depth","values":[4.98],"quality":"ok"}`.
//! `psi` is radians clockwise from north; `values` holds one depth in meters
//! or a boat-frame (forward, starboard) vector in m/s; an undefined reading
//! is `null`. Wind and current lines also carry `"v_ground":[east, north]`.
//!
//! Track log (`track.csv`): one row per vehicle per control tick, ordered
//! by time then sys_id, with the columns in [`TRACK_HEADER`].

use std::io::{self, Write};

use asv_core::geo::GeoPoint;
use asv_core::sensing::{Quality, SensorKind, SensorSample};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleLine {
    pub t: f64,
    pub sys_id: u8,
    pub lat: f64,
    pub lon: f64,
    pub psi: f64,
    pub kind: SensorKind,
    pub values: Vec<Option<f64>>,
    pub quality: Quality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_ground: Option<[f64; 2]>,
}

impl SampleLine {
    pub fn from_sample(sys_id: u8, s: &SensorSample) -> Self {
        SampleLine {
            t: s.t,
            sys_id,
            lat: s.pos.lat,
            lon: s.pos.lon,
            psi: s.psi.radians(),
            kind: s.kind,
            values: s.raw.iter().map(|v| v.is_finite().then_some(*v)).collect(),
            quality: s.quality,
            v_ground: s
                .kind
                .is_vector()
                .then(|| s.v_ground.map(|v| [v.x, v.y]))
                .flatten(),
        }
    }

    pub fn to_sample(&self) -> Result<SensorSample, asv_core::Error> {
        Ok(SensorSample {
            t: self.t,
            pos: GeoPoint::new(self.lat, self.lon)?,
            psi: asv_core::geo::Heading::new(self.psi)?,
            kind: self.kind,
            raw: self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
            quality: self.quality,
            v_ground: self
                .v_ground
                .map(|[e, n]| asv_core::geo::Vector2::new(e, n)),
        })
    }
}

pub fn write_sample<W: Write>(out: &mut W, sys_id: u8, s: &SensorSample) -> io::Result<()> {
    let line =
        serde_json::to_string(&SampleLine::from_sample(sys_id, s)).map_err(io::Error::other)?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")
}

/// Parses a sample log, skipping nothing: the first bad line is an error.
pub fn read_samples(text: &str) -> Result<Vec<(u8, SensorSample)>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line: SampleLine =
                serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1))?;
            let s = line
                .to_sample()
                .map_err(|e| format!("line {}: {e}", i + 1))?;
            Ok((line.sys_id, s))
        })
        .collect()
}

pub const TRACK_HEADER: &str =
    "t,sys_id,lat,lon,east,north,psi,v_water,vg_east,vg_north,fuel,engine,mode,active_wp,xte";

#[derive(Debug, Clone, PartialEq)]
pub struct TrackRow {
    pub t: f64,
    pub sys_id: u8,
    pub geo: GeoPoint,
    pub east: f64,
    pub north: f64,
    pub psi: f64,
    pub v_water: f64,
    pub vg_east: f64,
    pub vg_north: f64,
    pub fuel: f64,
    pub engine: &'static str,
    pub mode: &'static str,
    pub active_wp: Option<usize>,
    pub xte: Option<f64>,
}

pub fn write_track_row<W: Write>(out: &mut W, r: &TrackRow) -> io::Result<()> {
    write!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},",
        r.t,
        r.sys_id,
        r.geo.lat,
        r.geo.lon,
        r.east,
        r.north,
        r.psi,
        r.v_water,
        r.vg_east,
        r.vg_north,
        r.fuel,
        r.engine,
        r.mode
    )?;
    if let Some(a) = r.active_wp {
        write!(out, "{a}")?;
    }
    out.write_all(b",")?;
    if let Some(x) = r.xte {
        write!(out, "{x}")?;
    }
    out.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use asv_core::geo::{Heading, Vector2};

    #[test]
    fn sample_line_round_trip() {
        let s = SensorSample {
            t: 1.25,
            pos: GeoPoint {
                lat: 34.5,
                lon: -81.25,
            },
            psi: Heading::new(0.5).unwrap(),
            kind: SensorKind::Current,
            raw: vec![-1.0, 0.25],
            quality: Quality::Ok,
            v_ground: Some(Vector2::new(0.5, 2.0)),
        };
        let mut buf = Vec::new();
        write_sample(&mut buf, 3, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(r#""kind":"current""#), "{text}");
        let back = read_samples(&text).unwrap();
        assert_eq!(back, vec![(3, s)]);
    }

    #[test]
    fn undefined_depth_is_null() {
        let s = SensorSample {
            t: 0.0,
            pos: GeoPoint { lat: 0.0, lon: 0.0 },
            psi: Heading::NORTH,
            kind: SensorKind::Depth,
            raw: vec![f64::NAN],
            quality: Quality::Undefined,
            v_ground: None,
        };
        let mut buf = Vec::new();
        write_sample(&mut buf, 1, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(
            text.contains(r#""values":[null]"#) && !text.contains("v_ground"),
            "{text}"
        );
        let (_, back) = read_samples(&text).unwrap().remove(0);
        assert!(back.raw[0].is_nan());
    }
}
