//! Text format for environment rasters.
//!
//! ```text
//! asv-envgrid 1
//! origin 34.0 -81.0
//! cell_size 5
//! rows 2
//! cols 3
//! depth
//! 4.5 4.75 5
//! 4.5 nan 5
//! current_east
//! ...
//! ```
//!
//! The origin is the geodetic position of node (row 0, col 0); rows run
//! north and columns east, `cell_size` meters apart. After the header come
//! five layers in the order depth, current_east, current_north, wind_east,
//! wind_north, each a name line followed by `rows` lines of `cols`
//! whitespace-separated values. `nan` marks a node without data. Lines
//! starting with `#` and blank lines are ignored. Values are written in
//! shortest round-trip form, so write-then-read is exact.

use std::fmt::Write as _;
use std::path::Path;

use asv_core::env::{EnvGrid, GridLayer};
use asv_core::geo::GeoPoint;

pub const MAGIC: &str = "asv-envgrid 1";

const LAYERS: [(&str, GridLayer); 5] = [
    ("depth", GridLayer::Depth),
    ("current_east", GridLayer::CurrentEast),
    ("current_north", GridLayer::CurrentNorth),
    ("wind_east", GridLayer::WindEast),
    ("wind_north", GridLayer::WindNorth),
];

#[derive(Debug, thiserror::Error)]
pub enum GridFileError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("grid: {0}")]
    Invalid(#[from] asv_core::Error),
}

fn fmt_value(out: &mut String, v: f64) {
    if v.is_nan() {
        out.push_str("nan");
    } else {
        let _ = write!(out, "{v}");
    }
}

pub fn write(grid: &EnvGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "origin {} {}", grid.origin.lat, grid.origin.lon);
    let _ = writeln!(out, "cell_size {}", grid.cell_size);
    let _ = writeln!(out, "rows {}", grid.rows);
    let _ = writeln!(out, "cols {}", grid.cols);
    for (name, layer) in LAYERS {
        out.push_str(name);
        out.push('\n');
        for row in grid.layer(layer).chunks(grid.cols.max(1)) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                fmt_value(&mut out, *v);
            }
            out.push('\n');
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), GridFileError> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.trim();
            if !line.is_empty() && !line.starts_with('#') {
                return Ok((i + 1, line));
            }
        }
        Err(GridFileError::Syntax {
            line: 0,
            message: "unexpected end of file".into(),
        })
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), GridFileError> {
        let (n, line) = self.next()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(syntax(n, format!("expected `{key}`")));
        }
        Ok((n, parts.collect()))
    }
}

fn syntax(line: usize, message: impl Into<String>) -> GridFileError {
    GridFileError::Syntax {
        line,
        message: message.into(),
    }
}

fn number<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, GridFileError> {
    s.parse()
        .map_err(|_| syntax(line, format!("bad number `{s}`")))
}

pub fn parse(text: &str) -> Result<EnvGrid, GridFileError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (n, magic) = lines.next()?;
    if magic != MAGIC {
        return Err(syntax(n, format!("expected `{MAGIC}`")));
    }
    let (n, origin) = lines.keyed("origin")?;
    let [lat, lon] = origin[..] else {
        return Err(syntax(n, "origin takes lat and lon"));
    };
    let origin = GeoPoint {
        lat: number(n, lat)?,
        lon: number(n, lon)?,
    };
    let mut scalar = |key: &str| -> Result<(usize, String), GridFileError> {
        let (n, v) = lines.keyed(key)?;
        match v[..] {
            [one] => Ok((n, one.to_string())),
            _ => Err(syntax(n, format!("{key} takes one value"))),
        }
    };
    let (n, cs) = scalar("cell_size")?;
    let cell_size: f64 = number(n, &cs)?;
    let (n, r) = scalar("rows")?;
    let rows: usize = number(n, &r)?;
    let (n, c) = scalar("cols")?;
    let cols: usize = number(n, &c)?;
    if rows.checked_mul(cols).is_none_or(|n| n > 50_000_000) {
        return Err(syntax(n, "grid too large"));
    }

    let mut layers: Vec<Vec<f64>> = Vec::with_capacity(5);
    for (name, _) in LAYERS {
        let (n, rest) = lines.keyed(name)?;
        if !rest.is_empty() {
            return Err(syntax(n, "layer name stands alone"));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (n, line) = lines.next()?;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(if tok.eq_ignore_ascii_case("nan") {
                    f64::NAN
                } else {
                    number(n, tok)?
                });
            }
            if data.len() - before != cols {
                return Err(syntax(n, format!("{name}: expected {cols} values")));
            }
        }
        layers.push(data);
    }
    let mut it = layers.into_iter();
    let mut take = || it.next().expect("five layers read");
    let grid = EnvGrid {
        origin,
        cell_size,
        rows,
        cols,
        depth: take(),
        current_east: take(),
        current_north: take(),
        wind_east: take(),
        wind_north: take(),
    };
    grid.validate()?;
    Ok(grid)
}

pub fn read_file(path: &Path) -> Result<EnvGrid, GridFileError> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn write_file(path: &Path, grid: &EnvGrid) -> Result<(), GridFileError> {
    std::fs::write(path, write(grid))?;
    Ok(())
}
