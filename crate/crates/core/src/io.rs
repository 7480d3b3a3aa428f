//! File formats.
//!
//! * point patterns: CSV with header `x,y`; lines starting with `#` are comments.
//!   The window lives in a sidecar JSON `{"x_min":..,"x_max":..,"y_min":..,"y_max":..}`.
//! * marked patterns: CSV with header `x,y,phi_star`.
//! * raster surfaces: one line of JSON `{"window":..,"nx":..,"ny":..}` followed by
//!   `ny` CSV rows of `nx` values, bottom row (`y_min`) first.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ObservationWindow, Point};
use crate::pattern::{MarkedPattern, MarkedRow, PointPattern};
use crate::raster::{RasterDims, RasterSurface};

/// `rep_0001.csv` -> `rep_0001.window.json`
pub fn sidecar_path(pattern_path: &Path) -> PathBuf {
    pattern_path.with_extension("window.json")
}

pub fn read_window(path: &Path) -> Result<ObservationWindow> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_window(path: &Path, w: &ObservationWindow) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(w)? + "\n")?;
    Ok(())
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

pub fn read_points_csv<R: Read>(r: R) -> Result<Vec<Point>> {
    let mut rdr = csv_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "x" || &headers[1] != "y" {
        return Err(Error::Parse(format!(
            "pattern CSV must start with header `x,y`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::Parse("short row in pattern CSV".into()))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad coordinate: {e}")))
        };
        points.push(Point::new(parse(0)?, parse(1)?));
    }
    Ok(points)
}

pub fn read_pattern(csv_path: &Path, window: &ObservationWindow) -> Result<PointPattern> {
    let points = read_points_csv(fs::File::open(csv_path)?)?;
    PointPattern::new(points, *window)
}

/// Reads a pattern and its window, defaulting to the sidecar next to the CSV.
pub fn read_pattern_with_sidecar(
    csv_path: &Path,
    window_path: Option<&Path>,
) -> Result<PointPattern> {
    let wpath = window_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| sidecar_path(csv_path));
    let window = read_window(&wpath)?;
    read_pattern(csv_path, &window)
}

pub fn write_points_csv<W: Write>(w: W, pattern: &PointPattern) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["x", "y"])?;
    for p in pattern.points() {
        wtr.write_record([p.x.to_string(), p.y.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes the CSV and its window sidecar.
pub fn write_pattern(csv_path: &Path, pattern: &PointPattern) -> Result<()> {
    write_points_csv(fs::File::create(csv_path)?, pattern)?;
    write_window(&sidecar_path(csv_path), pattern.window())
}

pub fn write_marked_csv<W: Write>(w: W, mp: &MarkedPattern) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for (p, m) in mp.iter() {
        wtr.serialize(MarkedRow {
            x: p.x,
            y: p.y,
            phi_star: m,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_marked_csv<R: Read>(r: R, window: &ObservationWindow) -> Result<MarkedPattern> {
    let mut rdr = csv_reader(r);
    let mut points = Vec::new();
    let mut marks = Vec::new();
    for row in rdr.deserialize::<MarkedRow>() {
        let row = row?;
        points.push(Point::new(row.x, row.y));
        marks.push(row.phi_star);
    }
    MarkedPattern::new(PointPattern::new(points, *window)?, marks)
}

#[derive(Serialize, Deserialize)]
struct RasterHeader {
    window: ObservationWindow,
    nx: usize,
    ny: usize,
}

pub fn write_raster<W: Write>(mut w: W, s: &RasterSurface) -> Result<()> {
    let header = RasterHeader {
        window: *s.window(),
        nx: s.nx(),
        ny: s.ny(),
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for row in s.values().chunks(s.nx()) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raster<R: Read>(r: R) -> Result<RasterSurface> {
    let mut lines = BufReader::new(r).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Parse("empty raster file".into()))??;
    let header: RasterHeader = serde_json::from_str(&first)?;
    let mut values = Vec::with_capacity(header.nx * header.ny);
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for tok in line.split(',') {
            values.push(
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("raster row {row}: {e}")))?,
            );
        }
        if values.len() - before != header.nx {
            return Err(Error::Parse(format!(
                "raster row {row} has {} values, expected {}",
                values.len() - before,
                header.nx
            )));
        }
    }
    RasterSurface::new(header.window, RasterDims::new(header.nx, header.ny), values)
}

pub fn write_raster_file(path: &Path, s: &RasterSurface) -> Result<()> {
    write_raster(std::io::BufWriter::new(fs::File::create(path)?), s)
}

pub fn read_raster_file(path: &Path) -> Result<RasterSurface> {
    read_raster(fs::File::open(path)?)
}
