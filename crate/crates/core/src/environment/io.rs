//! Occupancy grids persist as binary PGM (`P5`, maxval 255, 0 = occupied,
//! 255 = free, first row is the top of the map) with a JSON sidecar header.
//! Distance fields persist as little-endian `f32` rasters in storage order
//! (row `j = 0` first) with the same sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{OccupancyGrid, SignedDistanceField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterHeader {
    pub resolution: f64,
    pub origin_x: f64,
    pub origin_y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

fn write_header(path: &Path, header: &RasterHeader) -> Result<()> {
    let json = serde_json::to_string_pretty(header).expect("header serializes");
    fs::write(sidecar(path), json + "\n").map_err(io_err(&sidecar(path)))
}

fn read_header(path: &Path) -> Result<RasterHeader> {
    let p = sidecar(path);
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    serde_json::from_str(&text).map_err(|e| format_err(&p, e.to_string()))
}

/// Writes `<path>` (PGM) and `<path>.json` (header, extension replaced).
pub fn write_grid(grid: &OccupancyGrid, path: &Path) -> Result<()> {
    let (w, h) = (grid.width(), grid.height());
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for j in (0..h).rev() {
        bytes.extend((0..w).map(|i| if grid.is_occupied(i, j) { 0u8 } else { 255u8 }));
    }
    fs::write(path, bytes).map_err(io_err(path))?;
    let origin = grid.origin();
    write_header(
        path,
        &RasterHeader {
            resolution: grid.resolution(),
            origin_x: origin[0],
            origin_y: origin[1],
            width: None,
            height: None,
        },
    )
}

pub fn read_grid(path: &Path) -> Result<OccupancyGrid> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let header = read_header(path)?;
    let (fields, body) = parse_pgm_header(&bytes).ok_or_else(|| format_err(path, "not a binary PGM"))?;
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(format_err(path, format!("expected maxval 255, got {maxval}")));
    }
    if body.len() != w * h {
        return Err(format_err(
            path,
            format!("expected {} pixels, got {}", w * h, body.len()),
        ));
    }
    let mut cells = vec![false; w * h];
    for (r, row) in body.chunks_exact(w).enumerate() {
        let j = h - 1 - r;
        for (i, &px) in row.iter().enumerate() {
            // Anything darker than mid-gray counts as an obstacle.
            cells[j * w + i] = px < 128;
        }
    }
    OccupancyGrid::from_cells(w, h, header.resolution, [header.origin_x, header.origin_y], cells)
        .map_err(|e| format_err(path, e.to_string()))
}

fn parse_pgm_header(bytes: &[u8]) -> Option<([usize; 3], &[u8])> {
    if !bytes.starts_with(b"P5") {
        return None;
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos)? {
                b'#' => {
                    while *bytes.get(pos)? != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos)?.is_ascii_digit() {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos]).ok()?.parse().ok()?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos)?.is_ascii_whitespace() {
        return None;
    }
    Some((fields, &bytes[pos + 1..]))
}

pub fn write_sdf(sdf: &SignedDistanceField, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = sdf.values().iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
    fs::write(path, bytes).map_err(io_err(path))?;
    let origin = sdf.origin();
    write_header(
        path,
        &RasterHeader {
            resolution: sdf.resolution(),
            origin_x: origin[0],
            origin_y: origin[1],
            width: Some(sdf.width()),
            height: Some(sdf.height()),
        },
    )
}

pub fn read_sdf(path: &Path) -> Result<SignedDistanceField> {
    let header = read_header(path)?;
    let (Some(w), Some(h)) = (header.width, header.height) else {
        return Err(format_err(
            &sidecar(path),
            "distance raster header needs width and height",
        ));
    };
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.len() != 4 * w * h {
        return Err(format_err(
            path,
            format!("expected {} bytes, got {}", 4 * w * h, bytes.len()),
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    SignedDistanceField::from_values(w, h, header.resolution, [header.origin_x, header.origin_y], values)
        .map_err(|e| format_err(path, e.to_string()))
}
