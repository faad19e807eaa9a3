//! Plain-text map and trajectory files.
//!
//! Two ground-truth formats are read:
//!
//! * point cloud: one `x y z` triple (meters) per line, voxelized at the
//!   scenario resolution;
//! * voxel list: header lines `dims nx ny nz`, `res r`, `origin ox oy oz`
//!   followed by one `ix iy iz` triple per occupied voxel.
//!
//! Blank lines and lines starting with `#` are ignored in both.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{CellIdx, GridConfig, OccupancyGrid, VoxelState};
use crate::Vec3;

fn map_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::MapFormat { path: path.display().to_string(), msg: format!("line {line}: {msg}") }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_floats<const N: usize>(path: &Path, line: usize, fields: &[&str]) -> Result<[f64; N]> {
    if fields.len() != N {
        return Err(map_err(path, line, format!("expected {N} numbers, found {}", fields.len())));
    }
    let mut out = [0.0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f.parse::<f64>().map_err(|e| map_err(path, line, format!("`{f}`: {e}")))?;
        if !o.is_finite() {
            return Err(map_err(path, line, format!("`{f}` is not finite")));
        }
    }
    Ok(out)
}

/// Occupied points of a map file as world coordinates (voxel centers for the
/// voxel-list format).
pub fn parse_map(text: &str, path: &Path) -> Result<Vec<Vec3>> {
    let mut lines = content_lines(text).peekable();
    let is_voxel_list = lines.peek().is_some_and(|(_, l)| l.starts_with("dims"));
    if !is_voxel_list {
        return lines
            .map(|(n, l)| {
                let f: Vec<&str> = l.split_whitespace().collect();
                parse_floats::<3>(path, n, &f).map(Vec3::from)
            })
            .collect();
    }
    let mut header = |key: &str| -> Result<(usize, Vec<String>)> {
        let (n, l) = lines.next().ok_or_else(|| map_err(path, 0, format!("missing `{key}` header")))?;
        let mut f = l.split_whitespace();
        if f.next() != Some(key) {
            return Err(map_err(path, n, format!("expected `{key}` header")));
        }
        Ok((n, f.map(str::to_string).collect()))
    };
    let (n, dims) = header("dims")?;
    let dims_ref: Vec<&str> = dims.iter().map(String::as_str).collect();
    let d = parse_floats::<3>(path, n, &dims_ref)?;
    let (n, res) = header("res")?;
    let res_ref: Vec<&str> = res.iter().map(String::as_str).collect();
    let [r] = parse_floats::<1>(path, n, &res_ref)?;
    let (n, origin) = header("origin")?;
    let origin_ref: Vec<&str> = origin.iter().map(String::as_str).collect();
    let o = parse_floats::<3>(path, n, &origin_ref)?;
    if d.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
        return Err(map_err(path, n, "dims must be positive integers"));
    }
    let cfg = GridConfig::new(Vec3::from(o), r, d.map(|v| v as usize))
        .map_err(|e| map_err(path, n, e))?;
    lines
        .map(|(n, l)| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let v = parse_floats::<3>(path, n, &f)?;
            if v.iter().any(|x| x.fract() != 0.0) {
                return Err(map_err(path, n, "voxel indices must be integers"));
            }
            let c: CellIdx = v.map(|x| x as i32);
            if !cfg.in_bounds(c) {
                return Err(map_err(path, n, format!("voxel {c:?} outside dims")));
            }
            Ok(cfg.center(c))
        })
        .collect()
}

/// Ground truth on `cfg`: voxels containing an occupied point are Occupied,
/// all others Free. Points outside the box are ignored.
pub fn load_truth(path: &Path, cfg: &GridConfig) -> Result<OccupancyGrid> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MapFormat { path: path.display().to_string(), msg: e.to_string() })?;
    let pts = parse_map(&text, path)?;
    Ok(OccupancyGrid::from_occupied(cfg.clone(), pts.iter().filter_map(|p| cfg.cell_of(p))))
}

/// Voxel-list text for the Occupied cells of `grid`.
pub fn voxel_list_string(grid: &OccupancyGrid) -> String {
    let cfg = grid.config();
    let mut s = String::new();
    writeln!(s, "dims {} {} {}", cfg.dims[0], cfg.dims[1], cfg.dims[2]).unwrap();
    writeln!(s, "res {}", cfg.resolution).unwrap();
    writeln!(s, "origin {} {} {}", cfg.origin.x, cfg.origin.y, cfg.origin.z).unwrap();
    for (i, st) in grid.cells().iter().enumerate() {
        if *st == VoxelState::Occupied {
            let c = cfg.delinear(i);
            writeln!(s, "{} {} {}", c[0], c[1], c[2]).unwrap();
        }
    }
    s
}

/// One `x y z` line per point, fixed six decimals.
pub fn points_string<'a>(pts: impl IntoIterator<Item = &'a Vec3>) -> String {
    let mut s = String::new();
    for p in pts {
        writeln!(s, "{:.6} {:.6} {:.6}", p.x, p.y, p.z).unwrap();
    }
    s
}

/// Point cloud of the cells of `grid` in state `state`.
pub fn cells_points_string(grid: &OccupancyGrid, state: VoxelState) -> String {
    let cfg = grid.config();
    let pts: Vec<Vec3> = grid
        .cells()
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == state)
        .map(|(i, _)| cfg.center_of_linear(i))
        .collect();
    points_string(&pts)
}
