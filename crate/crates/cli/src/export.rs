//! Density field output: CSV tables, grayscale PNG rasters and legacy VTK.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use demto::grid::Grid;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Image,
    Vtk,
}

/// Density threshold for solid voxels in 3D exports.
pub const VOXEL_THRESHOLD: f64 = 0.8;

pub fn export_density(rho: &[f64], grid: &Grid, format: Format, path: &Path) -> Result<(), CliError> {
    if rho.len() != grid.element_count() {
        return Err(CliError::Shape {
            left: rho.len(),
            right: grid.element_count(),
        });
    }
    match format {
        Format::Csv => write(path, density_csv(rho, grid)),
        Format::Vtk => write(path, vtk_text(grid, &[("density", Scalars::Real(rho))])),
        Format::Image => {
            let img = density_image(rho, grid)?;
            img.save_with_format(path, image::ImageFormat::Png)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
    }
}

/// Writes the density together with a 0/1 field marking elements at or
/// above `threshold`.
pub fn export_voxels(rho: &[f64], grid: &Grid, threshold: f64, path: &Path) -> Result<usize, CliError> {
    let solid: Vec<u8> = rho.iter().map(|&r| u8::from(r >= threshold)).collect();
    let count = solid.iter().filter(|&&s| s == 1).count();
    write(
        path,
        vtk_text(grid, &[("density", Scalars::Real(rho)), ("solid", Scalars::Flag(&solid))]),
    )?;
    Ok(count)
}

fn write(path: &Path, text: String) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn density_csv(rho: &[f64], grid: &Grid) -> String {
    let d = grid.dim();
    let mut out = String::from(if d == 3 { "element,x,y,z,density\n" } else { "element,x,y,density\n" });
    for (e, r) in rho.iter().enumerate() {
        let c = grid.element_center(e);
        let _ = write!(out, "{e}");
        for x in &c[..d] {
            let _ = write!(out, ",{x}");
        }
        let _ = writeln!(out, ",{r}");
    }
    out
}

/// Reads the density column back from [`density_csv`] output.
pub fn read_density_csv(text: &str) -> Result<Vec<f64>, CliError> {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.rsplit(',')
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Io(format!("bad density row `{l}`")))
        })
        .collect()
}

/// One pixel per element, top row first, solid black and void white.
pub fn density_image(rho: &[f64], grid: &Grid) -> Result<image::GrayImage, CliError> {
    if grid.dim() != 2 {
        return Err(CliError::Io("image export needs a 2D grid".into()));
    }
    let ec = grid.element_counts();
    let (w, h) = (ec[0], ec[1]);
    Ok(image::GrayImage::from_fn(w as u32, h as u32, |x, y| {
        let j = h - 1 - y as usize;
        let r = rho[x as usize + w * j].clamp(0.0, 1.0);
        image::Luma([((1.0 - r) * 255.0).round() as u8])
    }))
}

enum Scalars<'a> {
    Real(&'a [f64]),
    Flag(&'a [u8]),
}

fn vtk_text(grid: &Grid, fields: &[(&str, Scalars)]) -> String {
    let counts = grid.counts();
    let dims = [counts[0], counts[1], counts.get(2).copied().unwrap_or(1)];
    let spacing: Vec<f64> = (0..3).map(|a| if a < grid.dim() { grid.spacing(a) } else { 1.0 }).collect();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\ndensity\nASCII\nDATASET STRUCTURED_POINTS\n");
    let _ = writeln!(out, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2]);
    out.push_str("ORIGIN 0 0 0\n");
    let _ = writeln!(out, "SPACING {} {} {}", spacing[0], spacing[1], spacing[2]);
    let _ = writeln!(out, "CELL_DATA {}", grid.element_count());
    for (name, values) in fields {
        match values {
            Scalars::Real(v) => {
                let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for x in v.iter() {
                    let _ = writeln!(out, "{x:e}");
                }
            }
            Scalars::Flag(v) => {
                let _ = writeln!(out, "SCALARS {name} unsigned_char 1\nLOOKUP_TABLE default");
                for x in v.iter() {
                    let _ = writeln!(out, "{x}");
                }
            }
        }
    }
    out
}

/// Reads the named CELL_DATA scalar from a legacy ASCII VTK file.
pub fn read_vtk_cell_scalars(text: &str, name: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: &str| CliError::Io(format!("vtk: {msg}"));
    let mut tokens = text.split_whitespace();
    let mut cells = None;
    while let Some(t) = tokens.next() {
        match t {
            "CELL_DATA" => {
                cells = Some(tokens.next().and_then(|n| n.parse::<usize>().ok()).ok_or_else(|| bad("cell count"))?);
            }
            "SCALARS" if tokens.next() == Some(name) => {
                let n = cells.ok_or_else(|| bad("SCALARS before CELL_DATA"))?;
                let _ty = tokens.next();
                let mut next = tokens.next();
                if next.is_some_and(|t| t.parse::<usize>().is_ok()) {
                    next = tokens.next();
                }
                if next != Some("LOOKUP_TABLE") {
                    return Err(bad("missing LOOKUP_TABLE"));
                }
                tokens.next();
                let values: Vec<f64> = tokens.by_ref().take(n).map(str::parse).collect::<Result<_, _>>().map_err(|_| bad("value"))?;
                if values.len() != n {
                    return Err(bad("truncated data"));
                }
                return Ok(values);
            }
            _ => {}
        }
    }
    Err(bad(&format!("no scalar `{name}`")))
}
