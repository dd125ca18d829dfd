//! The benchmark problems: simply supported bridge (2D and 3D), cantilever
//! beam, and the periodic shear unit cell.

use crate::demsolver::{build_periodic_bcs, BoundarySpec};
use crate::elasticity::{MaterialModel, Mode};
use crate::grid::{BoxRegion, Grid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Minimize ½uᵀKu.
    Compliance,
    /// Maximize the homogenized shear modulus (minimize its negative).
    ShearModulus,
}

/// Radius of the soft hole seeded in the unit cell, as a fraction of the cell height.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoleRadius {
    Quarter,
    Tenth,
    Twentieth,
}

impl HoleRadius {
    pub fn fraction(self) -> f64 {
        match self {
            HoleRadius::Quarter => 0.25,
            HoleRadius::Tenth => 0.1,
            HoleRadius::Twentieth => 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadCase {
    pub name: String,
    pub grid: Grid,
    pub bcs: BoundarySpec,
    pub material: MaterialModel,
    pub objective: Objective,
    pub volume_fraction: f64,
    pub filter_radius: f64,
    /// Starting pseudo-densities.
    pub initial_design: Vec<f64>,
}

pub const VOLUME_FRACTION: f64 = 0.4;
pub const FILTER_RADIUS: f64 = 0.25;
/// Pseudo-density inside the seeded unit-cell hole.
pub const HOLE_DENSITY: f64 = 1e-3;

fn uniform(grid: &Grid, vf: f64) -> Vec<f64> {
    vec![vf; grid.element_count()]
}

/// 12 × 2 bridge clamped at both ends, downward traction of `traction` on a
/// 0.5-long patch at the top center.
pub fn bridge2d(counts: [usize; 2], traction: f64) -> Result<LoadCase> {
    let grid = Grid::new(&[12.0, 2.0], &counts)?;
    let mut bcs = BoundarySpec::new(&grid);
    bcs.clamp(grid.boundary_set("x-").expect("face"));
    bcs.clamp(grid.boundary_set("x+").expect("face"));
    bcs.add_traction(&grid, &BoxRegion::new(&[5.75, 2.0], &[6.25, 2.0]), &[0.0, -traction])?;
    Ok(LoadCase {
        name: "bridge2d".into(),
        initial_design: uniform(&grid, VOLUME_FRACTION),
        grid,
        bcs,
        material: MaterialModel::standard(Mode::PlaneStress2d),
        objective: Objective::Compliance,
        volume_fraction: VOLUME_FRACTION,
        filter_radius: FILTER_RADIUS,
    })
}

/// 10 × 5 cantilever clamped on the left, downward `force` at the middle of
/// the right edge spread over a patch one element tall.
pub fn beam2d(counts: [usize; 2], force: f64) -> Result<LoadCase> {
    let grid = Grid::new(&[10.0, 5.0], &counts)?;
    let mut bcs = BoundarySpec::new(&grid);
    bcs.clamp(grid.boundary_set("x-").expect("face"));
    let h = grid.spacing(1);
    let patch = BoxRegion::new(&[10.0, 2.5 - 0.5 * h], &[10.0, 2.5 + 0.5 * h]);
    bcs.add_traction(&grid, &patch, &[0.0, -force / h])?;
    Ok(LoadCase {
        name: "beam2d".into(),
        initial_design: uniform(&grid, VOLUME_FRACTION),
        grid,
        bcs,
        material: MaterialModel::standard(Mode::PlaneStress2d),
        objective: Objective::Compliance,
        volume_fraction: VOLUME_FRACTION,
        filter_radius: FILTER_RADIUS,
    })
}

/// 12 × 2 × 2 bridge, y vertical, clamped at both x faces, downward traction
/// on a 0.5 × 0.5 patch at the top center.
pub fn bridge3d(counts: [usize; 3], traction: f64) -> Result<LoadCase> {
    let grid = Grid::new(&[12.0, 2.0, 2.0], &counts)?;
    let mut bcs = BoundarySpec::new(&grid);
    bcs.clamp(grid.boundary_set("x-").expect("face"));
    bcs.clamp(grid.boundary_set("x+").expect("face"));
    bcs.add_traction(
        &grid,
        &BoxRegion::new(&[5.75, 2.0, 0.75], &[6.25, 2.0, 1.25]),
        &[0.0, -traction, 0.0],
    )?;
    Ok(LoadCase {
        name: "bridge3d".into(),
        initial_design: uniform(&grid, VOLUME_FRACTION),
        grid,
        bcs,
        material: MaterialModel::standard(Mode::Full3d),
        objective: Objective::Compliance,
        volume_fraction: VOLUME_FRACTION,
        filter_radius: FILTER_RADIUS,
    })
}

/// Applied macroscopic strain with ε12 = ε21 = `gamma`.
pub fn shear_strain(gamma: f64) -> [[f64; 3]; 3] {
    let mut e = [[0.0; 3]; 3];
    e[0][1] = gamma;
    e[1][0] = gamma;
    e
}

/// 10 × 10 periodic cell under simple shear ε12 = 0.01, starting from a
/// centered soft hole.
pub fn unitcell_shear(counts: [usize; 2], hole: HoleRadius) -> Result<LoadCase> {
    let grid = Grid::new(&[10.0, 10.0], &counts)?;
    let bcs = build_periodic_bcs(&grid, &shear_strain(0.01), None)?;
    let initial_design = hole_design(&grid, hole.fraction() * 10.0, VOLUME_FRACTION)?;
    Ok(LoadCase {
        name: "unitcell_shear".into(),
        grid,
        bcs,
        material: MaterialModel::standard(Mode::PlaneStress2d),
        objective: Objective::ShearModulus,
        volume_fraction: VOLUME_FRACTION,
        filter_radius: FILTER_RADIUS,
        initial_design,
    })
}

/// `HOLE_DENSITY` inside a centered circle of `radius`, and a uniform value
/// outside chosen so the mean equals `vf`.
pub fn hole_design(grid: &Grid, radius: f64, vf: f64) -> Result<Vec<f64>> {
    let ext = grid.extents();
    let center = [0.5 * ext[0], 0.5 * ext[1]];
    let inside: Vec<bool> = (0..grid.element_count())
        .map(|e| {
            let c = grid.element_center(e);
            (c[0] - center[0]).hypot(c[1] - center[1]) < radius
        })
        .collect();
    let n = inside.len() as f64;
    let n_in = inside.iter().filter(|&&b| b).count() as f64;
    if n_in == n {
        return Err(Error::InvalidConfig("hole covers the whole cell".into()));
    }
    let outside = (vf * n - HOLE_DENSITY * n_in) / (n - n_in);
    if !(0.0..=1.0).contains(&outside) {
        return Err(Error::InvalidConfig(format!("cannot reach volume fraction {vf} around the hole")));
    }
    Ok(inside.into_iter().map(|b| if b { HOLE_DENSITY } else { outside }).collect())
}

/// Case by name with default resolution.
pub fn named(name: &str) -> Result<LoadCase> {
    match name {
        "bridge2d" => bridge2d([121, 31], 1.0),
        "beam2d" => beam2d([91, 46], 1.0),
        "bridge3d" => bridge3d([121, 25, 25], 1.0),
        "unitcell_shear" => unitcell_shear([81, 81], HoleRadius::Tenth),
        other => Err(Error::InvalidConfig(format!("unknown case `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bridge_load_total() {
        let c = bridge2d([61, 16], 1.0).unwrap();
        let f = c.bcs.external_load();
        let fy: f64 = f.iter().skip(1).step_by(2).sum();
        assert!((fy + 0.5).abs() < 1e-12);
        assert_eq!(c.bcs.fixed_dof_count(), 2 * 2 * 16);
    }

    #[test]
    fn beam_force_total() {
        let c = beam2d([31, 16], 2.0).unwrap();
        let fy: f64 = c.bcs.external_load().iter().skip(1).step_by(2).sum();
        assert!((fy + 2.0).abs() < 1e-12);
    }

    #[test]
    fn bridge3d_patch() {
        let c = bridge3d([25, 5, 5], 1.0).unwrap();
        let fy: f64 = c.bcs.external_load().iter().skip(1).step_by(3).sum();
        assert!((fy + 0.25).abs() < 1e-12);
    }

    #[test]
    fn hole_designs_keep_volume() {
        for hole in [HoleRadius::Quarter, HoleRadius::Tenth, HoleRadius::Twentieth] {
            let c = unitcell_shear([41, 41], hole).unwrap();
            let mean = c.initial_design.iter().sum::<f64>() / c.initial_design.len() as f64;
            assert!((mean - 0.4).abs() < 1e-12);
            assert!(c.initial_design.iter().any(|&x| x == HOLE_DENSITY));
        }
    }

    #[test]
    fn unknown_case() {
        assert!(named("tower").is_err());
    }
}
