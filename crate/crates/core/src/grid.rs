//! Structured grids of bilinear quadrilaterals (2D) and trilinear hexahedra (3D).
//!
//! Nodes are numbered lexicographically with x varying fastest, then y, then z.
//! Element connectivity follows the usual isoparametric ordering: counter-clockwise
//! in 2D, bottom face then top face in 3D.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Physical coordinates. Unused trailing axes are zero.
pub type Point = [f64; 3];

const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

/// Parametric corner signs of the reference element, in connectivity order.
const Q4_SIGNS: [[f64; 3]; 4] = [
    [-1.0, -1.0, 0.0],
    [1.0, -1.0, 0.0],
    [1.0, 1.0, 0.0],
    [-1.0, 1.0, 0.0],
];
const H8_SIGNS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

fn corner_signs(dim: usize) -> &'static [[f64; 3]] {
    if dim == 2 {
        &Q4_SIGNS
    } else {
        &H8_SIGNS
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    extents: [f64; 3],
    counts: [usize; 3],
    nodes: Vec<Point>,
    elements: Vec<usize>,
    elem_volume: Vec<f64>,
    boundary_sets: BTreeMap<String, Vec<usize>>,
}

/// Builds a structured grid spanning `[0, extents[i]]` along each axis with
/// `counts[i]` equally spaced nodes.
pub fn build_grid(extents: &[f64], counts: &[usize]) -> Result<Grid> {
    Grid::new(extents, counts)
}

impl Grid {
    pub fn new(extents: &[f64], counts: &[usize]) -> Result<Self> {
        let dim = extents.len();
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if counts.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} extents but {} node counts",
                dim,
                counts.len()
            )));
        }
        if let Some(bad) = extents.iter().find(|&&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidGrid(format!("extent {bad} is not positive")));
        }
        if let Some(bad) = counts.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidGrid(format!("node count {bad} is below 2")));
        }

        let mut ext = [0.0; 3];
        let mut cnt = [1usize; 3];
        ext[..dim].copy_from_slice(extents);
        cnt[..dim].copy_from_slice(counts);

        let spacing: Vec<f64> = (0..dim).map(|a| ext[a] / (cnt[a] - 1) as f64).collect();
        let mut nodes = Vec::with_capacity(cnt.iter().product());
        for k in 0..cnt[2] {
            for j in 0..cnt[1] {
                for i in 0..cnt[0] {
                    let ijk = [i, j, k];
                    let mut p = [0.0; 3];
                    for a in 0..dim {
                        // exact end coordinates so boundary planes match the extents
                        p[a] = if ijk[a] == cnt[a] - 1 {
                            ext[a]
                        } else {
                            ijk[a] as f64 * spacing[a]
                        };
                    }
                    nodes.push(p);
                }
            }
        }

        let ecnt = [
            cnt[0] - 1,
            cnt[1] - 1,
            if dim == 3 { cnt[2] - 1 } else { 1 },
        ];
        let npe = 1 << dim;
        let signs = corner_signs(dim);
        let mut elements = Vec::with_capacity(ecnt.iter().product::<usize>() * npe);
        let mut elem_volume = Vec::with_capacity(ecnt.iter().product());
        for k in 0..ecnt[2] {
            for j in 0..ecnt[1] {
                for i in 0..ecnt[0] {
                    for s in signs {
                        let di = (s[0] > 0.0) as usize;
                        let dj = (s[1] > 0.0) as usize;
                        let dk = (s[2] > 0.0) as usize;
                        elements.push(i + di + cnt[0] * ((j + dj) + cnt[1] * (k + dk)));
                    }
                    let first = elements.len() - npe;
                    let lo = nodes[elements[first]];
                    let hi = nodes[elements[first + if dim == 2 { 2 } else { 6 }]];
                    elem_volume.push((0..dim).map(|a| hi[a] - lo[a]).product());
                }
            }
        }

        let mut grid = Grid {
            dim,
            extents: ext,
            counts: cnt,
            nodes,
            elements,
            elem_volume,
            boundary_sets: BTreeMap::new(),
        };
        for axis in 0..dim {
            for side in 0..2 {
                let plane = side as f64 * ext[axis];
                let set: Vec<usize> = (0..grid.node_count())
                    .filter(|&n| (grid.nodes[n][axis] - plane).abs() <= 1e-12)
                    .collect();
                grid.boundary_sets.insert(face_name(axis, side), set);
            }
        }
        Ok(grid)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim]
    }

    /// Node counts per axis.
    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    /// Element counts per axis.
    pub fn element_counts(&self) -> Vec<usize> {
        self.counts().iter().map(|n| n - 1).collect()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / (self.counts[axis] - 1) as f64
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elem_volume.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        1 << self.dim
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, n: usize) -> Point {
        self.nodes[n]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let npe = self.nodes_per_element();
        &self.elements[e * npe..(e + 1) * npe]
    }

    pub fn element_volume(&self, e: usize) -> f64 {
        self.elem_volume[e]
    }

    pub fn element_volumes(&self) -> &[f64] {
        &self.elem_volume
    }

    pub fn total_volume(&self) -> f64 {
        self.extents().iter().product()
    }

    pub fn diagonal(&self) -> f64 {
        self.extents().iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    /// Index of the node at lattice position `ijk` (trailing entries ignored in 2D).
    pub fn node_index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.counts[0] * (ijk[1] + self.counts[1] * ijk[2])
    }

    /// Lattice position of node `n`.
    pub fn node_ijk(&self, n: usize) -> [usize; 3] {
        let i = n % self.counts[0];
        let j = (n / self.counts[0]) % self.counts[1];
        let k = n / (self.counts[0] * self.counts[1]);
        [i, j, k]
    }

    /// Lattice position of element `e`.
    pub fn element_ijk(&self, e: usize) -> [usize; 3] {
        let nx = self.counts[0] - 1;
        let ny = self.counts[1] - 1;
        [e % nx, (e / nx) % ny, e / (nx * ny)]
    }

    pub fn element_center(&self, e: usize) -> Point {
        let mut c = [0.0; 3];
        let nodes = self.element(e);
        for &n in nodes {
            for a in 0..3 {
                c[a] += self.nodes[n][a];
            }
        }
        c.map(|v| v / nodes.len() as f64)
    }

    /// Named node sets, one per axis-aligned face: `x-`, `x+`, `y-`, ...
    pub fn boundary_sets(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.boundary_sets
    }

    pub fn boundary_set(&self, name: &str) -> Option<&[usize]> {
        self.boundary_sets.get(name).map(Vec::as_slice)
    }

    /// Tolerance used for geometric region predicates.
    pub fn region_tolerance(&self) -> f64 {
        1e-9 * self.diagonal()
    }

    pub fn nodes_in(&self, region: &BoxRegion) -> Vec<usize> {
        let tol = self.region_tolerance();
        (0..self.node_count())
            .filter(|&n| region.contains(&self.nodes[n], self.dim, tol))
            .collect()
    }
}

pub fn face_name(axis: usize, side: usize) -> String {
    format!("{}{}", AXIS_NAMES[axis], if side == 0 { "-" } else { "+" })
}

/// Axis-aligned box used to select nodes and boundary faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRegion {
    pub lo: Point,
    pub hi: Point,
}

impl BoxRegion {
    pub fn new(lo: &[f64], hi: &[f64]) -> Self {
        let mut l = [0.0; 3];
        let mut h = [0.0; 3];
        l[..lo.len()].copy_from_slice(lo);
        h[..hi.len()].copy_from_slice(hi);
        BoxRegion { lo: l, hi: h }
    }

    /// The whole face `side` (0 = low, 1 = high) of `axis`.
    pub fn face(grid: &Grid, axis: usize, side: usize) -> Self {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        hi[..grid.dim].copy_from_slice(grid.extents());
        let plane = side as f64 * grid.extents[axis];
        lo[axis] = plane;
        hi[axis] = plane;
        BoxRegion { lo, hi }
    }

    pub fn contains(&self, p: &Point, dim: usize, tol: f64) -> bool {
        (0..dim).all(|a| p[a] >= self.lo[a] - tol && p[a] <= self.hi[a] + tol)
    }
}

/// Bilinear / trilinear shape functions and their parametric gradients at `xi`.
pub fn shape_functions(dim: usize, xi: &[f64]) -> (Vec<f64>, Vec<[f64; 3]>) {
    let signs = corner_signs(dim);
    let mut values = Vec::with_capacity(signs.len());
    let mut grads = Vec::with_capacity(signs.len());
    for s in signs {
        let factors: Vec<f64> = (0..dim).map(|a| 0.5 * (1.0 + s[a] * xi[a])).collect();
        values.push(factors.iter().product());
        let mut g = [0.0; 3];
        for k in 0..dim {
            g[k] = 0.5 * s[k]
                * (0..dim)
                    .filter(|&a| a != k)
                    .map(|a| factors[a])
                    .product::<f64>();
        }
        grads.push(g);
    }
    (values, grads)
}

fn gauss_rule(order: usize) -> Result<(&'static [f64], &'static [f64])> {
    const P1: [f64; 1] = [0.0];
    const W1: [f64; 1] = [2.0];
    const P2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];
    const W2: [f64; 2] = [1.0, 1.0];
    match order {
        1 => Ok((&P1, &W1)),
        2 => Ok((&P2, &W2)),
        other => Err(Error::UnsupportedOrder(other)),
    }
}

/// Tensor-product Gauss points in `dim` dimensions as (parametric point, weight).
fn tensor_gauss(dim: usize, order: usize) -> Result<Vec<([f64; 3], f64)>> {
    let (pts, wts) = gauss_rule(order)?;
    let n = pts.len();
    let total = n.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let mut xi = [0.0; 3];
        let mut w = 1.0;
        let mut rem = idx;
        for a in 0..dim {
            let q = rem % n;
            rem /= n;
            xi[a] = pts[q];
            w *= wts[q];
        }
        out.push((xi, w));
    }
    Ok(out)
}

/// A volume quadrature point in physical coordinates.
#[derive(Debug, Clone)]
pub struct QuadPoint {
    /// Gauss weight times Jacobian determinant.
    pub weight: f64,
    pub shape: Vec<f64>,
    /// Physical shape-function gradients, one per element node.
    pub grads: Vec<[f64; 3]>,
}

#[derive(Debug, Clone)]
pub struct ElementRule {
    pub points: Vec<QuadPoint>,
    offsets: Vec<Point>,
}

impl ElementRule {
    pub fn volume(&self) -> f64 {
        self.points.iter().map(|q| q.weight).sum()
    }

    fn compute(dim: usize, coords: &[Point], order: usize) -> Result<Self> {
        let mut points = Vec::new();
        for (xi, w) in tensor_gauss(dim, order)? {
            let (shape, dn) = shape_functions(dim, &xi);
            // J[i][k] = d x_i / d xi_k
            let mut jac = [[0.0; 3]; 3];
            for (a, x) in coords.iter().enumerate() {
                for i in 0..dim {
                    for k in 0..dim {
                        jac[i][k] += x[i] * dn[a][k];
                    }
                }
            }
            let (det, inv) = invert(&jac, dim);
            if !(det > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "non-positive Jacobian determinant {det}"
                )));
            }
            // dN/dx_i = sum_k dN/dxi_k * (J^-1)[k][i]
            let grads = dn
                .iter()
                .map(|g| {
                    let mut out = [0.0; 3];
                    for i in 0..dim {
                        out[i] = (0..dim).map(|k| g[k] * inv[k][i]).sum();
                    }
                    out
                })
                .collect();
            points.push(QuadPoint {
                weight: w * det,
                shape,
                grads,
            });
        }
        let base = coords[0];
        let offsets = coords
            .iter()
            .map(|c| [c[0] - base[0], c[1] - base[1], c[2] - base[2]])
            .collect();
        Ok(ElementRule { points, offsets })
    }
}

fn invert(m: &[[f64; 3]; 3], dim: usize) -> (f64, [[f64; 3]; 3]) {
    let mut inv = [[0.0; 3]; 3];
    if dim == 2 {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        inv[0][0] = m[1][1] / det;
        inv[0][1] = -m[0][1] / det;
        inv[1][0] = -m[1][0] / det;
        inv[1][1] = m[0][0] / det;
        (det, inv)
    } else {
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        for i in 0..3 {
            for j in 0..3 {
                // cofactor transpose
                let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
            }
        }
        (det, inv)
    }
}

/// Volume quadrature for every element of a grid.
///
/// Elements with identical geometry (all of them, on a uniform structured grid)
/// share one physical rule.
#[derive(Debug, Clone)]
pub struct QuadratureCache {
    order: usize,
    rules: Vec<ElementRule>,
    rule_of: Vec<u32>,
}

pub fn precompute_quadrature(grid: &Grid, order: usize) -> Result<QuadratureCache> {
    QuadratureCache::new(grid, order)
}

impl QuadratureCache {
    pub fn new(grid: &Grid, order: usize) -> Result<Self> {
        gauss_rule(order)?;
        let tol = 1e-12 * grid.diagonal();
        let mut rules: Vec<ElementRule> = Vec::new();
        let mut rule_of = Vec::with_capacity(grid.element_count());
        for e in 0..grid.element_count() {
            let coords: Vec<Point> = grid.element(e).iter().map(|&n| grid.node(n)).collect();
            let base = coords[0];
            let found = rules.iter().position(|r| {
                r.offsets.iter().zip(&coords).all(|(o, c)| {
                    (0..3).all(|a| (o[a] - (c[a] - base[a])).abs() <= tol)
                })
            });
            let idx = match found {
                Some(i) => i,
                None => {
                    rules.push(ElementRule::compute(grid.dim(), &coords, order)?);
                    rules.len() - 1
                }
            };
            rule_of.push(idx as u32);
        }
        Ok(QuadratureCache {
            order,
            rules,
            rule_of,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn element(&self, e: usize) -> &ElementRule {
        &self.rules[self.rule_of[e] as usize]
    }

    /// Distinct element rules and the rule index of every element.
    pub fn rules(&self) -> (&[ElementRule], &[u32]) {
        (&self.rules, &self.rule_of)
    }

    pub fn element_count(&self) -> usize {
        self.rule_of.len()
    }
}

/// A surface (3D) or edge (2D) quadrature point.
#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    pub coords: Point,
    pub weight: f64,
    /// Nodes of the owning face and their shape-function values at this point.
    pub nodes: Vec<usize>,
    pub shape: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct BoundaryQuadrature {
    pub points: Vec<BoundaryPoint>,
}

impl BoundaryQuadrature {
    /// Sum of weights: the length (2D) or area (3D) of the selected region.
    pub fn measure(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}

/// Gauss points covering the part of the domain boundary inside `region`.
///
/// Element faces that are only partially covered are clipped to the region, so
/// the weights integrate exactly over the selected area even when it does not
/// align with grid lines.
pub fn boundary_quadrature(
    grid: &Grid,
    region: &BoxRegion,
    order: usize,
) -> Result<BoundaryQuadrature> {
    let dim = grid.dim();
    let (gp, gw) = gauss_rule(order)?;
    let tol = grid.region_tolerance();
    let ecounts = grid.element_counts();
    let signs = corner_signs(dim);
    let mut points = Vec::new();

    for axis in 0..dim {
        for side in 0..2 {
            let plane = side as f64 * grid.extents[axis];
            if plane < region.lo[axis] - tol || plane > region.hi[axis] + tol {
                continue;
            }
            let tangents: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
            let layer = if side == 0 { 0 } else { ecounts[axis] - 1 };
            for e in 0..grid.element_count() {
                let ijk = grid.element_ijk(e);
                if ijk[axis] != layer {
                    continue;
                }
                let conn = grid.element(e);
                let lo = grid.node(conn[0]);
                let hi = grid.node(conn[if dim == 2 { 2 } else { 6 }]);
                // clipped tangential intervals
                let mut spans = Vec::with_capacity(tangents.len());
                for &t in &tangents {
                    let a = lo[t].max(region.lo[t]);
                    let b = hi[t].min(region.hi[t]);
                    if b - a <= tol {
                        break;
                    }
                    spans.push((a, b));
                }
                if spans.len() != tangents.len() {
                    continue;
                }
                let face_local: Vec<usize> = signs
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| (s[axis] > 0.0) == (side == 1))
                    .map(|(i, _)| i)
                    .collect();
                let nq = gp.len();
                for idx in 0..nq.pow(tangents.len() as u32) {
                    let mut x = [0.0; 3];
                    x[axis] = plane;
                    let mut w = 1.0;
                    let mut rem = idx;
                    for (ti, &t) in tangents.iter().enumerate() {
                        let q = rem % nq;
                        rem /= nq;
                        let (a, b) = spans[ti];
                        x[t] = 0.5 * (a + b) + 0.5 * (b - a) * gp[q];
                        w *= gw[q] * 0.5 * (b - a);
                    }
                    let mut xi = [0.0; 3];
                    for a in 0..dim {
                        xi[a] = 2.0 * (x[a] - lo[a]) / (hi[a] - lo[a]) - 1.0;
                    }
                    let (shape, _) = shape_functions(dim, &xi);
                    points.push(BoundaryPoint {
                        coords: x,
                        weight: w,
                        nodes: face_local.iter().map(|&l| conn[l]).collect(),
                        shape: face_local.iter().map(|&l| shape[l]).collect(),
                    });
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(BoundaryQuadrature { points })
}
