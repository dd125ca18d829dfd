//! Finite element oracle on the same grid, quadrature and loads as the DEM.

pub mod sparse;

use crate::demsolver::BoundarySpec;
use crate::elasticity::{stress, strain_from_gradient, MaterialModel};
use crate::grid::{Grid, QuadratureCache};
use crate::{Error, Result};
pub use sparse::{conjugate_gradient, reverse_cuthill_mckee, CsrMatrix, SkylineCholesky};

/// Density floor used in FEM stiffness assembly.
pub const RHO_MIN: f64 = 1e-3;

/// Relative residual target of the iterative solver.
pub const CG_TOLERANCE: f64 = 1e-8;

/// Unit-density stiffness of element `e`, row-major over `node * dim + component`.
pub fn element_stiffness(grid: &Grid, quad: &QuadratureCache, e: usize, mat: &MaterialModel) -> Vec<f64> {
    let d = grid.dim();
    let npe = grid.nodes_per_element();
    let n = npe * d;
    let mut k = vec![0.0; n * n];
    for qp in &quad.element(e).points {
        for b in 0..npe {
            for j in 0..d {
                // stress of the unit displacement of node b along j
                let mut g = [[0.0; 3]; 3];
                g[j] = qp.grads[b];
                let sig = stress(&strain_from_gradient(&g, d), mat);
                let s = sig.as_array();
                for a in 0..npe {
                    for i in 0..d {
                        let mut acc = 0.0;
                        for l in 0..d {
                            acc += s[i][l] * qp.grads[a][l];
                        }
                        k[(a * d + i) * n + b * d + j] += qp.weight * acc;
                    }
                }
            }
        }
    }
    k
}

/// How one global degree of freedom relates to the reduced unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dof {
    Fixed(f64),
    /// `u = x[index] + offset`
    Tied { index: usize, offset: f64 },
}

#[derive(Debug, Clone)]
pub struct ConstraintMap {
    dofs: Vec<Dof>,
    reduced: usize,
}

impl ConstraintMap {
    /// Dirichlet values from the mask and offset. Periodic cells instead tie
    /// every node to its image in the master cell with offset `H (X − X_master)`
    /// and pin the origin node.
    pub fn from_bcs(grid: &Grid, bcs: &BoundarySpec) -> Result<Self> {
        let d = grid.dim();
        if bcs.dim() != d || bcs.node_count() != grid.node_count() {
            return Err(Error::InvalidBoundary("boundary spec does not match the grid".into()));
        }
        let mut dofs = Vec::with_capacity(d * grid.node_count());
        let mut reduced = 0;
        if bcs.is_periodic_cell() {
            let h = bcs.macro_gradient();
            let counts = grid.counts();
            for n in 0..grid.node_count() {
                let ijk = grid.node_ijk(n);
                let mut m_ijk = [0; 3];
                for a in 0..d {
                    m_ijk[a] = ijk[a] % (counts[a] - 1);
                }
                let m = grid.node_index(m_ijk);
                let (x, xm) = (grid.node(n), grid.node(m));
                for c in 0..d {
                    let offset: f64 = (0..d).map(|k| h[c][k] * (x[k] - xm[k])).sum();
                    let dof = if m == 0 {
                        Dof::Fixed(offset)
                    } else if m == n {
                        reduced += 1;
                        Dof::Tied {
                            index: reduced - 1,
                            offset: 0.0,
                        }
                    } else {
                        match dofs[m * d + c] {
                            Dof::Tied { index, .. } => Dof::Tied { index, offset },
                            Dof::Fixed(v) => Dof::Fixed(v + offset),
                        }
                    };
                    dofs.push(dof);
                }
            }
        } else {
            for (&m, &o) in bcs.mask().iter().zip(bcs.offset()) {
                if m == 0.0 {
                    dofs.push(Dof::Fixed(o));
                } else {
                    dofs.push(Dof::Tied {
                        index: reduced,
                        offset: 0.0,
                    });
                    reduced += 1;
                }
            }
        }
        Ok(ConstraintMap { dofs, reduced })
    }

    pub fn dofs(&self) -> &[Dof] {
        &self.dofs
    }

    pub fn reduced_count(&self) -> usize {
        self.reduced
    }

    /// Full displacement vector from the reduced unknowns.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.dofs
            .iter()
            .map(|d| match *d {
                Dof::Fixed(v) => v,
                Dof::Tied { index, offset } => x[index] + offset,
            })
            .collect()
    }

    fn known(&self, g: usize) -> f64 {
        match self.dofs[g] {
            Dof::Fixed(v) => v,
            Dof::Tied { offset, .. } => offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolver {
    Cholesky,
    ConjugateGradient,
}

/// Assembled FEM problem for one density field.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    dim: usize,
    npe: usize,
    connectivity: Vec<usize>,
    rule_of: Vec<u32>,
    rule_stiffness: Vec<Vec<f64>>,
    /// ρ_effᵖ per element
    scale: Vec<f64>,
    load: Vec<f64>,
    constraints: ConstraintMap,
    reduced: CsrMatrix,
    rhs: Vec<f64>,
}

/// Assembles the SIMP-scaled stiffness with densities floored at [`RHO_MIN`],
/// the consistent traction load, and the reduced system after eliminating
/// constraints.
pub fn assemble(
    grid: &Grid,
    quad: &QuadratureCache,
    rho: &[f64],
    mat: &MaterialModel,
    bcs: &BoundarySpec,
) -> Result<SparseSystem> {
    if rho.len() != grid.element_count() {
        return Err(Error::ShapeMismatch {
            expected: grid.element_count(),
            got: rho.len(),
        });
    }
    if let Some(&bad) = rho.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::DensityOutOfRange(bad));
    }
    if mat.dim() != grid.dim() {
        return Err(Error::InvalidMaterial("material mode does not match the grid dimension".into()));
    }
    let d = grid.dim();
    let npe = grid.nodes_per_element();
    let (rules, rule_of) = quad.rules();
    let mut rule_stiffness = Vec::with_capacity(rules.len());
    for r in 0..rules.len() {
        let e = rule_of.iter().position(|&x| x as usize == r).expect("rule in use");
        rule_stiffness.push(element_stiffness(grid, quad, e, mat));
    }
    let scale: Vec<f64> = rho.iter().map(|&r| mat.penalize(r.max(RHO_MIN))).collect();
    let connectivity: Vec<usize> = (0..grid.element_count()).flat_map(|e| grid.element(e).to_vec()).collect();
    let constraints = ConstraintMap::from_bcs(grid, bcs)?;
    let load = bcs.external_load();

    let nr = constraints.reduced_count();
    let ndof = npe * d;
    let local_dofs = |e: usize| -> Vec<usize> {
        connectivity[e * npe..(e + 1) * npe]
            .iter()
            .flat_map(|&n| (0..d).map(move |c| n * d + c))
            .collect()
    };
    let reduced_of = |g: usize| match constraints.dofs[g] {
        Dof::Tied { index, .. } => Some(index),
        Dof::Fixed(_) => None,
    };

    let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); nr];
    for e in 0..grid.element_count() {
        let red: Vec<usize> = local_dofs(e).into_iter().filter_map(reduced_of).collect();
        for &r in &red {
            pattern[r].extend_from_slice(&red);
        }
    }
    for row in pattern.iter_mut() {
        row.sort_unstable();
        row.dedup();
    }
    let mut reduced = CsrMatrix::with_pattern(nr, &pattern);
    drop(pattern);

    let mut rhs = vec![0.0; nr];
    for (g, &f) in load.iter().enumerate() {
        if let Some(r) = reduced_of(g) {
            rhs[r] += f;
        }
    }
    for e in 0..grid.element_count() {
        let ke = &rule_stiffness[rule_of[e] as usize];
        let s = scale[e];
        let dofs = local_dofs(e);
        for (a, &ga) in dofs.iter().enumerate() {
            let Some(ra) = reduced_of(ga) else { continue };
            for (b, &gb) in dofs.iter().enumerate() {
                let k = s * ke[a * ndof + b];
                rhs[ra] -= k * constraints.known(gb);
                if let Some(rb) = reduced_of(gb) {
                    let pos = reduced.position(ra, rb).expect("entry in pattern");
                    reduced.values_mut()[pos] += k;
                }
            }
        }
    }

    Ok(SparseSystem {
        dim: d,
        npe,
        connectivity,
        rule_of: rule_of.to_vec(),
        rule_stiffness,
        scale,
        load,
        constraints,
        reduced,
        rhs,
    })
}

impl SparseSystem {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn constraint_map(&self) -> &ConstraintMap {
        &self.constraints
    }

    pub fn reduced_matrix(&self) -> &CsrMatrix {
        &self.reduced
    }

    pub fn reduced_rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Effective stiffness factor `max(ρ, ρ_min)ᵖ` per element.
    pub fn element_factors(&self) -> &[f64] {
        &self.scale
    }

    fn element_dofs(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        let d = self.dim;
        self.connectivity[e * self.npe..(e + 1) * self.npe]
            .iter()
            .flat_map(move |&n| (0..d).map(move |c| n * d + c))
    }

    /// Unconstrained global stiffness.
    pub fn full_stiffness(&self) -> CsrMatrix {
        let n = self.load.len();
        let ndof = self.npe * self.dim;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in 0..self.scale.len() {
            let ke = &self.rule_stiffness[self.rule_of[e] as usize];
            let dofs: Vec<usize> = self.element_dofs(e).collect();
            for (a, &ga) in dofs.iter().enumerate() {
                for (b, &gb) in dofs.iter().enumerate() {
                    rows[ga].push((gb, self.scale[e] * ke[a * ndof + b]));
                }
            }
        }
        CsrMatrix::from_rows(n, rows)
    }

    /// `K u` without forming the global matrix.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let ndof = self.npe * self.dim;
        let mut out = vec![0.0; u.len()];
        for e in 0..self.scale.len() {
            let ke = &self.rule_stiffness[self.rule_of[e] as usize];
            let dofs: Vec<usize> = self.element_dofs(e).collect();
            for (a, &ga) in dofs.iter().enumerate() {
                let mut acc = 0.0;
                for (b, &gb) in dofs.iter().enumerate() {
                    acc += ke[a * ndof + b] * u[gb];
                }
                out[ga] += self.scale[e] * acc;
            }
        }
        out
    }

    pub fn default_solver(&self) -> LinearSolver {
        if self.dim == 2 {
            LinearSolver::Cholesky
        } else {
            LinearSolver::ConjugateGradient
        }
    }
}

/// Displacement field: Cholesky in 2D, conjugate gradients in 3D.
pub fn solve(system: &SparseSystem) -> Result<Vec<f64>> {
    solve_with(system, system.default_solver())
}

pub fn solve_with(system: &SparseSystem, solver: LinearSolver) -> Result<Vec<f64>> {
    let x = if system.reduced.dim() == 0 {
        Vec::new()
    } else {
        match solver {
            LinearSolver::Cholesky => SkylineCholesky::factor(&system.reduced)?.solve(&system.rhs),
            LinearSolver::ConjugateGradient => {
                let max_iter = 20 * system.reduced.dim() + 100;
                conjugate_gradient(&system.reduced, &system.rhs, CG_TOLERANCE, max_iter)?
            }
        }
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite solution".into()));
    }
    Ok(system.constraints.expand(&x))
}

/// `½ uᵀ K u` with the assembled (floored) element factors.
pub fn compliance(u: &[f64], system: &SparseSystem) -> f64 {
    0.5 * u.iter().zip(system.apply(u)).map(|(a, b)| a * b).sum::<f64>()
}

/// `(1/A) ∫ρᵖ σ:ε dA` with unfloored densities.
pub fn homogenized_shear(u: &[f64], rho: &[f64], grid: &Grid, quad: &QuadratureCache, mat: &MaterialModel) -> f64 {
    let w = crate::demsolver::element_strain_energy(u, grid, quad, mat);
    let total: f64 = w.iter().zip(rho).map(|(w, &r)| mat.penalize(r) * w).sum();
    total / grid.total_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demsolver::build_periodic_bcs;
    use crate::elasticity::Mode;
    use crate::grid::precompute_quadrature;

    fn unit(dim: usize) -> (Grid, QuadratureCache, MaterialModel) {
        let g = if dim == 2 {
            Grid::new(&[1.0, 1.0], &[2, 2]).unwrap()
        } else {
            Grid::new(&[1.0, 1.0, 1.0], &[2, 2, 2]).unwrap()
        };
        let q = precompute_quadrature(&g, 2).unwrap();
        (g, q, MaterialModel::standard(Mode::for_dim(dim)))
    }

    /// Cyclic Jacobi eigenvalues of a small symmetric matrix.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
            if off < 1e-26 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn element_rows_sum_to_zero() {
        for dim in [2, 3] {
            let (g, q, mat) = unit(dim);
            let k = element_stiffness(&g, &q, 0, &mat);
            let n = g.nodes_per_element() * dim;
            for a in 0..n {
                // translation along each axis
                for c in 0..dim {
                    let s: f64 = (0..g.nodes_per_element()).map(|b| k[a * n + b * dim + c]).sum();
                    assert!(s.abs() < 1e-10, "{s}");
                }
                for b in 0..n {
                    assert!((k[a * n + b] - k[b * n + a]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn q4_has_three_rigid_modes() {
        let (g, q, mat) = unit(2);
        let k = element_stiffness(&g, &q, 0, &mat);
        let m: Vec<Vec<f64>> = (0..8).map(|i| k[i * 8..(i + 1) * 8].to_vec()).collect();
        let ev = jacobi_eigenvalues(m);
        let scale = ev[7];
        assert_eq!(ev.iter().filter(|v| v.abs() < 1e-10 * scale).count(), 3);
        assert!(ev[3] > 1e-3 * scale);
    }

    #[test]
    fn density_scaling() {
        let (g, q, mat) = unit(2);
        let bcs = BoundarySpec::new(&g);
        let a = assemble(&g, &q, &[0.5], &mat, &bcs).unwrap().full_stiffness();
        let b = assemble(&g, &q, &[1.0], &mat, &bcs).unwrap().full_stiffness();
        for i in 0..8 {
            for j in 0..8 {
                assert!((8.0 * a.get(i, j) - b.get(i, j)).abs() < 1e-12 * b.get(i, i).abs());
            }
        }
        let row_sums = b.mul_vec(&[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!(row_sums.iter().all(|v| v.abs() < 1e-10));
        assert!(b.asymmetry() < 1e-12);
    }

    #[test]
    fn density_floor_and_range() {
        let (g, q, mat) = unit(2);
        let bcs = BoundarySpec::new(&g);
        let s = assemble(&g, &q, &[0.0], &mat, &bcs).unwrap();
        assert!((s.element_factors()[0] - 1e-9).abs() < 1e-24);
        assert!(matches!(assemble(&g, &q, &[-0.1], &mat, &bcs), Err(Error::DensityOutOfRange(_))));
    }

    #[test]
    fn patch_test() {
        let g = Grid::new(&[3.0, 3.0], &[4, 4]).unwrap();
        let q = precompute_quadrature(&g, 2).unwrap();
        let mat = MaterialModel::standard(Mode::PlaneStress2d);
        let exact = |x: [f64; 3]| [1e-3 * x[0] + 2e-3 * x[1] + 0.1, -5e-4 * x[0] + 3e-3 * x[1]];
        let mut bcs = BoundarySpec::new(&g);
        for name in ["x-", "x+", "y-", "y+"] {
            for &n in g.boundary_set(name).unwrap() {
                let u = exact(g.node(n));
                bcs.fix(&[n], 0, u[0]);
                bcs.fix(&[n], 1, u[1]);
            }
        }
        let sys = assemble(&g, &q, &vec![1.0; 9], &mat, &bcs).unwrap();
        let u = solve(&sys).unwrap();
        for n in 0..g.node_count() {
            let e = exact(g.node(n));
            assert!((u[2 * n] - e[0]).abs() < 1e-10);
            assert!((u[2 * n + 1] - e[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn compliance_identities() {
        let g = Grid::new(&[10.0, 5.0], &[21, 11]).unwrap();
        let q = precompute_quadrature(&g, 2).unwrap();
        let mut bcs = BoundarySpec::new(&g);
        bcs.clamp(g.boundary_set("x-").unwrap());
        bcs.add_traction(&g, &crate::grid::BoxRegion::face(&g, 0, 1), &[0.0, -1.0]).unwrap();
        let rho: Vec<f64> = (0..g.element_count()).map(|e| 0.3 + 0.7 * ((e * 37) % 11) as f64 / 10.0).collect();
        let mat = MaterialModel::standard(Mode::PlaneStress2d);
        let sys = assemble(&g, &q, &rho, &mat, &bcs).unwrap();
        let u = solve(&sys).unwrap();
        let c = compliance(&u, &sys);
        let fu: f64 = sys.load().iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((c - 0.5 * fu).abs() <= 1e-8 * c);
        assert_eq!(compliance(&vec![0.0; u.len()], &sys), 0.0);

        let soft = MaterialModel::new(100.0, 0.3, 3.0, Mode::PlaneStress2d).unwrap();
        let u2 = solve(&assemble(&g, &q, &rho, &soft, &bcs).unwrap()).unwrap();
        let c2 = compliance(&u2, &assemble(&g, &q, &rho, &soft, &bcs).unwrap());
        assert!((c2 / c - 2.0).abs() < 1e-9);

        // residual on free equations
        let r = sys.reduced_matrix().mul_vec(&{
            let mut x = vec![0.0; sys.constraint_map().reduced_count()];
            for (g, d) in sys.constraint_map().dofs().iter().enumerate() {
                if let Dof::Tied { index, .. } = d {
                    x[*index] = u[g];
                }
            }
            x
        });
        let b = sys.reduced_rhs();
        let res: f64 = r.iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-8 * bn);
    }

    #[test]
    fn cg_matches_cholesky() {
        let g = Grid::new(&[4.0, 2.0], &[13, 7]).unwrap();
        let q = precompute_quadrature(&g, 2).unwrap();
        let mut bcs = BoundarySpec::new(&g);
        bcs.clamp(g.boundary_set("x-").unwrap());
        bcs.add_traction(&g, &crate::grid::BoxRegion::face(&g, 1, 1), &[0.0, -1.0]).unwrap();
        let mat = MaterialModel::standard(Mode::PlaneStress2d);
        let sys = assemble(&g, &q, &vec![0.6; g.element_count()], &mat, &bcs).unwrap();
        let a = solve_with(&sys, LinearSolver::Cholesky).unwrap();
        let b = solve_with(&sys, LinearSolver::ConjugateGradient).unwrap();
        let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(num / den < 1e-6);
    }

    fn shear_strain(v: f64) -> [[f64; 3]; 3] {
        let mut e = [[0.0; 3]; 3];
        e[0][1] = v;
        e[1][0] = v;
        e
    }

    #[test]
    fn periodic_shear_full_density() {
        let g = Grid::new(&[10.0, 10.0], &[11, 11]).unwrap();
        let q = precompute_quadrature(&g, 2).unwrap();
        let mat = MaterialModel::standard(Mode::PlaneStress2d);
        let bcs = build_periodic_bcs(&g, &shear_strain(0.01), None).unwrap();
        let rho = vec![1.0; g.element_count()];
        let u = solve(&assemble(&g, &q, &rho, &mat, &bcs).unwrap()).unwrap();
        let gm = mat.shear_modulus();
        let expect = 4.0 * gm * 0.01 * 0.01;
        let got = homogenized_shear(&u, &rho, &g, &q, &mat);
        assert!((got - expect).abs() < 1e-10 * expect);
        // jump across every face pair equals the macroscopic gradient
        for j in 0..11 {
            let (l, r) = (g.node_index([0, j, 0]), g.node_index([10, j, 0]));
            assert!((u[2 * r] - u[2 * l]).abs() < 1e-12);
            assert!((u[2 * r + 1] - u[2 * l + 1] - 0.2).abs() < 1e-12);
        }
        for i in 0..11 {
            let (b, t) = (g.node_index([i, 0, 0]), g.node_index([i, 10, 0]));
            assert!((u[2 * t] - u[2 * b]).abs() < 1e-12);
            assert!((u[2 * t + 1] - u[2 * b + 1]).abs() < 1e-12);
        }
        assert_eq!(homogenized_shear(&u, &vec![0.0; g.element_count()], &g, &q, &mat), 0.0);
    }

    #[test]
    fn shear_is_quadratic_in_strain() {
        let g = Grid::new(&[10.0, 10.0], &[9, 9]).unwrap();
        let q = precompute_quadrature(&g, 2).unwrap();
        let mat = MaterialModel::standard(Mode::PlaneStress2d);
        let rho: Vec<f64> = (0..g.element_count()).map(|e| if (e * 7) % 5 == 0 { 0.1 } else { 1.0 }).collect();
        let shear = |v: f64| {
            let bcs = build_periodic_bcs(&g, &shear_strain(v), None).unwrap();
            let u = solve(&assemble(&g, &q, &rho, &mat, &bcs).unwrap()).unwrap();
            homogenized_shear(&u, &rho, &g, &q, &mat)
        };
        let (a, b) = (shear(0.01), shear(0.03));
        assert!((b / a - 9.0).abs() < 1e-8);
    }

    #[test]
    fn small_3d_cantilever_solves() {
        let g = Grid::new(&[4.0, 1.0, 1.0], &[9, 3, 3]).unwrap();
        let q = precompute_quadrature(&g, 2).unwrap();
        let mat = MaterialModel::standard(Mode::Full3d);
        let mut bcs = BoundarySpec::new(&g);
        bcs.clamp(g.boundary_set("x-").unwrap());
        bcs.add_traction(&g, &crate::grid::BoxRegion::face(&g, 0, 1), &[0.0, -1.0, 0.0]).unwrap();
        let sys = assemble(&g, &q, &vec![1.0; g.element_count()], &mat, &bcs).unwrap();
        let a = solve(&sys).unwrap();
        let b = solve_with(&sys, LinearSolver::Cholesky).unwrap();
        let num: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(num / den < 1e-6);
        let tip = g.node_index([8, 1, 1]);
        assert!(a[3 * tip + 1] < 0.0);
    }
}
