//! Deep energy method: the loss is the SIMP-penalized potential energy of the
//! network's displacement field, plus a penalty for periodic pairs.

use ndarray::Array2;
use rayon::prelude::*;

use crate::elasticity::{stress, strain_from_gradient, MaterialModel, SymTensor};
use crate::grid::{boundary_quadrature, BoundaryQuadrature, BoxRegion, Grid, QuadratureCache};
use crate::neuralfield::{normalized_coordinates, train, NetworkParams, TrainConfig, TrainOutcome};
use crate::{Error, Result};

/// Elements per parallel work unit. Fixed so reductions do not depend on the
/// thread count.
const CHUNK: usize = 256;

#[derive(Debug, Clone)]
pub struct TractionLoad {
    pub quadrature: BoundaryQuadrature,
    pub traction: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPair {
    pub minus: usize,
    pub plus: usize,
    /// Displacement components tied by the penalty.
    pub components: Vec<usize>,
}

/// The pairs between one pair of opposite faces.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGroup {
    pub axis: usize,
    pub pairs: Vec<PeriodicPair>,
}

/// The face pair and component carrying a nonzero applied strain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrivenPair {
    pub axis: usize,
    pub component: usize,
}

#[derive(Debug, Clone)]
pub struct BoundarySpec {
    dim: usize,
    mask: Vec<f64>,
    offset: Vec<f64>,
    tractions: Vec<TractionLoad>,
    periodic: Vec<PeriodicGroup>,
    applied_strain: [[f64; 3]; 3],
    macro_gradient: [[f64; 3]; 3],
    penalty_weight: Option<f64>,
    periodic_cell: bool,
}

impl BoundarySpec {
    /// No constraints and no loads.
    pub fn new(grid: &Grid) -> Self {
        let n = grid.node_count() * grid.dim();
        BoundarySpec {
            dim: grid.dim(),
            mask: vec![1.0; n],
            offset: vec![0.0; n],
            tractions: Vec::new(),
            periodic: Vec::new(),
            applied_strain: [[0.0; 3]; 3],
            macro_gradient: [[0.0; 3]; 3],
            penalty_weight: None,
            periodic_cell: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.mask.len() / self.dim
    }

    /// Prescribes `value` for one component at each node.
    pub fn fix(&mut self, nodes: &[usize], component: usize, value: f64) {
        for &n in nodes {
            self.mask[n * self.dim + component] = 0.0;
            self.offset[n * self.dim + component] = value;
        }
    }

    /// Clamps every component at each node.
    pub fn clamp(&mut self, nodes: &[usize]) {
        for c in 0..self.dim {
            self.fix(nodes, c, 0.0);
        }
    }

    pub fn add_traction(&mut self, grid: &Grid, region: &BoxRegion, traction: &[f64]) -> Result<()> {
        let quadrature = boundary_quadrature(grid, region, 2)?;
        let mut t = [0.0; 3];
        t[..traction.len().min(3)].copy_from_slice(&traction[..traction.len().min(3)]);
        self.tractions.push(TractionLoad { quadrature, traction: t });
        Ok(())
    }

    pub fn with_penalty_weight(mut self, weight: f64) -> Self {
        self.penalty_weight = Some(weight);
        self
    }

    pub fn mask(&self) -> &[f64] {
        &self.mask
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn is_fixed(&self, node: usize, component: usize) -> bool {
        self.mask[node * self.dim + component] == 0.0
    }

    pub fn fixed_dof_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m == 0.0).count()
    }

    pub fn tractions(&self) -> &[TractionLoad] {
        &self.tractions
    }

    pub fn periodic_groups(&self) -> &[PeriodicGroup] {
        &self.periodic
    }

    pub fn applied_strain(&self) -> &[[f64; 3]; 3] {
        &self.applied_strain
    }

    /// Displacement gradient realized across the cell: the applied strain
    /// with the rotation fixed by the clamped face, so `u⁺ − u⁻ = H Δx`.
    pub fn macro_gradient(&self) -> &[[f64; 3]; 3] {
        &self.macro_gradient
    }

    /// True for unit cells built by [`build_periodic_bcs`].
    pub fn is_periodic_cell(&self) -> bool {
        self.periodic_cell
    }

    pub fn penalty_weight(&self, mat: &MaterialModel) -> f64 {
        self.penalty_weight.unwrap_or(mat.youngs_modulus)
    }

    /// Consistent nodal forces of all traction loads, `node * dim + component`.
    pub fn external_load(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.mask.len()];
        for load in &self.tractions {
            for p in &load.quadrature.points {
                for (&n, &s) in p.nodes.iter().zip(&p.shape) {
                    for c in 0..self.dim {
                        f[n * self.dim + c] += p.weight * s * load.traction[c];
                    }
                }
            }
        }
        f
    }
}

/// `u = ũ * m + u0`, flattened node-major.
pub fn apply_dirichlet(u_raw: &[f64], bcs: &BoundarySpec) -> Result<Vec<f64>> {
    if u_raw.len() != bcs.mask.len() {
        return Err(Error::ShapeMismatch {
            expected: bcs.mask.len(),
            got: u_raw.len(),
        });
    }
    Ok(u_raw
        .iter()
        .zip(&bcs.mask)
        .zip(&bcs.offset)
        .map(|((u, m), o)| u * m + o)
        .collect())
}

#[derive(Debug, Clone)]
pub struct EnergyEvaluation {
    /// ½∫ρᵖσ:ε dV
    pub strain_energy: f64,
    /// ∫t̄·u dA
    pub external_work: f64,
    /// strain energy minus external work
    pub loss: f64,
    /// dLoss/du, node-major
    pub gradient: Vec<f64>,
}

fn check_density(rho: &[f64], grid: &Grid) -> Result<()> {
    if rho.len() != grid.element_count() {
        return Err(Error::ShapeMismatch {
            expected: grid.element_count(),
            got: rho.len(),
        });
    }
    if let Some(&bad) = rho.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::DensityOutOfRange(bad));
    }
    Ok(())
}

/// Strain and stress of element `e` at quadrature point `q`.
fn point_state(grid: &Grid, quad: &QuadratureCache, mat: &MaterialModel, u: &[f64], e: usize, q: usize) -> (SymTensor, SymTensor) {
    let d = grid.dim();
    let qp = &quad.element(e).points[q];
    let mut g = [[0.0; 3]; 3];
    for (a, &n) in grid.element(e).iter().enumerate() {
        let grad = qp.grads[a];
        for i in 0..d {
            let ui = u[n * d + i];
            for j in 0..d {
                g[i][j] += ui * grad[j];
            }
        }
    }
    let eps = strain_from_gradient(&g, d);
    let sig = stress(&eps, mat);
    (eps, sig)
}

/// Strain energy and nodal internal forces of a chunk of elements, each
/// element scaled by `scale[e]`. Forces are returned per element.
fn chunk_internal(
    grid: &Grid,
    quad: &QuadratureCache,
    mat: &MaterialModel,
    u: &[f64],
    scale: &[f64],
    elems: std::ops::Range<usize>,
) -> (f64, Vec<f64>) {
    let d = grid.dim();
    let npe = grid.nodes_per_element();
    let mut energy = 0.0;
    let mut forces = vec![0.0; elems.len() * npe * d];
    for (k, e) in elems.enumerate() {
        let s = scale[e];
        if s == 0.0 {
            continue;
        }
        let local = &mut forces[k * npe * d..(k + 1) * npe * d];
        for (q, qp) in quad.element(e).points.iter().enumerate() {
            let (eps, sig) = point_state(grid, quad, mat, u, e, q);
            let w = qp.weight * s;
            energy += 0.5 * w * sig.double_contract(&eps);
            let sa = sig.as_array();
            for (a, grad) in qp.grads.iter().enumerate() {
                for i in 0..d {
                    let mut acc = 0.0;
                    for j in 0..d {
                        acc += sa[i][j] * grad[j];
                    }
                    local[a * d + i] += w * acc;
                }
            }
        }
    }
    (energy, forces)
}

/// ½∫s_e σ:ε dV and its gradient `Σ s_e ∫Bᵀσ dV` for per-element scales `s`.
pub(crate) fn internal_energy(grid: &Grid, quad: &QuadratureCache, mat: &MaterialModel, u: &[f64], scale: &[f64]) -> (f64, Vec<f64>) {
    let d = grid.dim();
    let npe = grid.nodes_per_element();
    let ne = grid.element_count();
    let chunks: Vec<(f64, Vec<f64>)> = (0..ne.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| chunk_internal(grid, quad, mat, u, scale, c * CHUNK..((c + 1) * CHUNK).min(ne)))
        .collect();
    let mut energy = 0.0;
    let mut grad = vec![0.0; u.len()];
    for (c, (en, forces)) in chunks.into_iter().enumerate() {
        energy += en;
        for (k, local) in forces.chunks_exact(npe * d).enumerate() {
            for (a, &n) in grid.element(c * CHUNK + k).iter().enumerate() {
                for i in 0..d {
                    grad[n * d + i] += local[a * d + i];
                }
            }
        }
    }
    (energy, grad)
}

/// SIMP-penalized potential energy `½∫ρᵖσ:ε dV − ∫t̄·u dA` and its gradient with
/// respect to the nodal displacements.
pub fn potential_energy(
    u: &[f64],
    rho: &[f64],
    grid: &Grid,
    quad: &QuadratureCache,
    mat: &MaterialModel,
    bcs: &BoundarySpec,
) -> Result<EnergyEvaluation> {
    check_density(rho, grid)?;
    if u.len() != grid.node_count() * grid.dim() {
        return Err(Error::ShapeMismatch {
            expected: grid.node_count() * grid.dim(),
            got: u.len(),
        });
    }
    let scale: Vec<f64> = rho.iter().map(|&r| mat.penalize(r)).collect();
    let (strain_energy, mut gradient) = internal_energy(grid, quad, mat, u, &scale);
    let load = bcs.external_load();
    let external_work: f64 = load.iter().zip(u).map(|(f, u)| f * u).sum();
    for (g, f) in gradient.iter_mut().zip(&load) {
        *g -= f;
    }
    let loss = strain_energy - external_work;
    if !loss.is_finite() {
        return Err(Error::NonFinite("potential energy".into()));
    }
    Ok(EnergyEvaluation {
        strain_energy,
        external_work,
        loss,
        gradient,
    })
}

/// `∫σ:ε dV` per element with unit density.
pub fn element_strain_energy(u: &[f64], grid: &Grid, quad: &QuadratureCache, mat: &MaterialModel) -> Vec<f64> {
    (0..grid.element_count())
        .into_par_iter()
        .map(|e| {
            quad.element(e)
                .points
                .iter()
                .enumerate()
                .map(|(q, qp)| {
                    let (eps, sig) = point_state(grid, quad, mat, u, e, q);
                    qp.weight * sig.double_contract(&eps)
                })
                .sum()
        })
        .collect()
}

/// `Σ_groups (w/N_p) Σ ‖u⁺ − u⁻‖²` over the penalized components, with its gradient.
pub fn periodic_penalty(u: &[f64], bcs: &BoundarySpec, weight: f64) -> (f64, Vec<f64>) {
    let d = bcs.dim;
    let mut total = 0.0;
    let mut grad = vec![0.0; u.len()];
    for group in &bcs.periodic {
        if group.pairs.is_empty() {
            continue;
        }
        let w = weight / group.pairs.len() as f64;
        for pair in &group.pairs {
            for &c in &pair.components {
                let diff = u[pair.plus * d + c] - u[pair.minus * d + c];
                total += w * diff * diff;
                grad[pair.plus * d + c] += 2.0 * w * diff;
                grad[pair.minus * d + c] -= 2.0 * w * diff;
            }
        }
    }
    (total, grad)
}

fn detect_driven(strain: &[[f64; 3]; 3], dim: usize) -> Result<Option<DrivenPair>> {
    let mut found: Option<DrivenPair> = None;
    for a in 0..dim {
        for b in a..dim {
            if strain[a][b] != 0.0 || strain[b][a] != 0.0 {
                if found.is_some() {
                    return Err(Error::InvalidBoundary(
                        "only one independent applied strain component is supported".into(),
                    ));
                }
                found = Some(DrivenPair { axis: a, component: b });
            }
        }
    }
    Ok(found)
}

/// Periodic unit-cell conditions for applied strain `strain`.
///
/// The face pair normal to `driven.axis` is clamped on its minus side and has
/// `driven.component` prescribed on its plus side so that the pair jump
/// matches the applied strain with the rotation removed. Every other face pair
/// is tied by the periodic penalty. With `driven = None` the pair is inferred
/// from the single nonzero strain component (smaller index as the axis).
pub fn build_periodic_bcs(grid: &Grid, strain: &[[f64; 3]; 3], driven: Option<DrivenPair>) -> Result<BoundarySpec> {
    let dim = grid.dim();
    let inferred = detect_driven(strain, dim)?;
    let driven = match (driven, inferred) {
        (Some(d), _) => {
            if d.axis >= dim || d.component >= dim {
                return Err(Error::InvalidBoundary(format!("driven pair {d:?} out of range")));
            }
            Some(d)
        }
        (None, inferred) => inferred,
    };
    let mut bcs = BoundarySpec::new(grid);
    bcs.applied_strain = *strain;
    bcs.periodic_cell = true;

    if let Some(DrivenPair { axis: k, component: a }) = driven {
        let jump = if a == k { strain[k][k] } else { strain[a][k] + strain[k][a] };
        let minus = face_nodes(grid, k, 0);
        let plus = face_nodes(grid, k, 1);
        bcs.clamp(&minus);
        bcs.fix(&plus, a, grid.extents()[k] * jump);
        bcs.macro_gradient[a][k] = jump;
    }

    let tol = 1e-9 * grid.diagonal().max(1.0);
    for axis in 0..dim {
        if driven.is_some_and(|d| d.axis == axis) {
            continue;
        }
        let minus = face_nodes(grid, axis, 0);
        let plus = face_nodes(grid, axis, 1);
        if minus.len() != plus.len() {
            return Err(Error::InvalidBoundary(format!(
                "faces normal to axis {axis} have {} and {} nodes",
                minus.len(),
                plus.len()
            )));
        }
        let mut pairs = Vec::with_capacity(minus.len());
        for (&m, &p) in minus.iter().zip(&plus) {
            let (xm, xp) = (grid.node(m), grid.node(p));
            for c in 0..dim {
                let expect = if c == axis { grid.extents()[axis] } else { 0.0 };
                if (xp[c] - xm[c] - expect).abs() > tol {
                    return Err(Error::InvalidBoundary(format!("nodes {m} and {p} are not periodic images")));
                }
            }
            let components: Vec<usize> = (0..dim).filter(|&c| !bcs.is_fixed(m, c) && !bcs.is_fixed(p, c)).collect();
            pairs.push(PeriodicPair {
                minus: m,
                plus: p,
                components,
            });
        }
        bcs.periodic.push(PeriodicGroup { axis, pairs });
    }
    Ok(bcs)
}

/// Nodes of one face, ordered lexicographically by their in-face indices.
fn face_nodes(grid: &Grid, axis: usize, side: usize) -> Vec<usize> {
    let counts = grid.counts();
    let fixed = if side == 0 { 0 } else { counts[axis] - 1 };
    let dim = grid.dim();
    let mut out = Vec::new();
    let kmax = if dim == 3 { counts[2] } else { 1 };
    for k in 0..kmax {
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                let ijk = [i, j, k];
                if ijk[axis] == fixed {
                    out.push(grid.node_index(ijk));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    /// Node-major displacements.
    pub u: Vec<f64>,
    pub loss_history: Vec<f64>,
    pub iterations_used: usize,
    pub strain_energy: f64,
    pub external_work: f64,
    pub penalty: f64,
    pub outcome: TrainOutcome,
}

/// Everything needed to evaluate the DEM loss for a fixed density.
pub struct DemProblem<'a> {
    pub grid: &'a Grid,
    pub quad: &'a QuadratureCache,
    pub mat: &'a MaterialModel,
    pub bcs: &'a BoundarySpec,
}

impl DemProblem<'_> {
    /// Loss and dLoss/du for admissible `u`; the penalty is included.
    pub fn loss(&self, u: &[f64], rho: &[f64]) -> Result<(EnergyEvaluation, f64)> {
        let mut ev = potential_energy(u, rho, self.grid, self.quad, self.mat, self.bcs)?;
        let (pen, pen_grad) = periodic_penalty(u, self.bcs, self.bcs.penalty_weight(self.mat));
        for (g, p) in ev.gradient.iter_mut().zip(&pen_grad) {
            *g += p;
        }
        ev.loss += pen;
        if !ev.loss.is_finite() {
            return Err(Error::NonFinite("loss".into()));
        }
        Ok((ev, pen))
    }
}

/// Trains `params` so the network's admissible field minimizes the loss for
/// density `rho`. `params` is updated in place and may be warm-started.
pub fn solve_equilibrium(
    grid: &Grid,
    quad: &QuadratureCache,
    rho: &[f64],
    bcs: &BoundarySpec,
    mat: &MaterialModel,
    params: &mut NetworkParams,
    config: &TrainConfig,
) -> Result<EquilibriumResult> {
    check_density(rho, grid)?;
    if params.dim() != grid.dim() || bcs.dim() != grid.dim() || mat.dim() != grid.dim() {
        return Err(Error::InvalidBoundary("dimension mismatch between grid, network, material and boundary".into()));
    }
    let problem = DemProblem { grid, quad, mat, bcs };
    let features = params.rff_map(normalized_coordinates(grid).view());
    let n = grid.node_count();
    let d = grid.dim();
    let outcome = train(params, &features, config, |out: &Array2<f64>| {
        let raw = out.as_slice().expect("standard layout");
        let u = apply_dirichlet(raw, bcs)?;
        let (ev, _) = match problem.loss(&u, rho) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => return Ok((f64::NAN, Array2::zeros((n, d)))),
            Err(e) => return Err(e),
        };
        let grad: Vec<f64> = ev.gradient.iter().zip(bcs.mask()).map(|(g, m)| g * m).collect();
        Ok((ev.loss, Array2::from_shape_vec((n, d), grad).expect("shape")))
    })?;
    let u = network_displacement(params, &features, bcs)?;
    let (ev, penalty) = problem.loss(&u, rho)?;
    Ok(EquilibriumResult {
        u,
        loss_history: outcome.loss_history.clone(),
        iterations_used: outcome.iterations,
        strain_energy: ev.strain_energy,
        external_work: ev.external_work,
        penalty,
        outcome,
    })
}

/// Admissible displacement of the network at the grid nodes.
pub fn network_displacement(params: &NetworkParams, features: &Array2<f64>, bcs: &BoundarySpec) -> Result<Vec<f64>> {
    let out = params.forward(features, &mut crate::neuralfield::SlopeSampler::Midpoint).output;
    apply_dirichlet(out.as_slice().expect("standard layout"), bcs)
}
