//! Density-based topology optimization: filtering, sensitivities, MMA and the
//! outer loop over forward solves.

mod filter;
mod mma;
mod sensitivity;

pub use filter::{build_filter, chain_rule_filter, FilterMatrix};
pub use mma::{mma_update, MmaSettings, MmaState};
pub use sensitivity::{compliance_sensitivity, shear_sensitivity};

use std::time::Instant;

use crate::cases::Objective;
use crate::demsolver::{solve_equilibrium, BoundarySpec};
use crate::elasticity::MaterialModel;
use crate::femsolver::{assemble, compliance, homogenized_shear, solve};
use crate::grid::{precompute_quadrature, Grid, QuadratureCache};
use crate::neuralfield::{init_params, Architecture, NetworkParams, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ForwardSolver {
    /// Neural field, warm-started across iterations.
    Dem {
        architecture: Architecture,
        train: TrainConfig,
        seed: u64,
    },
    Fem,
}

impl ForwardSolver {
    pub fn name(&self) -> &'static str {
        match self {
            ForwardSolver::Dem { .. } => "dem",
            ForwardSolver::Fem => "fem",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TOConfig {
    pub volume_fraction: f64,
    pub max_iterations: usize,
    pub objective: Objective,
    pub forward: ForwardSolver,
    pub filter_radius: f64,
    pub simp_exponent: f64,
    pub mma: MmaSettings,
}

impl TOConfig {
    pub fn new(objective: Objective, forward: ForwardSolver) -> Self {
        TOConfig {
            volume_fraction: 0.4,
            max_iterations: 80,
            objective,
            forward,
            filter_radius: 0.25,
            simp_exponent: 3.0,
            mma: MmaSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.volume_fraction > 0.0 && self.volume_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "volume fraction {} must lie strictly between 0 and 1",
                self.volume_fraction
            )));
        }
        if !(self.filter_radius > 0.0) {
            return Err(Error::InvalidConfig(format!("filter radius {}", self.filter_radius)));
        }
        if !(self.simp_exponent >= 1.0) {
            return Err(Error::InvalidConfig(format!("SIMP exponent {}", self.simp_exponent)));
        }
        if let ForwardSolver::Dem { train, .. } = &self.forward {
            train.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// Compliance, or the negative homogenized shear modulus.
    pub objective: f64,
    /// Objective divided by its first-iteration value.
    pub relative_objective: f64,
    pub volume_fraction: f64,
    /// L-BFGS iterations spent in the forward solve (0 for FEM).
    pub training_iterations: usize,
    /// Seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct TOResult {
    pub records: Vec<IterationRecord>,
    /// Physical density used in each iteration's forward solve.
    pub densities: Vec<Vec<f64>>,
    pub final_density: Vec<f64>,
    /// Network after the last forward solve, for DEM runs.
    pub network: Option<NetworkParams>,
}

fn volume_fraction(grid: &Grid, rho: &[f64]) -> f64 {
    rho.iter().zip(grid.element_volumes()).map(|(r, v)| r * v).sum::<f64>() / grid.total_volume()
}

struct Forward<'a> {
    grid: &'a Grid,
    quad: QuadratureCache,
    mat: MaterialModel,
    bcs: &'a BoundarySpec,
    objective: Objective,
    dem: Option<(NetworkParams, TrainConfig)>,
}

impl Forward<'_> {
    /// Objective value, its density gradient, and training iterations spent.
    fn evaluate(&mut self, rho: &[f64]) -> Result<(f64, Vec<f64>, usize)> {
        let (u, iters) = match &mut self.dem {
            Some((params, train)) => {
                let res = solve_equilibrium(self.grid, &self.quad, rho, self.bcs, &self.mat, params, train)?;
                (res.u, res.iterations_used)
            }
            None => {
                let sys = assemble(self.grid, &self.quad, rho, &self.mat, self.bcs)?;
                (solve(&sys)?, 0)
            }
        };
        let (f, df) = match self.objective {
            Objective::Compliance => {
                let f = match &self.dem {
                    Some(_) => {
                        let w = crate::demsolver::element_strain_energy(&u, self.grid, &self.quad, &self.mat);
                        0.5 * w.iter().zip(rho).map(|(w, &r)| self.mat.penalize(r) * w).sum::<f64>()
                    }
                    None => compliance(&u, &assemble(self.grid, &self.quad, rho, &self.mat, self.bcs)?),
                };
                (f, compliance_sensitivity(&u, rho, self.grid, &self.quad, &self.mat))
            }
            Objective::ShearModulus => (
                -homogenized_shear(&u, rho, self.grid, &self.quad, &self.mat),
                shear_sensitivity(&u, rho, self.grid, &self.quad, &self.mat),
            ),
        };
        if !f.is_finite() {
            return Err(Error::NonFinite("objective".into()));
        }
        Ok((f, df, iters))
    }
}

/// Filter → forward solve → sensitivities → filter transpose → MMA, for
/// `config.max_iterations` iterations starting from pseudo-densities
/// `initial_xi`. `observer` sees every record with its density.
pub fn run_topology_optimization<F>(
    config: &TOConfig,
    grid: &Grid,
    mat: &MaterialModel,
    bcs: &BoundarySpec,
    initial_xi: &[f64],
    mut observer: F,
) -> Result<TOResult>
where
    F: FnMut(&IterationRecord, &[f64]),
{
    config.validate()?;
    let ne = grid.element_count();
    if initial_xi.len() != ne {
        return Err(Error::ShapeMismatch {
            expected: ne,
            got: initial_xi.len(),
        });
    }
    if let Some(&bad) = initial_xi.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::DensityOutOfRange(bad));
    }
    let mat = MaterialModel::new(mat.youngs_modulus, mat.poisson_ratio, config.simp_exponent, mat.mode)?;
    let filter = build_filter(grid, config.filter_radius)?;
    let total = grid.total_volume();
    let a: Vec<f64> = filter
        .column_sums()
        .iter()
        .zip(grid.element_volumes())
        .map(|(c, v)| c * v / total)
        .collect();
    let dem = match &config.forward {
        ForwardSolver::Dem {
            architecture,
            train,
            seed,
        } => Some((init_params(grid.dim(), architecture, *seed)?, train.clone())),
        ForwardSolver::Fem => None,
    };
    let mut forward = Forward {
        grid,
        quad: precompute_quadrature(grid, 2)?,
        mat,
        bcs,
        objective: config.objective,
        dem,
    };
    let mut mma = MmaState::new(ne, config.mma.clone());
    let mut xi = initial_xi.to_vec();
    let mut records = Vec::with_capacity(config.max_iterations);
    let mut densities = Vec::with_capacity(config.max_iterations);
    let mut f_first = None;

    for iteration in 1..=config.max_iterations {
        let start = Instant::now();
        let rho: Vec<f64> = filter.apply(&xi).into_iter().map(|r| r.clamp(0.0, 1.0)).collect();
        let (f, dfdrho, training_iterations) = forward.evaluate(&rho).map_err(|e| Error::ForwardSolve {
            iteration,
            source: Box::new(e),
        })?;
        let f1 = *f_first.get_or_insert(f);
        let scale = if f1 != 0.0 { f1.abs() } else { 1.0 };
        let dfdxi: Vec<f64> = chain_rule_filter(&dfdrho, &filter)?.into_iter().map(|g| g / scale).collect();
        if iteration < config.max_iterations {
            xi = mma_update(&mut mma, &xi, &dfdxi, &a, config.volume_fraction)?;
        }
        let record = IterationRecord {
            iteration,
            objective: f,
            relative_objective: if f1 != 0.0 { f / f1 } else { 1.0 },
            volume_fraction: volume_fraction(grid, &rho),
            training_iterations,
            wall_time: start.elapsed().as_secs_f64(),
        };
        observer(&record, &rho);
        records.push(record);
        densities.push(rho);
    }
    let final_density = densities.last().cloned().unwrap_or_else(|| filter.apply(&xi));
    Ok(TOResult {
        records,
        densities,
        final_density,
        network: forward.dem.map(|(p, _)| p),
    })
}
