//! Running a configured case and writing its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use demto::cases::{self, LoadCase, Objective};
use demto::demsolver::{build_periodic_bcs, BoundarySpec};
use demto::elasticity::{MaterialModel, Mode};
use demto::grid::{BoxRegion, Grid};
use demto::neuralfield::write_checkpoint;
use demto::neuralfield::{Architecture, TrainConfig};
use demto::topopt::{run_topology_optimization, ForwardSolver, IterationRecord, MmaSettings, TOConfig};

use crate::config::{CaseKind, ForwardMode, RunConfig};
use crate::dice::dice_similarity;
use crate::export::{export_density, export_voxels, Format, VOXEL_THRESHOLD};
use crate::CliError;

/// Outcome of one solver's optimization.
#[derive(Debug, Clone)]
pub struct SolverRun {
    pub solver: &'static str,
    pub records: Vec<IterationRecord>,
    pub final_density: Vec<f64>,
    pub directory: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub runs: Vec<SolverRun>,
    /// DEM-vs-FEM similarity per iteration, in `both` mode.
    pub dsc: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    core_version: &'a str,
    config: &'a RunConfig,
}

fn solver_err(solver: &'static str) -> impl Fn(demto::Error) -> CliError {
    move |source| CliError::Solver { solver, source }
}

fn config_err(e: demto::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Grid, boundary conditions, material and starting design for `cfg`.
pub fn build_case(cfg: &RunConfig) -> Result<LoadCase, CliError> {
    cfg.validate()?;
    let counts2 = || [cfg.counts[0], cfg.counts[1]];
    let mut case = match cfg.case {
        CaseKind::Bridge2d => cases::bridge2d(counts2(), cfg.load),
        CaseKind::Beam2d => cases::beam2d(counts2(), cfg.load),
        CaseKind::Bridge3d => cases::bridge3d([cfg.counts[0], cfg.counts[1], cfg.counts[2]], cfg.load),
        CaseKind::UnitcellShear => cases::unitcell_shear(counts2(), cfg.hole.into()).and_then(|mut c| {
            c.bcs = build_periodic_bcs(&c.grid, &cases::shear_strain(cfg.applied_shear), None)?;
            Ok(c)
        }),
        CaseKind::Custom => custom_case(cfg),
    }
    .map_err(config_err)?;
    if let Some(w) = cfg.penalty_weight {
        case.bcs = case.bcs.with_penalty_weight(w);
    }
    let m = &cfg.material;
    case.material = MaterialModel::new(m.youngs_modulus, m.poisson_ratio, m.simp_exponent, Mode::for_dim(cfg.counts.len()))
        .map_err(config_err)?;
    let vf = cfg.optimization.volume_fraction;
    case.volume_fraction = vf;
    case.filter_radius = cfg.optimization.filter_radius;
    case.initial_design = match cfg.case {
        CaseKind::UnitcellShear => {
            let radius = cases::HoleRadius::from(cfg.hole).fraction() * case.grid.extents()[1];
            cases::hole_design(&case.grid, radius, vf).map_err(config_err)?
        }
        _ => vec![vf; case.grid.element_count()],
    };
    Ok(case)
}

fn custom_case(cfg: &RunConfig) -> demto::Result<LoadCase> {
    let grid = Grid::new(&cfg.extents, &cfg.counts)?;
    let mut bcs = BoundarySpec::new(&grid);
    for face in &cfg.clamped_faces {
        let nodes = grid
            .boundary_set(face)
            .ok_or_else(|| demto::Error::InvalidBoundary(format!("unknown face `{face}`")))?
            .to_vec();
        bcs.clamp(&nodes);
    }
    for p in &cfg.patches {
        bcs.add_traction(&grid, &BoxRegion::new(&p.lo, &p.hi), &p.traction)?;
    }
    Ok(LoadCase {
        name: "custom".into(),
        initial_design: vec![cfg.optimization.volume_fraction; grid.element_count()],
        material: MaterialModel::standard(Mode::for_dim(grid.dim())),
        grid,
        bcs,
        objective: Objective::Compliance,
        volume_fraction: cfg.optimization.volume_fraction,
        filter_radius: cfg.optimization.filter_radius,
    })
}

/// Optimizer settings for one solver.
pub fn to_config(cfg: &RunConfig, objective: Objective, solver: &'static str) -> TOConfig {
    let t = &cfg.training;
    let forward = if solver == "fem" {
        ForwardSolver::Fem
    } else {
        ForwardSolver::Dem {
            architecture: Architecture {
                hidden_layers: t.hidden_layers,
                neurons: t.neurons,
                rff_features: t.rff_features,
                sigma_mlp: t.sigma_mlp,
                sigma_rff: t.sigma_rff,
                ..Architecture::default()
            },
            train: TrainConfig {
                learning_rate: t.learning_rate,
                max_iterations: t.max_iterations,
                max_steps: t.max_steps,
                eps_tol: t.eps_tol,
                history_size: t.history_size,
                random_slopes: (!cfg.deterministic).then_some(cfg.seed),
            },
            seed: cfg.seed,
        }
    };
    TOConfig {
        volume_fraction: cfg.optimization.volume_fraction,
        max_iterations: cfg.optimization.iterations,
        objective,
        forward,
        filter_radius: cfg.optimization.filter_radius,
        simp_exponent: cfg.material.simp_exponent,
        mma: MmaSettings::default(),
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

pub fn history_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from("iteration,objective,relative_objective,volume_fraction,training_iterations\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration, r.objective, r.relative_objective, r.volume_fraction, r.training_iterations
        );
    }
    out
}

fn timing_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from("iteration,training_iterations,wall_time_s\n");
    for r in records {
        let _ = writeln!(out, "{},{},{}", r.iteration, r.training_iterations, r.wall_time);
    }
    out
}

fn run_solver(
    cfg: &RunConfig,
    case: &LoadCase,
    solver: &'static str,
    log: &mut dyn FnMut(&str),
) -> Result<(SolverRun, Vec<Vec<f64>>), CliError> {
    let dir = cfg.output.join(solver);
    let snapshots = dir.join("density");
    fs::create_dir_all(&snapshots).map_err(io(&snapshots))?;
    let to = to_config(cfg, case.objective, solver);
    let mut write_error = None;
    let result = run_topology_optimization(&to, &case.grid, &case.material, &case.bcs, &case.initial_design, |rec, rho| {
        log(&format!(
            "[{solver}] iteration {:>3}  objective {:.6e}  relative {:.4}  volume {:.4}  training {}",
            rec.iteration, rec.objective, rec.relative_objective, rec.volume_fraction, rec.training_iterations
        ));
        if (rec.iteration - 1) % cfg.snapshot_every == 0 || rec.iteration == to.max_iterations {
            let path = snapshots.join(format!("iter_{:04}.csv", rec.iteration));
            if let Err(e) = export_density(rho, &case.grid, Format::Csv, &path) {
                write_error.get_or_insert(e);
            }
        }
    })
    .map_err(solver_err(solver))?;
    if let Some(e) = write_error {
        return Err(e);
    }

    let write = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io(&path))
    };
    write("history.csv", history_csv(&result.records))?;
    write("timing.csv", timing_csv(&result.records))?;
    let rho = &result.final_density;
    export_density(rho, &case.grid, Format::Csv, &dir.join("final.csv"))?;
    export_density(rho, &case.grid, Format::Vtk, &dir.join("final.vtk"))?;
    if case.grid.dim() == 2 {
        export_density(rho, &case.grid, Format::Image, &dir.join("final.png"))?;
    } else {
        let n = export_voxels(rho, &case.grid, VOXEL_THRESHOLD, &dir.join("final_voxels.vtk"))?;
        log(&format!("[{solver}] {n} voxels at density >= {VOXEL_THRESHOLD}"));
    }
    if let Some(net) = &result.network {
        let path = dir.join("network.txt");
        let file = fs::File::create(&path).map_err(io(&path))?;
        write_checkpoint(net, std::io::BufWriter::new(file)).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let run = SolverRun {
        solver,
        records: result.records,
        final_density: result.final_density,
        directory: dir,
    };
    Ok((run, result.densities))
}

/// Runs the configured optimization(s) and writes all artifacts under
/// `cfg.output`. Progress lines go to `log`.
pub fn run_case(cfg: &RunConfig, mut log: impl FnMut(&str)) -> Result<RunSummary, CliError> {
    let case = build_case(cfg)?;
    let out = &cfg.output;
    fs::create_dir_all(out).map_err(io(out))?;
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        core_version: demto::VERSION,
        config: cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    let path = out.join("manifest.toml");
    fs::write(&path, text).map_err(io(&path))?;

    let solvers: &[&'static str] = match cfg.forward {
        ForwardMode::Dem => &["dem"],
        ForwardMode::Fem => &["fem"],
        ForwardMode::Both => &["dem", "fem"],
    };
    let mut runs = Vec::new();
    let mut histories = Vec::new();
    for &solver in solvers {
        let (run, densities) = run_solver(cfg, &case, solver, &mut log)?;
        runs.push(run);
        histories.push(densities);
    }
    let dsc = if let [dem, fem] = &histories[..] {
        let mut text = String::from("iteration,dsc\n");
        let mut values = Vec::with_capacity(dem.len());
        for (k, (a, b)) in dem.iter().zip(fem).enumerate() {
            let d = dice_similarity(a, b)?;
            let _ = writeln!(text, "{},{d}", k + 1);
            values.push(d);
        }
        let path = out.join("dsc.csv");
        fs::write(&path, text).map_err(io(&path))?;
        if let Some(last) = values.last() {
            log(&format!("final DSC {last:.4}"));
        }
        Some(values)
    } else {
        None
    };
    Ok(RunSummary { runs, dsc })
}
