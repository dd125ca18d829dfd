use std::collections::VecDeque;

use demto::cases::{beam2d, bridge2d};
use demto::demsolver::solve_equilibrium;
use demto::grid::precompute_quadrature;
use demto::neuralfield::{init_params, read_checkpoint, write_checkpoint, Architecture, TrainConfig};
use demto::topopt::{run_topology_optimization, ForwardSolver, TOConfig};

/// 4-connected components of `cells` on an `nx × ny` raster, each flagged
/// by whether it touches the border.
fn components(cells: &[bool], nx: usize, ny: usize) -> Vec<bool> {
    let mut seen = vec![false; cells.len()];
    let mut touches = Vec::new();
    for seed in 0..cells.len() {
        if !cells[seed] || seen[seed] {
            continue;
        }
        seen[seed] = true;
        let mut border = false;
        let mut queue = VecDeque::from([seed]);
        while let Some(e) = queue.pop_front() {
            let (i, j) = (e % nx, e / nx);
            border |= i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
            let mut visit = |f: usize| {
                if cells[f] && !seen[f] {
                    seen[f] = true;
                    queue.push_back(f);
                }
            };
            if i > 0 {
                visit(e - 1);
            }
            if i + 1 < nx {
                visit(e + 1);
            }
            if j > 0 {
                visit(e - nx);
            }
            if j + 1 < ny {
                visit(e + nx);
            }
        }
        touches.push(border);
    }
    touches
}

#[test]
fn fem_cantilever_forms_a_truss() {
    let case = beam2d([41, 21], 1.0).unwrap();
    let mut cfg = TOConfig::new(case.objective, ForwardSolver::Fem);
    cfg.max_iterations = 60;
    // About two elements, as the default radius is on the finer grid.
    cfg.filter_radius = 0.5;
    let res = run_topology_optimization(&cfg, &case.grid, &case.material, &case.bcs, &case.initial_design, |_, _| {}).unwrap();
    for r in &res.records {
        assert!((r.volume_fraction - 0.4).abs() <= 1e-3, "iteration {}: {}", r.iteration, r.volume_fraction);
    }
    // Two or more enclosed holes in one connected solid means at least three members.
    let solid: Vec<bool> = res.final_density.iter().map(|&r| r >= 0.5).collect();
    let void: Vec<bool> = solid.iter().map(|s| !s).collect();
    assert_eq!(components(&solid, 40, 20).len(), 1);
    let holes = components(&void, 40, 20).into_iter().filter(|b| !b).count();
    assert!(holes >= 2, "{holes} enclosed holes");
}

#[test]
fn fem_compliance_windows_do_not_increase() {
    let case = bridge2d([61, 16], 1.0).unwrap();
    let mut cfg = TOConfig::new(case.objective, ForwardSolver::Fem);
    cfg.max_iterations = 60;
    let res = run_topology_optimization(&cfg, &case.grid, &case.material, &case.bcs, &case.initial_design, |_, _| {}).unwrap();
    let rel: Vec<f64> = res.records.iter().map(|r| r.relative_objective).collect();
    assert_eq!(rel[0], 1.0);
    let means: Vec<f64> = rel.chunks(10).map(|w| w.iter().sum::<f64>() / w.len() as f64).collect();
    for w in means.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{means:?}");
    }
}

#[test]
fn warm_start_needs_fewer_iterations() {
    let case = bridge2d([25, 6], 1.0).unwrap();
    let quad = precompute_quadrature(&case.grid, 2).unwrap();
    let rho = vec![0.6; case.grid.element_count()];
    let mut params = init_params(2, &Architecture::default(), 1).unwrap();
    let cfg = TrainConfig::default();
    let cold = solve_equilibrium(&case.grid, &quad, &rho, &case.bcs, &case.material, &mut params, &cfg).unwrap();
    let warm = solve_equilibrium(&case.grid, &quad, &rho, &case.bcs, &case.material, &mut params, &cfg).unwrap();
    assert!(warm.iterations_used < cold.iterations_used, "{} vs {}", warm.iterations_used, cold.iterations_used);
    assert!(warm.outcome.best_loss <= cold.outcome.best_loss + 1e-12);
}

#[test]
fn trained_network_survives_checkpoint() {
    let case = bridge2d([13, 4], 1.0).unwrap();
    let quad = precompute_quadrature(&case.grid, 2).unwrap();
    let rho = vec![1.0; case.grid.element_count()];
    let mut params = init_params(2, &Architecture::default(), 2).unwrap();
    let cfg = TrainConfig { max_steps: 2, ..TrainConfig::default() };
    solve_equilibrium(&case.grid, &quad, &rho, &case.bcs, &case.material, &mut params, &cfg).unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&params, &mut buf).unwrap();
    let back = read_checkpoint(buf.as_slice()).unwrap();
    assert_eq!(back.theta(), params.theta());
    assert_eq!(back.rff_matrix(), params.rff_matrix());
}
