//! Trains the network on a fixed uniform density and compares with the FEM solve.
//!
//! Usage: `dem_vs_fem [nx ny] [max_steps] [seed]`

use std::time::Instant;

use demto::cases::bridge2d;
use demto::demsolver::solve_equilibrium;
use demto::femsolver::{assemble, solve};
use demto::grid::precompute_quadrature;
use demto::neuralfield::{init_params, Architecture, TrainConfig};

fn main() -> demto::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let nx = args.first().copied().unwrap_or(61);
    let ny = args.get(1).copied().unwrap_or(16);
    let steps = args.get(2).copied().unwrap_or(100);
    let seed = args.get(3).copied().unwrap_or(0) as u64;
    let case = bridge2d([nx, ny], 1.0)?;
    let quad = precompute_quadrature(&case.grid, 2)?;
    let rho = vec![1.0; case.grid.element_count()];
    let fem = solve(&assemble(&case.grid, &quad, &rho, &case.material, &case.bcs)?)?;

    let mut params = init_params(2, &Architecture::default(), seed)?;
    let cfg = TrainConfig {
        max_steps: steps,
        eps_tol: std::env::var("EPS").ok().map_or(5e-6, |v| v.parse().unwrap()),
        ..TrainConfig::default()
    };
    let t0 = Instant::now();
    let res = solve_equilibrium(&case.grid, &quad, &rho, &case.bcs, &case.material, &mut params, &cfg)?;
    let err = res.u.iter().zip(&fem).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        / fem.iter().map(|b| b * b).sum::<f64>().sqrt();
    println!(
        "steps {}, iterations {} ({:?}), evaluations {}, time {:.1}s, relative L2 error {:.4}",
        res.outcome.steps,
        res.iterations_used,
        res.outcome.stop_reason,
        res.outcome.evaluations,
        t0.elapsed().as_secs_f64(),
        err
    );
    Ok(())
}
