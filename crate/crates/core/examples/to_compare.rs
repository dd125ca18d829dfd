//! Bridge optimization with both forward solvers, printing DSC per iteration.
//!
//! Usage: `to_compare iterations inner_iterations max_steps eps_tol`

use demto::cases::{bridge2d, Objective};
use demto::neuralfield::{Architecture, TrainConfig};
use demto::topopt::{run_topology_optimization, ForwardSolver, TOConfig};

fn dice(a: &[f64], b: &[f64]) -> f64 {
    let ta = 0.5 * a.iter().cloned().fold(f64::MIN, f64::max);
    let tb = 0.5 * b.iter().cloned().fold(f64::MIN, f64::max);
    let (mut inter, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (ia, ib) = (*x > ta, *y > tb);
        na += ia as u8 as f64;
        nb += ib as u8 as f64;
        inter += (ia && ib) as u8 as f64;
    }
    if na + nb == 0.0 { 1.0 } else { 2.0 * inter / (na + nb) }
}

fn main() -> demto::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let iters: usize = args.first().map_or(40, |v| v.parse().unwrap());
    let inner: usize = args.get(1).map_or(100, |v| v.parse().unwrap());
    let steps: usize = args.get(2).map_or(10, |v| v.parse().unwrap());
    let eps: f64 = args.get(3).map_or(5e-6, |v| v.parse().unwrap());
    let case = bridge2d([61, 16], 1.0)?;
    let mut cfg = TOConfig::new(Objective::Compliance, ForwardSolver::Fem);
    cfg.max_iterations = iters;
    let fem = run_topology_optimization(&cfg, &case.grid, &case.material, &case.bcs, &case.initial_design, |_, _| {})?;
    cfg.forward = ForwardSolver::Dem {
        architecture: Architecture::default(),
        train: TrainConfig { max_iterations: inner, max_steps: steps, eps_tol: eps, ..TrainConfig::default() },
        seed: 0,
    };
    let t0 = std::time::Instant::now();
    let dem = run_topology_optimization(&cfg, &case.grid, &case.material, &case.bcs, &case.initial_design, |r, _| {
        eprintln!("it {} rel {:.4} train {} t {:.1}", r.iteration, r.relative_objective, r.training_iterations, r.wall_time);
    })?;
    for (k, (a, b)) in fem.densities.iter().zip(&dem.densities).enumerate() {
        if (k + 1) % 5 == 0 {
            println!("iter {} dsc {:.4} fem rel {:.4} dem rel {:.4}", k + 1, dice(a, b), fem.records[k].relative_objective, dem.records[k].relative_objective);
        }
    }
    for d in [fem.densities.last().unwrap(), dem.densities.last().unwrap()] {
        for j in (0..15).rev() {
            let row: String = (0..60).map(|i| { let v = d[i + 60 * j]; if v > 0.75 { '#' } else if v > 0.5 { '+' } else if v > 0.25 { '.' } else { ' ' } }).collect();
            println!("|{row}|");
        }
        println!();
    }
    let first: usize = dem.records.iter().take(iters / 2).map(|r| r.training_iterations).sum();
    let second: usize = dem.records.iter().skip(iters / 2).map(|r| r.training_iterations).sum();
    println!("training first half {first} second half {second}, total {:.0}s", t0.elapsed().as_secs_f64());
    Ok(())
}
