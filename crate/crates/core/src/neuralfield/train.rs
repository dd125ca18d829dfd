use ndarray::Array2;

use super::lbfgs::{axpy, dot, strong_wolfe, LbfgsMemory};
use super::{NetworkParams, SlopeSampler};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// L-BFGS iterations per optimizer step.
    pub max_iterations: usize,
    /// Upper bound on optimizer steps.
    pub max_steps: usize,
    /// Relative loss change between optimizer steps below which training stops.
    pub eps_tol: f64,
    pub history_size: usize,
    /// Sample RReLU slopes with this seed; `None` uses the midpoint slope.
    pub random_slopes: Option<u64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1.735,
            max_iterations: 100,
            max_steps: 100,
            eps_tol: 5e-6,
            history_size: 10,
            random_slopes: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidTrainConfig(format!("learning rate {}", self.learning_rate)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidTrainConfig("at least one iteration per step is required".into()));
        }
        if !(self.eps_tol >= 0.0) {
            return Err(Error::InvalidTrainConfig(format!("tolerance {}", self.eps_tol)));
        }
        if self.history_size == 0 {
            return Err(Error::InvalidTrainConfig("history size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Relative loss change fell below the tolerance.
    Converged,
    /// The step budget ran out.
    MaxSteps,
    /// The line search could not decrease the loss.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Loss before training followed by the loss after each L-BFGS iteration.
    pub loss_history: Vec<f64>,
    /// L-BFGS iterations over all steps.
    pub iterations: usize,
    pub steps: usize,
    pub evaluations: usize,
    pub stop_reason: StopReason,
    pub best_loss: f64,
}

const MAX_HALVINGS: usize = 20;

/// Minimizes `loss_fn(network output)` over the trainable parameters with
/// L-BFGS and a strong Wolfe line search. `loss_fn` returns the loss and its
/// gradient with respect to the output.
///
/// Training runs in optimizer steps of up to `max_iterations` L-BFGS
/// iterations each, keeping the curvature memory between steps, and stops
/// once the loss changes by less than `eps_tol` (relative) over a step. The
/// best parameters seen are left in `params`.
pub fn train<F>(params: &mut NetworkParams, features: &Array2<f64>, config: &TrainConfig, mut loss_fn: F) -> Result<TrainOutcome>
where
    F: FnMut(&Array2<f64>) -> Result<(f64, Array2<f64>)>,
{
    config.validate()?;
    // Random slopes are redrawn once per iteration and held fixed during its
    // line search, so every evaluation within an iteration sees one objective.
    let slopes_for = |k: usize| match config.random_slopes {
        Some(seed) => SlopeSampler::random(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        None => SlopeSampler::Midpoint,
    };
    let mut work = params.clone();
    let mut evaluations = 0usize;
    let mut objective = |theta: &[f64], sampler: &mut SlopeSampler| -> Result<(f64, Vec<f64>)> {
        work.set_theta(theta)?;
        let pass = work.forward(features, sampler);
        let (loss, d_out) = loss_fn(&pass.output)?;
        if !loss.is_finite() {
            return Ok((f64::INFINITY, vec![0.0; theta.len()]));
        }
        let grad = work.backward(features, &pass, &d_out)?;
        Ok((loss, grad))
    };

    let mut theta = params.theta().to_vec();
    let (mut f, mut g) = objective(&theta, &mut slopes_for(0))?;
    evaluations += 1;
    if !f.is_finite() {
        return Err(Error::TrainingAborted {
            iteration: 0,
            reason: "non-finite loss at the initial parameters".into(),
        });
    }
    let mut history = vec![f];
    let mut memory = LbfgsMemory::new(config.history_size);
    let mut best = (f, theta.clone());
    let mut stop_reason = StopReason::MaxSteps;
    let mut iterations = 0;
    let mut steps = 0;
    let mut step_start = f;

    'steps: while steps < config.max_steps {
        steps += 1;
        let mut inner = 0;
        while inner < config.max_iterations {
            inner += 1;
            let slopes = slopes_for(iterations);
            if config.random_slopes.is_some() && iterations > 0 {
                (f, g) = objective(&theta, &mut slopes.clone())?;
                evaluations += 1;
                if !f.is_finite() {
                    return Err(Error::TrainingAborted {
                        iteration: iterations,
                        reason: "non-finite loss after resampling slopes".into(),
                    });
                }
            }
            let mut d = memory.direction(&g);
            let mut gtd = dot(&g, &d);
            if !(gtd < 0.0) {
                memory.clear();
                d = g.iter().map(|v| -v).collect();
                gtd = dot(&g, &d);
                if !(gtd < 0.0) {
                    stop_reason = StopReason::Converged;
                    break 'steps;
                }
            }
            let g_l1: f64 = g.iter().map(|v| v.abs()).sum();
            let mut t = if iterations == 0 {
                (1.0f64).min(1.0 / g_l1) * config.learning_rate
            } else {
                config.learning_rate
            };

            let mut phi = |step: f64| {
                let mut x = theta.clone();
                axpy(step, &d, &mut x);
                evaluations += 1;
                objective(&x, &mut slopes.clone())
            };
            let mut first = phi(t)?;
            let mut halvings = 0;
            while !first.0.is_finite() {
                if halvings == MAX_HALVINGS {
                    return Err(Error::TrainingAborted {
                        iteration: iterations + 1,
                        reason: format!("loss stayed non-finite after {MAX_HALVINGS} step halvings"),
                    });
                }
                t *= 0.5;
                halvings += 1;
                first = phi(t)?;
            }
            let ls = strong_wolfe(&mut phi, t, first, &d, f, &g, gtd)?;
            if !(ls.loss < f) {
                if !memory.is_empty() {
                    memory.clear();
                    continue;
                }
                stop_reason = StopReason::Stalled;
                break 'steps;
            }
            let s: Vec<f64> = d.iter().map(|v| ls.step * v).collect();
            let y: Vec<f64> = ls.gradient.iter().zip(&g).map(|(a, b)| a - b).collect();
            axpy(ls.step, &d, &mut theta);
            memory.push(s, y);
            f = ls.loss;
            g = ls.gradient;
            history.push(f);
            iterations += 1;
            if f < best.0 {
                best = (f, theta.clone());
            }
        }
        if ((f - step_start) / step_start).abs() < config.eps_tol {
            stop_reason = StopReason::Converged;
            break;
        }
        step_start = f;
    }

    params.set_theta(&best.1)?;
    Ok(TrainOutcome {
        loss_history: history,
        iterations,
        steps,
        evaluations,
        stop_reason,
        best_loss: best.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralfield::{init_params, Architecture};
    use ndarray::Array2;

    fn linear_setup() -> (NetworkParams, Array2<f64>, Array2<f64>) {
        let arch = Architecture {
            hidden_layers: 0,
            rff_features: 8,
            sigma_rff: 2.0,
            ..Architecture::default()
        };
        let p = init_params(2, &arch, 3).unwrap();
        let coords = Array2::from_shape_fn((200, 2), |(i, a)| if a == 0 { (i % 20) as f64 / 19.0 } else { (i / 20) as f64 / 9.0 });
        let f = p.rff_map(coords.view());
        let target = Array2::from_shape_fn((200, 2), |(i, a)| (i as f64 * 0.1 + a as f64).sin());
        (p, f, target)
    }

    #[test]
    fn convex_quadratic_converges() {
        let (mut p, feats, target) = linear_setup();
        let cfg = TrainConfig {
            learning_rate: 1.0,
            max_iterations: 100,
            max_steps: 5,
            eps_tol: 0.0,
            ..TrainConfig::default()
        };
        let loss = |out: &Array2<f64>| {
            let r = out - &target;
            Ok((0.5 * r.mapv(|v| v * v).sum(), r))
        };
        let outcome = train(&mut p, &feats, &cfg, loss).unwrap();
        assert!(outcome.iterations < 50);
        // least-squares optimum via normal equations, solved independently
        let n = feats.ncols() + 1;
        let mut a = vec![vec![0.0; n]; n];
        for row in feats.outer_iter() {
            let x: Vec<f64> = row.iter().copied().chain(std::iter::once(1.0)).collect();
            for i in 0..n {
                for j in 0..n {
                    a[i][j] += x[i] * x[j];
                }
            }
        }
        let mut opt = 0.0;
        for c in 0..2 {
            let mut m = a.clone();
            let mut b = vec![0.0; n];
            for (r, row) in feats.outer_iter().enumerate() {
                let x: Vec<f64> = row.iter().copied().chain(std::iter::once(1.0)).collect();
                for i in 0..n {
                    b[i] += x[i] * target[[r, c]];
                }
            }
            for i in 0..n {
                m[i][i] += 1e-12;
            }
            let w = gauss_solve(m, b.clone());
            let resid: f64 = feats
                .outer_iter()
                .enumerate()
                .map(|(r, row)| {
                    let pred: f64 = row.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() + w[n - 1];
                    (pred - target[[r, c]]).powi(2)
                })
                .sum();
            opt += 0.5 * resid;
        }
        assert!(outcome.best_loss - opt <= 1e-6 * opt.max(1e-3), "{} vs {}", outcome.best_loss, opt);
    }

    fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            b.swap(c, p);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
            x[r] = (b[r] - s) / a[r][r];
        }
        x
    }

    #[test]
    fn history_is_monotone() {
        let (mut p, feats, target) = linear_setup();
        let loss = |out: &Array2<f64>| {
            let r = out - &target;
            Ok((0.5 * r.mapv(|v| v * v).sum(), r))
        };
        let out = train(&mut p, &feats, &TrainConfig::default(), loss).unwrap();
        for w in out.loss_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(out.loss_history.len(), out.iterations + 1);
    }

    #[test]
    fn zero_iterations_is_identity() {
        let (mut p, feats, target) = linear_setup();
        let before = p.clone();
        let cfg = TrainConfig {
            max_steps: 0,
            ..TrainConfig::default()
        };
        let out = train(&mut p, &feats, &cfg, |o: &Array2<f64>| {
            let r = o - &target;
            Ok((0.5 * r.mapv(|v| v * v).sum(), r))
        })
        .unwrap();
        assert_eq!(p, before);
        assert_eq!(out.loss_history.len(), 1);
    }

    #[test]
    fn random_slopes_are_reproducible() {
        let arch = Architecture {
            hidden_layers: 2,
            neurons: 12,
            rff_features: 8,
            sigma_rff: 2.0,
            sigma_mlp: 0.3,
            ..Architecture::default()
        };
        let (_, feats, target) = linear_setup();
        let cfg = TrainConfig {
            max_iterations: 20,
            max_steps: 2,
            random_slopes: Some(9),
            ..TrainConfig::default()
        };
        let run = || {
            let mut p = init_params(2, &arch, 1).unwrap();
            let out = train(&mut p, &feats, &cfg, |o: &Array2<f64>| {
                let r = o - &target;
                Ok((0.5 * r.mapv(|v| v * v).sum(), r))
            })
            .unwrap();
            (p, out.loss_history)
        };
        let (a, ha) = run();
        let (b, hb) = run();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        assert!(ha.last().unwrap() < &ha[0]);
    }

    #[test]
    fn non_finite_loss_aborts() {
        let (mut p, feats, _) = linear_setup();
        let err = train(&mut p, &feats, &TrainConfig::default(), |o: &Array2<f64>| {
            Ok((f64::NAN, Array2::zeros(o.dim())))
        })
        .unwrap_err();
        assert!(matches!(err, Error::TrainingAborted { .. }));
    }

    #[test]
    fn rejects_bad_config() {
        let (mut p, feats, _) = linear_setup();
        let cfg = TrainConfig {
            learning_rate: -1.0,
            ..TrainConfig::default()
        };
        let r = train(&mut p, &feats, &cfg, |o: &Array2<f64>| Ok((0.0, Array2::zeros(o.dim()))));
        assert!(matches!(r, Err(Error::InvalidTrainConfig(_))));
    }
}
