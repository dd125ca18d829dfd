//! Method of moving asymptotes for one linear constraint `aᵀx ≤ b`.
//!
//! The objective is replaced by the usual convex separable approximation
//! `Σ p_j/(U_j − x_j) + q_j/(x_j − L_j)`. The constraint is linear in the
//! design variables, so it enters the subproblem exactly. The subproblem is
//! solved through its one-dimensional dual.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MmaSettings {
    pub asyinit: f64,
    pub asydecr: f64,
    pub asyincr: f64,
    pub move_limit: f64,
    pub albefa: f64,
    pub raa0: f64,
    /// Dual KKT residual target, relative to `b`.
    pub kkt_tol: f64,
}

impl Default for MmaSettings {
    fn default() -> Self {
        MmaSettings {
            asyinit: 0.5,
            asydecr: 0.7,
            asyincr: 1.2,
            move_limit: 0.2,
            albefa: 0.1,
            raa0: 1e-5,
            kkt_tol: 1e-9,
        }
    }
}

/// Previous iterates and asymptotes.
#[derive(Debug, Clone)]
pub struct MmaState {
    pub settings: MmaSettings,
    iteration: usize,
    xmin: f64,
    xmax: f64,
    xold1: Vec<f64>,
    xold2: Vec<f64>,
    low: Vec<f64>,
    upp: Vec<f64>,
}

impl MmaState {
    pub fn new(n: usize, settings: MmaSettings) -> Self {
        MmaState {
            settings,
            iteration: 0,
            xmin: 0.0,
            xmax: 1.0,
            xold1: vec![0.0; n],
            xold2: vec![0.0; n],
            low: vec![0.0; n],
            upp: vec![1.0; n],
        }
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn asymptotes(&self) -> (&[f64], &[f64]) {
        (&self.low, &self.upp)
    }
}

/// Objective terms of one variable in the subproblem.
struct Term {
    p: f64,
    q: f64,
    low: f64,
    upp: f64,
    alpha: f64,
    beta: f64,
    a: f64,
}

impl Term {
    fn slope(&self, x: f64, lambda: f64) -> f64 {
        self.p / (self.upp - x).powi(2) - self.q / (x - self.low).powi(2) + lambda * self.a
    }

    /// Minimizer of the convex term plus `λ a x` over `[alpha, beta]`.
    fn argmin(&self, lambda: f64) -> f64 {
        if self.slope(self.alpha, lambda) >= 0.0 {
            return self.alpha;
        }
        if self.slope(self.beta, lambda) <= 0.0 {
            return self.beta;
        }
        let (mut lo, mut hi) = (self.alpha, self.beta);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.slope(mid, lambda) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// One MMA step for `min f(x)` s.t. `aᵀx ≤ b`, `0 ≤ x ≤ 1`, given the
/// objective gradient `df` at `x`.
pub fn mma_update(state: &mut MmaState, x: &[f64], df: &[f64], a: &[f64], b: f64) -> Result<Vec<f64>> {
    let n = x.len();
    if df.len() != n || a.len() != n || state.low.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: df.len().min(a.len()).min(state.low.len()),
        });
    }
    if df.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design or gradient".into()));
    }
    let s = state.settings.clone();
    let range = state.xmax - state.xmin;
    state.iteration += 1;
    if state.iteration <= 2 {
        for j in 0..n {
            state.low[j] = x[j] - s.asyinit * range;
            state.upp[j] = x[j] + s.asyinit * range;
        }
    } else {
        for j in 0..n {
            let zzz = (x[j] - state.xold1[j]) * (state.xold1[j] - state.xold2[j]);
            let factor = if zzz > 0.0 {
                s.asyincr
            } else if zzz < 0.0 {
                s.asydecr
            } else {
                1.0
            };
            let low = x[j] - factor * (state.xold1[j] - state.low[j]);
            let upp = x[j] + factor * (state.upp[j] - state.xold1[j]);
            state.low[j] = low.clamp(x[j] - 10.0 * range, x[j] - 0.01 * range);
            state.upp[j] = upp.clamp(x[j] + 0.01 * range, x[j] + 10.0 * range);
        }
    }

    let xmami = range.max(1e-5);
    let terms: Vec<Term> = (0..n)
        .map(|j| {
            let (low, upp) = (state.low[j], state.upp[j]);
            let alpha = (low + s.albefa * (x[j] - low)).max(x[j] - s.move_limit * range).max(state.xmin);
            let beta = (upp - s.albefa * (upp - x[j])).min(x[j] + s.move_limit * range).min(state.xmax);
            let (pos, neg) = (df[j].max(0.0), (-df[j]).max(0.0));
            let p = (1.001 * pos + 0.001 * neg + s.raa0 / xmami) * (upp - x[j]).powi(2);
            let q = (0.001 * pos + 1.001 * neg + s.raa0 / xmami) * (x[j] - low).powi(2);
            Term { p, q, low, upp, alpha, beta, a: a[j] }
        })
        .collect();

    let volume = |lambda: f64| -> (Vec<f64>, f64) {
        let xs: Vec<f64> = terms.iter().map(|t| t.argmin(lambda)).collect();
        let v = xs.iter().zip(a).map(|(x, a)| x * a).sum();
        (xs, v)
    };
    let least: f64 = terms.iter().map(|t| if t.a >= 0.0 { t.a * t.alpha } else { t.a * t.beta }).sum();
    let tol = s.kkt_tol * b.abs().max(1e-300);
    if least > b + tol {
        return Err(Error::Infeasible(format!(
            "smallest constraint value {least} within the move limits exceeds {b}"
        )));
    }

    let (mut xs, v0) = volume(0.0);
    if v0 > b {
        let mut hi = 1.0;
        let mut v_hi = volume(hi).1;
        let mut grow = 0;
        while v_hi > b {
            hi *= 10.0;
            v_hi = volume(hi).1;
            grow += 1;
            if grow > 400 {
                return Err(Error::Infeasible("dual bracket did not close".into()));
            }
        }
        let mut lo = 0.0;
        let mut best = volume(hi).0;
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            let (xm, vm) = volume(mid);
            if vm > b {
                lo = mid;
            } else {
                hi = mid;
                best = xm;
                if b - vm <= tol {
                    break;
                }
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        xs = best;
    }

    state.xold2 = std::mem::replace(&mut state.xold1, x.to_vec());
    Ok(xs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_with_mean_constraint() {
        let n = 50;
        let mut x: Vec<f64> = (0..n).map(|j| 0.1 + 0.3 * (j as f64 / n as f64)).collect();
        let a = vec![1.0 / n as f64; n];
        let mut st = MmaState::new(n, MmaSettings::default());
        for _ in 0..60 {
            let df: Vec<f64> = x.iter().map(|v| 2.0 * (v - 0.5)).collect();
            x = mma_update(&mut st, &x, &df, &a, 0.4).unwrap();
        }
        let mean = x.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.4).abs() < 1e-8);
        assert!(x.iter().all(|v| (v - 0.4).abs() < 1e-4), "{x:?}");
    }

    #[test]
    fn zero_gradient_stays_feasible() {
        let n = 10;
        let x = vec![0.3; n];
        let a = vec![0.1; n];
        let mut st = MmaState::new(n, MmaSettings::default());
        let y = mma_update(&mut st, &x, &vec![0.0; n], &a, 0.4).unwrap();
        let v: f64 = y.iter().map(|v| v * 0.1).sum();
        assert!(v <= 0.4 + 1e-3);
        assert!(y.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn adversarial_gradients_respect_bounds() {
        let n = 20;
        let mut x = vec![0.5; n];
        let a = vec![1.0 / n as f64; n];
        let mut st = MmaState::new(n, MmaSettings::default());
        for k in 0..15 {
            let df: Vec<f64> = (0..n).map(|j| if (j + k) % 2 == 0 { 1e6 } else { -1e6 }).collect();
            x = mma_update(&mut st, &x, &df, &a, 0.5).unwrap();
            assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
            let mean = x.iter().sum::<f64>() / n as f64;
            assert!(mean <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn infeasible_constraint() {
        let x = vec![0.9; 4];
        let mut st = MmaState::new(4, MmaSettings::default());
        let r = mma_update(&mut st, &x, &[0.0; 4], &[1.0; 4], 0.1);
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }
}
