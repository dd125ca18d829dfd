use std::collections::VecDeque;

use crate::Result;

/// Curvature pairs for the two-loop recursion.
#[derive(Debug, Clone)]
pub struct LbfgsMemory {
    capacity: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    h_diag: f64,
}

impl LbfgsMemory {
    pub fn new(capacity: usize) -> Self {
        LbfgsMemory {
            capacity: capacity.max(1),
            pairs: VecDeque::new(),
            h_diag: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
        self.h_diag = 1.0;
    }

    /// Stores `(s, y)` when the curvature condition holds.
    pub fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let ys = dot(&y, &s);
        if ys > 1e-10 {
            if self.pairs.len() == self.capacity {
                self.pairs.pop_front();
            }
            self.h_diag = ys / dot(&y, &y);
            self.pairs.push_back((s, y, 1.0 / ys));
        }
    }

    /// `-H g` with the implicit inverse Hessian.
    pub fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alpha = vec![0.0; self.pairs.len()];
        for (i, (s, y, rho)) in self.pairs.iter().enumerate().rev() {
            alpha[i] = dot(s, &q) * rho;
            axpy(-alpha[i], y, &mut q);
        }
        for v in q.iter_mut() {
            *v *= self.h_diag;
        }
        for (i, (s, y, rho)) in self.pairs.iter().enumerate() {
            let beta = dot(y, &q) * rho;
            axpy(alpha[i] - beta, s, &mut q);
        }
        q
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub step: f64,
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub evaluations: usize,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LS: usize = 25;
const TOLERANCE_CHANGE: f64 = 1e-9;

fn cubic_interpolate(x1: f64, f1: f64, g1: f64, x2: f64, f2: f64, g2: f64, bounds: Option<(f64, f64)>) -> f64 {
    let (lo, hi) = bounds.unwrap_or(if x1 <= x2 { (x1, x2) } else { (x2, x1) });
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2_square = d1 * d1 - g1 * g2;
    if d2_square >= 0.0 {
        let d2 = d2_square.sqrt();
        let min_pos = if x1 <= x2 {
            x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        } else {
            x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        };
        if min_pos.is_finite() {
            return min_pos.max(lo).min(hi);
        }
    }
    0.5 * (lo + hi)
}

struct Sample {
    t: f64,
    f: f64,
    g: Vec<f64>,
    gtd: f64,
}

/// Strong Wolfe line search along `d` from a point with loss `f`, gradient `g`
/// and slope `gtd`. `phi(t)` evaluates loss and gradient at `x + t d`; `first`
/// is its value at the initial step `t`. Non-finite losses count as +∞.
pub fn strong_wolfe<F>(
    phi: &mut F,
    t: f64,
    first: (f64, Vec<f64>),
    d: &[f64],
    f: f64,
    g: &[f64],
    gtd: f64,
) -> Result<LineSearchResult>
where
    F: FnMut(f64) -> Result<(f64, Vec<f64>)>,
{
    let d_norm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sanitize = |v: f64| if v.is_finite() { v } else { f64::INFINITY };
    let mut t = t;
    let mut f_new = sanitize(first.0);
    let mut g_new = first.1;
    let mut evals = 1;
    let mut gtd_new = dot(&g_new, d);
    let mut prev = Sample {
        t: 0.0,
        f,
        g: g.to_vec(),
        gtd,
    };
    let mut done = false;
    let mut ls_iter = 0;
    let mut bracket: Vec<Sample> = Vec::new();

    while ls_iter < MAX_LS {
        if f_new > f + C1 * t * gtd || (ls_iter > 1 && f_new >= prev.f) {
            bracket = vec![prev, Sample { t, f: f_new, g: g_new.clone(), gtd: gtd_new }];
            break;
        }
        if gtd_new.abs() <= -C2 * gtd {
            bracket = vec![Sample { t, f: f_new, g: g_new.clone(), gtd: gtd_new }];
            done = true;
            break;
        }
        if gtd_new >= 0.0 {
            bracket = vec![prev, Sample { t, f: f_new, g: g_new.clone(), gtd: gtd_new }];
            break;
        }
        let min_step = t + 0.01 * (t - prev.t);
        let max_step = t * 10.0;
        let next = cubic_interpolate(prev.t, prev.f, prev.gtd, t, f_new, gtd_new, Some((min_step, max_step)));
        prev = Sample { t, f: f_new, g: g_new, gtd: gtd_new };
        t = next;
        let (fv, gv) = phi(t)?;
        f_new = sanitize(fv);
        g_new = gv;
        evals += 1;
        gtd_new = dot(&g_new, d);
        ls_iter += 1;
    }
    if ls_iter == MAX_LS {
        bracket = vec![
            Sample { t: 0.0, f, g: g.to_vec(), gtd },
            Sample { t, f: f_new, g: g_new, gtd: gtd_new },
        ];
    }

    let order = |b: &[Sample]| if b[0].f <= b[b.len() - 1].f { (0, 1) } else { (1, 0) };
    let (mut low, mut high) = order(&bracket);
    let mut insufficient = false;
    while !done && ls_iter < MAX_LS {
        if (bracket[1].t - bracket[0].t).abs() * d_norm < TOLERANCE_CHANGE {
            break;
        }
        let mut t = cubic_interpolate(
            bracket[0].t,
            bracket[0].f,
            bracket[0].gtd,
            bracket[1].t,
            bracket[1].f,
            bracket[1].gtd,
            None,
        );
        let bmax = bracket[0].t.max(bracket[1].t);
        let bmin = bracket[0].t.min(bracket[1].t);
        let eps = 0.1 * (bmax - bmin);
        if (bmax - t).min(t - bmin) < eps {
            if insufficient || t >= bmax || t <= bmin {
                t = if (t - bmax).abs() < (t - bmin).abs() { bmax - eps } else { bmin + eps };
                insufficient = false;
            } else {
                insufficient = true;
            }
        } else {
            insufficient = false;
        }
        let (fv, gv) = phi(t)?;
        let f_new = sanitize(fv);
        evals += 1;
        let gtd_new = dot(&gv, d);
        ls_iter += 1;
        let sample = Sample { t, f: f_new, g: gv, gtd: gtd_new };
        if f_new > f + C1 * t * gtd || f_new >= bracket[low].f {
            bracket[high] = sample;
            (low, high) = order(&bracket);
        } else {
            if gtd_new.abs() <= -C2 * gtd {
                done = true;
            } else if gtd_new * (bracket[high].t - bracket[low].t) >= 0.0 {
                bracket.swap(low, high);
            }
            bracket[low] = sample;
        }
    }
    let best = bracket.swap_remove(low);
    Ok(LineSearchResult {
        step: best.t,
        loss: best.f,
        gradient: best.g,
        evaluations: evals,
    })
}
