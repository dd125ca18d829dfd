use crate::femsolver::CsrMatrix;
use crate::grid::Grid;
use crate::{Error, Result};

/// Row-normalized density filter `ρ = W ξ` with cone weights
/// `q_ij = max(0, r_min − ‖c_i − c_j‖)` on element centers.
#[derive(Debug, Clone)]
pub struct FilterMatrix {
    weights: CsrMatrix,
    r_min: f64,
}

pub fn build_filter(grid: &Grid, r_min: f64) -> Result<FilterMatrix> {
    FilterMatrix::new(grid, r_min)
}

impl FilterMatrix {
    pub fn new(grid: &Grid, r_min: f64) -> Result<Self> {
        if !(r_min > 0.0) || !r_min.is_finite() {
            return Err(Error::InvalidConfig(format!("filter radius {r_min}")));
        }
        let d = grid.dim();
        let ec = grid.element_counts();
        let reach: Vec<usize> = (0..d).map(|a| (r_min / grid.spacing(a)).ceil() as usize).collect();
        let ne = grid.element_count();
        let mut rows = Vec::with_capacity(ne);
        for e in 0..ne {
            let ijk = grid.element_ijk(e);
            let c = grid.element_center(e);
            let lo: Vec<usize> = (0..d).map(|a| ijk[a].saturating_sub(reach[a])).collect();
            let hi: Vec<usize> = (0..d).map(|a| (ijk[a] + reach[a]).min(ec[a] - 1)).collect();
            let (k0, k1) = if d == 3 { (lo[2], hi[2]) } else { (0, 0) };
            let mut row = Vec::new();
            for k in k0..=k1 {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let f = i + ec[0] * (j + ec[1] * k);
                        let cf = grid.element_center(f);
                        let dist = (0..d).map(|a| (c[a] - cf[a]).powi(2)).sum::<f64>().sqrt();
                        let w = r_min - dist;
                        if w > 0.0 {
                            row.push((f, w));
                        }
                    }
                }
            }
            let total: f64 = row.iter().map(|(_, w)| w).sum();
            for (_, w) in row.iter_mut() {
                *w /= total;
            }
            rows.push(row);
        }
        Ok(FilterMatrix {
            weights: CsrMatrix::from_rows(ne, rows),
            r_min,
        })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `W ξ`
    pub fn apply(&self, xi: &[f64]) -> Vec<f64> {
        self.weights.mul_vec(xi)
    }

    /// `Wᵀ g`
    pub fn apply_transpose(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, gi) in g.iter().enumerate() {
            for (j, w) in self.weights.row(i) {
                out[j] += w * gi;
            }
        }
        out
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.apply_transpose(&vec![1.0; self.len()])
    }
}

/// `∂f/∂ξ = Wᵀ ∂f/∂ρ`
pub fn chain_rule_filter(dfdrho: &[f64], filter: &FilterMatrix) -> Result<Vec<f64>> {
    if dfdrho.len() != filter.len() {
        return Err(Error::ShapeMismatch {
            expected: filter.len(),
            got: dfdrho.len(),
        });
    }
    Ok(filter.apply_transpose(dfdrho))
}
