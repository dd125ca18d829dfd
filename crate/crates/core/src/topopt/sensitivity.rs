use crate::demsolver::element_strain_energy;
use crate::elasticity::MaterialModel;
use crate::grid::{Grid, QuadratureCache};

/// `∂f/∂ρ_e = −½ p ρ_e^{p−1} ∫σ:ε dV` for compliance `f = ½uᵀKu`.
pub fn compliance_sensitivity(u: &[f64], rho: &[f64], grid: &Grid, quad: &QuadratureCache, mat: &MaterialModel) -> Vec<f64> {
    scaled_energy_derivative(u, rho, grid, quad, mat, -0.5)
}

/// `∂f/∂ρ_e = −(1/A) p ρ_e^{p−1} ∫σ:ε dA` for `f = −G_homo`.
pub fn shear_sensitivity(u: &[f64], rho: &[f64], grid: &Grid, quad: &QuadratureCache, mat: &MaterialModel) -> Vec<f64> {
    scaled_energy_derivative(u, rho, grid, quad, mat, -1.0 / grid.total_volume())
}

fn scaled_energy_derivative(
    u: &[f64],
    rho: &[f64],
    grid: &Grid,
    quad: &QuadratureCache,
    mat: &MaterialModel,
    factor: f64,
) -> Vec<f64> {
    let p = mat.simp_exponent;
    element_strain_energy(u, grid, quad, mat)
        .into_iter()
        .zip(rho)
        .map(|(w, &r)| {
            let dpen = if r == 0.0 && p > 1.0 { 0.0 } else { p * r.powf(p - 1.0) };
            factor * dpen * w
        })
        .collect()
}
