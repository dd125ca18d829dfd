//! Small-strain kinematics and isotropic linear elasticity with SIMP scaling.
//!
//! Tensors are stored as full symmetric matrices (no Voigt engineering shear),
//! so `σ:ε` is a plain double contraction.

use crate::{Error, Result};

/// Displacement gradient, `grad[i][j] = ∂u_i/∂x_j`.
pub type Gradient = [[f64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    PlaneStress2d,
    Full3d,
}

impl Mode {
    pub fn dim(self) -> usize {
        match self {
            Mode::PlaneStress2d => 2,
            Mode::Full3d => 3,
        }
    }

    pub fn for_dim(dim: usize) -> Mode {
        if dim == 2 {
            Mode::PlaneStress2d
        } else {
            Mode::Full3d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialModel {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub simp_exponent: f64,
    pub mode: Mode,
}

impl MaterialModel {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64, simp_exponent: f64, mode: Mode) -> Result<Self> {
        if !(youngs_modulus > 0.0) || !youngs_modulus.is_finite() {
            return Err(Error::InvalidMaterial(format!(
                "Young's modulus must be positive, got {youngs_modulus}"
            )));
        }
        if !(0.0..0.5).contains(&poisson_ratio) {
            return Err(Error::InvalidMaterial(format!(
                "Poisson ratio must lie in [0, 0.5), got {poisson_ratio}"
            )));
        }
        if !(simp_exponent >= 1.0) {
            return Err(Error::InvalidMaterial(format!(
                "SIMP exponent must be at least 1, got {simp_exponent}"
            )));
        }
        Ok(MaterialModel {
            youngs_modulus,
            poisson_ratio,
            simp_exponent,
            mode,
        })
    }

    /// E = 200 MPa, ν = 0.3, p = 3.
    pub fn standard(mode: Mode) -> Self {
        MaterialModel {
            youngs_modulus: 200.0,
            poisson_ratio: 0.3,
            simp_exponent: 3.0,
            mode,
        }
    }

    pub fn dim(&self) -> usize {
        self.mode.dim()
    }

    pub fn shear_modulus(&self) -> f64 {
        self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    pub fn bulk_modulus(&self) -> f64 {
        self.youngs_modulus / (3.0 * (1.0 - 2.0 * self.poisson_ratio))
    }

    /// SIMP stiffness factor ρᵖ.
    pub fn penalize(&self, rho: f64) -> f64 {
        rho.powf(self.simp_exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor {
    dim: usize,
    m: [[f64; 3]; 3],
}

impl SymTensor {
    pub fn zero(dim: usize) -> Self {
        SymTensor { dim, m: [[0.0; 3]; 3] }
    }

    /// Builds a tensor from its upper triangle; the lower triangle is mirrored.
    pub fn from_upper(dim: usize, upper: &[[f64; 3]; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for i in 0..dim {
            for j in i..dim {
                m[i][j] = upper[i][j];
                m[j][i] = upper[i][j];
            }
        }
        SymTensor { dim, m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn as_array(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.m[i][i]).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    pub fn add(&self, other: &SymTensor) -> Self {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] += other.m[i][j];
            }
        }
        out
    }

    pub fn double_contract(&self, other: &SymTensor) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.m[i][j] * other.m[i][j];
            }
        }
        s
    }

    pub fn is_symmetric(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| self.m[i][j] == self.m[j][i]))
    }
}

/// ε = ½(∇u + ∇uᵀ).
pub fn strain_from_gradient(grad: &Gradient, dim: usize) -> SymTensor {
    let mut m = [[0.0; 3]; 3];
    for i in 0..dim {
        m[i][i] = grad[i][i];
        for j in (i + 1)..dim {
            let v = 0.5 * (grad[i][j] + grad[j][i]);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    SymTensor { dim, m }
}

/// Isotropic linear-elastic stress. Plane-stress mode uses the reduced 2D law
/// with factor E/(1−ν²); full 3D mode uses the Lamé form.
pub fn stress(strain: &SymTensor, mat: &MaterialModel) -> SymTensor {
    let e = mat.youngs_modulus;
    let nu = mat.poisson_ratio;
    let two_g = e / (1.0 + nu);
    let mut m = [[0.0; 3]; 3];
    match mat.mode {
        Mode::PlaneStress2d => {
            debug_assert_eq!(strain.dim, 2);
            let c = e / (1.0 - nu * nu);
            let (exx, eyy, exy) = (strain.m[0][0], strain.m[1][1], strain.m[0][1]);
            m[0][0] = c * (exx + nu * eyy);
            m[1][1] = c * (eyy + nu * exx);
            m[0][1] = two_g * exy;
            m[1][0] = m[0][1];
        }
        Mode::Full3d => {
            debug_assert_eq!(strain.dim, 3);
            let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
            let tr = strain.trace();
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] = two_g * strain.m[i][j];
                }
                m[i][i] += lambda * tr;
            }
        }
    }
    SymTensor { dim: strain.dim, m }
}

/// σ* = ρᵖ σ.
pub fn simp_stress(stress: &SymTensor, rho: f64, p: f64) -> Result<SymTensor> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::DensityOutOfRange(rho));
    }
    Ok(stress.scaled(rho.powf(p)))
}

/// ½ σ:ε.
pub fn energy_density(stress: &SymTensor, strain: &SymTensor) -> f64 {
    0.5 * stress.double_contract(strain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grad2(g: [[f64; 2]; 2]) -> Gradient {
        let mut out = [[0.0; 3]; 3];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = g[i][j];
            }
        }
        out
    }

    #[test]
    fn strain_examples() {
        let z = strain_from_gradient(&[[0.0; 3]; 3], 2);
        assert_eq!(z, SymTensor::zero(2));
        let e = strain_from_gradient(&grad2([[1.0, 0.0], [0.0, 0.0]]), 2);
        assert_eq!(e.get(0, 0), 1.0);
        assert_eq!(e.get(0, 1), 0.0);
        let gamma = 0.37;
        let e = strain_from_gradient(&grad2([[0.0, gamma], [0.0, 0.0]]), 2);
        assert_eq!(e.get(0, 1), gamma / 2.0);
        assert_eq!(e.get(1, 0), gamma / 2.0);
        assert!(e.is_symmetric());
    }

    #[test]
    fn pure_shear_stress_and_energy() {
        for mode in [Mode::PlaneStress2d, Mode::Full3d] {
            let mat = MaterialModel::new(200.0, 0.3, 3.0, mode).unwrap();
            let d = mode.dim();
            let mut up = [[0.0; 3]; 3];
            up[0][1] = 0.01;
            let eps = SymTensor::from_upper(d, &up);
            let sig = stress(&eps, &mat);
            assert_relative_eq!(mat.shear_modulus(), 76.923_076_923_076_93, max_relative = 1e-12);
            assert_relative_eq!(sig.get(0, 1), 2.0 * mat.shear_modulus() * 0.01, max_relative = 1e-12);
            assert_relative_eq!(sig.get(0, 1), 1.538_461_538_461_538_5, max_relative = 1e-12);
            let w = energy_density(&sig, &eps);
            assert_relative_eq!(w, 2.0 * mat.shear_modulus() * 1e-4, max_relative = 1e-12);
            assert_relative_eq!(w, 1.538_461_538_461_538_5e-2, max_relative = 1e-12);
        }
    }

    #[test]
    fn plane_stress_uniaxial_modulus() {
        // lateral strain -ν εxx leaves σyy = 0 and σxx = E εxx
        let mat = MaterialModel::standard(Mode::PlaneStress2d);
        let exx = 1e-3;
        let mut up = [[0.0; 3]; 3];
        up[0][0] = exx;
        up[1][1] = -mat.poisson_ratio * exx;
        let sig = stress(&SymTensor::from_upper(2, &up), &mat);
        assert!(sig.get(1, 1).abs() < 1e-14);
        assert_relative_eq!(sig.get(0, 0) / exx, mat.youngs_modulus, max_relative = 1e-12);
    }

    #[test]
    fn hydrostatic_3d() {
        let mat = MaterialModel::standard(Mode::Full3d);
        let e = 2e-3;
        let mut up = [[0.0; 3]; 3];
        for i in 0..3 {
            up[i][i] = e;
        }
        let sig = stress(&SymTensor::from_upper(3, &up), &mat);
        for i in 0..3 {
            assert_relative_eq!(sig.get(i, i), mat.bulk_modulus() * 3.0 * e, max_relative = 1e-12);
            for j in 0..3 {
                if i != j {
                    assert_eq!(sig.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn simp_scaling() {
        let mat = MaterialModel::standard(Mode::PlaneStress2d);
        let mut up = [[0.0; 3]; 3];
        up[0][0] = 0.02;
        up[0][1] = -0.01;
        up[1][1] = 0.005;
        let eps = SymTensor::from_upper(2, &up);
        let sig = stress(&eps, &mat);
        assert_eq!(simp_stress(&sig, 1.0, 3.0).unwrap(), sig);
        assert_eq!(simp_stress(&sig, 0.5, 3.0).unwrap(), sig.scaled(0.125));
        assert_eq!(simp_stress(&sig, 0.0, 3.0).unwrap(), SymTensor::zero(2));
        assert!(matches!(simp_stress(&sig, 1.5, 3.0), Err(Error::DensityOutOfRange(_))));
        assert!(simp_stress(&sig, -0.1, 3.0).is_err());
        let full = energy_density(&sig, &eps);
        let pen = energy_density(&simp_stress(&sig, 0.5, 3.0).unwrap(), &eps);
        assert_eq!(pen, 0.125 * full);
        assert_eq!(energy_density(&SymTensor::zero(2), &SymTensor::zero(2)), 0.0);
    }

    #[test]
    fn material_validation() {
        assert!(MaterialModel::new(0.0, 0.3, 3.0, Mode::Full3d).is_err());
        assert!(MaterialModel::new(200.0, 0.5, 3.0, Mode::Full3d).is_err());
        assert!(MaterialModel::new(200.0, -0.1, 3.0, Mode::Full3d).is_err());
        assert!(MaterialModel::new(200.0, 0.3, 0.5, Mode::Full3d).is_err());
        assert!(MaterialModel::new(200.0, 0.0, 1.0, Mode::Full3d).is_ok());
    }

    fn strain_strategy(dim: usize) -> impl Strategy<Value = SymTensor> {
        proptest::collection::vec(-1.0f64..1.0, 6).prop_map(move |v| {
            let up = [[v[0], v[1], v[2]], [0.0, v[3], v[4]], [0.0, 0.0, v[5]]];
            SymTensor::from_upper(dim, &up)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn energy_is_nonnegative(eps in strain_strategy(3), eps2 in strain_strategy(2), nu in 0.0f64..0.499) {
            let m3 = MaterialModel::new(200.0, nu, 3.0, Mode::Full3d).unwrap();
            prop_assert!(energy_density(&stress(&eps, &m3), &eps) >= 0.0);
            let m2 = MaterialModel::new(200.0, nu, 3.0, Mode::PlaneStress2d).unwrap();
            prop_assert!(energy_density(&stress(&eps2, &m2), &eps2) >= 0.0);
        }

        #[test]
        fn stress_is_linear(e1 in strain_strategy(3), e2 in strain_strategy(3), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mat = MaterialModel::standard(Mode::Full3d);
            let lhs = stress(&e1.scaled(a).add(&e2.scaled(b)), &mat);
            let rhs = stress(&e1, &mat).scaled(a).add(&stress(&e2, &mat).scaled(b));
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((lhs.get(i, j) - rhs.get(i, j)).abs() <= 1e-12 * (1.0 + lhs.get(i, j).abs()));
                }
            }
        }
    }
}
