//! Coordinate network for the displacement field.
//!
//! Node coordinates, normalized to the unit box, are lifted by a frozen random
//! Fourier feature map `[cos(2πBx), sin(2πBx)]` and passed through a fully
//! connected network with RReLU activations and a linear output layer of
//! width `dim`.

mod checkpoint;
mod lbfgs;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_HEADER};
pub use lbfgs::{strong_wolfe, LbfgsMemory, LineSearchResult};
pub use train::{train, StopReason, TrainConfig, TrainOutcome};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::Grid;
use crate::{Error, Result};

/// Network hyperparameters. The default is the 5 × 68 RReLU network with
/// σ_MLP = 0.0622 and σ_RFF = 0.1192.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub hidden_layers: usize,
    pub neurons: usize,
    /// Rows of the projection matrix; the feature width is twice this.
    pub rff_features: usize,
    pub sigma_mlp: f64,
    pub sigma_rff: f64,
    /// Negative-slope interval of the randomized leaky ReLU.
    pub slope_range: (f64, f64),
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            hidden_layers: 5,
            neurons: 68,
            rff_features: 128,
            sigma_mlp: 0.0622,
            sigma_rff: 0.1192,
            slope_range: (1.0 / 8.0, 1.0 / 3.0),
        }
    }
}

impl Architecture {
    fn validate(&self) -> Result<()> {
        if self.rff_features == 0 {
            return Err(Error::InvalidArchitecture("rff_features must be positive".into()));
        }
        if self.hidden_layers > 0 && self.neurons == 0 {
            return Err(Error::InvalidArchitecture("hidden layers need at least one neuron".into()));
        }
        if !(self.sigma_mlp > 0.0) || !(self.sigma_rff > 0.0) {
            return Err(Error::InvalidArchitecture("standard deviations must be positive".into()));
        }
        let (lo, hi) = self.slope_range;
        if !(0.0 <= lo && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidArchitecture(format!("bad slope range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// How RReLU picks its negative slope.
#[derive(Debug, Clone)]
pub enum SlopeSampler {
    /// Midpoint of the slope interval, always.
    Midpoint,
    /// A fresh uniform slope per unit and node on every forward pass.
    Random(ChaCha8Rng),
}

impl SlopeSampler {
    pub fn random(seed: u64) -> Self {
        SlopeSampler::Random(ChaCha8Rng::seed_from_u64(seed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    dim: usize,
    seed: u64,
    rff: Array2<f64>,
    /// (out, in) per layer, hidden layers first, output layer last.
    shapes: Vec<(usize, usize)>,
    theta: Vec<f64>,
    slope_range: (f64, f64),
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pre: Vec<Array2<f64>>,
    slopes: Option<Vec<Array2<f64>>>,
    fixed_slope: f64,
    pub output: Array2<f64>,
}

pub fn init_params(dim: usize, arch: &Architecture, seed: u64) -> Result<NetworkParams> {
    NetworkParams::init(dim, arch, seed)
}

impl NetworkParams {
    pub fn init(dim: usize, arch: &Architecture, seed: u64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidArchitecture(format!("spatial dimension {dim}")));
        }
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rff_dist = Normal::new(0.0, arch.sigma_rff).expect("positive std");
        let rff = Array2::from_shape_fn((arch.rff_features, dim), |_| rff_dist.sample(&mut rng));

        let mut shapes = Vec::with_capacity(arch.hidden_layers + 1);
        let mut width = 2 * arch.rff_features;
        for _ in 0..arch.hidden_layers {
            shapes.push((arch.neurons, width));
            width = arch.neurons;
        }
        shapes.push((dim, width));

        let w_dist = Normal::new(0.0, arch.sigma_mlp).expect("positive std");
        let mut theta = Vec::with_capacity(shapes.iter().map(|(o, i)| o * i + o).sum());
        for &(out, inp) in &shapes {
            theta.extend((0..out * inp).map(|_| w_dist.sample(&mut rng)));
            theta.extend(std::iter::repeat(0.0).take(out));
        }
        Ok(NetworkParams {
            dim,
            seed,
            rff,
            shapes,
            theta,
            slope_range: arch.slope_range,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rff_matrix(&self) -> &Array2<f64> {
        &self.rff
    }

    pub fn layer_shapes(&self) -> &[(usize, usize)] {
        &self.shapes
    }

    pub fn slope_range(&self) -> (f64, f64) {
        self.slope_range
    }

    pub fn midpoint_slope(&self) -> f64 {
        0.5 * (self.slope_range.0 + self.slope_range.1)
    }

    /// Trainable parameters, layer by layer: weights (row-major, out × in) then biases.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::ShapeMismatch {
                expected: self.theta.len(),
                got: theta.len(),
            });
        }
        self.theta.copy_from_slice(theta);
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.theta.len()
    }

    fn layer_offset(&self, l: usize) -> usize {
        self.shapes[..l].iter().map(|(o, i)| o * i + o).sum()
    }

    pub fn layer(&self, l: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        layer_views(&self.theta, &self.shapes, self.layer_offset(l), l)
    }

    /// Mutable weights and bias of layer `l`.
    pub fn layer_mut(&mut self, l: usize) -> (ndarray::ArrayViewMut2<'_, f64>, ndarray::ArrayViewMut1<'_, f64>) {
        let off = self.layer_offset(l);
        let (out, inp) = self.shapes[l];
        let (w, rest) = self.theta[off..].split_at_mut(out * inp);
        (
            ndarray::ArrayViewMut2::from_shape((out, inp), w).expect("layer shape"),
            ndarray::ArrayViewMut1::from(&mut rest[..out]),
        )
    }

    /// `[cos(2πBx), sin(2πBx)]` for each row `x` of `normalized` (coordinates in the unit box).
    pub fn rff_map(&self, normalized: ArrayView2<'_, f64>) -> Array2<f64> {
        rff_features(&self.rff, normalized)
    }

    pub fn forward(&self, features: &Array2<f64>, sampler: &mut SlopeSampler) -> ForwardPass {
        let n = features.nrows();
        let hidden = self.shapes.len() - 1;
        let mid = self.midpoint_slope();
        let (lo, hi) = self.slope_range;
        let mut pre = Vec::with_capacity(hidden);
        let mut slopes = match sampler {
            SlopeSampler::Midpoint => None,
            SlopeSampler::Random(_) => Some(Vec::with_capacity(hidden)),
        };
        let mut h: Array2<f64> = features.clone();
        let mut off = 0;
        for l in 0..=hidden {
            let (w, b) = layer_views(&self.theta, &self.shapes, off, l);
            off += w.len() + b.len();
            let mut z = h.dot(&w.t());
            z += &b;
            if l == hidden {
                return ForwardPass {
                    pre,
                    slopes,
                    fixed_slope: mid,
                    output: z,
                };
            }
            let mut a = z.clone();
            match sampler {
                SlopeSampler::Midpoint => a.mapv_inplace(|v| if v >= 0.0 { v } else { mid * v }),
                SlopeSampler::Random(rng) => {
                    let s = Array2::from_shape_fn((n, z.ncols()), |_| rng.random_range(lo..=hi));
                    a.zip_mut_with(&s, |v, &sl| {
                        if *v < 0.0 {
                            *v *= sl
                        }
                    });
                    slopes.as_mut().unwrap().push(s);
                }
            }
            pre.push(z);
            h = a;
        }
        unreachable!()
    }

    /// Convenience: normalized coordinates → features → deterministic output.
    pub fn evaluate(&self, normalized: ArrayView2<'_, f64>) -> Array2<f64> {
        self.forward(&self.rff_map(normalized), &mut SlopeSampler::Midpoint).output
    }

    /// Gradient of a scalar loss with respect to `theta`, given `dL/d(output)`.
    /// The projection matrix is not trained.
    pub fn backward(&self, features: &Array2<f64>, pass: &ForwardPass, d_output: &Array2<f64>) -> Result<Vec<f64>> {
        if d_output.dim() != pass.output.dim() {
            return Err(Error::ShapeMismatch {
                expected: pass.output.len(),
                got: d_output.len(),
            });
        }
        let hidden = self.shapes.len() - 1;
        let mut grad = vec![0.0; self.theta.len()];
        let mut g = d_output.clone();
        for l in (0..=hidden).rev() {
            let off = self.layer_offset(l);
            let (out, inp) = self.shapes[l];
            let input = if l == 0 {
                features.clone()
            } else {
                self.activate(pass, l - 1)
            };
            {
                let (gw, gb) = grad[off..off + out * inp + out].split_at_mut(out * inp);
                let mut gw = ndarray::ArrayViewMut2::from_shape((out, inp), gw).expect("layer shape");
                ndarray::linalg::general_mat_mul(1.0, &g.t(), &input, 0.0, &mut gw);
                for (dst, src) in gb.iter_mut().zip(g.sum_axis(Axis(0)).iter()) {
                    *dst = *src;
                }
            }
            if l == 0 {
                break;
            }
            let (w, _) = layer_views(&self.theta, &self.shapes, off, l);
            let mut prev = g.dot(&w);
            let z = &pass.pre[l - 1];
            match &pass.slopes {
                None => {
                    let s = pass.fixed_slope;
                    ndarray::Zip::from(&mut prev).and(z).for_each(|p, &zv| {
                        if zv < 0.0 {
                            *p *= s
                        }
                    });
                }
                Some(slopes) => {
                    ndarray::Zip::from(&mut prev)
                        .and(z)
                        .and(&slopes[l - 1])
                        .for_each(|p, &zv, &s| {
                            if zv < 0.0 {
                                *p *= s
                            }
                        });
                }
            }
            g = prev;
        }
        Ok(grad)
    }

    fn activate(&self, pass: &ForwardPass, l: usize) -> Array2<f64> {
        let z = &pass.pre[l];
        match &pass.slopes {
            None => {
                let s = pass.fixed_slope;
                z.mapv(|v| if v >= 0.0 { v } else { s * v })
            }
            Some(slopes) => {
                let mut a = z.clone();
                a.zip_mut_with(&slopes[l], |v, &s| {
                    if *v < 0.0 {
                        *v *= s
                    }
                });
                a
            }
        }
    }

    pub(crate) fn from_parts(
        dim: usize,
        seed: u64,
        rff: Array2<f64>,
        shapes: Vec<(usize, usize)>,
        theta: Vec<f64>,
        slope_range: (f64, f64),
    ) -> Result<Self> {
        let expected: usize = shapes.iter().map(|(o, i)| o * i + o).sum();
        if theta.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: theta.len(),
            });
        }
        let mut width = 2 * rff.nrows();
        for &(out, inp) in &shapes {
            if inp != width {
                return Err(Error::InvalidArchitecture(format!(
                    "layer input {inp} does not match previous width {width}"
                )));
            }
            width = out;
        }
        if width != dim || rff.ncols() != dim {
            return Err(Error::InvalidArchitecture("output width must equal the spatial dimension".into()));
        }
        Ok(NetworkParams {
            dim,
            seed,
            rff,
            shapes,
            theta,
            slope_range,
        })
    }
}

fn layer_views<'a>(
    theta: &'a [f64],
    shapes: &[(usize, usize)],
    off: usize,
    l: usize,
) -> (ArrayView2<'a, f64>, ArrayView1<'a, f64>) {
    let (out, inp) = shapes[l];
    let w = ArrayView2::from_shape((out, inp), &theta[off..off + out * inp]).expect("layer shape");
    let b = ArrayView1::from(&theta[off + out * inp..off + out * inp + out]);
    (w, b)
}

pub fn rff_features(b: &Array2<f64>, normalized: ArrayView2<'_, f64>) -> Array2<f64> {
    let m = b.nrows();
    let proj = normalized.dot(&b.t()) * (2.0 * std::f64::consts::PI);
    let mut out = Array2::zeros((normalized.nrows(), 2 * m));
    for (i, row) in proj.outer_iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let (s, c) = v.sin_cos();
            out[[i, j]] = c;
            out[[i, m + j]] = s;
        }
    }
    out
}

/// Node coordinates mapped to the unit box, one row per node.
pub fn normalized_coordinates(grid: &Grid) -> Array2<f64> {
    let d = grid.dim();
    let ext = grid.extents();
    Array2::from_shape_fn((grid.node_count(), d), |(n, a)| grid.node(n)[a] / ext[a])
}

/// Sum of the network outputs' squared norm; handy for tests.
pub fn output_norm(out: &Array2<f64>) -> f64 {
    out.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[doc(hidden)]
pub fn bias_gradient_view(params: &NetworkParams, grad: &[f64], l: usize) -> Array1<f64> {
    let off = params.layer_offset(l);
    let (out, inp) = params.shapes[l];
    Array1::from(grad[off + out * inp..off + out * inp + out].to_vec())
}
