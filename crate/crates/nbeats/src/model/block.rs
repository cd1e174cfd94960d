//! Block parameters: per-head bias-free input layers, a shared trunk, and
//! per-head coefficient projections feeding the basis expansions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::basis::{fixed_matrix, place_last_columns, BasisKind};
use crate::model::grid::LookbackGrid;
use crate::tensor::{Scalar, Tensor};

/// A weight matrix plus bias vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineParams<T: Scalar> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// Per-head basis realization. Generic bases are learnable; trend and
/// seasonal bases are fixed matrices built once at model construction.
#[derive(Clone, Debug, PartialEq)]
pub enum HeadBasis<T: Scalar> {
    Generic {
        v_f: Tensor<T>,
        b_f: Tensor<T>,
        v_b: Tensor<T>,
        b_b: Tensor<T>,
    },
    Fixed {
        forecast: Tensor<T>,
        backcast: Tensor<T>,
    },
}

/// One building block of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Block<T: Scalar> {
    /// `W` bias-free maps `[L, width]`. No bias, so zero padding in the
    /// input buffer contributes exactly nothing.
    pub input_layers: Vec<Tensor<T>>,
    /// Shared fully connected layers `[width, width]` (+ bias), applied with
    /// ReLU after each. The input layer counts as the first of the block's
    /// FC layers, so this holds `layers - 1` entries.
    pub trunk: Vec<AffineParams<T>>,
    /// Per-head projections `hidden -> dim(theta_f)`.
    pub theta_f: Vec<AffineParams<T>>,
    /// Per-head projections `hidden -> dim(theta_b)`.
    pub theta_b: Vec<AffineParams<T>>,
    /// Per-head basis.
    pub basis: Vec<HeadBasis<T>>,
}

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
fn glorot<T: Scalar>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor<T> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data: Vec<T> = (0..rows * cols)
        .map(|_| T::from_f64(rng.random_range(-a..a)))
        .collect();
    Tensor::from_vec(&[rows, cols], data).unwrap()
}

fn affine_init<T: Scalar>(inp: usize, out: usize, rng: &mut ChaCha8Rng) -> AffineParams<T> {
    AffineParams {
        weight: glorot(inp, out, rng),
        bias: Tensor::zeros(&[out]),
    }
}

impl<T: Scalar> Block<T> {
    /// Initialize one block. Draw order is fixed (input layers, trunk,
    /// theta projections, generic bases) so a seed pins every parameter.
    pub fn init(
        kind: &BasisKind,
        width: usize,
        layers: usize,
        grid: &LookbackGrid,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let l_max = grid.max_lookback();
        let h = grid.horizon();
        let input_layers = (0..grid.heads())
            .map(|_| glorot(l_max, width, rng))
            .collect();
        let trunk = (0..layers.saturating_sub(1))
            .map(|_| affine_init(width, width, rng))
            .collect();
        let dim_f = kind.dim_forecast(h);
        let theta_f = (0..grid.heads())
            .map(|_| affine_init(width, dim_f, rng))
            .collect();
        let theta_b = grid
            .lookbacks()
            .iter()
            .map(|&l| affine_init(width, kind.dim_backcast(l), rng))
            .collect();
        let basis = grid
            .lookbacks()
            .iter()
            .map(|&l| match kind {
                BasisKind::Generic { dim_f, dim_b } => HeadBasis::Generic {
                    v_f: glorot(*dim_f, h, rng),
                    b_f: Tensor::zeros(&[h]),
                    v_b: glorot(*dim_b, l_max, rng),
                    b_b: Tensor::zeros(&[l_max]),
                },
                _ => {
                    let f = fixed_matrix(kind, h).unwrap();
                    let b = place_last_columns(&fixed_matrix(kind, l).unwrap(), l_max);
                    HeadBasis::Fixed {
                        forecast: f,
                        backcast: b,
                    }
                }
            })
            .collect();
        Block {
            input_layers,
            trunk,
            theta_f,
            theta_b,
            basis,
        }
    }

    /// Extract the single-head block for head `w`: input-layer rows for the
    /// `l_w` newest positions, the shared trunk as-is, and the head's own
    /// projections and basis columns.
    pub fn slice_head(&self, w: usize, l: usize, l_max: usize) -> Block<T> {
        let input = self.input_layers[w].slice_axis(0, l_max - l, l).unwrap();
        let basis = match &self.basis[w] {
            HeadBasis::Generic { v_f, b_f, v_b, b_b } => HeadBasis::Generic {
                v_f: v_f.clone(),
                b_f: b_f.clone(),
                v_b: v_b.slice_axis(1, l_max - l, l).unwrap(),
                b_b: b_b.slice_axis(0, l_max - l, l).unwrap(),
            },
            HeadBasis::Fixed { forecast, backcast } => HeadBasis::Fixed {
                forecast: forecast.clone(),
                backcast: backcast.slice_axis(1, l_max - l, l).unwrap(),
            },
        };
        Block {
            input_layers: vec![input],
            trunk: self.trunk.clone(),
            theta_f: vec![self.theta_f[w].clone()],
            theta_b: vec![self.theta_b[w].clone()],
            basis: vec![basis],
        }
    }
}
