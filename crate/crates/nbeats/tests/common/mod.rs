//! Shared helpers for the integration suites: random model generation, an
//! independent plain-loop forward oracle, and finite-difference machinery.

#![allow(dead_code)]

pub mod oracle;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nbeats::model::{
    build_model, AffineParams, BasisKind, HeadBasis, LookbackGrid, ModelConfig, ParallelModel,
    StackConfig,
};
use nbeats::tensor::tape::{Tape, Var};
use nbeats::tensor::{Scalar, Tensor};

/// A random small model config mixing basis kinds.
pub fn random_config(rng: &mut ChaCha8Rng, max_blocks: usize) -> ModelConfig {
    let n_stacks = rng.random_range(1..=3usize);
    let mut total_blocks = 0;
    let stacks = (0..n_stacks)
        .map(|_| {
            let blocks = rng.random_range(1..=max_blocks.div_ceil(n_stacks)).max(1);
            total_blocks += blocks;
            let basis = match rng.random_range(0..3) {
                0 => BasisKind::Generic {
                    dim_f: rng.random_range(2..=6),
                    dim_b: rng.random_range(2..=6),
                },
                1 => BasisKind::Trend {
                    degree: rng.random_range(0..=3),
                },
                _ => BasisKind::Seasonal,
            };
            StackConfig {
                basis,
                width: rng.random_range(4..=16),
                blocks,
                layers: rng.random_range(2..=4),
                shared: rng.random_range(0..2) == 0,
            }
        })
        .collect();
    ModelConfig { stacks }
}

/// Random histories long enough for the grid.
pub fn random_histories(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..len).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect()
}

/// Run a model on embedded histories and return per-head forecasts.
pub fn run_model<T: Scalar>(model: &ParallelModel<T>, histories: &[&[f64]]) -> Vec<Tensor<T>> {
    let (heads, _) = nbeats::model::embed_windows::<T>(histories, model.grid()).unwrap();
    model.forward_values(&heads).unwrap()
}

// ---------------------------------------------------------------------------
// Independent classic forward pass (plain loops, no tape, no masking): a
// standard single-lookback network evaluated exactly as the equations read.
// ---------------------------------------------------------------------------

fn mat_vec(w: &Tensor<f64>, x: &[f64]) -> Vec<f64> {
    // w: [in, out], x: [in] -> out
    let (i, o) = (w.rows(), w.cols());
    assert_eq!(x.len(), i);
    let mut out = vec![0.0; o];
    for r in 0..i {
        for c in 0..o {
            out[c] += x[r] * w.at2(r, c);
        }
    }
    out
}

fn affine_vec(p: &AffineParams<f64>, x: &[f64]) -> Vec<f64> {
    let mut out = mat_vec(&p.weight, x);
    for (v, b) in out.iter_mut().zip(p.bias.data()) {
        *v += b;
    }
    out
}

fn relu_vec(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Classic N-BEATS forward for one window through a single-head model:
/// doubly residual blocks, each `window -> z -> thetas -> basis`.
pub fn classic_forward(model: &ParallelModel<f64>, window: &[f64]) -> Vec<f64> {
    assert_eq!(model.heads(), 1, "classic oracle is single-head");
    let h = model.horizon();
    let mut residual = window.to_vec();
    let mut forecast = vec![0.0; h];
    for stack in &model.stacks {
        for exec in 0..stack.depth {
            let block = if stack.shared {
                &stack.blocks[0]
            } else {
                &stack.blocks[exec]
            };
            let mut z = mat_vec(&block.input_layers[0], &residual);
            relu_vec(&mut z);
            for layer in &block.trunk {
                z = affine_vec(layer, &z);
                relu_vec(&mut z);
            }
            let theta_f = affine_vec(&block.theta_f[0], &z);
            let theta_b = affine_vec(&block.theta_b[0], &z);
            let (f, b) = match &block.basis[0] {
                HeadBasis::Generic { v_f, b_f, v_b, b_b } => {
                    let mut f = mat_vec(v_f, &theta_f);
                    for (v, c) in f.iter_mut().zip(b_f.data()) {
                        *v += c;
                    }
                    let mut b = mat_vec(v_b, &theta_b);
                    for (v, c) in b.iter_mut().zip(b_b.data()) {
                        *v += c;
                    }
                    (f, b)
                }
                HeadBasis::Fixed {
                    forecast: mf,
                    backcast: mb,
                } => (mat_vec(mf, &theta_f), mat_vec(mb, &theta_b)),
            };
            for (r, bv) in residual.iter_mut().zip(&b) {
                *r -= bv;
            }
            for (acc, fv) in forecast.iter_mut().zip(&f) {
                *acc += fv;
            }
        }
    }
    forecast
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Central finite difference of a scalar function of one model parameter.
pub fn central_difference(
    model: &mut ParallelModel<f64>,
    param: usize,
    entry: usize,
    step: f64,
    mut eval: impl FnMut(&ParallelModel<f64>) -> f64,
) -> f64 {
    let original = model.params()[param].data()[entry];
    model.params_mut()[param].data_mut()[entry] = original + step;
    let plus = eval(model);
    model.params_mut()[param].data_mut()[entry] = original - step;
    let minus = eval(model);
    model.params_mut()[param].data_mut()[entry] = original;
    (plus - minus) / (2.0 * step)
}

/// Relative agreement used by every finite-difference check.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (numeric.abs() + 1e-8)
}

/// Build a scalar loss from head forecasts: a fixed random projection so
/// every output entry receives a distinct upstream gradient.
pub fn projection_loss(
    tape: &mut Tape<f64>,
    heads: &[Var],
    weights: &[Tensor<f64>],
) -> Var {
    let mut total = None;
    for (&h, w) in heads.iter().zip(weights) {
        let weighted = tape.mul_const(h, w).unwrap();
        let s = tape.sum_all(weighted);
        total = Some(match total {
            None => s,
            Some(t) => tape.add(t, s).unwrap(),
        });
    }
    total.unwrap()
}

/// Same grid every equivalence test uses unless stated otherwise.
pub fn grid_for(h: usize) -> LookbackGrid {
    LookbackGrid::from_horizon(h)
}

/// Deterministic rng for a test.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random model over a random grid.
pub fn random_model(seed: u64, max_blocks: usize) -> ParallelModel<f64> {
    let mut r = rng(seed);
    let h = r.random_range(3..=10usize);
    let cfg = random_config(&mut r, max_blocks);
    build_model(&cfg, &grid_for(h), seed).unwrap()
}
