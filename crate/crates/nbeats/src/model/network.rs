//! The parallel multi-head network: doubly residual stacks of blocks with
//! per-head masking, plus forward evaluation and forecasting helpers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{scale_factor, ScaleMode};
use crate::error::Result;
use crate::model::block::{Block, HeadBasis};
use crate::model::grid::{embed_windows, LookbackGrid};
use crate::model::{ModelConfig, StackConfig};
use crate::tensor::tape::{Tape, Var};
use crate::tensor::{Scalar, Tensor};

/// A stack executes `depth` blocks. With stack-level sharing a single
/// parameter block is reused for every execution.
#[derive(Clone, Debug, PartialEq)]
pub struct Stack<T: Scalar> {
    pub blocks: Vec<Block<T>>,
    pub depth: usize,
    pub shared: bool,
}

impl<T: Scalar> Stack<T> {
    fn block_at(&self, exec: usize) -> &Block<T> {
        if self.shared {
            &self.blocks[0]
        } else {
            &self.blocks[exec]
        }
    }
}

/// The full network: an ordered list of stacks over a lookback grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ParallelModel<T: Scalar> {
    config: ModelConfig,
    grid: LookbackGrid,
    seed: u64,
    pub stacks: Vec<Stack<T>>,
    head_masks: Vec<Tensor<T>>,
}

/// Build a network with freshly initialized parameters. The same seed and
/// config always produce bit-identical parameters.
pub fn build_model<T: Scalar>(
    config: &ModelConfig,
    grid: &LookbackGrid,
    seed: u64,
) -> Result<ParallelModel<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stacks = config
        .stacks
        .iter()
        .map(|sc| {
            let unique = if sc.shared { 1 } else { sc.blocks };
            Stack {
                blocks: (0..unique)
                    .map(|_| Block::init(&sc.basis, sc.width, sc.layers, grid, &mut rng))
                    .collect(),
                depth: sc.blocks,
                shared: sc.shared,
            }
        })
        .collect();
    Ok(ParallelModel {
        config: config.clone(),
        grid: grid.clone(),
        seed,
        stacks,
        head_masks: grid.head_masks(),
    })
}

/// Tape handles for every learnable parameter, in declaration order.
pub struct BoundParams {
    stacks: Vec<Vec<BoundBlock>>,
    /// Flat view aligned with [`ParallelModel::params`].
    pub flat: Vec<Var>,
}

struct BoundAffine {
    w: Var,
    b: Var,
}

struct BoundBlock {
    input_layers: Vec<Var>,
    trunk: Vec<BoundAffine>,
    theta_f: Vec<BoundAffine>,
    theta_b: Vec<BoundAffine>,
    basis: Vec<Option<BoundGeneric>>,
}

struct BoundGeneric {
    v_f: Var,
    b_f: Var,
    v_b: Var,
    b_b: Var,
}

/// Forward results: per-head forecast totals plus the per-block partial
/// forecasts in execution order (the totals are their running sums).
pub struct ModelOutput {
    pub heads: Vec<Var>,
    pub partials: Vec<Vec<Var>>,
    /// Stack index of each executed block, aligned with `partials`.
    pub stack_of_block: Vec<usize>,
}

impl<T: Scalar> ParallelModel<T> {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn grid(&self) -> &LookbackGrid {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> usize {
        self.grid.horizon()
    }

    pub fn heads(&self) -> usize {
        self.grid.heads()
    }

    pub fn head_masks(&self) -> &[Tensor<T>] {
        &self.head_masks
    }

    /// All learnable parameters in declaration order. Parameters shared
    /// across the blocks of a stack appear once.
    pub fn params(&self) -> Vec<&Tensor<T>> {
        let mut out = Vec::new();
        for stack in &self.stacks {
            for block in &stack.blocks {
                out.extend(block.input_layers.iter());
                for a in &block.trunk {
                    out.push(&a.weight);
                    out.push(&a.bias);
                }
                for a in block.theta_f.iter().chain(block.theta_b.iter()) {
                    out.push(&a.weight);
                    out.push(&a.bias);
                }
                for b in &block.basis {
                    if let HeadBasis::Generic { v_f, b_f, v_b, b_b } = b {
                        out.extend([v_f, b_f, v_b, b_b]);
                    }
                }
            }
        }
        out
    }

    /// Mutable view of the parameters, same order as [`Self::params`].
    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for stack in &mut self.stacks {
            for block in &mut stack.blocks {
                out.extend(block.input_layers.iter_mut());
                for a in &mut block.trunk {
                    out.push(&mut a.weight);
                    out.push(&mut a.bias);
                }
                for a in block.theta_f.iter_mut().chain(block.theta_b.iter_mut()) {
                    out.push(&mut a.weight);
                    out.push(&mut a.bias);
                }
                for b in &mut block.basis {
                    if let HeadBasis::Generic { v_f, b_f, v_b, b_b } = b {
                        out.extend([v_f, b_f, v_b, b_b]);
                    }
                }
            }
        }
        out
    }

    /// Exact number of learnable scalars, counting shared parameters once.
    pub fn count_parameters(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Register every parameter as a tape leaf.
    pub fn bind(&self, tape: &mut Tape<T>) -> BoundParams {
        let mut flat = Vec::new();
        let leaf = |tape: &mut Tape<T>, t: &Tensor<T>, flat: &mut Vec<Var>| {
            let v = tape.leaf(t.clone());
            flat.push(v);
            v
        };
        let mut stacks = Vec::with_capacity(self.stacks.len());
        for stack in &self.stacks {
            let mut bound_blocks = Vec::with_capacity(stack.blocks.len());
            for block in &stack.blocks {
                let input_layers = block
                    .input_layers
                    .iter()
                    .map(|t| leaf(tape, t, &mut flat))
                    .collect();
                let trunk = block
                    .trunk
                    .iter()
                    .map(|a| BoundAffine {
                        w: leaf(tape, &a.weight, &mut flat),
                        b: leaf(tape, &a.bias, &mut flat),
                    })
                    .collect();
                let theta_f = block
                    .theta_f
                    .iter()
                    .map(|a| BoundAffine {
                        w: leaf(tape, &a.weight, &mut flat),
                        b: leaf(tape, &a.bias, &mut flat),
                    })
                    .collect();
                let theta_b = block
                    .theta_b
                    .iter()
                    .map(|a| BoundAffine {
                        w: leaf(tape, &a.weight, &mut flat),
                        b: leaf(tape, &a.bias, &mut flat),
                    })
                    .collect();
                let basis = block
                    .basis
                    .iter()
                    .map(|b| match b {
                        HeadBasis::Generic { v_f, b_f, v_b, b_b } => Some(BoundGeneric {
                            v_f: leaf(tape, v_f, &mut flat),
                            b_f: leaf(tape, b_f, &mut flat),
                            v_b: leaf(tape, v_b, &mut flat),
                            b_b: leaf(tape, b_b, &mut flat),
                        }),
                        HeadBasis::Fixed { .. } => None,
                    })
                    .collect();
                bound_blocks.push(BoundBlock {
                    input_layers,
                    trunk,
                    theta_f,
                    theta_b,
                    basis,
                });
            }
            stacks.push(bound_blocks);
        }
        BoundParams { stacks, flat }
    }

    /// One block: per-head `z` through the shared trunk, coefficient
    /// projections, basis expansion. Returns masked backcasts and forecasts.
    fn block_forward(
        &self,
        tape: &mut Tape<T>,
        bound: &BoundBlock,
        block: &Block<T>,
        inputs: &[Var],
    ) -> Result<(Vec<Var>, Vec<Var>)> {
        let w = self.heads();
        let n = tape.value(inputs[0]).rows();
        // Per-head bias-free input layer, then the shared trunk over the
        // heads stacked into one batch.
        let mut zs = Vec::with_capacity(w);
        for hw in 0..w {
            let u = tape.affine(inputs[hw], bound.input_layers[hw], None)?;
            zs.push(tape.relu(u));
        }
        let mut z = if w == 1 {
            zs[0]
        } else {
            tape.concat(&zs, 0)?
        };
        for layer in &bound.trunk {
            let u = tape.affine(z, layer.w, Some(layer.b))?;
            z = tape.relu(u);
        }
        let mut backcasts = Vec::with_capacity(w);
        let mut forecasts = Vec::with_capacity(w);
        for hw in 0..w {
            let zw = if w == 1 {
                z
            } else {
                tape.slice(z, 0, hw * n, n)?
            };
            let tf = tape.affine(zw, bound.theta_f[hw].w, Some(bound.theta_f[hw].b))?;
            let tb = tape.affine(zw, bound.theta_b[hw].w, Some(bound.theta_b[hw].b))?;
            let (forecast, backcast) = match (&bound.basis[hw], &block.basis[hw]) {
                (Some(g), _) => (
                    tape.affine(tf, g.v_f, Some(g.b_f))?,
                    tape.affine(tb, g.v_b, Some(g.b_b))?,
                ),
                (None, HeadBasis::Fixed { forecast, backcast }) => (
                    tape.matmul_const(tf, forecast)?,
                    tape.matmul_const(tb, backcast)?,
                ),
                _ => unreachable!("bound basis out of sync with block basis"),
            };
            let masked = tape.mask(backcast, &self.head_masks[hw])?;
            backcasts.push(masked);
            forecasts.push(forecast);
        }
        Ok((backcasts, forecasts))
    }

    /// Run the doubly residual recursion: each block subtracts its masked
    /// backcast from the running residual and adds its partial forecast to
    /// the output.
    pub fn forward(
        &self,
        tape: &mut Tape<T>,
        bound: &BoundParams,
        inputs: &[Var],
    ) -> Result<ModelOutput> {
        let w = self.heads();
        debug_assert_eq!(inputs.len(), w);
        let mut residuals: Vec<Var> = inputs.to_vec();
        let mut totals: Vec<Option<Var>> = vec![None; w];
        let mut partials = Vec::new();
        let mut stack_of_block = Vec::new();
        for (si, stack) in self.stacks.iter().enumerate() {
            for exec in 0..stack.depth {
                let bound_block = if stack.shared {
                    &bound.stacks[si][0]
                } else {
                    &bound.stacks[si][exec]
                };
                let block = stack.block_at(exec);
                let (backcasts, forecasts) =
                    self.block_forward(tape, bound_block, block, &residuals)?;
                for hw in 0..w {
                    let r = tape.sub(residuals[hw], backcasts[hw])?;
                    residuals[hw] = tape.mask(r, &self.head_masks[hw])?;
                    totals[hw] = Some(match totals[hw] {
                        None => forecasts[hw],
                        Some(t) => tape.add(t, forecasts[hw])?,
                    });
                }
                partials.push(forecasts);
                stack_of_block.push(si);
            }
        }
        Ok(ModelOutput {
            heads: totals.into_iter().map(Option::unwrap).collect(),
            partials,
            stack_of_block,
        })
    }

    /// Forward pass on plain tensors; returns the per-head forecasts.
    pub fn forward_values(&self, head_inputs: &[Tensor<T>]) -> Result<Vec<Tensor<T>>> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let vars: Vec<Var> = head_inputs.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = self.forward(&mut tape, &bound, &vars)?;
        Ok(out.heads.iter().map(|&h| tape.value(h).clone()).collect())
    }

    /// Forecast a batch of histories in original units.
    /// Returns `[series][head][horizon]`.
    pub fn forecast_batch(&self, histories: &[&[f64]], mode: ScaleMode) -> Result<Vec<Vec<Vec<f64>>>> {
        let mut out = Vec::with_capacity(histories.len());
        for chunk in histories.chunks(512) {
            let (mut heads, _masks) = embed_windows::<T>(chunk, &self.grid)?;
            let scales = self.window_scales(chunk, mode);
            for (hw, head) in heads.iter_mut().enumerate() {
                let cols = head.cols();
                let data = head.data_mut();
                for (i, row_scale) in scales.iter().enumerate() {
                    let s = T::from_f64(row_scale[hw]);
                    for v in &mut data[i * cols..(i + 1) * cols] {
                        *v = *v / s;
                    }
                }
            }
            let forecasts = self.forward_values(&heads)?;
            for (i, row_scale) in scales.iter().enumerate() {
                let mut per_head = Vec::with_capacity(self.heads());
                for (hw, f) in forecasts.iter().enumerate() {
                    let row: Vec<f64> = f
                        .row(i)
                        .iter()
                        .map(|v| v.as_f64() * row_scale[hw])
                        .collect();
                    per_head.push(row);
                }
                out.push(per_head);
            }
        }
        Ok(out)
    }

    /// Forecast one history; `[head][horizon]`, original units.
    pub fn forecast_heads(&self, history: &[f64], mode: ScaleMode) -> Result<Vec<Vec<f64>>> {
        Ok(self.forecast_batch(&[history], mode)?.pop().unwrap())
    }

    /// Per-series, per-head scale factors for a batch of histories.
    fn window_scales(&self, histories: &[&[f64]], mode: ScaleMode) -> Vec<Vec<f64>> {
        histories
            .iter()
            .map(|h| match mode {
                ScaleMode::PerUnion => {
                    let l = self.grid.max_lookback().min(h.len());
                    let s = scale_factor(&h[h.len() - l..]);
                    vec![s; self.heads()]
                }
                ScaleMode::PerWindow => self
                    .grid
                    .lookbacks()
                    .iter()
                    .map(|&lw| {
                        let l = lw.min(h.len());
                        scale_factor(&h[h.len() - l..])
                    })
                    .collect(),
            })
            .collect()
    }

    /// The standalone single-head model for head `w`, assembled from this
    /// model's parameter slices. Applied to the unpadded `l_w` window it
    /// reproduces head `w` of the parallel forward pass.
    pub fn slice_head(&self, w: usize) -> Result<ParallelModel<T>> {
        let l = self.grid.lookback(w);
        let l_max = self.grid.max_lookback();
        let grid = LookbackGrid::single(l, self.grid.horizon())?;
        let stacks = self
            .stacks
            .iter()
            .map(|stack| Stack {
                blocks: stack
                    .blocks
                    .iter()
                    .map(|b| b.slice_head(w, l, l_max))
                    .collect(),
                depth: stack.depth,
                shared: stack.shared,
            })
            .collect();
        Ok(ParallelModel {
            config: self.config.clone(),
            grid: grid.clone(),
            seed: self.seed,
            stacks,
            head_masks: grid.head_masks(),
        })
    }
}

/// Convenience: a one-stack config for tests and docs.
pub fn single_stack_config(basis: crate::model::BasisKind, width: usize, blocks: usize) -> ModelConfig {
    ModelConfig {
        stacks: vec![StackConfig {
            basis,
            width,
            blocks,
            layers: 4,
            shared: false,
        }],
    }
}

/// Overwrite every parameter of `model` from an iterator of f64 buffers in
/// declaration order. Used by the container loader.
pub(crate) fn load_params_from<T: Scalar>(
    model: &mut ParallelModel<T>,
    mut next: impl FnMut(usize) -> Result<Vec<f64>>,
) -> Result<()> {
    for p in model.params_mut() {
        let raw = next(p.len())?;
        let shape = p.shape().to_vec();
        *p = Tensor::from_f64(&shape, &raw)?;
    }
    Ok(())
}
