//! The single-member training loop: sample, forward, loss, backward, Adam.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ensemble::LossKind;
use crate::error::{Error, Result};
use crate::model::{build_model, LookbackGrid, ModelConfig, ParallelModel};
use crate::tensor::tape::{Tape, Var};
use crate::tensor::{Scalar, Tensor};
use crate::training::loss::{mape_loss, mase_loss, multihead_loss, smape_loss};
use crate::training::sampler::{sample_batch, TrainView};
use crate::training::{lr_at, Adam, TrainConfig};

/// One `iteration,loss,lr` entry of a training trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub loss: f64,
    pub lr: f64,
}

pub struct TrainOutcome<T: Scalar> {
    pub model: ParallelModel<T>,
    pub trace: Vec<TracePoint>,
}

/// Derive an independent RNG stream from a master seed (splitmix64).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Train one member. Deterministic for a fixed seed and thread count; the
/// sampler stream is derived from the seed so model init and sampling do
/// not share draws.
pub fn train_member<T: Scalar>(
    view: &TrainView,
    model_cfg: &ModelConfig,
    grid: &LookbackGrid,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    let mut model = build_model::<T>(model_cfg, grid, cfg.seed)?;
    let mut adam = Adam::new();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut trace = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        let lr = lr_at(it, cfg.iterations, cfg.lr);
        let batch = sample_batch::<T>(view, grid, cfg, &mut rng)?;

        let mut tape = Tape::new();
        let bound = model.bind(&mut tape);
        let inputs: Vec<Var> = batch.heads.iter().map(|h| tape.leaf(h.clone())).collect();
        let out = model.forward(&mut tape, &bound, &inputs)?;

        let mut head_losses = Vec::with_capacity(out.heads.len());
        for (w, &f) in out.heads.iter().enumerate() {
            let l = match cfg.loss {
                LossKind::Smape => {
                    smape_loss(&mut tape, f, &batch.targets[w], &batch.target_mask)?
                }
                LossKind::Mape => mape_loss(&mut tape, f, &batch.targets[w], &batch.target_mask)?,
                LossKind::Mase => mase_loss(
                    &mut tape,
                    f,
                    &batch.targets[w],
                    &batch.target_mask,
                    &batch.naive_mad[w],
                )?,
            };
            head_losses.push(l);
        }
        let loss = multihead_loss(&mut tape, &head_losses)?;
        let loss_val = tape.value(loss).item().as_f64();
        if !loss_val.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: it });
        }

        let mut grads = tape.backward(loss)?;
        let gvec: Vec<Tensor<T>> = bound
            .flat
            .iter()
            .map(|&v| {
                grads
                    .take(v)
                    .unwrap_or_else(|| Tensor::zeros(tape.value(v).shape()))
            })
            .collect();
        adam.step(&mut model.params_mut(), &gvec, lr);
        trace.push(TracePoint {
            iteration: it,
            loss: loss_val,
            lr,
        });
    }
    Ok(TrainOutcome { model, trace })
}

/// Write a trace as `iteration,loss,lr` lines.
pub fn write_trace(trace: &[TracePoint], path: impl AsRef<std::path::Path>) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "iteration,loss,lr")?;
    for p in trace {
        writeln!(out, "{},{},{}", p.iteration, p.loss, p.lr)?;
    }
    Ok(())
}
