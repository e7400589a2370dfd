//! Training of the NBP weights and of the decimation MLP.
//!
//! Both stages unroll a decoder on a scalar [`Tape`], minimise the multiloss
//! with Adam and report a held-out loss before and after. Frames of a batch
//! are processed in parallel; gradients are summed in frame order so results
//! do not depend on the thread count.

mod adam;
mod tape;
mod unroll;

pub use adam::{adam_step, AdamState};
pub use tape::{Tape, Var};
pub use unroll::{forward_with_tape, genie_path, multiloss, nbp_forward_with_tape, Layer, Trainable, Unrolled};

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ebn0_to_sigma, frame_rng, modulate, sample_codeword, transmit_with, CodewordMode};
use crate::code_graph::{derive_generator, GeneratorMatrix, TannerGraph};
use crate::decimation::{DecimatorParams, NbpdConfig};
use crate::decoder::{decode_nbp, WeightSet};
use crate::error::{Error, Result};

/// First frame index of the held-out set; training frames count up from 0.
const HELDOUT_BASE: u64 = 1 << 62;
/// Stream used to initialise the decimator.
const INIT_STREAM: u64 = HELDOUT_BASE - 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub steps: usize,
    /// Per-frame Eb/N0 is uniform over this interval (dB).
    pub ebn0_range_db: (f64, f64),
    pub seed: u64,
    pub codeword_mode: CodewordMode,
    /// Unrolled iterations for [`train_nbp`].
    pub l_max: usize,
    pub heldout_frames: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            learning_rate: 1e-3,
            steps: 200,
            ebn0_range_db: (2.0, 5.0),
            seed: 0,
            codeword_mode: CodewordMode::AllZero,
            l_max: 50,
            heldout_frames: 128,
        }
    }
}

impl TrainConfig {
    /// Defaults for the decimator stage: random codewords.
    pub fn for_decimator() -> Self {
        Self {
            codeword_mode: CodewordMode::Random,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let (lo, hi) = self.ebn0_range_db;
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be non-negative, got {}", self.learning_rate));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad(format!("empty Eb/N0 range [{lo}, {hi}]"));
        }
        if self.l_max == 0 {
            return bad("l_max must be at least 1".into());
        }
        if self.heldout_frames == 0 {
            return bad("heldout_frames must be at least 1".into());
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_heldout_loss: f64,
    pub final_heldout_loss: f64,
    /// Held-out loss of the untrained reference: unit weights for the NBP
    /// stage, an all-zero MLP for the decimator stage.
    pub baseline_heldout_loss: f64,
    /// Mean training loss of every batch, before its update.
    pub batch_losses: Vec<f64>,
}

/// One training or held-out frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub bits: Vec<u8>,
    pub llr: Vec<f64>,
}

struct Sampler {
    gen: GeneratorMatrix,
    rate: f64,
}

impl Sampler {
    fn new(graph: &TannerGraph) -> Result<Self> {
        let gen = derive_generator(graph)?;
        let rate = gen.rate();
        Ok(Self { gen, rate })
    }

    fn frame(&self, cfg: &TrainConfig, index: u64) -> Result<Frame> {
        let mut rng = frame_rng(cfg.seed, index);
        let (lo, hi) = cfg.ebn0_range_db;
        let ebn0 = if lo < hi { rng.gen_range(lo..hi) } else { lo };
        let sigma = ebn0_to_sigma(ebn0, self.rate)?;
        let bits = sample_codeword(&self.gen, cfg.codeword_mode, &mut rng);
        let obs = transmit_with(&modulate(&bits)?, sigma, &mut rng)?;
        Ok(Frame { bits, llr: obs.llr })
    }

    fn frames(&self, cfg: &TrainConfig, start: u64, count: usize) -> Result<Vec<Frame>> {
        (0..count as u64).map(|i| self.frame(cfg, start + i)).collect()
    }
}

/// The held-out frames used by both training stages.
pub fn heldout_frames(graph: &TannerGraph, cfg: &TrainConfig) -> Result<Vec<Frame>> {
    Sampler::new(graph)?.frames(cfg, HELDOUT_BASE, cfg.heldout_frames)
}

/// Mean of `f` over frames, reduced in frame order.
fn mean_over<T, F>(frames: &[Frame], f: F) -> Result<T>
where
    T: Send + Accumulate,
    F: Fn(&Frame) -> Result<T> + Sync + Send,
{
    let parts: Vec<T> = frames.par_iter().map(f).collect::<Result<_>>()?;
    let mut it = parts.into_iter();
    let mut acc = it.next().ok_or_else(|| Error::InvalidParameter("no frames".into()))?;
    for p in it {
        acc.accumulate(p);
    }
    acc.scale(1.0 / frames.len() as f64);
    Ok(acc)
}

trait Accumulate {
    fn accumulate(&mut self, other: Self);
    fn scale(&mut self, c: f64);
}

impl Accumulate for f64 {
    fn accumulate(&mut self, other: Self) {
        *self += other;
    }

    fn scale(&mut self, c: f64) {
        *self *= c;
    }
}

impl Accumulate for (f64, Vec<f64>) {
    fn accumulate(&mut self, other: Self) {
        self.0 += other.0;
        self.1.iter_mut().zip(other.1).for_each(|(a, b)| *a += b);
    }

    fn scale(&mut self, c: f64) {
        self.0 *= c;
        self.1.iter_mut().for_each(|a| *a *= c);
    }
}

/// Mean held-out multiloss of NBP(`l_max`).
pub fn nbp_heldout_loss(graph: &TannerGraph, weights: &WeightSet, frames: &[Frame], l_max: usize) -> Result<f64> {
    mean_over(frames, |f| {
        let r = decode_nbp(graph, weights, &f.llr, l_max, false)?;
        multiloss(&r.posteriors_per_iteration, &f.bits)
    })
}

/// Mean held-out multiloss along the genie path of `NBP-D(nbpd)`.
pub fn genie_heldout_loss(
    graph: &TannerGraph,
    weights: &WeightSet,
    params: Option<&DecimatorParams>,
    frames: &[Frame],
    nbpd: &NbpdConfig,
) -> Result<f64> {
    mean_over(frames, |f| {
        let layers = genie_path(graph, weights, params, &f.llr, &f.bits, nbpd)?;
        multiloss(&layers, &f.bits)
    })
}

/// Trains iteration-tied NBP weights from all ones.
pub fn train_nbp(graph: &TannerGraph, cfg: &TrainConfig) -> Result<(WeightSet, TrainReport)> {
    cfg.validate()?;
    let sampler = Sampler::new(graph)?;
    let heldout = sampler.frames(cfg, HELDOUT_BASE, cfg.heldout_frames)?;
    let mut weights = WeightSet::uniform(graph);
    let initial = nbp_heldout_loss(graph, &weights, &heldout, cfg.l_max)?;
    let mut flat = weights.to_flat();
    let mut adam = AdamState::new(flat.len());
    let mut batch_losses = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        let batch = sampler.frames(cfg, (step * cfg.batch_size) as u64, cfg.batch_size)?;
        let (loss, grad) = mean_over(&batch, |f| {
            let mut un = nbp_forward_with_tape(graph, &weights, &f.llr, cfg.l_max)?;
            let node = un.loss(&f.bits)?;
            Ok((un.tape.value(node), un.gradient(node)))
        })?;
        adam_step(&mut flat, &grad, &mut adam, cfg.learning_rate)?;
        weights = WeightSet::from_flat(graph, &flat)?;
        log::debug!("train-nbp step {step}: loss {loss:.6}");
        batch_losses.push(loss);
    }

    let final_loss = nbp_heldout_loss(graph, &weights, &heldout, cfg.l_max)?;
    log::info!("train-nbp held-out loss {initial:.6} -> {final_loss:.6}");
    Ok((
        weights,
        TrainReport {
            initial_heldout_loss: initial,
            final_heldout_loss: final_loss,
            baseline_heldout_loss: initial,
            batch_losses,
        },
    ))
}

/// Trains the decimation MLP along the genie path with `frozen` weights.
pub fn train_decimator(
    graph: &TannerGraph,
    frozen: &WeightSet,
    cfg: &TrainConfig,
    nbpd: &NbpdConfig,
) -> Result<(DecimatorParams, TrainReport)> {
    cfg.validate()?;
    nbpd.validate(graph.n())?;
    frozen.validate(graph)?;
    if nbpd.n_ld == 0 {
        return Err(Error::InvalidParameter(
            "n_LD = 0: there is no learned decimation to train".into(),
        ));
    }
    let init = DecimatorParams::random(graph.max_vn_degree(), &mut frame_rng(cfg.seed, INIT_STREAM));
    train_decimator_from(graph, frozen, init, cfg, nbpd)
}

/// [`train_decimator`] starting from `init` instead of a random MLP.
pub fn train_decimator_from(
    graph: &TannerGraph,
    frozen: &WeightSet,
    init: DecimatorParams,
    cfg: &TrainConfig,
    nbpd: &NbpdConfig,
) -> Result<(DecimatorParams, TrainReport)> {
    cfg.validate()?;
    nbpd.validate(graph.n())?;
    frozen.validate(graph)?;
    init.validate()?;
    if nbpd.n_ld == 0 {
        return Err(Error::InvalidParameter(
            "n_LD = 0: there is no learned decimation to train".into(),
        ));
    }
    let d_max = graph.max_vn_degree();
    if init.d_max != d_max {
        return Err(Error::InvalidParameter(format!(
            "decimator built for d_max = {}, graph has {d_max}",
            init.d_max
        )));
    }
    let sampler = Sampler::new(graph)?;
    let heldout = sampler.frames(cfg, HELDOUT_BASE, cfg.heldout_frames)?;
    let mut params = init;
    let baseline = genie_heldout_loss(graph, frozen, Some(&DecimatorParams::zeros(d_max)), &heldout, nbpd)?;
    let initial = genie_heldout_loss(graph, frozen, Some(&params), &heldout, nbpd)?;
    let mut flat = params.to_flat();
    let mut adam = AdamState::new(flat.len());
    let mut batch_losses = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        let batch = sampler.frames(cfg, (step * cfg.batch_size) as u64, cfg.batch_size)?;
        let (loss, grad) = mean_over(&batch, |f| {
            let mut un = forward_with_tape(graph, frozen, Some(&params), &f.llr, &f.bits, nbpd, Trainable::Decimator)?;
            let node = un.loss(&f.bits)?;
            Ok((un.tape.value(node), un.gradient(node)))
        })?;
        adam_step(&mut flat, &grad, &mut adam, cfg.learning_rate)?;
        params = DecimatorParams::from_flat(d_max, &flat)?;
        log::debug!("train-dec step {step}: loss {loss:.6}");
        batch_losses.push(loss);
    }

    let final_loss = genie_heldout_loss(graph, frozen, Some(&params), &heldout, nbpd)?;
    log::info!("train-dec held-out loss {initial:.6} -> {final_loss:.6} (zero MLP {baseline:.6})");
    Ok((
        params,
        TrainReport {
            initial_heldout_loss: initial,
            final_heldout_loss: final_loss,
            baseline_heldout_loss: baseline,
            batch_losses,
        },
    ))
}
