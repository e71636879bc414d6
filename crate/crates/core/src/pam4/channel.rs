use alloc::vec::Vec;

use super::Pam4ChannelModel;
use crate::rng::RngStream;

/// Cascade of single-pole low-pass sections driven by a rectangular pulse
/// train. Section one is the exact step response over each sample interval;
/// later sections hold their input constant across the interval.
#[derive(Clone, Debug)]
pub(crate) struct LowPass {
    decay: f64,
    state: Vec<f64>,
}

impl LowPass {
    pub(crate) fn new(model: &Pam4ChannelModel, initial: f64) -> Self {
        LowPass {
            decay: model.filter_decay(),
            state: alloc::vec![initial; model.filter_order as usize],
        }
    }

    #[inline]
    pub(crate) fn step(&mut self, input: f64) -> f64 {
        let mut x = input;
        for y in self.state.iter_mut() {
            *y = x + (*y - x) * self.decay;
            x = *y;
        }
        x
    }
}

/// Rectangular pulses at `samples_per_symbol`, low-pass filtered, plus
/// i.i.d. `N(0, noise_sigma²)` on every sample. Samples are taken at the end
/// of each sub-interval, so sample `k` of symbol `n` sits at
/// `(n + (k+1)/sps)·Ts`.
pub fn transmit(levels: &[u8], model: &Pam4ChannelModel, stream: &mut RngStream) -> Vec<f64> {
    let sps = model.samples_per_symbol;
    let mut out = Vec::with_capacity(levels.len() * sps);
    let Some(&first) = levels.first() else {
        return out;
    };
    let mut filter = LowPass::new(model, model.amplitude(first));
    for &lvl in levels {
        let a = model.amplitude(lvl);
        for _ in 0..sps {
            out.push(filter.step(a));
        }
    }
    if model.noise_sigma > 0.0 {
        let sigma = model.noise_sigma;
        let mut chunks = out.chunks_exact_mut(2);
        for pair in &mut chunks {
            let (z0, z1) = stream.standard_normal_pair();
            pair[0] += sigma * z0;
            pair[1] += sigma * z1;
        }
        for s in chunks.into_remainder() {
            *s += sigma * stream.standard_normal();
        }
    }
    out
}

/// The decision sample of every complete symbol.
pub fn decision_samples<'a>(
    samples: &'a [f64],
    model: &Pam4ChannelModel,
) -> impl Iterator<Item = f64> + 'a {
    let sps = model.samples_per_symbol;
    let idx = model.decision_index();
    samples.chunks_exact(sps).map(move |c| c[idx])
}
