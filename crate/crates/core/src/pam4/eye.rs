use alloc::vec::Vec;

use super::{Pam4ChannelModel, Pam4Error};

/// Received samples folded over two symbol periods.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EyeHistogram {
    phase_bins: usize,
    amplitude_bins: usize,
    /// Lower edge and width of the amplitude bins, as raw `f64` bits so the
    /// type stays `Eq`.
    amp_min_bits: u64,
    amp_width_bits: u64,
    /// Phase-major counts.
    counts: Vec<u64>,
}

pub const DEFAULT_AMPLITUDE_BINS: usize = 96;

impl EyeHistogram {
    /// Bins span the level range plus three quarters of a level spacing on
    /// each side; samples outside land in the edge bins.
    pub fn new(model: &Pam4ChannelModel, amplitude_bins: usize) -> Self {
        let l = &model.level_amplitudes;
        let margin = 0.75 * (l[3] - l[0]) / 3.0;
        let lo = l[0] - margin;
        let width = (l[3] - l[0] + 2.0 * margin) / amplitude_bins as f64;
        let phase_bins = 2 * model.samples_per_symbol;
        EyeHistogram {
            phase_bins,
            amplitude_bins,
            amp_min_bits: lo.to_bits(),
            amp_width_bits: width.to_bits(),
            counts: alloc::vec![0; phase_bins * amplitude_bins],
        }
    }

    pub fn phase_bins(&self) -> usize {
        self.phase_bins
    }

    pub fn amplitude_bins(&self) -> usize {
        self.amplitude_bins
    }

    pub fn amplitude_min(&self) -> f64 {
        f64::from_bits(self.amp_min_bits)
    }

    pub fn amplitude_width(&self) -> f64 {
        f64::from_bits(self.amp_width_bits)
    }

    /// Amplitude at the centre of `bin`.
    pub fn bin_centre(&self, bin: usize) -> f64 {
        self.amplitude_min() + (bin as f64 + 0.5) * self.amplitude_width()
    }

    pub fn amplitude_bin(&self, x: f64) -> usize {
        let b = libm::floor((x - self.amplitude_min()) / self.amplitude_width());
        if b < 0.0 || b.is_nan() {
            0
        } else {
            (b as usize).min(self.amplitude_bins - 1)
        }
    }

    /// Folds `samples` starting at phase 0.
    pub fn accumulate(&mut self, samples: &[f64]) {
        for (i, &x) in samples.iter().enumerate() {
            let phase = i % self.phase_bins;
            let bin = self.amplitude_bin(x);
            self.counts[phase * self.amplitude_bins + bin] += 1;
        }
    }

    pub fn count(&self, phase: usize, amplitude_bin: usize) -> u64 {
        self.counts[phase * self.amplitude_bins + amplitude_bin]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts per amplitude bin at `phase`.
    pub fn column(&self, phase: usize) -> &[u64] {
        &self.counts[phase * self.amplitude_bins..(phase + 1) * self.amplitude_bins]
    }

    /// `(phase_bin, amplitude_bin, count)` for every cell, phase-major.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, &c)| (i / self.amplitude_bins, i % self.amplitude_bins, c))
    }
}

pub fn eye_export(samples: &[f64], model: &Pam4ChannelModel) -> Result<EyeHistogram, Pam4Error> {
    eye_export_with_bins(samples, model, DEFAULT_AMPLITUDE_BINS)
}

pub fn eye_export_with_bins(
    samples: &[f64],
    model: &Pam4ChannelModel,
    amplitude_bins: usize,
) -> Result<EyeHistogram, Pam4Error> {
    model.validate()?;
    if model.samples_per_symbol < 2 {
        return Err(Pam4Error::InvalidModel("eye export needs at least two samples per symbol"));
    }
    if amplitude_bins == 0 {
        return Err(Pam4Error::InvalidModel("eye export needs at least one amplitude bin"));
    }
    let mut eye = EyeHistogram::new(model, amplitude_bins);
    eye.accumulate(samples);
    Ok(eye)
}
