use alloc::vec::Vec;

use super::channel::LowPass;
use super::{decode_symbol, BerReport, Mapping, Pam4ChannelModel, Pam4Error};
use crate::math::q_function;

/// Closed-form BER of the unfiltered AWGN channel under nearest-level slicing.
///
/// With unit spacing `d` and `qk = Q(k·d / 2σ)`, the per-level error
/// probabilities are, for the natural mapping,
///
/// | level | MSB error | LSB error        |
/// |-------|-----------|------------------|
/// | 0     | q3        | q1 − q3 + q5     |
/// | 1     | q1        | 2·q1 − q3        |
/// | 2     | q1        | 2·q1 − q3        |
/// | 3     | q3        | q1 − q3 + q5     |
///
/// and for Gray (00, 01, 11, 10) the LSB column becomes
/// `q1 − q5, q1 + q3, q1 + q3, q1 − q5`. The filter is ignored.
pub fn analytic_ber(model: &Pam4ChannelModel) -> Result<BerReport, Pam4Error> {
    model.validate()?;
    let d = model.uniform_spacing().ok_or(Pam4Error::UnequalSpacing)?;
    let sigma = model.noise_sigma;
    if sigma == 0.0 {
        return Ok(BerReport {
            msb_ber: 0.0,
            lsb_ber: 0.0,
            symbol_error_rate: 0.0,
            bits_tested: 0,
        });
    }
    let q = |k: f64| q_function(k * d / (2.0 * sigma));
    let (q1, q3, q5) = (q(1.0), q(3.0), q(5.0));
    let msb_ber = 0.5 * (q1 + q3);
    let lsb_ber = match model.mapping {
        Mapping::Natural => 0.5 * (3.0 * q1 - 2.0 * q3 + q5),
        Mapping::Gray => 0.5 * (2.0 * q1 + q3 - q5),
    };
    Ok(BerReport {
        msb_ber,
        lsb_ber,
        symbol_error_rate: 1.5 * q1,
        bits_tested: 0,
    })
}

/// Number of past symbols enumerated by [`isi_ber`].
fn isi_memory(model: &Pam4ChannelModel) -> usize {
    if !model.is_filtered() {
        return 0;
    }
    let per_symbol = libm::pow(model.filter_decay(), model.samples_per_symbol as f64);
    // Keep enough history that the truncated tail is below 1e-9 of a level.
    let mut m = 1;
    let order = model.filter_order as f64;
    while m < 6 && libm::pow(per_symbol, m as f64 / order) > 1e-9 {
        m += 1;
    }
    m
}

/// Semi-analytic BER including the deterministic ISI of the filter.
///
/// Enumerates every pattern of the current symbol and its recent
/// predecessors, computes the noiseless decision sample (the filter starts
/// settled on the oldest symbol), and sums Gaussian tail probabilities
/// against the midpoint thresholds. Handles arbitrary level spacing.
pub fn isi_ber(model: &Pam4ChannelModel) -> Result<BerReport, Pam4Error> {
    model.validate()?;
    let memory = isi_memory(model);
    let thresholds = model.midpoint_thresholds();
    let sigma = model.noise_sigma;
    let patterns = 1usize << (2 * (memory + 1));
    let (mut msb, mut lsb, mut ser) = (0.0, 0.0, 0.0);
    let mut symbols = Vec::with_capacity(memory + 1);
    for p in 0..patterns {
        symbols.clear();
        // Oldest symbol first; the last entry is the one being decided.
        for k in (0..=memory).rev() {
            symbols.push(((p >> (2 * k)) & 3) as u8);
        }
        let mut filter = LowPass::new(model, model.amplitude(symbols[0]));
        let mut sample = 0.0;
        for &s in &symbols {
            let a = model.amplitude(s);
            for _ in 0..model.samples_per_symbol {
                sample = filter.step(a);
            }
        }
        let tx = *symbols.last().expect("memory + 1 symbols");
        let (tx_msb, tx_lsb) = decode_symbol(tx, model.mapping);
        for decided in 0..4u8 {
            let prob = region_probability(sample, sigma, &thresholds, decided);
            if prob == 0.0 || decided == tx {
                continue;
            }
            let (m, l) = decode_symbol(decided, model.mapping);
            ser += prob;
            if m != tx_msb {
                msb += prob;
            }
            if l != tx_lsb {
                lsb += prob;
            }
        }
    }
    let n = patterns as f64;
    Ok(BerReport {
        msb_ber: msb / n,
        lsb_ber: lsb / n,
        symbol_error_rate: ser / n,
        bits_tested: 0,
    })
}

/// Probability that `mean + N(0, σ²)` is sliced to `level`.
fn region_probability(mean: f64, sigma: f64, t: &[f64; 3], level: u8) -> f64 {
    let lo = if level == 0 { f64::NEG_INFINITY } else { t[level as usize - 1] };
    let hi = if level == 3 { f64::INFINITY } else { t[level as usize] };
    if sigma == 0.0 {
        return if mean > lo && mean <= hi { 1.0 } else { 0.0 };
    }
    // Work with whichever tails avoid cancellation.
    let below = |x: f64| if x == f64::NEG_INFINITY { 0.0 } else { q_function((mean - x) / sigma) };
    let above = |x: f64| if x == f64::INFINITY { 0.0 } else { q_function((x - mean) / sigma) };
    let p = if hi <= mean {
        below(hi) - below(lo)
    } else if lo >= mean {
        above(lo) - above(hi)
    } else {
        1.0 - below(lo) - above(hi)
    };
    p.max(0.0)
}

/// Noise sigma at which [`isi_ber`] predicts `target_msb_ber`, by bisection
/// on log σ.
pub fn solve_noise_sigma(model: &Pam4ChannelModel, target_msb_ber: f64) -> Result<f64, Pam4Error> {
    if !(target_msb_ber > 0.0 && target_msb_ber < 0.25) {
        return Err(Pam4Error::InvalidModel("target MSB BER must lie in (0, 0.25)"));
    }
    let mut m = model.clone();
    let mut eval = |sigma: f64| -> Result<f64, Pam4Error> {
        m.noise_sigma = sigma;
        Ok(isi_ber(&m)?.msb_ber)
    };
    let spacing = model.level_amplitudes[1] - model.level_amplitudes[0];
    let (mut lo, mut hi) = (libm::log(1e-4 * spacing), libm::log(2.0 * spacing));
    if eval(libm::exp(lo))? > target_msb_ber {
        return Err(Pam4Error::InvalidModel("channel ISI alone exceeds the target BER"));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if eval(libm::exp(mid))? < target_msb_ber {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(libm::exp(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pam4::ThresholdMode;

    /// Brute-force oracle: Simpson integration of the Gaussian density over
    /// each decision region, for every transmitted level.
    fn integrated_ber(model: &Pam4ChannelModel) -> (f64, f64, f64) {
        let sigma = model.noise_sigma;
        let t = model.midpoint_thresholds();
        let pdf = |x: f64, mu: f64| {
            libm::exp(-0.5 * ((x - mu) / sigma) * ((x - mu) / sigma))
                / (sigma * libm::sqrt(core::f64::consts::TAU))
        };
        let integrate = |a: f64, b: f64, mu: f64| {
            let n = 20_000;
            let h = (b - a) / n as f64;
            let mut s = pdf(a, mu) + pdf(b, mu);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * pdf(a + i as f64 * h, mu);
            }
            s * h / 3.0
        };
        let edges = [
            model.level_amplitudes[0] - 20.0 * sigma,
            t[0],
            t[1],
            t[2],
            model.level_amplitudes[3] + 20.0 * sigma,
        ];
        let (mut msb, mut lsb, mut ser) = (0.0, 0.0, 0.0);
        for tx in 0..4u8 {
            let mu = model.amplitude(tx);
            let (tm, tl) = decode_symbol(tx, model.mapping);
            for rx in 0..4u8 {
                if rx == tx {
                    continue;
                }
                let p = integrate(edges[rx as usize], edges[rx as usize + 1], mu);
                let (rm, rl) = decode_symbol(rx, model.mapping);
                ser += p;
                if rm != tm {
                    msb += p;
                }
                if rl != tl {
                    lsb += p;
                }
            }
        }
        (msb / 4.0, lsb / 4.0, ser / 4.0)
    }

    #[test]
    fn closed_form_matches_integration_oracle() {
        for mapping in [Mapping::Natural, Mapping::Gray] {
            for sigma in [0.08, 0.1344, 0.2, 0.35] {
                let model = Pam4ChannelModel {
                    mapping,
                    ..Pam4ChannelModel::awgn(sigma)
                };
                let r = analytic_ber(&model).unwrap();
                let (msb, lsb, ser) = integrated_ber(&model);
                for (a, b) in [(r.msb_ber, msb), (r.lsb_ber, lsb), (r.symbol_error_rate, ser)] {
                    assert!((a / b - 1.0).abs() < 1e-6, "{mapping:?} σ={sigma}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn isi_route_agrees_with_closed_form_when_unfiltered() {
        for sigma in [0.1, 0.1344, 0.18] {
            let model = Pam4ChannelModel::awgn(sigma);
            let a = analytic_ber(&model).unwrap();
            let b = isi_ber(&model).unwrap();
            assert!((a.msb_ber / b.msb_ber - 1.0).abs() < 1e-12);
            assert!((a.lsb_ber / b.lsb_ber - 1.0).abs() < 1e-12);
            assert!((a.symbol_error_rate / b.symbol_error_rate - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_is_error_free() {
        let r = analytic_ber(&Pam4ChannelModel::awgn(0.0)).unwrap();
        assert_eq!((r.msb_ber, r.lsb_ber, r.symbol_error_rate), (0.0, 0.0, 0.0));
        let r = isi_ber(&Pam4ChannelModel::default()).unwrap();
        assert_eq!((r.msb_ber, r.lsb_ber), (0.0, 0.0));
    }

    #[test]
    fn first_order_ratio_tends_to_three() {
        // σ = 0.10521 gives q1 = 1e-6.
        let model = Pam4ChannelModel::awgn(0.10521);
        let r = analytic_ber(&model).unwrap();
        let q1 = q_function(0.5 / 0.10521);
        assert!((q1 / 1e-6 - 1.0).abs() < 0.01);
        assert!((r.msb_ber / (0.5e-6) - 1.0).abs() < 0.02);
        assert!((r.lsb_ber / (1.5e-6) - 1.0).abs() < 0.02);
        let mut prev = 0.0;
        for sigma in [0.3, 0.2, 0.12, 0.08] {
            let r = analytic_ber(&Pam4ChannelModel::awgn(sigma)).unwrap();
            let ratio = r.lsb_ber / r.msb_ber;
            assert!(ratio >= prev && ratio < 3.0 + 1e-12, "{ratio}");
            prev = ratio;
        }
        assert!(prev > 2.999);
    }

    #[test]
    fn ser_bounds_stream_rates() {
        for sigma in [0.05, 0.1, 0.2, 0.5, 1.0] {
            for mapping in [Mapping::Natural, Mapping::Gray] {
                let r = analytic_ber(&Pam4ChannelModel { mapping, ..Pam4ChannelModel::awgn(sigma) })
                    .unwrap();
                assert!(r.symbol_error_rate >= r.msb_ber.max(r.lsb_ber));
                assert!(r.symbol_error_rate <= r.msb_ber + r.lsb_ber + 1e-15);
            }
        }
    }

    #[test]
    fn unequal_spacing_unsupported() {
        let model = Pam4ChannelModel {
            level_amplitudes: [0.0, 1.0, 2.5, 3.0],
            thresholds: ThresholdMode::Midpoint,
            ..Pam4ChannelModel::awgn(0.1)
        };
        assert_eq!(analytic_ber(&model), Err(Pam4Error::UnequalSpacing));
        assert!(isi_ber(&model).is_ok());
    }

    #[test]
    fn filter_isi_costs_margin() {
        let ideal = isi_ber(&Pam4ChannelModel::awgn(0.12)).unwrap();
        let filtered = isi_ber(&Pam4ChannelModel {
            noise_sigma: 0.12,
            ..Default::default()
        })
        .unwrap();
        assert!(filtered.msb_ber > ideal.msb_ber);
    }

    #[test]
    fn solver_hits_target() {
        let model = Pam4ChannelModel::default();
        let target = 8.37e-7;
        let sigma = solve_noise_sigma(&model, target).unwrap();
        let got = isi_ber(&Pam4ChannelModel { noise_sigma: sigma, ..model }).unwrap();
        assert!((got.msb_ber / target - 1.0).abs() < 1e-6);
        let awgn_sigma = solve_noise_sigma(&Pam4ChannelModel::awgn(0.0), target).unwrap();
        assert!(sigma < awgn_sigma);
    }
}
