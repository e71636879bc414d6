use proptest::prelude::*;
use splitsim_core::impair::{ber_from_per, per_from_ber, Impairer, ImpairmentProfile};
use splitsim_core::math::{binomial_std, Welford};
use splitsim_core::SimTime;

/// Mean and std of N(μ, σ²) conditioned on x ≥ 0, by Simpson integration.
fn truncated_moments(mu: f64, sigma: f64) -> (f64, f64) {
    let (a, b) = (0.0, mu + 12.0 * sigma);
    let n = 200_000;
    let h = (b - a) / n as f64;
    let pdf = |x: f64| (-0.5 * ((x - mu) / sigma).powi(2)).exp();
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..=n {
        let x = a + i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let p = w * pdf(x);
        m0 += p;
        m1 += p * x;
        m2 += p * x * x;
    }
    let mean = m1 / m0;
    (mean, (m2 / m0 - mean * mean).sqrt())
}

fn profile(jitter_ms: f64, ber: f64) -> ImpairmentProfile {
    ImpairmentProfile {
        mean_latency: SimTime::from_ms(2),
        jitter_std: SimTime::from_ms_f64(jitter_ms),
        injected_ber: ber,
        effective_kill_fraction: 1.0,
    }
}

#[test]
fn delay_std_matches_truncated_normal() {
    let (mean, std) = truncated_moments(2.0, 0.66);
    // The truncation shift is small at μ/σ ≈ 3.
    assert!((std / 0.66 - 1.0).abs() < 0.01);
    let mut imp = Impairer::new(profile(0.66, 0.0), 11).unwrap();
    let mut w = Welford::new();
    for _ in 0..1_000_000 {
        w.push(imp.draw_delay().as_ms_f64());
    }
    assert!((w.std().unwrap() / std - 1.0).abs() < 0.01, "{:?} vs {std}", w.std());
    assert!((w.mean() - mean).abs() < 3.0 * std / 1000.0);
}

#[test]
fn delays_are_never_negative() {
    let mut imp = Impairer::new(profile(1.5, 0.0), 5).unwrap();
    assert!((0..200_000).all(|_| imp.draw_delay() >= SimTime::ZERO));
}

#[test]
fn corruption_fraction_matches_frame_error_probability() {
    let p = per_from_ber(1e-6, 9600);
    let mut imp = Impairer::new(profile(0.0, 1e-6), 21).unwrap();
    let n = 1_000_000u64;
    let hits = (0..n).filter(|_| imp.draw_corruption(9600)).count() as f64;
    let frac = hits / n as f64;
    assert!((frac - p).abs() < 3.0 * binomial_std(p, n), "{frac} vs {p}");
}

#[test]
fn kill_fraction_scales_corruption() {
    let mut prof = profile(0.0, 1e-5);
    prof.effective_kill_fraction = 0.5;
    let p = 0.5 * per_from_ber(1e-5, 9600);
    let mut imp = Impairer::new(prof, 2).unwrap();
    let n = 400_000u64;
    let frac = (0..n).filter(|_| imp.draw_corruption(9600)).count() as f64 / n as f64;
    assert!((frac - p).abs() < 3.0 * binomial_std(p, n));
}

#[test]
fn corruption_seed_does_not_touch_delays() {
    let prof = profile(0.66, 1e-4);
    let mut a = Impairer::with_seeds(prof, 4, 100).unwrap();
    let mut b = Impairer::with_seeds(prof, 4, 200).unwrap();
    let mut differ = 0;
    for _ in 0..10_000 {
        assert_eq!(a.draw_delay(), b.draw_delay());
        differ += (a.draw_corruption(9600) != b.draw_corruption(9600)) as u32;
    }
    assert!(differ > 0);
}

proptest! {
    #[test]
    fn per_is_monotone(b1 in 0.0f64..0.01, b2 in 0.0f64..0.01, m in 0u64..20_000, n in 0u64..20_000) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(per_from_ber(lo, m) <= per_from_ber(hi, m));
        let (short, long) = if m <= n { (m, n) } else { (n, m) };
        prop_assert!(per_from_ber(lo, short) <= per_from_ber(lo, long));
    }

    #[test]
    fn per_composes_over_bit_counts(b in 0.0f64..0.001, m in 0u64..50_000, n in 0u64..50_000) {
        let joint = per_from_ber(b, m + n);
        let split = 1.0 - (1.0 - per_from_ber(b, m)) * (1.0 - per_from_ber(b, n));
        prop_assert!((joint - split).abs() <= 1e-12 * joint.max(1e-300) + 1e-15);
    }

    #[test]
    fn ber_inversion_round_trips(per in 1e-6f64..0.5, bits in 1u64..100_000) {
        let b = ber_from_per(per, bits);
        prop_assert!((per_from_ber(b, bits) / per - 1.0).abs() < 1e-9);
    }
}

#[test]
fn per_edge_cases() {
    assert_eq!(per_from_ber(0.0, 9600), 0.0);
    assert_eq!(per_from_ber(1.0, 1), 1.0);
    assert_eq!(per_from_ber(0.3, 0), 0.0);
    assert!((per_from_ber(1e-6, 9600) - 0.009554).abs() < 5e-7);
}
