use std::f64::consts::PI;

use super::{Rng, Signal, C64};
use crate::error::{Error, Result};

/// Add circularly-symmetric complex Gaussian noise with power
/// `psd_w_per_hz × sample_rate` per polarization.
pub fn add_awgn(s: &Signal, psd_w_per_hz: f64, rng: &mut Rng) -> Result<Signal> {
    if psd_w_per_hz < 0.0 || !psd_w_per_hz.is_finite() {
        return Err(Error::invalid(format!("noise psd {psd_w_per_hz} W/Hz")));
    }
    if psd_w_per_hz == 0.0 {
        return Ok(s.clone());
    }
    let sigma = (psd_w_per_hz * s.sample_rate_hz() / 2.0).sqrt();
    let pols = s
        .pols()
        .iter()
        .map(|p| {
            p.iter()
                .map(|&a| a + C64::new(sigma * rng.normal(), sigma * rng.normal()))
                .collect()
        })
        .collect();
    Ok(s.with_samples(pols)?.full_band())
}

/// Add real Gaussian noise to a real passband signal (imaginary parts are
/// left at zero). `psd_w_per_hz` is one-sided, so the added power is
/// `psd × fs / 2` per polarization.
pub fn add_awgn_real(s: &Signal, psd_w_per_hz: f64, rng: &mut Rng) -> Result<Signal> {
    if psd_w_per_hz < 0.0 || !psd_w_per_hz.is_finite() {
        return Err(Error::invalid(format!("noise psd {psd_w_per_hz} W/Hz")));
    }
    if psd_w_per_hz == 0.0 {
        return Ok(s.clone());
    }
    let sigma = (psd_w_per_hz * s.sample_rate_hz() / 2.0).sqrt();
    let pols = s
        .pols()
        .iter()
        .map(|p| p.iter().map(|&a| a + C64::new(sigma * rng.normal(), 0.0)).collect())
        .collect();
    Ok(s.with_samples(pols)?.full_band())
}

/// Wiener phase process with increment variance `2π·linewidth/fs` and a
/// uniformly random starting phase.
pub fn wiener_phase(n: usize, linewidth_hz: f64, sample_rate_hz: f64, rng: &mut Rng) -> Vec<f64> {
    let start = 2.0 * PI * rng.uniform();
    let sigma = (2.0 * PI * linewidth_hz / sample_rate_hz).sqrt();
    let mut phase = start;
    (0..n)
        .map(|_| {
            let cur = phase;
            if sigma > 0.0 {
                phase += sigma * rng.normal();
            }
            cur
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcore::power_dbm;

    #[test]
    fn zero_psd_is_bit_identical() {
        let s = Signal::tone(128, 2, 1e9, 0.0, 1e6, 1e-3).unwrap();
        let out = add_awgn(&s, 0.0, &mut Rng::new(1, 1)).unwrap();
        assert_eq!(s, out);
    }

    #[test]
    fn negative_psd_rejected() {
        let s = Signal::zeros(8, 1, 1e9, 0.0).unwrap();
        assert!(add_awgn(&s, -1.0, &mut Rng::new(1, 1)).is_err());
    }

    #[test]
    fn noise_power_matches_psd() {
        let fs = 100e9;
        let s = Signal::zeros(1_000_000, 1, fs, 0.0).unwrap();
        let out = add_awgn(&s, 1e-3 / fs, &mut Rng::new(3, 0)).unwrap();
        assert!(power_dbm(&out).unwrap().abs() < 0.05);
    }

    #[test]
    fn snr_construction() {
        let fs = 10e9;
        let s = Signal::tone(1_000_000, 1, fs, 0.0, 0.0, 1e-3).unwrap();
        let psd = 1e-3 / 100.0 / fs;
        let out = add_awgn(&s, psd, &mut Rng::new(5, 0)).unwrap();
        let noise = out.sub(&s).unwrap();
        let snr = 10.0 * (s.power_w() / noise.power_w()).log10();
        assert!((snr - 20.0).abs() < 0.2, "snr {snr}");
    }

    #[test]
    fn wiener_increment_statistics() {
        let fs = 31.379e9;
        let lw = 100e3;
        let ph = wiener_phase(1_000_001, lw, fs, &mut Rng::new(9, 2));
        let inc: Vec<f64> = ph.windows(2).map(|w| w[1] - w[0]).collect();
        let n = inc.len() as f64;
        let mean = inc.iter().sum::<f64>() / n;
        let var = inc.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        let expected = 2.0 * PI * lw / fs;
        assert!(mean.abs() < 5.0 * (expected / n).sqrt());
        assert!((var / expected - 1.0).abs() < 0.1);
    }
}
