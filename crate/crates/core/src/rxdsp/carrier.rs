use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::sigcore::{Fft, C64};

/// Peak-to-median ratio the 4th-power spectrum must reach for a valid estimate.
const FOE_SIGNIFICANCE: f64 = 20.0;

/// 4th-power frequency-offset estimate over up to `fft_size` symbols of every
/// stream (spectra summed). Returns the offset in Hz; resolution is
/// `symbol_rate / (4·fft_size)`.
pub fn freq_offset_estimate(streams: &[Vec<C64>], symbol_rate: f64, fft_size: usize) -> Result<f64> {
    if fft_size < 16 || !fft_size.is_power_of_two() {
        return Err(Error::invalid(format!("FOE FFT size {fft_size} must be a power of two >= 16")));
    }
    let fft = Fft::new(fft_size);
    let mut acc = vec![0.0; fft_size];
    for s in streams {
        let mut buf: Vec<C64> = s.iter().take(fft_size).map(|v| v.powi(4)).collect();
        buf.resize(fft_size, C64::new(0.0, 0.0));
        fft.forward(&mut buf);
        acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b.norm_sqr());
    }
    let (k, peak) = acc
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::EmptySignal)?;
    let mut sorted = acc.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[fft_size / 2];
    if !(peak > FOE_SIGNIFICANCE * median) {
        return Err(Error::Estimation(format!(
            "4th-power spectral peak only {:.1}× the median",
            peak / median
        )));
    }
    let bin = if k < fft_size / 2 { k as f64 } else { k as f64 - fft_size as f64 };
    Ok(bin * symbol_rate / fft_size as f64 / 4.0)
}

/// Remove a frequency offset from a 1-sample/symbol stream.
pub fn remove_offset(s: &[C64], offset_hz: f64, symbol_rate: f64) -> Vec<C64> {
    let w = -2.0 * PI * offset_hz / symbol_rate;
    s.iter()
        .enumerate()
        .map(|(k, v)| v * C64::from_polar(1.0, w * k as f64))
        .collect()
}

/// Block Viterbi–Viterbi phase recovery for QPSK, estimates unwrapped across
/// blocks so the residual ambiguity is one constant multiple of π/2.
pub fn carrier_phase_recover(s: &[C64], block_size: usize) -> Result<Vec<C64>> {
    if block_size < 4 {
        return Err(Error::invalid(format!("CPE block size {block_size} < 4")));
    }
    let mut out = Vec::with_capacity(s.len());
    let mut prev: Option<f64> = None;
    for block in s.chunks(block_size) {
        let sum: C64 = block.iter().map(|v| v.powi(4)).sum();
        let mut theta = (-sum).arg() / 4.0;
        if let Some(p) = prev {
            theta += FRAC_PI_2 * ((p - theta) / FRAC_PI_2).round();
        }
        prev = Some(theta);
        let rot = C64::from_polar(1.0, -theta);
        out.extend(block.iter().map(|v| v * rot));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcore::{wiener_phase, Rng};
    use crate::txchain::{qpsk_demap, qpsk_map};

    const RS: f64 = 31.379e9;

    fn symbols(n: usize, seed: u64) -> (Vec<u8>, Vec<C64>) {
        let mut rng = Rng::new(seed, 0);
        let bits: Vec<u8> = (0..2 * n).map(|_| rng.bit()).collect();
        let s = qpsk_map(&bits).unwrap();
        (bits, s)
    }

    fn rotate_to_best(s: &[C64], tx: &[C64]) -> Vec<C64> {
        let c: C64 = s.iter().zip(tx).map(|(a, b)| a * b.conj()).sum();
        let k = (c.arg() / FRAC_PI_2).round();
        let r = C64::from_polar(1.0, -k * FRAC_PI_2);
        s.iter().map(|v| v * r).collect()
    }

    #[test]
    fn recovers_constructed_offsets() {
        let (_, s) = symbols(1 << 16, 1);
        let shifted = remove_offset(&s, -200e6, RS);
        let est = freq_offset_estimate(&[shifted], RS, 1 << 16).unwrap();
        assert!((est - 200e6).abs() < 2e6, "{est}");
        let zero = freq_offset_estimate(&[s], RS, 1 << 16).unwrap();
        assert!(zero.abs() < RS / (4.0 * 65536.0));
    }

    #[test]
    fn foe_rejects_pure_noise() {
        let mut rng = Rng::new(2, 0);
        let noise: Vec<C64> = (0..4096).map(|_| C64::new(rng.normal(), rng.normal())).collect();
        assert!(matches!(
            freq_offset_estimate(&[noise], RS, 4096),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn static_phase_removed() {
        let (bits, s) = symbols(8192, 3);
        let rotated: Vec<C64> = s.iter().map(|v| v * C64::from_polar(1.0, PI / 7.0)).collect();
        let rec = rotate_to_best(&carrier_phase_recover(&rotated, 64).unwrap(), &s);
        assert_eq!(qpsk_demap(&rec), bits);
    }

    #[test]
    fn small_residual_ramp_absorbed() {
        let (bits, s) = symbols(1 << 16, 4);
        let ramp = remove_offset(&s, -0.8e6, RS);
        let rec = rotate_to_best(&carrier_phase_recover(&ramp, 64).unwrap(), &s);
        assert_eq!(qpsk_demap(&rec), bits);
    }

    #[test]
    fn cycle_slip_free_with_laser_phase_noise() {
        let n = 1 << 16;
        let (_, s) = symbols(n, 5);
        let mut clean = 0;
        for seed in 0..100 {
            let ph = wiener_phase(n, 400e3, RS, &mut Rng::new(seed, 9));
            let noisy: Vec<C64> = s.iter().zip(&ph).map(|(v, p)| v * C64::from_polar(1.0, *p)).collect();
            let rec = carrier_phase_recover(&noisy, 64).unwrap();
            // with no slip the residual rotation is one constant multiple of π/2
            let c: C64 = rec.iter().zip(&s).map(|(a, b)| a * b.conj()).sum();
            let k = (c.arg() / FRAC_PI_2).round();
            let r = C64::from_polar(1.0, -k * FRAC_PI_2);
            let ok = rec.iter().zip(&s).all(|(a, b)| (a * r - b).norm() < 0.5);
            clean += usize::from(ok);
        }
        assert!(clean >= 95, "{clean}");
    }
}
