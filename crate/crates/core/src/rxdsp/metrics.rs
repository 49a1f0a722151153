use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::sigcore::{spectrum, Fft, Signal, C64};
use crate::units::{lin_to_db, OSNR_REF_BW_HZ};

/// Pre-FEC BER limit of the 15% SD-FEC (inclusive).
pub const FEC_THRESHOLD: f64 = 1.56e-2;
/// Net payload rate per channel after FEC framing.
pub const NET_RATE_GBPS: f64 = 103.125;
/// Fewer errors than this make the BER estimate low-confidence.
pub const LOW_CONFIDENCE_ERRORS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerResult {
    pub ber: f64,
    pub errors: usize,
    pub bits: usize,
    pub q_factor_db: f64,
    pub pre_fec_pass: bool,
    pub net_rate_gbps: f64,
    pub low_confidence: bool,
}

/// Q-factor from BER: `20·log10(√2·erfcinv(2·BER))`.
pub fn q_factor_db(ber: f64) -> f64 {
    if ber <= 0.0 {
        return f64::INFINITY;
    }
    if ber >= 0.5 {
        return f64::NEG_INFINITY;
    }
    20.0 * (2f64.sqrt() * erfc_inv(2.0 * ber)).log10()
}

pub fn ber_from_counts(errors: usize, bits: usize) -> Result<BerResult> {
    if bits == 0 {
        return Err(Error::Alignment("no bits to compare".into()));
    }
    let ber = errors as f64 / bits as f64;
    let pass = ber <= FEC_THRESHOLD;
    Ok(BerResult {
        ber,
        errors,
        bits,
        q_factor_db: q_factor_db(ber),
        pre_fec_pass: pass,
        net_rate_gbps: if pass { NET_RATE_GBPS } else { 0.0 },
        low_confidence: errors < LOW_CONFIDENCE_ERRORS,
    })
}

/// Count bit errors between aligned streams of equal length.
pub fn ber_count(rx_bits: &[u8], tx_bits: &[u8]) -> Result<BerResult> {
    if rx_bits.len() != tx_bits.len() {
        return Err(Error::Alignment(format!(
            "received {} bits, transmitted {}",
            rx_bits.len(),
            tx_bits.len()
        )));
    }
    let errors = rx_bits.iter().zip(tx_bits).filter(|(a, b)| a != b).count();
    ber_from_counts(errors, tx_bits.len())
}

/// Best alignment of a received stream against a known symbol sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    /// Received symbol `k + delay` corresponds to transmitted symbol `k`.
    pub delay: usize,
    /// Multiple of π/2 to remove from the received stream.
    pub quadrant: i32,
    /// Normalized correlation magnitude at the peak.
    pub score: f64,
}

/// Circular cross-correlation peak of `rx` against `tx`.
pub fn align(rx: &[C64], tx: &[C64]) -> Result<Alignment> {
    let n = tx.len();
    if n == 0 || rx.len() != n {
        return Err(Error::Alignment(format!(
            "stream lengths {} and {} cannot be aligned",
            rx.len(),
            n
        )));
    }
    let fft = Fft::new(n);
    let mut a = rx.to_vec();
    let mut b = tx.to_vec();
    fft.forward(&mut a);
    fft.forward(&mut b);
    let mut c: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x * y.conj()).collect();
    fft.inverse(&mut c);
    let (delay, peak) = c
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm_sqr().total_cmp(&y.1.norm_sqr()))
        .map(|(k, v)| (k, *v))
        .ok_or(Error::EmptySignal)?;
    let prx: f64 = rx.iter().map(|v| v.norm_sqr()).sum();
    let ptx: f64 = tx.iter().map(|v| v.norm_sqr()).sum();
    let score = if prx > 0.0 && ptx > 0.0 { peak.norm() / (prx * ptx).sqrt() } else { 0.0 };
    let quadrant = (peak.arg() / FRAC_PI_2).round() as i32;
    Ok(Alignment {
        delay,
        quadrant,
        score,
    })
}

/// Apply an alignment so the stream lines up with the transmitted symbols.
pub fn apply_alignment(rx: &[C64], a: &Alignment) -> Vec<C64> {
    let n = rx.len();
    let r = C64::from_polar(1.0, -(a.quadrant as f64) * FRAC_PI_2);
    (0..n).map(|k| rx[(k + a.delay) % n] * r).collect()
}

/// OSNR from a noisy signal and its noise-free twin: the noise is their
/// difference, measured in the 12.5 GHz reference band around the carrier
/// and summed over polarizations. Returns +∞ when the two are identical.
pub fn measure_osnr_ledger(noisy: &Signal, clean: &Signal) -> Result<f64> {
    let noise = noisy.sub(clean)?;
    let n = noise_in_reference_band(&noise);
    let p = clean.power_w();
    if n == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(lin_to_db(p / n))
}

fn noise_in_reference_band(noise: &Signal) -> f64 {
    (0..noise.n_pol())
        .map(|pol| {
            let (f, p) = spectrum(noise, pol);
            f.iter()
                .zip(&p)
                .filter(|(f, _)| f.abs() < OSNR_REF_BW_HZ / 2.0)
                .map(|(_, v)| v)
                .sum::<f64>()
        })
        .sum()
}

/// OSNR estimated from the noise floor outside the signal band
/// `|f| > signal_half_bw_hz`, assumed white across the record.
pub fn measure_osnr_out_of_band(s: &Signal, signal_half_bw_hz: f64) -> Result<f64> {
    let fs = s.sample_rate_hz();
    if signal_half_bw_hz >= fs / 2.0 {
        return Err(Error::Estimation("no signal-free spectral region for OSNR".into()));
    }
    let mut density = 0.0;
    let mut bins = 0usize;
    let mut total = 0.0;
    for pol in 0..s.n_pol() {
        let (f, p) = spectrum(s, pol);
        total += p.iter().sum::<f64>();
        for (fk, pk) in f.iter().zip(&p) {
            if fk.abs() > signal_half_bw_hz {
                density += pk;
                bins += 1;
            }
        }
    }
    if bins == 0 {
        return Err(Error::Estimation("no signal-free spectral region for OSNR".into()));
    }
    let df = fs / s.len() as f64;
    // mean per-bin noise per pol, scaled to the record and to 12.5 GHz
    let per_bin = density / bins as f64;
    let noise_total = per_bin * s.len() as f64 * s.n_pol() as f64;
    let noise_ref = per_bin * (OSNR_REF_BW_HZ / df) * s.n_pol() as f64;
    let signal = total - noise_total;
    if !(signal > 0.0) {
        return Err(Error::Estimation("signal power not above the noise floor".into()));
    }
    Ok(lin_to_db(signal / noise_ref))
}
