use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fiberchan::{dispersion_response, FiberSpec};
use crate::sigcore::{apply_transfer, wiener_phase, Rng, Signal, C64};
use crate::thz_ot::LoLaserSpec;
use crate::txchain::rrc_response;

/// Intradyne coherent front end: beats the optical field against a unit
/// amplitude local laser. The output is the electrical baseband (center 0)
/// carrying the frequency offset `f_signal − f_laser` and the laser phase noise.
pub fn coherent_rx(optical: &Signal, rx_laser: &LoLaserSpec, symbol_rate: f64, rng: &mut Rng) -> Result<Signal> {
    if optical.n_pol() != 2 {
        return Err(Error::Polarization {
            expected: 2,
            got: optical.n_pol(),
        });
    }
    let offset = optical.center_freq_hz() - rx_laser.freq_hz;
    if offset.abs() >= symbol_rate / 8.0 {
        return Err(Error::Estimation(format!(
            "frequency offset {:.3} MHz outside the ±{:.3} MHz capture range",
            offset / 1e6,
            symbol_rate / 8e6
        )));
    }
    let fs = optical.sample_rate_hz();
    let phase = wiener_phase(optical.len(), rx_laser.linewidth_hz, fs, rng);
    let w = 2.0 * PI * offset / fs;
    let lo: Vec<C64> = phase
        .iter()
        .enumerate()
        .map(|(k, p)| C64::from_polar(1.0, w * k as f64 - p))
        .collect();
    let pols = optical
        .pols()
        .iter()
        .map(|p| p.iter().zip(&lo).map(|(a, l)| a * l).collect())
        .collect();
    let (blo, bhi) = optical.band_hz();
    let half = fs / 2.0;
    let band = ((blo + offset).max(-half), (bhi + offset).min(half));
    Signal::with_band(pols, fs, 0.0, band)
}

/// Undo the chromatic dispersion of the listed spans with one all-pass
/// transfer. An empty list is the identity.
pub fn cd_compensate(s: &Signal, spans: &[FiberSpec]) -> Result<Signal> {
    if spans.is_empty() {
        return Ok(s.clone());
    }
    let inverse: Vec<_> = spans
        .iter()
        .map(|f| dispersion_response(-f.accumulated_ps_per_nm(), f.reference_wavelength_nm))
        .collect();
    apply_transfer(s, |f| inverse.iter().map(|h| h(f)).product())
}

/// RRC matched filter and decimation to two samples per symbol. Even output
/// samples sit on symbol centers.
pub fn matched_filter_2sps(
    s: &Signal,
    samples_per_symbol: usize,
    rolloff: f64,
    symbol_rate: f64,
) -> Result<Vec<Vec<C64>>> {
    if samples_per_symbol < 2 || samples_per_symbol % 2 != 0 {
        return Err(Error::invalid(format!(
            "receiver needs an even oversampling factor, got {samples_per_symbol}"
        )));
    }
    let g = (samples_per_symbol as f64).sqrt();
    let f = apply_transfer(s, |f| C64::new(g * rrc_response(f, symbol_rate, rolloff), 0.0))?;
    let step = samples_per_symbol / 2;
    Ok(f.pols().iter().map(|p| p.iter().step_by(step).copied().collect()).collect())
}

/// Scale all streams by one common factor so the mean power per stream is 1.
pub fn normalize_joint(streams: &mut [Vec<C64>]) {
    let n: usize = streams.iter().map(|s| s.len()).sum();
    let p: f64 = streams.iter().flatten().map(|a| a.norm_sqr()).sum::<f64>() / n.max(1) as f64;
    if p > 0.0 {
        let k = 1.0 / p.sqrt();
        streams.iter_mut().flatten().for_each(|a| *a *= k);
    }
}
