//! Sampled complex-envelope signals and the spectral/power utilities every
//! stage builds on.
//!
//! Amplitudes are in sqrt(W): `|a|²` is instantaneous power in watts, summed
//! over polarizations. Each signal carries the absolute frequency its envelope
//! is referenced to and the band (relative to that center) that holds its
//! significant content, so frequency arithmetic can be checked against the
//! representable band `(-fs/2, +fs/2)`.

mod noise;
mod rng;
mod spectral;

pub use noise::{add_awgn, add_awgn_real, wiener_phase};
pub use rng::Rng;
pub use spectral::{apply_transfer, fft_freqs, resample, spectrum, Fft};

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::watt_to_dbm;

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pols: Vec<Vec<C64>>,
    sample_rate_hz: f64,
    center_freq_hz: f64,
    band_hz: (f64, f64),
}

impl Signal {
    /// Build a signal whose content is assumed to fill the representable band.
    pub fn new(pols: Vec<Vec<C64>>, sample_rate_hz: f64, center_freq_hz: f64) -> Result<Self> {
        let half = sample_rate_hz / 2.0;
        Self::with_band(pols, sample_rate_hz, center_freq_hz, (-half, half))
    }

    pub fn with_band(
        pols: Vec<Vec<C64>>,
        sample_rate_hz: f64,
        center_freq_hz: f64,
        band_hz: (f64, f64),
    ) -> Result<Self> {
        if pols.is_empty() || pols.len() > 2 {
            return Err(Error::invalid(format!(
                "signal must have 1 or 2 polarizations, got {}",
                pols.len()
            )));
        }
        if pols.iter().any(|p| p.len() != pols[0].len()) {
            return Err(Error::invalid("polarizations differ in length"));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid(format!("sample rate {sample_rate_hz} Hz")));
        }
        if !(center_freq_hz >= 0.0 && center_freq_hz.is_finite()) {
            return Err(Error::invalid(format!("center frequency {center_freq_hz} Hz")));
        }
        if band_hz.0 > band_hz.1 {
            return Err(Error::invalid("band lower edge above upper edge"));
        }
        let half = sample_rate_hz / 2.0;
        let band_hz = (band_hz.0.max(-half), band_hz.1.min(half));
        Ok(Self {
            pols,
            sample_rate_hz,
            center_freq_hz,
            band_hz,
        })
    }

    /// Constant-envelope tone at `offset_hz` from `center_freq_hz` with the
    /// given total power, spread equally over `n_pol` polarizations.
    pub fn tone(
        n: usize,
        n_pol: usize,
        sample_rate_hz: f64,
        center_freq_hz: f64,
        offset_hz: f64,
        power_w: f64,
    ) -> Result<Self> {
        let amp = (power_w / n_pol as f64).sqrt();
        let row: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(amp, 2.0 * PI * offset_hz * k as f64 / sample_rate_hz))
            .collect();
        Self::with_band(
            vec![row; n_pol],
            sample_rate_hz,
            center_freq_hz,
            (offset_hz, offset_hz),
        )
    }

    pub fn zeros(n: usize, n_pol: usize, sample_rate_hz: f64, center_freq_hz: f64) -> Result<Self> {
        Self::with_band(
            vec![vec![C64::new(0.0, 0.0); n]; n_pol],
            sample_rate_hz,
            center_freq_hz,
            (0.0, 0.0),
        )
    }

    pub fn n_pol(&self) -> usize {
        self.pols.len()
    }

    pub fn len(&self) -> usize {
        self.pols[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn center_freq_hz(&self) -> f64 {
        self.center_freq_hz
    }

    pub fn band_hz(&self) -> (f64, f64) {
        self.band_hz
    }

    pub fn pol(&self, i: usize) -> &[C64] {
        &self.pols[i]
    }

    pub fn pols(&self) -> &[Vec<C64>] {
        &self.pols
    }

    pub fn into_pols(self) -> Vec<Vec<C64>> {
        self.pols
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, pols: Vec<Vec<C64>>) -> Result<Self> {
        Self::with_band(pols, self.sample_rate_hz, self.center_freq_hz, self.band_hz)
    }

    pub fn set_band(mut self, band_hz: (f64, f64)) -> Self {
        let half = self.sample_rate_hz / 2.0;
        self.band_hz = (band_hz.0.max(-half), band_hz.1.min(half));
        self
    }

    pub fn full_band(self) -> Self {
        let half = self.sample_rate_hz / 2.0;
        self.set_band((-half, half))
    }

    pub fn set_center(mut self, center_freq_hz: f64) -> Self {
        self.center_freq_hz = center_freq_hz;
        self
    }

    /// Mean power in watts, summed over polarizations.
    pub fn power_w(&self) -> f64 {
        let n = self.len().max(1) as f64;
        self.pols
            .iter()
            .map(|p| p.iter().map(|a| a.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / n
    }

    pub fn pol_power_w(&self, i: usize) -> f64 {
        let n = self.len().max(1) as f64;
        self.pols[i].iter().map(|a| a.norm_sqr()).sum::<f64>() / n
    }

    /// Multiply every sample by a real factor.
    pub fn scale(&self, factor: f64) -> Self {
        self.map(|a| a * factor)
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        self.map(|a| a * factor)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        let pols = self
            .pols
            .iter()
            .map(|p| p.iter().map(|&a| f(a)).collect())
            .collect();
        Self {
            pols,
            ..self.clone_meta()
        }
    }

    pub fn conj(&self) -> Self {
        let b = self.band_hz;
        let mut s = self.map(|a| a.conj());
        s.band_hz = (-b.1, -b.0);
        s
    }

    /// Scale to an exact total power in watts.
    pub fn normalize_power(&self, power_w: f64) -> Result<Self> {
        let p = self.power_w();
        if p <= 0.0 {
            return Err(Error::invalid("cannot normalize a zero-power signal"));
        }
        Ok(self.scale((power_w / p).sqrt()))
    }

    /// Sample-wise sum of two signals with identical metadata layout.
    pub fn add(&self, other: &Signal) -> Result<Self> {
        self.check_compatible(other)?;
        let pols = self
            .pols
            .iter()
            .zip(&other.pols)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        let band = (
            self.band_hz.0.min(other.band_hz.0),
            self.band_hz.1.max(other.band_hz.1),
        );
        Signal::with_band(pols, self.sample_rate_hz, self.center_freq_hz, band)
    }

    pub fn sub(&self, other: &Signal) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn check_compatible(&self, other: &Signal) -> Result<()> {
        if self.n_pol() != other.n_pol() {
            return Err(Error::Polarization {
                expected: self.n_pol(),
                got: other.n_pol(),
            });
        }
        if self.len() != other.len() || self.sample_rate_hz != other.sample_rate_hz {
            return Err(Error::Incompatible(format!(
                "{} samples @ {} Hz vs {} samples @ {} Hz",
                self.len(),
                self.sample_rate_hz,
                other.len(),
                other.sample_rate_hz
            )));
        }
        Ok(())
    }

    fn clone_meta(&self) -> Self {
        Self {
            pols: Vec::new(),
            sample_rate_hz: self.sample_rate_hz,
            center_freq_hz: self.center_freq_hz,
            band_hz: self.band_hz,
        }
    }
}

/// Mean total power in dBm.
pub fn power_dbm(s: &Signal) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(watt_to_dbm(s.power_w()))
}

/// Rotate the envelope by `df_hz`; the reference center frequency is left
/// untouched. Fails if the shifted content would leave the representable band.
pub fn frequency_shift(s: &Signal, df_hz: f64) -> Result<Signal> {
    let half = s.sample_rate_hz / 2.0;
    let (lo, hi) = (s.band_hz.0 + df_hz, s.band_hz.1 + df_hz);
    if hi > half + 1e-9 * half {
        return Err(Error::Bandwidth {
            edge_hz: hi,
            limit_hz: half,
        });
    }
    if lo < -half - 1e-9 * half {
        return Err(Error::Bandwidth {
            edge_hz: lo,
            limit_hz: -half,
        });
    }
    let w = 2.0 * PI * df_hz / s.sample_rate_hz;
    let pols = s
        .pols
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(k, &a)| a * C64::from_polar(1.0, w * k as f64))
                .collect()
        })
        .collect();
    Signal::with_band(pols, s.sample_rate_hz, s.center_freq_hz, (lo, hi))
}

/// Re-reference the envelope to a new absolute center frequency. The physical
/// spectrum is unchanged.
pub fn rebase(s: &Signal, new_center_hz: f64) -> Result<Signal> {
    let shifted = frequency_shift(s, s.center_freq_hz - new_center_hz)?;
    Ok(shifted.set_center(new_center_hz))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cw(amp: f64, n_pol: usize) -> Signal {
        Signal::new(vec![vec![C64::new(amp, 0.0); 16]; n_pol], 1e9, 0.0).unwrap()
    }

    #[test]
    fn power_dbm_definitions() {
        assert!(power_dbm(&cw(1e-3f64.sqrt(), 1)).unwrap().abs() < 1e-12);
        assert!((power_dbm(&cw(1e-2f64.sqrt(), 1)).unwrap() - 10.0).abs() < 1e-12);
        assert!(power_dbm(&cw(0.5e-3f64.sqrt(), 2)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn power_dbm_empty_is_error() {
        let s = Signal::new(vec![vec![]], 1e9, 0.0).unwrap();
        assert!(matches!(power_dbm(&s), Err(Error::EmptySignal)));
    }

    #[test]
    fn shift_peak_lands_at_offset() {
        let s = Signal::tone(1000, 1, 100e9, 0.0, 0.0, 1e-3).unwrap();
        let out = frequency_shift(&s, 25e9).unwrap();
        let (freqs, psd) = spectrum(&out, 0);
        let peak = psd
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((freqs[peak] - 25e9).abs() < 1e-3);
        assert!((out.power_w() - s.power_w()).abs() < 1e-18);
    }

    #[test]
    fn shift_inverse_pair() {
        let mut rng = Rng::new(1, 0);
        let s = add_awgn(&Signal::zeros(512, 2, 100e9, 0.0).unwrap(), 1e-14, &mut rng)
            .unwrap()
            .set_band((-10e9, 10e9));
        let back = frequency_shift(&frequency_shift(&s, 13e9).unwrap(), -13e9).unwrap();
        for (a, b) in s.pol(0).iter().zip(back.pol(0)) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-30));
        }
    }

    #[test]
    fn shift_beyond_edge_names_edge() {
        let s = Signal::tone(64, 1, 100e9, 0.0, 40e9, 1e-3).unwrap();
        match frequency_shift(&s, 20e9) {
            Err(Error::Bandwidth { edge_hz, .. }) => assert!((edge_hz - 60e9).abs() < 1.0),
            other => panic!("expected bandwidth error, got {other:?}"),
        }
    }
}
