//! Optical-to-THz conversion.
//!
//! Channels are coupled with a CW optical LO, split by polarization and
//! photomixed in antenna-integrated UTC-PD modules. The square-law detector
//! is treated per channel: the THz envelope of channel `k` is the beat
//! `E_k · conj(E_LO)`, scaled by responsivity and conversion efficiency and
//! compressed by a smooth saturation law on the total envelope power reaching
//! the photodiode. Signal-signal products (e.g. the 50 GHz Ch1×Ch2 beat) fall
//! outside the THz windows and are dropped.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiberchan::{edfa_ensemble, pbs_split, AmpSpec};
use crate::sigcore::{wiener_phase, Rng, Signal, C64};
use crate::units::{db_to_amplitude, dbm_to_watt};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoLaserSpec {
    pub freq_hz: f64,
    pub power_dbm: f64,
    pub linewidth_hz: f64,
}

impl Default for LoLaserSpec {
    fn default() -> Self {
        Self {
            freq_hz: 193.115e12,
            power_dbm: 13.5,
            linewidth_hz: 100e3,
        }
    }
}

/// CW laser field with Wiener phase noise, linearly polarized at
/// `pol_angle_rad` from the X axis (2-pol output).
pub fn laser_field(
    freq_hz: f64,
    power_dbm: f64,
    linewidth_hz: f64,
    pol_angle_rad: f64,
    n: usize,
    sample_rate_hz: f64,
    rng: &mut Rng,
) -> Result<Signal> {
    if !(freq_hz > 0.0) || !power_dbm.is_finite() {
        return Err(Error::invalid("laser frequency must be positive and power finite"));
    }
    let amp = dbm_to_watt(power_dbm).sqrt();
    let phase = wiener_phase(n, linewidth_hz, sample_rate_hz, rng);
    let (cx, cy) = (pol_angle_rad.cos(), pol_angle_rad.sin());
    let x = phase.iter().map(|&p| C64::from_polar(amp * cx, p)).collect();
    let y = phase.iter().map(|&p| C64::from_polar(amp * cy, p)).collect();
    Signal::with_band(vec![x, y], sample_rate_hz, freq_hz, (0.0, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdSpec {
    pub responsivity_a_per_w: f64,
    /// Saturation onset of the total input power; `None` disables compression.
    pub sat_input_power_dbm: Option<f64>,
    pub compression_knee_sharpness: f64,
    /// THz output power per unit beat photocurrent squared, W/A².
    pub conversion_efficiency: f64,
    /// Admissible THz bands `[lo, hi]` in Hz.
    pub bands_hz: Vec<[f64; 2]>,
}

impl Default for PdSpec {
    fn default() -> Self {
        Self {
            responsivity_a_per_w: 0.5,
            sat_input_power_dbm: Some(13.1),
            compression_knee_sharpness: 2.0,
            conversion_efficiency: 8.0,
            bands_hz: vec![[300e9, 500e9]],
        }
    }
}

impl PdSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.responsivity_a_per_w > 0.0) {
            return Err(Error::invalid("responsivity must be positive"));
        }
        if !(self.compression_knee_sharpness >= 1.0) {
            return Err(Error::invalid("knee sharpness must be >= 1"));
        }
        if !(self.conversion_efficiency > 0.0) {
            return Err(Error::invalid("conversion efficiency must be positive"));
        }
        Ok(())
    }

    pub fn admits(&self, freq_hz: f64) -> bool {
        self.bands_hz.iter().any(|b| freq_hz >= b[0] && freq_hz <= b[1])
    }

    /// Field compression factor for a total input power in watts:
    /// `(1 + (P/Psat)^(2k))^(−1/(2k))`.
    pub fn compression(&self, input_w: f64) -> f64 {
        match self.sat_input_power_dbm {
            None => 1.0,
            Some(sat) => {
                let k2 = 2.0 * self.compression_knee_sharpness;
                let x = input_w / dbm_to_watt(sat);
                (1.0 + x.powf(k2)).powf(-1.0 / k2)
            }
        }
    }
}

/// Channels and optical LO travelling together after the coupler.
#[derive(Debug, Clone)]
pub struct CoupledEnsemble {
    pub channels: Vec<Signal>,
    pub lo: Signal,
}

impl CoupledEnsemble {
    pub fn members(&self) -> impl Iterator<Item = &Signal> {
        self.channels.iter().chain(std::iter::once(&self.lo))
    }

    pub fn total_power_w(&self) -> f64 {
        self.members().map(|m| m.power_w()).sum()
    }

    pub fn signal_power_w(&self) -> f64 {
        self.channels.iter().map(|m| m.power_w()).sum()
    }

    /// Beat frequencies `f_ch − f_LO` for each channel.
    pub fn beat_freqs_hz(&self) -> Vec<f64> {
        self.channels
            .iter()
            .map(|c| c.center_freq_hz() - self.lo.center_freq_hz())
            .collect()
    }

    pub fn map(&self, f: impl Fn(&Signal) -> Result<Signal>) -> Result<Self> {
        Ok(Self {
            channels: self.channels.iter().map(&f).collect::<Result<_>>()?,
            lo: f(&self.lo)?,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            channels: self.channels.iter().map(|c| c.scale(factor)).collect(),
            lo: self.lo.scale(factor),
        }
    }

    pub fn amplify(&self, a: &AmpSpec, rng: &mut Rng) -> Result<Self> {
        let members: Vec<Signal> = self.members().cloned().collect();
        let mut out = edfa_ensemble(&members, a, rng)?;
        let lo = out.pop().ok_or_else(|| Error::invalid("empty ensemble"))?;
        Ok(Self { channels: out, lo })
    }

    /// Polarization-diversity split into X and Y branches.
    pub fn pbs_split(&self) -> Result<(Self, Self)> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for c in &self.channels {
            let (x, y) = pbs_split(c)?;
            xs.push(x);
            ys.push(y);
        }
        let (lx, ly) = pbs_split(&self.lo)?;
        Ok((Self { channels: xs, lo: lx }, Self { channels: ys, lo: ly }))
    }
}

/// Combine channels with the optical LO, applying `coupler_loss_db` to every
/// member.
pub fn couple(channels: &[Signal], lo: &Signal, coupler_loss_db: f64) -> Result<CoupledEnsemble> {
    if channels.is_empty() {
        return Err(Error::invalid("coupler needs at least one channel"));
    }
    let mut freqs: Vec<f64> = Vec::new();
    for c in channels {
        lo.check_compatible(c)?;
        let f = c.center_freq_hz();
        if f == lo.center_freq_hz() || freqs.contains(&f) {
            return Err(Error::invalid(format!(
                "duplicate center frequency {f:.6e} Hz in coupler (degenerate beat)"
            )));
        }
        freqs.push(f);
    }
    let g = db_to_amplitude(-coupler_loss_db);
    Ok(CoupledEnsemble {
        channels: channels.iter().map(|c| c.scale(g)).collect(),
        lo: lo.scale(g),
    })
}

/// Scale a branch for polarization misalignment at a polarization-sensitive
/// photomixer: field × cos(angle).
pub fn polarization_sensitivity_loss(branch: &CoupledEnsemble, misalignment_rad: f64) -> Result<CoupledEnsemble> {
    if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&misalignment_rad) {
        return Err(Error::invalid(format!(
            "misalignment {misalignment_rad} rad outside [0, π/2]"
        )));
    }
    Ok(branch.scale(misalignment_rad.cos()))
}

/// Photomix one polarization branch. Returns one THz envelope per channel,
/// centered at `f_ch − f_LO`.
pub fn photomix(branch: &CoupledEnsemble, pd: &PdSpec) -> Result<Vec<Signal>> {
    pd.validate()?;
    if branch.members().any(|m| m.n_pol() != 1) {
        return Err(Error::invalid("photomixer input must be a single-polarization branch"));
    }
    for f in branch.beat_freqs_hz() {
        if !pd.admits(f) {
            return Err(Error::FrequencyPlan(format!(
                "beat at {:.3} GHz outside the photomixer bands",
                f / 1e9
            )));
        }
    }
    let n = branch.lo.len();
    let mut p_in = vec![0.0; n];
    for m in branch.members() {
        for (acc, a) in p_in.iter_mut().zip(m.pol(0)) {
            *acc += a.norm_sqr();
        }
    }
    let scale: Vec<f64> = p_in.iter().map(|&p| pd.compression(p)).collect();
    let k = pd.conversion_efficiency.sqrt() * 2.0 * pd.responsivity_a_per_w;
    let lo = branch.lo.pol(0);
    let (llo, lhi) = branch.lo.band_hz();
    branch
        .channels
        .iter()
        .map(|c| {
            let env: Vec<C64> = c
                .pol(0)
                .iter()
                .zip(lo)
                .zip(&scale)
                .map(|((e, l), s)| e * l.conj() * (k * s))
                .collect();
            let (clo, chi) = c.band_hz();
            Signal::with_band(
                vec![env],
                c.sample_rate_hz(),
                c.center_freq_hz() - branch.lo.center_freq_hz(),
                (clo - lhi, chi - llo),
            )
        })
        .collect()
}
