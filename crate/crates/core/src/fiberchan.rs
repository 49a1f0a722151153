//! Linear optical components: SSMF spans, EDFAs, VOA, tunable optical
//! filters and polarization elements.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sigcore::{add_awgn, apply_transfer, Rng, Signal, C64};
use crate::units::{db_to_amplitude, db_to_lin, dbm_to_watt, lin_to_db, PLANCK, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub length_km: f64,
    pub atten_db_per_km: f64,
    pub dispersion_ps_per_nm_km: f64,
    pub reference_wavelength_nm: f64,
}

impl Default for FiberSpec {
    fn default() -> Self {
        Self {
            length_km: 20.0,
            atten_db_per_km: 0.2,
            dispersion_ps_per_nm_km: 17.0,
            reference_wavelength_nm: 1550.0,
        }
    }
}

impl FiberSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length_km < 0.0 || self.atten_db_per_km < 0.0 {
            return Err(Error::invalid("fiber length and attenuation must be non-negative"));
        }
        Ok(())
    }

    pub fn loss_db(&self) -> f64 {
        self.length_km * self.atten_db_per_km
    }

    /// Accumulated dispersion D·L in ps/nm.
    pub fn accumulated_ps_per_nm(&self) -> f64 {
        self.dispersion_ps_per_nm_km * self.length_km
    }

    /// Same span with the dispersion sign flipped, as seen through a
    /// spectral inversion.
    pub fn inverted(&self) -> Self {
        Self {
            dispersion_ps_per_nm_km: -self.dispersion_ps_per_nm_km,
            ..self.clone()
        }
    }
}

/// All-pass chromatic dispersion response for `accumulated` ps/nm:
/// `exp(+j·π·D·L·λ²·f²/c)`.
pub fn dispersion_response(accumulated_ps_per_nm: f64, wavelength_nm: f64) -> impl Fn(f64) -> C64 {
    // ps/nm -> s/m
    let dl = accumulated_ps_per_nm * 1e-12 / 1e-9;
    let lambda = wavelength_nm * 1e-9;
    let k = PI * dl * lambda * lambda / SPEED_OF_LIGHT;
    move |f| C64::from_polar(1.0, k * f * f)
}

pub fn ssmf_propagate(s: &Signal, f: &FiberSpec) -> Result<Signal> {
    f.validate()?;
    let band = s.band_hz();
    let h = dispersion_response(f.accumulated_ps_per_nm(), f.reference_wavelength_nm);
    let amp = db_to_amplitude(-f.loss_db());
    Ok(apply_transfer(s, |freq| h(freq) * amp)?.set_band(band))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmpMode {
    FixedGain,
    FixedOutputPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmpSpec {
    pub mode: AmpMode,
    /// Gain in fixed-gain mode, or target output power in dBm otherwise.
    pub value: f64,
    /// `None` is the noiseless sentinel.
    pub noise_figure_db: Option<f64>,
}

impl AmpSpec {
    pub fn fixed_gain(gain_db: f64, noise_figure_db: Option<f64>) -> Self {
        Self {
            mode: AmpMode::FixedGain,
            value: gain_db,
            noise_figure_db,
        }
    }

    pub fn fixed_output(power_dbm: f64, noise_figure_db: Option<f64>) -> Self {
        Self {
            mode: AmpMode::FixedOutputPower,
            value: power_dbm,
            noise_figure_db,
        }
    }

    /// Linear gain for a given total input power.
    pub fn gain_for_input(&self, input_w: f64) -> Result<f64> {
        match self.mode {
            AmpMode::FixedGain => {
                if self.value < 0.0 {
                    return Err(Error::invalid(format!("fixed gain {} dB < 0", self.value)));
                }
                Ok(db_to_lin(self.value))
            }
            AmpMode::FixedOutputPower => {
                let target = dbm_to_watt(self.value);
                if input_w <= 0.0 {
                    return Err(Error::invalid("fixed-output amplifier with zero input power"));
                }
                if target < input_w * (1.0 - 1e-12) {
                    return Err(Error::invalid(format!(
                        "fixed-output target {:.3} dBm below input {:.3} dBm",
                        self.value,
                        crate::units::watt_to_dbm(input_w)
                    )));
                }
                Ok(target / input_w)
            }
        }
    }
}

/// ASE PSD per polarization added at the amplifier output:
/// `(NF·G − 1)·h·ν/2`, clamped at zero.
pub fn ase_psd_per_pol(gain_lin: f64, noise_figure_db: Option<f64>, optical_freq_hz: f64) -> f64 {
    match noise_figure_db {
        None => 0.0,
        Some(nf) => ((db_to_lin(nf) * gain_lin - 1.0) * PLANCK * optical_freq_hz / 2.0).max(0.0),
    }
}

/// Single-signal EDFA.
pub fn edfa(s: &Signal, a: &AmpSpec, rng: &mut Rng) -> Result<Signal> {
    let g = a.gain_for_input(s.power_w())?;
    let psd = ase_psd_per_pol(g, a.noise_figure_db, s.center_freq_hz());
    add_awgn(&s.scale(g.sqrt()), psd, rng)
}

/// EDFA on a set of co-propagating members (channels, LO): the gain is set
/// by their summed power and ASE is added around every member.
pub fn edfa_ensemble(members: &[Signal], a: &AmpSpec, rng: &mut Rng) -> Result<Vec<Signal>> {
    let total: f64 = members.iter().map(|m| m.power_w()).sum();
    let g = a.gain_for_input(total)?;
    members
        .iter()
        .map(|m| {
            let psd = ase_psd_per_pol(g, a.noise_figure_db, m.center_freq_hz());
            add_awgn(&m.scale(g.sqrt()), psd, rng)
        })
        .collect()
}

pub fn voa(s: &Signal, attenuation_db: f64) -> Result<Signal> {
    if !(attenuation_db >= 0.0) {
        return Err(Error::invalid(format!("VOA attenuation {attenuation_db} dB < 0")));
    }
    Ok(s.scale(db_to_amplitude(-attenuation_db)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TofSpec {
    pub center_freq_hz: f64,
    pub bandwidth_hz: f64,
    #[serde(default = "default_tof_order")]
    pub order: u32,
    #[serde(default = "default_rejection")]
    pub stop_band_rejection_db: f64,
}

fn default_tof_order() -> u32 {
    3
}

fn default_rejection() -> f64 {
    40.0
}

impl TofSpec {
    pub fn new(center_freq_hz: f64, bandwidth_hz: f64) -> Self {
        Self {
            center_freq_hz,
            bandwidth_hz,
            order: default_tof_order(),
            stop_band_rejection_db: default_rejection(),
        }
    }

    /// Amplitude response at an absolute optical frequency.
    pub fn response(&self, abs_freq_hz: f64) -> f64 {
        let x = (abs_freq_hz - self.center_freq_hz) / (self.bandwidth_hz / 2.0);
        let floor = db_to_amplitude(-self.stop_band_rejection_db);
        (-0.5 * x.abs().powi(2 * self.order as i32)).exp().max(floor)
    }

    /// Half-width (from center) over which the response is above its floor.
    pub fn skirt_half_width_hz(&self) -> f64 {
        let floor_ln = self.stop_band_rejection_db / 20.0 * std::f64::consts::LN_10;
        self.bandwidth_hz / 2.0 * (2.0 * floor_ln).powf(1.0 / (2.0 * self.order as f64))
    }
}

/// Super-Gaussian tunable optical filter. The declared content band of the
/// output shrinks to the part of the filter skirt above the stop-band floor.
pub fn tof_filter(s: &Signal, t: &TofSpec) -> Result<Signal> {
    if !(t.bandwidth_hz > 0.0) || t.order == 0 {
        return Err(Error::invalid("TOF bandwidth and order must be positive"));
    }
    let fc = s.center_freq_hz();
    let (lo, hi) = s.band_hz();
    let w = t.skirt_half_width_hz();
    let pass_lo = t.center_freq_hz - fc - t.bandwidth_hz / 2.0;
    let pass_hi = t.center_freq_hz - fc + t.bandwidth_hz / 2.0;
    if pass_hi <= lo || pass_lo >= hi {
        return Err(Error::FilterDisjoint {
            lo_hz: t.center_freq_hz - t.bandwidth_hz / 2.0,
            hi_hz: t.center_freq_hz + t.bandwidth_hz / 2.0,
        });
    }
    let out = apply_transfer(s, |f| C64::new(t.response(fc + f), 0.0))?;
    let new_band = (lo.max(t.center_freq_hz - fc - w), hi.min(t.center_freq_hz - fc + w));
    Ok(out.set_band(new_band))
}

/// Unitary Jones rotation: angle θ with differential phase φ.
pub fn pol_rotate(s: &Signal, theta_rad: f64, phi_rad: f64) -> Result<Signal> {
    if s.n_pol() != 2 {
        return Err(Error::Polarization {
            expected: 2,
            got: s.n_pol(),
        });
    }
    let (c, sn) = (theta_rad.cos(), theta_rad.sin());
    let e = C64::from_polar(1.0, phi_rad);
    let m = [[C64::new(c, 0.0), -sn * e.conj()], [sn * e, C64::new(c, 0.0)]];
    let (x, y) = (s.pol(0), s.pol(1));
    let nx = x.iter().zip(y).map(|(a, b)| m[0][0] * a + m[0][1] * b).collect();
    let ny = x.iter().zip(y).map(|(a, b)| m[1][0] * a + m[1][1] * b).collect();
    s.with_samples(vec![nx, ny])
}

/// Project a dual-polarization field onto the X and Y axes.
pub fn pbs_split(s: &Signal) -> Result<(Signal, Signal)> {
    if s.n_pol() != 2 {
        return Err(Error::Polarization {
            expected: 2,
            got: s.n_pol(),
        });
    }
    Ok((
        s.with_samples(vec![s.pol(0).to_vec()])?,
        s.with_samples(vec![s.pol(1).to_vec()])?,
    ))
}

/// Relative power change in dB between two signals.
pub fn power_change_db(before: &Signal, after: &Signal) -> f64 {
    lin_to_db(after.power_w() / before.power_w())
}
