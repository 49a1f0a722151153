//! THz-to-optical conversion: ×N LO mixers down to a real IF, LNAs, OCS
//! remodulation on a dual-polarization MZM and optical sideband selection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiberchan::{tof_filter, TofSpec};
use crate::sigcore::{add_awgn_real, apply_transfer, rebase, wiener_phase, Rng, Signal, C64};
use crate::thz_ot::laser_field;
use crate::units::{db_to_amplitude, BOLTZMANN, T0_KELVIN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixerSpec {
    pub lo_fundamental_hz: f64,
    #[serde(default = "default_mult")]
    pub mult_factor: u32,
    #[serde(default = "default_conversion_loss")]
    pub conversion_loss_db: f64,
    #[serde(default = "default_if_bandwidth")]
    pub if_bandwidth_hz: f64,
    /// Fundamental LO linewidth; the multiplied LO carries `mult²` times this.
    #[serde(default = "default_lo_linewidth")]
    pub lo_phase_noise_linewidth_hz: f64,
}

fn default_mult() -> u32 {
    12
}

fn default_conversion_loss() -> f64 {
    8.0
}

fn default_if_bandwidth() -> f64 {
    40e9
}

fn default_lo_linewidth() -> f64 {
    1e3
}

impl MixerSpec {
    pub fn new(lo_fundamental_hz: f64) -> Self {
        Self {
            lo_fundamental_hz,
            mult_factor: default_mult(),
            conversion_loss_db: default_conversion_loss(),
            if_bandwidth_hz: default_if_bandwidth(),
            lo_phase_noise_linewidth_hz: default_lo_linewidth(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mult_factor < 1 {
            return Err(Error::invalid("multiplier factor must be >= 1"));
        }
        if !(self.lo_fundamental_hz > 0.0) || !(self.if_bandwidth_hz > 0.0) {
            return Err(Error::invalid("mixer LO and IF bandwidth must be positive"));
        }
        if !(self.lo_phase_noise_linewidth_hz >= 0.0) {
            return Err(Error::invalid("mixer LO linewidth must be non-negative"));
        }
        Ok(())
    }

    /// Multiplied LO frequency, rounded to the Hz.
    pub fn multiplied_lo_hz(&self) -> f64 {
        (self.mult_factor as f64 * self.lo_fundamental_hz).round()
    }

    /// IF for an RF carrier and whether the mixing inverts the spectrum.
    pub fn intermediate(&self, rf_hz: f64) -> (f64, bool) {
        let lo = self.multiplied_lo_hz();
        ((rf_hz - lo).abs(), lo > rf_hz)
    }
}

#[derive(Debug, Clone)]
pub struct MixOutput {
    /// Real IF passband samples, center frequency 0.
    pub signal: Signal,
    pub inverted: bool,
    pub if_hz: f64,
}

fn one_pole(bandwidth_hz: f64) -> impl Fn(f64) -> C64 {
    move |f| C64::new(1.0, f / bandwidth_hz).inv()
}

fn real_part(s: &Signal) -> Result<Signal> {
    let pols = s
        .pols()
        .iter()
        .map(|p| p.iter().map(|a| C64::new(a.re, 0.0)).collect())
        .collect();
    s.with_samples(pols)
}

fn is_real(s: &Signal) -> bool {
    s.center_freq_hz() == 0.0 && s.pols().iter().flatten().all(|a| a.im == 0.0)
}

/// Down-convert a single-polarization THz envelope to a real IF.
pub fn mix_down(thz: &Signal, m: &MixerSpec, rng: &mut Rng) -> Result<MixOutput> {
    m.validate()?;
    if thz.n_pol() != 1 {
        return Err(Error::Polarization {
            expected: 1,
            got: thz.n_pol(),
        });
    }
    let (if_hz, inverted) = m.intermediate(thz.center_freq_hz());
    if if_hz >= m.if_bandwidth_hz {
        return Err(Error::FrequencyPlan(format!(
            "IF {:.6} GHz outside the {:.3} GHz receiver bandwidth",
            if_hz / 1e9,
            m.if_bandwidth_hz / 1e9
        )));
    }
    let fs = thz.sample_rate_hz();
    let env = if inverted { thz.conj() } else { thz.clone() };
    let (lo, hi) = env.band_hz();
    let keep = (lo.max(-if_hz), hi.min(fs / 2.0 - if_hz));
    if keep.0 >= keep.1 {
        return Err(Error::Bandwidth {
            edge_hz: if_hz + lo,
            limit_hz: fs / 2.0,
        });
    }
    let env = apply_transfer(&env, |f| {
        if f > -if_hz && f < fs / 2.0 - if_hz {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })?;
    let lw = m.lo_phase_noise_linewidth_hz * (m.mult_factor as f64).powi(2);
    let phase = wiener_phase(env.len(), lw, fs, rng);
    let w = 2.0 * PI * if_hz / fs;
    let g = 2f64.sqrt() * db_to_amplitude(-m.conversion_loss_db);
    let samples: Vec<C64> = env
        .pol(0)
        .iter()
        .zip(&phase)
        .enumerate()
        .map(|(k, (a, p))| C64::new((a * C64::from_polar(g, w * k as f64 - p)).re, 0.0))
        .collect();
    let edge = (if_hz + keep.1).max(if_hz - keep.0.min(0.0));
    let real = Signal::with_band(vec![samples], fs, 0.0, (-edge, edge))?;
    let signal = real_part(&apply_transfer(&real, one_pole(m.if_bandwidth_hz))?)?;
    Ok(MixOutput {
        signal,
        inverted,
        if_hz,
    })
}

/// Electrical amplifier with input-referred thermal noise `k·T0·F`.
/// `noise_figure_db = None` is noiseless.
pub fn lna(if_sig: &Signal, gain_db: f64, noise_figure_db: Option<f64>, rng: &mut Rng) -> Result<Signal> {
    if !(gain_db >= 0.0) {
        return Err(Error::invalid(format!("LNA gain {gain_db} dB")));
    }
    if !is_real(if_sig) {
        return Err(Error::invalid("LNA input must be a real IF signal"));
    }
    let noisy = match noise_figure_db {
        None => if_sig.clone(),
        Some(nf) => add_awgn_real(if_sig, BOLTZMANN * T0_KELVIN * 10f64.powf(nf / 10.0), rng)?,
    };
    Ok(noisy.scale(db_to_amplitude(gain_db)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MzmSpec {
    pub vpi_volts: f64,
    pub bandwidth_3db_hz: f64,
    /// Peak-to-peak drive of an equivalent sinusoid per arm.
    pub drive_vpp_volts: f64,
    pub extinction_ratio_db: f64,
}

impl Default for MzmSpec {
    fn default() -> Self {
        Self {
            vpi_volts: 1.8,
            bandwidth_3db_hz: 35e9,
            drive_vpp_volts: 0.9,
            extinction_ratio_db: 30.0,
        }
    }
}

impl MzmSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.vpi_volts > 0.0) || !(self.bandwidth_3db_hz > 0.0) {
            return Err(Error::invalid("MZM Vπ and bandwidth must be positive"));
        }
        if !(self.drive_vpp_volts >= 0.0) {
            return Err(Error::invalid("MZM drive must be non-negative"));
        }
        if self.drive_vpp_volts > 2.0 * self.vpi_volts {
            return Err(Error::invalid(format!(
                "MZM overdriven: {} Vpp exceeds 2·Vπ = {} V",
                self.drive_vpp_volts,
                2.0 * self.vpi_volts
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemodLaserSpec {
    pub freq_hz: f64,
    pub post_amp_power_dbm: f64,
    pub linewidth_hz: f64,
}

impl Default for RemodLaserSpec {
    fn default() -> Self {
        Self {
            freq_hz: 193.525e12,
            post_amp_power_dbm: 19.0,
            linewidth_hz: 100e3,
        }
    }
}

/// Modulator operating point: per-arm drive scaling (volts per unit IF
/// amplitude) and residual-carrier field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcsOperatingPoint {
    pub drive_scale: [f64; 2],
    pub residual: [f64; 2],
}

fn filtered_drive(if_sig: &Signal, m: &MzmSpec) -> Result<Vec<f64>> {
    let filtered = apply_transfer(if_sig, one_pole(m.bandwidth_3db_hz))?;
    Ok(filtered.pol(0).iter().map(|a| a.re).collect())
}

fn check_drives(if_x: &Signal, if_y: &Signal, m: &MzmSpec) -> Result<()> {
    m.validate()?;
    if_x.check_compatible(if_y)?;
    if !is_real(if_x) || !is_real(if_y) || if_x.n_pol() != 1 {
        return Err(Error::invalid("MZM drives must be real single-channel IF signals"));
    }
    Ok(())
}

/// Level control for both arms: the band-limited drive is scaled to the
/// RMS `Vpp / (2√2)` of the equivalent sinusoid. The residual carrier sits at
/// `−extinction_ratio_db` relative to one first-order sideband.
pub fn ocs_operating_point(if_x: &Signal, if_y: &Signal, m: &MzmSpec) -> Result<OcsOperatingPoint> {
    check_drives(if_x, if_y, m)?;
    let mut op = OcsOperatingPoint {
        drive_scale: [0.0; 2],
        residual: [0.0; 2],
    };
    for (p, s) in [if_x, if_y].into_iter().enumerate() {
        let v = filtered_drive(s, m)?;
        let rms = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        let k = if rms > 0.0 { m.drive_vpp_volts / (2.0 * 2f64.sqrt()) / rms } else { 0.0 };
        let mean = v
            .iter()
            .map(|x| (PI * x * k / (2.0 * m.vpi_volts)).sin().powi(2))
            .sum::<f64>()
            / v.len() as f64;
        op.drive_scale[p] = k;
        op.residual[p] = (10f64.powf(-m.extinction_ratio_db / 10.0) * mean / 2.0).sqrt();
    }
    Ok(op)
}

/// Remodulate two real IF drives onto a laser with a dual-polarization MZM
/// biased at null, at a fixed operating point.
pub fn dp_mzm_ocs_at(
    if_x: &Signal,
    if_y: &Signal,
    op: &OcsOperatingPoint,
    laser: &RemodLaserSpec,
    m: &MzmSpec,
    rng: &mut Rng,
) -> Result<Signal> {
    check_drives(if_x, if_y, m)?;
    if !(laser.freq_hz > 0.0) {
        return Err(Error::invalid("remodulation laser frequency must be positive"));
    }
    let fs = if_x.sample_rate_hz();
    let carrier = laser_field(
        laser.freq_hz,
        laser.post_amp_power_dbm,
        laser.linewidth_hz,
        0.0,
        if_x.len(),
        fs,
        rng,
    )?;
    let e0 = carrier.pol(0);
    let pols = [if_x, if_y]
        .into_iter()
        .enumerate()
        .map(|(p, s)| {
            let v = filtered_drive(s, m)?;
            let (k, delta) = (op.drive_scale[p], op.residual[p]);
            Ok(v.iter()
                .zip(e0)
                .map(|(x, e)| e * C64::new((PI * x * k / (2.0 * m.vpi_volts)).sin(), delta) / 2f64.sqrt())
                .collect())
        })
        .collect::<Result<Vec<Vec<C64>>>>()?;
    Ok(Signal::new(pols, fs, laser.freq_hz)?.full_band())
}

/// [`dp_mzm_ocs_at`] with the operating point set from the drives themselves.
pub fn dp_mzm_ocs(
    if_x: &Signal,
    if_y: &Signal,
    laser: &RemodLaserSpec,
    m: &MzmSpec,
    rng: &mut Rng,
) -> Result<Signal> {
    let op = ocs_operating_point(if_x, if_y, m)?;
    dp_mzm_ocs_at(if_x, if_y, &op, laser, m, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sideband {
    Upper,
    Lower,
}

/// Keep one first-order sideband of the OCS output and rebase it to its own
/// carrier `f_laser ± if_hz`. The lower sideband carries the IF spectrum inverted.
pub fn sideband_select(remod: &Signal, which: Sideband, if_hz: f64, tof: &TofSpec) -> Result<Signal> {
    let filtered = tof_filter(remod, tof)?;
    let center = match which {
        Sideband::Upper => remod.center_freq_hz() + if_hz,
        Sideband::Lower => remod.center_freq_hz() - if_hz,
    };
    rebase(&filtered, center)
}
