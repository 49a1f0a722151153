use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fiberchan::{AmpSpec, FiberSpec, TofSpec};
use crate::rxdsp::DspConfig;
use crate::thz_ot::{LoLaserSpec, PdSpec};
use crate::thz_to::{MixerSpec, MzmSpec, RemodLaserSpec, Sideband};
use crate::thz_wireless::WirelessSpec;
use crate::txchain::TxConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Only the first channel is transmitted and received.
    Single,
    Dual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TxSection {
    pub symbol_rate_baud: f64,
    pub rolloff: f64,
    pub launch_power_dbm: f64,
    pub laser_linewidth_hz: f64,
    pub channels_hz: Vec<f64>,
}

impl Default for TxSection {
    fn default() -> Self {
        Self {
            symbol_rate_baud: 31.379e9,
            rolloff: 0.2,
            launch_power_dbm: 3.0,
            laser_linewidth_hz: 100e3,
            channels_hz: vec![193.5e12, 193.55e12],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OtSection {
    /// Amplifier setting the total signal power at the coupler input.
    pub signal_amp: AmpSpec,
    pub lo: LoLaserSpec,
    pub coupler_loss_db: f64,
    /// Amplifier after the coupler; its output is split over two AIPMs.
    pub aipm_amp_noise_figure_db: Option<f64>,
    /// Total optical power into each AIPM.
    pub aipm_input_power_dbm: f64,
    pub pd: PdSpec,
    pub pc_misalignment_rad: f64,
    pub lo_pol_angle_rad: f64,
}

impl Default for OtSection {
    fn default() -> Self {
        Self {
            signal_amp: AmpSpec::fixed_output(10.6, Some(5.0)),
            lo: LoLaserSpec::default(),
            coupler_loss_db: 3.0,
            aipm_amp_noise_figure_db: Some(5.0),
            aipm_input_power_dbm: 13.1,
            // a sharper knee than the device default sets where saturation distortion takes over
            pd: PdSpec {
                compression_knee_sharpness: 4.0,
                ..PdSpec::default()
            },
            pc_misalignment_rad: 0.0,
            lo_pol_angle_rad: std::f64::consts::FRAC_PI_4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToSection {
    /// One mixer per channel, in channel order.
    pub mixers: Vec<MixerSpec>,
    pub lna_gain_db: f64,
    pub lna_noise_figure_db: Option<f64>,
    pub mzm: MzmSpec,
    pub laser: RemodLaserSpec,
    pub tof: Vec<TofSpec>,
    pub sideband: Vec<Sideband>,
}

impl Default for ToSection {
    fn default() -> Self {
        Self {
            mixers: vec![MixerSpec::new(30e9), MixerSpec::new(115e9 / 3.0)],
            lna_gain_db: 20.0,
            lna_noise_figure_db: None,
            mzm: MzmSpec::default(),
            laser: RemodLaserSpec::default(),
            tof: vec![TofSpec::new(193.55e12, 45e9), TofSpec::new(193.5e12, 45e9)],
            sideband: vec![Sideband::Upper, Sideband::Lower],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoaSection {
    pub attenuation_db: f64,
    /// When set, the attenuation is chosen to reach this received power.
    pub target_rop_dbm: Option<f64>,
}

impl Default for VoaSection {
    fn default() -> Self {
        Self {
            attenuation_db: 0.0,
            target_rop_dbm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RxSection {
    /// Optical preamplifier in front of the coherent receiver.
    pub preamp: Option<AmpSpec>,
    pub laser_linewidth_hz: f64,
    /// Receiver laser detuning from the received carrier.
    pub laser_offset_hz: f64,
}

impl Default for RxSection {
    fn default() -> Self {
        Self {
            preamp: Some(AmpSpec::fixed_gain(30.0, Some(5.0))),
            laser_linewidth_hz: 100e3,
            laser_offset_hz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    pub n_symbols: usize,
    pub samples_per_symbol: usize,
    pub seed: u64,
    /// Permit paths with an odd number of spectral inversions.
    pub allow_odd_parity: bool,
    pub tx: TxSection,
    pub fiber1: FiberSpec,
    pub fiber2: FiberSpec,
    pub ot: OtSection,
    pub wireless: WirelessSpec,
    pub to: ToSection,
    pub voa: VoaSection,
    pub rx: RxSection,
    pub dsp: DspConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            name: "default".into(),
            mode: Mode::Dual,
            n_symbols: 1 << 16,
            samples_per_symbol: 4,
            seed: 1,
            allow_odd_parity: false,
            tx: TxSection::default(),
            fiber1: FiberSpec::default(),
            fiber2: FiberSpec::default(),
            ot: OtSection::default(),
            wireless: WirelessSpec::default(),
            to: ToSection::default(),
            voa: VoaSection::default(),
            rx: RxSection::default(),
            dsp: DspConfig::default(),
        }
    }
}

fn scenario_err(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::Scenario(m),
        other => other,
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    /// Load a scenario file; a path without extension also tries `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = resolve_path(path.as_ref());
        let text = std::fs::read_to_string(&path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Indices of the channels carried in this mode.
    pub fn active_channels(&self) -> Vec<usize> {
        match self.mode {
            Mode::Single => vec![0],
            Mode::Dual => (0..self.tx.channels_hz.len()).collect(),
        }
    }

    pub fn tx_config(&self, channel: usize) -> TxConfig {
        TxConfig {
            symbol_rate_baud: self.tx.symbol_rate_baud,
            rolloff: self.tx.rolloff,
            center_freq_hz: self.tx.channels_hz[channel],
            launch_power_dbm: self.tx.launch_power_dbm,
            laser_linewidth_hz: self.tx.laser_linewidth_hz,
            samples_per_symbol: self.samples_per_symbol,
            n_symbols: self.n_symbols,
        }
    }

    /// Structural checks; frequency-plan checks live in `plan_frequencies`.
    pub fn validate(&self) -> Result<()> {
        let n = self.tx.channels_hz.len();
        if n == 0 {
            return Err(Error::Scenario("tx.channels_hz is empty".into()));
        }
        if self.mode == Mode::Dual && n < 2 {
            return Err(Error::Scenario("dual mode needs at least two channels".into()));
        }
        for (what, len) in [
            ("to.mixers", self.to.mixers.len()),
            ("to.tof", self.to.tof.len()),
            ("to.sideband", self.to.sideband.len()),
        ] {
            if len != n {
                return Err(Error::Scenario(format!("{what} has {len} entries for {n} channels")));
            }
        }
        if self.n_symbols < 2 * self.dsp.eq_taps.max(64) || self.n_symbols <= 4 * self.dsp.edge_guard_symbols {
            return Err(Error::Scenario(format!("n_symbols {} too small", self.n_symbols)));
        }
        if self.samples_per_symbol % 2 != 0 {
            return Err(Error::Scenario("samples_per_symbol must be even".into()));
        }
        if !(self.voa.attenuation_db >= 0.0) {
            return Err(Error::Scenario("voa.attenuation_db must be >= 0".into()));
        }
        let checks = [
            self.tx_config(0).validate(),
            self.fiber1.validate(),
            self.fiber2.validate(),
            self.ot.pd.validate(),
            self.wireless.validate(),
            self.to.mzm.validate(),
            self.dsp.validate(),
        ];
        for c in checks {
            c.map_err(scenario_err)?;
        }
        for m in &self.to.mixers {
            m.validate().map_err(scenario_err)?;
        }
        Ok(())
    }

    pub fn to_value(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }

    /// Dotted paths of every numeric or null field, e.g. `voa.attenuation_db`
    /// or `to.mixers.0.lo_fundamental_hz`.
    pub fn numeric_paths(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        collect_paths(&self.to_value()?, String::new(), &mut out);
        Ok(out)
    }

    /// Copy of the scenario with one numeric field replaced.
    pub fn with_param(&self, path: &str, value: f64) -> Result<Self> {
        let mut v = self.to_value()?;
        let valid = self.numeric_paths()?;
        if !valid.iter().any(|p| p == path) {
            return Err(Error::Scenario(format!(
                "unknown parameter path `{path}`; valid paths: {}",
                valid.join(", ")
            )));
        }
        let leaf = path
            .split('.')
            .try_fold(&mut v, |node, key| match node {
                Value::Object(map) => map.get_mut(key),
                Value::Array(items) => key.parse::<usize>().ok().and_then(move |i| items.get_mut(i)),
                _ => None,
            })
            .ok_or_else(|| Error::Scenario(format!("path `{path}` not found")))?;
        let integral = leaf.is_u64() || leaf.is_i64();
        *leaf = if integral && value.fract() == 0.0 && value >= 0.0 {
            Value::from(value as u64)
        } else {
            serde_json::Number::from_f64(value)
                .map(Value::Number)
                .ok_or_else(|| Error::Scenario(format!("value {value} is not a finite number")))?
        };
        let sc: Scenario = serde_json::from_value(v)?;
        sc.validate()?;
        Ok(sc)
    }
}

fn collect_paths(v: &Value, prefix: String, out: &mut Vec<String>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Number(_) | Value::Null => out.push(prefix),
        Value::Object(map) => map.iter().for_each(|(k, x)| collect_paths(x, join(k), out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, x)| collect_paths(x, join(&i.to_string()), out)),
        _ => {}
    }
}

/// `name` → `name.json` when `name` itself does not exist.
pub fn resolve_path(path: &Path) -> PathBuf {
    if path.exists() || path.extension().is_some() {
        return path.to_path_buf();
    }
    let mut with = path.as_os_str().to_owned();
    with.push(".json");
    PathBuf::from(with)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let sc = Scenario::default();
        let back = Scenario::from_json(&sc.to_json().unwrap()).unwrap();
        assert_eq!(sc, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = Scenario::from_json(r#"{"name": "x", "bogus": 1}"#).unwrap_err();
        assert!(err.is_scenario_error());
        let err = Scenario::from_json(r#"{"voa": {"attenuation": 1}}"#).unwrap_err();
        assert!(err.is_scenario_error());
    }

    #[test]
    fn param_paths() {
        let sc = Scenario::default();
        let paths = sc.numeric_paths().unwrap();
        assert!(paths.contains(&"voa.target_rop_dbm".to_string()));
        assert!(paths.contains(&"to.mixers.1.mult_factor".to_string()));
        let s2 = sc.with_param("ot.aipm_input_power_dbm", 12.5).unwrap();
        assert_eq!(s2.ot.aipm_input_power_dbm, 12.5);
        let s3 = sc.with_param("voa.target_rop_dbm", -30.0).unwrap();
        assert_eq!(s3.voa.target_rop_dbm, Some(-30.0));
        let s4 = sc.with_param("to.mixers.0.mult_factor", 11.0).unwrap();
        assert_eq!(s4.to.mixers[0].mult_factor, 11);
        let err = sc.with_param("ot.nope", 1.0).unwrap_err();
        assert!(err.to_string().contains("voa.attenuation_db"));
    }

    #[test]
    fn channel_count_consistency() {
        let mut sc = Scenario::default();
        sc.to.tof.pop();
        assert!(matches!(sc.validate(), Err(Error::Scenario(_))));
    }
}
