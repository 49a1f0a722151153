use std::fmt;

use serde::Serialize;

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::thz_to::Sideband;
use crate::txchain::check_grid;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelPlan {
    pub label: String,
    pub optical_hz: f64,
    pub beat_hz: f64,
    pub multiplied_lo_hz: f64,
    pub if_hz: f64,
    pub high_side: bool,
    pub sideband: Sideband,
    /// Spectral inversions along the path (high-side mixing, lower sideband).
    pub inversions: u32,
    /// Optical carrier after remodulation and sideband selection.
    pub output_hz: f64,
}

impl ChannelPlan {
    pub fn parity_even(&self) -> bool {
        self.inversions % 2 == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyPlan {
    pub lo_hz: f64,
    pub remod_laser_hz: f64,
    pub channels: Vec<ChannelPlan>,
    pub grid_compliant: bool,
    pub warnings: Vec<String>,
}

pub fn channel_label(index: usize) -> String {
    format!("ch{}", index + 1)
}

/// Derive and check the frequency plan of every active channel.
pub fn plan_frequencies(sc: &Scenario) -> Result<FrequencyPlan> {
    sc.validate()?;
    let lo = sc.ot.lo.freq_hz;
    let remod = sc.to.laser.freq_hz;
    let half_bw = sc.tx.symbol_rate_baud * (1.0 + sc.tx.rolloff) / 2.0;
    let mut channels = Vec::new();
    let mut warnings = Vec::new();
    for k in sc.active_channels() {
        let label = channel_label(k);
        let optical = sc.tx.channels_hz[k];
        let beat = optical - lo;
        if !sc.ot.pd.admits(beat) {
            return Err(Error::FrequencyPlan(format!(
                "{label}: beat {:.3} GHz outside the photomixer bands",
                beat / 1e9
            )));
        }
        let mixer = &sc.to.mixers[k];
        let (if_hz, high_side) = mixer.intermediate(beat);
        if if_hz >= mixer.if_bandwidth_hz {
            return Err(Error::FrequencyPlan(format!(
                "{label}: IF {:.3} GHz ≥ receiver IF bandwidth {:.3} GHz",
                if_hz / 1e9,
                mixer.if_bandwidth_hz / 1e9
            )));
        }
        if if_hz < half_bw {
            warnings.push(format!(
                "{label}: IF {:.3} GHz below the signal half-bandwidth {:.3} GHz",
                if_hz / 1e9,
                half_bw / 1e9
            ));
        }
        let sideband = sc.to.sideband[k];
        let inversions = u32::from(high_side) + u32::from(sideband == Sideband::Lower);
        if inversions % 2 == 1 && !sc.allow_odd_parity {
            return Err(Error::FrequencyPlan(format!(
                "{label}: odd inversion parity ({inversions} inversions)"
            )));
        }
        let output_hz = match sideband {
            Sideband::Upper => remod + if_hz,
            Sideband::Lower => remod - if_hz,
        };
        channels.push(ChannelPlan {
            label,
            optical_hz: optical,
            beat_hz: beat,
            multiplied_lo_hz: mixer.multiplied_lo_hz(),
            if_hz,
            high_side,
            sideband,
            inversions,
            output_hz,
        });
    }
    let ifs: Vec<f64> = channels.iter().map(|c| c.if_hz).collect();
    if ifs.iter().any(|&f| f != ifs[0]) {
        warnings.push("channels use different IFs".into());
    }
    let inputs: Vec<f64> = channels.iter().map(|c| c.optical_hz).collect();
    let outputs: Vec<f64> = channels.iter().map(|c| c.output_hz).collect();
    check_grid(&inputs)?;
    check_grid(&outputs)?;
    Ok(FrequencyPlan {
        lo_hz: lo,
        remod_laser_hz: remod,
        channels,
        grid_compliant: true,
        warnings,
    })
}

fn ghz(f: f64) -> String {
    format!("{:.3}", f / 1e9)
}

impl fmt::Display for FrequencyPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "optical LO      {} GHz", ghz(self.lo_hz))?;
        writeln!(f, "remod laser     {} GHz", ghz(self.remod_laser_hz))?;
        writeln!(
            f,
            "{:<5} {:>12} {:>9} {:>9} {:>8} {:>5} {:>5} {:>6} {:>12}",
            "chan", "optical GHz", "beat GHz", "LOxN GHz", "IF GHz", "side", "sb", "parity", "out GHz"
        )?;
        for c in &self.channels {
            writeln!(
                f,
                "{:<5} {:>12} {:>9} {:>9} {:>8} {:>5} {:>5} {:>6} {:>12}",
                c.label,
                ghz(c.optical_hz),
                ghz(c.beat_hz),
                ghz(c.multiplied_lo_hz),
                ghz(c.if_hz),
                if c.high_side { "high" } else { "low" },
                match c.sideband {
                    Sideband::Upper => "upper",
                    Sideband::Lower => "lower",
                },
                if c.parity_even() { "even" } else { "odd" },
                ghz(c.output_hz)
            )?;
        }
        writeln!(f, "50 GHz grid     {}", if self.grid_compliant { "ok" } else { "violated" })?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan() {
        let p = plan_frequencies(&Scenario::default()).unwrap();
        let beats: Vec<f64> = p.channels.iter().map(|c| c.beat_hz).collect();
        let ifs: Vec<f64> = p.channels.iter().map(|c| c.if_hz).collect();
        assert_eq!(beats, vec![385e9, 435e9]);
        assert_eq!(ifs, vec![25e9, 25e9]);
        assert!(p.channels.iter().all(|c| c.parity_even()));
        assert_eq!(p.channels[0].output_hz, 193.55e12);
        assert_eq!(p.channels[1].output_hz, 193.5e12);
        assert!(p.grid_compliant);
        let text = p.to_string();
        assert!(text.contains("385.000") && text.contains("25.000"));
    }

    #[test]
    fn moved_lo_warns() {
        let mut sc = Scenario::default();
        sc.ot.lo.freq_hz = 193.125e12;
        let p = plan_frequencies(&sc).unwrap();
        let beats: Vec<f64> = p.channels.iter().map(|c| c.beat_hz).collect();
        let ifs: Vec<f64> = p.channels.iter().map(|c| c.if_hz).collect();
        assert_eq!(beats, vec![375e9, 425e9]);
        assert_eq!(ifs, vec![15e9, 35e9]);
        assert!(!p.warnings.is_empty());
    }

    #[test]
    fn multiplier_eleven_fails() {
        let mut sc = Scenario::default();
        sc.to.mixers[0].mult_factor = 11;
        let err = plan_frequencies(&sc).unwrap_err();
        assert!(matches!(&err, Error::FrequencyPlan(m) if m.contains("55.000")));
    }

    #[test]
    fn wrong_sideband_needs_permission() {
        let mut sc = Scenario::default();
        sc.to.sideband[0] = Sideband::Lower;
        assert!(matches!(plan_frequencies(&sc), Err(Error::FrequencyPlan(m)) if m.contains("odd")));
        sc.allow_odd_parity = true;
        sc.mode = super::super::scenario::Mode::Single;
        let p = plan_frequencies(&sc).unwrap();
        assert_eq!(p.channels[0].inversions, 1);
    }

    #[test]
    fn off_grid_rejected() {
        let mut sc = Scenario::default();
        sc.tx.channels_hz[1] = 193.53e12;
        sc.to.mixers[1].lo_fundamental_hz = (415e9 + 25e9) / 12.0;
        assert!(matches!(plan_frequencies(&sc), Err(Error::Grid { .. })));
    }
}
