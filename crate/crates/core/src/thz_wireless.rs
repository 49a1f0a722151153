//! The 2×2 MIMO THz wireless hop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigcore::{add_awgn, Rng, Signal};
use crate::units::{db_to_amplitude, BOLTZMANN, SPEED_OF_LIGHT, T0_KELVIN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WirelessSpec {
    pub distance_m: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    /// Receiver-referred noise PSD; 0 for a noiseless hop.
    pub noise_psd_w_per_hz: f64,
    /// X↔Y leakage; `None` for none.
    pub crosstalk_db: Option<f64>,
}

impl Default for WirelessSpec {
    fn default() -> Self {
        Self {
            distance_m: 3.0,
            tx_gain_dbi: 25.0,
            rx_gain_dbi: 25.0,
            noise_psd_w_per_hz: BOLTZMANN * T0_KELVIN * 10.0,
            crosstalk_db: Some(-25.0),
        }
    }
}

impl WirelessSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m > 0.0) {
            return Err(Error::invalid("wireless distance must be positive"));
        }
        if !(self.noise_psd_w_per_hz >= 0.0) {
            return Err(Error::invalid("wireless noise psd must be non-negative"));
        }
        if let Some(x) = self.crosstalk_db {
            if !(x <= 0.0) {
                return Err(Error::invalid("crosstalk must be <= 0 dB"));
            }
        }
        Ok(())
    }

    /// Net field gain in dB at `freq_hz`: antenna gains minus path loss.
    pub fn link_budget_db(&self, freq_hz: f64) -> f64 {
        self.tx_gain_dbi + self.rx_gain_dbi - fspl_db(freq_hz, self.distance_m)
    }
}

/// Friis free-space path loss in dB.
pub fn fspl_db(freq_hz: f64, distance_m: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m * freq_hz / SPEED_OF_LIGHT).log10()
}

/// Propagate the X and Y branches, each holding one signal per frequency
/// channel (matched by index), through the hop.
pub fn propagate_mimo(
    x_branch: &[Signal],
    y_branch: &[Signal],
    w: &WirelessSpec,
    rng: &mut Rng,
) -> Result<(Vec<Signal>, Vec<Signal>)> {
    w.validate()?;
    if x_branch.len() != y_branch.len() {
        return Err(Error::invalid("X and Y branches carry different channel counts"));
    }
    let c = w.crosstalk_db.map_or(0.0, db_to_amplitude);
    let mut xo = Vec::with_capacity(x_branch.len());
    let mut yo = Vec::with_capacity(y_branch.len());
    for (x, y) in x_branch.iter().zip(y_branch) {
        x.check_compatible(y)?;
        if x.center_freq_hz() != y.center_freq_hz() {
            return Err(Error::invalid("X and Y branch carriers differ"));
        }
        let g = db_to_amplitude(w.link_budget_db(x.center_freq_hz()));
        let (mut xn, mut yn) = (x.scale(g), y.scale(g));
        if c > 0.0 {
            let (xs, ys) = (xn.clone(), yn.clone());
            xn = xs.add(&ys.scale(c))?;
            yn = ys.add(&xs.scale(c))?;
        }
        xo.push(add_awgn(&xn, w.noise_psd_w_per_hz, rng)?);
        yo.push(add_awgn(&yn, w.noise_psd_w_per_hz, rng)?);
    }
    Ok((xo, yo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcore::C64;
    use crate::units::lin_to_db;

    fn quiet() -> WirelessSpec {
        WirelessSpec {
            noise_psd_w_per_hz: 0.0,
            crosstalk_db: None,
            ..WirelessSpec::default()
        }
    }

    fn thz(seed: u64, f: f64) -> Signal {
        let mut rng = Rng::new(seed, 0);
        let v = (0..512).map(|_| C64::new(rng.normal(), rng.normal()) * 1e-3).collect();
        Signal::new(vec![v], 125.516e9, f).unwrap()
    }

    #[test]
    fn friis_values() {
        assert!((fspl_db(385e9, 3.0) - 93.7).abs() < 0.05);
        assert!((fspl_db(435e9, 3.0) - 94.8).abs() < 0.05);
        for f in [100e9, 385e9, 1e12] {
            assert!((fspl_db(f, 6.0) - fspl_db(f, 3.0) - 6.0206).abs() < 1e-3);
        }
        assert!((WirelessSpec::default().link_budget_db(385e9) + 43.7).abs() < 0.1);
    }

    #[test]
    fn noiseless_hop_is_pure_gain() {
        let w = quiet();
        let x = thz(1, 385e9);
        let y = thz(2, 385e9);
        let (xo, yo) = propagate_mimo(&[x.clone()], &[y.clone()], &w, &mut Rng::new(0, 0)).unwrap();
        let g = db_to_amplitude(w.link_budget_db(385e9));
        for (a, b) in [(&xo[0], &x), (&yo[0], &y)] {
            let err: f64 = a.pol(0).iter().zip(b.pol(0)).map(|(p, q)| (p - q * g).norm_sqr()).sum();
            let ref_p: f64 = b.pol(0).iter().map(|q| (q * g).norm_sqr()).sum();
            assert!((err / ref_p).sqrt() < 1e-9);
        }
    }

    #[test]
    fn crosstalk_is_frequency_flat() {
        let w = WirelessSpec {
            crosstalk_db: Some(-25.0),
            ..quiet()
        };
        let zero = |f| Signal::zeros(512, 1, 125.516e9, f).unwrap();
        let (xo, yo) = propagate_mimo(
            &[thz(1, 385e9), thz(3, 435e9)],
            &[zero(385e9), zero(435e9)],
            &w,
            &mut Rng::new(0, 0),
        )
        .unwrap();
        for k in 0..2 {
            let ratio = lin_to_db(yo[k].power_w() / xo[k].power_w());
            assert!((ratio + 25.0).abs() < 0.1, "{ratio}");
        }
    }

    #[test]
    fn snr_falls_with_distance() {
        let x = thz(4, 385e9);
        let mut last = f64::INFINITY;
        for d in [1.0, 3.0, 10.0, 30.0] {
            let w = WirelessSpec {
                distance_m: d,
                crosstalk_db: None,
                ..WirelessSpec::default()
            };
            let (xo, _) = propagate_mimo(&[x.clone()], &[x.clone()], &w, &mut Rng::new(5, 0)).unwrap();
            let clean = db_to_amplitude(w.link_budget_db(385e9));
            let sig = x.power_w() * clean * clean;
            let noise = xo[0].sub(&x.scale(clean)).unwrap().power_w();
            let snr = sig / noise;
            assert!(snr < last);
            last = snr;
        }
    }
}
