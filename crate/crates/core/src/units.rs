//! Physical constants and power/ratio conversions.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reference temperature for noise figures, K.
pub const T0_KELVIN: f64 = 290.0;
/// OSNR reference bandwidth (0.1 nm at 1550 nm), Hz.
pub const OSNR_REF_BW_HZ: f64 = 12.5e9;

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    1e-3 * db_to_lin(dbm)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    lin_to_db(w / 1e-3)
}

/// Field (amplitude) factor for a power ratio in dB.
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        assert!((watt_to_dbm(1e-3)).abs() < 1e-12);
        assert!((watt_to_dbm(dbm_to_watt(13.1)) - 13.1).abs() < 1e-12);
        assert!((db_to_amplitude(20.0) - 10.0).abs() < 1e-12);
    }
}
