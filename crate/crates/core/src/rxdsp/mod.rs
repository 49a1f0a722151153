//! Coherent receiver DSP: intradyne front end, CD compensation, matched
//! filtering, CMA butterfly equalization, 4th-power FOE, Viterbi–Viterbi CPE,
//! known-payload ambiguity resolution, BER and OSNR.

mod carrier;
mod equalizer;
mod frontend;
mod metrics;

pub use carrier::{carrier_phase_recover, freq_offset_estimate, remove_offset};
pub use equalizer::{adaptive_eq_2x2, Butterfly, EqOutput};
pub use frontend::{cd_compensate, coherent_rx, matched_filter_2sps, normalize_joint};
pub use metrics::{
    align, apply_alignment, ber_count, ber_from_counts, measure_osnr_ledger, measure_osnr_out_of_band,
    q_factor_db, Alignment, BerResult, FEC_THRESHOLD, LOW_CONFIDENCE_ERRORS, NET_RATE_GBPS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiberchan::FiberSpec;
use crate::sigcore::{Signal, C64};
use crate::txchain::qpsk_demap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspConfig {
    pub eq_taps: usize,
    pub eq_step_size: f64,
    pub eq_training_symbols: usize,
    pub foe_fft_size: usize,
    pub cpe_block_size: usize,
    /// Symbols on each side of the record wrap left out of the BER count.
    /// Frequency shifts that are not whole FFT bins leave a phase step there.
    pub edge_guard_symbols: usize,
    /// Conjugate the received field before any other stage.
    pub conjugate_input: bool,
}

impl Default for DspConfig {
    fn default() -> Self {
        Self {
            eq_taps: 15,
            eq_step_size: 1e-3,
            eq_training_symbols: 20_000,
            foe_fft_size: 1 << 16,
            cpe_block_size: 64,
            edge_guard_symbols: 128,
            conjugate_input: false,
        }
    }
}

impl DspConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eq_taps % 2 == 0 {
            return Err(Error::invalid(format!("equalizer taps must be odd, got {}", self.eq_taps)));
        }
        if self.cpe_block_size < 4 {
            return Err(Error::invalid(format!("CPE block size {} < 4", self.cpe_block_size)));
        }
        if !self.foe_fft_size.is_power_of_two() || self.foe_fft_size < 16 {
            return Err(Error::invalid("FOE FFT size must be a power of two >= 16"));
        }
        if !(self.eq_step_size > 0.0) {
            return Err(Error::invalid("equalizer step size must be positive"));
        }
        Ok(())
    }
}

/// Transmitted reference for one dual-polarization channel.
#[derive(Debug, Clone)]
pub struct Reference {
    pub symbols: [Vec<C64>; 2],
    pub bits: [Vec<u8>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DspOutcome {
    pub ber: BerResult,
    pub eq_converged: bool,
    pub eq_reinitialized: bool,
    pub freq_offset_hz: f64,
    pub pol_swapped: bool,
}

/// Aligned symbol indices farther than `guard` from the raw record wrap.
fn outside_guard(n: usize, delay: usize, guard: usize) -> Vec<usize> {
    let wrap = (n - delay % n) % n;
    (0..n)
        .filter(|&k| {
            let d = (k + n - wrap) % n;
            d >= guard && n - d > guard
        })
        .collect()
}

/// Run the receive DSP on a coherent-front-end output and count bit errors
/// against the reference.
pub fn recover(
    baseband: &Signal,
    spans: &[FiberSpec],
    samples_per_symbol: usize,
    rolloff: f64,
    symbol_rate: f64,
    reference: &Reference,
    cfg: &DspConfig,
) -> Result<DspOutcome> {
    cfg.validate()?;
    let input = if cfg.conjugate_input { baseband.conj() } else { baseband.clone() };
    let cd = cd_compensate(&input, spans)?;
    let mut streams = matched_filter_2sps(&cd, samples_per_symbol, rolloff, symbol_rate)?;
    normalize_joint(&mut streams);
    let eq = adaptive_eq_2x2(
        &streams[0],
        &streams[1],
        cfg.eq_taps,
        cfg.eq_step_size,
        cfg.eq_training_symbols,
    )?;
    let foe = freq_offset_estimate(&eq.streams, symbol_rate, cfg.foe_fft_size)?;
    let recovered = eq
        .streams
        .iter()
        .map(|s| carrier_phase_recover(&remove_offset(s, foe, symbol_rate), cfg.cpe_block_size))
        .collect::<Result<Vec<_>>>()?;

    let scores = |o: usize, t: usize| align(&recovered[o], &reference.symbols[t]);
    let a = [[scores(0, 0)?, scores(0, 1)?], [scores(1, 0)?, scores(1, 1)?]];
    let swapped = a[0][1].score + a[1][0].score > a[0][0].score + a[1][1].score;
    let mut errors = 0;
    let mut bits = 0;
    for (o, stream) in recovered.iter().enumerate() {
        let t = if swapped { 1 - o } else { o };
        let rx_bits = qpsk_demap(&apply_alignment(stream, &a[o][t]));
        let keep = outside_guard(rx_bits.len() / 2, a[o][t].delay, cfg.edge_guard_symbols);
        let pick = |b: &[u8]| -> Vec<u8> { keep.iter().flat_map(|&k| [b[2 * k], b[2 * k + 1]]).collect() };
        let r = ber_count(&pick(&rx_bits), &pick(&reference.bits[t]))?;
        errors += r.errors;
        bits += r.bits;
    }
    Ok(DspOutcome {
        ber: ber_from_counts(errors, bits)?,
        eq_converged: eq.converged,
        eq_reinitialized: eq.reinitialized,
        freq_offset_hz: foe,
        pol_swapped: swapped,
    })
}

#[cfg(test)]
mod tests {
    use super::outside_guard;

    #[test]
    fn guard_straddles_the_wrap() {
        assert_eq!(outside_guard(10, 0, 2), vec![2, 3, 4, 5, 6, 7]);
        // raw index 0 sits at aligned index 7
        assert_eq!(outside_guard(10, 3, 2), vec![0, 1, 2, 3, 4, 9]);
        assert_eq!(outside_guard(10, 3, 0).len(), 10);
    }
}
