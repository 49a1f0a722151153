//! DP-QPSK transmitter: client bits, Gray QPSK mapping, root-raised-cosine
//! shaping, laser phase noise and 50 GHz grid multiplexing.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::sigcore::{apply_transfer, wiener_phase, Rng, Signal, C64};
use crate::units::dbm_to_watt;

/// ITU-T DWDM grid granularity.
pub const GRID_HZ: f64 = 50e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxConfig {
    pub symbol_rate_baud: f64,
    pub rolloff: f64,
    pub center_freq_hz: f64,
    pub launch_power_dbm: f64,
    pub laser_linewidth_hz: f64,
    pub samples_per_symbol: usize,
    pub n_symbols: usize,
}

impl Default for TxConfig {
    fn default() -> Self {
        Self {
            symbol_rate_baud: 31.379e9,
            rolloff: 0.2,
            center_freq_hz: 193.5e12,
            launch_power_dbm: 3.0,
            laser_linewidth_hz: 100e3,
            samples_per_symbol: 4,
            n_symbols: 1 << 16,
        }
    }
}

impl TxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::invalid(format!("rolloff {} outside [0, 1]", self.rolloff)));
        }
        if !(self.symbol_rate_baud > 0.0) {
            return Err(Error::invalid("symbol rate must be positive"));
        }
        if self.n_symbols == 0 {
            return Err(Error::invalid("n_symbols must be positive"));
        }
        if self.laser_linewidth_hz < 0.0 {
            return Err(Error::invalid("negative laser linewidth"));
        }
        check_oversampling(self.samples_per_symbol, self.rolloff)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.symbol_rate_baud * self.samples_per_symbol as f64
    }

    /// Gross line rate of one DP-QPSK channel (2 pol × 2 bit per symbol).
    pub fn line_rate_bps(&self) -> f64 {
        self.symbol_rate_baud * 4.0
    }

    /// One-sided occupied bandwidth of the shaped signal.
    pub fn half_bandwidth_hz(&self) -> f64 {
        self.symbol_rate_baud * (1.0 + self.rolloff) / 2.0
    }
}

fn check_oversampling(sps: usize, rolloff: f64) -> Result<()> {
    if (sps as f64) < 2.0 * (1.0 + rolloff) - 1e-12 {
        // the band edge Rs(1+β)/2 must sit below fs/2 with margin for the IF stages
        return Err(Error::invalid(format!(
            "samples_per_symbol {sps} < 2(1+rolloff) = {}",
            2.0 * (1.0 + rolloff)
        )));
    }
    Ok(())
}

/// Payload bits, one sequence per polarization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream {
    pols: Vec<Vec<u8>>,
}

impl BitStream {
    pub fn from_pols(pols: Vec<Vec<u8>>) -> Result<Self> {
        if pols.is_empty() {
            return Err(Error::invalid("bit stream needs at least one polarization"));
        }
        if pols.iter().any(|p| p.len() != pols[0].len()) {
            return Err(Error::invalid("bit stream polarizations differ in length"));
        }
        if pols[0].len() % 2 != 0 {
            return Err(Error::invalid("QPSK needs an even number of bits"));
        }
        Ok(Self { pols })
    }

    pub fn n_pol(&self) -> usize {
        self.pols.len()
    }

    /// Bits per polarization.
    pub fn len(&self) -> usize {
        self.pols[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pol(&self, i: usize) -> &[u8] {
        &self.pols[i]
    }
}

/// I.i.d. uniform bits for one polarization.
pub fn gen_bits(n_bits: usize, rng: &mut Rng) -> Result<BitStream> {
    if n_bits == 0 || n_bits % 2 != 0 {
        return Err(Error::invalid(format!("n_bits must be even and > 0, got {n_bits}")));
    }
    BitStream::from_pols(vec![(0..n_bits).map(|_| rng.bit()).collect()])
}

/// Two independent polarizations of `n_bits` each, drawn from forks of `rng`.
pub fn gen_dp_bits(n_bits: usize, rng: &Rng) -> Result<BitStream> {
    let mut pols = Vec::with_capacity(2);
    for p in 0..2 {
        let b = gen_bits(n_bits, &mut rng.fork(rng.stream() * 2 + p))?;
        pols.push(b.pols.into_iter().next().unwrap_or_default());
    }
    BitStream::from_pols(pols)
}

/// Gray map: 00→(+1+j), 01→(−1+j), 11→(−1−j), 10→(+1−j), all /√2.
pub fn qpsk_map(bits: &[u8]) -> Result<Vec<C64>> {
    if bits.len() % 2 != 0 {
        return Err(Error::invalid("QPSK needs an even number of bits"));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|b| {
            // first bit selects the imaginary sign, second the real sign
            let re = if b[1] == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            let im = if b[0] == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            C64::new(re, im)
        })
        .collect())
}

/// Hard decision inverse of [`qpsk_map`].
pub fn qpsk_demap(symbols: &[C64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(symbols.len() * 2);
    for s in symbols {
        let b0 = u8::from(s.im < 0.0);
        let b1 = u8::from(s.re < 0.0);
        out.push(b0);
        out.push(b1);
    }
    out
}

/// Raised-cosine spectrum normalized to 1 at DC.
fn raised_cosine(f: f64, symbol_rate: f64, rolloff: f64) -> f64 {
    let t = 1.0 / symbol_rate;
    let af = f.abs();
    let f1 = (1.0 - rolloff) / (2.0 * t);
    let f2 = (1.0 + rolloff) / (2.0 * t);
    if af <= f1 {
        1.0
    } else if af <= f2 {
        0.5 * (1.0 + (PI * t / rolloff * (af - f1)).cos())
    } else {
        0.0
    }
}

/// Root-raised-cosine amplitude response, 1 at DC.
pub fn rrc_response(f: f64, symbol_rate: f64, rolloff: f64) -> f64 {
    raised_cosine(f, symbol_rate, rolloff).sqrt()
}

/// Time-domain RRC taps spanning `span_symbols` symbols, peak at the center tap.
pub fn rrc_taps(samples_per_symbol: usize, rolloff: f64, span_symbols: usize) -> Vec<f64> {
    let sps = samples_per_symbol as f64;
    let half = (span_symbols * samples_per_symbol) / 2;
    let b = rolloff;
    (0..=2 * half)
        .map(|i| {
            let t = (i as f64 - half as f64) / sps;
            if t.abs() < 1e-12 {
                1.0 - b + 4.0 * b / PI
            } else if b > 0.0 && (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-9 {
                b / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
            } else {
                ((PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos())
                    / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
            }
        })
        .collect()
}

/// Circular RRC pulse shaping of a symbol sequence, symbol `k` placed at
/// sample `k·sps`. Output is a 1-pol baseband signal at `sps·symbol_rate`.
pub fn rrc_shape(symbols: &[C64], samples_per_symbol: usize, rolloff: f64, symbol_rate: f64) -> Result<Signal> {
    check_oversampling(samples_per_symbol, rolloff)?;
    if symbols.is_empty() {
        return Err(Error::EmptySignal);
    }
    let fs = symbol_rate * samples_per_symbol as f64;
    let mut up = vec![C64::new(0.0, 0.0); symbols.len() * samples_per_symbol];
    for (k, &s) in symbols.iter().enumerate() {
        up[k * samples_per_symbol] = s;
    }
    let raw = Signal::new(vec![up], fs, 0.0)?;
    let half_bw = symbol_rate * (1.0 + rolloff) / 2.0;
    let gain = samples_per_symbol as f64;
    Ok(apply_transfer(&raw, |f| C64::new(gain.sqrt() * rrc_response(f, symbol_rate, rolloff), 0.0))?
        .set_band((-half_bw, half_bw)))
}

/// Matched RRC filter followed by sampling at symbol centers.
pub fn rrc_matched(s: &Signal, pol: usize, samples_per_symbol: usize, rolloff: f64, symbol_rate: f64) -> Result<Vec<C64>> {
    let gain = samples_per_symbol as f64;
    let one = Signal::new(vec![s.pol(pol).to_vec()], s.sample_rate_hz(), s.center_freq_hz())?;
    let f = apply_transfer(&one, |f| C64::new(rrc_response(f, symbol_rate, rolloff) * gain.sqrt(), 0.0))?;
    Ok(f.pol(0).iter().step_by(samples_per_symbol).copied().collect())
}

/// Dual-polarization QPSK transmitter at the configured channel frequency.
pub fn dp_qpsk_tx(cfg: &TxConfig, bits: &BitStream, rng: &mut Rng) -> Result<Signal> {
    cfg.validate()?;
    if bits.n_pol() != 2 {
        return Err(Error::Polarization {
            expected: 2,
            got: bits.n_pol(),
        });
    }
    if bits.len() != 2 * cfg.n_symbols {
        return Err(Error::invalid(format!(
            "expected {} bits per polarization, got {}",
            2 * cfg.n_symbols,
            bits.len()
        )));
    }
    let mut pols = Vec::with_capacity(2);
    for p in 0..2 {
        let syms = qpsk_map(bits.pol(p))?;
        let shaped = rrc_shape(&syms, cfg.samples_per_symbol, cfg.rolloff, cfg.symbol_rate_baud)?;
        pols.push(shaped.into_pols().swap_remove(0));
    }
    let fs = cfg.sample_rate_hz();
    let hb = cfg.half_bandwidth_hz();
    let sig = Signal::with_band(pols, fs, cfg.center_freq_hz, (-hb, hb))?
        .normalize_power(dbm_to_watt(cfg.launch_power_dbm))?;
    let phase = wiener_phase(sig.len(), cfg.laser_linewidth_hz, fs, rng);
    apply_phase(&sig, &phase)
}

/// Multiply every polarization by `exp(j·phase[n])`.
pub fn apply_phase(s: &Signal, phase: &[f64]) -> Result<Signal> {
    if phase.len() != s.len() {
        return Err(Error::invalid("phase record length mismatch"));
    }
    let pols = s
        .pols()
        .iter()
        .map(|p| p.iter().zip(phase).map(|(a, &ph)| a * C64::from_polar(1.0, ph)).collect())
        .collect();
    s.with_samples(pols)
}

/// Validate a co-propagating channel set against the 50 GHz grid.
pub fn mux_channels(channels: Vec<Signal>, grid_check: bool) -> Result<Vec<Signal>> {
    if channels.is_empty() {
        return Err(Error::invalid("at least one channel required"));
    }
    for c in &channels[1..] {
        channels[0].check_compatible(c)?;
    }
    if grid_check {
        check_grid(&channels.iter().map(|c| c.center_freq_hz()).collect::<Vec<_>>())?;
    }
    Ok(channels)
}

/// Every pairwise spacing must be a nonzero multiple of the 50 GHz grid.
pub fn check_grid(freqs_hz: &[f64]) -> Result<()> {
    for i in 0..freqs_hz.len() {
        for j in i + 1..freqs_hz.len() {
            let spacing = (freqs_hz[j] - freqs_hz[i]).abs();
            let m = (spacing / GRID_HZ).round();
            if m < 1.0 || (spacing - m * GRID_HZ).abs() > 1.0 {
                return Err(Error::Grid {
                    a_hz: freqs_hz[i],
                    b_hz: freqs_hz[j],
                    spacing_hz: spacing,
                    grid_hz: GRID_HZ,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcore::{power_dbm, spectrum, Rng};
    use proptest::prelude::*;

    #[test]
    fn gen_bits_is_reproducible() {
        let a = gen_bits(8, &mut Rng::new(42, 0)).unwrap();
        let b = gen_bits(8, &mut Rng::new(42, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gen_bits_balance() {
        let b = gen_bits(1_000_000, &mut Rng::new(1, 0)).unwrap();
        let ones = b.pol(0).iter().filter(|&&x| x == 1).count() as f64 / 1e6;
        assert!((ones - 0.5).abs() < 0.002);
    }

    #[test]
    fn gen_bits_odd_is_error() {
        assert!(gen_bits(7, &mut Rng::new(1, 0)).is_err());
    }

    #[test]
    fn gray_map_points() {
        let s = qpsk_map(&[0, 0, 0, 1, 1, 1, 1, 0]).unwrap();
        let r = FRAC_1_SQRT_2;
        let expect = [C64::new(r, r), C64::new(-r, r), C64::new(-r, -r), C64::new(r, -r)];
        for (a, b) in s.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
        let e: f64 = s.iter().map(|x| x.norm_sqr()).sum::<f64>() / 4.0;
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn impulse_gives_rrc_response() {
        let sps = 4;
        let n = 65;
        let mut syms = vec![C64::new(0.0, 0.0); n];
        syms[n / 2] = C64::new(1.0, 0.0);
        let out = rrc_shape(&syms, sps, 0.2, 1.0).unwrap();
        let mag: Vec<f64> = out.pol(0).iter().map(|x| x.re).collect();
        let peak = mag.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(peak, (n / 2) * sps);
        let taps = rrc_taps(sps, 0.2, 16);
        let center = taps.len() / 2;
        let tpeak = taps.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(tpeak, center);
        // circular frequency-domain pulse agrees with the analytic taps
        let scale = mag[peak] / taps[center];
        for k in 0..taps.len() {
            let idx = peak + k - center;
            assert!((mag[idx] - scale * taps[k]).abs() < 2e-3 * mag[peak], "tap {k}");
        }
    }

    #[test]
    fn matched_cascade_has_no_isi() {
        let mut rng = Rng::new(3, 0);
        let bits = gen_bits(2 * 4096, &mut rng).unwrap();
        let syms = qpsk_map(bits.pol(0)).unwrap();
        let tx = rrc_shape(&syms, 4, 0.2, 31.379e9).unwrap();
        let rx = rrc_matched(&tx, 0, 4, 0.2, 31.379e9).unwrap();
        let err: f64 = rx.iter().zip(&syms).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / syms.len() as f64;
        assert!(err.sqrt() < 5e-3, "evm {}", err.sqrt());
        assert!(err.sqrt() < 1e-3);
    }

    #[test]
    fn occupied_bandwidth_99() {
        let rs = 31.379e9;
        let mut rng = Rng::new(4, 0);
        let bits = gen_bits(2 * 16384, &mut rng).unwrap();
        let tx = rrc_shape(&qpsk_map(bits.pol(0)).unwrap(), 4, 0.2, rs).unwrap();
        let (freqs, psd) = spectrum(&tx, 0);
        let total: f64 = psd.iter().sum();
        let mut pairs: Vec<(f64, f64)> = freqs.into_iter().zip(psd).collect();
        pairs.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
        let mut acc = 0.0;
        let mut edge = 0.0;
        for (f, p) in pairs {
            acc += p;
            if acc >= 0.99 * total {
                edge = f.abs();
                break;
            }
        }
        let occupied = 2.0 * edge;
        assert!(occupied < rs * 1.2 && occupied > rs * 0.95, "occupied {occupied}");
    }

    #[test]
    fn insufficient_oversampling() {
        assert!(rrc_shape(&[C64::new(1.0, 0.0)], 2, 0.2, 1.0).is_err());
    }

    #[test]
    fn tx_power_and_line_rate() {
        let cfg = TxConfig {
            n_symbols: 4096,
            ..TxConfig::default()
        };
        let bits = gen_dp_bits(2 * 4096, &Rng::new(1, 1)).unwrap();
        let s = dp_qpsk_tx(&cfg, &bits, &mut Rng::new(1, 2)).unwrap();
        assert!((power_dbm(&s).unwrap() - 3.0).abs() < 0.05);
        assert!((cfg.line_rate_bps() - 125.516e9).abs() < 1.0);
        assert_eq!(s.center_freq_hz(), 193.5e12);
    }

    #[test]
    fn grid_examples() {
        let mk = |f: f64| Signal::zeros(8, 2, 1e9, f).unwrap();
        assert!(mux_channels(vec![mk(193.5e12), mk(193.55e12)], true).is_ok());
        assert!(matches!(
            mux_channels(vec![mk(193.5e12), mk(193.52e12)], true),
            Err(Error::Grid { .. })
        ));
        assert!(mux_channels(vec![mk(193.5e12)], true).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn map_demap_inverse(bits in proptest::collection::vec(0u8..2, 2..400usize)) {
            let bits = if bits.len() % 2 == 1 { bits[..bits.len() - 1].to_vec() } else { bits };
            let syms = qpsk_map(&bits).unwrap();
            prop_assert_eq!(qpsk_demap(&syms), bits);
        }
    }
}
