use rustfft::FftPlanner;

use super::{Signal, C64};
use crate::error::{Error, Result};

/// Forward/inverse transform pair for one length. The inverse is scaled by
/// `1/n` so `inverse(forward(x)) == x`.
pub struct Fft {
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    n: usize,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            n,
        }
    }

    pub fn forward(&self, x: &mut [C64]) {
        self.fwd.process(x);
    }

    pub fn inverse(&self, x: &mut [C64]) {
        self.inv.process(x);
        let k = 1.0 / self.n as f64;
        x.iter_mut().for_each(|v| *v *= k);
    }
}

/// Signed bin frequencies in transform order.
pub fn fft_freqs(n: usize, sample_rate_hz: f64) -> Vec<f64> {
    let df = sample_rate_hz / n as f64;
    (0..n)
        .map(|k| {
            if k <= (n - 1) / 2 {
                k as f64 * df
            } else {
                (k as f64 - n as f64) * df
            }
        })
        .collect()
}

/// Multiply every polarization by `h(f)` in the frequency domain, where `f`
/// is the baseband (envelope) frequency. The transform spans the whole record,
/// so filtering is circular and exactly invertible for all-pass responses.
pub fn apply_transfer(s: &Signal, h: impl Fn(f64) -> C64) -> Result<Signal> {
    let n = s.len();
    if n == 0 {
        return Err(Error::EmptySignal);
    }
    let response: Vec<C64> = fft_freqs(n, s.sample_rate_hz()).into_iter().map(&h).collect();
    if response.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::invalid("transfer function is not finite over the band"));
    }
    let fft = Fft::new(n);
    let pols = s
        .pols()
        .iter()
        .map(|p| {
            let mut buf = p.clone();
            fft.forward(&mut buf);
            buf.iter_mut().zip(&response).for_each(|(x, hk)| *x *= hk);
            fft.inverse(&mut buf);
            buf
        })
        .collect();
    s.with_samples(pols)
}

/// Periodogram of one polarization: `(freqs, power per bin)` in transform
/// order. Bin powers sum to the mean power of that polarization.
pub fn spectrum(s: &Signal, pol: usize) -> (Vec<f64>, Vec<f64>) {
    let n = s.len();
    let fft = Fft::new(n);
    let mut buf = s.pol(pol).to_vec();
    fft.forward(&mut buf);
    let norm = 1.0 / (n as f64 * n as f64);
    let psd = buf.iter().map(|x| x.norm_sqr() * norm).collect();
    (fft_freqs(n, s.sample_rate_hz()), psd)
}

/// Band-limited rate conversion by spectral zero-padding/truncation. The
/// output length is `len × new_rate / rate`, which must be an integer.
pub fn resample(s: &Signal, new_rate_hz: f64) -> Result<Signal> {
    if !(new_rate_hz > 0.0) {
        return Err(Error::invalid(format!("sample rate {new_rate_hz} Hz")));
    }
    let (lo, hi) = s.band_hz();
    let edge = lo.abs().max(hi.abs());
    if new_rate_hz <= 2.0 * edge {
        return Err(Error::Bandwidth {
            edge_hz: edge,
            limit_hz: new_rate_hz / 2.0,
        });
    }
    let n = s.len();
    let exact = n as f64 * new_rate_hz / s.sample_rate_hz();
    let m = exact.round() as usize;
    if (exact - m as f64).abs() > 1e-6 || m == 0 {
        return Err(Error::invalid(format!(
            "rate ratio gives non-integer length {exact}"
        )));
    }
    let fwd = Fft::new(n);
    let inv = Fft::new(m);
    let freqs_in = fft_freqs(n, s.sample_rate_hz());
    let df = s.sample_rate_hz() / n as f64;
    let pols = s
        .pols()
        .iter()
        .map(|p| {
            let mut buf = p.clone();
            fwd.forward(&mut buf);
            let mut out = vec![C64::new(0.0, 0.0); m];
            for (k, &f) in freqs_in.iter().enumerate() {
                if f.abs() >= new_rate_hz / 2.0 {
                    continue;
                }
                let idx = (f / df).round() as i64;
                let j = if idx >= 0 { idx as usize } else { (m as i64 + idx) as usize };
                out[j] += buf[k];
            }
            inv.inverse(&mut out);
            // spectral copy keeps amplitudes when scaled by m/n
            let g = m as f64 / n as f64;
            out.iter_mut().for_each(|v| *v *= g);
            out
        })
        .collect();
    Signal::with_band(pols, new_rate_hz, s.center_freq_hz(), s.band_hz())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigcore::{add_awgn, frequency_shift, power_dbm, Rng};
    use crate::units::lin_to_db;

    fn band_limited(n: usize, fs: f64, bw: f64, seed: u64) -> Signal {
        let noise = add_awgn(&Signal::zeros(n, 1, fs, 0.0).unwrap(), 1e-12, &mut Rng::new(seed, 0)).unwrap();
        apply_transfer(&noise, |f| if f.abs() < bw { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
            .unwrap()
            .set_band((-bw, bw))
    }

    #[test]
    fn unit_transfer_is_identity() {
        let s = band_limited(1000, 100e9, 30e9, 1);
        let out = apply_transfer(&s, |_| C64::new(1.0, 0.0)).unwrap();
        for (a, b) in s.pol(0).iter().zip(out.pol(0)) {
            assert!((a - b).norm() < 1e-12 * s.power_w().sqrt().max(1e-30) * 10.0);
        }
    }

    #[test]
    fn half_transfer_drops_six_db() {
        let s = band_limited(1000, 100e9, 30e9, 2);
        let out = apply_transfer(&s, |_| C64::new(0.5, 0.0)).unwrap();
        let drop = power_dbm(&s).unwrap() - power_dbm(&out).unwrap();
        assert!((drop - 6.0206).abs() < 1e-3);
    }

    #[test]
    fn brick_wall_keeps_single_tone() {
        let fs = 100e9;
        let n = 400;
        let a = Signal::tone(n, 1, fs, 0.0, 25e9, 1e-3).unwrap();
        let b = Signal::tone(n, 1, fs, 0.0, -25e9, 1e-3).unwrap();
        let two = a.add(&b).unwrap();
        let out = apply_transfer(&two, |f| {
            if f > 0.0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        })
        .unwrap();
        for (x, y) in out.pol(0).iter().zip(a.pol(0)) {
            assert!((x - y).norm() < 1e-12);
        }
        assert!((lin_to_db(two.power_w() / out.power_w()) - 3.0103).abs() < 1e-3);
    }

    #[test]
    fn parseval_holds_for_transfer() {
        let s = band_limited(1024, 100e9, 40e9, 3);
        let h = |f: f64| C64::new(1.0 / (1.0 + (f / 20e9).powi(2)), f / 1e11);
        let out = apply_transfer(&s, h).unwrap();
        let (freqs, psd) = spectrum(&s, 0);
        let freq_domain: f64 = freqs.iter().zip(&psd).map(|(&f, p)| p * h(f).norm_sqr()).sum();
        assert!((out.power_w() - freq_domain).abs() / freq_domain < 1e-9);
    }

    #[test]
    fn shift_commutes_with_transfer() {
        let s = band_limited(1000, 100e9, 20e9, 4);
        let df = 10e9;
        let h = |f: f64| C64::new((-(f / 15e9).powi(2)).exp(), 0.0);
        let a = apply_transfer(&frequency_shift(&s, df).unwrap(), |f| h(f - df)).unwrap();
        let b = frequency_shift(&apply_transfer(&s, h).unwrap(), df).unwrap();
        let err: f64 = a.pol(0).iter().zip(b.pol(0)).map(|(x, y)| (x - y).norm_sqr()).sum();
        let pw: f64 = a.pol(0).iter().map(|x| x.norm_sqr()).sum();
        assert!((err / pw).sqrt() < 1e-9);
    }

    #[test]
    fn resample_round_trip() {
        let s = band_limited(1000, 50e9, 15e9, 5);
        let up = resample(&s, 100e9).unwrap();
        let back = resample(&up, 50e9).unwrap();
        let err: f64 = s.pol(0).iter().zip(back.pol(0)).map(|(x, y)| (x - y).norm_sqr()).sum();
        let pw: f64 = s.pol(0).iter().map(|x| x.norm_sqr()).sum();
        assert!((err / pw).sqrt() < 1e-6);
    }

    #[test]
    fn resample_tone_keeps_frequency_and_power() {
        let s = Signal::tone(500, 1, 50e9, 0.0, 10e9, 1e-3).unwrap();
        let up = resample(&s, 100e9).unwrap();
        assert_eq!(up.len(), 1000);
        let (freqs, psd) = spectrum(&up, 0);
        let peak = psd.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((freqs[peak] - 10e9).abs() < 1.0);
        assert!((power_dbm(&up).unwrap() - power_dbm(&s).unwrap()).abs() < 0.01);
    }

    #[test]
    fn resample_nyquist_violation() {
        let s = band_limited(1000, 100e9, 30e9, 6);
        assert!(matches!(resample(&s, 50e9), Err(Error::Bandwidth { .. })));
    }
}
