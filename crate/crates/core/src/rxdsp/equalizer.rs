use crate::error::{Error, Result};
use crate::sigcore::C64;

/// 2×2 butterfly taps: `h[out][in]`, each `n_taps` long.
#[derive(Debug, Clone, PartialEq)]
pub struct Butterfly {
    pub h: [[Vec<C64>; 2]; 2],
}

impl Butterfly {
    pub fn identity(n_taps: usize) -> Self {
        let mut unit = vec![C64::new(0.0, 0.0); n_taps];
        unit[n_taps / 2] = C64::new(1.0, 0.0);
        let zero = vec![C64::new(0.0, 0.0); n_taps];
        Self {
            h: [[unit.clone(), zero.clone()], [zero, unit]],
        }
    }

    fn n_taps(&self) -> usize {
        self.h[0][0].len()
    }

    /// Replace the Y output taps by the orthogonal-conjugate of the X taps,
    /// which forces the Y output onto the other source.
    fn orthogonalize_y(&mut self) {
        let l = self.n_taps();
        let rev = |v: &Vec<C64>| (0..l).map(|i| v[l - 1 - i].conj()).collect::<Vec<_>>();
        let (hxx, hxy) = (self.h[0][0].clone(), self.h[0][1].clone());
        self.h[1][0] = rev(&hxy).into_iter().map(|v| -v).collect();
        self.h[1][1] = rev(&hxx);
    }
}

#[derive(Debug, Clone)]
pub struct EqOutput {
    pub streams: [Vec<C64>; 2],
    pub taps: Butterfly,
    pub converged: bool,
    /// Mean constant-modulus cost over the final pass.
    pub cm_cost: f64,
    pub reinitialized: bool,
}

struct Cma<'a> {
    input: [&'a [C64]; 2],
    mu: f64,
}

impl Cma<'_> {
    fn output(&self, taps: &Butterfly, k: usize, window: &mut [[C64; 2]]) -> [C64; 2] {
        let n = self.input[0].len();
        let l = taps.n_taps();
        let centre = 2 * k + n;
        for (i, w) in window.iter_mut().enumerate() {
            let idx = (centre + l / 2 - i) % n;
            *w = [self.input[0][idx], self.input[1][idx]];
        }
        let mut out = [C64::new(0.0, 0.0); 2];
        for (o, row) in out.iter_mut().zip(&taps.h) {
            for (i, w) in window.iter().enumerate() {
                *o += row[0][i] * w[0] + row[1][i] * w[1];
            }
        }
        out
    }

    /// One adaptive pass over `symbols` output symbols starting at `start`
    /// (circular). Returns the outputs and the mean CM cost.
    fn pass(&self, taps: &mut Butterfly, start: usize, symbols: usize, adapt: bool) -> ([Vec<C64>; 2], f64) {
        let n_sym = self.input[0].len() / 2;
        let mut window = vec![[C64::new(0.0, 0.0); 2]; taps.n_taps()];
        let mut outs = [Vec::with_capacity(symbols), Vec::with_capacity(symbols)];
        let mut cost = 0.0;
        for j in 0..symbols {
            let k = (start + j) % n_sym;
            let y = self.output(taps, k, &mut window);
            for p in 0..2 {
                let r = 1.0 - y[p].norm_sqr();
                cost += r * r;
                if adapt {
                    let e = y[p] * (self.mu * r);
                    for (i, w) in window.iter().enumerate() {
                        taps.h[p][0][i] += e * w[0].conj();
                        taps.h[p][1][i] += e * w[1].conj();
                    }
                }
                outs[p].push(y[p]);
            }
        }
        (outs, cost / (2 * symbols.max(1)) as f64)
    }
}

/// Largest normalized cross-correlation magnitude between two streams over
/// lags `−max_lag..=max_lag` (circular).
fn max_cross_correlation(a: &[C64], b: &[C64], max_lag: usize) -> f64 {
    let n = a.len();
    let pa: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    let pb: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    if pa == 0.0 || pb == 0.0 {
        return 0.0;
    }
    let mut best: f64 = 0.0;
    for lag in 0..=2 * max_lag {
        let d = (n + lag - max_lag) % n;
        let c: C64 = (0..n).map(|k| a[k] * b[(k + d) % n].conj()).sum();
        best = best.max(c.norm() / (pa * pb).sqrt());
    }
    best
}

/// Blind CMA butterfly equalizer. Inputs are two streams at two samples per
/// symbol; outputs are one sample per symbol. The taps are trained on
/// `training_symbols` symbols and then adaptation continues over the whole
/// stream, whose outputs are returned.
pub fn adaptive_eq_2x2(
    x: &[C64],
    y: &[C64],
    n_taps: usize,
    step_size: f64,
    training_symbols: usize,
) -> Result<EqOutput> {
    if n_taps % 2 == 0 || n_taps == 0 {
        return Err(Error::invalid(format!("equalizer taps must be odd, got {n_taps}")));
    }
    if x.len() != y.len() || x.len() % 2 != 0 || x.len() < 2 * n_taps {
        return Err(Error::invalid("equalizer needs equal-length 2-sample/symbol streams"));
    }
    if !(step_size > 0.0) {
        return Err(Error::invalid("equalizer step size must be positive"));
    }
    let cma = Cma {
        input: [x, y],
        mu: step_size,
    };
    let n_sym = x.len() / 2;
    let train = training_symbols.max(1);
    let mut taps = Butterfly::identity(n_taps);
    let (trained, _) = cma.pass(&mut taps, 0, train, true);
    let check = train.min(n_sym).min(4096);
    let tail = |v: &Vec<C64>| v[v.len() - check..].to_vec();
    let mut reinitialized = false;
    if max_cross_correlation(&tail(&trained[0]), &tail(&trained[1]), n_taps) > 0.9 {
        taps.orthogonalize_y();
        cma.pass(&mut taps, 0, train, true);
        reinitialized = true;
    }
    let (streams, cm_cost) = cma.pass(&mut taps, 0, n_sym, true);
    Ok(EqOutput {
        streams,
        taps,
        converged: cm_cost < 0.5,
        cm_cost,
        reinitialized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rxdsp::frontend::{matched_filter_2sps, normalize_joint};
    use crate::sigcore::{Rng, Signal};
    use crate::txchain::{qpsk_map, rrc_shape};

    const RS: f64 = 31.379e9;

    fn dp_signal(n: usize, seed: u64) -> (Signal, [Vec<C64>; 2]) {
        let mut rng = Rng::new(seed, 0);
        let syms: Vec<Vec<C64>> = (0..2)
            .map(|_| qpsk_map(&(0..2 * n).map(|_| rng.bit()).collect::<Vec<_>>()).unwrap())
            .collect();
        let pols = syms
            .iter()
            .map(|s| rrc_shape(s, 4, 0.2, RS).unwrap().into_pols().swap_remove(0))
            .collect();
        (Signal::new(pols, 4.0 * RS, 0.0).unwrap(), [syms[0].clone(), syms[1].clone()])
    }

    fn mix(s: &Signal, m: [[C64; 2]; 2]) -> Signal {
        let (a, b) = (s.pol(0), s.pol(1));
        let x = a.iter().zip(b).map(|(p, q)| m[0][0] * p + m[0][1] * q).collect();
        let y = a.iter().zip(b).map(|(p, q)| m[1][0] * p + m[1][1] * q).collect();
        s.with_samples(vec![x, y]).unwrap()
    }

    fn run(s: &Signal) -> EqOutput {
        let mut st = matched_filter_2sps(s, 4, 0.2, RS).unwrap();
        normalize_joint(&mut st);
        adaptive_eq_2x2(&st[0], &st[1], 15, 1e-3, 20_000).unwrap()
    }

    fn best_evm(out: &[C64], tx: &[C64]) -> f64 {
        // ignore the common phase; evm against the transmitted symbols
        let skip = out.len() / 4;
        let c: C64 = out[skip..].iter().zip(&tx[skip..]).map(|(o, t)| o * t.conj()).sum();
        let g = c / tx[skip..].iter().map(|t| t.norm_sqr()).sum::<f64>();
        let e: f64 = out[skip..].iter().zip(&tx[skip..]).map(|(o, t)| (o - t * g).norm_sqr()).sum();
        (e / tx[skip..].len() as f64).sqrt() / g.norm()
    }

    #[test]
    fn undoes_rotation() {
        let (s, tx) = dp_signal(16_384, 1);
        let (c, sn) = (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);
        let rotated = mix(&s, [[C64::new(c, 0.0), C64::new(-sn, 0.0)], [C64::new(sn, 0.0), C64::new(c, 0.0)]]);
        let out = run(&rotated);
        assert!(out.converged);
        let e0 = best_evm(&out.streams[0], &tx[0]).min(best_evm(&out.streams[0], &tx[1]));
        let e1 = best_evm(&out.streams[1], &tx[0]).min(best_evm(&out.streams[1], &tx[1]));
        assert!(e0 < 0.05 && e1 < 0.05, "{e0} {e1}");
    }

    #[test]
    fn identity_channel_keeps_centre_tap() {
        let (s, _) = dp_signal(8192, 2);
        let out = run(&s);
        for p in 0..2 {
            let row = &out.taps.h[p];
            let total: f64 = row.iter().flatten().map(|v| v.norm_sqr()).sum();
            let centre = row[p][7].norm_sqr();
            assert!((total - centre) / total < 0.01, "{}", (total - centre) / total);
        }
    }

    #[test]
    fn suppresses_crosstalk() {
        let (s, tx) = dp_signal(16_384, 3);
        let c = 10f64.powf(-15.0 / 20.0);
        let leaky = mix(&s, [[C64::new(1.0, 0.0), C64::new(c, 0.0)], [C64::new(c, 0.0), C64::new(1.0, 0.0)]]);
        let out = run(&leaky);
        let skip = 4096;
        for p in 0..2 {
            // regress the output on both transmitted streams
            let own: C64 = out.streams[p][skip..].iter().zip(&tx[p][skip..]).map(|(o, t)| o * t.conj()).sum();
            let other: C64 = out.streams[p][skip..].iter().zip(&tx[1 - p][skip..]).map(|(o, t)| o * t.conj()).sum();
            let ratio = 20.0 * (other.norm() / own.norm()).log10();
            assert!(ratio <= -20.0, "{ratio}");
        }
    }

    #[test]
    fn rejects_even_taps() {
        let v = vec![C64::new(1.0, 0.0); 64];
        assert!(adaptive_eq_2x2(&v, &v, 14, 1e-3, 10).is_err());
    }
}
