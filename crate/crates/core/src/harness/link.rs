use rayon::prelude::*;
use serde::Serialize;

use super::plan::{channel_label, plan_frequencies, FrequencyPlan};
use super::scenario::{Mode, Scenario};
use crate::error::{Error, Result, StageContext};
use crate::fiberchan::{edfa, ssmf_propagate, voa, AmpSpec, FiberSpec};
use crate::rxdsp::{coherent_rx, measure_osnr_ledger, recover, ber_from_counts, Reference};
use crate::sigcore::{Rng, Signal};
use crate::thz_ot::{couple, laser_field, photomix, polarization_sensitivity_loss, LoLaserSpec};
use crate::thz_to::{dp_mzm_ocs_at, lna, mix_down, ocs_operating_point, sideband_select, OcsOperatingPoint};
use crate::thz_wireless::{propagate_mimo, WirelessSpec};
use crate::txchain::{dp_qpsk_tx, gen_dp_bits, qpsk_map};
use crate::units::{lin_to_db, watt_to_dbm};

// Rng stream ids; channel-indexed stages add the channel index.
const S_BITS: u64 = 10;
const S_TX_PHASE: u64 = 20;
const S_SIGNAL_AMP: u64 = 30;
const S_LO: u64 = 31;
const S_AIPM_AMP: u64 = 32;
const S_WIRELESS: u64 = 33;
const S_MIXER: u64 = 40;
const S_LNA: u64 = 50;
const S_REMOD: u64 = 60;
const S_PREAMP: u64 = 70;
const S_RX_LO: u64 = 80;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub stage: String,
    pub power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub label: String,
    pub ber: f64,
    pub errors: usize,
    pub bits: usize,
    pub q_factor_db: f64,
    pub pre_fec_pass: bool,
    pub net_rate_gbps: f64,
    pub low_confidence: bool,
    pub osnr_db: f64,
    pub rop_dbm: f64,
    pub eq_converged: bool,
    pub freq_offset_hz: f64,
    /// Set when the receiver could not lock; the channel then counts as failed.
    pub dsp_failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkReport {
    pub scenario: String,
    pub seed: u64,
    pub mode: Mode,
    pub plan: FrequencyPlan,
    pub channels: Vec<ChannelReport>,
    pub ledger: Vec<LedgerEntry>,
}

/// Gain and level settings fixed by the noisy run and replayed by its
/// noise-free twin, so the two differ only by the injected noise.
#[derive(Debug, Clone, Default)]
struct OperatingPoint {
    aipm_gain_db: f64,
    aipm_scale: f64,
    ocs: Vec<OcsOperatingPoint>,
    voa_db: Vec<f64>,
}

struct AtReceiver {
    index: usize,
    optical: Signal,
    rop_dbm: f64,
}

struct Chain<'a> {
    sc: &'a Scenario,
    noisy: bool,
    ledger: Vec<LedgerEntry>,
}

impl Chain<'_> {
    fn rng(&self, stream: u64) -> Rng {
        Rng::new(self.sc.seed, stream)
    }

    fn nf(&self, nf: Option<f64>) -> Option<f64> {
        if self.noisy {
            nf
        } else {
            None
        }
    }

    fn log(&mut self, stage: impl Into<String>, power_w: f64) {
        self.ledger.push(LedgerEntry {
            stage: stage.into(),
            power_dbm: watt_to_dbm(power_w),
        });
    }

    fn amp(&self, a: &AmpSpec) -> AmpSpec {
        AmpSpec {
            noise_figure_db: self.nf(a.noise_figure_db),
            ..a.clone()
        }
    }

    fn run(&mut self, plan: &FrequencyPlan, fixed: Option<&OperatingPoint>) -> Result<(Vec<AtReceiver>, OperatingPoint)> {
        let sc = self.sc;
        let active = sc.active_channels();
        let mut op = OperatingPoint::default();

        let mut launched = Vec::new();
        for &k in &active {
            let label = channel_label(k);
            let cfg = sc.tx_config(k);
            let bits = gen_dp_bits(2 * sc.n_symbols, &self.rng(S_BITS + k as u64)).stage("tx")?;
            let tx = dp_qpsk_tx(&cfg, &bits, &mut self.rng(S_TX_PHASE + k as u64)).stage("tx")?;
            self.log(format!("{label}.tx"), tx.power_w());
            let f1 = ssmf_propagate(&tx, &sc.fiber1).stage("fiber1")?;
            self.log(format!("{label}.fiber1"), f1.power_w());
            launched.push(f1);
        }
        let fs = launched[0].sample_rate_hz();
        let n = launched[0].len();

        let signal_amp = self.amp(&sc.ot.signal_amp);
        let amplified = crate::fiberchan::edfa_ensemble(&launched, &signal_amp, &mut self.rng(S_SIGNAL_AMP))
            .stage("ot.signal_amp")?;
        self.log("ot.signal_amp", amplified.iter().map(Signal::power_w).sum());

        let lo_spec = &sc.ot.lo;
        let lo = laser_field(
            lo_spec.freq_hz,
            lo_spec.power_dbm,
            lo_spec.linewidth_hz,
            sc.ot.lo_pol_angle_rad,
            n,
            fs,
            &mut self.rng(S_LO),
        )
        .stage("ot.lo")?;
        self.log("ot.lo", lo.power_w());
        let coupled = couple(&amplified, &lo, sc.ot.coupler_loss_db).stage("ot.coupler")?;
        self.log("ot.coupler", coupled.total_power_w());

        // the amplifier output is split over the two AIPMs by the PBS
        let target_w = 2.0 * crate::units::dbm_to_watt(sc.ot.aipm_input_power_dbm);
        let (gain_db, scale) = match fixed {
            Some(f) => (f.aipm_gain_db, f.aipm_scale),
            None => {
                let input = coupled.total_power_w();
                if target_w >= input {
                    (lin_to_db(target_w / input), 1.0)
                } else {
                    (0.0, (target_w / input).sqrt())
                }
            }
        };
        op.aipm_gain_db = gain_db;
        op.aipm_scale = scale;
        let aipm_amp = AmpSpec::fixed_gain(gain_db, self.nf(sc.ot.aipm_amp_noise_figure_db));
        let boosted = coupled
            .amplify(&aipm_amp, &mut self.rng(S_AIPM_AMP))
            .stage("ot.aipm_amp")?
            .scale(scale);
        self.log("ot.aipm_amp", boosted.total_power_w());

        let (bx, by) = boosted.pbs_split().stage("ot.pbs")?;
        let bx = polarization_sensitivity_loss(&bx, sc.ot.pc_misalignment_rad).stage("ot.pc")?;
        let by = polarization_sensitivity_loss(&by, sc.ot.pc_misalignment_rad).stage("ot.pc")?;
        self.log("ot.aipm_x", bx.total_power_w());
        self.log("ot.aipm_y", by.total_power_w());
        let thz_x = photomix(&bx, &sc.ot.pd).stage("ot.photomix")?;
        let thz_y = photomix(&by, &sc.ot.pd).stage("ot.photomix")?;
        for (j, &k) in active.iter().enumerate() {
            let label = channel_label(k);
            self.log(format!("{label}.thz_x"), thz_x[j].power_w());
            self.log(format!("{label}.thz_y"), thz_y[j].power_w());
        }

        let wireless = WirelessSpec {
            noise_psd_w_per_hz: if self.noisy { sc.wireless.noise_psd_w_per_hz } else { 0.0 },
            ..sc.wireless.clone()
        };
        let (wx, wy) = propagate_mimo(&thz_x, &thz_y, &wireless, &mut self.rng(S_WIRELESS)).stage("wireless")?;

        let mut out = Vec::new();
        for (j, &k) in active.iter().enumerate() {
            let label = channel_label(k);
            let kk = k as u64;
            self.log(format!("{label}.wireless_x"), wx[j].power_w());
            self.log(format!("{label}.wireless_y"), wy[j].power_w());
            let mixer = &sc.to.mixers[k];
            // X and Y receivers share one multiplied LO
            let mx = mix_down(&wx[j], mixer, &mut self.rng(S_MIXER + kk)).stage("to.mixer")?;
            let my = mix_down(&wy[j], mixer, &mut self.rng(S_MIXER + kk)).stage("to.mixer")?;
            let lna_nf = self.nf(sc.to.lna_noise_figure_db);
            let ix = lna(&mx.signal, sc.to.lna_gain_db, lna_nf, &mut self.rng(S_LNA + 2 * kk)).stage("to.lna")?;
            let iy = lna(&my.signal, sc.to.lna_gain_db, lna_nf, &mut self.rng(S_LNA + 2 * kk + 1)).stage("to.lna")?;
            self.log(format!("{label}.if_x"), ix.power_w());
            self.log(format!("{label}.if_y"), iy.power_w());

            let ocs = match fixed {
                Some(f) => f.ocs[j],
                None => ocs_operating_point(&ix, &iy, &sc.to.mzm).stage("to.mzm")?,
            };
            op.ocs.push(ocs);
            let remod = dp_mzm_ocs_at(&ix, &iy, &ocs, &sc.to.laser, &sc.to.mzm, &mut self.rng(S_REMOD + kk))
                .stage("to.mzm")?;
            self.log(format!("{label}.mzm"), remod.power_w());
            let selected =
                sideband_select(&remod, sc.to.sideband[k], plan.channels[j].if_hz, &sc.to.tof[k]).stage("to.tof")?;
            self.log(format!("{label}.tof"), selected.power_w());
            let f2 = ssmf_propagate(&selected, &sc.fiber2).stage("fiber2")?;
            self.log(format!("{label}.fiber2"), f2.power_w());

            let att = match (fixed, sc.voa.target_rop_dbm) {
                (Some(f), _) => f.voa_db[j],
                (None, Some(target)) => {
                    let avail = watt_to_dbm(f2.power_w());
                    if target > avail {
                        return Err(Error::invalid(format!(
                            "target ROP {target:.2} dBm above available {avail:.2} dBm"
                        )))
                        .stage("voa");
                    }
                    avail - target
                }
                (None, None) => sc.voa.attenuation_db,
            };
            op.voa_db.push(att);
            let received = voa(&f2, att).stage("voa")?;
            let rop_dbm = watt_to_dbm(received.power_w());
            self.log(format!("{label}.rop"), received.power_w());
            let optical = match &sc.rx.preamp {
                Some(a) => edfa(&received, &self.amp(a), &mut self.rng(S_PREAMP + kk)).stage("rx.preamp")?,
                None => received,
            };
            self.log(format!("{label}.preamp"), optical.power_w());
            out.push(AtReceiver {
                index: k,
                optical,
                rop_dbm,
            });
        }
        Ok((out, op))
    }
}

/// Spans to compensate in the receiver, with a span's dispersion sign flipped
/// when an odd number of spectral inversions follows it.
pub fn compensation_spans(sc: &Scenario, path_inversions: u32) -> Vec<FiberSpec> {
    let conj = u32::from(sc.dsp.conjugate_input);
    let orient = |f: &FiberSpec, after: u32| if after % 2 == 1 { f.inverted() } else { f.clone() };
    vec![orient(&sc.fiber1, path_inversions + conj), orient(&sc.fiber2, conj)]
}

fn reference(sc: &Scenario, k: usize) -> Result<Reference> {
    let bits = gen_dp_bits(2 * sc.n_symbols, &Rng::new(sc.seed, S_BITS + k as u64))?;
    let b = [bits.pol(0).to_vec(), bits.pol(1).to_vec()];
    Ok(Reference {
        symbols: [qpsk_map(&b[0])?, qpsk_map(&b[1])?],
        bits: b,
    })
}

fn receive(sc: &Scenario, plan: &FrequencyPlan, j: usize, noisy: &AtReceiver, clean: &AtReceiver) -> Result<ChannelReport> {
    let k = noisy.index;
    let label = channel_label(k);
    let osnr_db = measure_osnr_ledger(&noisy.optical, &clean.optical).stage("rx.osnr")?;
    let laser = LoLaserSpec {
        freq_hz: noisy.optical.center_freq_hz() + sc.rx.laser_offset_hz,
        power_dbm: 0.0,
        linewidth_hz: sc.rx.laser_linewidth_hz,
    };
    let rs = sc.tx.symbol_rate_baud;
    let base = coherent_rx(&noisy.optical, &laser, rs, &mut Rng::new(sc.seed, S_RX_LO + k as u64)).stage("rx.coherent")?;
    let spans = compensation_spans(sc, plan.channels[j].inversions);
    let outcome = recover(&base, &spans, sc.samples_per_symbol, sc.tx.rolloff, rs, &reference(sc, k)?, &sc.dsp);
    let report = |ber: crate::rxdsp::BerResult, converged: bool, foe: f64, failure: Option<String>| ChannelReport {
        label: label.clone(),
        ber: ber.ber,
        errors: ber.errors,
        bits: ber.bits,
        q_factor_db: ber.q_factor_db,
        pre_fec_pass: ber.pre_fec_pass && failure.is_none(),
        net_rate_gbps: if failure.is_none() { ber.net_rate_gbps } else { 0.0 },
        low_confidence: ber.low_confidence,
        osnr_db,
        rop_dbm: noisy.rop_dbm,
        eq_converged: converged,
        freq_offset_hz: foe,
        dsp_failure: failure,
    };
    match outcome {
        Ok(o) => Ok(report(o.ber, o.eq_converged, o.freq_offset_hz, None)),
        Err(e @ (Error::Estimation(_) | Error::Alignment(_))) => {
            let bits = 4 * (sc.n_symbols - 2 * sc.dsp.edge_guard_symbols);
            Ok(report(ber_from_counts(bits / 2, bits)?, false, f64::NAN, Some(e.to_string())))
        }
        Err(e) => Err(e).stage("rx.dsp"),
    }
}

/// Execute the whole chain for every active channel. A noise-free twin of the
/// run provides the exact noise ledger for the OSNR figure.
pub fn run_link(sc: &Scenario) -> Result<LinkReport> {
    let plan = plan_frequencies(sc)?;
    let mut noisy_chain = Chain {
        sc,
        noisy: true,
        ledger: Vec::new(),
    };
    let (noisy, op) = noisy_chain.run(&plan, None)?;
    let mut clean_chain = Chain {
        sc,
        noisy: false,
        ledger: Vec::new(),
    };
    let (clean, _) = clean_chain.run(&plan, Some(&op))?;
    let channels = noisy
        .par_iter()
        .zip(clean.par_iter())
        .enumerate()
        .map(|(j, (n, c))| receive(sc, &plan, j, n, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(LinkReport {
        scenario: sc.name.clone(),
        seed: sc.seed,
        mode: sc.mode,
        plan,
        channels,
        ledger: noisy_chain.ledger,
    })
}
