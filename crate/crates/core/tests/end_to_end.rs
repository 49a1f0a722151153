use std::path::PathBuf;

use thzlink::harness::{run_link, Mode, Scenario};
use thzlink::Error;

fn transparent() -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/transparent.json");
    let mut sc = Scenario::load(path).unwrap();
    sc.n_symbols = 1 << 14;
    sc.dsp.eq_training_symbols = 8192;
    sc.dsp.foe_fft_size = 16384;
    sc
}

#[test]
fn transparent_link_is_error_free() {
    let r = run_link(&transparent()).unwrap();
    assert_eq!(r.channels.len(), 2);
    for c in &r.channels {
        assert_eq!(c.errors, 0, "{}", c.label);
        assert!(c.pre_fec_pass);
        assert_eq!(c.net_rate_gbps, 103.125);
        assert!(c.low_confidence);
        assert!(c.osnr_db.is_infinite());
    }
}

#[test]
fn single_mode_reports_one_channel() {
    let mut sc = transparent();
    sc.mode = Mode::Single;
    let r = run_link(&sc).unwrap();
    assert_eq!(r.channels.len(), 1);
    assert!(r.ledger.iter().all(|e| !e.stage.starts_with("ch2")));
    assert!(r.ledger.iter().any(|e| e.stage == "ch1.mzm"));
}

#[test]
fn receiver_laser_offset_is_estimated_and_removed() {
    let mut sc = transparent();
    sc.mode = Mode::Single;
    sc.rx.laser_offset_hz = 200e6;
    let r = run_link(&sc).unwrap();
    let c = &r.channels[0];
    // the receiver laser sits above the carrier, so the residual offset is negative
    assert!((c.freq_offset_hz + 200e6).abs() < 2e6, "{}", c.freq_offset_hz);
    assert_eq!(c.errors, 0);
}

#[test]
fn wrong_sideband_is_recovered_by_conjugation() {
    let mut sc = transparent();
    sc.mode = Mode::Single;
    sc.allow_odd_parity = true;
    sc.to.sideband[0] = thzlink::thz_to::Sideband::Lower;
    sc.to.tof[0].center_freq_hz = 193.5e12;
    let raw = run_link(&sc).unwrap();
    assert!((raw.channels[0].ber - 0.5).abs() < 0.02, "{}", raw.channels[0].ber);
    sc.dsp.conjugate_input = true;
    let fixed = run_link(&sc).unwrap();
    assert_eq!(fixed.channels[0].errors, 0);
}

#[test]
fn heavy_wireless_noise_fails_the_threshold() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/paper_default.json");
    let mut sc = Scenario::load(path).unwrap();
    sc.n_symbols = 1 << 15;
    sc.wireless.noise_psd_w_per_hz *= 4.0;
    let r = run_link(&sc).unwrap();
    for c in &r.channels {
        assert!(c.osnr_db < 10.0, "{} {}", c.label, c.osnr_db);
        assert!(!c.pre_fec_pass);
        assert_eq!(c.net_rate_gbps, 0.0);
    }
}

#[test]
fn ledger_tracks_paper_power_levels() {
    let r = run_link(&transparent()).unwrap();
    let p = |name: &str| r.ledger.iter().find(|e| e.stage == name).unwrap().power_dbm;
    assert!((p("ch1.tx") - 3.0).abs() < 0.05);
    assert!((p("ot.signal_amp") - 10.6).abs() < 0.05);
    assert!((p("ot.aipm_x") - 13.1).abs() < 0.05);
    assert!((p("ch1.fiber1") - (3.0 - 4.0)).abs() < 0.05);
}

#[test]
fn stage_errors_carry_the_stage_name() {
    let mut sc = transparent();
    sc.voa.target_rop_dbm = Some(30.0);
    let err = run_link(&sc).unwrap_err();
    assert!(matches!(&err, Error::Stage { stage, .. } if stage == "voa"), "{err}");
}

#[test]
fn reruns_are_identical() {
    let mut sc = Scenario::default();
    sc.n_symbols = 1 << 13;
    sc.dsp.eq_training_symbols = 4096;
    sc.dsp.foe_fft_size = 8192;
    let a = run_link(&sc).unwrap();
    let b = run_link(&sc).unwrap();
    assert_eq!(a, b);
}
