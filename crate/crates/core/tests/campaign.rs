use std::time::Instant;

use otalink::campaign::{
    emit_csv, ingest_csv, run_sweep, summarize, ChannelModel, GroupKey, RowStatus, SweepConfig,
    SweepRow, SweepVariable,
};
use otalink::seed;
use otalink::waveform::ConstellationOrder;
use rand_distr::{Distribution, Normal};

fn synthetic_rows(n: usize) -> Vec<SweepRow> {
    let mut rng = seed::rng(77);
    let d = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|i| {
            let x = d.sample(&mut rng);
            SweepRow {
                sweep_value: (i % 7) as f64 * 5.0,
                repeat_index: (i / 7) as u32,
                subframe_index: (i % 3) as u32,
                order: [4, 16, 64, 256][i % 4],
                status: if i % 97 == 0 {
                    RowStatus::SkippedInfeasible
                } else {
                    RowStatus::Ok
                },
                channel_power_signal: 1e-3 * (1.0 + 0.01 * x),
                channel_power_interference: x.abs() * 1e-7,
                channel_power_noise: 1e-12 / (i + 1) as f64,
                sinr_db: 10.0 + x,
                evm_rms_pct: x * x * 1e-3,
                normalized_evm_rms_pct: 30.0 + 3.0 * x,
                mag_err_rms_pct: std::f64::consts::E * x,
                phase_err_rms_rad: x / 3.0,
            }
        })
        .collect()
}

#[test]
fn million_row_round_trip_is_lossless_and_fast() {
    let rows = synthetic_rows(1_000_000);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let t = Instant::now();
    emit_csv(&rows, &path).unwrap();
    let back = ingest_csv(&path).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    assert_eq!(back.len(), rows.len());
    assert!(back.iter().zip(&rows).all(|(a, b)| a.same_bits(b)));
    assert!(elapsed < 10.0, "round trip took {elapsed:.2} s");
}

#[test]
fn summary_std_matches_population() {
    let mut rng = seed::rng(5);
    let sigma = 2.5;
    let d = Normal::new(40.0, sigma).unwrap();
    let rows: Vec<SweepRow> = (0..4000)
        .map(|i| {
            let mut r = synthetic_rows(1).remove(0);
            r.sweep_value = (i % 4) as f64;
            r.status = RowStatus::Ok;
            r.normalized_evm_rms_pct = d.sample(&mut rng);
            r
        })
        .collect();
    let s = summarize(&rows, &[GroupKey::SweepValue]).unwrap();
    assert_eq!(s.len(), 4);
    for g in &s {
        assert_eq!(g.n, 1000);
        let e = g.metric("normalized_evm_rms_pct").unwrap();
        assert!((e.std / sigma - 1.0).abs() < 0.05, "std {}", e.std);
        assert_eq!(e.expanded_k2, 2.0 * e.std);
    }
}

fn small_sweep() -> SweepConfig {
    let mut cfg = SweepConfig::single(SweepVariable::TargetSinrDb, 0.0);
    cfg.stop = 20.0;
    cfg.step = 10.0;
    cfg.repeats = 3;
    cfg.subframes = 2;
    cfg.modulation_orders = vec![ConstellationOrder::Qpsk, ConstellationOrder::Qam16];
    cfg.master_seed = 11;
    cfg
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let cfg = small_sweep();
    let a = run_sweep(&cfg, true).unwrap();
    let b = run_sweep(&cfg, false).unwrap();
    assert_eq!(a.rows.len(), 3 * 3 * 2 * 2);
    assert!(a.rows.iter().zip(&b.rows).all(|(x, y)| x.same_bits(y)));
    let keys: Vec<(f64, u32, u32, u32)> = a
        .rows
        .iter()
        .map(|r| (r.sweep_value, r.repeat_index, r.order, r.subframe_index))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(keys, sorted);

    let mut other = cfg.clone();
    other.master_seed = 12;
    let c = run_sweep(&other, true).unwrap();
    assert!(!a.rows.iter().zip(&c.rows).all(|(x, y)| x.same_bits(y)));
}

#[test]
fn config_survives_toml_round_trip() {
    let cfg = small_sweep();
    let back = SweepConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn infeasible_points_are_counted_as_skipped() {
    let mut cfg = small_sweep();
    // Noise alone caps the SINR near 15 dB, so the 20 dB point cannot be reached.
    cfg.noise_power_dbm = Some(-15.0);
    cfg.channel = ChannelModel::Fixed {
        h11: [1.0, 0.0],
        h12: [0.0, 0.0],
    };
    cfg.modulation_orders = vec![ConstellationOrder::Qpsk];
    let out = run_sweep(&cfg, true).unwrap();
    assert_eq!(out.n_ok + out.n_skipped, out.rows.len());
    let skipped: Vec<&SweepRow> = out.rows.iter().filter(|r| !r.status.is_ok()).collect();
    assert!(!skipped.is_empty());
    assert!(out.n_ok > 0);
    for r in skipped {
        assert_eq!(r.status, RowStatus::SkippedInfeasible);
        assert_eq!(r.sweep_value, 20.0);
        assert!(r.normalized_evm_rms_pct.is_nan());
    }
}
