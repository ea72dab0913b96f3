//! Signal file round trips.

use cpgp::io::{read_signal_csv, resolve_fs, write_sidecar, write_signal_csv};
use cpgp_core::signals::{add_noise, synthesize, NoiseSpec, SyntheticSpec};
use cpgp_core::Signal;
use proptest::prelude::*;

#[test]
fn write_then_read_is_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let clean = synthesize(&SyntheticSpec::default().with_length(500.0)).unwrap();
    let noisy = add_noise(&clean, &NoiseSpec { snr_db: -3.0, seed: 8 }).unwrap();
    write_signal_csv(&path, &noisy).unwrap();
    write_sidecar(&path, 1.0).unwrap();
    let fs = resolve_fs(&path, None).unwrap();
    let back = read_signal_csv(&path, fs).unwrap();
    assert_eq!(back.len(), noisy.len());
    for (a, b) in back.values().iter().zip(noisy.values()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert_eq!(resolve_fs(&path, Some(4.0)).unwrap(), 4.0);
}

#[test]
fn header_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let with = dir.path().join("with.csv");
    let without = dir.path().join("without.csv");
    std::fs::write(&with, "value\n0.5\n-1.25\n3\n").unwrap();
    std::fs::write(&without, "0.5\n-1.25\n3\n").unwrap();
    let a = read_signal_csv(&with, 2.0).unwrap();
    let b = read_signal_csv(&without, 2.0).unwrap();
    assert_eq!(a, b);
}

#[test]
fn empty_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(&path, "").unwrap();
    assert_eq!(read_signal_csv(&path, 1.0).unwrap_err().code(), 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn arbitrary_finite_values_round_trip(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 2..50)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let sig = Signal::new(values.clone(), 1.0).unwrap();
        write_signal_csv(&path, &sig).unwrap();
        let back = read_signal_csv(&path, 1.0).unwrap();
        for (a, b) in back.values().iter().zip(&values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
